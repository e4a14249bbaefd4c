#pragma once

#include <stdexcept>
#include <string>

namespace medc {

// Base class for all recoverable errors. The CLI maps any Error to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MEDC_DEFINE_ERROR(NAME)                                   \
    class NAME : public Error {                                   \
    public:                                                       \
        explicit NAME(const std::string& msg) : Error(msg) {}     \
    }

MEDC_DEFINE_ERROR(ParseError);
MEDC_DEFINE_ERROR(StructureError);
MEDC_DEFINE_ERROR(CycleError);
MEDC_DEFINE_ERROR(UnknownConceptError);
MEDC_DEFINE_ERROR(DuplicateIdError);
MEDC_DEFINE_ERROR(ConfigError);
MEDC_DEFINE_ERROR(PersistenceError);
MEDC_DEFINE_ERROR(UnknownFormatError);
MEDC_DEFINE_ERROR(NoConversionError);
MEDC_DEFINE_ERROR(ExpressionSyntaxError);
MEDC_DEFINE_ERROR(DivisionByZeroError);
MEDC_DEFINE_ERROR(MissingTagError);
MEDC_DEFINE_ERROR(LookupMissError);
MEDC_DEFINE_ERROR(UnsupportedPatternError);
MEDC_DEFINE_ERROR(MissingSpecError);
MEDC_DEFINE_ERROR(PlanMismatchError);
MEDC_DEFINE_ERROR(SerializationError);
MEDC_DEFINE_ERROR(ValidationError);
MEDC_DEFINE_ERROR(MessageConflictError);
MEDC_DEFINE_ERROR(MissingMockError);
MEDC_DEFINE_ERROR(PromptRequiredError); // human task reached without prompt values

#undef MEDC_DEFINE_ERROR

} // namespace medc
