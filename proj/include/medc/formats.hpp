#pragma once

#include "medc/expression.hpp"
#include "medc/jsonio.hpp"

#include <map>
#include <regex>
#include <string>
#include <vector>

namespace medc {

// composite value = parts glued by a literal template, e.g.
//   DateUS/date_us: template "{#Month}-{#Day}-{#Year}", parts (\d{2}) (\d{2}) (\d{4})
struct FormatDecomposition {
    struct Part {
        std::string concept_id;
        std::string pattern; // one capture group, dialect-checked
    };

    std::string concept_id; // composite concept
    std::string format;  // composite format id
    std::vector<Part> parts;
    std::string template_text;

    // built at load: anchored full-value regex and part order by capture index
    std::string composite_pattern;
    std::vector<std::string> capture_order;
    std::regex composite_re;
};

// rejects constructs outside the dialect: alternation, backreferences,
// non-capturing groups, more or fewer than `groups` capture groups
void validate_pattern(const std::string& pattern, int groups, const std::string& context);

// validates parts/template and builds the composite regex
FormatDecomposition make_decomposition(std::string concept_id, std::string format,
                                       std::vector<FormatDecomposition::Part> parts,
                                       std::string template_text);

FormatDecomposition decomposition_from_json(const json& j, const std::string& context);
json decomposition_to_json(const FormatDecomposition& d);

class FormatDatabase {
public:
    static FormatDatabase parse(const std::string& document);
    static FormatDatabase load_file(const std::string& path);

    const std::vector<FormatDecomposition>& decompositions() const { return decomps_; }
    bool has_format(const std::string& format) const;
    const FormatDecomposition* find(const std::string& concept_id, const std::string& format) const;
    std::vector<const FormatDecomposition*> for_concept(const std::string& concept_id) const;

private:
    std::vector<FormatDecomposition> decomps_;
};

// part concept -> captured value
std::map<std::string, std::string> parse_value(const FormatDecomposition& d, const std::string& value);
std::string assemble_value(const FormatDecomposition& d, const std::map<std::string, std::string>& parts);

struct UnitConversion {
    std::string from_unit;
    std::string to_unit;
    std::string expression_text;
    Expression expression;
};

class UnitDatabase {
public:
    static UnitDatabase parse(const std::string& document);
    static UnitDatabase load_file(const std::string& path);

    const std::vector<UnitConversion>& conversions() const { return conversions_; }
    const UnitConversion* find(const std::string& from, const std::string& to) const;

    // direct entry, or an algebraically inverted linear reverse entry;
    // throws NoConversionError when neither exists
    Expression derive(const std::string& from, const std::string& to) const;
    bool has_conversion(const std::string& from, const std::string& to) const;

private:
    std::vector<UnitConversion> conversions_;
};

class LookupTables {
public:
    static LookupTables parse(const std::string& document);
    static LookupTables load_file(const std::string& path);

    bool has_table(const std::string& id) const;
    const std::map<std::string, std::string>& table(const std::string& id) const;
    std::string apply(const std::string& id, const std::string& value) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, std::map<std::string, std::string>> tables_;
};

} // namespace medc
