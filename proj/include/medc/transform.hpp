#pragma once

#include "medc/formats.hpp"
#include "medc/ontology.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"
#include "medc/textsim.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medc {

// flat tag -> value document
struct Message {
    std::map<std::string, std::string> values;

    static Message parse(const std::string& document);
    static Message load_file(const std::string& path);
    json to_json() const;
    std::string dump() const;
    bool operator==(const Message&) const = default;
};

struct TransformStep {
    enum class Kind { Parse, Assemble, Convert, Lookup, Copy };

    struct PartSource {
        std::string part;        // target decomposition part concept
        std::string tag;         // message tag providing it
        std::string source_part; // part of the tag's own decomposition, "" = whole value
        bool operator==(const PartSource&) const = default;
    };

    Kind kind;
    std::string source_tag;                        // Parse, Copy
    std::string decomp_concept, decomp_format;     // Parse, Assemble
    std::vector<PartSource> part_sources;          // Assemble
    std::string from_unit, to_unit, expression;    // Convert
    std::string table;                             // Lookup

    bool operator==(const TransformStep&) const = default;
};

struct TagTransformation {
    std::string target_tag;
    std::vector<std::string> source_tags;
    std::vector<TransformStep> steps;

    bool operator==(const TagTransformation&) const = default;
};

// standalone: embeds every decomposition and lookup table its steps reference
struct TransformationSpec {
    std::string service_id;
    std::string operation_id;
    int round_digits = 6;
    std::vector<TagTransformation> tags;
    std::vector<FormatDecomposition> decompositions;
    std::map<std::string, std::map<std::string, std::string>> tables;

    json to_json() const;
    static TransformationSpec from_json(const json& j);
    static TransformationSpec parse(const std::string& document);
    static TransformationSpec load_file(const std::string& path);

    const FormatDecomposition& decomposition(const std::string& concept_id, const std::string& format) const;
};

// how one required tag is satisfied from the available tags
struct Binding {
    enum class Kind { Direct, Composite };

    struct PartCover {
        std::string part;        // target part concept
        std::string tag;         // available tag covering it
        std::string source_part; // via the tag's own decomposition, "" = whole value
    };

    Kind kind = Kind::Direct;
    std::string target_tag;
    std::vector<std::string> source_tags;
    std::vector<PartCover> parts;                        // Composite
    const FormatDecomposition* target_decomp = nullptr;  // Composite
    Degree degree = Degree::Fail;                        // Direct concept degree
    bool unit_sibling = false; // bound across sibling unit concepts
    bool syntactic = false;    // bound by similarity fallback
};

struct BindOutcome {
    std::vector<Binding> bound;
    std::vector<std::string> unbound; // required tags nothing could satisfy
};

struct ReconConfig {
    Metric metric = Metric::Cosine;
    double sigma = 0.8;
    int round_digits = 6;
    DegreeValues degrees;
};

BindOutcome bind_concepts(const std::vector<TagSpec>& required,
                          const std::vector<TagSpec>& available,
                          const Ontology& o, const FormatDatabase& fmts,
                          const UnitDatabase& units, const ReconConfig& cfg);

// Parse/Assemble (or Copy) steps turning the binding's sources into the target format
std::vector<TransformStep> derive_format_steps(const Binding& b, const TagSpec& target,
                                               const std::vector<TagSpec>& available,
                                               const Ontology& o, const FormatDatabase& fmts);

// nullopt when units already agree; throws NoConversionError when no path exists
std::optional<TransformStep> derive_unit_step(const std::string& from_unit,
                                              const std::string& to_unit,
                                              const UnitDatabase& units);

struct GenResult {
    std::optional<TransformationSpec> spec; // present iff every tag bound and derivable
    std::vector<std::string> unbound;
};

GenResult generate_transformation_spec(const OpRef& target, const std::vector<TagSpec>& target_inputs,
                                       const std::vector<TagSpec>& upstream,
                                       const Ontology& o, const FormatDatabase& fmts,
                                       const UnitDatabase& units, const LookupTables& tables,
                                       const ReconConfig& cfg);

Message apply_transformation(const TransformationSpec& spec, const Message& msg);

} // namespace medc
