#include "medc/formats.hpp"
#include "medc/errors.hpp"
#include "medc/jsonio.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <set>

namespace medc {

namespace {

const std::string kSpecials = "^$\\.*+?()[]{}|";

std::string escape_literal(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (kSpecials.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// template split into literal runs and {#Concept} placeholders
struct TemplatePiece {
    bool placeholder;
    std::string text; // literal text or placeholder concept name
};

std::vector<TemplatePiece> split_template(const std::string& tmpl, const std::string& context) {
    std::vector<TemplatePiece> pieces;
    size_t i = 0;
    std::string lit;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '#') {
            size_t close = tmpl.find('}', i + 2);
            if (close == std::string::npos) throw ParseError(context + ": unterminated placeholder in template");
            if (!lit.empty()) {
                pieces.push_back({false, lit});
                lit.clear();
            }
            std::string name = tmpl.substr(i + 2, close - i - 2);
            if (name.empty()) throw ParseError(context + ": empty placeholder in template");
            pieces.push_back({true, name});
            i = close + 1;
            continue;
        }
        lit.push_back(tmpl[i++]);
    }
    if (!lit.empty()) pieces.push_back({false, lit});
    return pieces;
}

} // namespace

void validate_pattern(const std::string& pattern, int groups, const std::string& context) {
    int open_groups = 0;
    bool in_class = false;
    for (size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '\\') {
            if (i + 1 >= pattern.size()) throw ParseError(context + ": trailing backslash in pattern");
            char n = pattern[i + 1];
            if (n >= '1' && n <= '9') throw UnsupportedPatternError(context + ": backreference \\" + std::string(1, n) + " not supported");
            ++i;
            continue;
        }
        if (in_class) {
            if (c == ']') in_class = false;
            continue;
        }
        switch (c) {
            case '[': in_class = true; break;
            case '|': throw UnsupportedPatternError(context + ": alternation not supported in patterns");
            case '(':
                if (i + 1 < pattern.size() && pattern[i + 1] == '?') {
                    throw UnsupportedPatternError(context + ": (?...) groups not supported in patterns");
                }
                ++open_groups;
                break;
            default: break;
        }
    }
    if (in_class) throw ParseError(context + ": unterminated character class in pattern");
    if (open_groups != groups) {
        throw ParseError(context + ": pattern must contain exactly " + std::to_string(groups) +
                         " capture group(s), found " + std::to_string(open_groups));
    }
    try {
        std::regex re(pattern, std::regex::ECMAScript);
        (void)re;
    } catch (const std::regex_error& e) {
        throw ParseError(context + ": pattern does not compile: " + e.what());
    }
}

FormatDecomposition make_decomposition(std::string concept_id, std::string format,
                                       std::vector<FormatDecomposition::Part> parts,
                                       std::string template_text) {
    FormatDecomposition d;
    d.concept_id = std::move(concept_id);
    d.format = std::move(format);
    d.parts = std::move(parts);
    d.template_text = std::move(template_text);
    std::string ctx = "decomposition " + d.concept_id + "/" + d.format;

    if (d.parts.empty()) throw ParseError(ctx + ": needs at least one part");
    std::set<std::string> part_concepts;
    for (const auto& p : d.parts) {
        validate_pattern(p.pattern, 1, ctx + " part " + p.concept_id);
        if (!part_concepts.insert(p.concept_id).second) {
            throw ParseError(ctx + ": duplicate part concept_id " + p.concept_id);
        }
    }

    // build the anchored composite pattern by substituting part patterns
    std::set<std::string> seen;
    std::string composite = "^";
    for (const TemplatePiece& piece : split_template(d.template_text, ctx)) {
        if (!piece.placeholder) {
            composite += escape_literal(piece.text);
            continue;
        }
        auto it = std::find_if(d.parts.begin(), d.parts.end(),
                               [&](const FormatDecomposition::Part& p) { return p.concept_id == piece.text; });
        if (it == d.parts.end()) {
            throw ParseError(ctx + ": template placeholder {#" + piece.text + "} is not a declared part");
        }
        if (!seen.insert(piece.text).second) {
            throw ParseError(ctx + ": template uses part {#" + piece.text + "} twice");
        }
        composite += it->pattern;
        d.capture_order.push_back(piece.text);
    }
    composite += "$";
    if (seen.size() != d.parts.size()) {
        for (const auto& p : d.parts) {
            if (!seen.count(p.concept_id)) {
                throw ParseError(ctx + ": part " + p.concept_id + " missing from template");
            }
        }
    }
    d.composite_pattern = composite;
    try {
        d.composite_re = std::regex(composite, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw ParseError(ctx + ": composite pattern does not compile: " + e.what());
    }
    return d;
}

FormatDecomposition decomposition_from_json(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"composite", "parts", "template"}, context);
    if (!j.contains("composite") || !j.at("composite").is_object()) {
        throw ParseError(context + ": missing composite object");
    }
    reject_unknown_keys(j.at("composite"), {"concept", "format"}, context + ".composite");
    std::string concept_id = require_string(j.at("composite"), "concept", context + ".composite");
    std::string format = require_string(j.at("composite"), "format", context + ".composite");

    if (!j.contains("parts") || !j.at("parts").is_array()) {
        throw ParseError(context + ": missing parts array");
    }
    std::vector<FormatDecomposition::Part> parts;
    for (const json& pj : j.at("parts")) {
        reject_unknown_keys(pj, {"concept", "pattern"}, context + ".parts");
        parts.push_back({require_string(pj, "concept", context + ".parts"),
                         require_string(pj, "pattern", context + ".parts")});
    }
    return make_decomposition(concept_id, format, std::move(parts),
                              require_string(j, "template", context));
}

json decomposition_to_json(const FormatDecomposition& d) {
    json parts = json::array();
    for (const auto& p : d.parts) {
        parts.push_back({{"concept", p.concept_id}, {"pattern", p.pattern}});
    }
    return {{"composite", {{"concept", d.concept_id}, {"format", d.format}}},
            {"parts", parts},
            {"template", d.template_text}};
}

FormatDatabase FormatDatabase::parse(const std::string& document) {
    json j = parse_json(document, "formats");
    reject_unknown_keys(j, {"decompositions"}, "formats");

    FormatDatabase db;
    if (!j.contains("decompositions")) return db;
    if (!j.at("decompositions").is_array()) throw ParseError("formats: \"decompositions\" must be an array");

    for (const json& dj : j.at("decompositions")) {
        FormatDecomposition d = decomposition_from_json(dj, "formats decomposition");
        for (const auto& other : db.decomps_) {
            if (other.concept_id == d.concept_id && other.format == d.format) {
                throw DuplicateIdError("formats decomposition " + d.concept_id + "/" + d.format + ": duplicate");
            }
        }
        db.decomps_.push_back(std::move(d));
    }
    return db;
}

FormatDatabase FormatDatabase::load_file(const std::string& path) {
    return parse(read_file(path));
}

bool FormatDatabase::has_format(const std::string& format) const {
    return std::any_of(decomps_.begin(), decomps_.end(),
                       [&](const FormatDecomposition& d) { return d.format == format; });
}

const FormatDecomposition* FormatDatabase::find(const std::string& concept_id, const std::string& format) const {
    for (const auto& d : decomps_) {
        if (d.concept_id == concept_id && d.format == format) return &d;
    }
    return nullptr;
}

std::vector<const FormatDecomposition*> FormatDatabase::for_concept(const std::string& concept_id) const {
    std::vector<const FormatDecomposition*> out;
    for (const auto& d : decomps_) {
        if (d.concept_id == concept_id) out.push_back(&d);
    }
    return out;
}

std::map<std::string, std::string> parse_value(const FormatDecomposition& d, const std::string& value) {
    std::smatch m;
    if (!std::regex_match(value, m, d.composite_re)) {
        throw ParseError("value \"" + value + "\" does not match pattern " + d.composite_pattern +
                         " (" + d.concept_id + "/" + d.format + ")");
    }
    std::map<std::string, std::string> parts;
    for (size_t i = 0; i < d.capture_order.size(); ++i) {
        parts[d.capture_order[i]] = m[i + 1].str();
    }
    return parts;
}

std::string assemble_value(const FormatDecomposition& d, const std::map<std::string, std::string>& parts) {
    std::string out;
    for (const TemplatePiece& piece : split_template(d.template_text, d.concept_id + "/" + d.format)) {
        if (!piece.placeholder) {
            out += piece.text;
            continue;
        }
        auto it = parts.find(piece.text);
        if (it == parts.end()) {
            throw MissingTagError("assemble " + d.concept_id + "/" + d.format + ": no value for part " + piece.text);
        }
        out += it->second;
    }
    return out;
}

UnitDatabase UnitDatabase::parse(const std::string& document) {
    json j = parse_json(document, "units");
    reject_unknown_keys(j, {"conversions"}, "units");

    UnitDatabase db;
    if (!j.contains("conversions")) return db;
    if (!j.at("conversions").is_array()) throw ParseError("units: \"conversions\" must be an array");

    for (const json& cj : j.at("conversions")) {
        std::string ctx = "units conversion";
        reject_unknown_keys(cj, {"from", "to", "expression"}, ctx);
        UnitConversion c;
        c.from_unit = require_string(cj, "from", ctx);
        c.to_unit = require_string(cj, "to", ctx);
        ctx = "units conversion " + c.from_unit + " -> " + c.to_unit;
        c.expression_text = require_string(cj, "expression", ctx);
        c.expression = Expression::parse(c.expression_text);
        if (c.expression.placeholders().size() != 1) {
            throw ParseError(ctx + ": expression must reference exactly one placeholder");
        }
        if (db.find(c.from_unit, c.to_unit)) throw DuplicateIdError(ctx + ": duplicate conversion");
        db.conversions_.push_back(std::move(c));
    }
    return db;
}

UnitDatabase UnitDatabase::load_file(const std::string& path) {
    return parse(read_file(path));
}

const UnitConversion* UnitDatabase::find(const std::string& from, const std::string& to) const {
    for (const auto& c : conversions_) {
        if (c.from_unit == from && c.to_unit == to) return &c;
    }
    return nullptr;
}

Expression UnitDatabase::derive(const std::string& from, const std::string& to) const {
    if (const UnitConversion* c = find(from, to)) return c->expression;
    if (const UnitConversion* rev = find(to, from)) {
        auto lf = rev->expression.linear_form();
        if (lf && lf->first.num != 0) return rev->expression.invert_linear();
    }
    throw NoConversionError("no conversion from " + from + " to " + to);
}

bool UnitDatabase::has_conversion(const std::string& from, const std::string& to) const {
    if (find(from, to)) return true;
    if (const UnitConversion* rev = find(to, from)) {
        auto lf = rev->expression.linear_form();
        return lf && lf->first.num != 0;
    }
    return false;
}

LookupTables LookupTables::parse(const std::string& document) {
    json j = parse_json(document, "tables");
    reject_unknown_keys(j, {"tables"}, "tables");

    LookupTables db;
    if (!j.contains("tables")) return db;
    if (!j.at("tables").is_array()) throw ParseError("tables: \"tables\" must be an array");

    for (const json& tj : j.at("tables")) {
        std::string ctx = "lookup table";
        reject_unknown_keys(tj, {"id", "entries"}, ctx);
        std::string id = require_string(tj, "id", ctx);
        ctx = "lookup table \"" + id + "\"";
        if (db.tables_.count(id)) throw DuplicateIdError(ctx + ": duplicate id");
        std::map<std::string, std::string> entries;
        if (tj.contains("entries")) {
            if (!tj.at("entries").is_object()) throw ParseError(ctx + ": entries must be an object");
            for (auto it = tj.at("entries").begin(); it != tj.at("entries").end(); ++it) {
                if (!it.value().is_string()) throw ParseError(ctx + ": entry values must be strings");
                entries[it.key()] = it.value().get<std::string>();
            }
        }
        db.tables_[id] = std::move(entries);
    }
    return db;
}

LookupTables LookupTables::load_file(const std::string& path) {
    return parse(read_file(path));
}

bool LookupTables::has_table(const std::string& id) const {
    return tables_.count(id) > 0;
}

const std::map<std::string, std::string>& LookupTables::table(const std::string& id) const {
    auto it = tables_.find(id);
    if (it == tables_.end()) throw ParseError("unknown lookup table \"" + id + "\"");
    return it->second;
}

std::string LookupTables::apply(const std::string& id, const std::string& value) const {
    const auto& t = table(id);
    auto it = t.find(value);
    if (it == t.end()) {
        throw LookupMissError("lookup table \"" + id + "\" has no entry for \"" + value + "\"");
    }
    return it->second;
}

std::vector<std::string> LookupTables::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : tables_) out.push_back(id);
    return out;
}

} // namespace medc
