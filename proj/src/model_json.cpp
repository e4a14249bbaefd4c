#include "medc/model_json.hpp"

namespace medc {

TagSpec tagspec_from_json(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"tag", "concept", "format", "unit", "lookup"}, context);
    TagSpec t;
    t.tag = require_string(j, "tag", context);
    t.concept_id = require_string(j, "concept", context);
    t.format = optional_string(j, "format", context);
    t.unit = optional_string(j, "unit", context);
    t.lookup = optional_string(j, "lookup", context);
    if (t.tag.empty()) throw ParseError(context + ": empty tag name");
    if (t.concept_id.empty()) throw ParseError(context + ": empty concept id");
    return t;
}

json tagspec_to_json(const TagSpec& t) {
    json j;
    j["tag"] = t.tag;
    j["concept"] = t.concept_id;
    if (!t.format.empty()) j["format"] = t.format;
    if (!t.unit.empty()) j["unit"] = t.unit;
    if (!t.lookup.empty()) j["lookup"] = t.lookup;
    return j;
}

std::vector<TagSpec> tagspec_list_from_json(const json& j, const std::string& context) {
    if (!j.is_array()) throw ParseError(context + ": expected an array of tag specs");
    std::vector<TagSpec> out;
    std::vector<std::string> seen;
    for (const json& e : j) {
        TagSpec t = tagspec_from_json(e, context);
        for (const auto& s : seen) {
            if (s == t.tag) throw ParseError(context + ": duplicate tag \"" + t.tag + "\"");
        }
        seen.push_back(t.tag);
        out.push_back(std::move(t));
    }
    return out;
}

std::map<std::string, std::string> string_map_from_json(const json& j, const std::string& context) {
    if (!j.is_object()) throw ParseError(context + ": expected an object of strings");
    std::map<std::string, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) throw ParseError(context + ": values must be strings");
        out[it.key()] = it.value().get<std::string>();
    }
    return out;
}

} // namespace medc
