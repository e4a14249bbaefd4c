#include "medc/jsonio.hpp"
#include "medc/util.hpp"

#include <algorithm>

namespace medc {

json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON in " + what);
    return j;
}

json load_json_file(const std::string& path) {
    return parse_json(read_file(path), path);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& context) {
    if (!obj.is_object()) throw ParseError(context + ": expected JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ParseError(context + ": unknown key \"" + it.key() + "\"");
        }
    }
}

std::string require_string(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key) || !obj.at(key).is_string()) {
        throw ParseError(context + ": missing or non-string \"" + key + "\"");
    }
    return obj.at(key).get<std::string>();
}

std::string optional_string(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) return {};
    if (!obj.at(key).is_string()) throw ParseError(context + ": non-string \"" + key + "\"");
    return obj.at(key).get<std::string>();
}

} // namespace medc
