#pragma once

#include "medc/errors.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace medc {

using json = nlohmann::json;

json parse_json(const std::string& text, const std::string& what);
json load_json_file(const std::string& path);

// Rejects keys outside `allowed`; used by the strict file formats.
void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& context);

std::string require_string(const json& obj, const std::string& key, const std::string& context);
std::string optional_string(const json& obj, const std::string& key, const std::string& context);

} // namespace medc
