#pragma once

// JSON helpers shared by the process and registry file formats.

#include "medc/jsonio.hpp"
#include "medc/procmodel.hpp"

namespace medc {

TagSpec tagspec_from_json(const json& j, const std::string& context);
json tagspec_to_json(const TagSpec& t);

std::vector<TagSpec> tagspec_list_from_json(const json& j, const std::string& context);

std::map<std::string, std::string> string_map_from_json(const json& j, const std::string& context);

} // namespace medc
