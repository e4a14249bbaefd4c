#pragma once

#include <string>
#include <vector>

namespace medc {

std::string join(const std::vector<std::string>& parts, const std::string& sep);

// Last path-ish segment of a concept id: "ex:CelsiusTemp" -> "CelsiusTemp",
// "http://a/b#Date" -> "Date". Falls back to the whole id.
std::string concept_local_name(const std::string& concept_id);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
// write temp file in the same directory, then rename over the target
void write_file_atomic(const std::string& path, const std::string& content);

std::string iso8601_now_utc();

std::string xml_escape_text(const std::string& s);
std::string xml_escape_attr(const std::string& s);

} // namespace medc
