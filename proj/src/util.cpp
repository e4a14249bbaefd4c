#include "medc/util.hpp"
#include "medc/errors.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace medc {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string concept_local_name(const std::string& concept_id) {
    size_t pos = concept_id.find_last_of("/#:");
    if (pos == std::string::npos || pos + 1 >= concept_id.size()) return concept_id;
    return concept_id.substr(pos + 1);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot open file for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw PersistenceError("write failed: " + path);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    write_file(tmp, content);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw PersistenceError("atomic rename failed: " + path);
    }
}

std::string iso8601_now_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

static std::string xml_escape(const std::string& s, bool attr) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attr) { out += "&quot;"; break; }
                out += c;
                break;
            default: out += c;
        }
    }
    return out;
}

std::string xml_escape_text(const std::string& s) { return xml_escape(s, false); }
std::string xml_escape_attr(const std::string& s) { return xml_escape(s, true); }

} // namespace medc
