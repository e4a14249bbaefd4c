#include "medc/xml.hpp"
#include "medc/errors.hpp"
#include "medc/util.hpp"

#include <cctype>

namespace medc {

const std::string* XmlNode::attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
}

const XmlNode* XmlNode::child(const std::string& child_name) const {
    for (const auto& c : children) {
        if (c.name == child_name) return &c;
    }
    return nullptr;
}

namespace {

class XmlParser {
public:
    explicit XmlParser(const std::string& s) : s_(s) {}

    XmlNode parse() {
        skip_misc();
        XmlNode root = element();
        skip_misc();
        if (pos_ != s_.size()) fail("trailing content after document element");
        return root;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("xml: " + msg + " at offset " + std::to_string(pos_));
    }

    bool starts_with(const char* lit) const { return s_.compare(pos_, std::string::traits_type::length(lit), lit) == 0; }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) {
                size_t end = s_.find("?>", pos_);
                if (end == std::string::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
            } else if (starts_with("<!--")) {
                size_t end = s_.find("-->", pos_);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else {
                return;
            }
        }
    }

    static bool name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.';
    }

    std::string name() {
        size_t start = pos_;
        while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
        if (pos_ == start) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }

    std::string decode(const std::string& raw) {
        std::string out;
        out.reserve(raw.size());
        for (size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out += raw[i++];
                continue;
            }
            size_t semi = raw.find(';', i);
            if (semi == std::string::npos) fail("unterminated entity");
            std::string ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "amp") out += '&';
            else if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "quot") out += '"';
            else if (ent == "apos") out += '\'';
            else fail("unknown entity &" + ent + ";");
            i = semi + 1;
        }
        return out;
    }

    XmlNode element() {
        if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected element");
        ++pos_;
        XmlNode node;
        node.name = name();
        for (;;) {
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated start tag");
            if (s_[pos_] == '/') {
                if (!starts_with("/>")) fail("expected />");
                pos_ += 2;
                return node;
            }
            if (s_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::string key = name();
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected = after attribute name");
            ++pos_;
            skip_ws();
            if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
            char quote = s_[pos_++];
            size_t end = s_.find(quote, pos_);
            if (end == std::string::npos) fail("unterminated attribute value");
            if (!node.attrs.emplace(key, decode(s_.substr(pos_, end - pos_))).second) {
                fail("duplicate attribute " + key);
            }
            pos_ = end + 1;
        }
        // content: children or text, never both
        std::string text;
        for (;;) {
            if (pos_ >= s_.size()) fail("unterminated element " + node.name);
            if (s_[pos_] == '<') {
                if (starts_with("<!--")) {
                    size_t end = s_.find("-->", pos_);
                    if (end == std::string::npos) fail("unterminated comment");
                    pos_ = end + 3;
                    continue;
                }
                if (starts_with("</")) {
                    pos_ += 2;
                    std::string closing = name();
                    if (closing != node.name) fail("mismatched close tag " + closing);
                    skip_ws();
                    if (pos_ >= s_.size() || s_[pos_] != '>') fail("expected > in close tag");
                    ++pos_;
                    break;
                }
                node.children.push_back(element());
            } else {
                size_t end = s_.find('<', pos_);
                if (end == std::string::npos) fail("unterminated element " + node.name);
                text += s_.substr(pos_, end - pos_);
                pos_ = end;
            }
        }
        if (node.children.empty()) {
            node.text = decode(text);
            // whitespace-only leaves are formatting artefacts
            if (node.text.find_first_not_of(" \t\r\n") == std::string::npos) node.text.clear();
        } else if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
            fail("mixed content inside " + node.name);
        }
        return node;
    }
};

void serialize_node(const XmlNode& node, int depth, std::string& out) {
    std::string indent(static_cast<size_t>(depth) * 2, ' ');
    out += indent;
    out += '<';
    out += node.name;
    for (const auto& [key, value] : node.attrs) {
        out += ' ';
        out += key;
        out += "=\"";
        out += xml_escape_attr(value);
        out += '"';
    }
    if (node.children.empty() && node.text.empty()) {
        out += "/>\n";
        return;
    }
    if (node.children.empty()) {
        out += '>';
        out += xml_escape_text(node.text);
        out += "</";
        out += node.name;
        out += ">\n";
        return;
    }
    out += ">\n";
    for (const auto& c : node.children) serialize_node(c, depth + 1, out);
    out += indent;
    out += "</";
    out += node.name;
    out += ">\n";
}

} // namespace

XmlNode xml_parse(const std::string& input) {
    XmlParser p(input);
    return p.parse();
}

std::string xml_serialize(const XmlNode& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    serialize_node(root, 0, out);
    return out;
}

} // namespace medc
