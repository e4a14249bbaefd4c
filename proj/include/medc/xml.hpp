#pragma once

#include <map>
#include <string>
#include <vector>

namespace medc {

// element tree; text lives on leaves only (no mixed content in this dialect)
struct XmlNode {
    std::string name;
    std::map<std::string, std::string> attrs;
    std::vector<XmlNode> children;
    std::string text;

    bool operator==(const XmlNode&) const = default;

    const std::string* attr(const std::string& key) const;
    const XmlNode* child(const std::string& name) const;
};

XmlNode xml_parse(const std::string& input); // ParseError on malformed input

// declaration line + 2-space indent, attributes alphabetical; stable bytes
std::string xml_serialize(const XmlNode& root);

} // namespace medc
