#include "medc/xslt.hpp"
#include "medc/errors.hpp"
#include "medc/expression.hpp"
#include "medc/xml.hpp"

#include <array>
#include <map>
#include <utility>
#include <vector>

namespace medc {

namespace {

std::string tag_path(const std::string& tag) { return "/message/" + tag; }

std::string xpath_literal(const std::string& s) {
    if (s.find('\'') == std::string::npos) return "'" + s + "'";
    if (s.find('"') == std::string::npos) return "\"" + s + "\"";
    throw UnsupportedPatternError("literal mixing both quote kinds is not expressible: " + s);
}

struct Piece {
    bool placeholder;
    std::string text; // part concept or literal
};

std::vector<Piece> split_template(const std::string& tmpl) {
    std::vector<Piece> pieces;
    std::string lit;
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 2, "{#") == 0) {
            size_t close = tmpl.find('}', i);
            if (!lit.empty()) {
                pieces.push_back({false, lit});
                lit.clear();
            }
            pieces.push_back({true, tmpl.substr(i + 2, close - i - 2)});
            i = close + 1;
        } else {
            lit += tmpl[i++];
        }
    }
    if (!lit.empty()) pieces.push_back({false, lit});
    return pieces;
}

// widths in characters before/inside/after the capture group; -1 = variable
struct PatternShape {
    std::array<int, 3> width{0, 0, 0};
    std::array<int, 3> atoms{0, 0, 0};

    bool fixed() const { return width[0] >= 0 && width[1] >= 0 && width[2] >= 0; }
    bool pure_group() const { return atoms[0] == 0 && atoms[2] == 0; }
};

PatternShape analyze_pattern(const std::string& pat) {
    PatternShape sh;
    int section = 0;
    size_t i = 0;
    const size_t n = pat.size();
    auto quantifier = [&]() -> int {
        if (i >= n) return 1;
        char c = pat[i];
        if (c == '+' || c == '*' || c == '?') {
            ++i;
            return -1;
        }
        if (c == '{') {
            size_t close = pat.find('}', i);
            std::string body = pat.substr(i + 1, close - i - 1);
            i = close + 1;
            size_t comma = body.find(',');
            if (comma == std::string::npos) return std::stoi(body);
            int lo = std::stoi(body.substr(0, comma));
            int hi = std::stoi(body.substr(comma + 1));
            return lo == hi ? lo : -1;
        }
        return 1;
    };
    while (i < n) {
        char c = pat[i];
        if (c == '(') {
            ++i;
            section = 1;
            continue;
        }
        if (c == ')') {
            ++i;
            section = 2;
            continue;
        }
        if (c == '\\') {
            i += 2;
        } else if (c == '[') {
            ++i;
            while (i < n && pat[i] != ']') {
                if (pat[i] == '\\') ++i;
                ++i;
            }
            ++i;
        } else {
            if (static_cast<unsigned char>(c) >= 0x80) {
                // character count unclear for multibyte literals
                sh.width[section] = -1;
            }
            ++i;
        }
        int q = quantifier();
        ++sh.atoms[section];
        if (q < 0 || sh.width[section] < 0) sh.width[section] = -1;
        else sh.width[section] += q;
    }
    return sh;
}

using Scratch = std::map<std::pair<std::string, std::string>, std::string>;

void extract_parts(const FormatDecomposition& d, const std::string& source_expr,
                   const std::string& source_tag, Scratch& parsed) {
    std::vector<Piece> pieces = split_template(d.template_text);
    std::map<std::string, PatternShape> shapes;
    for (const auto& part : d.parts) shapes[part.concept_id] = analyze_pattern(part.pattern);

    bool all_fixed = true;
    for (const auto& piece : pieces) {
        if (piece.placeholder) {
            if (!shapes.at(piece.text).fixed()) all_fixed = false;
        } else {
            for (char c : piece.text) {
                if (static_cast<unsigned char>(c) >= 0x80) all_fixed = false;
            }
        }
    }

    if (all_fixed) {
        int offset = 0; // 0-based; xpath substring is 1-based
        for (const auto& piece : pieces) {
            if (!piece.placeholder) {
                offset += static_cast<int>(piece.text.size());
                continue;
            }
            const PatternShape& sh = shapes.at(piece.text);
            parsed[{source_tag, piece.text}] =
                "substring(" + source_expr + ", " + std::to_string(offset + sh.width[0] + 1) +
                ", " + std::to_string(sh.width[1]) + ")";
            offset += sh.width[0] + sh.width[1] + sh.width[2];
        }
        return;
    }

    // separator-delimited fallback: pure-group parts split on template literals
    for (const auto& piece : pieces) {
        if (piece.placeholder && !shapes.at(piece.text).pure_group()) {
            throw UnsupportedPatternError("part " + piece.text + " of " + d.concept_id + "/" +
                                          d.format + " is neither fixed-width nor a plain group");
        }
    }
    std::string rest = source_expr;
    for (size_t i = 0; i < pieces.size(); ++i) {
        if (!pieces[i].placeholder) {
            if (i == 0) rest = "substring-after(" + rest + ", " + xpath_literal(pieces[i].text) + ")";
            continue;
        }
        bool has_sep = i + 1 < pieces.size();
        if (has_sep && pieces[i + 1].placeholder) {
            throw UnsupportedPatternError("adjacent variable-width parts in " + d.concept_id + "/" +
                                          d.format + " cannot be split");
        }
        if (has_sep) {
            std::string sep = xpath_literal(pieces[i + 1].text);
            parsed[{source_tag, pieces[i].text}] = "substring-before(" + rest + ", " + sep + ")";
            if (i + 2 < pieces.size()) rest = "substring-after(" + rest + ", " + sep + ")";
        } else {
            parsed[{source_tag, pieces[i].text}] = rest;
        }
    }
}

std::string build_concat(const FormatDecomposition& d,
                         const std::vector<TransformStep::PartSource>& sources,
                         const Scratch& parsed) {
    std::vector<std::string> args;
    for (const Piece& piece : split_template(d.template_text)) {
        if (!piece.placeholder) {
            args.push_back(xpath_literal(piece.text));
            continue;
        }
        const TransformStep::PartSource* src = nullptr;
        for (const auto& ps : sources) {
            if (ps.part == piece.text) {
                src = &ps;
                break;
            }
        }
        if (!src) throw SerializationError("assemble lacks a source for part " + piece.text);
        if (src->source_part.empty()) {
            args.push_back(tag_path(src->tag));
        } else {
            auto it = parsed.find({src->tag, src->source_part});
            if (it == parsed.end()) {
                throw SerializationError("assemble uses unparsed part " + src->source_part + " of " +
                                         src->tag);
            }
            args.push_back(it->second);
        }
    }
    if (args.empty()) throw SerializationError("assemble with empty template");
    if (args.size() == 1) return args.front();
    std::string out = "concat(";
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i];
    }
    out += ")";
    return out;
}

} // namespace

std::string render_xslt(const TransformationSpec& spec) {
    XmlNode sheet;
    sheet.name = "xsl:stylesheet";
    sheet.attrs["version"] = "1.0";
    sheet.attrs["xmlns:xsl"] = "http://www.w3.org/1999/XSL/Transform";

    XmlNode output;
    output.name = "xsl:output";
    output.attrs["indent"] = "yes";
    output.attrs["method"] = "xml";
    sheet.children.push_back(output);

    XmlNode driver;
    driver.name = "xsl:template";
    driver.attrs["match"] = "/message";
    XmlNode message;
    message.name = "message";
    for (const auto& t : spec.tags) {
        XmlNode call;
        call.name = "xsl:call-template";
        call.attrs["name"] = "make-" + t.target_tag;
        message.children.push_back(call);
    }
    driver.children.push_back(message);
    sheet.children.push_back(driver);

    for (const auto& t : spec.tags) {
        Scratch parsed;
        std::string current;
        const std::map<std::string, std::string>* table = nullptr;
        std::string table_id;
        for (const TransformStep& st : t.steps) {
            switch (st.kind) {
                case TransformStep::Kind::Copy:
                    current = tag_path(st.source_tag);
                    break;
                case TransformStep::Kind::Parse:
                    extract_parts(spec.decomposition(st.decomp_concept, st.decomp_format),
                                  tag_path(st.source_tag), st.source_tag, parsed);
                    break;
                case TransformStep::Kind::Assemble:
                    current = build_concat(spec.decomposition(st.decomp_concept, st.decomp_format),
                                           st.part_sources, parsed);
                    break;
                case TransformStep::Kind::Convert:
                    current = Expression::parse(st.expression).render_xpath(current);
                    break;
                case TransformStep::Kind::Lookup:
                    table = &spec.tables.at(st.table);
                    table_id = st.table;
                    break;
            }
        }
        if (current.empty()) throw SerializationError("tag " + t.target_tag + " produces no value");

        XmlNode tmpl;
        tmpl.name = "xsl:template";
        tmpl.attrs["name"] = "make-" + t.target_tag;
        XmlNode out;
        out.name = t.target_tag;
        if (table) {
            XmlNode choose;
            choose.name = "xsl:choose";
            for (const auto& [key, value] : *table) {
                XmlNode when;
                when.name = "xsl:when";
                when.attrs["test"] = current + " = " + xpath_literal(key);
                when.text = value;
                choose.children.push_back(when);
            }
            XmlNode otherwise;
            otherwise.name = "xsl:otherwise";
            XmlNode fail;
            fail.name = "xsl:message";
            fail.attrs["terminate"] = "yes";
            fail.text = "no entry in table " + table_id + " for " + t.target_tag;
            otherwise.children.push_back(fail);
            choose.children.push_back(otherwise);
            out.children.push_back(choose);
        } else {
            XmlNode value_of;
            value_of.name = "xsl:value-of";
            value_of.attrs["select"] = current;
            out.children.push_back(value_of);
        }
        tmpl.children.push_back(out);
        sheet.children.push_back(tmpl);
    }
    return xml_serialize(sheet);
}

} // namespace medc
