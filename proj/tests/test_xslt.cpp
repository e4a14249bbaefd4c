#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "medc/errors.hpp"
#include "medc/formats.hpp"
#include "medc/ontology.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"
#include "medc/transform.hpp"
#include "medc/xml.hpp"
#include "medc/xslt.hpp"
#include "support.hpp"

using namespace medc;

namespace {

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

TransformationSpec copy_spec(const std::vector<std::string>& tags) {
    TransformationSpec spec;
    spec.service_id = "s";
    spec.operation_id = "op";
    for (const auto& t : tags) {
        TagTransformation tt;
        tt.target_tag = t;
        tt.source_tags = {t};
        TransformStep step;
        step.kind = TransformStep::Kind::Copy;
        step.source_tag = t;
        tt.steps.push_back(step);
        spec.tags.push_back(tt);
    }
    return spec;
}

TransformationSpec sensor_spec() {
    Ontology o = Ontology::load_file(ts::fixture("sensor/ontology.json"));
    FormatDatabase fmts = FormatDatabase::load_file(ts::fixture("sensor/formats.json"));
    UnitDatabase units = UnitDatabase::load_file(ts::fixture("sensor/units.json"));
    LookupTables tables;
    Registry reg = Registry::load_file(ts::fixture("sensor/registry.json"));
    ProcessModel p = ProcessModel::load_file(ts::fixture("sensor/process.json"));
    ReconConfig cfg;
    GenResult res = generate_transformation_spec(
        {"sensor-archive", "record"}, reg.operation({"sensor-archive", "record"}).inputs,
        p.node("record").annotation.inputs, o, fmts, units, tables, cfg);
    REQUIRE(res.spec.has_value());
    return *res.spec;
}

} // namespace

TEST_CASE("copy-only spec renders one value-of per tag and stays well-formed") {
    std::string out = render_xslt(copy_spec({"A", "B", "C"}));
    CHECK(count_occurrences(out, "<xsl:value-of") == 3);
    XmlNode root = xml_parse(out);
    CHECK(root.name == "xsl:stylesheet");
    CHECK(root.attr("version") != nullptr);
    CHECK(*root.attr("version") == "1.0");
}

TEST_CASE("sensor spec renders the conversion arithmetic with normalized decimals") {
    std::string out = render_xslt(sensor_spec());
    CHECK(out.find("* 1.8 + 32") != std::string::npos);
    CHECK(out.find("1,8") == std::string::npos);
    // fixed-width source patterns become substring() extraction
    CHECK(out.find("substring(") != std::string::npos);
    CHECK_NOTHROW(xml_parse(out));
}

TEST_CASE("one named template per target tag plus the driver") {
    TransformationSpec spec = sensor_spec();
    std::string out = render_xslt(spec);
    for (const auto& t : spec.tags)
        CHECK(out.find("make-" + t.target_tag) != std::string::npos);
    CHECK(count_occurrences(out, "<xsl:template") == spec.tags.size() + 1);
}

TEST_CASE("backreference-style pattern is a declared limit") {
    TransformationSpec spec;
    spec.service_id = "s";
    spec.operation_id = "op";
    FormatDecomposition d;
    d.concept_id = "Doubled";
    d.format = "twice";
    d.parts.push_back({"Body", "([a-z]+)\\1"});
    d.template_text = "{#Body}";
    spec.decompositions.push_back(d);
    TagTransformation tt;
    tt.target_tag = "T";
    tt.source_tags = {"S"};
    TransformStep parse;
    parse.kind = TransformStep::Kind::Parse;
    parse.source_tag = "S";
    parse.decomp_concept = "Doubled";
    parse.decomp_format = "twice";
    tt.steps.push_back(parse);
    TransformStep assemble;
    assemble.kind = TransformStep::Kind::Assemble;
    assemble.decomp_concept = "Doubled";
    assemble.decomp_format = "twice";
    assemble.part_sources.push_back({"Body", "S", "Body"});
    tt.steps.push_back(assemble);
    spec.tags.push_back(tt);
    CHECK_THROWS_AS(render_xslt(spec), UnsupportedPatternError);
}

TEST_CASE("variable-width parts split on literal separators") {
    ts::json doc{{"decompositions",
                  ts::json::array(
                      {{{"composite", {{"concept", "Pair"}, {"format", "dashed"}}},
                        {"parts",
                         ts::json::array({{{"concept", "Left"}, {"pattern", "([0-9]+)"}},
                                          {{"concept", "Right"},
                                           {"pattern", "([0-9]+)"}}})},
                        {"template", "{#Left}-{#Right}"}}})}};
    FormatDatabase fmts = FormatDatabase::parse(doc.dump());

    TransformationSpec spec;
    spec.service_id = "s";
    spec.operation_id = "op";
    spec.decompositions.push_back(*fmts.find("Pair", "dashed"));
    TagTransformation tt;
    tt.target_tag = "Out";
    tt.source_tags = {"In"};
    TransformStep parse;
    parse.kind = TransformStep::Kind::Parse;
    parse.source_tag = "In";
    parse.decomp_concept = "Pair";
    parse.decomp_format = "dashed";
    tt.steps.push_back(parse);
    TransformStep assemble;
    assemble.kind = TransformStep::Kind::Assemble;
    assemble.decomp_concept = "Pair";
    assemble.decomp_format = "dashed";
    assemble.part_sources.push_back({"Left", "In", "Left"});
    assemble.part_sources.push_back({"Right", "In", "Right"});
    tt.steps.push_back(assemble);
    spec.tags.push_back(tt);

    std::string out = render_xslt(spec);
    CHECK(out.find("substring-before(") != std::string::npos);
    CHECK(out.find("substring-after(") != std::string::npos);
    CHECK_NOTHROW(xml_parse(out));

    // glued variable-width parts have no separator to split on
    ts::json glued = doc;
    glued["decompositions"][0]["template"] = "{#Left}{#Right}";
    glued["decompositions"][0]["composite"]["format"] = "glued";
    FormatDatabase fmts2 = FormatDatabase::parse(glued.dump());
    TransformationSpec spec2 = spec;
    spec2.decompositions = {*fmts2.find("Pair", "glued")};
    spec2.tags[0].steps[0].decomp_format = "glued";
    spec2.tags[0].steps[1].decomp_format = "glued";
    CHECK_THROWS_AS(render_xslt(spec2), UnsupportedPatternError);
}

TEST_CASE("lookup steps render as an exhaustive choose with a failing otherwise") {
    TransformationSpec spec = copy_spec({"Country"});
    spec.tables["country-codes"] = {{"FR", "France"}, {"DE", "Germany"}};
    TransformStep lookup;
    lookup.kind = TransformStep::Kind::Lookup;
    lookup.table = "country-codes";
    spec.tags[0].steps.push_back(lookup);

    std::string out = render_xslt(spec);
    CHECK(count_occurrences(out, "<xsl:when") == 2);
    CHECK(out.find("Germany") != std::string::npos);
    CHECK(out.find("terminate=\"yes\"") != std::string::npos);
    CHECK_NOTHROW(xml_parse(out));
}

TEST_CASE("stylesheet output is deterministic") {
    TransformationSpec spec = sensor_spec();
    CHECK(render_xslt(spec) == render_xslt(spec));
}
