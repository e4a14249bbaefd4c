#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "medc/errors.hpp"
#include "medc/formats.hpp"
#include "medc/ontology.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"
#include "medc/transform.hpp"
#include "support.hpp"

#include <algorithm>

using namespace medc;

namespace {

TagSpec tag(const std::string& t, const std::string& c, const std::string& fmt = "",
            const std::string& unit = "", const std::string& lookup = "") {
    TagSpec s;
    s.tag = t;
    s.concept_id = c;
    s.format = fmt;
    s.unit = unit;
    s.lookup = lookup;
    return s;
}

struct SensorWorld {
    Ontology o = Ontology::load_file(ts::fixture("sensor/ontology.json"));
    FormatDatabase fmts = FormatDatabase::load_file(ts::fixture("sensor/formats.json"));
    UnitDatabase units = UnitDatabase::load_file(ts::fixture("sensor/units.json"));
    LookupTables tables;
    Registry reg = Registry::load_file(ts::fixture("sensor/registry.json"));
    ProcessModel p = ProcessModel::load_file(ts::fixture("sensor/process.json"));
    ReconConfig cfg;

    GenResult generate() {
        const OperationDescriptor& op = reg.operation({"sensor-archive", "record"});
        return generate_transformation_spec({"sensor-archive", "record"}, op.inputs,
                                            p.node("record").annotation.inputs, o, fmts,
                                            units, tables, cfg);
    }
};

std::vector<TransformStep::Kind> kinds(const TagTransformation& t) {
    std::vector<TransformStep::Kind> v;
    for (const auto& s : t.steps) v.push_back(s.kind);
    return v;
}

} // namespace

TEST_CASE("direct binding prefers the best degree, then lexicographic tag") {
    Ontology o = Ontology::parse(ts::ontology_doc(
        {"Temperature", "CelsiusTemp"}, {{"CelsiusTemp", "Temperature"}}));
    FormatDatabase fmts;
    UnitDatabase units;
    ReconConfig cfg;
    BindOutcome out = bind_concepts(
        {tag("t", "Temperature")},
        {tag("b", "CelsiusTemp"), tag("a", "Temperature"), tag("c", "Temperature")}, o,
        fmts, units, cfg);
    REQUIRE(out.bound.size() == 1);
    CHECK(out.unbound.empty());
    CHECK(out.bound[0].kind == Binding::Kind::Direct);
    CHECK(out.bound[0].degree == Degree::Exact);
    CHECK(out.bound[0].source_tags == std::vector<std::string>{"a"});
}

TEST_CASE("sibling units under a common ancestor bind when convertible") {
    Ontology o = Ontology::parse(ts::ontology_doc(
        {"Temperature", "Celsius", "Fahrenheit", "ReadingA", "ReadingB"},
        {{"Celsius", "Temperature"}, {"Fahrenheit", "Temperature"}}));
    FormatDatabase fmts;
    UnitDatabase units = UnitDatabase::parse(
        R"({"conversions": [{"from": "Celsius", "to": "Fahrenheit",
             "expression": "({#Celsius} × 1,8) + 32"}]})");
    ReconConfig cfg;
    BindOutcome out =
        bind_concepts({tag("Value", "ReadingA", "", "Fahrenheit")},
                      {tag("SensorTempC", "ReadingB", "", "Celsius")}, o, fmts, units, cfg);
    REQUIRE(out.bound.size() == 1);
    CHECK(out.bound[0].unit_sibling);
    CHECK(out.bound[0].source_tags == std::vector<std::string>{"SensorTempC"});

    // no conversion, no shared-ancestor bridge: unbound
    UnitDatabase empty_units;
    BindOutcome miss =
        bind_concepts({tag("Value", "ReadingA", "", "Fahrenheit")},
                      {tag("SensorTempC", "ReadingB", "", "Celsius")}, o, fmts,
                      empty_units, cfg);
    CHECK(miss.bound.empty());
    CHECK(miss.unbound == std::vector<std::string>{"Value"});
}

TEST_CASE("composite binding covers parts through subsumption") {
    Ontology o = Ontology::parse(ts::ontology_doc(
        {"SQLDatetime", "Date", "Time", "DateUS"}, {{"DateUS", "Date"}}));
    FormatDatabase fmts = FormatDatabase::parse(ts::json{
        {"decompositions",
         ts::json::array(
             {{{"composite", {{"concept", "SQLDatetime"}, {"format", "sql"}}},
               {"parts",
                ts::json::array({{{"concept", "Date"}, {"pattern", "([0-9-]{10})"}},
                                 {{"concept", "Time"}, {"pattern", "([0-9:]{8})"}}})},
               {"template", "{#Date} {#Time}"}}})}}
                                                     .dump());
    UnitDatabase units;
    ReconConfig cfg;
    BindOutcome out = bind_concepts({tag("DT", "SQLDatetime", "sql")},
                                    {tag("DateUS", "DateUS"), tag("Time", "Time")}, o,
                                    fmts, units, cfg);
    REQUIRE(out.bound.size() == 1);
    const Binding& b = out.bound[0];
    CHECK(b.kind == Binding::Kind::Composite);
    REQUIRE(b.parts.size() == 2);
    CHECK(b.parts[0].part == "Date");
    CHECK(b.parts[0].tag == "DateUS");
    CHECK(b.parts[1].part == "Time");
    CHECK(b.parts[1].tag == "Time");
    CHECK(b.source_tags == std::vector<std::string>{"DateUS", "Time"});
}

TEST_CASE("nothing available leaves the tag unbound") {
    Ontology o = Ontology::parse(ts::ontology_doc({"PartNumber"}));
    FormatDatabase fmts;
    UnitDatabase units;
    ReconConfig cfg;
    BindOutcome out = bind_concepts({tag("PartNumber", "PartNumber")}, {}, o, fmts,
                                    units, cfg);
    CHECK(out.bound.empty());
    CHECK(out.unbound == std::vector<std::string>{"PartNumber"});
}

TEST_CASE("syntactic fallback binds on label similarity above sigma") {
    Ontology o = Ontology::parse(ts::ontology_doc(
        {"OrderRef", "PurchaseRef"}, {},
        {{"OrderRef", {"order reference number"}},
         {"PurchaseRef", {"order reference number"}}}));
    FormatDatabase fmts;
    UnitDatabase units;
    ReconConfig cfg;
    BindOutcome out = bind_concepts({tag("Ref", "OrderRef")},
                                    {tag("Ref", "PurchaseRef")}, o, fmts, units, cfg);
    REQUIRE(out.bound.size() == 1);
    CHECK(out.bound[0].syntactic);

    ReconConfig strict = cfg;
    strict.sigma = 1.1; // unreachable
    BindOutcome miss = bind_concepts({tag("Ref", "OrderRef")},
                                     {tag("Ref", "PurchaseRef")}, o, fmts, units, strict);
    CHECK(miss.bound.empty());
}

TEST_CASE("derive_format_steps: equal formats copy, missing formats fail") {
    Ontology o = Ontology::parse(ts::ontology_doc({"X"}));
    FormatDatabase fmts;
    UnitDatabase units;
    ReconConfig cfg;
    BindOutcome out =
        bind_concepts({tag("t", "X", "csv")}, {tag("s", "X", "csv")}, o, fmts, units, cfg);
    REQUIRE(out.bound.size() == 1);
    auto steps = derive_format_steps(out.bound[0], tag("t", "X", "csv"),
                                     {tag("s", "X", "csv")}, o, fmts);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].kind == TransformStep::Kind::Copy);
    CHECK(steps[0].source_tag == "s");

    // differing formats with no decomposition in the database
    BindOutcome out2 =
        bind_concepts({tag("t", "X", "b")}, {tag("s", "X", "a")}, o, fmts, units, cfg);
    REQUIRE(out2.bound.size() == 1);
    CHECK_THROWS_AS(derive_format_steps(out2.bound[0], tag("t", "X", "b"),
                                        {tag("s", "X", "a")}, o, fmts),
                    UnknownFormatError);
}

TEST_CASE("derive_unit_step: direct, identity, missing") {
    UnitDatabase units = UnitDatabase::load_file(ts::fixture("sensor/units.json"));
    auto step = derive_unit_step("Celsius", "Fahrenheit", units);
    REQUIRE(step.has_value());
    CHECK(step->kind == TransformStep::Kind::Convert);
    CHECK(step->from_unit == "Celsius");
    CHECK(step->to_unit == "Fahrenheit");
    CHECK_FALSE(derive_unit_step("Celsius", "Celsius", units).has_value());
    CHECK_THROWS_AS(derive_unit_step("Celsius", "Kelvin", units), NoConversionError);
}

TEST_CASE("sensor scenario: generated spec reconstructs datetime and converts units") {
    SensorWorld w;
    GenResult res = w.generate();
    REQUIRE(res.spec.has_value());
    CHECK(res.unbound.empty());
    const TransformationSpec& spec = *res.spec;
    CHECK(spec.service_id == "sensor-archive");
    CHECK(spec.operation_id == "record");
    REQUIRE(spec.tags.size() == 2);

    const TagTransformation& dt = spec.tags[0];
    CHECK(dt.target_tag == "Datetime");
    CHECK(kinds(dt) == std::vector<TransformStep::Kind>{TransformStep::Kind::Parse,
                                                        TransformStep::Kind::Parse,
                                                        TransformStep::Kind::Assemble});
    const TagTransformation& val = spec.tags[1];
    CHECK(val.target_tag == "Value");
    CHECK(kinds(val) == std::vector<TransformStep::Kind>{TransformStep::Kind::Copy,
                                                         TransformStep::Kind::Convert});

    Message msg = Message::load_file(ts::fixture("sensor/message.json"));
    Message out = apply_transformation(spec, msg);
    CHECK(out.values == std::map<std::string, std::string>{
                            {"Datetime", "2010-12-25 14:30:00"}, {"Value", "212"}});
}

TEST_CASE("identical tag specs generate a copy-only spec") {
    Ontology o = Ontology::parse(ts::ontology_doc({"X", "Y"}));
    FormatDatabase fmts;
    UnitDatabase units;
    LookupTables tables;
    ReconConfig cfg;
    GenResult res = generate_transformation_spec(
        {"s", "op"}, {tag("A", "X"), tag("B", "Y")}, {tag("A", "X"), tag("B", "Y")}, o,
        fmts, units, tables, cfg);
    REQUIRE(res.spec.has_value());
    for (const auto& t : res.spec->tags) {
        REQUIRE(t.steps.size() == 1);
        CHECK(t.steps[0].kind == TransformStep::Kind::Copy);
    }
    Message out = apply_transformation(*res.spec, Message{{{"A", "1"}, {"B", "2"}}});
    CHECK(out.values == std::map<std::string, std::string>{{"A", "1"}, {"B", "2"}});
}

TEST_CASE("upstream without a temperature tag reports Value unbound") {
    SensorWorld w;
    std::vector<TagSpec> upstream = w.p.node("record").annotation.inputs;
    upstream.erase(std::remove_if(upstream.begin(), upstream.end(),
                                  [](const TagSpec& t) { return t.tag == "SensorTempC"; }),
                   upstream.end());
    const OperationDescriptor& op = w.reg.operation({"sensor-archive", "record"});
    GenResult res = generate_transformation_spec({"sensor-archive", "record"}, op.inputs,
                                                 upstream, w.o, w.fmts, w.units, w.tables,
                                                 w.cfg);
    CHECK_FALSE(res.spec.has_value());
    CHECK(res.unbound == std::vector<std::string>{"Value"});
}

TEST_CASE("lookup steps fire at design-declared points") {
    Ontology o = Ontology::parse(ts::ontology_doc({"Country"}));
    FormatDatabase fmts;
    UnitDatabase units;
    LookupTables tables = LookupTables::load_file(ts::fixture("defaults/tables.json"));
    ReconConfig cfg;
    GenResult res = generate_transformation_spec(
        {"s", "op"}, {tag("Country", "Country", "", "", "country-codes")},
        {tag("Country", "Country")}, o, fmts, units, tables, cfg);
    REQUIRE(res.spec.has_value());
    REQUIRE(res.spec->tags.size() == 1);
    CHECK(kinds(res.spec->tags[0]) ==
          std::vector<TransformStep::Kind>{TransformStep::Kind::Copy,
                                           TransformStep::Kind::Lookup});
    CHECK(apply_transformation(*res.spec, Message{{{"Country", "FR"}}}).values.at(
              "Country") == "France");
    CHECK_THROWS_AS(apply_transformation(*res.spec, Message{{{"Country", "XX"}}}),
                    LookupMissError);
}

TEST_CASE("apply_transformation requires every bound source tag") {
    SensorWorld w;
    GenResult res = w.generate();
    REQUIRE(res.spec.has_value());
    Message incomplete{{{"DateUS", "12-25-2010"}, {"Time", "14:30:00"}}};
    CHECK_THROWS_AS(apply_transformation(*res.spec, incomplete), MissingTagError);
    Message badly_formatted{{{"DateUS", "25/12/2010"},
                             {"Time", "14:30:00"},
                             {"SensorTempC", "100"}}};
    CHECK_THROWS_AS(apply_transformation(*res.spec, badly_formatted), ParseError);
}

TEST_CASE("transformation specs round-trip through JSON") {
    SensorWorld w;
    GenResult res = w.generate();
    REQUIRE(res.spec.has_value());
    TransformationSpec back = TransformationSpec::from_json(res.spec->to_json());
    CHECK(back.to_json().dump(2) == res.spec->to_json().dump(2));
    CHECK(back.tags == res.spec->tags);
    TransformationSpec reparsed = TransformationSpec::parse(res.spec->to_json().dump());
    CHECK(reparsed.tags == res.spec->tags);
}
