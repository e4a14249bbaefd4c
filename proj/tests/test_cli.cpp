#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::vector<std::string> sensor_compile(const std::string& out,
                                        std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"compile",
                               "--process",  ts::fixture("sensor/process.json"),
                               "--registry", ts::fixture("sensor/registry.json"),
                               "--ontology", ts::fixture("sensor/ontology.json"),
                               "--formats",  ts::fixture("sensor/formats.json"),
                               "--units",    ts::fixture("sensor/units.json"),
                               "--config",   ts::fixture("sensor/config.json"),
                               "--out-dir",  out};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

std::vector<std::string> dir_compile(const std::string& fix, const std::string& out) {
    return {"compile",
            "--process",  ts::fixture(fix + "/process.json"),
            "--registry", ts::fixture(fix + "/registry.json"),
            "--ontology", ts::fixture(fix + "/ontology.json"),
            "--out-dir",  out};
}

} // namespace

TEST_CASE("sensor scenario compiles cleanly with all artifacts") {
    ts::TempDir out("sensor");
    ts::RunResult r = ts::run_bin(sensor_compile(out.str()));
    CHECK(r.status == 0);
    CHECK(r.out.find("workflow: " + out.str() + "/workflow.xml") != std::string::npos);
    CHECK(r.out.find("report: " + out.str() + "/report.json") != std::string::npos);
    CHECK(r.out.find("uncovered:") == std::string::npos);

    for (const char* name : {"workflow.xml", "transform-sensor-archive-record.json",
                             "transform-sensor-archive-record.xsl", "report.json",
                             "patterns.json"}) {
        CHECK(fs::exists(out.file(name)));
    }
    std::string wf = slurp(out.file("workflow.xml"));
    CHECK(wf.find("<invoke") != std::string::npos);
    CHECK(wf.find("transform-sensor-archive-record.json") != std::string::npos);

    ts::json report = ts::json::parse(slurp(out.file("report.json")));
    CHECK(report.contains("plan"));
    CHECK(report.contains("unbound"));
    CHECK(report.at("unbound").empty());
    CHECK(report.at("timings_ms").contains("match"));
}

TEST_CASE("sensor simulation produces the converted reading") {
    ts::TempDir out("sensor-sim");
    REQUIRE(ts::run_bin(sensor_compile(out.str())).status == 0);
    ts::RunResult r = ts::run_bin({"simulate", "--out-dir", out.str(), "--mocks",
                                   ts::fixture("sensor/mocks.json"), "--message",
                                   ts::fixture("sensor/message.json")});
    REQUIRE(r.status == 0);
    ts::json msg = ts::json::parse(r.out);
    CHECK(msg.at("Datetime") == "2010-12-25 14:30:00");
    CHECK(msg.at("Value") == "212");
}

TEST_CASE("the transform subcommand applies an emitted spec directly") {
    ts::TempDir out("spec");
    REQUIRE(ts::run_bin(sensor_compile(out.str())).status == 0);
    ts::RunResult r = ts::run_bin({"transform", "--spec",
                                   out.file("transform-sensor-archive-record.json"),
                                   "--message", ts::fixture("sensor/message.json")});
    REQUIRE(r.status == 0);
    ts::json msg = ts::json::parse(r.out);
    CHECK(msg.at("Datetime") == "2010-12-25 14:30:00");
    CHECK(msg.at("Value") == "212");
}

TEST_CASE("partially matched processes exit with status 2 and stub the gap") {
    ts::TempDir out("partial");
    ts::RunResult r = ts::run_bin(dir_compile("partial", out.str()));
    CHECK(r.status == 2);
    CHECK(r.out.find("uncovered: sign (stubbed)") != std::string::npos);
    CHECK(slurp(out.file("workflow.xml")).find("<humanTask stub=\"stub-sign\"/>") !=
          std::string::npos);

    ts::RunResult noprompt =
        ts::run_bin({"simulate", "--out-dir", out.str(), "--mocks",
                     ts::fixture("partial/mocks.json"), "--message",
                     ts::fixture("partial/message.json")});
    CHECK(noprompt.status == 2);
    CHECK(noprompt.out.find("error:") != std::string::npos);
    CHECK(noprompt.out.find("needs prompt values") != std::string::npos);

    ts::RunResult ok =
        ts::run_bin({"simulate", "--out-dir", out.str(), "--mocks",
                     ts::fixture("partial/mocks.json"), "--message",
                     ts::fixture("partial/message.json"), "--prompt-file",
                     ts::fixture("partial/prompt.json")});
    REQUIRE(ok.status == 0);
    ts::json msg = ts::json::parse(ok.out);
    CHECK(msg.at("Contract") == "signed-by-hand");
}

TEST_CASE("assembly scenario compiles and simulates") {
    ts::TempDir out("assembly");
    CHECK(ts::run_bin(dir_compile("assembly", out.str())).status == 0);
    ts::RunResult r = ts::run_bin({"simulate", "--out-dir", out.str(), "--mocks",
                                   ts::fixture("assembly/mocks.json"), "--message",
                                   ts::fixture("assembly/message.json")});
    CHECK(r.status == 0);
    CHECK_NOTHROW(ts::json::parse(r.out));
}

TEST_CASE("broken inputs fail with an error line and status 1") {
    ts::TempDir out("broken");
    spit(out.file("process.json"), "{not json");
    ts::RunResult r = ts::run_bin({"compile", "--process", out.file("process.json"),
                                   "--registry", ts::fixture("sensor/registry.json"),
                                   "--ontology", ts::fixture("sensor/ontology.json"),
                                   "--out-dir", out.str()});
    CHECK(r.status == 1);
    CHECK(r.out.find("error:") != std::string::npos);

    ts::RunResult missing = ts::run_bin({"compile", "--process", out.file("nope.json"),
                                         "--registry", ts::fixture("sensor/registry.json"),
                                         "--ontology", ts::fixture("sensor/ontology.json"),
                                         "--out-dir", out.str()});
    CHECK(missing.status == 1);
    CHECK(missing.out.find("error:") != std::string::npos);
}

TEST_CASE("bad usage is rejected") {
    CHECK(ts::run_bin({"compile", "--bogus-flag"}).status != 0);
    CHECK(ts::run_bin({"frobnicate"}).status != 0);
    CHECK(ts::run_bin({}).status != 0);
}

TEST_CASE("an empty registry stubs every activity") {
    ts::TempDir out("empty-reg");
    spit(out.file("registry.json"), R"({"services": []})");
    ts::RunResult r = ts::run_bin({"compile", "--process", ts::fixture("sensor/process.json"),
                                   "--registry", out.file("registry.json"),
                                   "--ontology", ts::fixture("sensor/ontology.json"),
                                   "--formats", ts::fixture("sensor/formats.json"),
                                   "--units", ts::fixture("sensor/units.json"),
                                   "--out-dir", out.str()});
    CHECK(r.status == 2);
    CHECK(r.out.find("uncovered:") != std::string::npos);
    CHECK(slurp(out.file("workflow.xml")).find("<humanTask") != std::string::npos);
}

TEST_CASE("match explains ranked candidates deterministically") {
    std::vector<std::string> args{"match",
                                  "--process",  ts::fixture("sensor/process.json"),
                                  "--registry", ts::fixture("sensor/registry.json"),
                                  "--ontology", ts::fixture("sensor/ontology.json"),
                                  "--config",   ts::fixture("sensor/config.json")};
    ts::RunResult a = ts::run_bin(args);
    REQUIRE(a.status == 0);
    CHECK(a.out.find("run [record]") != std::string::npos);
    CHECK(a.out.find("combined=") != std::string::npos);
    CHECK(a.out.find("logic=") != std::string::npos);
    CHECK(a.out.find("plan:") != std::string::npos);
    CHECK(a.out.find("1. ") != std::string::npos);

    ts::RunResult b = ts::run_bin(args);
    CHECK(a.out == b.out);
}

TEST_CASE("thresholds can rule out every candidate") {
    ts::TempDir dir("strict");
    spit(dir.file("ontology.json"),
         ts::ontology_doc({"OpA", "SvcB"}, {},
                          {{"OpA", {"press part"}}, {"SvcB", {"paint housing"}}}));
    spit(dir.file("process.json"), ts::seq_process({ts::activity("a", "OpA")}));
    spit(dir.file("registry.json"),
         ts::registry_doc({ts::service("s", {ts::operation("op", "SvcB")})}));
    spit(dir.file("config.json"), R"({"tau": 0.95, "sigma": 1.0})");

    ts::RunResult m = ts::run_bin({"match", "--process", dir.file("process.json"),
                                   "--registry", dir.file("registry.json"),
                                   "--ontology", dir.file("ontology.json"),
                                   "--config", dir.file("config.json")});
    CHECK(m.status == 2);
    CHECK(m.out.find("(no candidate reaches the thresholds)") != std::string::npos);
    CHECK(m.out.find("uncovered: a") != std::string::npos);

    ts::RunResult c = ts::run_bin({"compile", "--process", dir.file("process.json"),
                                   "--registry", dir.file("registry.json"),
                                   "--ontology", dir.file("ontology.json"),
                                   "--config", dir.file("config.json"),
                                   "--out-dir", dir.str()});
    CHECK(c.status == 2);
    CHECK(c.out.find("uncovered: a (stubbed)") != std::string::npos);
}

TEST_CASE("canonical compiles are byte-identical across runs") {
    ts::TempDir a("canon-a"), b("canon-b");
    REQUIRE(ts::run_bin(sensor_compile(a.str(), {"--canonical"})).status == 0);
    REQUIRE(ts::run_bin(sensor_compile(b.str(), {"--canonical"})).status == 0);
    for (const char* name : {"workflow.xml", "transform-sensor-archive-record.json",
                             "transform-sensor-archive-record.xsl", "report.json",
                             "patterns.json"}) {
        CHECK(slurp(a.file(name)) == slurp(b.file(name)));
    }
    ts::json report = ts::json::parse(slurp(a.file("report.json")));
    for (const auto& [phase, ms] : report.at("timings_ms").items()) {
        (void)phase;
        CHECK(ms == 0);
    }
}

TEST_CASE("a warmed pattern store changes provenance but nothing else") {
    ts::TempDir cold("warm-cold"), warm("warm-warm");
    REQUIRE(ts::run_bin(sensor_compile(cold.str(), {"--canonical"})).status == 0);
    std::string store = warm.file("store.json");
    spit(store, slurp(cold.file("patterns.json")));
    REQUIRE(ts::run_bin(sensor_compile(warm.str(), {"--canonical", "--patterns", store}))
                .status == 0);

    CHECK(slurp(cold.file("workflow.xml")) == slurp(warm.file("workflow.xml")));
    CHECK(slurp(cold.file("transform-sensor-archive-record.json")) ==
          slurp(warm.file("transform-sensor-archive-record.json")));
    CHECK(slurp(store) == slurp(cold.file("patterns.json")));

    ts::json a = ts::json::parse(slurp(cold.file("report.json")));
    ts::json b = ts::json::parse(slurp(warm.file("report.json")));
    bool saw_pattern = false;
    for (auto& asg : b.at("plan").at("assignments")) {
        saw_pattern = saw_pattern || asg.at("provenance") == "pattern";
        asg["provenance"] = "fresh";
    }
    CHECK(saw_pattern);
    CHECK(a.dump() == b.dump());
}

TEST_CASE("use counts accumulate in a shared pattern store") {
    ts::TempDir dir("uses");
    std::string store = dir.file("patterns.json");
    REQUIRE(ts::run_bin(sensor_compile(dir.str(), {"--patterns", store})).status == 0);
    ts::json first = ts::json::parse(slurp(store));
    REQUIRE(!first.empty());
    for (const auto& rec : first) CHECK(rec.at("use_count") == 1);

    REQUIRE(ts::run_bin(sensor_compile(dir.str(), {"--patterns", store})).status == 0);
    ts::json second = ts::json::parse(slurp(store));
    REQUIRE(second.size() == first.size());
    for (const auto& rec : second) CHECK(rec.at("use_count") == 2);
}
