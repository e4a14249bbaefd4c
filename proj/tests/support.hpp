#pragma once

// Shared builders, random generators, and independent oracles for the test
// suites. Oracles deliberately re-derive expectations from first principles
// instead of calling back into the code under test.

#include "medc/jsonio.hpp"
#include "medc/matchmaker.hpp"
#include "medc/ontology.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ts {

using medc::json;

// ---------------------------------------------------------------- builders

inline json tagspec(const std::string& tag, const std::string& concept_id,
                    const std::string& format = "", const std::string& unit = "",
                    const std::string& lookup = "") {
    json t{{"tag", tag}, {"concept", concept_id}};
    if (!format.empty()) t["format"] = format;
    if (!unit.empty()) t["unit"] = unit;
    if (!lookup.empty()) t["lookup"] = lookup;
    return t;
}

inline json activity(const std::string& id, const std::string& op,
                     json inputs = json::array(), json outputs = json::array()) {
    return json{{"id", id},
                {"kind", "activity"},
                {"annotation",
                 {{"operation", op}, {"inputs", inputs}, {"outputs", outputs}}}};
}

// start -> acts[0] -> ... -> end
inline std::string seq_process(const std::vector<json>& acts) {
    json nodes = json::array();
    nodes.push_back({{"id", "start"}, {"kind", "start"}});
    for (const json& a : acts) nodes.push_back(a);
    nodes.push_back({{"id", "end"}, {"kind", "end"}});
    json edges = json::array();
    std::string prev = "start";
    for (const json& a : acts) {
        edges.push_back({prev, a.at("id")});
        prev = a.at("id");
    }
    edges.push_back({prev, "end"});
    return json{{"nodes", nodes}, {"edges", edges}}.dump();
}

inline std::string ontology_doc(
    const std::vector<std::string>& concepts,
    const std::vector<std::pair<std::string, std::string>>& subs = {},
    const std::map<std::string, std::vector<std::string>>& labels = {},
    const std::vector<std::pair<std::string, std::string>>& equiv = {}) {
    json j{{"concepts", concepts}};
    json sj = json::array();
    for (const auto& [c, p] : subs) sj.push_back({c, p});
    j["subclass_of"] = sj;
    if (!equiv.empty()) {
        json ej = json::array();
        for (const auto& [a, b] : equiv) ej.push_back({a, b});
        j["equivalent"] = ej;
    }
    if (!labels.empty()) j["labels"] = labels;
    return j.dump();
}

inline json operation(const std::string& id, const std::string& op_concept,
                      json inputs = json::array(), json outputs = json::array(),
                      const std::string& name = "",
                      const std::vector<std::string>& behaviour = {}) {
    json o{{"id", id}, {"operation", op_concept}, {"inputs", inputs}, {"outputs", outputs}};
    if (!name.empty()) o["name"] = name;
    if (!behaviour.empty()) o["behaviour"] = behaviour;
    return o;
}

inline json service(const std::string& id, std::vector<json> ops,
                    const std::string& partner = "", const std::string& domain = "",
                    json nfr = json::object()) {
    json s{{"id", id}, {"operations", ops}};
    if (!partner.empty()) s["partner"] = partner;
    if (!domain.empty()) s["domain"] = domain;
    if (!nfr.empty()) s["nfr"] = nfr;
    return s;
}

inline std::string registry_doc(const std::vector<json>& services) {
    return json{{"services", services}}.dump();
}

// ------------------------------------------------- random process generator

// Emits valid block-structured processes: nested sequences with 2-3-branch
// parallel/exclusive blocks, every branch holding at least one activity.
struct ProcGen {
    std::mt19937 rng;
    int counter = 0;
    int remaining;
    int reserved = 0;
    json nodes = json::array();
    json edges = json::array();
    std::vector<std::string> op_pool;

    ProcGen(uint32_t seed, int max_activities,
            std::vector<std::string> ops = {"Alpha", "Beta", "Gamma", "Delta"})
        : rng(seed), remaining(max_activities), op_pool(std::move(ops)) {}

    int rnd(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    std::string fresh(const char* p) { return p + std::to_string(++counter); }
    int avail() const { return remaining - reserved; }

    void edge(const std::string& a, const std::string& b, const std::string& cond = "") {
        if (cond.empty()) edges.push_back({a, b});
        else edges.push_back({a, b, cond});
    }

    std::pair<std::string, std::string> single() {
        --remaining;
        std::string id = fresh("a");
        nodes.push_back(activity(id, op_pool[rnd(0, int(op_pool.size()) - 1)]));
        return {id, id};
    }

    std::pair<std::string, std::string> block(int depth) {
        int nb = std::min(2 + (rnd(0, 2) == 0 ? 1 : 0), avail());
        bool excl = rnd(0, 1) == 1;
        std::string s = fresh("g"), j = fresh("g");
        nodes.push_back({{"id", s}, {"kind", "gateway_split"},
                         {"gateway_type", excl ? "exclusive" : "parallel"}});
        nodes.push_back({{"id", j}, {"kind", "gateway_join"},
                         {"gateway_type", excl ? "exclusive" : "parallel"}});
        reserved += nb;
        for (int b = 0; b < nb; ++b) {
            --reserved;
            auto [e, x] = chain(depth + 1);
            edge(s, e, excl ? "Route=r" + std::to_string(b) : "");
            edge(x, j);
        }
        return {s, j};
    }

    std::pair<std::string, std::string> chain(int depth) {
        auto part = [&]() {
            if (depth < 2 && avail() >= 2 && rnd(0, 3) == 0) return block(depth);
            return single();
        };
        auto [entry, exit] = part();
        while (avail() > 0 && rnd(0, 2) == 0) {
            auto [e, x] = part();
            edge(exit, e);
            exit = x;
        }
        return {entry, exit};
    }

    std::string build() {
        nodes.push_back({{"id", "start"}, {"kind", "start"}});
        nodes.push_back({{"id", "end"}, {"kind", "end"}});
        auto [e, x] = chain(0);
        edge("start", e);
        edge(x, "end");
        return json{{"nodes", nodes}, {"edges", edges}}.dump();
    }
};

// ------------------------------------------------------ group subset oracle

// Independent run/block decision over raw nodes and edges.
struct GroupOracle {
    const medc::ProcessModel& p;
    std::map<std::string, std::vector<std::string>> succ;
    std::set<std::pair<std::string, std::string>> direct;

    explicit GroupOracle(const medc::ProcessModel& pm) : p(pm) {
        for (const auto& e : p.edges()) {
            succ[e.from].push_back(e.to);
            direct.insert({e.from, e.to});
        }
    }

    std::string matching_join(const std::string& split) const {
        std::string cur = succ.at(split).front();
        int depth = 0;
        while (true) {
            const auto& n = p.node(cur);
            if (n.kind == medc::NodeKind::GatewaySplit) {
                ++depth;
            } else if (n.kind == medc::NodeKind::GatewayJoin) {
                if (depth == 0) return cur;
                --depth;
            }
            cur = succ.at(cur).front();
        }
    }

    std::set<std::string> block_members(const std::string& split) const {
        std::string join = matching_join(split);
        std::set<std::string> acts, seen;
        std::vector<std::string> stack = succ.at(split);
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            if (cur == join || seen.count(cur)) continue;
            seen.insert(cur);
            if (p.node(cur).kind == medc::NodeKind::Activity) acts.insert(cur);
            for (const auto& nx : succ.at(cur)) stack.push_back(nx);
        }
        return acts;
    }

    // every valid (activity set, shape) pair with |set| <= k
    std::set<std::pair<std::set<std::string>, medc::GroupShape>> expected(int k) const {
        std::set<std::pair<std::set<std::string>, medc::GroupShape>> out;
        std::vector<std::string> acts = p.activity_order();
        int n = int(acts.size());
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            std::vector<std::string> sub;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) sub.push_back(acts[i]);
            if (int(sub.size()) > k) continue;
            std::sort(sub.begin(), sub.end(), [&](const auto& a, const auto& b) {
                return p.topo_index(a) < p.topo_index(b);
            });
            bool run = true;
            for (size_t i = 0; i + 1 < sub.size(); ++i)
                if (!direct.count({sub[i], sub[i + 1]})) { run = false; break; }
            if (run) out.insert({{sub.begin(), sub.end()}, medc::GroupShape::Run});
        }
        for (const auto& n2 : p.nodes()) {
            if (n2.kind != medc::NodeKind::GatewaySplit) continue;
            std::set<std::string> mem = block_members(n2.id);
            if (!mem.empty() && int(mem.size()) <= k)
                out.insert({mem, medc::GroupShape::Block});
        }
        return out;
    }
};

// ------------------------------------------------- matchmaker cover oracle

// Exhaustive best disjoint-cover search: every group from enumerate_groups,
// every ordered distinct composition of length 1..m, same pairwise scorer,
// plain set recursion over activities.
struct CoverOracle {
    const medc::ProcessModel& p;
    const medc::Registry& r;
    const medc::Ontology& o;
    const medc::MatchConfig& cfg;

    struct Best {
        std::set<std::string> members;
        double score = 0.0;
    };
    std::vector<Best> bests;

    CoverOracle(const medc::ProcessModel& pm, const medc::Registry& reg,
                const medc::Ontology& ont, const medc::MatchConfig& c)
        : p(pm), r(reg), o(ont), cfg(c) {
        std::vector<medc::OpRef> pool = r.all_operations();
        for (const auto& g : medc::enumerate_groups(p, cfg.k)) {
            double best = -1.0;
            std::vector<medc::OpRef> comp;
            search_comps(g, pool, comp, best);
            if (best >= 0.0)
                bests.push_back({{g.activity_ids.begin(), g.activity_ids.end()}, best});
        }
    }

    void search_comps(const medc::ActivityGroup& g, const std::vector<medc::OpRef>& pool,
                      std::vector<medc::OpRef>& comp, double& best) {
        if (!comp.empty()) {
            auto s = medc::score_pair(g, comp, r, o, cfg, p);
            if (s && accepted(*s) && s->combined > best) best = s->combined;
        }
        if (int(comp.size()) == cfg.m) return;
        for (const auto& op : pool) {
            if (std::find(comp.begin(), comp.end(), op) != comp.end()) continue;
            comp.push_back(op);
            search_comps(g, pool, comp, best);
            comp.pop_back();
        }
    }

    bool accepted(const medc::MatchScore& s) const {
        return s.combined >= cfg.tau - 1e-9 ||
               (s.logic <= 1e-9 && s.syntactic >= cfg.sigma - 1e-9);
    }

    double best_total() const {
        std::vector<std::string> acts = p.activity_order();
        return solve(std::set<std::string>(acts.begin(), acts.end()));
    }

    double solve(const std::set<std::string>& left) const {
        if (left.empty()) return 0.0;
        std::string pivot = *left.begin();
        std::set<std::string> without = left;
        without.erase(pivot);
        double best = solve(without); // pivot stays uncovered
        for (const auto& b : bests) {
            if (!b.members.count(pivot)) continue;
            bool inside = std::all_of(b.members.begin(), b.members.end(),
                                      [&](const std::string& a) { return left.count(a); });
            if (!inside) continue;
            std::set<std::string> rest = left;
            for (const auto& a : b.members) rest.erase(a);
            best = std::max(best, b.score + solve(rest));
        }
        return best;
    }
};

// ------------------------------------------------- random match instances

struct MatchInstance {
    std::string ontology, process, registry;
};

inline MatchInstance gen_match_instance(uint32_t seed, int max_acts = 5, int max_ops = 6) {
    std::mt19937 rng(seed);
    auto rnd = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::vector<std::string> ops = {"Alpha", "Beta", "Gamma", "Delta"};
    std::vector<std::string> data = {"X", "Y", "Z"};
    std::vector<std::string> concepts = {"Thing"};
    concepts.insert(concepts.end(), ops.begin(), ops.end());
    concepts.insert(concepts.end(), data.begin(), data.end());

    std::vector<std::pair<std::string, std::string>> subs;
    for (size_t i = 1; i < concepts.size(); ++i) subs.push_back({concepts[i], "Thing"});
    if (rnd(0, 1)) subs.push_back({"Beta", "Alpha"}); // Plugin/Subsumes traffic
    if (rnd(0, 1)) subs.push_back({"Z", "Y"});

    std::map<std::string, std::vector<std::string>> labels{
        {"Alpha", {"alpha work"}},  {"Beta", {"beta work"}},
        {"Gamma", {"gamma task"}},  {"Delta", {"delta task"}},
        {"X", {"x value"}},         {"Y", {"y value"}},
        {"Z", {"z value"}}};

    MatchInstance inst;
    inst.ontology = ontology_doc(concepts, subs, labels);

    ProcGen pg(seed * 2654435761u + 1, rnd(1, max_acts), ops);
    // attach light I/O to exercise io_integrity without rigging outcomes
    inst.process = pg.build();
    json pj = json::parse(inst.process);
    for (json& n : pj.at("nodes")) {
        if (n.at("kind") != "activity") continue;
        if (rnd(0, 2) == 0)
            n["annotation"]["inputs"] = json::array({tagspec("In", data[rnd(0, 2)])});
        if (rnd(0, 1) == 0)
            n["annotation"]["outputs"] = json::array({tagspec("Out", data[rnd(0, 2)])});
    }
    inst.process = pj.dump();

    int total = rnd(1, max_ops);
    int split = total > 1 ? rnd(1, total - 1) : 1;
    std::vector<json> svc_ops[2];
    for (int i = 0; i < total; ++i) {
        json in = json::array(), out = json::array();
        if (rnd(0, 2) == 0) in.push_back(tagspec("p", data[rnd(0, 2)]));
        if (rnd(0, 1) == 0) out.push_back(tagspec("q", data[rnd(0, 2)]));
        std::vector<std::string> beh;
        if (rnd(0, 3) == 0) beh = {ops[rnd(0, 3)], ops[rnd(0, 3)]};
        svc_ops[i < split ? 0 : 1].push_back(
            operation("op" + std::to_string(i), ops[rnd(0, 3)], in, out,
                      "do thing " + std::to_string(i), beh));
    }
    std::vector<json> svcs;
    if (!svc_ops[0].empty()) svcs.push_back(service("s0", svc_ops[0]));
    if (!svc_ops[1].empty()) svcs.push_back(service("s1", svc_ops[1]));
    inst.registry = registry_doc(svcs);
    return inst;
}

// ------------------------------------------------------------ CLI harness

struct RunResult {
    int status = -1;
    std::string out; // stdout + stderr interleaved
};

inline std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    return q + "'";
}

inline RunResult run_bin(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(MEDC_BIN);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    RunResult res;
    if (!pipe) return res;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, n);
    int rc = pclose(pipe);
    res.status = (rc >= 256) ? rc / 256 : rc; // WEXITSTATUS without <sys/wait.h>
    return res;
}

inline std::string fixture(const std::string& rel) {
    return std::string(FIXTURES_DIR) + "/" + rel;
}

// fresh scratch directory, removed on destruction
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& hint) {
        path = std::filesystem::temp_directory_path() /
               ("medc-" + hint + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& rel) const { return (path / rel).string(); }
};

} // namespace ts
