#include "medc/jsonio.hpp"
#include "medc/matchmaker.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace medc;

namespace {

// synthetic instance: a long activity chain over a small taxonomy, scored
// against a registry dense enough to make candidate enumeration non-trivial
struct Instance {
    Ontology ontology;
    ProcessModel process;
    Registry registry;
};

Instance build_instance(int activities, int services, int ops_per_service, int concepts) {
    json onto;
    onto["concepts"].push_back("Thing");
    onto["labels"]["Thing"] = {"thing"};
    for (int c = 0; c < concepts; ++c) {
        std::string id = "C" + std::to_string(c);
        onto["concepts"].push_back(id);
        onto["subclass_of"].push_back({id, "Thing"});
        onto["labels"][id] = {"concept number " + std::to_string(c), "operation " + std::to_string(c % 7)};
    }

    json proc;
    proc["nodes"].push_back({{"id", "start"}, {"kind", "start"}});
    std::string prev = "start";
    for (int i = 0; i < activities; ++i) {
        std::string id = "a" + std::to_string(i);
        json ann = {{"operation", "C" + std::to_string(i % concepts)}};
        proc["nodes"].push_back({{"id", id}, {"kind", "activity"}, {"annotation", ann}});
        proc["edges"].push_back({prev, id});
        prev = id;
    }
    proc["nodes"].push_back({{"id", "end"}, {"kind", "end"}});
    proc["edges"].push_back({prev, "end"});

    json reg;
    for (int s = 0; s < services; ++s) {
        json svc = {{"id", "s" + std::to_string(s)},
                    {"name", "service " + std::to_string(s)},
                    {"endpoint", "mock://s" + std::to_string(s)}};
        for (int o = 0; o < ops_per_service; ++o) {
            svc["operations"].push_back({{"id", "op" + std::to_string(o)},
                                         {"name", "operation " + std::to_string((s + o) % 7)},
                                         {"operation", "C" + std::to_string((s * ops_per_service + o) % concepts)}});
        }
        reg["services"].push_back(svc);
    }

    return {Ontology::parse(onto.dump()), ProcessModel::parse(proc.dump()), Registry::parse(reg.dump())};
}

std::vector<Candidate> enumerate_candidates(const Instance& in, const std::vector<ActivityGroup>& groups,
                                            const MatchConfig& cfg) {
    std::vector<OpRef> pool = prefilter(in.registry, FilterCriteria{});
    std::vector<Candidate> cands;
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        std::vector<OpRef> cur;
        std::function<void()> extend = [&]() {
            if (!cur.empty()) cands.push_back({static_cast<int>(gi), cur});
            if (cur.size() == static_cast<size_t>(cfg.m)) return;
            for (const OpRef& op : pool) {
                if (std::find(cur.begin(), cur.end(), op) != cur.end()) continue;
                cur.push_back(op);
                extend();
                cur.pop_back();
            }
        };
        extend();
    }
    return cands;
}

double run_ms(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    int activities = argc > 1 ? std::atoi(argv[1]) : 12;
    int services = argc > 2 ? std::atoi(argv[2]) : 14;

    Instance in = build_instance(activities, services, 3, 9);
    MatchConfig cfg;
    cfg.m = 2; // composition length drives the candidate count quadratically

    std::vector<ActivityGroup> groups = enumerate_groups(in.process, cfg.k);
    std::vector<Candidate> cands = enumerate_candidates(in, groups, cfg);
    std::printf("groups: %zu, candidates: %zu\n", groups.size(), cands.size());

    std::vector<std::optional<MatchScore>> serial, parallel;
    double serial_ms = run_ms([&] {
        serial = score_candidates_serial(groups, cands, in.registry, in.ontology, cfg, in.process);
    });
    double parallel_ms = run_ms([&] {
        parallel = score_candidates_parallel(groups, cands, in.registry, in.ontology, cfg, in.process);
    });

    bool identical = serial.size() == parallel.size();
    for (size_t i = 0; identical && i < serial.size(); ++i) {
        if (serial[i].has_value() != parallel[i].has_value()) identical = false;
        else if (serial[i] && !(*serial[i] == *parallel[i])) identical = false;
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("serial:   %9.2f ms  (%.0f candidates/s)\n", serial_ms, 1000.0 * cands.size() / serial_ms);
    std::printf("parallel: %9.2f ms  (%.0f candidates/s)\n", parallel_ms, 1000.0 * cands.size() / parallel_ms);
    std::printf("speedup:  %.2fx\n", serial_ms / parallel_ms);
    std::printf("results identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
