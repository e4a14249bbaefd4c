#pragma once

#include "medc/jsonio.hpp"
#include "medc/ontology.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"
#include "medc/textsim.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medc {

class PatternDatabase;

struct MatchConfig {
    Metric metric = Metric::Cosine;
    double alpha = 0.7; // logic-side weight
    double sigma = 0.8; // syntactic fallback threshold
    double tau = 0.5;   // acceptance threshold on combined
    int k = 3;          // max group size
    int m = 3;          // max composition length
    DegreeValues degrees;

    void validate() const; // ConfigError on violated bounds
    static MatchConfig from_json(const json& j);
    static MatchConfig load_file(const std::string& path);
};

struct MatchScore {
    double logic = 0.0;
    double syntactic = 0.0;
    double io_integrity = 0.0;
    double combined = 0.0;

    bool operator==(const MatchScore&) const = default;
};

// combined = alpha*(0.5*logic + 0.5*io) + (1-alpha)*syntactic, clamped
double combine_score(double logic, double io_integrity, double syntactic, const MatchConfig& cfg);

struct Assignment {
    ActivityGroup group;
    std::vector<OpRef> composition;
    MatchScore score;
    std::string provenance; // "pattern" or "fresh"
};

struct StubService {
    std::string activity_id;
    ServiceDescriptor service;
};

struct MatchPlan {
    std::vector<Assignment> assignments; // by topo index of first group activity
    std::vector<std::string> uncovered;  // topo order
    std::vector<StubService> stubs;      // one per uncovered activity

    json to_json() const;
};

// canonical digest: shape + ordered activity operation concepts + sorted external io
std::string group_signature(const ProcessModel& p, const ActivityGroup& g);

// Rejected is modelled as nullopt
std::optional<MatchScore> score_pair(const ActivityGroup& g, const std::vector<OpRef>& comp,
                                     const Registry& r, const Ontology& o,
                                     const MatchConfig& cfg, const ProcessModel& p);

struct Candidate {
    int group_index;
    std::vector<OpRef> composition;
};

// pure per-candidate scoring; parallel variant writes the same indexed results
std::vector<std::optional<MatchScore>>
score_candidates_serial(const std::vector<ActivityGroup>& groups, const std::vector<Candidate>& cands,
                        const Registry& r, const Ontology& o, const MatchConfig& cfg,
                        const ProcessModel& p);
std::vector<std::optional<MatchScore>>
score_candidates_parallel(const std::vector<ActivityGroup>& groups, const std::vector<Candidate>& cands,
                          const Registry& r, const Ontology& o, const MatchConfig& cfg,
                          const ProcessModel& p);

MatchPlan match_process(const ProcessModel& p, const Registry& r, const Ontology& o,
                        PatternDatabase& db, const MatchConfig& cfg,
                        const std::map<std::string, FilterCriteria>& criteria);

// prefilter criteria carried by an activity's annotation
FilterCriteria criteria_for(const Annotation& a);

} // namespace medc
