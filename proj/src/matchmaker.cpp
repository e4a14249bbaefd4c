#include "medc/matchmaker.hpp"
#include "medc/errors.hpp"
#include "medc/model_json.hpp"
#include "medc/pattern_db.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <set>

namespace medc {

namespace {

constexpr double kEps = 1e-9;

double get_number(const json& j, const char* key, double fallback, const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback, const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(context + ": \"" + key + "\" must be an integer");
    return j.at(key).get<int>();
}

} // namespace

void MatchConfig::validate() const {
    auto unit_range = [](double v, const char* name) {
        if (v < 0.0 || v > 1.0) {
            throw ConfigError(std::string("config: ") + name + " must lie in [0,1]");
        }
    };
    unit_range(alpha, "alpha");
    unit_range(sigma, "sigma");
    unit_range(tau, "tau");
    if (k < 1) throw ConfigError("config: k must be >= 1");
    if (m < 1) throw ConfigError("config: m must be >= 1");
    degrees.validate();
}

MatchConfig MatchConfig::from_json(const json& j) {
    std::string ctx = "config";
    reject_unknown_keys(j, {"metric", "alpha", "sigma", "tau", "k", "m", "degrees", "round_digits"}, ctx);
    MatchConfig cfg;
    if (j.contains("metric")) cfg.metric = metric_from_name(require_string(j, "metric", ctx));
    cfg.alpha = get_number(j, "alpha", cfg.alpha, ctx);
    cfg.sigma = get_number(j, "sigma", cfg.sigma, ctx);
    cfg.tau = get_number(j, "tau", cfg.tau, ctx);
    cfg.k = get_int(j, "k", cfg.k, ctx);
    cfg.m = get_int(j, "m", cfg.m, ctx);
    if (j.contains("degrees")) {
        const json& d = j.at("degrees");
        reject_unknown_keys(d, {"exact", "plugin", "subsumes", "fail"}, ctx + ".degrees");
        cfg.degrees.exact = get_number(d, "exact", cfg.degrees.exact, ctx);
        cfg.degrees.plugin = get_number(d, "plugin", cfg.degrees.plugin, ctx);
        cfg.degrees.subsumes = get_number(d, "subsumes", cfg.degrees.subsumes, ctx);
        cfg.degrees.fail = get_number(d, "fail", cfg.degrees.fail, ctx);
    }
    cfg.validate();
    return cfg;
}

MatchConfig MatchConfig::load_file(const std::string& path) {
    return from_json(load_json_file(path));
}

double combine_score(double logic, double io_integrity, double syntactic, const MatchConfig& cfg) {
    double c = cfg.alpha * (0.5 * logic + 0.5 * io_integrity) + (1.0 - cfg.alpha) * syntactic;
    return std::clamp(c, 0.0, 1.0);
}

FilterCriteria criteria_for(const Annotation& a) {
    FilterCriteria c;
    if (!a.partner.empty()) c.partner = a.partner;
    if (!a.domain.empty()) c.domain = a.domain;
    c.nfr_required = a.nfr;
    return c;
}

std::string group_signature(const ProcessModel& p, const ActivityGroup& g) {
    std::string s = g.shape == GroupShape::Run ? "run" : "block";
    s += "|ops:";
    std::vector<std::string> ops;
    for (const auto& id : g.activity_ids) ops.push_back(p.node(id).annotation.operation_concept);
    s += join(ops, ",");
    auto [req, prod] = external_io(p, g);
    std::vector<std::string> in, out;
    for (const auto& t : req) in.push_back(t.concept_id);
    for (const auto& t : prod) out.push_back(t.concept_id);
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    s += "|in:" + join(in, ",");
    s += "|out:" + join(out, ",");
    return s;
}

std::optional<MatchScore> score_pair(const ActivityGroup& g, const std::vector<OpRef>& comp,
                                     const Registry& r, const Ontology& o,
                                     const MatchConfig& cfg, const ProcessModel& p) {
    if (comp.empty()) throw ConfigError("score_pair: empty composition");
    if (comp.size() > static_cast<size_t>(cfg.m)) {
        throw ConfigError("score_pair: composition longer than m");
    }
    const size_t n = g.activity_ids.size();

    std::vector<const OperationDescriptor*> ops;
    for (const auto& ref : comp) ops.push_back(&r.operation(ref));

    // assignment pool: each member contributes its operation concept plus any
    // behaviour sub-step concepts, so one operation can absorb several activities
    struct Slot {
        int member;
        int index;
        std::string concept_id;
        std::vector<std::string> texts;
    };
    std::vector<Slot> slots;
    for (size_t j = 0; j < ops.size(); ++j) {
        std::vector<std::string> concepts{ops[j]->operation_concept};
        concepts.insert(concepts.end(), ops[j]->behaviour.begin(), ops[j]->behaviour.end());
        std::string op_name = ops[j]->name.empty() ? ops[j]->id : ops[j]->name;
        for (size_t s = 0; s < concepts.size(); ++s) {
            Slot slot{static_cast<int>(j), static_cast<int>(s), concepts[s], {}};
            for (const auto& label : o.display_labels(concepts[s])) {
                slot.texts.push_back(label + " " + op_name);
            }
            slots.push_back(std::move(slot));
        }
    }

    std::vector<std::string> act_concepts(n);
    std::vector<std::vector<std::string>> act_texts(n);
    for (size_t i = 0; i < n; ++i) {
        const Annotation& a = p.node(g.activity_ids[i]).annotation;
        act_concepts[i] = a.operation_concept;
        act_texts[i] = o.display_labels(a.operation_concept);
    }

    struct Pair {
        size_t act;
        size_t slot;
        double value;
        double sim;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * slots.size());
    for (size_t i = 0; i < n; ++i) {
        for (size_t s = 0; s < slots.size(); ++s) {
            Degree d = o.degree_of_match(act_concepts[i], slots[s].concept_id);
            double sim = annotation_similarity(act_texts[i], slots[s].texts, cfg.metric);
            pairs.push_back({i, s, cfg.degrees.value(d), sim});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.act != b.act) return a.act < b.act;
        return a.slot < b.slot;
    });

    std::vector<bool> act_used(n, false), slot_used(slots.size(), false);
    std::vector<bool> member_has_logic(ops.size(), false);
    double logic_sum = 0.0, syn_sum = 0.0;
    for (const Pair& pr : pairs) {
        if (act_used[pr.act] || slot_used[pr.slot]) continue;
        act_used[pr.act] = true;
        slot_used[pr.slot] = true;
        logic_sum += pr.value;
        syn_sum += pr.sim;
        if (pr.value > cfg.degrees.fail + kEps) {
            member_has_logic[slots[pr.slot].member] = true;
        }
    }
    double logic = logic_sum / static_cast<double>(n);
    double syntactic = syn_sum / static_cast<double>(n);

    // io integrity: every member input and every group-required input should
    // be satisfiable by what flows in (group inputs, earlier member outputs)
    auto [req, prod] = external_io(p, g);
    (void)prod;
    size_t denom = req.size(), num = 0;
    std::vector<bool> member_unbound(ops.size(), false);
    std::vector<TagSpec> avail = req;
    for (size_t j = 0; j < ops.size(); ++j) {
        for (const TagSpec& t : ops[j]->inputs) {
            ++denom;
            bool bound = std::any_of(avail.begin(), avail.end(), [&](const TagSpec& s) {
                return o.degree_of_match(t.concept_id, s.concept_id) != Degree::Fail;
            });
            if (bound) ++num;
            else member_unbound[j] = true;
        }
        for (const TagSpec& out : ops[j]->outputs) avail.push_back(out);
    }
    for (const TagSpec& rq : req) {
        bool consumed = false;
        for (size_t j = 0; j < ops.size() && !consumed; ++j) {
            for (const TagSpec& t : ops[j]->inputs) {
                if (o.degree_of_match(t.concept_id, rq.concept_id) != Degree::Fail) {
                    consumed = true;
                    break;
                }
            }
        }
        if (consumed) ++num;
    }
    double io = denom == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(denom);

    for (size_t j = 0; j < ops.size(); ++j) {
        if (member_unbound[j] && !member_has_logic[j]) return std::nullopt; // model integrity violated
    }

    MatchScore ms;
    ms.logic = logic;
    ms.syntactic = syntactic;
    ms.io_integrity = io;
    ms.combined = combine_score(logic, io, syntactic, cfg);
    return ms;
}

std::vector<std::optional<MatchScore>>
score_candidates_serial(const std::vector<ActivityGroup>& groups, const std::vector<Candidate>& cands,
                        const Registry& r, const Ontology& o, const MatchConfig& cfg,
                        const ProcessModel& p) {
    std::vector<std::optional<MatchScore>> res(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) {
        res[i] = score_pair(groups[cands[i].group_index], cands[i].composition, r, o, cfg, p);
    }
    return res;
}

std::vector<std::optional<MatchScore>>
score_candidates_parallel(const std::vector<ActivityGroup>& groups, const std::vector<Candidate>& cands,
                          const Registry& r, const Ontology& o, const MatchConfig& cfg,
                          const ProcessModel& p) {
    std::vector<std::optional<MatchScore>> res(cands.size());
    const long count = static_cast<long>(cands.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) {
        res[i] = score_pair(groups[cands[i].group_index], cands[i].composition, r, o, cfg, p);
    }
    return res;
}

namespace {

bool accepted(const MatchScore& s, const MatchConfig& cfg) {
    if (s.combined >= cfg.tau - kEps) return true;
    return s.logic <= kEps && s.syntactic >= cfg.sigma - kEps;
}

std::string comp_signature(const std::vector<OpRef>& comp) {
    std::vector<std::string> parts;
    for (const auto& ref : comp) parts.push_back(ref.service_id + "/" + ref.operation_id);
    return join(parts, ",");
}

json service_to_json(const ServiceDescriptor& s) {
    json ops = json::array();
    for (const auto& op : s.operations) {
        json oj;
        oj["id"] = op.id;
        if (!op.name.empty()) oj["name"] = op.name;
        oj["operation"] = op.operation_concept;
        json ins = json::array(), outs = json::array();
        for (const auto& t : op.inputs) ins.push_back(tagspec_to_json(t));
        for (const auto& t : op.outputs) outs.push_back(tagspec_to_json(t));
        oj["inputs"] = ins;
        oj["outputs"] = outs;
        if (!op.behaviour.empty()) oj["behaviour"] = op.behaviour;
        ops.push_back(oj);
    }
    json j;
    j["id"] = s.id;
    if (!s.name.empty()) j["name"] = s.name;
    if (!s.endpoint.empty()) j["endpoint"] = s.endpoint;
    if (!s.partner.empty()) j["partner"] = s.partner;
    if (!s.domain.empty()) j["domain"] = s.domain;
    if (!s.nfr.empty()) j["nfr"] = s.nfr;
    j["operations"] = ops;
    return j;
}

json score_to_json(const MatchScore& s) {
    return {{"logic", s.logic},
            {"syntactic", s.syntactic},
            {"io_integrity", s.io_integrity},
            {"combined", s.combined}};
}

StubService make_stub(const ProcessModel& p, const std::string& activity_id) {
    const Annotation& a = p.node(activity_id).annotation;
    StubService stub;
    stub.activity_id = activity_id;
    ServiceDescriptor& s = stub.service;
    s.id = "stub-" + activity_id;
    s.name = "Stub for " + activity_id;
    s.endpoint = "stub:human-task";
    s.partner = a.partner;
    s.domain = a.domain;
    OperationDescriptor op;
    op.id = activity_id;
    op.name = activity_id;
    op.operation_concept = a.operation_concept;
    op.inputs = a.inputs;
    op.outputs = a.outputs;
    s.operations.push_back(std::move(op));
    return stub;
}

} // namespace

json MatchPlan::to_json() const {
    json ja = json::array();
    for (const auto& a : assignments) {
        json comp = json::array();
        for (const auto& ref : a.composition) {
            comp.push_back({{"service", ref.service_id}, {"operation", ref.operation_id}});
        }
        ja.push_back({{"group",
                       {{"activities", a.group.activity_ids},
                        {"shape", a.group.shape == GroupShape::Run ? "run" : "block"}}},
                      {"composition", comp},
                      {"score", score_to_json(a.score)},
                      {"provenance", a.provenance}});
    }
    json js = json::array();
    for (const auto& st : stubs) {
        js.push_back({{"activity", st.activity_id}, {"service", service_to_json(st.service)}});
    }
    return {{"assignments", ja}, {"uncovered", uncovered}, {"stubs", js}};
}

MatchPlan match_process(const ProcessModel& p, const Registry& r, const Ontology& o,
                        PatternDatabase& db, const MatchConfig& cfg,
                        const std::map<std::string, FilterCriteria>& criteria) {
    cfg.validate();
    p.check_concepts(o);
    r.check_concepts(o);

    const std::vector<std::string>& acts = p.activity_order();
    if (acts.size() > 64) throw ConfigError("match: more than 64 activities not supported");

    std::vector<ActivityGroup> groups = enumerate_groups(p, cfg.k);
    std::vector<uint64_t> gmask(groups.size(), 0);
    std::vector<std::string> gsig(groups.size());
    std::vector<std::vector<OpRef>> gpool(groups.size());
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        for (const auto& id : groups[gi].activity_ids) {
            gmask[gi] |= uint64_t{1} << p.topo_index(id);
        }
        gsig[gi] = group_signature(p, groups[gi]);
        // the pool honours every member's prefilter at once
        std::vector<OpRef> pool;
        bool first = true;
        for (const auto& id : groups[gi].activity_ids) {
            FilterCriteria fc;
            auto it = criteria.find(id);
            if (it != criteria.end()) fc = it->second;
            std::vector<OpRef> mine = prefilter(r, fc);
            if (first) {
                pool = std::move(mine);
                first = false;
            } else {
                std::vector<OpRef> keep;
                std::set_intersection(pool.begin(), pool.end(), mine.begin(), mine.end(),
                                      std::back_inserter(keep));
                pool = std::move(keep);
            }
        }
        gpool[gi] = std::move(pool);
    }

    MatchPlan plan;
    uint64_t claimed = 0;

    // step (i): pattern claims, largest groups first
    std::vector<size_t> claim_order(groups.size());
    for (size_t i = 0; i < claim_order.size(); ++i) claim_order[i] = i;
    std::sort(claim_order.begin(), claim_order.end(), [&](size_t a, size_t b) {
        if (groups[a].activity_ids.size() != groups[b].activity_ids.size()) {
            return groups[a].activity_ids.size() > groups[b].activity_ids.size();
        }
        return p.topo_index(groups[a].activity_ids.front()) < p.topo_index(groups[b].activity_ids.front());
    });
    for (size_t gi : claim_order) {
        if (gmask[gi] & claimed) continue;
        const PatternRecord* rec = db.lookup(gsig[gi]);
        if (!rec) continue;
        bool usable = rec->composition.size() <= static_cast<size_t>(cfg.m);
        for (const auto& ref : rec->composition) {
            if (!usable) break;
            usable = std::binary_search(gpool[gi].begin(), gpool[gi].end(), ref);
        }
        if (!usable) continue;
        std::optional<MatchScore> ms = score_pair(groups[gi], rec->composition, r, o, cfg, p);
        if (!ms || !accepted(*ms, cfg)) continue; // stale record: fall back to fresh search
        plan.assignments.push_back({groups[gi], rec->composition, *ms, "pattern"});
        claimed |= gmask[gi];
    }

    // step (ii): fresh search over the rest
    std::vector<Candidate> cands;
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        if (gmask[gi] & claimed) continue;
        const std::vector<OpRef>& pool = gpool[gi];
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

#ifdef _OPENMP
    std::vector<std::optional<MatchScore>> scores =
        score_candidates_parallel(groups, cands, r, o, cfg, p);
#else
    std::vector<std::optional<MatchScore>> scores =
        score_candidates_serial(groups, cands, r, o, cfg, p);
#endif

    struct GroupBest {
        bool has = false;
        std::vector<OpRef> comp;
        MatchScore score;
        std::string sig;
    };
    std::vector<GroupBest> best(groups.size());
    for (size_t ci = 0; ci < cands.size(); ++ci) {
        if (!scores[ci] || !accepted(*scores[ci], cfg)) continue;
        GroupBest& b = best[cands[ci].group_index];
        std::string sig = comp_signature(cands[ci].composition);
        bool better = false;
        if (!b.has) {
            better = true;
        } else if (scores[ci]->combined > b.score.combined + kEps) {
            better = true;
        } else if (scores[ci]->combined >= b.score.combined - kEps) {
            if (cands[ci].composition.size() != b.comp.size()) {
                better = cands[ci].composition.size() < b.comp.size();
            } else {
                better = sig < b.sig;
            }
        }
        if (better) {
            b.has = true;
            b.comp = cands[ci].composition;
            b.score = *scores[ci];
            b.sig = std::move(sig);
        }
    }

    uint64_t full = 0;
    for (const auto& id : acts) {
        uint64_t bit = uint64_t{1} << p.topo_index(id);
        if (!(claimed & bit)) full |= bit;
    }

    std::vector<std::vector<size_t>> by_lowbit(64);
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        if (!best[gi].has || (gmask[gi] & claimed)) continue;
        for (int b = 0; b < 64; ++b) {
            if (gmask[gi] & (uint64_t{1} << b)) by_lowbit[b].push_back(gi);
        }
    }

    struct CoverVal {
        double score = 0.0;
        long len = 0;
        std::vector<std::string> sigs; // sorted
        std::vector<size_t> chosen;
    };
    auto cover_better = [](const CoverVal& a, const CoverVal& b) {
        if (a.score > b.score + kEps) return true;
        if (a.score < b.score - kEps) return false;
        if (a.len != b.len) return a.len < b.len;
        return a.sigs < b.sigs;
    };
    std::map<uint64_t, CoverVal> memo;
    std::function<CoverVal(uint64_t)> solve = [&](uint64_t mask) -> CoverVal {
        if (mask == 0) return {};
        auto it = memo.find(mask);
        if (it != memo.end()) return it->second;
        int i = std::countr_zero(mask);
        CoverVal bestv = solve(mask & (mask - 1)); // activity i left uncovered
        for (size_t gi : by_lowbit[i]) {
            if ((gmask[gi] & mask) != gmask[gi]) continue;
            CoverVal cand = solve(mask & ~gmask[gi]);
            cand.score += best[gi].score.combined;
            cand.len += static_cast<long>(best[gi].comp.size());
            cand.sigs.insert(std::upper_bound(cand.sigs.begin(), cand.sigs.end(), gsig[gi]), gsig[gi]);
            cand.chosen.push_back(gi);
            if (cover_better(cand, bestv)) bestv = std::move(cand);
        }
        memo[mask] = bestv;
        return bestv;
    };
    CoverVal chosen = solve(full);

    for (size_t gi : chosen.chosen) {
        plan.assignments.push_back({groups[gi], best[gi].comp, best[gi].score, "fresh"});
        claimed |= gmask[gi];
        if (best[gi].score.combined + kEps >= cfg.tau) {
            db.store(gsig[gi], best[gi].comp, best[gi].score);
        }
    }

    std::sort(plan.assignments.begin(), plan.assignments.end(), [&](const Assignment& a, const Assignment& b) {
        return p.topo_index(a.group.activity_ids.front()) < p.topo_index(b.group.activity_ids.front());
    });

    for (const auto& id : acts) {
        if (!(claimed & (uint64_t{1} << p.topo_index(id)))) {
            plan.uncovered.push_back(id);
            plan.stubs.push_back(make_stub(p, id));
        }
    }
    return plan;
}

} // namespace medc
