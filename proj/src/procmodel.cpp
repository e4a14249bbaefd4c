#include "medc/procmodel.hpp"
#include "medc/errors.hpp"
#include "medc/model_json.hpp"
#include "medc/ontology.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace medc {

namespace {

NodeKind kind_from_string(const std::string& s, const std::string& context) {
    if (s == "start") return NodeKind::Start;
    if (s == "end") return NodeKind::End;
    if (s == "activity") return NodeKind::Activity;
    if (s == "gateway_split") return NodeKind::GatewaySplit;
    if (s == "gateway_join") return NodeKind::GatewayJoin;
    throw ParseError(context + ": unknown node kind \"" + s + "\"");
}

GatewayType gateway_from_string(const std::string& s, const std::string& context) {
    if (s == "parallel") return GatewayType::Parallel;
    if (s == "exclusive") return GatewayType::Exclusive;
    throw StructureError(context + ": unsupported gateway type \"" + s + "\"");
}

Annotation annotation_from_json(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"operation", "inputs", "outputs", "partner", "domain", "nfr"}, context);
    Annotation a;
    a.operation_concept = require_string(j, "operation", context);
    if (j.contains("inputs")) a.inputs = tagspec_list_from_json(j.at("inputs"), context + ".inputs");
    if (j.contains("outputs")) a.outputs = tagspec_list_from_json(j.at("outputs"), context + ".outputs");
    a.partner = optional_string(j, "partner", context);
    a.domain = optional_string(j, "domain", context);
    if (j.contains("nfr")) a.nfr = string_map_from_json(j.at("nfr"), context + ".nfr");
    return a;
}

} // namespace

ProcessModel ProcessModel::parse(const std::string& document) {
    json j = parse_json(document, "process");
    reject_unknown_keys(j, {"nodes", "edges"}, "process");

    ProcessModel p;
    if (!j.contains("nodes") || !j.at("nodes").is_array()) {
        throw ParseError("process: missing \"nodes\" array");
    }
    for (const json& nj : j.at("nodes")) {
        std::string ctx = "process node";
        reject_unknown_keys(nj, {"id", "kind", "gateway_type", "annotation"}, ctx);
        ProcessNode n;
        n.id = require_string(nj, "id", ctx);
        ctx = "process node \"" + n.id + "\"";
        n.kind = kind_from_string(require_string(nj, "kind", ctx), ctx);
        if (n.kind == NodeKind::GatewaySplit || n.kind == NodeKind::GatewayJoin) {
            n.gateway_type = gateway_from_string(require_string(nj, "gateway_type", ctx), ctx);
        } else if (nj.contains("gateway_type")) {
            throw ParseError(ctx + ": gateway_type on non-gateway node");
        }
        if (n.kind == NodeKind::Activity) {
            if (!nj.contains("annotation")) throw ParseError(ctx + ": activity without annotation");
            n.annotation = annotation_from_json(nj.at("annotation"), ctx + ".annotation");
        } else if (nj.contains("annotation")) {
            throw ParseError(ctx + ": annotation on non-activity node");
        }
        if (p.node_index_.count(n.id)) throw ParseError(ctx + ": duplicate node id");
        p.node_index_[n.id] = p.nodes_.size();
        p.nodes_.push_back(std::move(n));
    }

    if (j.contains("edges")) {
        if (!j.at("edges").is_array()) throw ParseError("process: \"edges\" must be an array");
        for (const json& ej : j.at("edges")) {
            if (!ej.is_array() || ej.size() < 2 || ej.size() > 3 || !ej[0].is_string() || !ej[1].is_string()) {
                throw ParseError("process: edges must be [from, to] or [from, to, condition]");
            }
            ProcessEdge e;
            e.from = ej[0].get<std::string>();
            e.to = ej[1].get<std::string>();
            if (ej.size() == 3) {
                if (!ej[2].is_string()) throw ParseError("process: edge condition must be a string");
                e.condition = ej[2].get<std::string>();
            }
            if (!p.node_index_.count(e.from)) throw StructureError("process: dangling edge from \"" + e.from + "\"");
            if (!p.node_index_.count(e.to)) throw StructureError("process: dangling edge to \"" + e.to + "\"");
            p.edges_.push_back(std::move(e));
        }
    }

    p.validate_and_build();
    return p;
}

ProcessModel ProcessModel::load_file(const std::string& path) {
    return parse(read_file(path));
}

bool ProcessModel::has_node(const std::string& id) const {
    return node_index_.count(id) > 0;
}

const ProcessNode& ProcessModel::node(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw StructureError("process: unknown node \"" + id + "\"");
    return nodes_[it->second];
}

int ProcessModel::topo_index(const std::string& activity_id) const {
    auto it = topo_.find(activity_id);
    if (it == topo_.end()) throw StructureError("process: unknown activity \"" + activity_id + "\"");
    return it->second;
}

void ProcessModel::validate_and_build() {
    std::string start_id, end_id;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::Start) {
            if (!start_id.empty()) throw StructureError("process: multiple starts");
            start_id = n.id;
        }
        if (n.kind == NodeKind::End) {
            if (!end_id.empty()) throw StructureError("process: multiple ends");
            end_id = n.id;
        }
    }
    if (start_id.empty()) throw StructureError("process: missing start node");
    if (end_id.empty()) throw StructureError("process: missing end node");

    std::map<std::string, int> in_deg, out_deg;
    for (const auto& n : nodes_) in_deg[n.id] = out_deg[n.id] = 0;
    for (const auto& e : edges_) {
        succ_[e.from].push_back(e.to);
        out_deg[e.from]++;
        in_deg[e.to]++;
    }

    for (const auto& n : nodes_) {
        int in = in_deg[n.id], out = out_deg[n.id];
        switch (n.kind) {
            case NodeKind::Start:
                if (in != 0 || out != 1) throw StructureError("process: start must have no incoming and one outgoing edge");
                break;
            case NodeKind::End:
                if (in != 1 || out != 0) throw StructureError("process: end must have one incoming and no outgoing edge");
                break;
            case NodeKind::Activity:
                if (in != 1 || out != 1) {
                    throw StructureError("process: activity \"" + n.id + "\" must have exactly one incoming and one outgoing edge");
                }
                break;
            case NodeKind::GatewaySplit:
                if (in != 1 || out < 2) throw StructureError("process: split \"" + n.id + "\" must have one incoming and at least two outgoing edges");
                break;
            case NodeKind::GatewayJoin:
                if (in < 2 || out != 1) throw StructureError("process: join \"" + n.id + "\" must have at least two incoming and one outgoing edge");
                break;
        }
    }

    // recursive descent over the graph; every node must be consumed once
    std::set<std::string> visited;
    auto successor = [&](const std::string& id) { return succ_.at(id).front(); };
    auto out_edges = [&](const std::string& id) {
        std::vector<const ProcessEdge*> out;
        for (const auto& e : edges_) {
            if (e.from == id) out.push_back(&e);
        }
        return out;
    };

    auto visit = [&](const std::string& id) {
        if (visited.count(id)) {
            throw StructureError("process: node \"" + id + "\" reached on two control paths (crossing blocks or loop)");
        }
        visited.insert(id);
    };

    // parses elements from `cur` until the end node or an unmatched join is
    // reached; returns (sequence, node that stopped the walk)
    std::function<std::pair<ProcessTree, std::string>(std::string)> parse_seq =
        [&](std::string cur) -> std::pair<ProcessTree, std::string> {
        ProcessTree seq;
        seq.kind = ProcessTree::Kind::Sequence;
        while (true) {
            const ProcessNode& n = node(cur);
            if (n.kind == NodeKind::End || n.kind == NodeKind::GatewayJoin) {
                return {std::move(seq), cur};
            }
            if (n.kind == NodeKind::Start) {
                throw StructureError("process: start node \"" + cur + "\" inside a flow");
            }
            if (n.kind == NodeKind::Activity) {
                visit(cur);
                ProcessTree leaf;
                leaf.kind = ProcessTree::Kind::Activity;
                leaf.activity_id = cur;
                activity_order_.push_back(cur);
                topo_[cur] = static_cast<int>(activity_order_.size()) - 1;
                seq.children.push_back(std::move(leaf));
                cur = successor(cur);
                continue;
            }
            // gateway split: parse each branch up to the shared join
            visit(cur);
            ProcessTree block;
            block.kind = n.gateway_type == GatewayType::Parallel ? ProcessTree::Kind::Parallel
                                                                 : ProcessTree::Kind::Exclusive;
            block.split_id = cur;
            std::string join_id;
            for (const ProcessEdge* e : out_edges(cur)) {
                auto [branch, stopped] = parse_seq(e->to);
                const ProcessNode& stop_node = node(stopped);
                if (stop_node.kind != NodeKind::GatewayJoin) {
                    throw StructureError("process: branch of split \"" + cur + "\" does not reach a join");
                }
                if (join_id.empty()) {
                    join_id = stopped;
                } else if (join_id != stopped) {
                    throw StructureError("process: branches of split \"" + cur + "\" converge on different joins (crossing blocks)");
                }
                block.children.push_back(std::move(branch));
                block.branch_conditions.push_back(e->condition);
            }
            const ProcessNode& join = node(join_id);
            if (join.gateway_type != n.gateway_type) {
                throw StructureError("process: gateway type mismatch between split \"" + cur + "\" and join \"" + join_id + "\"");
            }
            if (static_cast<size_t>(std::count(succ_.at(join_id).begin(), succ_.at(join_id).end(), join_id)) != 0) {
                throw StructureError("process: join \"" + join_id + "\" loops to itself");
            }
            // the join must gather exactly the split's branches
            size_t join_in = 0;
            for (const auto& e : edges_) {
                if (e.to == join_id) ++join_in;
            }
            if (join_in != block.children.size()) {
                throw StructureError("process: join \"" + join_id + "\" gathers edges from outside split \"" + cur + "\" (crossing blocks)");
            }
            block.join_id = join_id;
            visit(join_id);
            seq.children.push_back(std::move(block));
            cur = successor(join_id);
        }
    };

    visit(start_id);
    auto [root, stopped] = parse_seq(successor(start_id));
    if (stopped != end_id) {
        throw StructureError("process: unmatched join \"" + stopped + "\" outside any block");
    }
    visit(end_id);
    tree_ = std::move(root);

    if (visited.size() != nodes_.size()) {
        for (const auto& n : nodes_) {
            if (!visited.count(n.id)) {
                throw StructureError("process: node \"" + n.id + "\" unreachable from start");
            }
        }
    }
}

bool ProcessModel::precedes(const std::string& a, const std::string& b) const {
    if (a == b) return false;
    std::set<std::string> seen;
    std::vector<std::string> stack{a};
    while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        auto it = succ_.find(cur);
        if (it == succ_.end()) continue;
        for (const auto& nxt : it->second) {
            if (nxt == b) return true;
            if (seen.insert(nxt).second) stack.push_back(nxt);
        }
    }
    return false;
}

void ProcessModel::check_concepts(const Ontology& o) const {
    for (const auto& n : nodes_) {
        if (n.kind != NodeKind::Activity) continue;
        std::string ctx = "activity \"" + n.id + "\"";
        o.require_concept(n.annotation.operation_concept, ctx);
        for (const auto& t : n.annotation.inputs) o.require_concept(t.concept_id, ctx + " input \"" + t.tag + "\"");
        for (const auto& t : n.annotation.outputs) o.require_concept(t.concept_id, ctx + " output \"" + t.tag + "\"");
    }
}

namespace {

void collect_activities(const ProcessTree& t, std::vector<std::string>& out) {
    if (t.kind == ProcessTree::Kind::Activity) {
        out.push_back(t.activity_id);
        return;
    }
    for (const auto& c : t.children) collect_activities(c, out);
}

void walk_groups(const ProcessModel& p, const ProcessTree& t, int k,
                 std::vector<ActivityGroup>& out) {
    if (t.kind == ProcessTree::Kind::Activity) return;

    if (t.kind == ProcessTree::Kind::Sequence) {
        // contiguous subsequences of maximal activity chains
        size_t i = 0;
        while (i < t.children.size()) {
            if (t.children[i].kind != ProcessTree::Kind::Activity) {
                walk_groups(p, t.children[i], k, out);
                ++i;
                continue;
            }
            size_t j = i;
            while (j < t.children.size() && t.children[j].kind == ProcessTree::Kind::Activity) ++j;
            for (size_t s = i; s < j; ++s) {
                for (size_t e = s; e < j && e - s + 1 <= static_cast<size_t>(k); ++e) {
                    ActivityGroup g;
                    g.shape = GroupShape::Run;
                    for (size_t x = s; x <= e; ++x) g.activity_ids.push_back(t.children[x].activity_id);
                    out.push_back(std::move(g));
                }
            }
            i = j;
        }
        return;
    }

    // gateway block: the whole block is a group when small enough
    std::vector<std::string> acts;
    collect_activities(t, acts);
    std::sort(acts.begin(), acts.end(),
              [&](const std::string& a, const std::string& b) { return p.topo_index(a) < p.topo_index(b); });
    if (!acts.empty() && acts.size() <= static_cast<size_t>(k)) {
        ActivityGroup g;
        g.shape = GroupShape::Block;
        g.activity_ids = acts;
        out.push_back(std::move(g));
    }
    for (const auto& c : t.children) walk_groups(p, c, k, out);
}

} // namespace

std::vector<ActivityGroup> enumerate_groups(const ProcessModel& p, int k) {
    if (k < 1) throw ConfigError("enumerate_groups: k must be >= 1");
    std::vector<ActivityGroup> all;
    walk_groups(p, p.tree(), k, all);

    // dedupe by activity set; a run is kept over a shape-equal block duplicate
    std::sort(all.begin(), all.end(), [&](const ActivityGroup& a, const ActivityGroup& b) {
        int ta = p.topo_index(a.activity_ids.front());
        int tb = p.topo_index(b.activity_ids.front());
        if (ta != tb) return ta < tb;
        if (a.activity_ids.size() != b.activity_ids.size()) return a.activity_ids.size() < b.activity_ids.size();
        if (a.activity_ids != b.activity_ids) return a.activity_ids < b.activity_ids;
        return a.shape < b.shape;
    });
    std::vector<ActivityGroup> out;
    for (auto& g : all) {
        if (!out.empty() && out.back().activity_ids == g.activity_ids) continue;
        out.push_back(std::move(g));
    }
    return out;
}

std::pair<std::vector<TagSpec>, std::vector<TagSpec>>
external_io(const ProcessModel& p, const ActivityGroup& g) {
    std::vector<TagSpec> required, produced;
    auto contains = [](const std::vector<TagSpec>& v, const TagSpec& t) {
        return std::find(v.begin(), v.end(), t) != v.end();
    };
    for (const auto& id : g.activity_ids) {
        const Annotation& a = p.node(id).annotation;
        for (const auto& in : a.inputs) {
            bool met = false;
            for (const auto& other : g.activity_ids) {
                if (other == id || !p.precedes(other, id)) continue;
                for (const auto& out : p.node(other).annotation.outputs) {
                    if (out.concept_id == in.concept_id) {
                        met = true;
                        break;
                    }
                }
                if (met) break;
            }
            if (!met && !contains(required, in)) required.push_back(in);
        }
        for (const auto& out : a.outputs) {
            if (!contains(produced, out)) produced.push_back(out);
        }
    }
    return {required, produced};
}

} // namespace medc
