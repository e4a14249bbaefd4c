#include "medc/workflow.hpp"
#include "medc/errors.hpp"
#include "medc/xml.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace medc {

namespace {

struct Generator {
    const ProcessModel& p;
    const MatchPlan& plan;
    const std::vector<std::map<OpRef, std::string>>& spec_refs;
    const std::vector<std::set<OpRef>>& no_spec;

    std::map<std::string, size_t> by_activity; // activity -> assignment index
    std::map<std::string, std::string> stub_of; // activity -> stub service id

    void index() {
        if (spec_refs.size() != plan.assignments.size() || no_spec.size() != plan.assignments.size()) {
            throw PlanMismatchError("spec references do not line up with the plan's assignments");
        }
        for (size_t ai = 0; ai < plan.assignments.size(); ++ai) {
            for (const auto& id : plan.assignments[ai].group.activity_ids) {
                if (!p.has_node(id) || p.node(id).kind != NodeKind::Activity) {
                    throw PlanMismatchError("plan references unknown activity " + id);
                }
                if (!by_activity.emplace(id, ai).second) {
                    throw PlanMismatchError("plan covers activity " + id + " twice");
                }
            }
        }
        for (const auto& st : plan.stubs) stub_of[st.activity_id] = st.service.id;
        for (const auto& id : plan.uncovered) {
            if (!stub_of.count(id)) throw PlanMismatchError("uncovered activity " + id + " has no stub");
        }
    }

    std::vector<WfNode> composition_nodes(size_t ai) const {
        std::vector<WfNode> out;
        for (const OpRef& ref : plan.assignments[ai].composition) {
            auto it = spec_refs[ai].find(ref);
            if (it != spec_refs[ai].end()) {
                WfNode t;
                t.kind = WfKind::Transform;
                t.spec = it->second;
                out.push_back(std::move(t));
            } else if (!no_spec[ai].count(ref)) {
                throw MissingSpecError("no transformation spec for " + ref.service_id + "/" +
                                       ref.operation_id);
            }
            WfNode inv;
            inv.kind = WfKind::Invoke;
            inv.service = ref.service_id;
            inv.operation = ref.operation_id;
            if (it != spec_refs[ai].end()) inv.transform = it->second;
            out.push_back(std::move(inv));
        }
        return out;
    }

    static void collect_activities(const ProcessTree& t, std::vector<std::string>& out) {
        if (t.kind == ProcessTree::Kind::Activity) {
            out.push_back(t.activity_id);
            return;
        }
        for (const auto& c : t.children) collect_activities(c, out);
    }

    std::vector<WfNode> build_sequence(const ProcessTree& seq) {
        std::vector<WfNode> out;
        const auto& kids = seq.children;
        for (size_t i = 0; i < kids.size();) {
            if (kids[i].kind == ProcessTree::Kind::Activity) {
                const std::string& aid = kids[i].activity_id;
                auto it = by_activity.find(aid);
                if (it == by_activity.end()) {
                    auto st = stub_of.find(aid);
                    if (st == stub_of.end()) {
                        throw PlanMismatchError("activity " + aid + " neither covered nor stubbed");
                    }
                    WfNode h;
                    h.kind = WfKind::HumanTask;
                    h.stub = st->second;
                    out.push_back(std::move(h));
                    ++i;
                    continue;
                }
                const Assignment& a = plan.assignments[it->second];
                const auto& ids = a.group.activity_ids;
                // a run is consumed where its first member sits
                for (size_t t = 0; t < ids.size(); ++t) {
                    if (i + t >= kids.size() || kids[i + t].kind != ProcessTree::Kind::Activity ||
                        kids[i + t].activity_id != ids[t]) {
                        throw PlanMismatchError("group starting at " + ids.front() +
                                                " does not align with the process structure");
                    }
                }
                std::vector<WfNode> nodes = composition_nodes(it->second);
                out.insert(out.end(), nodes.begin(), nodes.end());
                i += ids.size();
            } else {
                std::vector<std::string> block_acts;
                collect_activities(kids[i], block_acts);
                bool whole = false;
                size_t whole_ai = 0;
                if (!block_acts.empty()) {
                    auto it = by_activity.find(block_acts.front());
                    if (it != by_activity.end() &&
                        plan.assignments[it->second].group.activity_ids == block_acts) {
                        whole = true;
                        whole_ai = it->second;
                    }
                }
                if (whole) {
                    std::vector<WfNode> nodes = composition_nodes(whole_ai);
                    out.insert(out.end(), nodes.begin(), nodes.end());
                } else {
                    out.push_back(build_block(kids[i]));
                }
                ++i;
            }
        }
        return out;
    }

    WfNode build_block(const ProcessTree& blk) {
        WfNode node;
        node.kind = blk.kind == ProcessTree::Kind::Parallel ? WfKind::Flow : WfKind::Switch;
        for (size_t b = 0; b < blk.children.size(); ++b) {
            std::vector<WfNode> body = build_sequence(blk.children[b]);
            WfNode branch;
            if (node.kind == WfKind::Flow) {
                branch.kind = WfKind::Sequence;
            } else {
                branch.kind = WfKind::Case;
                branch.condition = blk.branch_conditions[b];
            }
            branch.children = std::move(body);
            node.children.push_back(std::move(branch));
        }
        return node;
    }
};

const char* element_name(WfKind k) {
    switch (k) {
        case WfKind::Sequence: return "sequence";
        case WfKind::Flow: return "flow";
        case WfKind::Switch: return "switch";
        case WfKind::Case: return "case";
        case WfKind::Invoke: return "invoke";
        case WfKind::Transform: return "transform";
        case WfKind::HumanTask: return "humanTask";
    }
    return "";
}

XmlNode to_xml(const WfNode& n) {
    XmlNode x;
    x.name = element_name(n.kind);
    switch (n.kind) {
        case WfKind::Invoke:
            x.attrs["service"] = n.service;
            x.attrs["operation"] = n.operation;
            if (!n.transform.empty()) x.attrs["transform"] = n.transform;
            break;
        case WfKind::Transform:
            x.attrs["spec"] = n.spec;
            break;
        case WfKind::HumanTask:
            x.attrs["stub"] = n.stub;
            break;
        case WfKind::Case:
            x.attrs["condition"] = n.condition;
            break;
        default:
            break;
    }
    for (const auto& c : n.children) x.children.push_back(to_xml(c));
    return x;
}

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
}

void require_attrs(const XmlNode& x, const std::string& path,
                   const std::vector<std::string>& required,
                   const std::vector<std::string>& optional) {
    for (const auto& key : required) {
        if (!x.attrs.count(key)) invalid(path, "missing attribute \"" + key + "\"");
    }
    for (const auto& [key, value] : x.attrs) {
        (void)value;
        if (std::find(required.begin(), required.end(), key) == required.end() &&
            std::find(optional.begin(), optional.end(), key) == optional.end()) {
            invalid(path, "unexpected attribute \"" + key + "\"");
        }
    }
}

WfNode from_xml(const XmlNode& x, const std::string& path);

// sequence bodies: structural and leaf elements, transform glued to its invoke
std::vector<WfNode> body_from_xml(const XmlNode& x, const std::string& path) {
    std::vector<WfNode> out;
    for (size_t i = 0; i < x.children.size(); ++i) {
        std::string cpath = path + "/" + x.children[i].name + "[" + std::to_string(i) + "]";
        out.push_back(from_xml(x.children[i], cpath));
    }
    for (size_t i = 0; i < out.size(); ++i) {
        std::string cpath = path + "/" + element_name(out[i].kind) + "[" + std::to_string(i) + "]";
        if (out[i].kind == WfKind::Transform) {
            if (i + 1 >= out.size() || out[i + 1].kind != WfKind::Invoke ||
                out[i + 1].transform != out[i].spec) {
                invalid(cpath, "transform is not followed by its invoke");
            }
        } else if (out[i].kind == WfKind::Invoke && !out[i].transform.empty()) {
            if (i == 0 || out[i - 1].kind != WfKind::Transform || out[i - 1].spec != out[i].transform) {
                invalid(cpath, "invoke references a transform that does not precede it");
            }
        }
    }
    return out;
}

WfNode from_xml(const XmlNode& x, const std::string& path) {
    WfNode n;
    if (x.name == "sequence") {
        n.kind = WfKind::Sequence;
        require_attrs(x, path, {}, {});
        n.children = body_from_xml(x, path);
    } else if (x.name == "flow") {
        n.kind = WfKind::Flow;
        require_attrs(x, path, {}, {});
        if (x.children.empty()) invalid(path, "flow needs at least one branch");
        for (size_t i = 0; i < x.children.size(); ++i) {
            std::string cpath = path + "/" + x.children[i].name + "[" + std::to_string(i) + "]";
            if (x.children[i].name != "sequence") invalid(cpath, "flow branches must be sequences");
            n.children.push_back(from_xml(x.children[i], cpath));
        }
    } else if (x.name == "switch") {
        n.kind = WfKind::Switch;
        require_attrs(x, path, {}, {});
        if (x.children.empty()) invalid(path, "switch needs at least one case");
        for (size_t i = 0; i < x.children.size(); ++i) {
            std::string cpath = path + "/" + x.children[i].name + "[" + std::to_string(i) + "]";
            if (x.children[i].name != "case") invalid(cpath, "switch children must be cases");
            WfNode c;
            c.kind = WfKind::Case;
            require_attrs(x.children[i], cpath, {"condition"}, {});
            c.condition = x.children[i].attrs.at("condition");
            c.children = body_from_xml(x.children[i], cpath);
            n.children.push_back(std::move(c));
        }
    } else if (x.name == "invoke") {
        n.kind = WfKind::Invoke;
        require_attrs(x, path, {"operation", "service"}, {"transform"});
        if (!x.children.empty() || !x.text.empty()) invalid(path, "invoke must be empty");
        n.service = x.attrs.at("service");
        n.operation = x.attrs.at("operation");
        if (const std::string* t = x.attr("transform")) n.transform = *t;
    } else if (x.name == "transform") {
        n.kind = WfKind::Transform;
        require_attrs(x, path, {"spec"}, {});
        if (!x.children.empty() || !x.text.empty()) invalid(path, "transform must be empty");
        n.spec = x.attrs.at("spec");
    } else if (x.name == "humanTask") {
        n.kind = WfKind::HumanTask;
        require_attrs(x, path, {"stub"}, {});
        if (!x.children.empty() || !x.text.empty()) invalid(path, "humanTask must be empty");
        n.stub = x.attrs.at("stub");
    } else {
        invalid(path, "unknown element <" + x.name + ">");
    }
    return n;
}

std::string skeleton_of(const WfNode& n);

std::string skeleton_of_body(const std::vector<WfNode>& body) {
    std::string s = "S(";
    for (const auto& c : body) {
        if (c.kind == WfKind::Transform) continue;
        s += skeleton_of(c);
    }
    s += ")";
    return s;
}

std::string skeleton_of(const WfNode& n) {
    switch (n.kind) {
        case WfKind::Invoke:
        case WfKind::HumanTask:
            return "A";
        case WfKind::Transform:
            return "";
        case WfKind::Sequence:
            return skeleton_of_body(n.children);
        case WfKind::Case:
            return skeleton_of_body(n.children);
        case WfKind::Flow: {
            std::vector<std::string> branches;
            for (const auto& c : n.children) branches.push_back(skeleton_of(c));
            std::sort(branches.begin(), branches.end());
            std::string s = "P{";
            for (const auto& b : branches) s += b + ",";
            s += "}";
            return s;
        }
        case WfKind::Switch: {
            std::string s = "X(";
            for (const auto& c : n.children) s += skeleton_of(c) + ",";
            s += ")";
            return s;
        }
    }
    return "";
}

std::string skeleton_of_tree(const ProcessTree& t) {
    switch (t.kind) {
        case ProcessTree::Kind::Activity:
            return "A";
        case ProcessTree::Kind::Sequence: {
            std::string s = "S(";
            for (const auto& c : t.children) s += skeleton_of_tree(c);
            s += ")";
            return s;
        }
        case ProcessTree::Kind::Parallel: {
            std::vector<std::string> branches;
            for (const auto& c : t.children) branches.push_back(skeleton_of_tree(c));
            std::sort(branches.begin(), branches.end());
            std::string s = "P{";
            for (const auto& b : branches) s += b + ",";
            s += "}";
            return s;
        }
        case ProcessTree::Kind::Exclusive: {
            std::string s = "X(";
            for (const auto& c : t.children) s += skeleton_of_tree(c) + ",";
            s += ")";
            return s;
        }
    }
    return "";
}

} // namespace

Workflow generate_workflow(const ProcessModel& p, const MatchPlan& plan,
                           const std::vector<std::map<OpRef, std::string>>& spec_refs,
                           const std::vector<std::set<OpRef>>& no_spec, const std::string& name) {
    Generator gen{p, plan, spec_refs, no_spec, {}, {}};
    gen.index();
    Workflow w;
    w.name = name;
    w.root.kind = WfKind::Sequence;
    w.root.children = gen.build_sequence(p.tree());
    return w;
}

std::string serialize_workflow(const Workflow& w) {
    XmlNode root;
    root.name = "workflow";
    root.attrs["name"] = w.name;
    root.children.push_back(to_xml(w.root));
    return xml_serialize(root);
}

Workflow parse_workflow(const std::string& document) {
    XmlNode root;
    try {
        root = xml_parse(document);
    } catch (const ParseError& e) {
        throw ValidationError(e.what());
    }
    if (root.name != "workflow") invalid("/" + root.name, "root element must be <workflow>");
    require_attrs(root, "/workflow", {"name"}, {});
    if (root.children.size() != 1 || root.children.front().name != "sequence") {
        invalid("/workflow", "expected exactly one <sequence> child");
    }
    Workflow w;
    w.name = root.attrs.at("name");
    w.root = from_xml(root.children.front(), "/workflow/sequence[0]");
    return w;
}

void validate_workflow(const std::string& document) {
    (void)parse_workflow(document);
}

std::string canonical_skeleton(const Workflow& w) {
    return skeleton_of(w.root);
}

std::string process_skeleton(const ProcessModel& p) {
    return skeleton_of_tree(p.tree());
}

} // namespace medc
