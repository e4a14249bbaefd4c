#pragma once

#include "medc/matchmaker.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace medc {

enum class WfKind { Sequence, Flow, Switch, Case, Invoke, Transform, HumanTask };

struct WfNode {
    WfKind kind = WfKind::Sequence;
    std::string service;   // Invoke
    std::string operation; // Invoke
    std::string transform; // Invoke: spec ref, empty when none
    std::string spec;      // Transform: spec ref
    std::string stub;      // HumanTask: stub service id
    std::string condition; // Case
    std::vector<WfNode> children;

    bool operator==(const WfNode&) const = default;
};

struct Workflow {
    std::string name;
    WfNode root; // always a Sequence

    bool operator==(const Workflow&) const = default;
};

// structure copy: 1-to-1 assignments in place, n-to-m groups replaced by their
// composition's (Transform?, Invoke) pairs, uncovered activities by HumanTask.
// spec_refs[i] maps assignment i's operations to their transformation-spec
// reference; operations in no_spec[i] (input-less or unbound) may lack one.
Workflow generate_workflow(const ProcessModel& p, const MatchPlan& plan,
                           const std::vector<std::map<OpRef, std::string>>& spec_refs,
                           const std::vector<std::set<OpRef>>& no_spec, const std::string& name);

std::string serialize_workflow(const Workflow& w);
Workflow parse_workflow(const std::string& document); // ValidationError with element path
void validate_workflow(const std::string& document);  // same checks, discards the tree

// canonical structural digest with Transform nodes dropped and parallel
// branches sorted; equal digests <=> skeleton-isomorphic structures
std::string canonical_skeleton(const Workflow& w);
std::string process_skeleton(const ProcessModel& p);

} // namespace medc
