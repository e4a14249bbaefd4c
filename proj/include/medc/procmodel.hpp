#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace medc {

class Ontology;

// One semantically annotated message element.
struct TagSpec {
    std::string tag;
    std::string concept_id;
    std::string format; // optional
    std::string unit;   // optional
    std::string lookup; // optional lookup table id applied to the value

    bool operator==(const TagSpec&) const = default;
};

struct Annotation {
    std::string operation_concept;
    std::vector<TagSpec> inputs;
    std::vector<TagSpec> outputs;
    std::string partner; // optional
    std::string domain;  // optional
    std::map<std::string, std::string> nfr;
};

enum class NodeKind { Start, End, Activity, GatewaySplit, GatewayJoin };
enum class GatewayType { Parallel, Exclusive };

struct ProcessNode {
    std::string id;
    NodeKind kind = NodeKind::Activity;
    GatewayType gateway_type = GatewayType::Parallel;
    Annotation annotation; // activities only
};

struct ProcessEdge {
    std::string from;
    std::string to;
    std::string condition; // optional, carried opaquely onto switch cases
};

// Structure tree of a block-structured process. Branch children of a block
// are always Sequence nodes.
struct ProcessTree {
    enum class Kind { Sequence, Parallel, Exclusive, Activity };
    Kind kind = Kind::Sequence;
    std::string activity_id;                 // Activity
    std::string split_id, join_id;           // blocks
    std::vector<ProcessTree> children;
    std::vector<std::string> branch_conditions; // blocks, one per child
};

class ProcessModel {
public:
    static ProcessModel parse(const std::string& document);
    static ProcessModel load_file(const std::string& path);

    const std::vector<ProcessNode>& nodes() const { return nodes_; }
    const std::vector<ProcessEdge>& edges() const { return edges_; }
    const ProcessTree& tree() const { return tree_; }

    bool has_node(const std::string& id) const;
    const ProcessNode& node(const std::string& id) const;

    // activity ids in deterministic topological (tree-walk) order
    const std::vector<std::string>& activity_order() const { return activity_order_; }
    int topo_index(const std::string& activity_id) const;

    // control path from a to b (strict)
    bool precedes(const std::string& a, const std::string& b) const;

    // every annotation concept must exist in o
    void check_concepts(const Ontology& o) const;

private:
    void validate_and_build();

    std::vector<ProcessNode> nodes_;
    std::vector<ProcessEdge> edges_;
    std::map<std::string, size_t> node_index_;
    ProcessTree tree_;
    std::vector<std::string> activity_order_;
    std::map<std::string, int> topo_;
    std::map<std::string, std::vector<std::string>> succ_; // node -> successors
};

enum class GroupShape { Run, Block };

// Process-logic-valid matching unit: a consecutive run within one branch or
// a complete gateway-delimited block.
struct ActivityGroup {
    std::vector<std::string> activity_ids; // topological order
    GroupShape shape = GroupShape::Run;

    bool operator==(const ActivityGroup&) const = default;
};

// All runs of length <= k plus all complete blocks with <= k activities,
// ordered by (first activity's topological index, size ascending). Groups
// with identical activity sets are reported once.
std::vector<ActivityGroup> enumerate_groups(const ProcessModel& p, int k);

// required external inputs / produced outputs of a group; "earlier" producers
// are resolved through control-flow precedence, by exact concept identity
std::pair<std::vector<TagSpec>, std::vector<TagSpec>>
external_io(const ProcessModel& p, const ActivityGroup& g);

} // namespace medc
