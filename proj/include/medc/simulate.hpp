#pragma once

#include "medc/registry.hpp"
#include "medc/transform.hpp"
#include "medc/workflow.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>

namespace medc {

// canned behaviour per (service, operation): output templates whose {Tag}
// placeholders are filled from the invocation-time message
struct MockSet {
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> outputs;

    static MockSet parse(const std::string& document);
    static MockSet load_file(const std::string& path);
    void check_registry(const Registry& r) const; // every mocked operation must exist
};

// Walks the workflow against mocks: Sequence in order; Flow branches run on a
// snapshot and merge their deltas (same tag from two branches ->
// MessageConflictError); Switch takes the first case whose "tag=value"
// condition holds; Transform merges apply_transformation output into the
// running message; HumanTask merges the prompt values or raises
// PromptRequiredError.
Message simulate_workflow(const Workflow& w,
                          const std::map<std::string, TransformationSpec>& specs,
                          const MockSet& mocks, const Message& initial,
                          const std::optional<Message>& prompt);

} // namespace medc
