#include "medc/simulate.hpp"
#include "medc/errors.hpp"
#include "medc/jsonio.hpp"
#include "medc/model_json.hpp"
#include "medc/util.hpp"

#include <set>

namespace medc {

MockSet MockSet::parse(const std::string& document) {
    json j = parse_json(document, "mocks");
    reject_unknown_keys(j, {"mocks"}, "mocks");
    if (!j.contains("mocks") || !j.at("mocks").is_array()) {
        throw ParseError("mocks: missing \"mocks\" array");
    }
    MockSet set;
    for (const auto& mj : j.at("mocks")) {
        std::string ctx = "mock";
        reject_unknown_keys(mj, {"service", "operation", "outputs"}, ctx);
        std::string service = require_string(mj, "service", ctx);
        std::string operation = require_string(mj, "operation", ctx);
        ctx = "mock " + service + "/" + operation;
        if (!mj.contains("outputs") || !mj.at("outputs").is_object()) {
            throw ParseError(ctx + ": missing \"outputs\" object");
        }
        auto key = std::make_pair(service, operation);
        if (set.outputs.count(key)) throw DuplicateIdError(ctx + ": duplicate mock");
        set.outputs[key] = string_map_from_json(mj.at("outputs"), ctx + ".outputs");
    }
    return set;
}

MockSet MockSet::load_file(const std::string& path) {
    return parse(read_file(path));
}

void MockSet::check_registry(const Registry& r) const {
    for (const auto& [key, templates] : outputs) {
        (void)templates;
        if (!r.has_operation(OpRef{key.first, key.second})) {
            throw ValidationError("mock references unknown operation " + key.first + "/" + key.second);
        }
    }
}

namespace {

std::string substitute(const std::string& tmpl, const Message& msg, const std::string& ctx) {
    std::string out;
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        size_t close = tmpl.find('}', i);
        if (close == std::string::npos) throw ParseError(ctx + ": unterminated placeholder");
        std::string name = tmpl.substr(i + 1, close - i - 1);
        auto it = msg.values.find(name);
        if (it == msg.values.end()) throw MissingTagError(ctx + ": no tag " + name + " to substitute");
        out += it->second;
        i = close + 1;
    }
    return out;
}

struct Simulator {
    const std::map<std::string, TransformationSpec>& specs;
    const MockSet& mocks;
    const std::optional<Message>& prompt;

    const TransformationSpec& spec_for(const std::string& ref) const {
        auto it = specs.find(ref);
        if (it == specs.end()) throw MissingSpecError("no transformation spec loaded for " + ref);
        return it->second;
    }

    void run_body(const std::vector<WfNode>& body, Message& msg) const {
        for (const WfNode& n : body) run(n, msg);
    }

    void run(const WfNode& n, Message& msg) const {
        switch (n.kind) {
            case WfKind::Sequence:
            case WfKind::Case:
                run_body(n.children, msg);
                break;
            case WfKind::Transform: {
                Message out = apply_transformation(spec_for(n.spec), msg);
                for (const auto& [tag, value] : out.values) msg.values[tag] = value;
                break;
            }
            case WfKind::Invoke: {
                // the preceding Transform already merged the service input tags
                auto it = mocks.outputs.find({n.service, n.operation});
                if (it == mocks.outputs.end()) {
                    throw MissingMockError("no mock for " + n.service + "/" + n.operation);
                }
                std::string ctx = "mock " + n.service + "/" + n.operation;
                Message produced;
                for (const auto& [tag, tmpl] : it->second) {
                    produced.values[tag] = substitute(tmpl, msg, ctx);
                }
                for (const auto& [tag, value] : produced.values) msg.values[tag] = value;
                break;
            }
            case WfKind::HumanTask: {
                if (!prompt) {
                    throw PromptRequiredError("human task " + n.stub + " needs prompt values");
                }
                for (const auto& [tag, value] : prompt->values) msg.values[tag] = value;
                break;
            }
            case WfKind::Flow: {
                const Message snapshot = msg;
                Message merged = snapshot;
                std::set<std::string> emitted;
                for (const WfNode& branch : n.children) {
                    Message local = snapshot;
                    run(branch, local);
                    for (const auto& [tag, value] : local.values) {
                        auto old = snapshot.values.find(tag);
                        if (old != snapshot.values.end() && old->second == value) continue;
                        if (!emitted.insert(tag).second) {
                            throw MessageConflictError("tag " + tag +
                                                       " produced by two parallel branches");
                        }
                        merged.values[tag] = value;
                    }
                }
                msg = std::move(merged);
                break;
            }
            case WfKind::Switch: {
                for (const WfNode& c : n.children) {
                    size_t eq = c.condition.find('=');
                    if (eq == std::string::npos) {
                        throw ValidationError("switch condition \"" + c.condition +
                                              "\" is not of the form tag=value");
                    }
                    std::string tag = c.condition.substr(0, eq);
                    std::string expected = c.condition.substr(eq + 1);
                    auto it = msg.values.find(tag);
                    if (it != msg.values.end() && it->second == expected) {
                        run_body(c.children, msg);
                        return;
                    }
                }
                throw MissingTagError("no switch case matched the current message");
            }
        }
    }
};

} // namespace

Message simulate_workflow(const Workflow& w,
                          const std::map<std::string, TransformationSpec>& specs,
                          const MockSet& mocks, const Message& initial,
                          const std::optional<Message>& prompt) {
    Simulator sim{specs, mocks, prompt};
    Message msg = initial;
    sim.run(w.root, msg);
    return msg;
}

} // namespace medc
