#include "medc/registry.hpp"
#include "medc/errors.hpp"
#include "medc/jsonio.hpp"
#include "medc/model_json.hpp"
#include "medc/ontology.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <set>

namespace medc {

namespace {

OperationDescriptor operation_from_json(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"id", "name", "operation", "inputs", "outputs", "behaviour"}, context);
    OperationDescriptor op;
    op.id = require_string(j, "id", context);
    op.name = optional_string(j, "name", context);
    op.operation_concept = require_string(j, "operation", context);
    std::string ctx = context + " \"" + op.id + "\"";
    if (j.contains("inputs")) op.inputs = tagspec_list_from_json(j.at("inputs"), ctx + ".inputs");
    if (j.contains("outputs")) op.outputs = tagspec_list_from_json(j.at("outputs"), ctx + ".outputs");
    if (j.contains("behaviour")) {
        const json& b = j.at("behaviour");
        if (!b.is_array()) throw ParseError(ctx + ": behaviour must be an array of concept_id ids");
        for (const json& c : b) {
            if (!c.is_string()) throw ParseError(ctx + ": behaviour entries must be strings");
            op.behaviour.push_back(c.get<std::string>());
        }
    }
    return op;
}

} // namespace

Registry Registry::parse(const std::string& document) {
    json j = parse_json(document, "registry");
    reject_unknown_keys(j, {"services"}, "registry");

    Registry r;
    if (!j.contains("services")) return r;
    if (!j.at("services").is_array()) throw ParseError("registry: \"services\" must be an array");

    for (const json& sj : j.at("services")) {
        std::string ctx = "registry service";
        reject_unknown_keys(sj, {"id", "name", "endpoint", "partner", "domain", "nfr", "operations"}, ctx);
        ServiceDescriptor s;
        s.id = require_string(sj, "id", ctx);
        ctx = "registry service \"" + s.id + "\"";
        s.name = optional_string(sj, "name", ctx);
        s.endpoint = optional_string(sj, "endpoint", ctx);
        s.partner = optional_string(sj, "partner", ctx);
        s.domain = optional_string(sj, "domain", ctx);
        if (sj.contains("nfr")) s.nfr = string_map_from_json(sj.at("nfr"), ctx + ".nfr");

        if (!sj.contains("operations") || !sj.at("operations").is_array() || sj.at("operations").empty()) {
            throw ParseError(ctx + ": needs at least one operation");
        }
        std::set<std::string> op_ids;
        for (const json& oj : sj.at("operations")) {
            OperationDescriptor op = operation_from_json(oj, ctx + " operation");
            if (!op_ids.insert(op.id).second) {
                throw DuplicateIdError(ctx + ": duplicate operation id \"" + op.id + "\"");
            }
            s.operations.push_back(std::move(op));
        }

        if (r.service_index_.count(s.id)) {
            throw DuplicateIdError("registry: duplicate service id \"" + s.id + "\"");
        }
        r.service_index_[s.id] = r.services_.size();
        r.services_.push_back(std::move(s));
    }

    for (const auto& s : r.services_) {
        for (const auto& op : s.operations) {
            r.concept_index_[op.operation_concept].push_back({s.id, op.id});
        }
    }
    for (auto& [c, refs] : r.concept_index_) std::sort(refs.begin(), refs.end());
    return r;
}

Registry Registry::load_file(const std::string& path) {
    return parse(read_file(path));
}

bool Registry::has_service(const std::string& id) const {
    return service_index_.count(id) > 0;
}

const ServiceDescriptor& Registry::service(const std::string& id) const {
    auto it = service_index_.find(id);
    if (it == service_index_.end()) throw ParseError("registry: unknown service \"" + id + "\"");
    return services_[it->second];
}

const OperationDescriptor& Registry::operation(const OpRef& ref) const {
    const ServiceDescriptor& s = service(ref.service_id);
    for (const auto& op : s.operations) {
        if (op.id == ref.operation_id) return op;
    }
    throw ParseError("registry: unknown operation \"" + ref.operation_id + "\" in service \"" + ref.service_id + "\"");
}

bool Registry::has_operation(const OpRef& ref) const {
    if (!has_service(ref.service_id)) return false;
    const ServiceDescriptor& s = services_[service_index_.at(ref.service_id)];
    return std::any_of(s.operations.begin(), s.operations.end(),
                       [&](const OperationDescriptor& op) { return op.id == ref.operation_id; });
}

std::vector<OpRef> Registry::all_operations() const {
    std::vector<OpRef> refs;
    for (const auto& s : services_) {
        for (const auto& op : s.operations) refs.push_back({s.id, op.id});
    }
    std::sort(refs.begin(), refs.end());
    return refs;
}

std::size_t Registry::operation_count() const {
    std::size_t n = 0;
    for (const auto& s : services_) n += s.operations.size();
    return n;
}

std::vector<OpRef> Registry::by_concept(const std::string& concept_id) const {
    auto it = concept_index_.find(concept_id);
    if (it == concept_index_.end()) return {};
    return it->second;
}

void Registry::check_concepts(const Ontology& o) const {
    for (const auto& s : services_) {
        for (const auto& op : s.operations) {
            std::string ctx = "service \"" + s.id + "\" operation \"" + op.id + "\"";
            o.require_concept(op.operation_concept, ctx);
            for (const auto& t : op.inputs) o.require_concept(t.concept_id, ctx + " input \"" + t.tag + "\"");
            for (const auto& t : op.outputs) o.require_concept(t.concept_id, ctx + " output \"" + t.tag + "\"");
            for (const auto& b : op.behaviour) o.require_concept(b, ctx + " behaviour");
        }
    }
}

std::vector<OpRef> prefilter(const Registry& r, const FilterCriteria& c) {
    std::vector<OpRef> out;
    for (const auto& s : r.services()) {
        if (c.partner && s.partner != *c.partner) continue;
        if (c.domain && s.domain != *c.domain) continue;
        bool nfr_ok = true;
        for (const auto& [k, v] : c.nfr_required) {
            auto it = s.nfr.find(k);
            if (it == s.nfr.end() || it->second != v) {
                nfr_ok = false;
                break;
            }
        }
        if (!nfr_ok) continue;
        for (const auto& op : s.operations) out.push_back({s.id, op.id});
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace medc
