#pragma once

#include "medc/procmodel.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medc {

class Ontology;

struct OperationDescriptor {
    std::string id;
    std::string name;
    std::string operation_concept;
    std::vector<TagSpec> inputs;
    std::vector<TagSpec> outputs;
    std::vector<std::string> behaviour; // ordered internal sub-step concepts

    bool operator==(const OperationDescriptor&) const = default;
};

struct ServiceDescriptor {
    std::string id;
    std::string name;
    std::string endpoint;
    std::string partner;
    std::string domain;
    std::map<std::string, std::string> nfr;
    std::vector<OperationDescriptor> operations;

    bool operator==(const ServiceDescriptor&) const = default;
};

// service-level prefilter; absent fields do not constrain
struct FilterCriteria {
    std::optional<std::string> partner;
    std::optional<std::string> domain;
    std::map<std::string, std::string> nfr_required;

    bool empty() const { return !partner && !domain && nfr_required.empty(); }
    bool operator==(const FilterCriteria&) const = default;
};

struct OpRef {
    std::string service_id;
    std::string operation_id;

    bool operator==(const OpRef&) const = default;
    bool operator<(const OpRef& o) const {
        if (service_id != o.service_id) return service_id < o.service_id;
        return operation_id < o.operation_id;
    }
};

class Registry {
public:
    static Registry parse(const std::string& document);
    static Registry load_file(const std::string& path);

    const std::vector<ServiceDescriptor>& services() const { return services_; }
    bool has_service(const std::string& id) const;
    const ServiceDescriptor& service(const std::string& id) const;
    const OperationDescriptor& operation(const OpRef& ref) const;
    bool has_operation(const OpRef& ref) const;

    // every operation, ordered by (service id, operation id)
    std::vector<OpRef> all_operations() const;
    std::size_t operation_count() const;

    // refs whose operation concept equals `concept_id` (declared form, not closure)
    std::vector<OpRef> by_concept(const std::string& concept_id) const;

    void check_concepts(const Ontology& o) const;

private:
    std::vector<ServiceDescriptor> services_;
    std::map<std::string, std::size_t> service_index_;
    std::map<std::string, std::vector<OpRef>> concept_index_;
};

std::vector<OpRef> prefilter(const Registry& r, const FilterCriteria& c);

} // namespace medc
