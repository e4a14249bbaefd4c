#pragma once

#include <map>
#include <string>
#include <vector>

namespace medc {

// Discrete logic-based relation between a requested and an offered concept.
enum class Degree { Exact, Plugin, Subsumes, Fail };

const char* degree_name(Degree d);

struct DegreeValues {
    double exact = 1.0;
    double plugin = 0.8;
    double subsumes = 0.6;
    double fail = 0.0;

    double value(Degree d) const;
    // exact >= plugin >= subsumes > fail, fail pinned to 0
    void validate() const;
};

// Immutable concept taxonomy with equivalence classes collapsed by union-find
// and the strict subsumption closure materialized at load time. Queries are
// read-only and safe to run concurrently.
class Ontology {
public:
    Ontology() = default;

    static Ontology parse(const std::string& document);
    static Ontology load_file(const std::string& path);

    bool has_concept(const std::string& id) const;
    void require_concept(const std::string& id, const std::string& context) const;

    size_t concept_count() const { return index_.size(); }
    std::vector<std::string> concepts() const; // sorted

    // number of non-reflexive pairs in the subsumption closure (over
    // equivalence-class representatives, expanded back to concepts)
    size_t closure_pair_count() const;

    // child ⊑ parent in the reflexive-transitive closure, equivalents identical
    bool is_subsumed(const std::string& child, const std::string& parent) const;

    Degree degree_of_match(const std::string& requested, const std::string& offered) const;

    // declared labels of a concept (may be empty)
    std::vector<std::string> labels(const std::string& concept_id) const;
    // labels with a fallback to the concept's local name when none are declared
    std::vector<std::string> display_labels(const std::string& concept_id) const;

    // true when a and b have a common ancestor (reflexive: a itself counts);
    // used by the sibling-unit binding rule
    bool share_ancestor(const std::string& a, const std::string& b) const;

private:
    int rep_of(const std::string& id, const std::string& context) const;

    std::map<std::string, int> index_;             // concept id -> dense index
    std::vector<std::string> ids_;                 // dense index -> concept id
    std::vector<int> rep_;                         // dense index -> representative index
    std::vector<std::vector<bool>> reach_;         // rep -> strictly reachable reps
    std::vector<int> class_size_;                  // representative -> equivalence class size
    std::map<std::string, std::vector<std::string>> labels_;
};

} // namespace medc
