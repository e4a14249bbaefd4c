#include "medc/ontology.hpp"
#include "medc/errors.hpp"
#include "medc/jsonio.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <functional>

namespace medc {

const char* degree_name(Degree d) {
    switch (d) {
        case Degree::Exact: return "exact";
        case Degree::Plugin: return "plugin";
        case Degree::Subsumes: return "subsumes";
        case Degree::Fail: return "fail";
    }
    return "fail";
}

double DegreeValues::value(Degree d) const {
    switch (d) {
        case Degree::Exact: return exact;
        case Degree::Plugin: return plugin;
        case Degree::Subsumes: return subsumes;
        case Degree::Fail: return fail;
    }
    return fail;
}

void DegreeValues::validate() const {
    if (fail != 0.0) throw ConfigError("degree value for fail must be 0");
    if (!(exact >= plugin && plugin >= subsumes && subsumes > fail)) {
        throw ConfigError("degree values must satisfy exact >= plugin >= subsumes > fail");
    }
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) {
        for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // keep the smaller dense index as representative, for determinism
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

std::vector<std::pair<std::string, std::string>> read_pair_list(const json& j, const std::string& key,
                                                                const std::string& context) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!j.contains(key)) return out;
    const json& arr = j.at(key);
    if (!arr.is_array()) throw ParseError(context + ": \"" + key + "\" must be an array");
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
            throw ParseError(context + ": entries of \"" + key + "\" must be [string,string]");
        }
        out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return out;
}

} // namespace

Ontology Ontology::parse(const std::string& document) {
    json j = parse_json(document, "ontology");
    reject_unknown_keys(j, {"concepts", "subclass_of", "equivalent", "labels"}, "ontology");

    Ontology o;
    if (j.contains("concepts")) {
        if (!j.at("concepts").is_array()) throw ParseError("ontology: \"concepts\" must be an array");
        for (const json& c : j.at("concepts")) {
            if (!c.is_string()) throw ParseError("ontology: concept ids must be strings");
            std::string id = c.get<std::string>();
            if (o.index_.count(id)) throw ParseError("ontology: duplicate concept \"" + id + "\"");
            o.index_[id] = static_cast<int>(o.ids_.size());
            o.ids_.push_back(id);
        }
    }

    auto check_known = [&](const std::string& id, const char* where) {
        if (!o.index_.count(id)) {
            throw UnknownConceptError(std::string("ontology: ") + where +
                                      " references undeclared concept \"" + id + "\"");
        }
    };

    auto subclass = read_pair_list(j, "subclass_of", "ontology");
    auto equivalent = read_pair_list(j, "equivalent", "ontology");
    for (const auto& [a, b] : subclass) {
        check_known(a, "subclass_of");
        check_known(b, "subclass_of");
    }
    for (const auto& [a, b] : equivalent) {
        check_known(a, "equivalent");
        check_known(b, "equivalent");
    }

    if (j.contains("labels")) {
        const json& lab = j.at("labels");
        if (!lab.is_object()) throw ParseError("ontology: \"labels\" must be an object");
        for (auto it = lab.begin(); it != lab.end(); ++it) {
            check_known(it.key(), "labels");
            if (!it.value().is_array()) throw ParseError("ontology: label lists must be arrays");
            std::vector<std::string> ls;
            for (const json& s : it.value()) {
                if (!s.is_string()) throw ParseError("ontology: labels must be strings");
                ls.push_back(s.get<std::string>());
            }
            o.labels_[it.key()] = std::move(ls);
        }
    }

    const size_t n = o.ids_.size();
    UnionFind uf(n);
    for (const auto& [a, b] : equivalent) uf.unite(o.index_[a], o.index_[b]);
    o.rep_.resize(n);
    o.class_size_.assign(n, 0);
    for (size_t i = 0; i < n; ++i) {
        o.rep_[i] = uf.find(static_cast<int>(i));
        o.class_size_[o.rep_[i]]++;
    }

    // edges over representatives; self-edges (within one equivalence class) drop out
    std::vector<std::vector<int>> adj(n);
    for (const auto& [child, parent] : subclass) {
        int c = o.rep_[o.index_[child]];
        int p = o.rep_[o.index_[parent]];
        if (c != p) adj[c].push_back(p);
    }

    // cycle check + strict closure via DFS with memoized reachability
    o.reach_.assign(n, {});
    std::vector<int> state(n, 0); // 0 unvisited, 1 on stack, 2 done
    std::function<void(int)> dfs = [&](int u) {
        state[u] = 1;
        o.reach_[u].assign(n, false);
        for (int v : adj[u]) {
            if (state[v] == 1) {
                throw CycleError("ontology: subsumption cycle through \"" + o.ids_[v] + "\"");
            }
            if (state[v] == 0) dfs(v);
            o.reach_[u][v] = true;
            for (size_t w = 0; w < n; ++w) {
                if (o.reach_[v][w]) o.reach_[u][w] = true;
            }
        }
        state[u] = 2;
    };
    for (size_t i = 0; i < n; ++i) {
        if (o.rep_[i] == static_cast<int>(i) && state[i] == 0) dfs(static_cast<int>(i));
    }
    return o;
}

Ontology Ontology::load_file(const std::string& path) {
    return parse(read_file(path));
}

bool Ontology::has_concept(const std::string& id) const {
    return index_.count(id) > 0;
}

void Ontology::require_concept(const std::string& id, const std::string& context) const {
    if (!has_concept(id)) {
        throw UnknownConceptError(context + ": unknown concept \"" + id + "\"");
    }
}

std::vector<std::string> Ontology::concepts() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [id, _] : index_) out.push_back(id);
    return out;
}

int Ontology::rep_of(const std::string& id, const std::string& context) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw UnknownConceptError(context + ": unknown concept \"" + id + "\"");
    }
    return rep_[it->second];
}

size_t Ontology::closure_pair_count() const {
    size_t count = 0;
    for (const auto& [a, ia] : index_) {
        for (const auto& [b, ib] : index_) {
            int ra = rep_[ia], rb = rep_[ib];
            if (ra != rb && reach_[ra][rb]) ++count;
        }
    }
    return count;
}

bool Ontology::is_subsumed(const std::string& child, const std::string& parent) const {
    int c = rep_of(child, "is_subsumed");
    int p = rep_of(parent, "is_subsumed");
    if (c == p) return true;
    return reach_[c][p];
}

Degree Ontology::degree_of_match(const std::string& requested, const std::string& offered) const {
    int r = rep_of(requested, "degree_of_match");
    int f = rep_of(offered, "degree_of_match");
    if (r == f) return Degree::Exact;
    if (reach_[f][r]) return Degree::Plugin;   // offered strictly more specific
    if (reach_[r][f]) return Degree::Subsumes; // requested strictly more specific
    return Degree::Fail;
}

std::vector<std::string> Ontology::labels(const std::string& concept_id) const {
    auto it = labels_.find(concept_id);
    if (it == labels_.end()) return {};
    return it->second;
}

std::vector<std::string> Ontology::display_labels(const std::string& concept_id) const {
    auto ls = labels(concept_id);
    if (ls.empty()) ls.push_back(concept_local_name(concept_id));
    return ls;
}

bool Ontology::share_ancestor(const std::string& a, const std::string& b) const {
    int ra = rep_of(a, "share_ancestor");
    int rb = rep_of(b, "share_ancestor");
    if (ra == rb || reach_[ra][rb] || reach_[rb][ra]) return true;
    for (size_t w = 0; w < reach_[ra].size(); ++w) {
        if (reach_[ra][w] && reach_[rb][w]) return true;
    }
    return false;
}

} // namespace medc
