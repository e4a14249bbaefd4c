#include "medc/pattern_db.hpp"
#include "medc/errors.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <filesystem>

namespace medc {

namespace {

json record_to_json(const PatternRecord& r, bool canonical) {
    json comp = json::array();
    for (const auto& ref : r.composition) {
        comp.push_back({{"service", ref.service_id}, {"operation", ref.operation_id}});
    }
    return {{"signature", r.signature},
            {"composition", comp},
            {"score",
             {{"logic", r.score.logic},
              {"syntactic", r.score.syntactic},
              {"io_integrity", r.score.io_integrity},
              {"combined", r.score.combined}}},
            {"created_at", canonical ? "1970-01-01T00:00:00Z" : r.created_at},
            {"use_count", canonical ? 1L : r.use_count}};
}

PatternRecord record_from_json(const json& j) {
    std::string ctx = "pattern record";
    reject_unknown_keys(j, {"signature", "composition", "score", "created_at", "use_count"}, ctx);
    PatternRecord r;
    r.signature = require_string(j, "signature", ctx);
    if (!j.contains("composition") || !j.at("composition").is_array() || j.at("composition").empty()) {
        throw ParseError(ctx + ": missing composition");
    }
    for (const json& cj : j.at("composition")) {
        reject_unknown_keys(cj, {"service", "operation"}, ctx + ".composition");
        r.composition.push_back({require_string(cj, "service", ctx + ".composition"),
                                 require_string(cj, "operation", ctx + ".composition")});
    }
    if (!j.contains("score") || !j.at("score").is_object()) throw ParseError(ctx + ": missing score");
    const json& s = j.at("score");
    reject_unknown_keys(s, {"logic", "syntactic", "io_integrity", "combined"}, ctx + ".score");
    auto num = [&](const char* key) {
        if (!s.contains(key) || !s.at(key).is_number()) {
            throw ParseError(ctx + ".score: missing numeric \"" + std::string(key) + "\"");
        }
        return s.at(key).get<double>();
    };
    r.score.logic = num("logic");
    r.score.syntactic = num("syntactic");
    r.score.io_integrity = num("io_integrity");
    r.score.combined = num("combined");
    r.created_at = require_string(j, "created_at", ctx);
    if (!j.contains("use_count") || !j.at("use_count").is_number_integer()) {
        throw ParseError(ctx + ": missing integer use_count");
    }
    r.use_count = j.at("use_count").get<long>();
    if (r.use_count < 1) throw ParseError(ctx + ": use_count must be >= 1");
    return r;
}

} // namespace

PatternDatabase PatternDatabase::parse(const std::string& document) {
    json j = parse_json(document, "pattern database");
    if (!j.is_array()) throw ParseError("pattern database: must be a JSON array of records");
    PatternDatabase db;
    for (const json& rj : j) {
        PatternRecord r = record_from_json(rj);
        if (db.peek(r.signature)) {
            throw ParseError("pattern database: duplicate signature \"" + r.signature + "\"");
        }
        db.records_.push_back(std::move(r));
    }
    std::sort(db.records_.begin(), db.records_.end(),
              [](const PatternRecord& a, const PatternRecord& b) { return a.signature < b.signature; });
    return db;
}

PatternDatabase PatternDatabase::load_file(const std::string& path) {
    if (!std::filesystem::exists(path)) return PatternDatabase{};
    return parse(read_file(path));
}

std::string PatternDatabase::serialize(bool canonical) const {
    json j = json::array();
    for (const auto& r : records_) j.push_back(record_to_json(r, canonical));
    return j.dump(2) + "\n";
}

void PatternDatabase::save_file(const std::string& path, bool canonical) const {
    write_file_atomic(path, serialize(canonical));
}

const PatternRecord* PatternDatabase::lookup(const std::string& signature) {
    auto it = std::lower_bound(records_.begin(), records_.end(), signature,
                               [](const PatternRecord& r, const std::string& s) { return r.signature < s; });
    if (it == records_.end() || it->signature != signature) return nullptr;
    it->use_count += 1;
    return &*it;
}

const PatternRecord* PatternDatabase::peek(const std::string& signature) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), signature,
                               [](const PatternRecord& r, const std::string& s) { return r.signature < s; });
    if (it == records_.end() || it->signature != signature) return nullptr;
    return &*it;
}

const PatternRecord& PatternDatabase::store(const std::string& signature,
                                            const std::vector<OpRef>& composition,
                                            const MatchScore& score) {
    if (composition.empty()) throw ConfigError("pattern store: empty composition");
    auto it = std::lower_bound(records_.begin(), records_.end(), signature,
                               [](const PatternRecord& r, const std::string& s) { return r.signature < s; });
    if (it != records_.end() && it->signature == signature) return *it;
    PatternRecord r;
    r.signature = signature;
    r.composition = composition;
    r.score = score;
    r.created_at = iso8601_now_utc();
    r.use_count = 1;
    return *records_.insert(it, std::move(r));
}

} // namespace medc
