#pragma once

#include "medc/matchmaker.hpp"

#include <optional>
#include <string>
#include <vector>

namespace medc {

struct PatternRecord {
    std::string signature;
    std::vector<OpRef> composition;
    MatchScore score;
    std::string created_at; // ISO 8601 UTC
    long use_count = 1;
};

// persisted cache of previously successful group -> composition matches
class PatternDatabase {
public:
    static PatternDatabase parse(const std::string& document);
    static PatternDatabase load_file(const std::string& path); // missing file -> empty db

    // canonical=true pins created_at/use_count so byte comparison ignores them
    std::string serialize(bool canonical = false) const;
    void save_file(const std::string& path, bool canonical = false) const;

    // hit increments use_count
    const PatternRecord* lookup(const std::string& signature);
    const PatternRecord* peek(const std::string& signature) const;

    // no-op when the signature is already present
    const PatternRecord& store(const std::string& signature, const std::vector<OpRef>& composition,
                               const MatchScore& score);

    const std::vector<PatternRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

private:
    std::vector<PatternRecord> records_; // kept sorted by signature
};

} // namespace medc
