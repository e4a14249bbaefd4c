#pragma once

#include <map>
#include <string>
#include <vector>

namespace medc {

// Bag of lowercase tokens with term-frequency counts.
struct TokenBag {
    std::map<std::string, int> counts;
    int total = 0;

    bool empty() const { return counts.empty(); }
    bool operator==(const TokenBag&) const = default;
};

enum class Metric { Cosine, ExtendedJaccard, JensenShannon };

Metric metric_from_name(const std::string& name); // cosine | extended_jaccard | jensen_shannon
const char* metric_name(Metric m);

// Splits on non-alphanumeric characters and on lower->upper camel-case
// boundaries, lowercases, drops empty fragments. No stemming, digits kept.
TokenBag tokenize(const std::string& label);

// Score in [0,1]. Two empty bags score 1, exactly one empty scores 0.
double similarity(const TokenBag& a, const TokenBag& b, Metric m);

// Best pairwise score between two label lists; 0 if either list is empty.
double annotation_similarity(const std::vector<std::string>& a,
                             const std::vector<std::string>& b, Metric m);

} // namespace medc
