#include "medc/textsim.hpp"
#include "medc/errors.hpp"

#include <cctype>
#include <cmath>

namespace medc {

Metric metric_from_name(const std::string& name) {
    if (name == "cosine") return Metric::Cosine;
    if (name == "extended_jaccard") return Metric::ExtendedJaccard;
    if (name == "jensen_shannon") return Metric::JensenShannon;
    throw ConfigError("unknown similarity metric \"" + name + "\"");
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Cosine: return "cosine";
        case Metric::ExtendedJaccard: return "extended_jaccard";
        case Metric::JensenShannon: return "jensen_shannon";
    }
    return "cosine";
}

TokenBag tokenize(const std::string& label) {
    TokenBag bag;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            bag.counts[cur]++;
            bag.total++;
            cur.clear();
        }
    };
    unsigned char prev = 0;
    for (unsigned char c : label) {
        if (!std::isalnum(c)) {
            flush();
            prev = 0;
            continue;
        }
        if (std::islower(prev) && std::isupper(c)) flush(); // camel-case boundary
        cur += static_cast<char>(std::tolower(c));
        prev = c;
    }
    flush();
    return bag;
}

namespace {

double dot_product(const TokenBag& a, const TokenBag& b) {
    double dot = 0;
    for (const auto& [tok, ca] : a.counts) {
        auto it = b.counts.find(tok);
        if (it != b.counts.end()) dot += double(ca) * double(it->second);
    }
    return dot;
}

double norm_sq(const TokenBag& a) {
    double s = 0;
    for (const auto& [_, c] : a.counts) s += double(c) * double(c);
    return s;
}

// 1 - JSD(Pa, Pb)/ln 2 over relative-frequency distributions, natural log
double jensen_shannon(const TokenBag& a, const TokenBag& b) {
    double jsd = 0;
    auto accumulate = [&](const TokenBag& x, const TokenBag& y, int tx, int ty) {
        for (const auto& [tok, cx] : x.counts) {
            double p = double(cx) / tx;
            auto it = y.counts.find(tok);
            double q = it == y.counts.end() ? 0.0 : double(it->second) / ty;
            double m = 0.5 * (p + q);
            jsd += 0.5 * p * std::log(p / m);
        }
    };
    accumulate(a, b, a.total, b.total);
    accumulate(b, a, b.total, a.total);
    double score = 1.0 - jsd / std::log(2.0);
    if (score < 0) score = 0;
    if (score > 1) score = 1;
    return score;
}

} // namespace

double similarity(const TokenBag& a, const TokenBag& b, Metric m) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    switch (m) {
        case Metric::Cosine: {
            double dot = dot_product(a, b);
            return dot / std::sqrt(norm_sq(a) * norm_sq(b));
        }
        case Metric::ExtendedJaccard: {
            double dot = dot_product(a, b);
            return dot / (norm_sq(a) + norm_sq(b) - dot);
        }
        case Metric::JensenShannon:
            return jensen_shannon(a, b);
    }
    return 0.0;
}

double annotation_similarity(const std::vector<std::string>& a,
                             const std::vector<std::string>& b, Metric m) {
    if (a.empty() || b.empty()) return 0.0;
    double best = 0.0;
    for (const auto& la : a) {
        TokenBag ba = tokenize(la);
        for (const auto& lb : b) {
            double s = similarity(ba, tokenize(lb), m);
            if (s > best) best = s;
        }
    }
    return best;
}

} // namespace medc
