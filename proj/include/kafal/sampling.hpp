#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/matrix.hpp"
#include "kafal/model.hpp"

namespace kafal {

enum class Strategy { ksas, vanilla_kl, reversed_ksas, entropy, margin, coreset, random };
enum class ScoringModel { client, global };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::ksas: return "ksas";
        case Strategy::vanilla_kl: return "vanilla_kl";
        case Strategy::reversed_ksas: return "reversed_ksas";
        case Strategy::entropy: return "entropy";
        case Strategy::margin: return "margin";
        case Strategy::coreset: return "coreset";
        case Strategy::random: return "random";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "ksas") return Strategy::ksas;
    if (s == "vanilla_kl") return Strategy::vanilla_kl;
    if (s == "reversed_ksas") return Strategy::reversed_ksas;
    if (s == "entropy") return Strategy::entropy;
    if (s == "margin") return Strategy::margin;
    if (s == "coreset") return Strategy::coreset;
    if (s == "random") return Strategy::random;
    throw config_error("unknown strategy '" + s + "'");
}

inline ScoringModel parse_scoring_model(const std::string& s) {
    if (s == "client") return ScoringModel::client;
    if (s == "global") return ScoringModel::global;
    throw config_error("unknown scoring model '" + s + "'");
}

// Zero labelled counts are substituted by 1 before the lambda power, so
// unseen classes keep a minimal nonzero weight and the lambda=0 reduction
// to a plain softmax is exact.
inline long substituted_count(long n) { return n > 0 ? n : 1; }

inline int zero_count_classes(const ClassHistogram& hist) {
    int z = 0;
    for (long n : hist.counts)
        if (n == 0) ++z;
    return z;
}

namespace detail {

// Count weights enter in log space: P_y = softmax(sign * lambda * ln n~_y + g_y).
inline std::vector<double> count_weighted_probs(std::span<const double> logits,
                                                const ClassHistogram& counts, double lambda,
                                                double sign) {
    if (logits.size() != counts.num_classes())
        throw std::invalid_argument("count-weighted probs: logits/histogram size mismatch");
    std::vector<double> shifted(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c)
        shifted[c] = logits[c] +
                     sign * lambda * std::log(static_cast<double>(substituted_count(counts.counts[c])));
    return softmax(shifted);
}

} // namespace detail

// Count-amplified class probability: P_y proportional to n_y^lambda * exp(g_y).
inline std::vector<double> ks_prob(std::span<const double> logits, const ClassHistogram& counts,
                                   double lambda) {
    return detail::count_weighted_probs(logits, counts, lambda, +1.0);
}

// Symmetric KL between the count-amplified client and global probabilities.
inline double ksas_score(std::span<const double> client_logits,
                         std::span<const double> global_logits, const ClassHistogram& counts,
                         double lambda) {
    auto p = ks_prob(client_logits, counts, lambda);
    auto q = ks_prob(global_logits, counts, lambda);
    return kl_divergence(p, q) + kl_divergence(q, p);
}

// Diversify variant: counts replaced by their reciprocals.
inline double reversed_ksas_score(std::span<const double> client_logits,
                                  std::span<const double> global_logits,
                                  const ClassHistogram& counts, double lambda) {
    auto p = detail::count_weighted_probs(client_logits, counts, lambda, -1.0);
    auto q = detail::count_weighted_probs(global_logits, counts, lambda, -1.0);
    return kl_divergence(p, q) + kl_divergence(q, p);
}

inline double entropy_score(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        const double pc = clamp_prob(p);
        h -= pc * std::log(pc);
    }
    return h;
}

// Gap between the two largest probabilities; smaller means more informative.
inline double margin_score(std::span<const double> probs) {
    if (probs.size() < 2) throw std::invalid_argument("margin_score: need at least two classes");
    double top = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    for (double p : probs) {
        if (p > top) {
            second = top;
            top = p;
        } else if (p > second) {
            second = p;
        }
    }
    return top - second;
}

// Ids of the b best scores. Ties break toward the lower id; the returned
// order is best-first.
inline std::vector<std::int64_t> select_top(const std::vector<std::int64_t>& ids,
                                            const std::vector<double>& scores, std::size_t b,
                                            bool smallest = false) {
    if (ids.size() != scores.size())
        throw std::invalid_argument("select_top: ids/scores length mismatch");
    if (b > ids.size()) throw std::invalid_argument("select_top: budget exceeds pool");
    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return smallest ? scores[a] < scores[c] : scores[a] > scores[c];
        return ids[a] < ids[c];
    });
    std::vector<std::int64_t> out(b);
    for (std::size_t i = 0; i < b; ++i) out[i] = ids[order[i]];
    return out;
}

// Greedy k-center over feature rows: repeatedly take the unlabelled point
// farthest from the nearest labelled-or-selected point. With no labelled
// points the first pick is the point farthest from the global feature mean.
// `features` rows align with `ids`; ties break toward the lower id.
inline std::vector<std::int64_t> coreset_select(const Matrix& features,
                                                const std::vector<std::int64_t>& ids,
                                                const std::vector<char>& is_labelled,
                                                std::size_t b) {
    const std::size_t n = ids.size();
    if (features.rows != n || is_labelled.size() != n)
        throw std::invalid_argument("coreset_select: misaligned inputs");
    std::vector<std::size_t> unlabelled;
    for (std::size_t i = 0; i < n; ++i)
        if (!is_labelled[i]) unlabelled.push_back(i);
    if (b > unlabelled.size()) throw std::invalid_argument("coreset_select: budget exceeds pool");

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> mindist(n, inf);
    bool any_labelled = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_labelled[i]) continue;
        any_labelled = true;
        for (std::size_t j : unlabelled)
            mindist[j] = std::min(mindist[j], squared_distance(features.row(j), features.row(i)));
    }

    std::vector<char> taken(n, 0);
    std::vector<std::int64_t> selected;
    selected.reserve(b);

    auto pick_best = [&](const std::vector<double>& dist) {
        std::size_t best = n;
        for (std::size_t j : unlabelled) {
            if (taken[j]) continue;
            if (best == n || dist[j] > dist[best] ||
                (dist[j] == dist[best] && ids[j] < ids[best]))
                best = j;
        }
        return best;
    };

    if (!any_labelled && b > 0) {
        std::vector<double> mean(features.cols, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < features.cols; ++c) mean[c] += features(i, c);
        for (double& v : mean) v /= static_cast<double>(n);
        std::vector<double> to_mean(n, -inf);
        for (std::size_t j : unlabelled) to_mean[j] = squared_distance(features.row(j), mean);
        const std::size_t first = pick_best(to_mean);
        taken[first] = 1;
        selected.push_back(ids[first]);
        for (std::size_t j : unlabelled)
            mindist[j] = squared_distance(features.row(j), features.row(first));
    }

    while (selected.size() < b) {
        const std::size_t best = pick_best(mindist);
        taken[best] = 1;
        selected.push_back(ids[best]);
        for (std::size_t j : unlabelled) {
            if (taken[j]) continue;
            mindist[j] =
                std::min(mindist[j], squared_distance(features.row(j), features.row(best)));
        }
    }
    return selected;
}

} // namespace kafal
