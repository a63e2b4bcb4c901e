#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/model.hpp"
#include "kafal/rng.hpp"

namespace kafal {

// A labelled dataset seen as ids + labels. Ids index rows of the feature
// matrix held elsewhere.
struct DatasetIndex {
    std::vector<std::int64_t> sample_ids;
    std::vector<int> labels;
    int num_classes = 0;

    void validate() const {
        if (sample_ids.size() != labels.size())
            throw config_error("dataset ids/labels length mismatch");
        for (int y : labels)
            if (y < 0 || y >= num_classes) throw config_error("dataset label out of range");
    }

    std::size_t size() const { return sample_ids.size(); }
};

struct PartitionPlan {
    std::vector<std::vector<std::int64_t>> client_ids;
    double alpha = 0.0;
    std::vector<double> prior;
};

// Split every class across the K clients by a Dir(alpha * 1_K) draw, with
// largest-remainder rounding so class totals are exact. Clients may end up
// with zero samples of some classes; that is the intended skew.
inline PartitionPlan dirichlet_partition(const DatasetIndex& data, int num_clients, double alpha,
                                         std::uint64_t seed) {
    data.validate();
    if (num_clients < 1) throw config_error("dirichlet_partition: need at least one client");
    if (alpha <= 0.0) throw config_error("dirichlet_partition: alpha must be positive");
    if (static_cast<std::size_t>(num_clients) > data.size())
        throw std::invalid_argument("dirichlet_partition: more clients than samples");

    const int C = data.num_classes;
    std::vector<std::vector<std::int64_t>> by_class(C);
    for (std::size_t i = 0; i < data.size(); ++i)
        by_class[data.labels[i]].push_back(data.sample_ids[i]);
    for (int c = 0; c < C; ++c)
        if (by_class[c].empty())
            throw std::invalid_argument("dirichlet_partition: class " + std::to_string(c) +
                                        " has no samples");

    PartitionPlan plan;
    plan.alpha = alpha;
    plan.client_ids.resize(num_clients);
    plan.prior.resize(C);
    for (int c = 0; c < C; ++c)
        plan.prior[c] = static_cast<double>(by_class[c].size()) / data.size();

    auto eng = make_engine(seed, {stream::partition});
    std::gamma_distribution<double> gamma(alpha, 1.0);
    for (int c = 0; c < C; ++c) {
        auto& ids = by_class[c];
        std::shuffle(ids.begin(), ids.end(), eng);

        std::vector<double> w(num_clients);
        double total = 0.0;
        for (double& v : w) {
            v = gamma(eng);
            total += v;
        }
        if (total <= 0.0) { // all-zero draw is possible for tiny alpha
            w.assign(num_clients, 1.0);
            total = num_clients;
        }

        // Largest-remainder rounding of quotas w_k * n.
        const std::size_t n = ids.size();
        std::vector<std::size_t> take(num_clients);
        std::vector<std::pair<double, int>> rem(num_clients);
        std::size_t assigned = 0;
        for (int k = 0; k < num_clients; ++k) {
            const double quota = w[k] / total * static_cast<double>(n);
            take[k] = static_cast<std::size_t>(std::floor(quota));
            rem[k] = {quota - std::floor(quota), k};
            assigned += take[k];
        }
        std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++take[rem[i].second];

        std::size_t cursor = 0;
        for (int k = 0; k < num_clients; ++k) {
            auto& dst = plan.client_ids[k];
            dst.insert(dst.end(), ids.begin() + cursor, ids.begin() + cursor + take[k]);
            cursor += take[k];
        }
    }
    for (auto& ids : plan.client_ids) std::sort(ids.begin(), ids.end());
    return plan;
}

// Uniform labelled/unlabelled split of one client's pool. The labelled size
// is round-half-up of fraction * pool size.
inline std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>
initial_label_split(const std::vector<std::int64_t>& client_ids, double fraction,
                    std::uint64_t seed) {
    if (client_ids.empty()) throw std::invalid_argument("initial_label_split: empty client pool");
    if (fraction <= 0.0 || fraction >= 1.0)
        throw config_error("initial_label_split: fraction must be in (0,1)");

    auto eng = make_engine(seed, {stream::label_split});
    std::vector<std::int64_t> ids = client_ids;
    std::shuffle(ids.begin(), ids.end(), eng);
    const auto m = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ids.size())));
    std::vector<std::int64_t> labelled(ids.begin(), ids.begin() + m);
    std::vector<std::int64_t> unlabelled(ids.begin() + m, ids.end());
    std::sort(labelled.begin(), labelled.end());
    std::sort(unlabelled.begin(), unlabelled.end());
    return {std::move(labelled), std::move(unlabelled)};
}

// Count labels of a labelled pool. `labels` is indexed by sample id.
inline ClassHistogram class_histogram(const std::vector<std::int64_t>& labelled_ids,
                                      const std::vector<int>& labels, int num_classes) {
    ClassHistogram h(num_classes);
    for (std::int64_t id : labelled_ids) ++h.counts[labels[static_cast<std::size_t>(id)]];
    return h;
}

// Total-variation distance between a client's class distribution and a prior.
inline double tv_distance(const ClassHistogram& hist, const std::vector<double>& prior) {
    const long total = hist.total();
    double s = 0.0;
    for (std::size_t c = 0; c < hist.num_classes(); ++c) {
        const double p = total > 0 ? static_cast<double>(hist.counts[c]) / total : 0.0;
        s += std::abs(p - prior[c]);
    }
    return 0.5 * s;
}

} // namespace kafal
