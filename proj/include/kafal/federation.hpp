#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/matrix.hpp"
#include "kafal/model.hpp"
#include "kafal/partition.hpp"
#include "kafal/rng.hpp"
#include "kafal/sampling.hpp"

namespace kafal {

struct FederationConfig {
    int num_clients = 10;
    double participation = 0.8; // fraction of clients updated per round
    int rounds = 10;            // communication rounds per active cycle
    int cycles = 5;             // active sampling cycles
    double initial_fraction = 0.1;
    double budget_fraction = 0.05;
    double lambda = 1.0;
    double nu = 0.5; // weight of the labelled loss in the combined update
    double eta = 0.1;
    int epochs = 5;
    int batch_size = 32;
    double beta_a = 2.0;
    double beta_b = 2.0;
    Strategy strategy = Strategy::ksas;
    ScoringModel scoring_model = ScoringModel::client;
    bool compensation = true;  // off: plain balanced-CE federated update
    bool mixup = true;         // off: distill on unmixed unlabelled batches
    bool fixed_gamma = false;  // on: distillation weight fixed to 1/C
    bool balanced_loss = true; // off: labelled loss uses unit class counts
    bool mix_logits = false;   // on: targets are mixtures of unmixed global logits
    std::vector<int> hidden{64};

    void validate() const {
        if (num_clients < 1) throw config_error("config: clients must be >= 1");
        if (participation <= 0.0 || participation > 1.0)
            throw config_error("config: participation must be in (0,1]");
        if (rounds < 1 || cycles < 1) throw config_error("config: rounds/cycles must be >= 1");
        if (initial_fraction <= 0.0 || initial_fraction >= 1.0)
            throw config_error("config: initial_fraction must be in (0,1)");
        if (budget_fraction < 0.0) throw config_error("config: budget_fraction must be >= 0");
        if (lambda < 0.0 || !std::isfinite(lambda)) throw config_error("config: bad lambda");
        if (nu < 0.0 || nu > 1.0) throw config_error("config: nu must be in [0,1]");
        if (eta <= 0.0) throw config_error("config: eta must be positive");
        if (epochs < 0) throw config_error("config: epochs must be >= 0");
        if (batch_size < 1) throw config_error("config: batch_size must be >= 1");
        if (beta_a <= 0.0 || beta_b <= 0.0) throw config_error("config: beta parameters must be positive");
    }
};

struct ClientState {
    int id = 0;
    ParamVector params;
    std::vector<std::int64_t> labelled;
    std::vector<std::int64_t> unlabelled;
    ClassHistogram hist;
    ParamVector saved_global;
    int budget = 0;

    std::size_t pool_size() const { return labelled.size() + unlabelled.size(); }
};

struct ServerState {
    ParamVector params;
    ParamVector initial_params;
    int round = 0;
    int cycle = 0;
};

struct RoundRecord {
    int cycle = 0;
    int round = 0;
    double labelled_fraction = 0.0;
    double accuracy = 0.0;
    std::vector<double> per_class;
    double seconds = 0.0;
};

// One client's acquisition outcome, also used for score dumps.
struct AcquisitionEvent {
    int cycle = 0;
    int client = 0;
    std::vector<std::int64_t> scored_ids;
    std::vector<double> scores;
    std::vector<std::int64_t> selected;
    int zero_substituted = 0;
};

inline std::vector<int> select_clients(int num_clients, double participation,
                                       std::mt19937_64& eng) {
    const int m = static_cast<int>(std::ceil(participation * num_clients));
    std::vector<int> ids(num_clients);
    for (int i = 0; i < num_clients; ++i) ids[i] = i;
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> u(i, num_clients - 1);
        std::swap(ids[i], ids[u(eng)]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Inverse-frequency distillation weight; a zero count caps at the pool size.
inline double gamma_weight(int pseudo_label, const ClassHistogram& hist) {
    const long total = hist.total();
    if (total < 1) throw std::invalid_argument("gamma_weight: empty histogram");
    const long n = hist.counts[pseudo_label];
    return n > 0 ? static_cast<double>(total) / n : static_cast<double>(total);
}

struct CompenOptions {
    double beta_a = 2.0;
    double beta_b = 2.0;
    bool mixup = true;
    bool fixed_gamma = false;
    bool mix_logits = false;
};

// A batch paired with a permutation of itself and convexly combined:
// inputs[i] = beta[i] * x[i] + (1-beta[i]) * x[partner[i]], with the
// per-sample distillation weights mixed by the same coefficients.
struct MixedBatch {
    Matrix inputs;
    std::vector<double> beta;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> gamma;
};

// Draw order (permutation, then betas) is fixed so runs reproduce. With
// mixup disabled every beta is 1 and each sample pairs with itself.
inline MixedBatch build_mixed_batch(const Matrix& inputs, const std::vector<double>& gamma,
                                    const CompenOptions& opt, std::mt19937_64& eng) {
    const std::size_t batch = inputs.rows;
    std::vector<std::size_t> partner(batch);
    std::vector<double> beta(batch, 1.0);
    for (std::size_t i = 0; i < batch; ++i) partner[i] = i;
    if (opt.mixup) {
        std::shuffle(partner.begin(), partner.end(), eng);
        for (std::size_t i = 0; i < batch; ++i) beta[i] = beta_draw(eng, opt.beta_a, opt.beta_b);
    }

    MixedBatch out;
    out.inputs = Matrix(batch, inputs.cols);
    out.beta = std::move(beta);
    out.gamma.resize(batch);
    out.pairs.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const double b = out.beta[i];
        auto x1 = inputs.row(i);
        auto x2 = inputs.row(partner[i]);
        auto dst = out.inputs.row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = b * x1[c] + (1.0 - b) * x2[c];
        out.gamma[i] = b * gamma[i] + (1.0 - b) * gamma[partner[i]];
        out.pairs[i] = {i, partner[i]};
    }
    return out;
}

// Distillation loss from the frozen global snapshot on (mixed) unlabelled
// inputs: mean of Gamma~ * KL(softmax(z) || softmax(g(x~; w))). The returned
// gradient is with respect to the client parameters only.
inline LossGrad compensation_loss(const Matrix& unlabelled_inputs, const ParamVector& global_params,
                                  const ParamVector& client_params, const ClassHistogram& hist,
                                  const CompenOptions& opt, std::mt19937_64& eng) {
    const std::size_t batch = unlabelled_inputs.rows;
    if (batch == 0) return {0.0, GradientVector(client_params.size())};

    const std::size_t C = global_params.spec.num_classes();
    Matrix global_logits = forward(global_params, unlabelled_inputs);

    // Pseudo-labels come from the unmixed inputs; ties take the lowest class.
    std::vector<double> gamma(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const int pseudo = argmax_row(global_logits.row(i));
        gamma[i] = opt.fixed_gamma ? 1.0 / static_cast<double>(C) : gamma_weight(pseudo, hist);
    }

    MixedBatch mixed = build_mixed_batch(unlabelled_inputs, gamma, opt, eng);

    Matrix targets;
    if (opt.mix_logits) {
        targets = Matrix(batch, C);
        for (std::size_t i = 0; i < batch; ++i) {
            const double b = mixed.beta[i];
            auto z1 = global_logits.row(mixed.pairs[i].first);
            auto z2 = global_logits.row(mixed.pairs[i].second);
            auto dst = targets.row(i);
            for (std::size_t c = 0; c < C; ++c) dst[c] = b * z1[c] + (1.0 - b) * z2[c];
        }
    } else {
        targets = forward(global_params, mixed.inputs);
    }

    ForwardCache cache = forward_cached(client_params, mixed.inputs);
    Matrix dlogits(batch, C);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        auto p = softmax(targets.row(i));
        auto q = softmax(cache.logits.row(i));
        loss += mixed.gamma[i] * kl_divergence(p, q) * inv_b;
        auto d = dlogits.row(i);
        for (std::size_t c = 0; c < C; ++c) d[c] = mixed.gamma[i] * (q[c] - p[c]) * inv_b;
    }
    return {loss, backward(client_params, cache, dlogits)};
}

namespace detail {

inline Matrix gather_ids(const Matrix& features, const std::vector<std::int64_t>& ids) {
    return gather_rows(features, ids);
}

// Unlabelled companion batch: without replacement when the pool is large
// enough, with replacement otherwise.
inline std::vector<std::int64_t> draw_unlabelled(const std::vector<std::int64_t>& pool,
                                                 std::size_t want, std::mt19937_64& eng) {
    std::vector<std::int64_t> out;
    if (pool.empty() || want == 0) return out;
    out.reserve(want);
    if (pool.size() >= want) {
        std::vector<std::int64_t> ids = pool;
        for (std::size_t i = 0; i < want; ++i) {
            std::uniform_int_distribution<std::size_t> u(i, ids.size() - 1);
            std::swap(ids[i], ids[u(eng)]);
            out.push_back(ids[i]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
        for (std::size_t i = 0; i < want; ++i) out.push_back(pool[u(eng)]);
    }
    return out;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(threads, static_cast<int>(count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace detail

// One client's local pass: every labelled mini-batch steps on the balanced
// loss, joined from round 2 on by the distillation term on an unlabelled
// companion batch.
inline void local_update(ClientState& client, const ParamVector& global_snapshot,
                         const FederationConfig& cfg, int round, const Matrix& features,
                         const std::vector<int>& labels, std::mt19937_64& eng) {
    if (client.labelled.empty())
        throw std::invalid_argument("local_update: client " + std::to_string(client.id) +
                                    " has no labelled data");
    const std::size_t C = client.hist.num_classes();
    ClassHistogram effective = client.hist;
    if (!cfg.balanced_loss)
        for (auto& n : effective.counts) n = 1;

    CompenOptions opt{cfg.beta_a, cfg.beta_b, cfg.mixup, cfg.fixed_gamma, cfg.mix_logits};
    const bool compensate = cfg.compensation && round > 1;

    try {
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::vector<std::int64_t> order = client.labelled;
            std::shuffle(order.begin(), order.end(), eng);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t n =
                    std::min<std::size_t>(cfg.batch_size, order.size() - start);
                std::vector<std::int64_t> batch_ids(order.begin() + start,
                                                    order.begin() + start + n);
                Batch batch;
                batch.inputs = detail::gather_ids(features, batch_ids);
                batch.labels.reserve(n);
                for (auto id : batch_ids)
                    batch.labels.push_back(labels[static_cast<std::size_t>(id)]);

                LossGrad client_term = balanced_ce(client.params, batch, effective);
                if (!compensate) {
                    client.params = sgd_step(client.params, client_term.grad, cfg.eta);
                    continue;
                }

                auto unl_ids = detail::draw_unlabelled(client.unlabelled, n, eng);
                LossGrad compen;
                if (unl_ids.empty()) {
                    compen = {0.0, GradientVector(client.params.size())};
                } else {
                    Matrix unl = detail::gather_ids(features, unl_ids);
                    compen = compensation_loss(unl, global_snapshot, client.params, client.hist,
                                               opt, eng);
                }
                GradientVector combined(client.params.size());
                for (std::size_t i = 0; i < combined.size(); ++i)
                    combined.values[i] =
                        cfg.nu * client_term.grad.values[i] + (1.0 - cfg.nu) * compen.grad.values[i];
                client.params = sgd_step(client.params, combined, cfg.eta);
            }
        }
    } catch (const numeric_error& e) {
        throw numeric_error("round " + std::to_string(round) + ", client " +
                            std::to_string(client.id) + ": " + e.what());
    }
    (void)C;
}

// Labelled-pool-size weighted parameter average.
inline ParamVector aggregate(const std::vector<const ClientState*>& participants) {
    if (participants.empty()) throw config_error("aggregate: no participants");
    double total = 0.0;
    for (const ClientState* c : participants) total += static_cast<double>(c->hist.total());
    if (total <= 0.0) throw config_error("aggregate: total labelled count is zero");
    ParamVector out(participants.front()->params.spec);
    for (const ClientState* c : participants) {
        const double w = static_cast<double>(c->hist.total()) / total;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += w * c->params.values[i];
    }
    return out;
}

// Full simulation: Dirichlet-partitioned clients, per-cycle federated
// training from a fixed initial snapshot, then per-client acquisition.
class Simulation {
public:
    Simulation(FederationConfig cfg, const Matrix& train_x, const std::vector<int>& train_y,
               const Matrix& test_x, const std::vector<int>& test_y, const PartitionPlan& plan,
               int num_classes, std::uint64_t seed, int threads = 1)
        : cfg_(std::move(cfg)),
          train_x_(train_x),
          train_y_(train_y),
          test_x_(test_x),
          test_y_(test_y),
          num_classes_(num_classes),
          seed_(seed),
          threads_(std::max(1, threads)) {
        cfg_.validate();
        if (plan.client_ids.size() != static_cast<std::size_t>(cfg_.num_clients))
            throw config_error("simulation: partition plan does not match client count");

        ModelSpec spec;
        spec.widths.push_back(static_cast<int>(train_x.cols));
        for (int h : cfg_.hidden) spec.widths.push_back(h);
        spec.widths.push_back(num_classes);
        auto init_eng = make_engine(seed_, {stream::model_init});
        server_.initial_params = init_params(spec, init_eng);
        server_.params = server_.initial_params;

        clients_.resize(cfg_.num_clients);
        for (int k = 0; k < cfg_.num_clients; ++k) {
            ClientState& c = clients_[k];
            c.id = k;
            auto [lab, unl] = initial_label_split(plan.client_ids[k], cfg_.initial_fraction,
                                                  derive_seed(seed_, {static_cast<std::uint64_t>(k)}));
            c.labelled = std::move(lab);
            c.unlabelled = std::move(unl);
            c.hist = class_histogram(c.labelled, train_y_, num_classes);
            c.params = server_.initial_params;
            c.saved_global = server_.initial_params;
            c.budget = static_cast<int>(
                std::llround(cfg_.budget_fraction * static_cast<double>(plan.client_ids[k].size())));
        }
    }

    using RoundSink = std::function<void(const RoundRecord&)>;
    using AcquisitionSink = std::function<void(const AcquisitionEvent&)>;

    std::vector<RoundRecord> run(const RoundSink& on_round = {},
                                 const AcquisitionSink& on_acquire = {}) {
        std::vector<RoundRecord> records;
        for (int cycle = 1; cycle <= cfg_.cycles; ++cycle) {
            server_.cycle = cycle;
            server_.params = server_.initial_params;
            for (int round = 1; round <= cfg_.rounds; ++round) {
                const auto started = std::chrono::steady_clock::now();
                server_.round = round;
                // Selection and update streams are keyed by (round, client)
                // only: cycles restart from the same snapshot, so an
                // unchanged labelled pool replays the identical trajectory.
                auto sel_eng = make_engine(seed_, {stream::selection,
                                                   static_cast<std::uint64_t>(round)});
                const std::vector<int> chosen =
                    select_clients(cfg_.num_clients, cfg_.participation, sel_eng);

                const ParamVector broadcast = server_.params;
                detail::parallel_for(chosen.size(), threads_, [&](std::size_t i) {
                    ClientState& c = clients_[chosen[i]];
                    c.params = broadcast;
                    auto eng = make_engine(seed_, {stream::local_update,
                                                   static_cast<std::uint64_t>(round),
                                                   static_cast<std::uint64_t>(c.id)});
                    local_update(c, broadcast, cfg_, round, train_x_, train_y_, eng);
                });

                std::vector<const ClientState*> participants;
                participants.reserve(chosen.size());
                for (int k : chosen) participants.push_back(&clients_[k]);
                server_.params = aggregate(participants);
                for (int k : chosen) clients_[k].saved_global = server_.params;

                RoundRecord rec;
                rec.cycle = cycle;
                rec.round = round;
                rec.labelled_fraction = labelled_fraction();
                Evaluation ev = evaluate(server_.params, test_x_, test_y_);
                rec.accuracy = ev.accuracy;
                rec.per_class = std::move(ev.per_class);
                rec.seconds = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
                if (on_round) on_round(rec);
                records.push_back(std::move(rec));
            }
            acquire_all(cycle, on_acquire);
        }
        return records;
    }

    double labelled_fraction() const {
        std::size_t lab = 0, total = 0;
        for (const auto& c : clients_) {
            lab += c.labelled.size();
            total += c.pool_size();
        }
        return total > 0 ? static_cast<double>(lab) / total : 0.0;
    }

    const std::vector<ClientState>& clients() const { return clients_; }
    const ServerState& server() const { return server_; }

    // Scores one client's unlabelled pool with the configured strategy.
    AcquisitionEvent score_client(int cycle, int client_id) const {
        const ClientState& c = clients_[client_id];
        AcquisitionEvent ev;
        ev.cycle = cycle;
        ev.client = client_id;
        ev.scored_ids = c.unlabelled;
        if (c.unlabelled.empty()) return ev;

        const Strategy strat = cfg_.strategy;
        const bool ksas_family = strat == Strategy::ksas || strat == Strategy::vanilla_kl ||
                                 strat == Strategy::reversed_ksas;
        if (ksas_family) {
            const double lambda = strat == Strategy::vanilla_kl ? 0.0 : cfg_.lambda;
            ev.zero_substituted = zero_count_classes(c.hist);
            ev.scores = score_batched(c.unlabelled, [&](const Matrix& chunk) {
                Matrix lc = forward(c.params, chunk);
                Matrix lg = forward(c.saved_global, chunk);
                std::vector<double> out(chunk.rows);
                for (std::size_t i = 0; i < chunk.rows; ++i)
                    out[i] = strat == Strategy::reversed_ksas
                                 ? reversed_ksas_score(lc.row(i), lg.row(i), c.hist, lambda)
                                 : ksas_score(lc.row(i), lg.row(i), c.hist, lambda);
                return out;
            });
        } else if (strat == Strategy::entropy || strat == Strategy::margin) {
            const ParamVector& model =
                cfg_.scoring_model == ScoringModel::client ? c.params : c.saved_global;
            ev.scores = score_batched(c.unlabelled, [&](const Matrix& chunk) {
                Matrix logits = forward(model, chunk);
                std::vector<double> out(chunk.rows);
                for (std::size_t i = 0; i < chunk.rows; ++i) {
                    auto p = softmax(logits.row(i));
                    out[i] = strat == Strategy::entropy ? entropy_score(p) : margin_score(p);
                }
                return out;
            });
        } else if (strat == Strategy::random) {
            auto eng = make_engine(seed_, {stream::acquisition, static_cast<std::uint64_t>(cycle),
                                           static_cast<std::uint64_t>(client_id)});
            std::uniform_real_distribution<double> u(0.0, 1.0);
            ev.scores.resize(c.unlabelled.size());
            for (double& s : ev.scores) s = u(eng);
        } else { // coreset: scores are min distances to the labelled set
            const ParamVector& model =
                cfg_.scoring_model == ScoringModel::client ? c.params : c.saved_global;
            std::vector<std::int64_t> pool = c.labelled;
            pool.insert(pool.end(), c.unlabelled.begin(), c.unlabelled.end());
            Matrix feats = batched_features(model, pool);
            ev.scores.assign(c.unlabelled.size(),
                             std::numeric_limits<double>::infinity());
            for (std::size_t j = 0; j < c.unlabelled.size(); ++j) {
                auto fj = feats.row(c.labelled.size() + j);
                for (std::size_t i = 0; i < c.labelled.size(); ++i)
                    ev.scores[j] = std::min(ev.scores[j], squared_distance(fj, feats.row(i)));
                if (c.labelled.empty()) ev.scores[j] = 0.0;
            }
        }
        return ev;
    }

private:
    template <typename Fn>
    std::vector<double> score_batched(const std::vector<std::int64_t>& ids, Fn&& per_chunk) const {
        std::vector<double> scores;
        scores.reserve(ids.size());
        const std::size_t step = static_cast<std::size_t>(cfg_.batch_size);
        for (std::size_t start = 0; start < ids.size(); start += step) {
            const std::size_t n = std::min(step, ids.size() - start);
            std::vector<std::int64_t> chunk_ids(ids.begin() + start, ids.begin() + start + n);
            Matrix chunk = detail::gather_ids(train_x_, chunk_ids);
            auto part = per_chunk(chunk);
            scores.insert(scores.end(), part.begin(), part.end());
        }
        return scores;
    }

    Matrix batched_features(const ParamVector& model, const std::vector<std::int64_t>& ids) const {
        Matrix out;
        const std::size_t step = static_cast<std::size_t>(cfg_.batch_size);
        for (std::size_t start = 0; start < ids.size(); start += step) {
            const std::size_t n = std::min(step, ids.size() - start);
            std::vector<std::int64_t> chunk_ids(ids.begin() + start, ids.begin() + start + n);
            Matrix feats = penultimate_features(model, detail::gather_ids(train_x_, chunk_ids));
            if (out.cols == 0) out = Matrix(ids.size(), feats.cols);
            std::copy(feats.data.begin(), feats.data.end(),
                      out.data.begin() + start * feats.cols);
        }
        return out;
    }

    void acquire_all(int cycle, const AcquisitionSink& on_acquire) {
        std::vector<AcquisitionEvent> events(clients_.size());
        detail::parallel_for(clients_.size(), threads_, [&](std::size_t k) {
            ClientState& c = clients_[k];
            const std::size_t budget = std::min<std::size_t>(
                static_cast<std::size_t>(std::max(0, c.budget)), c.unlabelled.size());
            if (budget == 0) return;
            AcquisitionEvent ev = score_client(cycle, static_cast<int>(k));
            if (cfg_.strategy == Strategy::coreset) {
                const ParamVector& model =
                    cfg_.scoring_model == ScoringModel::client ? c.params : c.saved_global;
                std::vector<std::int64_t> pool = c.labelled;
                pool.insert(pool.end(), c.unlabelled.begin(), c.unlabelled.end());
                Matrix feats = batched_features(model, pool);
                std::vector<char> is_labelled(pool.size(), 0);
                for (std::size_t i = 0; i < c.labelled.size(); ++i) is_labelled[i] = 1;
                ev.selected = coreset_select(feats, pool, is_labelled, budget);
            } else {
                ev.selected = select_top(ev.scored_ids, ev.scores, budget,
                                         cfg_.strategy == Strategy::margin);
            }
            events[k] = std::move(ev);
        });

        for (std::size_t k = 0; k < clients_.size(); ++k) {
            AcquisitionEvent& ev = events[k];
            if (ev.selected.empty()) continue;
            ClientState& c = clients_[k];
            std::vector<std::int64_t> picked = ev.selected;
            std::sort(picked.begin(), picked.end());
            std::vector<std::int64_t> rest;
            rest.reserve(c.unlabelled.size() - picked.size());
            std::set_difference(c.unlabelled.begin(), c.unlabelled.end(), picked.begin(),
                                picked.end(), std::back_inserter(rest));
            c.unlabelled = std::move(rest);
            c.labelled.insert(c.labelled.end(), picked.begin(), picked.end());
            std::sort(c.labelled.begin(), c.labelled.end());
            c.hist = class_histogram(c.labelled, train_y_, num_classes_);
            if (on_acquire) on_acquire(ev);
        }
    }

    FederationConfig cfg_;
    const Matrix& train_x_;
    const std::vector<int>& train_y_;
    const Matrix& test_x_;
    const std::vector<int>& test_y_;
    int num_classes_;
    std::uint64_t seed_;
    int threads_;
    ServerState server_;
    std::vector<ClientState> clients_;
};

// First 1-based round index whose accuracy reaches the target, scanning in
// the given order; -1 when never reached.
inline int rounds_to_target(const std::vector<RoundRecord>& rounds, double target) {
    for (const RoundRecord& r : rounds)
        if (r.accuracy >= target) return r.round;
    return -1;
}

} // namespace kafal
