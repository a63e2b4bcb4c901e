#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "kafal/config.hpp"
#include "kafal/dataset.hpp"
#include "kafal/federation.hpp"
#include "kafal/metrics.hpp"

namespace kafal {

// Per-cycle final accuracies of every (strategy, seed) run.
struct ExperimentSummary {
    // strategy -> seed -> accuracy at the last round of each cycle
    std::map<std::string, std::map<std::uint64_t, std::vector<double>>> finals;
    // strategy -> seed -> full round series (insertion order of the run)
    std::map<std::string, std::map<std::uint64_t, std::vector<RoundRecord>>> rounds;
};

inline nlohmann::ordered_json summary_to_json(const ExperimentSummary& summary,
                                              const ExperimentConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["dataset"] = cfg.dataset == DatasetKind::blobs ? "blobs" : "mnist";
    doc["cycles"] = cfg.fed.cycles;
    doc["rounds"] = cfg.fed.rounds;
    nlohmann::ordered_json strategies;
    for (const auto& [name, by_seed] : summary.finals) {
        nlohmann::ordered_json entry;
        nlohmann::ordered_json cycles = nlohmann::ordered_json::array();
        const std::size_t num_cycles = by_seed.begin()->second.size();
        for (std::size_t a = 0; a < num_cycles; ++a) {
            std::vector<double> finals;
            nlohmann::ordered_json per_seed;
            for (const auto& [seed, accs] : by_seed) {
                finals.push_back(accs[a]);
                per_seed[std::to_string(seed)] = accs[a];
            }
            const SeriesStats stats = series_stats(finals);
            nlohmann::ordered_json cyc;
            cyc["cycle"] = a + 1;
            cyc["mean_accuracy"] = stats.mean;
            cyc["stddev"] = stats.stddev;
            cyc["per_seed"] = per_seed;
            cycles.push_back(cyc);
        }
        entry["cycles"] = cycles;
        strategies[name] = entry;
    }
    doc["strategies"] = strategies;
    return doc;
}

// Runs every (strategy x seed) pair over one shared dataset, streaming rows
// to CSV and writing the cross-seed summary JSON at the end. Seeds are
// reused across strategies so comparisons are paired.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                        std::ostream& log = std::cerr) {
    cfg.validate();
    const std::filesystem::path out_dir(cfg.out_dir);
    MetricsWriter writer(out_dir, data.num_classes);

    ExperimentSummary summary;
    for (Strategy strategy : cfg.strategies) {
        const std::string name = to_string(strategy);
        for (std::uint64_t seed : cfg.seeds) {
            FederationConfig fed = cfg.fed;
            fed.strategy = strategy;
            PartitionPlan plan =
                dirichlet_partition(data.train_index(), fed.num_clients, cfg.alpha, seed);
            Simulation sim(fed, data.train_x, data.train_y, data.test_x, data.test_y, plan,
                           data.num_classes, seed, cfg.threads);

            std::unique_ptr<ScoreDumpWriter> dump;
            if (cfg.dump_scores)
                dump = std::make_unique<ScoreDumpWriter>(out_dir, name, seed);

            std::vector<RoundRecord> rounds = sim.run(
                [&](const RoundRecord& r) { writer.write({seed, name, r}); },
                [&](const AcquisitionEvent& ev) {
                    if (ev.zero_substituted > 0)
                        log << name << " seed " << seed << ": cycle " << ev.cycle << " client "
                            << ev.client << " substituted " << ev.zero_substituted
                            << " zero-count classes\n";
                    if (dump) dump->write(ev, data.train_y);
                });

            std::vector<double>& finals = summary.finals[name][seed];
            for (const RoundRecord& r : rounds)
                if (r.round == cfg.fed.rounds) finals.push_back(r.accuracy);
            summary.rounds[name][seed] = std::move(rounds);
        }
    }

    std::ofstream json_out(out_dir / "summary.json");
    json_out << summary_to_json(summary, cfg).dump(2) << '\n';
    return summary;
}

// First round (scanning cycle 1) whose accuracy reaches `target`; -1 if none.
inline int rounds_to_target_in_cycle(const std::vector<RoundRecord>& rounds, double target,
                                     int cycle = 1) {
    for (const RoundRecord& r : rounds)
        if (r.cycle == cycle && r.accuracy >= target) return r.round;
    return -1;
}

// Reads a metrics.csv back into records (used by the report verb).
inline std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw data_error("cannot open " + file.string());
    std::vector<MetricsRecord> rows;
    std::string line;
    if (!std::getline(in, line)) throw data_error(file.string() + ": empty file");
    if (line != "seed,strategy,cycle,round,labelled_fraction,test_accuracy,seconds")
        throw data_error(file.string() + ": unexpected header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw data_error(file.string() + ": bad row at line " + std::to_string(lineno));
        MetricsRecord rec;
        rec.seed = std::stoull(fields[0]);
        rec.strategy = fields[1];
        rec.round.cycle = std::stoi(fields[2]);
        rec.round.round = std::stoi(fields[3]);
        rec.round.labelled_fraction = std::stod(fields[4]);
        rec.round.accuracy = std::stod(fields[5]);
        rec.round.seconds = std::stod(fields[6]);
        rows.push_back(std::move(rec));
    }
    return rows;
}

} // namespace kafal
