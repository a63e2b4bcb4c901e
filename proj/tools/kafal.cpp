// Federated active learning simulator CLI.
//
// Verbs:
//   run        full experiment over the configured strategies x seeds
//   partition  emit the Dirichlet partition plan only
//   score      train one cycle, dump every client's acquisition scores
//   report     aggregate metrics CSVs; optional rounds-to-target table

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kafal/config.hpp"
#include "kafal/dataset.hpp"
#include "kafal/errors.hpp"
#include "kafal/experiment.hpp"
#include "kafal/federation.hpp"
#include "kafal/metrics.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::string strategies_override;
    std::int64_t seed_override = -1;
    int threads_override = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--out", args.out_override, "output directory override");
    cmd->add_option("--strategies", args.strategies_override,
                    "comma-separated strategy list override");
    cmd->add_option("--seed-override", args.seed_override, "run a single seed");
    cmd->add_option("--threads", args.threads_override, "worker pool size override");
}

kafal::ExperimentConfig load_config(const CommonArgs& args) {
    kafal::ExperimentConfig cfg = kafal::load_experiment_config(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.seed_override >= 0)
        cfg.seeds = {static_cast<std::uint64_t>(args.seed_override)};
    if (args.threads_override > 0) cfg.threads = args.threads_override;
    if (!args.strategies_override.empty()) {
        cfg.strategies.clear();
        std::stringstream ss(args.strategies_override);
        std::string item;
        while (std::getline(ss, item, ','))
            cfg.strategies.push_back(kafal::parse_strategy(item));
        if (cfg.strategies.empty())
            throw kafal::config_error("--strategies: empty list");
        cfg.fed.strategy = cfg.strategies.front();
    }
    cfg.validate();
    return cfg;
}

int cmd_run(const CommonArgs& args) {
    kafal::ExperimentConfig cfg = load_config(args);
    kafal::Dataset data = cfg.load_dataset();
    kafal::run_experiment(cfg, data);
    std::cout << "wrote " << cfg.out_dir << "/metrics.csv, per_class.csv, summary.json\n";
    return 0;
}

int cmd_partition(const CommonArgs& args) {
    kafal::ExperimentConfig cfg = load_config(args);
    kafal::Dataset data = cfg.load_dataset();
    std::filesystem::create_directories(cfg.out_dir);
    for (std::uint64_t seed : cfg.seeds) {
        kafal::PartitionPlan plan = kafal::dirichlet_partition(
            data.train_index(), cfg.fed.num_clients, cfg.alpha, seed);
        nlohmann::ordered_json doc;
        doc["seed"] = seed;
        doc["alpha"] = plan.alpha;
        doc["prior"] = plan.prior;
        nlohmann::ordered_json clients;
        for (std::size_t k = 0; k < plan.client_ids.size(); ++k)
            clients[std::to_string(k)] = plan.client_ids[k];
        doc["clients"] = clients;
        const auto path =
            std::filesystem::path(cfg.out_dir) / ("partition_seed" + std::to_string(seed) + ".json");
        std::ofstream out(path);
        out << doc.dump(2) << '\n';
        std::cout << "wrote " << path.string() << '\n';
    }
    return 0;
}

int cmd_score(const CommonArgs& args) {
    kafal::ExperimentConfig cfg = load_config(args);
    kafal::Dataset data = cfg.load_dataset();
    std::filesystem::create_directories(cfg.out_dir);

    // One federated training phase, then a scoring pass; pools stay intact.
    kafal::FederationConfig fed = cfg.fed;
    fed.cycles = 1;
    fed.budget_fraction = 0.0;
    for (kafal::Strategy strategy : cfg.strategies) {
        fed.strategy = strategy;
        for (std::uint64_t seed : cfg.seeds) {
            kafal::PartitionPlan plan = kafal::dirichlet_partition(
                data.train_index(), fed.num_clients, cfg.alpha, seed);
            kafal::Simulation sim(fed, data.train_x, data.train_y, data.test_x, data.test_y,
                                  plan, data.num_classes, seed, cfg.threads);
            sim.run();
            kafal::ScoreDumpWriter dump(cfg.out_dir, kafal::to_string(strategy), seed);
            for (int k = 0; k < fed.num_clients; ++k) {
                kafal::AcquisitionEvent ev = sim.score_client(1, k);
                if (ev.zero_substituted > 0)
                    std::cerr << kafal::to_string(strategy) << " seed " << seed << ": client "
                              << k << " substituted " << ev.zero_substituted
                              << " zero-count classes\n";
                dump.write(ev, data.train_y);
            }
        }
    }
    std::cout << "wrote score dumps under " << cfg.out_dir << '\n';
    return 0;
}

int cmd_report(const std::string& dir, double target, bool has_target) {
    const auto rows = kafal::read_metrics_csv(std::filesystem::path(dir) / "metrics.csv");

    // strategy -> seed -> per-cycle final accuracy (max round per cycle).
    std::map<std::string, std::map<std::uint64_t, std::map<int, kafal::RoundRecord>>> finals;
    int max_round = 0;
    for (const auto& rec : rows) max_round = std::max(max_round, rec.round.round);
    for (const auto& rec : rows)
        if (rec.round.round == max_round)
            finals[rec.strategy][rec.seed][rec.round.cycle] = rec.round;

    for (const auto& [strategy, by_seed] : finals) {
        std::map<int, std::vector<double>> by_cycle;
        for (const auto& [seed, cycles] : by_seed)
            for (const auto& [cycle, rec] : cycles) by_cycle[cycle].push_back(rec.accuracy);
        for (const auto& [cycle, accs] : by_cycle) {
            const kafal::SeriesStats stats = kafal::series_stats(accs);
            std::cout << strategy << " cycle " << cycle << ": mean " << stats.mean << " stddev "
                      << stats.stddev << " (" << accs.size() << " seeds)\n";
        }
    }

    if (has_target) {
        std::map<std::string, std::map<std::uint64_t, std::vector<kafal::RoundRecord>>> series;
        for (const auto& rec : rows) series[rec.strategy][rec.seed].push_back(rec.round);
        for (const auto& [strategy, by_seed] : series)
            for (const auto& [seed, rounds] : by_seed) {
                const int r = kafal::rounds_to_target_in_cycle(rounds, target);
                std::cout << "rounds_to_target " << strategy << " seed " << seed << ": "
                          << (r < 0 ? std::string("never") : std::to_string(r)) << '\n';
            }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated active learning simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, partition_args, score_args;
    auto* run_cmd = app.add_subcommand("run", "run the configured experiment");
    add_common(run_cmd, run_args);
    auto* partition_cmd = app.add_subcommand("partition", "emit partition plans only");
    add_common(partition_cmd, partition_args);
    auto* score_cmd = app.add_subcommand("score", "train one cycle and dump acquisition scores");
    add_common(score_cmd, score_args);

    std::string report_dir = "out";
    double target = 0.0;
    auto* report_cmd = app.add_subcommand("report", "aggregate metrics CSVs");
    report_cmd->add_option("--out", report_dir, "directory holding metrics.csv");
    auto* target_opt = report_cmd->add_option("--target", target, "accuracy target for rounds-to-target");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(kafal::exit_code::config);
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_args);
        if (partition_cmd->parsed()) return cmd_partition(partition_args);
        if (score_cmd->parsed()) return cmd_score(score_args);
        if (report_cmd->parsed()) return cmd_report(report_dir, target, target_opt->count() > 0);
    } catch (const kafal::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(kafal::exit_code::config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return static_cast<int>(kafal::exit_code::config);
    } catch (const kafal::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return static_cast<int>(kafal::exit_code::data_format);
    } catch (const kafal::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return static_cast<int>(kafal::exit_code::numeric);
    }
    return 0;
}
