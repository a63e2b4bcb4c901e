#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kafal/dataset.hpp"
#include "kafal/errors.hpp"
#include "kafal/federation.hpp"

namespace kafal {

// Flat `key = value` config text: one key per line, '#' starts a comment.
inline std::map<std::string, std::string> parse_kv_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    return parse_kv_text(in);
}

enum class DatasetKind { blobs, mnist };

struct ExperimentConfig {
    FederationConfig fed;
    DatasetKind dataset = DatasetKind::blobs;
    BlobParams blobs;
    std::uint64_t blobs_data_seed = 1234;
    std::string mnist_dir = "data/mnist";
    double alpha = 0.1;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<Strategy> strategies{Strategy::ksas};
    std::string out_dir = "out";
    int threads = 1;
    bool dump_scores = false;

    void validate() const {
        fed.validate();
        if (seeds.empty()) throw config_error("config: seeds must not be empty");
        if (strategies.empty()) throw config_error("config: strategies must not be empty");
        if (alpha <= 0.0) throw config_error("config: alpha must be positive");
        if (threads < 1) throw config_error("config: threads must be >= 1");
    }

    Dataset load_dataset() const {
        if (dataset == DatasetKind::blobs) return make_blobs(blobs, blobs_data_seed);
        return load_mnist(mnist_dir);
    }
};

namespace detail {

struct KvReader {
    const std::map<std::string, std::string>& kv;
    std::set<std::string> seen;

    bool has(const std::string& key) {
        if (kv.count(key)) {
            seen.insert(key);
            return true;
        }
        return false;
    }
    std::string str(const std::string& key, const std::string& fallback) {
        return has(key) ? kv.at(key) : fallback;
    }
    double num(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(kv.at(key), &used);
            if (used != kv.at(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw config_error("config key '" + key + "': expected a number, got '" + kv.at(key) + "'");
        }
    }
    long integer(const std::string& key, long fallback) {
        const double v = num(key, static_cast<double>(fallback));
        const long n = static_cast<long>(v);
        if (static_cast<double>(n) != v)
            throw config_error("config key '" + key + "': expected an integer");
        return n;
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const std::string& v = kv.at(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw config_error("config key '" + key + "': expected true/false");
    }
    std::vector<std::string> list(const std::string& key, const std::string& fallback) {
        std::vector<std::string> out;
        std::stringstream ss(str(key, fallback));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto a = item.find_first_not_of(" \t");
            const auto b = item.find_last_not_of(" \t");
            if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
        }
        return out;
    }
};

} // namespace detail

inline ExperimentConfig experiment_from_kv(const std::map<std::string, std::string>& kv) {
    detail::KvReader r{kv, {}};
    ExperimentConfig cfg;

    const std::string ds = r.str("dataset", "blobs");
    if (ds == "blobs")
        cfg.dataset = DatasetKind::blobs;
    else if (ds == "mnist")
        cfg.dataset = DatasetKind::mnist;
    else
        throw config_error("config key 'dataset': unknown dataset '" + ds + "'");

    cfg.blobs.classes = static_cast<int>(r.integer("blobs.classes", cfg.blobs.classes));
    cfg.blobs.dim = static_cast<int>(r.integer("blobs.dim", cfg.blobs.dim));
    cfg.blobs.per_class = static_cast<int>(r.integer("blobs.per_class", cfg.blobs.per_class));
    cfg.blobs.spread = r.num("blobs.spread", cfg.blobs.spread);
    cfg.blobs.center_seed = static_cast<std::uint64_t>(r.integer("blobs.center_seed", 7));
    cfg.blobs_data_seed = static_cast<std::uint64_t>(r.integer("blobs.data_seed", 1234));
    cfg.mnist_dir = r.str("mnist.dir", cfg.mnist_dir);

    FederationConfig& f = cfg.fed;
    f.num_clients = static_cast<int>(r.integer("clients", f.num_clients));
    f.participation = r.num("participation", f.participation);
    f.rounds = static_cast<int>(r.integer("rounds", f.rounds));
    f.cycles = static_cast<int>(r.integer("cycles", f.cycles));
    f.initial_fraction = r.num("initial_fraction", f.initial_fraction);
    f.budget_fraction = r.num("budget_fraction", f.budget_fraction);
    f.lambda = r.num("lambda", f.lambda);
    f.nu = r.num("nu", f.nu);
    f.eta = r.num("eta", f.eta);
    f.epochs = static_cast<int>(r.integer("epochs", f.epochs));
    f.batch_size = static_cast<int>(r.integer("batch_size", f.batch_size));
    f.beta_a = r.num("beta_a", f.beta_a);
    f.beta_b = r.num("beta_b", f.beta_b);
    f.scoring_model = parse_scoring_model(r.str("scoring_model", "client"));
    f.compensation = r.boolean("compensation", f.compensation);
    f.mixup = r.boolean("mixup", f.mixup);
    f.fixed_gamma = r.boolean("fixed_gamma", f.fixed_gamma);
    f.balanced_loss = r.boolean("balanced_loss", f.balanced_loss);
    f.mix_logits = r.boolean("mix_logits", f.mix_logits);
    f.hidden.clear();
    for (const std::string& h : r.list("hidden", "64"))
        f.hidden.push_back(static_cast<int>(std::stol(h)));

    cfg.alpha = r.num("alpha", cfg.alpha);
    cfg.seeds.clear();
    for (const std::string& s : r.list("seeds", "1,2,3,4,5"))
        cfg.seeds.push_back(static_cast<std::uint64_t>(std::stoull(s)));
    cfg.strategies.clear();
    for (const std::string& s : r.list("strategies", "ksas"))
        cfg.strategies.push_back(parse_strategy(s));
    if (!cfg.strategies.empty()) f.strategy = cfg.strategies.front();
    cfg.out_dir = r.str("out", cfg.out_dir);
    cfg.threads = static_cast<int>(r.integer("threads", cfg.threads));
    cfg.dump_scores = r.boolean("dump_scores", cfg.dump_scores);

    for (const auto& [key, value] : kv)
        if (!r.seen.count(key)) throw config_error("config: unknown key '" + key + "'");

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_from_kv(parse_kv_file(path));
}

} // namespace kafal
