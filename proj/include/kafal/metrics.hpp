#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/federation.hpp"

namespace kafal {

// One emitted metrics row: a round record tagged with its run.
struct MetricsRecord {
    std::uint64_t seed = 0;
    std::string strategy;
    RoundRecord round;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

} // namespace detail

// Streams metrics rows to `metrics.csv` with per-class accuracies in the
// sibling `per_class.csv`. Rows are flushed as they arrive so partial runs
// leave usable output.
class MetricsWriter {
public:
    MetricsWriter(const std::filesystem::path& dir, int num_classes) {
        std::filesystem::create_directories(dir);
        metrics_.open(dir / "metrics.csv");
        per_class_.open(dir / "per_class.csv");
        if (!metrics_ || !per_class_)
            throw data_error("cannot open metrics files under " + dir.string());
        metrics_ << "seed,strategy,cycle,round,labelled_fraction,test_accuracy,seconds\n";
        per_class_ << "seed,strategy,cycle,round";
        for (int c = 0; c < num_classes; ++c) per_class_ << ",class_" << c;
        per_class_ << "\n";
        metrics_.flush();
        per_class_.flush();
    }

    void write(const MetricsRecord& rec) {
        const RoundRecord& r = rec.round;
        metrics_ << rec.seed << ',' << rec.strategy << ',' << r.cycle << ',' << r.round << ','
                 << detail::fmt(r.labelled_fraction) << ',' << detail::fmt(r.accuracy) << ','
                 << detail::fmt(r.seconds, "%.3f") << '\n';
        per_class_ << rec.seed << ',' << rec.strategy << ',' << r.cycle << ',' << r.round;
        for (double a : r.per_class) per_class_ << ',' << detail::fmt(a);
        per_class_ << '\n';
        metrics_.flush();
        per_class_.flush();
    }

private:
    std::ofstream metrics_;
    std::ofstream per_class_;
};

// Streams (id, score, true class) rows from acquisition events.
class ScoreDumpWriter {
public:
    ScoreDumpWriter(const std::filesystem::path& dir, const std::string& strategy,
                    std::uint64_t seed) {
        std::filesystem::create_directories(dir);
        out_.open(dir / ("scores_" + strategy + "_seed" + std::to_string(seed) + ".csv"));
        if (!out_) throw data_error("cannot open score dump under " + dir.string());
        out_ << "cycle,client,id,score,true_class\n";
    }

    void write(const AcquisitionEvent& ev, const std::vector<int>& labels) {
        for (std::size_t i = 0; i < ev.scored_ids.size(); ++i)
            out_ << ev.cycle << ',' << ev.client << ',' << ev.scored_ids[i] << ','
                 << detail::fmt(ev.scores[i], "%.9g") << ','
                 << labels[static_cast<std::size_t>(ev.scored_ids[i])] << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

struct SeriesStats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline SeriesStats series_stats(const std::vector<double>& xs) {
    SeriesStats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

} // namespace kafal
