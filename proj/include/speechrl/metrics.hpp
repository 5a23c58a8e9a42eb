#pragma once

// Score bookkeeping: accuracy H (affine rescale of the episode score),
// velocity of score over early episodes, improvement between paired runs,
// non-overlapping rolling mean/std curves, and the CSV report files.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speechrl/errors.hpp"

namespace speechrl {

constexpr int kRewardMin = -1;
constexpr int kRewardMax = +1;

struct MetricsLog {
    // run metadata
    std::string subset;
    std::uint64_t seed = 0;
    std::string action_mode;
    bool pretrained = false;
    int eta = 50;
    int n_episodes = 0;

    std::vector<int> scores;  // V_j, episode j = index + 1
};

// H = (V - eta*min(r)) / (eta*(max(r)-min(r))) * 100
inline double accuracy(double score, int eta, int r_min = kRewardMin, int r_max = kRewardMax) {
    if (r_max <= r_min) throw Error("r_max must exceed r_min");
    const double lo = static_cast<double>(eta) * r_min;
    const double hi = static_cast<double>(eta) * r_max;
    if (score < lo || score > hi) {
        throw OutOfRangeScore("score " + std::to_string(score) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return (score - lo) / (static_cast<double>(eta) * (r_max - r_min)) * 100.0;
}

// 6-element inclusive slices: mean(V_x..V_{x+5}) and mean(V_0..V_5). The
// slice convention lives only here.
inline double window_mean6(const std::vector<double>& v, std::size_t start) {
    double s = 0.0;
    for (std::size_t i = start; i <= start + 5; ++i) s += v[i];
    return s / 6.0;
}

inline double velocity(const std::vector<double>& scores, std::size_t x) {
    if (x == 0) throw Error("velocity requires x > 0");
    if (scores.size() < x + 6) {
        throw InsufficientData("velocity at x=" + std::to_string(x) + " needs " +
                               std::to_string(x + 6) + " scores, have " +
                               std::to_string(scores.size()));
    }
    return (window_mean6(scores, x) - window_mean6(scores, 0)) / static_cast<double>(x);
}

inline double improvement(double score_with, double score_without, int eta,
                          int r_min = kRewardMin, int r_max = kRewardMax) {
    if (r_max <= r_min) throw Error("r_max must exceed r_min");
    return (score_with - score_without) / (static_cast<double>(eta) * (r_max - r_min)) * 100.0;
}

struct RollingBatch {
    std::size_t start;  // first episode index (0-based) of the batch
    double mean;
    double stddev;  // population standard deviation
    std::size_t count;
};

inline std::vector<RollingBatch> rolling_stats(const std::vector<double>& scores,
                                               std::size_t window = 200) {
    if (window < 2) throw Error("rolling window must be >= 2");
    std::vector<RollingBatch> out;
    for (std::size_t start = 0; start < scores.size(); start += window) {
        const std::size_t count = std::min(window, scores.size() - start);
        double mean = 0.0;
        for (std::size_t i = 0; i < count; ++i) mean += scores[start + i];
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double d = scores[start + i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(count);
        out.push_back({start, mean, std::sqrt(var), count});
    }
    return out;
}

inline double final_window_mean(const std::vector<int>& scores, std::size_t window) {
    if (scores.empty()) throw InsufficientData("no scores recorded");
    const std::size_t count = std::min(window, scores.size());
    double s = 0.0;
    for (std::size_t i = scores.size() - count; i < scores.size(); ++i) s += scores[i];
    return s / static_cast<double>(count);
}

// Numbers print round-trippable: integral values as "x.0", everything else
// with 17 significant digits.
inline std::string format_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<double> to_doubles(const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
}

namespace detail {
inline std::ofstream open_report_file(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoFailure("cannot write " + p.string());
    return out;
}
}  // namespace detail

// Emits episodes.csv, rolling.csv and summary.csv into out_dir. When a paired
// scratch-run log is supplied, summary.csv gains the improvement column
// (final-5 means per the published comparison).
inline void write_report(const MetricsLog& log, const std::string& out_dir,
                         const MetricsLog* paired_without = nullptr,
                         std::size_t rolling_window = 200) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        auto out = detail::open_report_file(fs::path(out_dir) / "episodes.csv");
        out << "episode,score,accuracy_pct\n";
        for (std::size_t j = 0; j < log.scores.size(); ++j) {
            out << (j + 1) << "," << log.scores[j] << ","
                << format_number(accuracy(log.scores[j], log.eta)) << "\n";
        }
        if (!out) throw IoFailure("short write on episodes.csv");
    }
    {
        auto out = detail::open_report_file(fs::path(out_dir) / "rolling.csv");
        out << "batch_start,mean,std,count\n";
        for (const auto& b : rolling_stats(to_doubles(log.scores), rolling_window)) {
            out << (b.start + 1) << "," << format_number(b.mean) << ","
                << format_number(b.stddev) << "," << b.count << "\n";
        }
        if (!out) throw IoFailure("short write on rolling.csv");
    }
    {
        auto out = detail::open_report_file(fs::path(out_dir) / "summary.csv");
        out << "final5_mean,velocity_500,velocity_1000,improvement_pct\n";
        if (!log.scores.empty()) {
            const auto series = to_doubles(log.scores);
            out << format_number(final_window_mean(log.scores, 5)) << ",";
            out << (series.size() >= 506 ? format_number(velocity(series, 500)) : "") << ",";
            out << (series.size() >= 1006 ? format_number(velocity(series, 1000)) : "") << ",";
            if (paired_without && !paired_without->scores.empty()) {
                if (paired_without->eta != log.eta) {
                    throw MismatchedRuns("paired runs have different eta");
                }
                out << format_number(improvement(final_window_mean(log.scores, 5),
                                                 final_window_mean(paired_without->scores, 5),
                                                 log.eta));
            }
            out << "\n";
        }
        if (!out) throw IoFailure("short write on summary.csv");
    }
}

// parse episodes.csv back into a score series (used by the report command)
inline std::vector<int> read_episodes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoFailure("empty episodes file: " + path);
    std::vector<int> scores;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw IoFailure("malformed episodes row in " + path + ": " + line);
        }
        scores.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    return scores;
}

}  // namespace speechrl
