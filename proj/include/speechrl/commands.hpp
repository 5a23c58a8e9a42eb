#pragma once

// The extract / pretrain / train / report commands. The CLI binary is a thin
// argument parser over these, and tests drive them directly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speechrl/dataset.hpp"
#include "speechrl/errors.hpp"
#include "speechrl/metrics.hpp"
#include "speechrl/mfcc.hpp"
#include "speechrl/policy.hpp"
#include "speechrl/rl.hpp"
#include "speechrl/runconfig.hpp"
#include "speechrl/wav.hpp"

namespace speechrl {

namespace detail {

inline std::string partition_cache_path(const RunConfig& c, const std::string& partition) {
    return (std::filesystem::path(c.out) / ("features_" + partition + ".mfcc")).string();
}

// Content digest over the entry list and feature settings; matching digest
// means the cache is up to date and extraction is skipped.
inline std::string cache_digest(const DatasetIndex& part, const RunConfig& c) {
    std::ostringstream os;
    os << c.subset << "|" << c.target_frames << "|" << c.max_per_class << "|";
    for (const auto& e : part.entries) os << e.path << ":" << e.label_id << ";";
    const std::string s = os.str();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

inline std::optional<std::string> read_digest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string d;
    std::getline(in, d);
    return d;
}

}  // namespace detail

struct ExtractStats {
    std::size_t extracted = 0;
    std::size_t skipped_files = 0;   // unreadable/unsupported wavs
    std::size_t reused_caches = 0;   // partitions with an up-to-date cache
};

inline ExtractStats cmd_extract(const RunConfig& config, std::ostream& log = std::cerr) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out);

    const DatasetIndex index =
        scan_dataset(config.root, config.subset_kind(), config.max_per_class);
    const SplitResult split = split_dataset(index, config.split_spec());
    const FeatureConfig fc = config.feature_config();

    ExtractStats stats;
    const std::pair<const char*, const DatasetIndex*> partitions[] = {
        {"pretrain", &split.pretrain}, {"rl", &split.rl}, {"eval", &split.eval}};
    for (const auto& [name, part] : partitions) {
        const std::string cache_path = detail::partition_cache_path(config, name);
        const std::string digest_path = cache_path + ".digest";
        const std::string digest = detail::cache_digest(*part, config);
        if (fs::exists(cache_path) && detail::read_digest_file(digest_path) == digest) {
            ++stats.reused_caches;
            continue;
        }
        std::vector<FeatureMatrix> features;
        features.reserve(part->entries.size());
        for (const auto& entry : part->entries) {
            try {
                AudioClip clip = load_wav(entry.path);
                clip.label_id = entry.label_id;
                features.push_back(compute_mfcc(clip, fc));
            } catch (const MalformedWav& e) {
                log << "warning: skipping " << entry.path << " (" << e.what() << ")\n";
                ++stats.skipped_files;
            } catch (const UnsupportedFormat& e) {
                log << "warning: skipping " << entry.path << " (" << e.what() << ")\n";
                ++stats.skipped_files;
            }
        }
        cache_write(features, cache_path);
        std::ofstream(digest_path) << digest << "\n";
        stats.extracted += features.size();
    }
    write_resolved_config(config, (fs::path(config.out) / "config.resolved").string());
    if (stats.skipped_files > 0) {
        log << "extract: skipped " << stats.skipped_files << " unreadable file(s)\n";
    }
    return stats;
}

inline std::vector<FeatureMatrix> load_partition(const RunConfig& config,
                                                 const std::string& partition) {
    const std::string path = detail::partition_cache_path(config, partition);
    if (!std::filesystem::exists(path)) {
        throw IoFailure("feature cache missing: " + path + " (run `extract` first)");
    }
    return cache_read(path);
}

inline void write_pretrain_report(const PretrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "epoch,loss,train_acc\n";
    for (int e = 0; e < report.epochs_run; ++e) {
        out << (e + 1) << "," << format_number(report.epoch_loss[e]) << ","
            << format_number(report.epoch_accuracy[e]) << "\n";
    }
}

inline ArchitectureSpec arch_for(const RunConfig& config, const std::vector<FeatureMatrix>& sample) {
    ArchitectureSpec arch;
    arch.n_classes = static_cast<int>(label_map_for(config.subset_kind()).size());
    if (!sample.empty()) {
        arch.n_mfcc = sample.front().n;
        arch.frames = sample.front().f;
    }
    return arch;
}

inline int cmd_pretrain(const RunConfig& config, std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out);
    const auto pretrain_data = load_partition(config, "pretrain");
    const auto eval_data = load_partition(config, "eval");
    const ArchitectureSpec arch = arch_for(config, pretrain_data);

    PolicyNetwork net = init_policy(arch, config.seed);
    PretrainConfig pc;
    pc.epochs = config.pretrain_epochs;
    pc.batch_size = config.pretrain_batch;
    pc.lr = config.lr;
    pc.seed = derive_seed(config.seed, SeedStream::pretrain);
    auto [trained, report] = pretrain(net, pretrain_data, pc, &eval_data);

    save_policy(trained, (fs::path(config.out) / "pretrained.poln").string());
    write_pretrain_report(report, (fs::path(config.out) / "pretrain_report.csv").string());
    write_resolved_config(config, (fs::path(config.out) / "config.resolved").string());
    log << "pretrain: epochs=" << report.epochs_run
        << " final_loss=" << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back())
        << " eval_acc=" << report.eval_accuracy << "\n";
    return 0;
}

inline MetricsLog cmd_train(const RunConfig& config, std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out);
    const auto rl_data = load_partition(config, "rl");
    std::vector<FeatureMatrix> pretrain_data;
    std::vector<FeatureMatrix> eval_data;
    if (config.pretrain) {
        pretrain_data = load_partition(config, "pretrain");
        eval_data = load_partition(config, "eval");
    }
    const ArchitectureSpec arch = arch_for(config, rl_data);

    auto checkpoint = [&](PolicyNetwork& net, int episode) {
        save_policy(net, (fs::path(config.out) / ("ckpt_" + std::to_string(episode) + ".poln"))
                             .string());
    };
    ExperimentResult result =
        run_experiment(config.train_config(), arch, pretrain_data, rl_data,
                       config.pretrain ? &eval_data : nullptr, checkpoint);

    MetricsLog metrics;
    metrics.subset = config.subset;
    metrics.seed = config.seed;
    metrics.action_mode = config.mode;
    metrics.pretrained = result.pretrained;
    metrics.eta = config.eta;
    metrics.n_episodes = config.episodes;
    metrics.scores = result.scores;

    write_report(metrics, config.out);
    if (result.pretrained) {
        write_pretrain_report(result.pretrain_report,
                              (fs::path(config.out) / "pretrain_report.csv").string());
    }
    write_resolved_config(config, (fs::path(config.out) / "config.resolved").string());

    if (result.aborted) {
        throw Error("training aborted after " + std::to_string(result.scores.size()) +
                    " episodes (partial reports written): " + result.abort_reason);
    }
    if (!metrics.scores.empty()) {
        const double final5 = final_window_mean(metrics.scores, 5);
        log << "train: episodes=" << metrics.scores.size() << " final5_mean=" << final5
            << " accuracy_pct=" << accuracy(final5, config.eta) << "\n";
    }
    return metrics;
}

// Paired-run comparison. `with_dir` carries the pre-trained run, `without_dir`
// the scratch run; eta and subset must match.
inline void cmd_report(const std::string& with_dir, const std::string& without_dir,
                       const std::string& out_dir, std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    const auto cfg_with = read_key_values((fs::path(with_dir) / "config.resolved").string());
    const auto cfg_without = read_key_values((fs::path(without_dir) / "config.resolved").string());
    for (const char* key : {"eta", "subset"}) {
        if (cfg_with.at(key) != cfg_without.at(key)) {
            throw MismatchedRuns(std::string("runs differ in ") + key + ": " + cfg_with.at(key) +
                                 " vs " + cfg_without.at(key));
        }
    }
    const int eta = std::stoi(cfg_with.at("eta"));
    const auto scores_with = read_episodes_csv((fs::path(with_dir) / "episodes.csv").string());
    const auto scores_without =
        read_episodes_csv((fs::path(without_dir) / "episodes.csv").string());
    fs::create_directories(out_dir);

    {
        std::ofstream out(fs::path(out_dir) / "compare_rolling.csv");
        if (!out) throw IoFailure("cannot write compare_rolling.csv");
        out << "batch_start,mean_with,std_with,mean_without,std_without\n";
        const auto roll_with = rolling_stats(to_doubles(scores_with));
        const auto roll_without = rolling_stats(to_doubles(scores_without));
        const std::size_t rows = std::min(roll_with.size(), roll_without.size());
        for (std::size_t i = 0; i < rows; ++i) {
            out << (roll_with[i].start + 1) << "," << format_number(roll_with[i].mean) << ","
                << format_number(roll_with[i].stddev) << "," << format_number(roll_without[i].mean)
                << "," << format_number(roll_without[i].stddev) << "\n";
        }
    }

    const double final_with = final_window_mean(scores_with, 5);
    const double final_without = final_window_mean(scores_without, 5);
    const double imp = improvement(final_with, final_without, eta);
    {
        std::ofstream out(fs::path(out_dir) / "compare_summary.csv");
        if (!out) throw IoFailure("cannot write compare_summary.csv");
        out << "final5_with,final5_without,improvement_pct\n";
        out << format_number(final_with) << "," << format_number(final_without) << ","
            << format_number(imp) << "\n";
    }
    log << "report: final5_with=" << final_with << " final5_without=" << final_without
        << " improvement_pct=" << imp << "\n";
}

}  // namespace speechrl
