#pragma once

// Resolved run configuration. Mirrors the CLI flags one to one; the frozen
// copy written into each run directory is a flat key=value file whose keys
// are the long flag names, so it can be fed straight back via --config.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "speechrl/dataset.hpp"
#include "speechrl/errors.hpp"
#include "speechrl/metrics.hpp"
#include "speechrl/mfcc.hpp"
#include "speechrl/rl.hpp"

namespace speechrl {

struct RunConfig {
    std::string root;
    std::string out = "run";
    std::string subset = "binary";
    double split_pretrain = 0.4;
    double split_rl = 0.4;
    double split_eval = 0.2;
    std::uint64_t seed = 0;
    int episodes = 10000;
    int eta = 50;
    double lr = 1e-4;
    bool pretrain = true;
    int pretrain_epochs = 10;
    int pretrain_batch = 32;
    std::string mode = "greedy";
    std::string target_frames = "auto";
    std::uint64_t max_per_class = 0;  // 0 = unlimited
    int checkpoint_every = 1000;

    SubsetKind subset_kind() const { return subset_from_name(subset); }
    ActionMode action_mode() const { return action_mode_from_name(mode); }

    SplitSpec split_spec() const {
        SplitSpec s;
        s.pretrain_fraction = split_pretrain;
        s.rl_fraction = split_rl;
        s.eval_fraction = split_eval;
        s.seed = derive_seed(seed, SeedStream::split);
        s.validate();
        return s;
    }

    FeatureConfig feature_config() const {
        FeatureConfig fc;
        if (target_frames != "auto") {
            const int tf = std::stoi(target_frames);
            if (tf <= 0) throw Error("target-frames must be 'auto' or a positive integer");
            fc.target_frames = tf;
        }
        return fc;
    }

    TrainRunConfig train_config() const {
        TrainRunConfig tc;
        tc.n_episodes = episodes;
        tc.eta = eta;
        tc.mode = action_mode();
        tc.pretrain_enabled = pretrain;
        tc.pretrain_epochs = pretrain_epochs;
        tc.pretrain_batch_size = pretrain_batch;
        tc.lr = lr;
        tc.seed = seed;
        tc.checkpoint_every = checkpoint_every;
        return tc;
    }
};

inline void write_resolved_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "root=" << c.root << "\n";
    out << "out=" << c.out << "\n";
    out << "subset=" << c.subset << "\n";
    out << "split-pretrain=" << format_number(c.split_pretrain) << "\n";
    out << "split-rl=" << format_number(c.split_rl) << "\n";
    out << "split-eval=" << format_number(c.split_eval) << "\n";
    out << "seed=" << c.seed << "\n";
    out << "episodes=" << c.episodes << "\n";
    out << "eta=" << c.eta << "\n";
    out << "lr=" << format_number(c.lr) << "\n";
    out << "pretrain=" << (c.pretrain ? "true" : "false") << "\n";
    out << "pretrain-epochs=" << c.pretrain_epochs << "\n";
    out << "pretrain-batch=" << c.pretrain_batch << "\n";
    out << "mode=" << c.mode << "\n";
    out << "target-frames=" << c.target_frames << "\n";
    out << "max-per-class=" << c.max_per_class << "\n";
    out << "checkpoint-every=" << c.checkpoint_every << "\n";
    if (!out) throw IoFailure("short write on " + path);
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("malformed config line in " + path + ": " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace speechrl
