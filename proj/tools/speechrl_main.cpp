// speechrl: reproducible speech-command RL experiments.
//
//   speechrl extract  --root <dataset> --out <dir> [--subset ...]
//   speechrl pretrain --out <dir> [--pretrain-epochs N]
//   speechrl train    --out <dir> [--episodes N] [--pretrain|--no-pretrain]
//   speechrl report   --with <dir> --without <dir> --out <dir>
//
// One global --seed reproduces a run end to end; `train` freezes its resolved
// configuration into <out>/config.resolved, which feeds back via --config.

#include <CLI11.hpp>
#include <iostream>

#include "speechrl/commands.hpp"

namespace {

void add_common_options(CLI::App* cmd, speechrl::RunConfig& config) {
    cmd->set_config("--config");
    cmd->add_option("--root", config.root, "Speech Commands dataset root");
    cmd->add_option("--subset", config.subset, "binary|main20|all30")
        ->check(CLI::IsMember({"binary", "main20", "all30"}));
    cmd->add_option("--out", config.out, "run/output directory");
    cmd->add_option("--seed", config.seed, "global seed; all sub-seeds derive from it");
    cmd->add_option("--episodes", config.episodes, "number of training episodes N_E");
    cmd->add_option("--eta", config.eta, "episode length");
    cmd->add_option("--lr", config.lr, "SGD learning rate");
    cmd->add_flag("--pretrain,!--no-pretrain", config.pretrain, "pre-train before RL episodes");
    cmd->add_option("--pretrain-epochs", config.pretrain_epochs, "pre-training epochs");
    cmd->add_option("--pretrain-batch", config.pretrain_batch, "pre-training batch size");
    cmd->add_option("--mode", config.mode, "action selection: greedy|sample")
        ->check(CLI::IsMember({"greedy", "sample"}));
    cmd->add_option("--target-frames", config.target_frames, "auto or a fixed frame count");
    cmd->add_option("--split-pretrain", config.split_pretrain, "pretrain split fraction");
    cmd->add_option("--split-rl", config.split_rl, "rl split fraction");
    cmd->add_option("--split-eval", config.split_eval, "eval split fraction");
    cmd->add_option("--max-per-class", config.max_per_class,
                    "cap files per class at scan time (0 = unlimited)");
    cmd->add_option("--checkpoint-every", config.checkpoint_every,
                    "episodes between checkpoints (0 = off)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pre-trained REINFORCE speech-command classification"};
    app.require_subcommand(1);

    speechrl::RunConfig config;
    auto* extract = app.add_subcommand("extract", "index the dataset and build feature caches");
    add_common_options(extract, config);
    auto* pretrain = app.add_subcommand("pretrain", "supervised pre-training only");
    add_common_options(pretrain, config);
    auto* train = app.add_subcommand("train", "run the REINFORCE experiment");
    add_common_options(train, config);

    auto* report = app.add_subcommand("report", "compare paired with/without-pretraining runs");
    std::string with_dir, without_dir, report_out;
    report->add_option("--with", with_dir, "run directory with pre-training")->required();
    report->add_option("--without", without_dir, "run directory without pre-training")->required();
    report->add_option("--out", report_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            const auto stats = speechrl::cmd_extract(config);
            std::cout << "extract: " << stats.extracted << " feature matrices written, "
                      << stats.reused_caches << " cache(s) reused, " << stats.skipped_files
                      << " file(s) skipped\n";
        } else if (pretrain->parsed()) {
            speechrl::cmd_pretrain(config);
        } else if (train->parsed()) {
            speechrl::cmd_train(config);
        } else if (report->parsed()) {
            speechrl::cmd_report(with_dir, without_dir, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
