#pragma once

// MDP environment and REINFORCE agent. Classification is cast as per-step
// action selection: each episode presents eta feature matrices in sequence,
// the reward is +1 for a correct class and -1 otherwise, and the state
// transition is action-independent.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "speechrl/errors.hpp"
#include "speechrl/mfcc.hpp"
#include "speechrl/policy.hpp"
#include "speechrl/rng.hpp"

namespace speechrl {

inline int reward(int action, int ground_truth) { return action == ground_truth ? +1 : -1; }

enum class ActionMode { greedy, sample };

inline const char* action_mode_name(ActionMode m) {
    return m == ActionMode::greedy ? "greedy" : "sample";
}

inline ActionMode action_mode_from_name(const std::string& s) {
    if (s == "greedy") return ActionMode::greedy;
    if (s == "sample") return ActionMode::sample;
    throw Error("unknown action mode: " + s + " (expected greedy|sample)");
}

struct EnvConfig {
    int eta = 50;
    const std::vector<FeatureMatrix>* dataset = nullptr;
    int action_count = 2;
    std::uint64_t shuffle_seed = 0;
};

struct StepResult {
    const FeatureMatrix* next_state;  // nullptr once the episode is done
    int reward;
    bool done;
};

// Each reset draws eta items without replacement; the draw depends only on
// (shuffle_seed, episode_index), so a run is replayable episode by episode.
class Env {
public:
    explicit Env(const EnvConfig& config) : config_(config) {
        if (config_.eta < 1) throw Error("eta must be >= 1");
        if (!config_.dataset || config_.dataset->size() < static_cast<std::size_t>(config_.eta)) {
            throw DatasetTooSmall("dataset has " +
                                  std::to_string(config_.dataset ? config_.dataset->size() : 0) +
                                  " items, need at least eta=" + std::to_string(config_.eta));
        }
    }

    const FeatureMatrix& reset() {
        draw_episode(next_episode_index_++);
        cursor_ = 0;
        return *items_[0];
    }

    StepResult execute(int action) {
        if (done()) throw EpisodeFinished("execute() called after the episode ended");
        const int r = reward(action, items_[static_cast<std::size_t>(cursor_)]->label_id);
        ++cursor_;
        const bool d = done();
        return {d ? nullptr : items_[static_cast<std::size_t>(cursor_)], r, d};
    }

    bool done() const { return cursor_ >= config_.eta; }
    int eta() const { return config_.eta; }
    int action_count() const { return config_.action_count; }
    std::uint64_t episodes_started() const { return next_episode_index_; }

    // The items drawn for the current episode. The transition is
    // action-independent, so callers may score all states in one batch.
    const std::vector<const FeatureMatrix*>& episode_items() const { return items_; }

private:
    void draw_episode(std::uint64_t episode_index) {
        Rng rng(splitmix64(config_.shuffle_seed ^ splitmix64(episode_index)));
        const std::size_t n = config_.dataset->size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        items_.clear();
        items_.reserve(static_cast<std::size_t>(config_.eta));
        for (int i = 0; i < config_.eta; ++i) {  // partial Fisher-Yates
            const std::size_t j = i + rng.index(n - static_cast<std::size_t>(i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            items_.push_back(&(*config_.dataset)[idx[static_cast<std::size_t>(i)]]);
        }
    }

    EnvConfig config_;
    std::vector<const FeatureMatrix*> items_;
    int cursor_ = 0;
    std::uint64_t next_episode_index_ = 0;
};

struct Episode {
    std::vector<const FeatureMatrix*> states;  // E_s
    std::vector<int> actions;                  // E_a
    std::vector<int> rewards;                  // E_r

    int score() const {
        int v = 0;
        for (int r : rewards) v += r;
        return v;
    }
};

inline int greedy_action(const nn::Mat& probs, Eigen::Index row) {
    int best = 0;
    for (int a = 1; a < probs.cols(); ++a) {
        if (probs(row, a) > probs(row, best)) best = a;  // ties -> lowest index
    }
    return best;
}

inline int sample_action(const nn::Mat& probs, Eigen::Index row, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (int a = 0; a < probs.cols(); ++a) {
        cum += probs(row, a);
        if (u < cum) return a;
    }
    return static_cast<int>(probs.cols()) - 1;
}

// Resets the environment and rolls one full episode. Action selection runs
// the network in eval mode (no dropout); the policy is fixed within the
// episode and the transition ignores actions, so probabilities for all eta
// states are computed in a single batch.
inline Episode run_episode(const PolicyNetwork& policy, Env& env, ActionMode mode,
                           Rng* sample_rng = nullptr) {
    if (policy.arch.n_classes != env.action_count()) {
        throw ShapeMismatch("policy has " + std::to_string(policy.arch.n_classes) +
                            " classes but env expects " + std::to_string(env.action_count()));
    }
    if (mode == ActionMode::sample && !sample_rng) {
        throw Error("sample mode requires an rng");
    }
    env.reset();
    const auto& items = env.episode_items();
    const nn::Mat probs = policy.forward(items, nn::Mode::eval);

    Episode ep;
    ep.states = items;
    ep.actions.reserve(items.size());
    ep.rewards.reserve(items.size());
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(items.size()); ++i) {
        const int a = mode == ActionMode::greedy ? greedy_action(probs, i)
                                                 : sample_action(probs, i, *sample_rng);
        const StepResult step = env.execute(a);
        ep.actions.push_back(a);
        ep.rewards.push_back(step.reward);
    }
    return ep;
}

// One SGD step on L(theta) = -(1/eta) * sum_i r_i * log pi(a_i | s_i).
// Immediate rewards weight their own log-probabilities; no discounting and
// no baseline. Dropout is active (train mode).
inline void reinforce_step_inplace(PolicyNetwork& policy, const Episode& episode, double lr,
                                   Rng& dropout_rng) {
    const auto eta = static_cast<double>(episode.states.size());
    if (episode.states.empty() || episode.actions.size() != episode.states.size() ||
        episode.rewards.size() != episode.states.size()) {
        throw Error("episode traces must be non-empty and of equal length");
    }
    PolicyNetwork::ForwardTrace trace;
    const nn::Mat probs = policy.forward(episode.states, nn::Mode::train, &dropout_rng, &trace);

    double loss = 0.0;
    nn::Mat glogits = nn::Mat::Zero(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int a = episode.actions[static_cast<std::size_t>(i)];
        const double r = episode.rewards[static_cast<std::size_t>(i)];
        loss -= r * std::log(std::max(probs(i, a), 1e-300)) / eta;
        // d/dlogits of -(r/eta)*log softmax(a): (r/eta) * (p - onehot(a))
        const double coef = r / eta;
        glogits.row(i) += coef * probs.row(i);
        glogits(i, a) -= coef;
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss("REINFORCE loss became non-finite");
    policy.apply_gradients(policy.backward(trace, glogits), lr);
}

inline PolicyNetwork reinforce_update(const PolicyNetwork& policy, const Episode& episode,
                                      double lr, Rng& dropout_rng) {
    PolicyNetwork updated = policy;
    reinforce_step_inplace(updated, episode, lr, dropout_rng);
    return updated;
}

struct TrainRunConfig {
    int n_episodes = 10000;
    int eta = 50;
    ActionMode mode = ActionMode::greedy;
    bool pretrain_enabled = true;
    int pretrain_epochs = 10;
    int pretrain_batch_size = 32;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    int checkpoint_every = 1000;  // 0 disables periodic checkpoints
};

struct ExperimentResult {
    PolicyNetwork policy;
    std::vector<int> scores;  // V_j per episode
    PretrainReport pretrain_report;
    bool pretrained = false;
    bool aborted = false;
    std::string abort_reason;
};

// Algorithm outline: init policy, optionally pre-train, then N_E episodes of
// (reset, rollout, REINFORCE update). `on_checkpoint`, when set, is invoked
// every checkpoint_every episodes and once at the end.
inline ExperimentResult run_experiment(
    const TrainRunConfig& config, const ArchitectureSpec& arch,
    const std::vector<FeatureMatrix>& pretrain_data, const std::vector<FeatureMatrix>& rl_data,
    const std::vector<FeatureMatrix>* eval_data = nullptr,
    const std::function<void(PolicyNetwork&, int)>& on_checkpoint = nullptr) {
    ExperimentResult result;
    result.policy = init_policy(arch, config.seed);

    if (config.pretrain_enabled) {
        PretrainConfig pc;
        pc.epochs = config.pretrain_epochs;
        pc.batch_size = config.pretrain_batch_size;
        pc.lr = config.lr;
        pc.seed = derive_seed(config.seed, SeedStream::pretrain);
        auto [trained, report] = pretrain(result.policy, pretrain_data, pc, eval_data);
        result.policy = std::move(trained);
        result.pretrain_report = std::move(report);
        result.pretrained = true;
    }

    if (config.n_episodes == 0) return result;

    EnvConfig env_config;
    env_config.eta = config.eta;
    env_config.dataset = &rl_data;
    env_config.action_count = arch.n_classes;
    env_config.shuffle_seed = derive_seed(config.seed, SeedStream::shuffle);
    Env env(env_config);

    Rng dropout_rng(derive_seed(config.seed, SeedStream::dropout));
    Rng sample_rng(derive_seed(config.seed, SeedStream::sample));

    result.scores.reserve(static_cast<std::size_t>(config.n_episodes));
    try {
        for (int j = 0; j < config.n_episodes; ++j) {
            const Episode ep = run_episode(result.policy, env, config.mode, &sample_rng);
            result.scores.push_back(ep.score());
            reinforce_step_inplace(result.policy, ep, config.lr, dropout_rng);
            if (on_checkpoint && config.checkpoint_every > 0 &&
                (j + 1) % config.checkpoint_every == 0) {
                on_checkpoint(result.policy, j + 1);
            }
        }
    } catch (const Error& e) {
        // abort cleanly; the partial score log is still reported
        result.aborted = true;
        result.abort_reason = e.what();
    }
    if (on_checkpoint) on_checkpoint(result.policy, static_cast<int>(result.scores.size()));
    return result;
}

}  // namespace speechrl
