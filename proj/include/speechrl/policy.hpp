#pragma once

// The policy network: time-distributed conv (16, 8) -> max-pool -> LSTM(50)
// -> dropout(0.3) -> dense 512/256/64 -> action layer -> softmax. The action
// layer holds (W_a, b_a); everything below it is the state encoder.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "speechrl/binio.hpp"
#include "speechrl/errors.hpp"
#include "speechrl/mfcc.hpp"
#include "speechrl/nn.hpp"
#include "speechrl/rng.hpp"

namespace speechrl {

struct ArchitectureSpec {
    std::vector<int> conv_filters = {16, 8};
    int conv_kernel = 3;
    int pool_size = 2;
    int lstm_units = 50;
    double dropout_rate = 0.3;
    std::vector<int> dense_units = {512, 256, 64};
    int n_classes = 2;
    int n_mfcc = 40;
    int frames = 32;

    void validate() const {
        if (n_classes < 2) throw InvalidArch("n_classes must be >= 2");
        if (n_mfcc <= 0 || frames <= 0) throw InvalidArch("input dimensions must be positive");
        if (lstm_units <= 0) throw InvalidArch("lstm_units must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw InvalidArch("dropout must be in [0,1)");
        if (conv_filters.empty() || dense_units.empty()) throw InvalidArch("empty layer list");
        for (int c : conv_filters)
            if (c <= 0) throw InvalidArch("conv filter counts must be positive");
        for (int d : dense_units)
            if (d <= 0) throw InvalidArch("dense unit counts must be positive");
        if (n_mfcc / pool_size <= 0) throw InvalidArch("pool size too large for input");
    }

    std::string describe() const {
        std::ostringstream os;
        os << "conv";
        for (std::size_t i = 0; i < conv_filters.size(); ++i)
            os << (i ? "," : "") << conv_filters[i];
        os << ";k" << conv_kernel << ";p" << pool_size << ";lstm" << lstm_units << ";do"
           << dropout_rate << ";dense";
        for (std::size_t i = 0; i < dense_units.size(); ++i)
            os << (i ? "," : "") << dense_units[i];
        os << ";nc" << n_classes << ";in" << n_mfcc << "x" << frames;
        return os.str();
    }

    std::uint64_t digest() const {
        const std::string d = describe();
        return fnv1a64(d.data(), d.size());
    }
};

class PolicyNetwork {
public:
    ArchitectureSpec arch;
    std::vector<nn::Conv1dTD> convs;
    nn::MaxPool1d pool;
    nn::Lstm lstm;
    nn::Dropout dropout;
    std::vector<nn::Dense> dense;  // hidden stack, ReLU
    nn::Dense action;              // W_a, b_a; linear, softmax applied on top

    struct ForwardTrace {
        std::vector<nn::Conv1dTD::Trace> convs;
        nn::MaxPool1d::Trace pool;
        nn::Lstm::Trace lstm;
        nn::Mat dropout_mask;
        std::vector<nn::Dense::Trace> dense;
        nn::Dense::Trace action;
        nn::Mat probs;
        nn::Mode mode = nn::Mode::eval;
    };

    struct Gradients {
        std::vector<nn::Mat> conv_W;
        std::vector<nn::Vec> conv_b;
        nn::Mat lstm_Wx, lstm_Wh;
        nn::Vec lstm_b;
        std::vector<nn::Mat> dense_W;
        std::vector<nn::Vec> dense_b;
        nn::Mat action_W;
        nn::Vec action_b;
    };

    PolicyNetwork() = default;

    explicit PolicyNetwork(const ArchitectureSpec& a) : arch(a) {
        arch.validate();
        int c_in = 1;
        for (int c_out : arch.conv_filters) {
            convs.emplace_back(arch.n_mfcc, c_in, c_out, arch.conv_kernel);
            c_in = c_out;
        }
        pool.length = arch.n_mfcc;
        pool.channels = c_in;
        pool.pool = arch.pool_size;
        const int lstm_in = pool.out_length() * c_in;
        lstm = nn::Lstm(lstm_in, arch.lstm_units);
        dropout.rate = arch.dropout_rate;
        int width = arch.lstm_units;
        for (int units : arch.dense_units) {
            dense.emplace_back(width, units, /*relu=*/true);
            width = units;
        }
        action = nn::Dense(width, arch.n_classes, /*relu=*/false);
    }

    void init_params(Rng& rng) {
        for (auto& c : convs) c.init(rng);
        lstm.init(rng);
        for (auto& d : dense) d.init(rng);
        action.init(rng);
    }

    // Canonical parameter order, shared by SGD, checkpoints and the
    // finite-difference harness.
    std::vector<nn::ParamView> param_views() {
        std::vector<nn::ParamView> v;
        auto add_mat = [&](const std::string& name, nn::Mat& m) {
            v.push_back({name, m.data(), static_cast<std::size_t>(m.size()),
                         {static_cast<int>(m.rows()), static_cast<int>(m.cols())}});
        };
        auto add_vec = [&](const std::string& name, nn::Vec& b) {
            v.push_back({name, b.data(), static_cast<std::size_t>(b.size()),
                         {static_cast<int>(b.size())}});
        };
        for (std::size_t i = 0; i < convs.size(); ++i) {
            add_mat("conv" + std::to_string(i) + ".W", convs[i].W);
            add_vec("conv" + std::to_string(i) + ".b", convs[i].b);
        }
        add_mat("lstm.Wx", lstm.Wx);
        add_mat("lstm.Wh", lstm.Wh);
        add_vec("lstm.b", lstm.b);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            add_mat("dense" + std::to_string(i) + ".W", dense[i].W);
            add_vec("dense" + std::to_string(i) + ".b", dense[i].b);
        }
        add_mat("action.W", action.W);
        add_vec("action.b", action.b);
        return v;
    }

    Gradients zero_gradients() const {
        Gradients g;
        for (const auto& c : convs) {
            g.conv_W.push_back(nn::Mat::Zero(c.W.rows(), c.W.cols()));
            g.conv_b.push_back(nn::Vec::Zero(c.b.size()));
        }
        g.lstm_Wx = nn::Mat::Zero(lstm.Wx.rows(), lstm.Wx.cols());
        g.lstm_Wh = nn::Mat::Zero(lstm.Wh.rows(), lstm.Wh.cols());
        g.lstm_b = nn::Vec::Zero(lstm.b.size());
        for (const auto& d : dense) {
            g.dense_W.push_back(nn::Mat::Zero(d.W.rows(), d.W.cols()));
            g.dense_b.push_back(nn::Vec::Zero(d.b.size()));
        }
        g.action_W = nn::Mat::Zero(action.W.rows(), action.W.cols());
        g.action_b = nn::Vec::Zero(action.b.size());
        return g;
    }

    std::vector<nn::ParamView> grad_views(Gradients& g) const {
        std::vector<nn::ParamView> v;
        for (std::size_t i = 0; i < g.conv_W.size(); ++i) {
            v.push_back({"conv" + std::to_string(i) + ".W", g.conv_W[i].data(),
                         static_cast<std::size_t>(g.conv_W[i].size()), {}});
            v.push_back({"conv" + std::to_string(i) + ".b", g.conv_b[i].data(),
                         static_cast<std::size_t>(g.conv_b[i].size()), {}});
        }
        v.push_back({"lstm.Wx", g.lstm_Wx.data(), static_cast<std::size_t>(g.lstm_Wx.size()), {}});
        v.push_back({"lstm.Wh", g.lstm_Wh.data(), static_cast<std::size_t>(g.lstm_Wh.size()), {}});
        v.push_back({"lstm.b", g.lstm_b.data(), static_cast<std::size_t>(g.lstm_b.size()), {}});
        for (std::size_t i = 0; i < g.dense_W.size(); ++i) {
            v.push_back({"dense" + std::to_string(i) + ".W", g.dense_W[i].data(),
                         static_cast<std::size_t>(g.dense_W[i].size()), {}});
            v.push_back({"dense" + std::to_string(i) + ".b", g.dense_b[i].data(),
                         static_cast<std::size_t>(g.dense_b[i].size()), {}});
        }
        v.push_back({"action.W", g.action_W.data(), static_cast<std::size_t>(g.action_W.size()), {}});
        v.push_back({"action.b", g.action_b.data(), static_cast<std::size_t>(g.action_b.size()), {}});
        return v;
    }

    // States enter as n x f MFCC matrices; frame t of state b becomes row
    // t*B + b of the frame matrix (one row per frame, c_in = 1).
    nn::Mat states_to_frames(const std::vector<const FeatureMatrix*>& states) const {
        const Eigen::Index B = static_cast<Eigen::Index>(states.size());
        nn::Mat x(static_cast<Eigen::Index>(arch.frames) * B, arch.n_mfcc);
        for (Eigen::Index s = 0; s < B; ++s) {
            const FeatureMatrix& m = *states[s];
            if (m.n != arch.n_mfcc || m.f != arch.frames) {
                throw ShapeMismatch("state is " + std::to_string(m.n) + "x" + std::to_string(m.f) +
                                    " but network expects " + std::to_string(arch.n_mfcc) + "x" +
                                    std::to_string(arch.frames));
            }
            for (int t = 0; t < arch.frames; ++t) {
                for (int l = 0; l < arch.n_mfcc; ++l) {
                    x(static_cast<Eigen::Index>(t) * B + s, l) = m.at(l, t);
                }
            }
        }
        return x;
    }

    // Returns class probabilities, one row per state. In train mode the
    // dropout mask comes from `rng` and the trace supports backward().
    nn::Mat forward(const std::vector<const FeatureMatrix*>& states, nn::Mode mode,
                    Rng* rng = nullptr, ForwardTrace* trace = nullptr) const {
        nn::Mat x = states_to_frames(states);
        const Eigen::Index B = static_cast<Eigen::Index>(states.size());
        if (trace) {
            trace->convs.resize(convs.size());
            trace->dense.resize(dense.size());
            trace->mode = mode;
        }
        for (std::size_t i = 0; i < convs.size(); ++i) {
            x = convs[i].forward(x, trace ? &trace->convs[i] : nullptr);
        }
        x = pool.forward(x, trace ? &trace->pool : nullptr);
        nn::Mat h = lstm.forward(x, arch.frames, trace ? &trace->lstm : nullptr);
        h = dropout.forward(h, mode, rng, trace ? &trace->dropout_mask : nullptr);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            h = dense[i].forward(h, trace ? &trace->dense[i] : nullptr);
        }
        nn::Mat logits = action.forward(h, trace ? &trace->action : nullptr);
        nn::Mat probs = nn::softmax_rows(logits);
        if (trace) trace->probs = probs;
        (void)B;
        return probs;
    }

    // glogits: gradient of the loss w.r.t. the action-layer logits (use
    // nn::softmax_backward_rows to come from probability-space gradients).
    Gradients backward(const ForwardTrace& trace, const nn::Mat& glogits) const {
        if (trace.mode != nn::Mode::train) {
            throw StaleTrace("backward requires a train-mode forward trace");
        }
        Gradients g = zero_gradients();
        nn::Mat gh = action.backward(trace.action, glogits, g.action_W, g.action_b);
        for (std::size_t i = dense.size(); i-- > 0;) {
            gh = dense[i].backward(trace.dense[i], gh, g.dense_W[i], g.dense_b[i]);
        }
        gh = dropout.backward(trace.dropout_mask, gh);
        nn::Mat gx = lstm.backward(trace.lstm, gh, g.lstm_Wx, g.lstm_Wh, g.lstm_b);
        gx = pool.backward(trace.pool, gx);
        for (std::size_t i = convs.size(); i-- > 0;) {
            gx = convs[i].backward(trace.convs[i], gx, g.conv_W[i], g.conv_b[i]);
        }
        return g;
    }

    void apply_gradients(const Gradients& g, double lr) {
        for (std::size_t i = 0; i < convs.size(); ++i) {
            nn::sgd_step(convs[i].W, g.conv_W[i], lr);
            nn::sgd_step(convs[i].b, g.conv_b[i], lr);
        }
        nn::sgd_step(lstm.Wx, g.lstm_Wx, lr);
        nn::sgd_step(lstm.Wh, g.lstm_Wh, lr);
        nn::sgd_step(lstm.b, g.lstm_b, lr);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            nn::sgd_step(dense[i].W, g.dense_W[i], lr);
            nn::sgd_step(dense[i].b, g.dense_b[i], lr);
        }
        nn::sgd_step(action.W, g.action_W, lr);
        nn::sgd_step(action.b, g.action_b, lr);
    }
};

inline PolicyNetwork init_policy(const ArchitectureSpec& arch, std::uint64_t seed) {
    PolicyNetwork net(arch);
    Rng rng(derive_seed(seed, SeedStream::init));
    net.init_params(rng);
    return net;
}

inline std::vector<double> action_probs(const PolicyNetwork& net, const FeatureMatrix& state,
                                        nn::Mode mode = nn::Mode::eval, Rng* rng = nullptr) {
    const nn::Mat p = net.forward({&state}, mode, rng);
    return std::vector<double>(p.data(), p.data() + p.cols());
}

// ---------------------------------------------------------------------------
// checkpoints: magic "POLN", version u16, architecture digest u64, tensor
// count u16, then per tensor ndims u8, dims u32, float64 LE values

inline void save_policy(PolicyNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write checkpoint: " + path);
    binio::write_bytes(out, "POLN", 4);
    binio::write_le<std::uint16_t>(out, 1);
    binio::write_le<std::uint64_t>(out, net.arch.digest());
    const auto views = net.param_views();
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(views.size()));
    for (const auto& v : views) {
        binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(v.shape.size()));
        for (int d : v.shape) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < v.size; ++i) binio::write_le<double>(out, v.data[i]);
    }
    if (!out) throw IoFailure("short write on checkpoint: " + path);
}

inline PolicyNetwork load_policy(const ArchitectureSpec& arch, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open checkpoint: " + path);
    char magic[4];
    binio::read_bytes(in, magic, 4, "checkpoint magic");
    if (std::string(magic, 4) != "POLN") throw BadMagic("bad checkpoint magic in " + path);
    const auto version = binio::read_le<std::uint16_t>(in, "checkpoint version");
    if (version != 1) throw BadMagic("unsupported checkpoint version " + std::to_string(version));
    const auto digest = binio::read_le<std::uint64_t>(in, "arch digest");
    if (digest != arch.digest()) {
        throw ArchDigestMismatch("checkpoint " + path + " was written for a different architecture");
    }
    PolicyNetwork net(arch);
    auto views = net.param_views();
    const auto count = binio::read_le<std::uint16_t>(in, "tensor count");
    if (count != views.size()) {
        throw ArchDigestMismatch("checkpoint tensor count mismatch in " + path);
    }
    for (auto& v : views) {
        const auto ndims = binio::read_le<std::uint8_t>(in, "ndims");
        std::size_t numel = 1;
        for (int i = 0; i < ndims; ++i) numel *= binio::read_le<std::uint32_t>(in, "dim");
        if (numel != v.size) {
            throw DimensionMismatch("checkpoint tensor '" + v.name + "' has wrong size in " + path);
        }
        for (std::size_t i = 0; i < v.size; ++i) v.data[i] = binio::read_le<double>(in, "tensor");
    }
    return net;
}

// ---------------------------------------------------------------------------
// supervised pre-training (cross-entropy, plain SGD)

struct PretrainConfig {
    int epochs = 10;
    int batch_size = 32;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

struct PretrainReport {
    std::vector<double> epoch_loss;      // mean cross-entropy per epoch
    std::vector<double> epoch_accuracy;  // eval-mode accuracy on the training set
    int epochs_run = 0;
    double eval_accuracy = -1.0;  // on held-out data, -1 if none supplied
};

inline double dataset_accuracy(const PolicyNetwork& net, const std::vector<FeatureMatrix>& data) {
    if (data.empty()) return -1.0;
    std::size_t correct = 0;
    const std::size_t chunk = 256;
    for (std::size_t off = 0; off < data.size(); off += chunk) {
        std::vector<const FeatureMatrix*> batch;
        for (std::size_t i = off; i < std::min(off + chunk, data.size()); ++i)
            batch.push_back(&data[i]);
        const nn::Mat p = net.forward(batch, nn::Mode::eval);
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            Eigen::Index am;
            p.row(r).maxCoeff(&am);
            if (static_cast<int>(am) == batch[static_cast<std::size_t>(r)]->label_id) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Returns a trained copy; the input policy is never mutated, so paired
// with/without-pretraining comparisons can share one initialization.
inline std::pair<PolicyNetwork, PretrainReport> pretrain(
    const PolicyNetwork& policy, const std::vector<FeatureMatrix>& data,
    const PretrainConfig& config, const std::vector<FeatureMatrix>* eval_data = nullptr) {
    if (data.empty()) throw EmptyDataset("pretrain requires data");
    std::vector<std::size_t> per_class(static_cast<std::size_t>(policy.arch.n_classes), 0);
    for (const auto& m : data) {
        if (m.label_id < 0 || m.label_id >= policy.arch.n_classes) {
            throw Error("label " + std::to_string(m.label_id) + " out of range for " +
                        std::to_string(policy.arch.n_classes) + " classes");
        }
        ++per_class[static_cast<std::size_t>(m.label_id)];
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] == 0) {
            throw EmptyClass("class " + std::to_string(c) + " has no pre-training examples");
        }
    }

    PolicyNetwork net = policy;
    PretrainReport report;
    Rng shuffle_rng(splitmix64(config.seed + 1));
    Rng dropout_rng(splitmix64(config.seed + 2));

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t off = 0; off < order.size(); off += config.batch_size) {
            std::vector<const FeatureMatrix*> batch;
            for (std::size_t i = off; i < std::min(off + config.batch_size, order.size()); ++i) {
                batch.push_back(&data[order[i]]);
            }
            const auto B = static_cast<Eigen::Index>(batch.size());
            PolicyNetwork::ForwardTrace trace;
            const nn::Mat probs = net.forward(batch, nn::Mode::train, &dropout_rng, &trace);

            nn::Mat glogits = probs;
            double batch_loss = 0.0;
            for (Eigen::Index r = 0; r < B; ++r) {
                const int label = batch[static_cast<std::size_t>(r)]->label_id;
                batch_loss -= std::log(std::max(probs(r, label), 1e-300));
                glogits(r, label) -= 1.0;
            }
            batch_loss /= static_cast<double>(B);
            if (!std::isfinite(batch_loss)) {
                throw NonFiniteLoss("pre-training loss became non-finite at epoch " +
                                    std::to_string(epoch) + " offset " + std::to_string(off));
            }
            glogits /= static_cast<double>(B);
            net.apply_gradients(net.backward(trace, glogits), config.lr);
            loss_sum += batch_loss * static_cast<double>(B);
            loss_count += batch.size();
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
        report.epoch_accuracy.push_back(dataset_accuracy(net, data));
        ++report.epochs_run;
    }
    if (eval_data) report.eval_accuracy = dataset_accuracy(net, *eval_data);
    return {std::move(net), std::move(report)};
}

}  // namespace speechrl
