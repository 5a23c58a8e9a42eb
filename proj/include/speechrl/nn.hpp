#pragma once

// Dense / time-distributed conv / LSTM / dropout compute kernels with
// hand-derived backward passes, batched over the leading row dimension.
//
// Layout conventions:
//   - frame-stage matrices: (T*B) rows, row index t*B + b, columns l*C + c
//   - vector-stage matrices: B rows, one column per unit
// Everything is double precision so finite-difference checks stay tight.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "speechrl/errors.hpp"
#include "speechrl/rng.hpp"

namespace speechrl::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Mode { train, eval };

struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;

    std::size_t size() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

// Mutable view over one parameter (or gradient) tensor, used by the SGD step,
// serialization and the finite-difference harness.
struct ParamView {
    std::string name;
    double* data;
    std::size_t size;
    std::vector<int> shape;
};

inline void check_shape(bool ok, const std::string& where, long expected, long actual) {
    if (!ok) {
        throw ShapeMismatch(where + ": expected " + std::to_string(expected) + ", got " +
                            std::to_string(actual));
    }
}

// ---------------------------------------------------------------------------
// softmax

inline std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

inline Mat softmax_rows(const Mat& logits) {
    Mat p = logits;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

// d(loss)/d(logits) given d(loss)/d(probs); row-wise softmax Jacobian.
inline Mat softmax_backward_rows(const Mat& probs, const Mat& gprobs) {
    Mat gz(probs.rows(), probs.cols());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const double dot = probs.row(r).dot(gprobs.row(r));
        gz.row(r) = (probs.row(r).array() * (gprobs.row(r).array() - dot)).matrix();
    }
    return gz;
}

// ---------------------------------------------------------------------------
// dense

struct Dense {
    Mat W;  // in x out
    Vec b;  // out
    bool relu = false;

    struct Trace {
        Mat x;
        Mat y;  // post-activation
    };

    Dense() = default;
    Dense(int in, int out, bool relu_) : W(in, out), b(Vec::Zero(out)), relu(relu_) {}

    void init(Rng& rng) {
        const double limit = std::sqrt(6.0 / (W.rows() + W.cols()));
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = rng.uniform(-limit, limit);
        b.setZero();
    }

    Mat forward(const Mat& x, Trace* tr) const {
        check_shape(x.cols() == W.rows(), "dense input width", W.rows(), x.cols());
        Mat y = x * W;
        y.rowwise() += b.transpose();
        if (relu) y = y.cwiseMax(0.0);
        if (tr) {
            tr->x = x;
            tr->y = y;
        }
        return y;
    }

    Mat backward(const Trace& tr, const Mat& gy, Mat& gW, Vec& gb) const {
        if (tr.x.cols() != W.rows() || gy.cols() != W.cols() || tr.x.rows() != gy.rows()) {
            throw StaleTrace("dense trace does not match layer/gradient shapes");
        }
        Mat gz = relu ? Mat(gy.cwiseProduct((tr.y.array() > 0.0).cast<double>().matrix())) : gy;
        gW.noalias() += tr.x.transpose() * gz;
        gb.noalias() += gz.colwise().sum().transpose();
        return gz * W.transpose();
    }
};

// ---------------------------------------------------------------------------
// time-distributed 1-D convolution over the coefficient axis
// input rows are frames of L positions with c_in channels each, stride 1,
// same (zero) padding, ReLU activation

struct Conv1dTD {
    int length = 0;  // L
    int c_in = 0;
    int c_out = 0;
    int kernel = 3;
    Mat W;  // (kernel*c_in) x c_out
    Vec b;

    struct Trace {
        Mat cols;  // (rows*L) x (kernel*c_in)
        Mat y;     // (rows*L) x c_out, post-activation
    };

    Conv1dTD() = default;
    Conv1dTD(int length_, int c_in_, int c_out_, int kernel_)
        : length(length_), c_in(c_in_), c_out(c_out_), kernel(kernel_),
          W(kernel_ * c_in_, c_out_), b(Vec::Zero(c_out_)) {}

    void init(Rng& rng) {
        const double limit = std::sqrt(6.0 / (kernel * c_in + c_out));
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = rng.uniform(-limit, limit);
        b.setZero();
    }

    Mat im2col(const Mat& x) const {
        const Eigen::Index rows = x.rows();
        const int pad = kernel / 2;
        Mat cols = Mat::Zero(rows * length, static_cast<Eigen::Index>(kernel) * c_in);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int l = 0; l < length; ++l) {
                for (int k = 0; k < kernel; ++k) {
                    const int src = l + k - pad;
                    if (src < 0 || src >= length) continue;
                    for (int c = 0; c < c_in; ++c) {
                        cols(r * length + l, k * c_in + c) = x(r, src * c_in + c);
                    }
                }
            }
        }
        return cols;
    }

    Mat forward(const Mat& x, Trace* tr) const {
        check_shape(x.cols() == static_cast<Eigen::Index>(length) * c_in, "conv input width",
                    static_cast<long>(length) * c_in, x.cols());
        const Eigen::Index rows = x.rows();
        Mat cols = im2col(x);
        Mat y = cols * W;
        y.rowwise() += b.transpose();
        y = y.cwiseMax(0.0);
        Mat out(rows, static_cast<Eigen::Index>(length) * c_out);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int l = 0; l < length; ++l) {
                for (int o = 0; o < c_out; ++o) out(r, l * c_out + o) = y(r * length + l, o);
            }
        }
        if (tr) {
            tr->cols = std::move(cols);
            tr->y = std::move(y);
        }
        return out;
    }

    Mat backward(const Trace& tr, const Mat& gout, Mat& gW, Vec& gb) const {
        const Eigen::Index rows = gout.rows();
        if (tr.cols.rows() != rows * length || tr.cols.cols() != W.rows() ||
            gout.cols() != static_cast<Eigen::Index>(length) * c_out) {
            throw StaleTrace("conv trace does not match layer/gradient shapes");
        }
        Mat gy(rows * length, c_out);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int l = 0; l < length; ++l) {
                for (int o = 0; o < c_out; ++o) gy(r * length + l, o) = gout(r, l * c_out + o);
            }
        }
        gy = gy.cwiseProduct((tr.y.array() > 0.0).cast<double>().matrix());
        gW.noalias() += tr.cols.transpose() * gy;
        gb.noalias() += gy.colwise().sum().transpose();
        Mat gcols = gy * W.transpose();

        const int pad = kernel / 2;
        Mat gx = Mat::Zero(rows, static_cast<Eigen::Index>(length) * c_in);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int l = 0; l < length; ++l) {
                for (int k = 0; k < kernel; ++k) {
                    const int src = l + k - pad;
                    if (src < 0 || src >= length) continue;
                    for (int c = 0; c < c_in; ++c) {
                        gx(r, src * c_in + c) += gcols(r * length + l, k * c_in + c);
                    }
                }
            }
        }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// max-pool over the position axis (channels kept)

struct MaxPool1d {
    int length = 0;  // input positions
    int channels = 0;
    int pool = 2;

    struct Trace {
        std::vector<std::uint8_t> argmax;  // offset within each pool window
        Eigen::Index rows = 0;
    };

    int out_length() const { return length / pool; }

    Mat forward(const Mat& x, Trace* tr) const {
        check_shape(x.cols() == static_cast<Eigen::Index>(length) * channels, "pool input width",
                    static_cast<long>(length) * channels, x.cols());
        const Eigen::Index rows = x.rows();
        const int lo = out_length();
        Mat y(rows, static_cast<Eigen::Index>(lo) * channels);
        if (tr) {
            tr->argmax.assign(static_cast<std::size_t>(rows) * lo * channels, 0);
            tr->rows = rows;
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int l = 0; l < lo; ++l) {
                for (int c = 0; c < channels; ++c) {
                    double best = x(r, (l * pool) * channels + c);
                    int best_k = 0;
                    for (int k = 1; k < pool; ++k) {
                        const double v = x(r, (l * pool + k) * channels + c);
                        if (v > best) {
                            best = v;
                            best_k = k;
                        }
                    }
                    y(r, l * channels + c) = best;
                    if (tr) {
                        tr->argmax[(static_cast<std::size_t>(r) * lo + l) * channels + c] =
                            static_cast<std::uint8_t>(best_k);
                    }
                }
            }
        }
        return y;
    }

    Mat backward(const Trace& tr, const Mat& gy) const {
        const int lo = out_length();
        if (tr.rows != gy.rows() || gy.cols() != static_cast<Eigen::Index>(lo) * channels) {
            throw StaleTrace("pool trace does not match gradient shape");
        }
        Mat gx = Mat::Zero(gy.rows(), static_cast<Eigen::Index>(length) * channels);
        for (Eigen::Index r = 0; r < gy.rows(); ++r) {
            for (int l = 0; l < lo; ++l) {
                for (int c = 0; c < channels; ++c) {
                    const int k = tr.argmax[(static_cast<std::size_t>(r) * lo + l) * channels + c];
                    gx(r, (l * pool + k) * channels + c) += gy(r, l * channels + c);
                }
            }
        }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// LSTM over a (T*B) x d_in sequence; emits the final hidden state only.
// Gate column order: input, forget, cell, output.

struct Lstm {
    int d_in = 0;
    int units = 0;
    Mat Wx;  // d_in x 4u
    Mat Wh;  // u x 4u
    Vec b;   // 4u

    struct Trace {
        Mat x;                     // (T*B) x d_in
        std::vector<Mat> gates;    // per t, B x 4u (activated)
        std::vector<Mat> c;        // per t, B x u
        std::vector<Mat> h;        // per t, B x u
        std::vector<Mat> tanh_c;   // per t, B x u
        int T = 0;
        Eigen::Index B = 0;
    };

    Lstm() = default;
    Lstm(int d_in_, int units_)
        : d_in(d_in_), units(units_), Wx(d_in_, 4 * units_), Wh(units_, 4 * units_),
          b(Vec::Zero(4 * units_)) {}

    void init(Rng& rng) {
        const double lx = std::sqrt(6.0 / (d_in + 4 * units));
        for (Eigen::Index i = 0; i < Wx.rows(); ++i)
            for (Eigen::Index j = 0; j < Wx.cols(); ++j) Wx(i, j) = rng.uniform(-lx, lx);
        const double lh = std::sqrt(6.0 / (units + 4 * units));
        for (Eigen::Index i = 0; i < Wh.rows(); ++i)
            for (Eigen::Index j = 0; j < Wh.cols(); ++j) Wh(i, j) = rng.uniform(-lh, lh);
        b.setZero();
        b.segment(units, units).setOnes();  // forget-gate bias 1.0
    }

    Mat forward(const Mat& x_seq, int T, Trace* tr) const {
        check_shape(x_seq.cols() == d_in, "lstm input width", d_in, x_seq.cols());
        if (T <= 0 || x_seq.rows() % T != 0) {
            throw ShapeMismatch("lstm sequence rows " + std::to_string(x_seq.rows()) +
                                " not divisible by T=" + std::to_string(T));
        }
        const Eigen::Index B = x_seq.rows() / T;
        Mat h = Mat::Zero(B, units);
        Mat c = Mat::Zero(B, units);
        if (tr) {
            tr->x = x_seq;
            tr->gates.resize(T);
            tr->c.resize(T);
            tr->h.resize(T);
            tr->tanh_c.resize(T);
            tr->T = T;
            tr->B = B;
        }
        for (int t = 0; t < T; ++t) {
            Mat g = x_seq.middleRows(static_cast<Eigen::Index>(t) * B, B) * Wx;
            g.noalias() += h * Wh;
            g.rowwise() += b.transpose();
            auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
            for (Eigen::Index r = 0; r < B; ++r) {
                for (int u = 0; u < units; ++u) {
                    g(r, u) = sig(g(r, u));
                    g(r, units + u) = sig(g(r, units + u));
                    g(r, 2 * units + u) = std::tanh(g(r, 2 * units + u));
                    g(r, 3 * units + u) = sig(g(r, 3 * units + u));
                }
            }
            const auto i_g = g.leftCols(units);
            const auto f_g = g.middleCols(units, units);
            const auto c_g = g.middleCols(2 * units, units);
            const auto o_g = g.rightCols(units);
            c = f_g.cwiseProduct(c) + i_g.cwiseProduct(c_g);
            Mat tc = c.array().tanh().matrix();
            h = o_g.cwiseProduct(tc);
            if (tr) {
                tr->gates[t] = g;
                tr->c[t] = c;
                tr->h[t] = h;
                tr->tanh_c[t] = std::move(tc);
            }
        }
        return h;
    }

    // g_hT: B x units gradient at the final hidden state; returns gradient of
    // the input sequence, (T*B) x d_in.
    Mat backward(const Trace& tr, const Mat& g_hT, Mat& gWx, Mat& gWh, Vec& gb) const {
        if (tr.x.cols() != d_in || g_hT.rows() != tr.B || g_hT.cols() != units) {
            throw StaleTrace("lstm trace does not match layer/gradient shapes");
        }
        const int T = tr.T;
        const Eigen::Index B = tr.B;
        Mat dh = g_hT;
        Mat dc = Mat::Zero(B, units);
        Mat gx(static_cast<Eigen::Index>(T) * B, d_in);
        for (int t = T - 1; t >= 0; --t) {
            const Mat& g = tr.gates[t];
            const auto i_g = g.leftCols(units);
            const auto f_g = g.middleCols(units, units);
            const auto c_g = g.middleCols(2 * units, units);
            const auto o_g = g.rightCols(units);
            const Mat& tc = tr.tanh_c[t];

            dc.noalias() += dh.cwiseProduct(o_g).cwiseProduct(
                (1.0 - tc.array().square()).matrix());
            const Mat do_ = dh.cwiseProduct(tc);
            const Mat di = dc.cwiseProduct(c_g);
            const Mat dg_ = dc.cwiseProduct(i_g);
            const Mat df = t > 0 ? Mat(dc.cwiseProduct(tr.c[t - 1])) : Mat(Mat::Zero(B, units));

            Mat dz(B, 4 * units);
            dz.leftCols(units) = di.cwiseProduct(i_g).cwiseProduct((1.0 - i_g.array()).matrix());
            dz.middleCols(units, units) =
                df.cwiseProduct(f_g).cwiseProduct((1.0 - f_g.array()).matrix());
            dz.middleCols(2 * units, units) =
                dg_.cwiseProduct((1.0 - c_g.array().square()).matrix());
            dz.rightCols(units) =
                do_.cwiseProduct(o_g).cwiseProduct((1.0 - o_g.array()).matrix());

            const auto x_t = tr.x.middleRows(static_cast<Eigen::Index>(t) * B, B);
            gWx.noalias() += x_t.transpose() * dz;
            if (t > 0) gWh.noalias() += tr.h[t - 1].transpose() * dz;
            gb.noalias() += dz.colwise().sum().transpose();
            gx.middleRows(static_cast<Eigen::Index>(t) * B, B).noalias() = dz * Wx.transpose();

            dh.noalias() = dz * Wh.transpose();
            dc = dc.cwiseProduct(f_g);
        }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// dropout with inverted scaling (kept activations divided by the keep rate)

struct Dropout {
    double rate = 0.3;

    Mat forward(const Mat& x, Mode mode, Rng* rng, Mat* mask) const {
        if (mode == Mode::eval || rate == 0.0) {
            if (mask) *mask = Mat::Ones(x.rows(), x.cols());
            return x;
        }
        if (!rng) throw Error("train-mode dropout requires an rng");
        Mat m(x.rows(), x.cols());
        const double keep_scale = 1.0 / (1.0 - rate);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                m(r, c) = rng->uniform() >= rate ? keep_scale : 0.0;
            }
        }
        if (mask) *mask = m;
        return x.cwiseProduct(m);
    }

    Mat backward(const Mat& mask, const Mat& gy) const {
        if (mask.rows() != gy.rows() || mask.cols() != gy.cols()) {
            throw StaleTrace("dropout mask does not match gradient shape");
        }
        return gy.cwiseProduct(mask);
    }
};

// ---------------------------------------------------------------------------
// plain SGD, p <- p - lr * g

inline void sgd_step(double* p, const double* g, std::size_t n, double lr) {
    for (std::size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
}

inline void sgd_step(Mat& p, const Mat& g, double lr) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
        throw ShapeMismatch("sgd: parameter/gradient shape mismatch");
    }
    p.noalias() -= lr * g;
}

inline void sgd_step(Vec& p, const Vec& g, double lr) {
    if (p.size() != g.size()) throw ShapeMismatch("sgd: parameter/gradient size mismatch");
    p.noalias() -= lr * g;
}

}  // namespace speechrl::nn
