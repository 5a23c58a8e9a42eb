#pragma once

// MFCC extraction: centered framing with reflection padding, Hann window,
// power spectrum, triangular mel filterbank, log with floor, orthonormal
// DCT-II. This matrix is the MDP state consumed by the policy network.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "speechrl/binio.hpp"
#include "speechrl/errors.hpp"
#include "speechrl/wav.hpp"

namespace speechrl {

struct FeatureConfig {
    int n_mfcc = 40;
    int frame_length = 2048;
    int hop_length = 512;
    int n_mels = 128;
    int n_fft = 0;  // 0 = frame_length
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-10;
    int target_frames = 0;  // 0 = auto (floor(len/hop)+1)
    int sample_rate_hz = kSampleRateHz;

    int effective_n_fft() const { return n_fft > 0 ? n_fft : frame_length; }

    void validate() const {
        if (hop_length > frame_length) throw Error("hop_length must be <= frame_length");
        if (n_mfcc > n_mels) throw Error("n_mfcc must be <= n_mels");
        if (fmax_hz > sample_rate_hz / 2.0) throw Error("fmax_hz must be <= sample_rate/2");
        const int nfft = effective_n_fft();
        if (nfft <= 0 || (nfft & (nfft - 1)) != 0) throw Error("n_fft must be a power of two");
    }
};

struct FeatureMatrix {
    int n = 0;  // coefficients (rows)
    int f = 0;  // frames (columns)
    std::vector<double> values;  // row-major n*f
    std::string clip_ref;
    int label_id = -1;

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * f + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * f + j]; }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters with centers equally spaced on the mel scale; no area
// normalization. Shape: n_mels x (n_fft/2 + 1).
inline Eigen::MatrixXd build_mel_filterbank(const FeatureConfig& config, int sample_rate_hz) {
    config.validate();
    if (config.fmin_hz >= config.fmax_hz) {
        throw InvalidBand("fmin must be < fmax, got [" + std::to_string(config.fmin_hz) + ", " +
                          std::to_string(config.fmax_hz) + "]");
    }
    const int nfft = config.effective_n_fft();
    const int n_bins = nfft / 2 + 1;
    const int n_mels = config.n_mels;

    std::vector<double> mel_pts(static_cast<std::size_t>(n_mels) + 2);
    const double mel_lo = hz_to_mel(config.fmin_hz);
    const double mel_hi = hz_to_mel(config.fmax_hz);
    for (int i = 0; i < n_mels + 2; ++i) {
        mel_pts[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
    }

    Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
    for (int m = 0; m < n_mels; ++m) {
        const double left = mel_pts[m], center = mel_pts[m + 1], right = mel_pts[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double freq = static_cast<double>(k) * sample_rate_hz / nfft;
            double w = 0.0;
            if (freq > left && freq < right) {
                w = freq <= center ? (freq - left) / (center - left)
                                   : (right - freq) / (right - center);
            }
            fb(m, k) = w;
        }
        if (fb.row(m).maxCoeff() <= 0.0) {
            // n_fft too coarse for this band; widen to the nearest bin so the
            // filter is never all-zero.
            int k = static_cast<int>(std::round(center * nfft / sample_rate_hz));
            if (k < 0) k = 0;
            if (k >= n_bins) k = n_bins - 1;
            fb(m, k) = 1.0;
        }
    }
    return fb;
}

namespace detail {

// In-place iterative radix-2 FFT; n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// sample at position p of the signal extended by reflection (librosa-style,
// edge sample not repeated)
inline double reflect_sample(const std::vector<double>& x, long long p) {
    const long long n = static_cast<long long>(x.size());
    if (n == 1) return x[0];
    const long long period = 2 * (n - 1);
    long long q = p % period;
    if (q < 0) q += period;
    if (q >= n) q = period - q;
    return x[static_cast<std::size_t>(q)];
}

inline Eigen::MatrixXd dct2_orthonormal(int n_out, int n_in) {
    Eigen::MatrixXd d(n_out, n_in);
    const double scale0 = std::sqrt(1.0 / n_in);
    const double scale = std::sqrt(2.0 / n_in);
    for (int k = 0; k < n_out; ++k) {
        for (int j = 0; j < n_in; ++j) {
            d(k, j) = (k == 0 ? scale0 : scale) * std::cos(M_PI * k * (2 * j + 1) / (2.0 * n_in));
        }
    }
    return d;
}

}  // namespace detail

// Log-mel spectrogram, n_mels x frames. Exposed separately so the DCT
// orthonormality property can be checked against it.
inline Eigen::MatrixXd compute_log_mel(const AudioClip& clip, const FeatureConfig& config) {
    config.validate();
    if (clip.sample_rate_hz != config.sample_rate_hz) {
        throw ConfigMismatch("clip rate " + std::to_string(clip.sample_rate_hz) +
                             " != config rate " + std::to_string(config.sample_rate_hz) + " for " +
                             clip.source_path);
    }
    const int nfft = config.effective_n_fft();
    const int n_bins = nfft / 2 + 1;
    const auto len = static_cast<long long>(clip.samples.size());
    const int n_frames = static_cast<int>(len / config.hop_length) + 1;

    std::vector<double> window(static_cast<std::size_t>(nfft));
    for (int i = 0; i < nfft; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / nfft));
    }

    const Eigen::MatrixXd fb = build_mel_filterbank(config, clip.sample_rate_hz);
    Eigen::MatrixXd power(n_bins, n_frames);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
    for (int t = 0; t < n_frames; ++t) {
        const long long start = static_cast<long long>(t) * config.hop_length - nfft / 2;
        for (int i = 0; i < nfft; ++i) {
            buf[i] = window[i] * detail::reflect_sample(clip.samples, start + i);
        }
        detail::fft_radix2(buf);
        for (int k = 0; k < n_bins; ++k) power(k, t) = std::norm(buf[k]);
    }

    Eigen::MatrixXd mel = fb * power;
    for (int i = 0; i < mel.rows(); ++i) {
        for (int j = 0; j < mel.cols(); ++j) {
            mel(i, j) = std::log(std::max(mel(i, j), config.log_floor));
        }
    }
    return mel;
}

inline FeatureMatrix compute_mfcc(const AudioClip& clip, const FeatureConfig& config) {
    const Eigen::MatrixXd mel = compute_log_mel(clip, config);
    const Eigen::MatrixXd dct = detail::dct2_orthonormal(config.n_mfcc, config.n_mels);
    Eigen::MatrixXd coeffs = dct * mel;  // n_mfcc x frames

    const int f = config.target_frames > 0 ? config.target_frames : static_cast<int>(coeffs.cols());
    FeatureMatrix out;
    out.n = config.n_mfcc;
    out.f = f;
    out.clip_ref = clip.source_path;
    out.label_id = clip.label_id;
    out.values.assign(static_cast<std::size_t>(out.n) * f, 0.0);
    const int copy_cols = std::min<int>(f, static_cast<int>(coeffs.cols()));
    for (int i = 0; i < out.n; ++i) {
        for (int j = 0; j < copy_cols; ++j) out.at(i, j) = coeffs(i, j);
    }
    for (const double v : out.values) {
        if (!std::isfinite(v)) throw Error("non-finite MFCC value for " + clip.source_path);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature cache: magic "MFCC", version u16, n u16, f u16, count u32, then per
// record label_id u16, path length u16, path bytes, n*f float32 LE row-major.

inline void cache_write(const std::vector<FeatureMatrix>& matrices, const std::string& path) {
    int n = 0, f = 0;
    if (!matrices.empty()) {
        n = matrices.front().n;
        f = matrices.front().f;
        for (const auto& m : matrices) {
            if (m.n != n || m.f != f) {
                throw DimensionMismatch("cache requires uniform dimensions, got " +
                                        std::to_string(m.n) + "x" + std::to_string(m.f) +
                                        " vs " + std::to_string(n) + "x" + std::to_string(f));
            }
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write feature cache: " + path);
    binio::write_bytes(out, "MFCC", 4);
    binio::write_le<std::uint16_t>(out, 1);
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(n));
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(f));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrices.size()));
    for (const auto& m : matrices) {
        binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.label_id));
        binio::write_string(out, m.clip_ref);
        for (const double v : m.values) {
            binio::write_le<float>(out, static_cast<float>(v));
        }
    }
    if (!out) throw IoFailure("short write on feature cache: " + path);
}

inline std::vector<FeatureMatrix> cache_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open feature cache: " + path);
    char magic[4];
    binio::read_bytes(in, magic, 4, "cache magic");
    if (std::string(magic, 4) != "MFCC") throw BadMagic("bad feature cache magic in " + path);
    const auto version = binio::read_le<std::uint16_t>(in, "cache version");
    if (version != 1) throw BadMagic("unsupported feature cache version " + std::to_string(version));
    const int n = binio::read_le<std::uint16_t>(in, "n");
    const int f = binio::read_le<std::uint16_t>(in, "f");
    const auto count = binio::read_le<std::uint32_t>(in, "count");

    std::vector<FeatureMatrix> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        FeatureMatrix m;
        m.n = n;
        m.f = f;
        m.label_id = static_cast<std::int16_t>(binio::read_le<std::uint16_t>(in, "label"));
        m.clip_ref = binio::read_string(in, "path");
        m.values.resize(static_cast<std::size_t>(n) * f);
        for (auto& v : m.values) v = binio::read_le<float>(in, "values");
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace speechrl
