#pragma once

// Minimal RIFF/WAVE reader for the corpus format: PCM, 16-bit, mono, 16 kHz.
// Anything else is rejected rather than converted.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "speechrl/binio.hpp"
#include "speechrl/errors.hpp"

namespace speechrl {

constexpr int kSampleRateHz = 16000;
constexpr int kClipSamples = 16000;  // one second

struct AudioClip {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate_hz = kSampleRateHz;
    std::string source_path;
    int label_id = -1;  // -1 = unlabeled
};

namespace detail {

inline std::uint32_t fourcc(const char* s) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24);
}

}  // namespace detail

// Center-pad with zeros or center-crop to exactly kClipSamples.
inline void normalize_clip_length(std::vector<double>& samples) {
    const auto n = samples.size();
    if (n == static_cast<std::size_t>(kClipSamples)) return;
    if (n < static_cast<std::size_t>(kClipSamples)) {
        const std::size_t deficit = kClipSamples - n;
        const std::size_t lead = deficit / 2;
        std::vector<double> out(kClipSamples, 0.0);
        for (std::size_t i = 0; i < n; ++i) out[lead + i] = samples[i];
        samples = std::move(out);
    } else {
        const std::size_t start = (n - kClipSamples) / 2;
        samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(start),
                       samples.begin() + static_cast<std::ptrdiff_t>(start + kClipSamples));
    }
}

inline AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedWav("cannot open wav file: " + path);

    auto bad = [&](const char* why) { return MalformedWav(std::string(why) + ": " + path); };
    auto unsupported = [&](const std::string& why) { return UnsupportedFormat(why + ": " + path); };

    try {
        if (binio::read_le<std::uint32_t>(in, "RIFF id") != detail::fourcc("RIFF")) throw bad("missing RIFF id");
        binio::read_le<std::uint32_t>(in, "RIFF size");
        if (binio::read_le<std::uint32_t>(in, "WAVE id") != detail::fourcc("WAVE")) throw bad("missing WAVE id");

        bool have_fmt = false;
        std::uint16_t format_tag = 0, channels = 0, bits = 0;
        std::uint32_t rate = 0;
        std::vector<std::int16_t> pcm;
        bool have_data = false;

        while (!have_data || !have_fmt) {
            std::uint32_t id, size;
            {
                unsigned char buf[4];
                in.read(reinterpret_cast<char*>(buf), 4);
                if (!in) throw bad("unexpected end of file before data chunk");
                id = static_cast<std::uint32_t>(buf[0]) | (buf[1] << 8) | (buf[2] << 16) |
                     (static_cast<std::uint32_t>(buf[3]) << 24);
            }
            size = binio::read_le<std::uint32_t>(in, "chunk size");

            if (id == detail::fourcc("fmt ")) {
                if (size < 16) throw bad("fmt chunk too small");
                format_tag = binio::read_le<std::uint16_t>(in, "format tag");
                channels = binio::read_le<std::uint16_t>(in, "channels");
                rate = binio::read_le<std::uint32_t>(in, "sample rate");
                binio::read_le<std::uint32_t>(in, "byte rate");
                binio::read_le<std::uint16_t>(in, "block align");
                bits = binio::read_le<std::uint16_t>(in, "bits per sample");
                in.seekg(size - 16 + (size & 1), std::ios::cur);
                have_fmt = true;
            } else if (id == detail::fourcc("data")) {
                if (!have_fmt) throw bad("data chunk before fmt chunk");
                if (size % 2 != 0) throw bad("odd data chunk size for 16-bit pcm");
                pcm.resize(size / 2);
                if (!pcm.empty()) {
                    binio::read_bytes(in, pcm.data(), size, "pcm samples");
                }
                have_data = true;
            } else {
                in.seekg(size + (size & 1), std::ios::cur);
                if (!in) throw bad("truncated chunk");
            }
        }

        if (format_tag != 1) throw unsupported("non-PCM format tag " + std::to_string(format_tag));
        if (channels != 1) throw unsupported(std::to_string(channels) + " channels (mono required)");
        if (bits != 16) throw unsupported(std::to_string(bits) + " bits per sample (16 required)");
        if (rate != kSampleRateHz) throw unsupported(std::to_string(rate) + " Hz (16000 required)");

        AudioClip clip;
        clip.source_path = path;
        clip.samples.resize(pcm.size());
        for (std::size_t i = 0; i < pcm.size(); ++i) {
            clip.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
        }
        normalize_clip_length(clip.samples);
        return clip;
    } catch (const TruncatedFile& e) {
        throw MalformedWav(std::string(e.what()) + ": " + path);
    }
}

// Writer used by tests and the synthetic corpus generator.
inline void write_wav_pcm16(const std::string& path, const std::vector<std::int16_t>& pcm,
                            std::uint32_t rate = kSampleRateHz) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write wav file: " + path);
    const std::uint32_t data_size = static_cast<std::uint32_t>(pcm.size() * 2);
    binio::write_le<std::uint32_t>(out, detail::fourcc("RIFF"));
    binio::write_le<std::uint32_t>(out, 36 + data_size);
    binio::write_le<std::uint32_t>(out, detail::fourcc("WAVE"));
    binio::write_le<std::uint32_t>(out, detail::fourcc("fmt "));
    binio::write_le<std::uint32_t>(out, 16);
    binio::write_le<std::uint16_t>(out, 1);  // PCM
    binio::write_le<std::uint16_t>(out, 1);  // mono
    binio::write_le<std::uint32_t>(out, rate);
    binio::write_le<std::uint32_t>(out, rate * 2);
    binio::write_le<std::uint16_t>(out, 2);
    binio::write_le<std::uint16_t>(out, 16);
    binio::write_le<std::uint32_t>(out, detail::fourcc("data"));
    binio::write_le<std::uint32_t>(out, data_size);
    if (!pcm.empty()) binio::write_bytes(out, pcm.data(), data_size);
    if (!out) throw IoFailure("short write: " + path);
}

inline void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                            std::uint32_t rate = kSampleRateHz) {
    std::vector<std::int16_t> pcm(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double v = samples[i] * 32768.0;
        if (v > 32767.0) v = 32767.0;
        if (v < -32768.0) v = -32768.0;
        pcm[i] = static_cast<std::int16_t>(v);
    }
    write_wav_pcm16(path, pcm, rate);
}

}  // namespace speechrl
