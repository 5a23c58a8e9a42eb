#pragma once

#include <stdexcept>
#include <string>

namespace speechrl {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// audio_ingest
struct MalformedWav : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct MissingCommandDir : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct DegenerateSplit : Error { using Error::Error; };

// features
struct InvalidBand : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// neuralnet / policy
struct ShapeMismatch : Error { using Error::Error; };
struct StaleTrace : Error { using Error::Error; };
struct InvalidArch : Error { using Error::Error; };
struct ArchDigestMismatch : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

// rl
struct DatasetTooSmall : Error { using Error::Error; };
struct EpisodeFinished : Error { using Error::Error; };

// metrics / reporting
struct OutOfRangeScore : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct MismatchedRuns : Error { using Error::Error; };

}  // namespace speechrl
