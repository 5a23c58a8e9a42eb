#pragma once

// Speech Commands directory indexing and deterministic splitting.
// Layout: <root>/<command>/<file>.wav; `_background_noise_` and any
// directory not named by the subset are ignored.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "speechrl/errors.hpp"
#include "speechrl/rng.hpp"

namespace speechrl {

enum class SubsetKind { binary, main20, all30 };

inline const char* subset_name(SubsetKind k) {
    switch (k) {
        case SubsetKind::binary: return "binary";
        case SubsetKind::main20: return "main20";
        case SubsetKind::all30: return "all30";
    }
    return "?";
}

inline SubsetKind subset_from_name(const std::string& s) {
    if (s == "binary") return SubsetKind::binary;
    if (s == "main20") return SubsetKind::main20;
    if (s == "all30") return SubsetKind::all30;
    throw Error("unknown subset: " + s + " (expected binary|main20|all30)");
}

inline const std::vector<std::string>& main_commands() {
    static const std::vector<std::string> v = {
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "down",
        "go",  "left", "no",   "off",  "on",   "right", "stop", "up",   "yes",  "zero"};
    return v;
}

inline const std::vector<std::string>& sub_commands() {
    static const std::vector<std::string> v = {"bed",   "bird",  "cat",    "dog",    "happy",
                                               "house", "marvin", "sheila", "tree",   "wow"};
    return v;
}

inline std::vector<std::string> label_map_for(SubsetKind kind) {
    switch (kind) {
        case SubsetKind::binary: return {"left", "right"};
        case SubsetKind::main20: return main_commands();
        case SubsetKind::all30: {
            std::vector<std::string> v = main_commands();
            v.insert(v.end(), sub_commands().begin(), sub_commands().end());
            return v;
        }
    }
    return {};
}

struct DatasetEntry {
    std::string path;
    int label_id;
    bool operator==(const DatasetEntry&) const = default;
};

struct DatasetIndex {
    std::vector<DatasetEntry> entries;  // always sorted by path
    std::vector<std::string> label_map;
    SubsetKind subset_kind = SubsetKind::binary;
};

struct SplitSpec {
    double pretrain_fraction = 0.4;
    double rl_fraction = 0.4;
    double eval_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        const double sum = pretrain_fraction + rl_fraction + eval_fraction;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error("split fractions must sum to 1, got " + std::to_string(sum));
        }
        if (pretrain_fraction < 0 || rl_fraction < 0 || eval_fraction < 0) {
            throw Error("split fractions must be non-negative");
        }
    }
};

// Optional per-class cap applied at scan time (0 = unlimited). Files are kept
// in sorted-path order, so the cap is deterministic.
inline DatasetIndex scan_dataset(const std::string& root, SubsetKind kind,
                                 std::size_t max_per_class = 0) {
    namespace fs = std::filesystem;
    DatasetIndex index;
    index.subset_kind = kind;
    index.label_map = label_map_for(kind);

    for (std::size_t label = 0; label < index.label_map.size(); ++label) {
        const fs::path dir = fs::path(root) / index.label_map[label];
        if (!fs::is_directory(dir)) {
            throw MissingCommandDir("missing command directory: " + dir.string());
        }
        std::vector<std::string> files;
        for (const auto& de : fs::directory_iterator(dir)) {
            if (de.is_regular_file() && de.path().extension() == ".wav") {
                files.push_back(de.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (max_per_class > 0 && files.size() > max_per_class) files.resize(max_per_class);
        for (auto& f : files) index.entries.push_back({std::move(f), static_cast<int>(label)});
    }

    std::sort(index.entries.begin(), index.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.path < b.path; });
    if (index.entries.empty()) throw EmptyDataset("no wav files under " + root);
    return index;
}

struct SplitResult {
    DatasetIndex pretrain;
    DatasetIndex rl;
    DatasetIndex eval;
};

// The split key is the path's last two components (command dir / file name),
// so the assignment does not change when the corpus is mounted elsewhere.
inline std::string split_key(const std::string& path) {
    const std::filesystem::path p(path);
    return (p.parent_path().filename() / p.filename()).generic_string();
}

// Stratified per class: entries are ordered by a seed-salted hash of the
// split key, then sliced by the cumulative fractions. Proportions per class
// are exact to rounding, and the assignment depends only on (key, seed).
inline SplitResult split_dataset(const DatasetIndex& index, const SplitSpec& spec) {
    spec.validate();
    if (index.entries.empty()) throw EmptyDataset("cannot split an empty index");

    SplitResult result;
    for (DatasetIndex* part : {&result.pretrain, &result.rl, &result.eval}) {
        part->label_map = index.label_map;
        part->subset_kind = index.subset_kind;
    }

    std::map<int, std::vector<const DatasetEntry*>> by_class;
    for (const auto& e : index.entries) by_class[e.label_id].push_back(&e);

    for (auto& [label, group] : by_class) {
        std::sort(group.begin(), group.end(), [&](const DatasetEntry* a, const DatasetEntry* b) {
            const std::string ka = split_key(a->path), kb = split_key(b->path);
            const auto ha = splitmix64(fnv1a64(ka.data(), ka.size()) ^ spec.seed);
            const auto hb = splitmix64(fnv1a64(kb.data(), kb.size()) ^ spec.seed);
            return ha != hb ? ha < hb : a->path < b->path;
        });
        const auto m = static_cast<double>(group.size());
        const auto b1 = static_cast<std::size_t>(std::llround(spec.pretrain_fraction * m));
        const auto b2 = static_cast<std::size_t>(
            std::llround((spec.pretrain_fraction + spec.rl_fraction) * m));
        for (std::size_t i = 0; i < group.size(); ++i) {
            DatasetIndex& part = i < b1 ? result.pretrain : (i < b2 ? result.rl : result.eval);
            part.entries.push_back(*group[i]);
        }
    }

    for (DatasetIndex* part : {&result.pretrain, &result.rl, &result.eval}) {
        std::sort(part->entries.begin(), part->entries.end(),
                  [](const DatasetEntry& a, const DatasetEntry& b) { return a.path < b.path; });
    }

    auto check = [&](const DatasetIndex& part, double fraction, const char* name) {
        if (fraction > 0 && part.entries.empty()) {
            throw DegenerateSplit(std::string("partition '") + name +
                                  "' is empty although its fraction is positive");
        }
    };
    check(result.pretrain, spec.pretrain_fraction, "pretrain");
    check(result.rl, spec.rl_fraction, "rl");
    check(result.eval, spec.eval_fraction, "eval");
    return result;
}

}  // namespace speechrl
