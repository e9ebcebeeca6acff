#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "itd/error.hpp"
#include "itd/events.hpp"
#include "itd/features.hpp"

namespace itd {

enum class LabelClass : int { non_malicious = 0, malicious = 1 };

inline std::string_view to_string(LabelClass label) {
    return label == LabelClass::malicious ? "malicious" : "non-malicious";
}

struct LabeledSample {
    std::string user;
    Date date;
    FeatureVector features;
    LabelClass label = LabelClass::non_malicious;
};

// Per-calendar-day min-max scaling: for each (date, slot), x' = (x-m)/(M-m)
// over the users active that day; a degenerate slot (M == m) maps to 0.
void normalize_per_day(std::vector<LabeledSample>& samples);

struct LabelJoin {
    std::vector<LabeledSample> samples;
    std::size_t unmatched_truth = 0;  // truth entries with no feature row
};

LabelJoin label_samples(std::vector<FeatureRow> rows, const GroundTruth& truth);

struct ClassTooSmall : Error {
    using Error::Error;
};

struct DatasetSplit {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> test;
    std::uint64_t seed = 0;
    double fraction_train = 0.0;
};

// Stratified: each class is shuffled by the seeded RNG and cut at
// round(fraction * class size), half up.
DatasetSplit split_train_test(std::vector<LabeledSample> samples, double fraction_train,
                              std::uint64_t seed);

// Keeps every minority sample and min(floor(ratio * minority), majority)
// majority samples drawn uniformly without replacement; output order is a
// seeded shuffle of the survivors.
std::vector<LabeledSample> undersample_majority(std::vector<LabeledSample> train, double ratio,
                                                std::uint64_t seed);

struct SplitManifestEntry {
    std::string user;
    Date date;
    bool train = false;
    bool kept = true;  // train rows dropped by undersampling carry false
};

struct SplitManifest {
    std::uint64_t split_seed = 0;
    double fraction_train = 0.0;
    std::uint64_t sample_seed = 0;
    double undersample_ratio = 0.0;
    std::vector<SplitManifestEntry> entries;

    const SplitManifestEntry* find(const std::string& user, Date date) const;
};

SplitManifest make_split_manifest(const DatasetSplit& split,
                                  std::span<const LabeledSample> kept_train,
                                  std::uint64_t sample_seed, double undersample_ratio);

void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_split_manifest(const std::filesystem::path& path);

}  // namespace itd
