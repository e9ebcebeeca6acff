#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "itd/error.hpp"
#include "itd/features.hpp"
#include "itd/net.hpp"
#include "itd/synth.hpp"

namespace itd {

struct ConfigError : Error {
    using Error::Error;
};

// Effective settings for one run. Loaded from a key=value config file with
// [section] headers; command-line flags override file values.
struct PipelineConfig {
    // [data]
    std::string logs_dir;       // directory with the five csv files
    std::string ground_truth;   // defaults to <logs_dir>/ground_truth.csv
    std::string cert_dir;       // optional full-corpus directory for the audit check

    // [org]
    std::string org_domain = "dtaa.com";
    OfficeHours office_hours;
    std::string address_map;    // optional csv user,address

    // [synth]
    ScenarioConfig synth;

    // [prepare]
    double train_fraction = 0.75;
    double undersample_ratio = 150.0;
    std::uint64_t split_seed = 1;
    std::uint64_t sample_seed = 2;

    // [train]
    TrainConfig train;
    std::uint64_t init_seed = 3;
    std::string init_from;      // optional checkpoint to start from

    // [output]
    std::string out_dir = "run";

    std::filesystem::path effective_logs_dir() const;
    std::filesystem::path effective_ground_truth() const;
};

PipelineConfig load_config(const std::filesystem::path& path);

// every key=value pair in sorted order; the basis of the config hash
std::string canonical_config_text(const PipelineConfig& config);

// fnv1a-64 of the canonical text, 16 hex digits
std::string config_hash(const PipelineConfig& config);

AddressMap load_address_map(const std::filesystem::path& path);

}  // namespace itd
