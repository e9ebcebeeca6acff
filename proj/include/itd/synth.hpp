#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "itd/error.hpp"
#include "itd/timestamp.hpp"

namespace itd {

// Synthetic organization scenario. Users work weekdays with per-user
// behavioral baselines; injected malicious user-days add an after-hours
// burst of logon, device, file, external-email and http activity.
struct ScenarioConfig {
    int users = 10;
    int days = 5;  // calendar days from start_date
    std::uint64_t seed = 1;
    double malicious_fraction = 0.015;  // target rate over active user-days
    Date start_date{2010, 1, 4};        // a Monday

    void validate() const;
};

struct ScenarioResult {
    std::size_t active_user_days = 0;
    std::size_t event_count = 0;
    std::vector<std::pair<std::string, Date>> malicious;  // injected, sorted
};

// Writes logon.csv, device.csv, file.csv, email.csv, http.csv and
// ground_truth.csv under out_dir; byte-identical for identical configs.
ScenarioResult generate_scenario(const ScenarioConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace itd
