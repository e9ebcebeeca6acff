#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itd/dataset.hpp"
#include "itd/error.hpp"

namespace itd {

struct LengthMismatch : Error {
    using Error::Error;
};

// Positive class = malicious.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(std::span<const LabelClass> predicted,
                          std::span<const LabelClass> actual);

// precision is undefined (nullopt) when tp+fp = 0 rather than silently 0.
struct MetricSet {
    double accuracy = 0.0;
    std::optional<double> precision;
    double recall = 0.0;
    double f1 = 0.0;
};

MetricSet compute_metrics(const ConfusionMatrix& cm);

struct ReportRow {
    std::string method;
    std::optional<double> precision;  // percent
    std::optional<double> recall;     // percent
    std::optional<double> accuracy;   // percent
    std::optional<double> f1;         // percent
    std::string source;               // "reported" or "this run"
};

// Published comparison rows rendered above the measured result.
std::vector<ReportRow> baseline_rows();

ReportRow measured_row(std::string method, const MetricSet& metrics);

std::string render_report_text(std::span<const ReportRow> rows, const ConfusionMatrix& cm,
                               const std::string& config_hash);

// CSV: method,precision,recall,accuracy,f1,source with a trailing
// `# config_hash=...` comment line.
void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows,
                      const std::string& config_hash);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace itd
