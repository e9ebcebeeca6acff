#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "itd/config.hpp"
#include "itd/metrics.hpp"
#include "itd/synth.hpp"

namespace itd {

// Artifact locations under one run directory. Every stage reads the previous
// stage's files and writes its own, so any stage can be re-run from disk.
struct RunPaths {
    std::filesystem::path out;

    explicit RunPaths(std::filesystem::path out_dir) : out(std::move(out_dir)) {}

    std::filesystem::path synth_logs() const { return out / "logs"; }
    std::filesystem::path features_raw() const { return out / "features_raw.csv"; }
    std::filesystem::path features_norm() const { return out / "features_norm.csv"; }
    std::filesystem::path split_manifest() const { return out / "split_manifest.txt"; }
    std::filesystem::path images_dir() const { return out / "images"; }
    std::filesystem::path image_manifest() const { return out / "image_manifest.csv"; }
    std::filesystem::path checkpoint() const { return out / "model.ckpt"; }
    std::filesystem::path training_log() const { return out / "training_log.csv"; }
    std::filesystem::path report_csv() const { return out / "report.csv"; }
    std::filesystem::path report_txt() const { return out / "report.txt"; }
    std::filesystem::path run_json() const { return out / "run.json"; }
    std::filesystem::path ingest_summary() const { return out / "ingest_summary.json"; }
};

struct IngestSummary {
    std::size_t per_file_rows[5] = {0, 0, 0, 0, 0};  // logon, device, file, email, http
    std::size_t total_events = 0;
    std::size_t active_user_days = 0;
    std::size_t malicious_user_days = 0;
    std::size_t truth_rows = 0;
    std::size_t unmatched_truth = 0;
};

ScenarioResult run_synth(const PipelineConfig& config);
IngestSummary run_ingest(const PipelineConfig& config);
void run_featurize(const PipelineConfig& config);
void run_prepare(const PipelineConfig& config);
void run_encode(const PipelineConfig& config);
void run_train(const PipelineConfig& config);

struct EvalOutcome {
    ConfusionMatrix cm;
    MetricSet metrics;
};

EvalOutcome run_evaluate(const PipelineConfig& config);

// synth (only when no external logs_dir is configured) then every stage
// through evaluate
EvalOutcome run_pipeline(const PipelineConfig& config);

}  // namespace itd
