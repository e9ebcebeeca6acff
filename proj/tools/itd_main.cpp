// itd - insider threat detection from audit-log behavior images.
//
// Stages: synth -> ingest -> featurize -> prepare -> encode -> train ->
// evaluate; `pipeline` chains them. Every stage works from the previous
// stage's on-disk artifacts under the run directory.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "itd/config.hpp"
#include "itd/pipeline.hpp"

namespace {

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> ratio;
    std::optional<std::string> office_hours;
    std::optional<std::string> out_dir;
    std::optional<std::string> logs_dir;
    std::optional<std::string> ground_truth;
    std::optional<int> users;
    std::optional<int> days;
    std::optional<double> fraction;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<int> workers;
    std::optional<std::string> freeze_mode;
    std::optional<std::string> init_from;
};

itd::PipelineConfig build_config(const Overrides& o) {
    itd::PipelineConfig config;
    if (o.config_path) config = itd::load_config(*o.config_path);

    if (o.seed) {
        // one master seed fans out to the per-stage seeds
        config.synth.seed = *o.seed;
        config.split_seed = *o.seed + 1;
        config.sample_seed = *o.seed + 2;
        config.init_seed = *o.seed + 3;
        config.train.seed = *o.seed + 4;
    }
    if (o.ratio) config.undersample_ratio = *o.ratio;
    if (o.office_hours) config.office_hours = itd::OfficeHours::parse(*o.office_hours);
    if (o.out_dir) config.out_dir = *o.out_dir;
    if (o.logs_dir) config.logs_dir = *o.logs_dir;
    if (o.ground_truth) config.ground_truth = *o.ground_truth;
    if (o.users) config.synth.users = *o.users;
    if (o.days) config.synth.days = *o.days;
    if (o.fraction) config.synth.malicious_fraction = *o.fraction;
    if (o.epochs) config.train.epochs = *o.epochs;
    if (o.batch_size) config.train.batch_size = *o.batch_size;
    if (o.workers) config.train.workers = *o.workers;
    if (o.init_from) config.init_from = *o.init_from;
    if (o.freeze_mode) {
        const std::string& text = *o.freeze_mode;
        if (text == "full") {
            config.train.mode = itd::FreezeMode::full;
        } else if (text == "feature-extraction") {
            config.train.mode = itd::FreezeMode::feature_extraction;
        } else if (text.rfind("fine-tune", 0) == 0) {
            config.train.mode = itd::FreezeMode::fine_tune;
            config.train.fine_tune_layers = text.size() > 10 ? std::stoi(text.substr(10)) : 1;
        } else {
            throw CLI::ValidationError("--freeze-mode",
                                       "expected full, feature-extraction or fine-tune:k");
        }
    }
    return config;
}

void print_metrics(const itd::EvalOutcome& outcome) {
    std::printf("test: tp=%llu fp=%llu tn=%llu fn=%llu\n",
                static_cast<unsigned long long>(outcome.cm.tp),
                static_cast<unsigned long long>(outcome.cm.fp),
                static_cast<unsigned long long>(outcome.cm.tn),
                static_cast<unsigned long long>(outcome.cm.fn));
    if (outcome.metrics.precision)
        std::printf("precision=%.4f ", *outcome.metrics.precision);
    else
        std::printf("precision=undefined ");
    std::printf("recall=%.4f accuracy=%.4f f1=%.4f\n", outcome.metrics.recall,
                outcome.metrics.accuracy, outcome.metrics.f1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"insider threat detection from audit-log behavior images"};
    app.require_subcommand(1);

    Overrides o;
    app.add_option("--config", o.config_path, "config file (key = value with [sections])");
    app.add_option("--seed", o.seed, "master seed; derives the per-stage seeds");
    app.add_option("--ratio", o.ratio, "undersampling ratio (majority per minority)");
    app.add_option("--office-hours", o.office_hours, "office hours, HH:MM-HH:MM");
    app.add_option("--out", o.out_dir, "run output directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic audit-log corpus");
    synth->add_option("--users", o.users, "number of users");
    synth->add_option("--days", o.days, "number of calendar days");
    synth->add_option("--fraction", o.fraction, "target malicious user-day fraction");

    auto* ingest = app.add_subcommand("ingest", "parse the corpus and report counts");
    ingest->add_option("--logs", o.logs_dir, "directory with the five csv files");
    ingest->add_option("--ground-truth", o.ground_truth, "ground truth csv");

    auto* featurize = app.add_subcommand("featurize", "extract per-user-day feature vectors");
    featurize->add_option("--logs", o.logs_dir, "directory with the five csv files");
    featurize->add_option("--ground-truth", o.ground_truth, "ground truth csv");

    app.add_subcommand("prepare", "normalize, split and undersample");
    app.add_subcommand("encode", "write behavior images and their manifest");

    auto* train_cmd = app.add_subcommand("train", "train the classifier on the kept train images");
    train_cmd->add_option("--epochs", o.epochs, "training epochs");
    train_cmd->add_option("--batch", o.batch_size, "minibatch size");
    train_cmd->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    train_cmd->add_option("--freeze-mode", o.freeze_mode,
                          "full | feature-extraction | fine-tune:k");
    train_cmd->add_option("--init-from", o.init_from, "checkpoint to start from");

    app.add_subcommand("evaluate", "score the test partition and write the report");

    auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    pipeline->add_option("--users", o.users, "number of users");
    pipeline->add_option("--days", o.days, "number of calendar days");
    pipeline->add_option("--fraction", o.fraction, "target malicious user-day fraction");
    pipeline->add_option("--epochs", o.epochs, "training epochs");
    pipeline->add_option("--batch", o.batch_size, "minibatch size");
    pipeline->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    pipeline->add_option("--freeze-mode", o.freeze_mode, "full | feature-extraction | fine-tune:k");
    pipeline->add_option("--init-from", o.init_from, "checkpoint to start from");
    pipeline->add_option("--logs", o.logs_dir, "use an existing corpus instead of synthesizing");
    pipeline->add_option("--ground-truth", o.ground_truth, "ground truth csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
        app.exit(e);
        return 2;  // usage error
    }

    try {
        const itd::PipelineConfig config = build_config(o);
        const std::string sub = app.get_subcommands().front()->get_name();

        if (sub == "synth") {
            const itd::ScenarioResult result = itd::run_synth(config);
            std::printf("wrote %zu events over %zu active user-days (%zu malicious) to %s\n",
                        result.event_count, result.active_user_days, result.malicious.size(),
                        (itd::RunPaths(config.out_dir).synth_logs()).string().c_str());
        } else if (sub == "ingest") {
            const itd::IngestSummary s = itd::run_ingest(config);
            std::printf("events=%zu (logon=%zu device=%zu file=%zu email=%zu http=%zu)\n",
                        s.total_events, s.per_file_rows[0], s.per_file_rows[1], s.per_file_rows[2],
                        s.per_file_rows[3], s.per_file_rows[4]);
            std::printf("active user-days=%zu malicious=%zu unmatched-truth=%zu\n",
                        s.active_user_days, s.malicious_user_days, s.unmatched_truth);
        } else if (sub == "featurize") {
            itd::run_featurize(config);
            std::printf("wrote %s\n", itd::RunPaths(config.out_dir).features_raw().string().c_str());
        } else if (sub == "prepare") {
            itd::run_prepare(config);
            std::printf("wrote %s\n",
                        itd::RunPaths(config.out_dir).split_manifest().string().c_str());
        } else if (sub == "encode") {
            itd::run_encode(config);
            std::printf("wrote %s\n",
                        itd::RunPaths(config.out_dir).image_manifest().string().c_str());
        } else if (sub == "train") {
            itd::run_train(config);
            std::printf("wrote %s\n", itd::RunPaths(config.out_dir).checkpoint().string().c_str());
        } else if (sub == "evaluate") {
            print_metrics(itd::run_evaluate(config));
        } else if (sub == "pipeline") {
            print_metrics(itd::run_pipeline(config));
        }
        return 0;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const itd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
