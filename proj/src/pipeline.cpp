#include "itd/pipeline.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "itd/csv.hpp"
#include "itd/dataset.hpp"
#include "itd/image.hpp"
#include "itd/ingest.hpp"
#include "itd/net.hpp"
#include "itd/png_io.hpp"

namespace itd {

namespace {

using nlohmann::json;

// run.json accumulates one entry per executed stage
void record_stage(const PipelineConfig& config, const std::string& stage, json details) {
    const RunPaths paths(config.out_dir);
    json run;
    {
        std::ifstream in(paths.run_json());
        if (in) {
            try {
                in >> run;
            } catch (const json::exception&) {
                run = json::object();
            }
        }
    }
    if (!run.is_object()) run = json::object();
    run["config_hash"] = config_hash(config);
    run["seeds"] = {{"synth", config.synth.seed},
                    {"split", config.split_seed},
                    {"sample", config.sample_seed},
                    {"init", config.init_seed},
                    {"shuffle", config.train.seed}};
    run["stages"][stage] = std::move(details);

    std::ofstream out(paths.run_json(), std::ios::binary);
    if (!out) throw IoError("cannot write " + paths.run_json().string());
    out << run.dump(2) << '\n';
}

IngestResult ingest_from_config(const PipelineConfig& config) {
    const auto dir = config.effective_logs_dir();
    if (!std::filesystem::exists(dir)) throw IoError("logs directory not found: " + dir.string());
    return ingest_corpus(CorpusPaths::in_directory(dir), RowPolicy::fail);
}

std::string partition_name(bool train) { return train ? "train" : "test"; }

struct ManifestRow {
    std::string path;
    std::string user;
    Date date;
    LabelClass label;
    bool train;
};

std::vector<ManifestRow> read_image_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    CsvReader reader(in);
    const auto header = reader.next_row();
    if (!header || header->size() != 5 || (*header)[0] != "path")
        throw Error(path.string() + ": bad image manifest header");

    std::vector<ManifestRow> rows;
    while (auto row = reader.next_row()) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (row->size() != 5) throw Error(path.string() + ": bad image manifest row");
        ManifestRow r;
        r.path = (*row)[0];
        r.user = (*row)[1];
        const auto date = Date::try_parse((*row)[2]);
        if (!date) throw Error(path.string() + ": bad date " + (*row)[2]);
        r.date = *date;
        if ((*row)[3] == "malicious") r.label = LabelClass::malicious;
        else if ((*row)[3] == "non-malicious") r.label = LabelClass::non_malicious;
        else throw Error(path.string() + ": bad label " + (*row)[3]);
        if ((*row)[4] == "train") r.train = true;
        else if ((*row)[4] == "test") r.train = false;
        else throw Error(path.string() + ": bad partition " + (*row)[4]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

ScenarioResult run_synth(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    std::filesystem::create_directories(paths.out);
    const ScenarioResult result = generate_scenario(config.synth, paths.synth_logs());
    record_stage(config, "synth",
                 {{"active_user_days", result.active_user_days},
                  {"event_count", result.event_count},
                  {"malicious_user_days", result.malicious.size()},
                  {"logs_dir", paths.synth_logs().string()}});
    return result;
}

IngestSummary run_ingest(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    std::filesystem::create_directories(paths.out);

    const IngestResult result = ingest_from_config(config);

    IngestSummary summary;
    for (int i = 0; i < 5; ++i) summary.per_file_rows[i] = result.per_file[i].rows;
    summary.total_events = result.total_events;
    summary.active_user_days = result.groups.size();

    const auto truth_path = config.effective_ground_truth();
    if (std::filesystem::exists(truth_path)) {
        const GroundTruth truth = load_ground_truth(truth_path);
        summary.truth_rows = truth.size();
        for (const auto& [key, events] : result.groups)
            if (truth.is_malicious(key.user, key.date)) ++summary.malicious_user_days;
        for (const auto& [user, date] : truth.entries())
            if (!result.groups.count({user, date})) ++summary.unmatched_truth;
    }

    json details = {{"total_events", summary.total_events},
                    {"active_user_days", summary.active_user_days},
                    {"malicious_user_days", summary.malicious_user_days},
                    {"truth_rows", summary.truth_rows},
                    {"unmatched_truth", summary.unmatched_truth},
                    {"per_file",
                     {{"logon", summary.per_file_rows[0]},
                      {"device", summary.per_file_rows[1]},
                      {"file", summary.per_file_rows[2]},
                      {"email", summary.per_file_rows[3]},
                      {"http", summary.per_file_rows[4]}}}};
    {
        std::ofstream out(paths.ingest_summary(), std::ios::binary);
        if (!out) throw IoError("cannot write " + paths.ingest_summary().string());
        out << details.dump(2) << '\n';
    }
    record_stage(config, "ingest", std::move(details));
    return summary;
}

void run_featurize(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    std::filesystem::create_directories(paths.out);

    const IngestResult ingested = ingest_from_config(config);

    AddressMap addresses;
    if (!config.address_map.empty()) addresses = load_address_map(config.address_map);

    std::vector<FeatureRow> rows =
        extract_feature_matrix(ingested.groups, config.office_hours, config.org_domain, addresses);

    const auto truth_path = config.effective_ground_truth();
    std::size_t malicious = 0;
    if (std::filesystem::exists(truth_path)) {
        const GroundTruth truth = load_ground_truth(truth_path);
        for (auto& row : rows) {
            row.malicious = truth.is_malicious(row.user, row.date);
            if (row.malicious) ++malicious;
        }
    }

    write_feature_csv(paths.features_raw(), rows);
    record_stage(config, "featurize",
                 {{"rows", rows.size()},
                  {"malicious", malicious},
                  {"features_raw", paths.features_raw().string()}});
}

void run_prepare(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    const std::vector<FeatureRow> raw = read_feature_csv(paths.features_raw(), FeatureScale::raw);

    GroundTruth truth;
    for (const auto& row : raw)
        if (row.malicious) truth.insert(row.user, row.date);

    LabelJoin joined = label_samples(raw, truth);
    normalize_per_day(joined.samples);

    // normalized matrix export shares the feature csv schema
    std::vector<FeatureRow> norm_rows;
    norm_rows.reserve(joined.samples.size());
    for (const auto& s : joined.samples)
        norm_rows.push_back({s.user, s.date, s.features, s.label == LabelClass::malicious});
    write_feature_csv(paths.features_norm(), norm_rows);

    DatasetSplit split = split_train_test(std::move(joined.samples), config.train_fraction,
                                          config.split_seed);
    const std::vector<LabeledSample> kept =
        undersample_majority(split.train, config.undersample_ratio, config.sample_seed);

    const SplitManifest manifest =
        make_split_manifest(split, kept, config.sample_seed, config.undersample_ratio);
    write_split_manifest(paths.split_manifest(), manifest);

    std::size_t kept_malicious = 0;
    for (const auto& s : kept)
        if (s.label == LabelClass::malicious) ++kept_malicious;

    record_stage(config, "prepare",
                 {{"train", split.train.size()},
                  {"test", split.test.size()},
                  {"train_kept", kept.size()},
                  {"train_kept_malicious", kept_malicious},
                  {"split_manifest", paths.split_manifest().string()}});
}

void run_encode(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    const std::vector<FeatureRow> rows =
        read_feature_csv(paths.features_norm(), FeatureScale::normalized);
    const SplitManifest manifest = read_split_manifest(paths.split_manifest());

    std::map<std::pair<std::string, Date>, bool> partition;  // -> train?
    for (const auto& e : manifest.entries) partition[{e.user, e.date}] = e.train;

    std::filesystem::create_directories(paths.images_dir());
    std::ofstream out(paths.image_manifest(), std::ios::binary);
    if (!out) throw IoError("cannot write " + paths.image_manifest().string());
    out << "path,user,date,label,partition\n";

    std::size_t written = 0;
    for (const auto& row : rows) {
        const auto part = partition.find({row.user, row.date});
        if (part == partition.end())
            throw Error("split manifest misses " + row.user + " " + row.date.to_string());

        LabeledSample sample{row.user, row.date, row.features,
                             row.malicious ? LabelClass::malicious : LabelClass::non_malicious};
        const BehaviorImage image = encode_image(sample);
        const std::string name = image_filename(row.user, row.date, sample.label);
        write_png(paths.images_dir() / name, image);
        ++written;

        std::vector<std::string> fields = {"images/" + name, row.user, row.date.to_string(),
                                           std::string(to_string(sample.label)),
                                           partition_name(part->second)};
        write_csv_row(out, fields);
    }
    if (!out) throw IoError("write failed: " + paths.image_manifest().string());
    out.close();

    record_stage(config, "encode",
                 {{"images", written}, {"image_manifest", paths.image_manifest().string()}});
}

void run_train(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    const std::vector<ManifestRow> manifest = read_image_manifest(paths.image_manifest());
    const SplitManifest split = read_split_manifest(paths.split_manifest());

    std::map<std::pair<std::string, Date>, bool> kept;
    for (const auto& e : split.entries)
        if (e.train) kept[{e.user, e.date}] = e.kept;

    std::vector<BehaviorImage> images;
    std::vector<LabelClass> labels;
    for (const auto& row : manifest) {
        if (!row.train) continue;
        const auto it = kept.find({row.user, row.date});
        if (it == kept.end() || !it->second) continue;  // dropped by undersampling
        BehaviorImage image = read_png(paths.out / row.path);
        image.user = row.user;
        image.date = row.date;
        image.label = row.label;
        labels.push_back(row.label);
        images.push_back(std::move(image));
    }

    Network net = config.init_from.empty() ? Network::build_default(config.init_seed)
                                           : load_checkpoint(config.init_from);
    const std::vector<EpochStats> log = train(net, images, labels, config.train);

    save_checkpoint(net, paths.checkpoint());
    write_training_log(paths.training_log(), log);

    record_stage(config, "train",
                 {{"samples", images.size()},
                  {"epochs", log.size()},
                  {"final_loss", log.empty() ? 0.0 : log.back().loss},
                  {"final_accuracy", log.empty() ? 0.0 : log.back().accuracy},
                  {"checkpoint", paths.checkpoint().string()},
                  {"init_from", config.init_from}});
}

EvalOutcome run_evaluate(const PipelineConfig& config) {
    const RunPaths paths(config.out_dir);
    const std::vector<ManifestRow> manifest = read_image_manifest(paths.image_manifest());

    std::vector<BehaviorImage> images;
    std::vector<LabelClass> truth;
    for (const auto& row : manifest) {
        if (row.train) continue;
        BehaviorImage image = read_png(paths.out / row.path);
        image.user = row.user;
        image.date = row.date;
        image.label = row.label;
        truth.push_back(row.label);
        images.push_back(std::move(image));
    }
    if (images.empty()) throw Error("no test images in " + paths.image_manifest().string());

    const Network net = load_checkpoint(paths.checkpoint());
    const Prediction pred = predict(net, images, config.train.workers);

    EvalOutcome outcome;
    outcome.cm = confusion(pred.labels, truth);
    outcome.metrics = compute_metrics(outcome.cm);

    std::vector<ReportRow> rows = baseline_rows();
    rows.push_back(measured_row("Compact CNN on behavior images", outcome.metrics));

    const std::string hash = config_hash(config);
    write_report_csv(paths.report_csv(), rows, hash);
    {
        std::ofstream out(paths.report_txt(), std::ios::binary);
        if (!out) throw IoError("cannot write " + paths.report_txt().string());
        out << render_report_text(rows, outcome.cm, hash);
    }

    record_stage(config, "evaluate",
                 {{"test_samples", images.size()},
                  {"tp", outcome.cm.tp},
                  {"fp", outcome.cm.fp},
                  {"tn", outcome.cm.tn},
                  {"fn", outcome.cm.fn},
                  {"precision", outcome.metrics.precision ? json(*outcome.metrics.precision) : json()},
                  {"recall", outcome.metrics.recall},
                  {"accuracy", outcome.metrics.accuracy},
                  {"report_csv", paths.report_csv().string()}});
    return outcome;
}

EvalOutcome run_pipeline(const PipelineConfig& config) {
    if (config.logs_dir.empty()) run_synth(config);
    run_ingest(config);
    run_featurize(config);
    run_prepare(config);
    run_encode(config);
    run_train(config);
    return run_evaluate(config);
}

}  // namespace itd
