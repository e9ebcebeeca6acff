#include "itd/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "itd/csv.hpp"

namespace itd {

ConfusionMatrix confusion(std::span<const LabelClass> predicted,
                          std::span<const LabelClass> actual) {
    if (predicted.size() != actual.size())
        throw LengthMismatch("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                             std::to_string(actual.size()) + " truths");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool pred = predicted[i] == LabelClass::malicious;
        const bool is = actual[i] == LabelClass::malicious;
        if (pred && is) ++cm.tp;
        else if (pred && !is) ++cm.fp;
        else if (!pred && is) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

MetricSet compute_metrics(const ConfusionMatrix& cm) {
    MetricSet m;
    const double total = static_cast<double>(cm.total());
    m.accuracy = total > 0.0 ? static_cast<double>(cm.tp + cm.tn) / total : 0.0;
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    m.recall = cm.tp + cm.fn > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn)
                                 : 0.0;
    const double p = m.precision.value_or(0.0);
    m.f1 = p + m.recall > 0.0 ? 2.0 * p * m.recall / (p + m.recall) : 0.0;
    return m;
}

std::vector<ReportRow> baseline_rows() {
    // Values as published in the comparison we render against.
    return {
        {"BAIT", 51.44, 82.09, std::nullopt, std::nullopt, "reported"},
        {"Modified Isolation Forest", 51.44, 82.09, std::nullopt, std::nullopt, "reported"},
        {"Deep Auto Encoder", 50.42, 90.25, std::nullopt, std::nullopt, "reported"},
        {"LSTM-RNN", 95.12, std::nullopt, std::nullopt, std::nullopt, "reported"},
        {"Image-based CNN (reference)", 99.32, 99.32, std::nullopt, std::nullopt, "reported"},
    };
}

ReportRow measured_row(std::string method, const MetricSet& metrics) {
    ReportRow row;
    row.method = std::move(method);
    if (metrics.precision) row.precision = *metrics.precision * 100.0;
    row.recall = metrics.recall * 100.0;
    row.accuracy = metrics.accuracy * 100.0;
    row.f1 = metrics.f1 * 100.0;
    row.source = "this run";
    return row;
}

namespace {

std::string cell(const std::optional<double>& value) {
    if (!value) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *value);
    return buf;
}

}  // namespace

std::string render_report_text(std::span<const ReportRow> rows, const ConfusionMatrix& cm,
                               const std::string& config_hash) {
    std::ostringstream out;
    out << "Classification report (positive class: malicious)\n";
    out << "==================================================\n\n";

    char line[160];
    std::snprintf(line, sizeof(line), "%-30s %10s %10s %10s %8s  %s\n", "method", "precision",
                  "recall", "accuracy", "f1", "source");
    out << line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%-30s %10s %10s %10s %8s  %s\n", row.method.c_str(),
                      cell(row.precision).c_str(), cell(row.recall).c_str(),
                      cell(row.accuracy).c_str(), cell(row.f1).c_str(), row.source.c_str());
        out << line;
    }
    out << "\nconfusion: tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn << " fn=" << cm.fn
        << " (n=" << cm.total() << ")\n";
    out << "\nnotes:\n";
    out << "  - \"reported\" rows repeat previously published results on other corpora;\n";
    out << "    only \"this run\" rows are measured here.\n";
    out << "  - BAIT and Modified Isolation Forest carry identical published values;\n";
    out << "    both rows are reproduced verbatim from the source table.\n";
    out << "  - a dash marks a value the source did not report; precision is left\n";
    out << "    undefined when no positive predictions were made.\n";
    out << "\nconfig_hash: " << config_hash << "\n";
    return out.str();
}

void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows,
                      const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "method,precision,recall,accuracy,f1,source\n";
    for (const auto& row : rows) {
        std::vector<std::string> fields = {row.method,         cell(row.precision),
                                           cell(row.recall),   cell(row.accuracy),
                                           cell(row.f1),       row.source};
        write_csv_row(out, fields);
    }
    out << "# config_hash=" << config_hash << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    CsvReader reader(in);
    const auto header = reader.next_row();
    if (!header || header->size() != 6 || (*header)[0] != "method")
        throw Error(path.string() + ": bad report header");

    auto parse_cell = [](const std::string& text) -> std::optional<double> {
        if (text == "-") return std::nullopt;
        return std::stod(text);
    };

    std::vector<ReportRow> rows;
    while (auto row = reader.next_row()) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (!(*row)[0].empty() && (*row)[0][0] == '#') continue;  // trailing comment
        if (row->size() != 6) throw Error(path.string() + ": bad report row");
        ReportRow r;
        r.method = (*row)[0];
        r.precision = parse_cell((*row)[1]);
        r.recall = parse_cell((*row)[2]);
        r.accuracy = parse_cell((*row)[3]);
        r.f1 = parse_cell((*row)[4]);
        r.source = (*row)[5];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace itd
