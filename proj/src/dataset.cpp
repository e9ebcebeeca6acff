#include "itd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "itd/csv.hpp"
#include "itd/rng.hpp"

namespace itd {

void normalize_per_day(std::vector<LabeledSample>& samples) {
    std::map<Date, std::vector<std::size_t>> by_day;
    for (std::size_t i = 0; i < samples.size(); ++i) by_day[samples[i].date].push_back(i);

    for (auto& [date, idx] : by_day) {
        for (int slot = 0; slot < kFeatureCount; ++slot) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const std::size_t i : idx) {
                const double v = samples[i].features[static_cast<std::size_t>(slot)];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double span = hi - lo;
            for (const std::size_t i : idx) {
                double& v = samples[i].features[static_cast<std::size_t>(slot)];
                v = span > 0.0 ? (v - lo) / span : 0.0;
            }
        }
    }
    for (auto& s : samples) s.features.scale = FeatureScale::normalized;
}

LabelJoin label_samples(std::vector<FeatureRow> rows, const GroundTruth& truth) {
    LabelJoin out;
    out.samples.reserve(rows.size());
    std::set<std::pair<std::string, Date>> seen;
    for (auto& row : rows) {
        LabeledSample s;
        const bool malicious = truth.is_malicious(row.user, row.date);
        if (malicious) seen.emplace(row.user, row.date);
        s.label = malicious ? LabelClass::malicious : LabelClass::non_malicious;
        s.user = std::move(row.user);
        s.date = row.date;
        s.features = row.features;
        out.samples.push_back(std::move(s));
    }
    for (const auto& entry : truth.entries())
        if (!seen.count(entry)) ++out.unmatched_truth;
    return out;
}

DatasetSplit split_train_test(std::vector<LabeledSample> samples, double fraction_train,
                              std::uint64_t seed) {
    if (!(fraction_train > 0.0 && fraction_train < 1.0))
        throw Error("fraction_train must be in (0, 1)");

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_class[static_cast<int>(samples[i].label)].push_back(i);

    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < 2)
            throw ClassTooSmall("class \"" + std::string(to_string(static_cast<LabelClass>(c))) +
                                "\" has " + std::to_string(by_class[c].size()) +
                                " samples, need at least 2");

    Rng rng(seed);
    DatasetSplit split;
    split.seed = seed;
    split.fraction_train = fraction_train;

    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        Rng class_rng = rng.fork(static_cast<std::uint64_t>(c));
        class_rng.shuffle(idx);
        const auto train_n =
            static_cast<std::size_t>(std::floor(fraction_train * static_cast<double>(idx.size()) + 0.5));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto& dst = i < train_n ? split.train : split.test;
            dst.push_back(std::move(samples[idx[i]]));
        }
    }
    return split;
}

std::vector<LabeledSample> undersample_majority(std::vector<LabeledSample> train, double ratio,
                                                std::uint64_t seed) {
    if (!(ratio > 0.0)) throw Error("undersample ratio must be positive");

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < train.size(); ++i)
        by_class[static_cast<int>(train[i].label)].push_back(i);

    // ties favor malicious as the minority (the rare class of interest)
    const int minority = by_class[1].size() <= by_class[0].size() ? 1 : 0;
    const auto& minority_idx = by_class[minority];
    const auto& majority_idx = by_class[1 - minority];

    const auto want =
        static_cast<std::size_t>(std::floor(ratio * static_cast<double>(minority_idx.size())));
    const std::size_t keep = std::min(want, majority_idx.size());

    Rng rng(seed);
    const std::vector<std::size_t> picks = rng.sample_indices(majority_idx.size(), keep);

    std::vector<std::size_t> kept;
    kept.reserve(minority_idx.size() + keep);
    kept.insert(kept.end(), minority_idx.begin(), minority_idx.end());
    for (const std::size_t p : picks) kept.push_back(majority_idx[p]);
    rng.shuffle(kept);

    std::vector<LabeledSample> out;
    out.reserve(kept.size());
    for (const std::size_t i : kept) out.push_back(std::move(train[i]));
    return out;
}

const SplitManifestEntry* SplitManifest::find(const std::string& user, Date date) const {
    for (const auto& e : entries)
        if (e.user == user && e.date == date) return &e;
    return nullptr;
}

SplitManifest make_split_manifest(const DatasetSplit& split,
                                  std::span<const LabeledSample> kept_train,
                                  std::uint64_t sample_seed, double undersample_ratio) {
    SplitManifest m;
    m.split_seed = split.seed;
    m.fraction_train = split.fraction_train;
    m.sample_seed = sample_seed;
    m.undersample_ratio = undersample_ratio;

    std::set<std::pair<std::string, Date>> kept;
    for (const auto& s : kept_train) kept.emplace(s.user, s.date);

    m.entries.reserve(split.train.size() + split.test.size());
    for (const auto& s : split.train)
        m.entries.push_back({s.user, s.date, true, kept.count({s.user, s.date}) > 0});
    for (const auto& s : split.test) m.entries.push_back({s.user, s.date, false, true});

    std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) {
        if (a.user != b.user) return a.user < b.user;
        return a.date < b.date;
    });
    return m;
}

void write_split_manifest(const std::filesystem::path& path, const SplitManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    char buf[64];
    out << "# split_seed=" << m.split_seed << '\n';
    std::snprintf(buf, sizeof(buf), "%.6f", m.fraction_train);
    out << "# train_fraction=" << buf << '\n';
    out << "# sample_seed=" << m.sample_seed << '\n';
    std::snprintf(buf, sizeof(buf), "%.6f", m.undersample_ratio);
    out << "# undersample_ratio=" << buf << '\n';
    out << "user,date,partition,kept\n";
    for (const auto& e : m.entries) {
        out << csv_quote(e.user) << ',' << e.date.to_string() << ','
            << (e.train ? "train" : "test") << ',' << (e.kept ? "true" : "false") << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

SplitManifest read_split_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    SplitManifest m;
    std::string line;
    // header comments
    std::streampos data_start = in.tellg();
    while (std::getline(in, line)) {
        if (line.empty()) {
            data_start = in.tellg();
            continue;
        }
        if (line[0] != '#') break;
        const std::size_t eq = line.find('=');
        if (eq != std::string::npos) {
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            try {
                if (key == "split_seed") m.split_seed = std::stoull(value);
                else if (key == "train_fraction") m.fraction_train = std::stod(value);
                else if (key == "sample_seed") m.sample_seed = std::stoull(value);
                else if (key == "undersample_ratio") m.undersample_ratio = std::stod(value);
            } catch (const std::exception&) {
                throw Error(path.string() + ": bad manifest header line \"" + line + "\"");
            }
        }
        data_start = in.tellg();
    }
    in.clear();
    in.seekg(data_start);

    CsvReader reader(in);
    const auto header = reader.next_row();
    if (!header || header->size() != 4 || (*header)[0] != "user")
        throw Error(path.string() + ": bad split manifest header");

    while (auto row = reader.next_row()) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (row->size() != 4) throw Error(path.string() + ": bad split manifest row");
        SplitManifestEntry e;
        e.user = (*row)[0];
        const auto date = Date::try_parse((*row)[1]);
        if (!date) throw Error(path.string() + ": bad date in manifest");
        e.date = *date;
        if ((*row)[2] == "train") e.train = true;
        else if ((*row)[2] == "test") e.train = false;
        else throw Error(path.string() + ": bad partition \"" + (*row)[2] + "\"");
        if ((*row)[3] == "true") e.kept = true;
        else if ((*row)[3] == "false") e.kept = false;
        else throw Error(path.string() + ": bad kept flag \"" + (*row)[3] + "\"");
        m.entries.push_back(std::move(e));
    }
    return m;
}

}  // namespace itd
