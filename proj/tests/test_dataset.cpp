#include <doctest.h>

#include <algorithm>
#include <set>

#include "itd/dataset.hpp"
#include "test_util.hpp"

using namespace itd;

namespace {

LabeledSample sample(const char* user, Date date, double slot0, bool malicious = false) {
    LabeledSample s;
    s.user = user;
    s.date = date;
    s.features[0] = slot0;
    s.label = malicious ? LabelClass::malicious : LabelClass::non_malicious;
    return s;
}

std::vector<LabeledSample> n_samples(std::size_t non_malicious, std::size_t malicious) {
    std::vector<LabeledSample> out;
    out.reserve(non_malicious + malicious);
    for (std::size_t i = 0; i < non_malicious; ++i)
        out.push_back(sample(("N" + std::to_string(i)).c_str(), {2010, 1, 4}, 0.0, false));
    for (std::size_t i = 0; i < malicious; ++i)
        out.push_back(sample(("M" + std::to_string(i)).c_str(), {2010, 1, 4}, 0.0, true));
    return out;
}

std::multiset<std::string> users_of(const std::vector<LabeledSample>& v) {
    std::multiset<std::string> out;
    for (const auto& s : v) out.insert(s.user);
    return out;
}

}  // namespace

TEST_CASE("per-day min-max forces endpoints") {
    std::vector<LabeledSample> samples = {sample("A", {2010, 1, 4}, 0.0),
                                          sample("B", {2010, 1, 4}, 5.0),
                                          sample("C", {2010, 1, 4}, 10.0)};
    normalize_per_day(samples);
    CHECK(samples[0].features[0] == 0.0);
    CHECK(samples[1].features[0] == 0.5);
    CHECK(samples[2].features[0] == 1.0);
    for (const auto& s : samples) CHECK(s.features.scale == FeatureScale::normalized);
}

TEST_CASE("degenerate day slots map to zero") {
    std::vector<LabeledSample> samples = {sample("A", {2010, 1, 4}, 7.0),
                                          sample("B", {2010, 1, 4}, 7.0)};
    normalize_per_day(samples);
    CHECK(samples[0].features[0] == 0.0);
    CHECK(samples[1].features[0] == 0.0);
}

TEST_CASE("days normalize independently") {
    std::vector<LabeledSample> samples = {
        sample("A", {2010, 1, 4}, 0.0),  sample("B", {2010, 1, 4}, 5.0),
        sample("C", {2010, 1, 4}, 10.0), sample("A", {2010, 1, 5}, 0.0),
        sample("B", {2010, 1, 5}, 5.0),
    };
    normalize_per_day(samples);
    CHECK(samples[1].features[0] == 0.5);  // 5 on a {0..10} day
    CHECK(samples[4].features[0] == 1.0);  // 5 on a {0..5} day
}

TEST_CASE("normalizing an already-normalized day is the identity") {
    std::vector<LabeledSample> samples = {sample("A", {2010, 1, 4}, 0.0),
                                          sample("B", {2010, 1, 4}, 0.25),
                                          sample("C", {2010, 1, 4}, 1.0)};
    normalize_per_day(samples);
    const double before[3] = {samples[0].features[0], samples[1].features[0],
                              samples[2].features[0]};
    normalize_per_day(samples);
    CHECK(samples[0].features[0] == before[0]);
    CHECK(samples[1].features[0] == before[1]);
    CHECK(samples[2].features[0] == before[2]);
}

TEST_CASE("non-degenerate slots attain exactly 0 and 1") {
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 7; ++i)
        samples.push_back(sample(("U" + std::to_string(i)).c_str(), {2010, 1, 4},
                                 3.7 + 0.9 * static_cast<double>(i)));
    normalize_per_day(samples);
    double lo = 2.0, hi = -1.0;
    for (const auto& s : samples) {
        lo = std::min(lo, s.features[0]);
        hi = std::max(hi, s.features[0]);
        CHECK(s.features[0] >= 0.0);
        CHECK(s.features[0] <= 1.0);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
}

TEST_CASE("label join marks truth membership and counts strays") {
    GroundTruth truth;
    truth.insert("A", {2010, 1, 4});
    truth.insert("Z", {2010, 1, 9});  // no matching feature row

    std::vector<FeatureRow> rows(3);
    rows[0].user = "A";
    rows[0].date = {2010, 1, 4};
    rows[1].user = "A";
    rows[1].date = {2010, 1, 5};
    rows[2].user = "B";
    rows[2].date = {2010, 1, 4};

    const LabelJoin join = label_samples(rows, truth);
    REQUIRE(join.samples.size() == 3);
    CHECK(join.samples[0].label == LabelClass::malicious);
    CHECK(join.samples[1].label == LabelClass::non_malicious);
    CHECK(join.samples[2].label == LabelClass::non_malicious);
    CHECK(join.unmatched_truth == 1);

    const LabelJoin empty = label_samples(rows, GroundTruth{});
    for (const auto& s : empty.samples) CHECK(s.label == LabelClass::non_malicious);
}

TEST_CASE("four samples at 50% stratify to one of each class per side") {
    std::vector<LabeledSample> samples = {sample("N1", {2010, 1, 4}, 0, false),
                                          sample("N2", {2010, 1, 4}, 0, false),
                                          sample("M1", {2010, 1, 4}, 0, true),
                                          sample("M2", {2010, 1, 4}, 0, true)};
    const DatasetSplit split = split_train_test(samples, 0.5, 11);
    auto count = [](const std::vector<LabeledSample>& v, LabelClass label) {
        return std::count_if(v.begin(), v.end(),
                             [label](const LabeledSample& s) { return s.label == label; });
    };
    CHECK(split.train.size() == 2);
    CHECK(split.test.size() == 2);
    CHECK(count(split.train, LabelClass::malicious) == 1);
    CHECK(count(split.train, LabelClass::non_malicious) == 1);
    CHECK(count(split.test, LabelClass::malicious) == 1);
    CHECK(count(split.test, LabelClass::non_malicious) == 1);
}

TEST_CASE("split is deterministic, disjoint and conserving") {
    auto samples = n_samples(97, 13);
    const DatasetSplit a = split_train_test(samples, 0.75, 42);
    const DatasetSplit b = split_train_test(samples, 0.75, 42);
    CHECK(users_of(a.train) == users_of(b.train));
    CHECK(users_of(a.test) == users_of(b.test));
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].user == b.train[i].user);

    // different seed, different membership (overwhelmingly likely)
    const DatasetSplit c = split_train_test(samples, 0.75, 43);
    CHECK(users_of(a.train) != users_of(c.train));

    // disjoint union reconstructs the corpus
    std::multiset<std::string> all = users_of(a.train);
    for (const auto& s : a.test) all.insert(s.user);
    CHECK(all == users_of(samples));

    // stratified rounding: round(0.75*13) = 10 malicious in train
    const auto mal_train = std::count_if(a.train.begin(), a.train.end(), [](const auto& s) {
        return s.label == LabelClass::malicious;
    });
    CHECK(mal_train == 10);
    CHECK(a.train.size() == 73 + 10);  // round(0.75*97)=73
}

TEST_CASE("split rejects undersized classes and bad fractions") {
    CHECK_THROWS_AS(split_train_test(n_samples(5, 1), 0.75, 1), ClassTooSmall);
    CHECK_THROWS_AS(split_train_test(n_samples(1, 5), 0.75, 1), ClassTooSmall);
    CHECK_THROWS_AS(split_train_test(n_samples(5, 5), 0.0, 1), Error);
    CHECK_THROWS_AS(split_train_test(n_samples(5, 5), 1.0, 1), Error);
}

TEST_CASE("undersampling keeps the minority and floor(ratio*minority) majority") {
    // minority 2, majority 10, ratio 3 -> keep 6 majority, total 8
    auto train = n_samples(10, 2);
    const auto out = undersample_majority(train, 3.0, 5);
    CHECK(out.size() == 8);
    const auto malicious = std::count_if(out.begin(), out.end(), [](const auto& s) {
        return s.label == LabelClass::malicious;
    });
    CHECK(malicious == 2);
}

TEST_CASE("undersampling caps at the available majority") {
    auto train = n_samples(10, 2);
    const auto out = undersample_majority(train, 150.0, 5);
    CHECK(out.size() == 12);
    CHECK(users_of(out) == users_of(train));  // composition unchanged, order shuffled
}

TEST_CASE("undersampling is deterministic and uniform without replacement") {
    auto train = n_samples(50, 3);
    const auto a = undersample_majority(train, 4.0, 9);
    const auto b = undersample_majority(train, 4.0, 9);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 3 + 12);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].user == b[i].user);

    // no duplicates: drawing is without replacement
    std::set<std::string> unique;
    for (const auto& s : a) unique.insert(s.user);
    CHECK(unique.size() == a.size());
}

TEST_CASE("paper-scale sampling arithmetic") {
    // minority 1026 at ratio 150 against 246812 majority keeps exactly 153900
    const auto want = static_cast<std::size_t>(std::floor(150.0 * 1026.0));
    CHECK(want == 153900);
    CHECK(std::min(want, std::size_t{246812}) == 153900);
    CHECK(1026 + 153900 == 154926);
}

TEST_CASE("split manifest round-trips") {
    TempDir dir("manifest");
    auto samples = n_samples(8, 2);
    DatasetSplit split = split_train_test(samples, 0.75, 21);
    const auto kept = undersample_majority(split.train, 2.0, 22);
    const SplitManifest manifest = make_split_manifest(split, kept, 22, 2.0);

    const auto path = dir.path / "split.txt";
    write_split_manifest(path, manifest);
    const SplitManifest back = read_split_manifest(path);

    CHECK(back.split_seed == 21);
    CHECK(back.sample_seed == 22);
    CHECK(back.fraction_train == doctest::Approx(0.75));
    CHECK(back.undersample_ratio == doctest::Approx(2.0));
    REQUIRE(back.entries.size() == manifest.entries.size());
    for (std::size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].user == manifest.entries[i].user);
        CHECK(back.entries[i].date == manifest.entries[i].date);
        CHECK(back.entries[i].train == manifest.entries[i].train);
        CHECK(back.entries[i].kept == manifest.entries[i].kept);
    }

    // kept flags: all test rows kept, dropped train rows flagged false
    std::size_t dropped = 0;
    for (const auto& e : back.entries) {
        if (!e.train) CHECK(e.kept);
        if (e.train && !e.kept) ++dropped;
    }
    CHECK(dropped == split.train.size() - kept.size());
}
