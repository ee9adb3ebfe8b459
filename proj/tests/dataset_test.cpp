#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "flowsentinel/binary_io.hpp"
#include "flowsentinel/csv.hpp"
#include "flowsentinel/dataset.hpp"
#include "flowsentinel/error.hpp"
#include "flowsentinel/fixture.hpp"
#include "flowsentinel/labels.hpp"

using namespace flowsentinel;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("fs_dataset_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no flowsentinel::Error thrown";
    return ErrorKind::IoError;
}

std::vector<std::uint16_t> labels_from_counts(const std::vector<std::size_t>& counts) {
    std::vector<std::uint16_t> y;
    for (std::size_t c = 0; c < counts.size(); ++c) y.insert(y.end(), counts[c], static_cast<std::uint16_t>(c));
    return y;
}

std::vector<std::string> all_raw_labels() {
    std::vector<std::string> raw;
    for (const auto& [label, family] : default_label_families().entries) raw.push_back(label);
    return raw;
}

FlowDataset small_dataset() {
    FlowDataset d;
    d.mode = ClassificationMode::Binary;
    d.feature_names = {"a", "b", "c"};
    d.classes = {"Benign", "Attack"};
    d.X = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    d.y = {0, 1, 1, 0};
    return d;
}

}  // namespace

TEST(Csv, SplitHandlesQuotesAndWhitespace) {
    EXPECT_EQ(split_csv_line("a,b,c"), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(split_csv_line(" a , b ,c"), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(split_csv_line("\"x,y\",\"he said \"\"hi\"\"\",z"), (std::vector<std::string>{"x,y", "he said \"hi\"", "z"}));
    EXPECT_EQ(split_csv_line("a,,"), (std::vector<std::string>{"a", "", ""}));
    EXPECT_EQ(split_csv_line("\" padded \""), (std::vector<std::string>{" padded "}));
}

TEST(Csv, ThreeRowFixtureRoundTrips) {
    TempDir dir;
    const auto p = dir.file("a.csv", "x,y,label\n1.5,-2,A\n0.25,1e3,B\n7,0,A\n");
    const auto [table, report] = load_csv({p});
    ASSERT_EQ(table.rows(), 3u);
    EXPECT_EQ(table.feature_names, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(table.values, (std::vector<float>{1.5f, -2.0f, 0.25f, 1000.0f, 7.0f, 0.0f}));
    EXPECT_EQ(table.label(0), "A");
    EXPECT_EQ(table.label(1), "B");
    EXPECT_EQ(table.label(2), "A");
    EXPECT_EQ(report.rows_read, 3u);
    EXPECT_EQ(report.total_dropped(), 0u);
}

TEST(Csv, HeaderOnlyFileGivesEmptyNote) {
    TempDir dir;
    const auto [table, report] = load_csv({dir.file("a.csv", "x,y,label\n")});
    EXPECT_EQ(table.rows(), 0u);
    ASSERT_EQ(report.notes.size(), 1u);
    EXPECT_NE(report.notes[0].find("empty"), std::string::npos);
}

TEST(Csv, NonFiniteAndUnparseableRowsAreCounted) {
    TempDir dir;
    const auto p = dir.file("a.csv",
                            "x,y,label\n1,2,A\nNaN,2,A\n1,inf,B\n1,-Infinity,B\nabc,2,A\n1,2\n1,2,\n1e39,0,A\n3,4,B\n");
    const auto [table, report] = load_csv({p});
    EXPECT_EQ(table.rows(), 2u);
    EXPECT_EQ(report.rows_read, 9u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropNonFinite)), 4u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropUnparseable)), 1u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropMalformedRow)), 1u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropEmptyLabel)), 1u);
    EXPECT_EQ(report.rows_retained + report.total_dropped(), report.rows_read);
    for (float v : table.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Csv, ColumnsMatchedByNameAcrossFiles) {
    TempDir dir;
    const auto a = dir.file("a.csv", "x,y,label\n1,2,A\n");
    const auto b = dir.file("b.csv", "label,y,x\nB,20,10\n");
    CsvOptions opt;
    opt.schema = {"x", "y"};
    const auto [table, report] = load_csv({b, a}, opt);
    ASSERT_EQ(table.rows(), 2u);
    EXPECT_EQ(table.values, (std::vector<float>{1, 2, 10, 20}));  // sorted file order
    EXPECT_EQ(table.label(1), "B");
    EXPECT_EQ(report.files.size(), 2u);
}

TEST(Csv, Errors) {
    TempDir dir;
    const auto p = dir.file("a.csv", "x,label\n1,A\n");
    CsvOptions opt;
    opt.schema = {"x", "Rate"};
    try {
        (void)load_csv({p}, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingColumn);
        EXPECT_NE(std::string(e.what()).find("Rate"), std::string::npos);
    }
    EXPECT_EQ(kind_of([&] { (void)load_csv({dir.path() / "missing.csv"}); }), ErrorKind::FileNotFound);
    EXPECT_EQ(kind_of([&] { (void)load_csv({}); }), ErrorKind::EmptyInput);
    EXPECT_EQ(kind_of([&] { (void)load_csv({dir.file("e.csv", "")}); }), ErrorKind::EmptyInput);
    EXPECT_EQ(kind_of([&] { (void)load_csv({dir.file("n.csv", "x,y\n1,2\n")}); }), ErrorKind::MissingColumn);
}

TEST(Labels, BinaryRule) {
    const auto vocab = build_vocabulary({"BenignTraffic", "DDoS-UDP_Flood", "DoS-SYN_Flood"}, ClassificationMode::Binary,
                                        default_label_families(), LabelPolicy::Strict);
    EXPECT_EQ(vocab.classes, (std::vector<std::string>{"Benign", "Attack"}));
    EXPECT_EQ(vocab.lookup("BenignTraffic"), 0);
    EXPECT_EQ(vocab.lookup("DDoS-UDP_Flood"), 1);
    EXPECT_EQ(vocab.lookup("Mirai-udpplain"), 1);
    EXPECT_EQ(vocab.lookup("DoS-SYN_Flood"), 1);
}

TEST(Labels, RegimeCardinalities) {
    const auto raw = all_raw_labels();
    EXPECT_EQ(raw.size(), 34u);
    const auto& fam = default_label_families();
    EXPECT_EQ(build_vocabulary(raw, ClassificationMode::Binary, fam, LabelPolicy::Strict).size(), 2u);
    const auto grouped = build_vocabulary(raw, ClassificationMode::Grouped, fam, LabelPolicy::Strict);
    EXPECT_EQ(grouped.size(), 8u);
    EXPECT_EQ(grouped.classes, (std::vector<std::string>{"Benign", "BruteForce", "DDoS", "DoS", "Mirai", "Recon",
                                                          "Spoofing", "Web-based"}));
    const auto multi = build_vocabulary(raw, ClassificationMode::Multi, fam, LabelPolicy::Strict);
    EXPECT_EQ(multi.size(), 34u);
    EXPECT_TRUE(std::is_sorted(multi.classes.begin(), multi.classes.end()));
    for (std::size_t c = 0; c < multi.size(); ++c) EXPECT_EQ(multi.lookup(multi.classes[c]), c);
}

TEST(Labels, GroupedFamiliesFollowLabelPrefixes) {
    const auto raw = all_raw_labels();
    const auto grouped = build_vocabulary(raw, ClassificationMode::Grouped, default_label_families(), LabelPolicy::Strict);
    auto cls = [&](std::string_view raw_label) { return grouped.classes[*grouped.lookup(raw_label)]; };
    for (const auto& r : raw) {
        if (r.starts_with("DDoS-")) EXPECT_EQ(cls(r), "DDoS") << r;
        if (r.starts_with("DoS-")) EXPECT_EQ(cls(r), "DoS") << r;
        if (r.starts_with("Mirai-")) EXPECT_EQ(cls(r), "Mirai") << r;
        if (r.starts_with("Recon-")) EXPECT_EQ(cls(r), "Recon") << r;
    }
    EXPECT_EQ(cls("BenignTraffic"), "Benign");
    EXPECT_EQ(cls("DictionaryBruteForce"), "BruteForce");
    EXPECT_EQ(cls("SqlInjection"), "Web-based");
    EXPECT_EQ(cls("MITM-ArpSpoofing"), "Spoofing");
}

TEST(Labels, StrictRejectsUnknownLenientDrops) {
    const auto& fam = default_label_families();
    EXPECT_EQ(kind_of([&] { (void)build_vocabulary({"BenignTraffic", "Zeroday"}, ClassificationMode::Multi, fam, LabelPolicy::Strict); }),
              ErrorKind::UnknownLabel);
    EXPECT_EQ(kind_of([&] { (void)build_vocabulary({}, ClassificationMode::Multi, fam, LabelPolicy::Strict); }),
              ErrorKind::EmptyInput);

    FlowTable table;
    table.feature_names = {"x"};
    table.label_names = {"BenignTraffic", "Zeroday"};
    table.values = {1, 2, 3};
    table.label_ids = {0, 1, 0};
    const auto vocab = build_vocabulary(table.label_names, ClassificationMode::Multi, fam, LabelPolicy::Lenient);
    IngestReport report;
    report.rows_read = 3;
    const auto data = label_records(table, vocab, report);
    EXPECT_EQ(data.rows(), 2u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropUnknownLabel)), 1u);
    EXPECT_EQ(report.class_histogram.at("BenignTraffic"), 2u);
    EXPECT_EQ(report.rows_retained + report.total_dropped(), report.rows_read);
}

TEST(Labels, ShippedFamilyFileMatchesBuiltIn) {
    const auto loaded = load_label_families(fs::path(FLOWSENTINEL_DATA_DIR) / "label_families.csv");
    EXPECT_EQ(loaded.entries, default_label_families().entries);
}

TEST(Labels, FamilyFileErrors) {
    TempDir dir;
    EXPECT_EQ(kind_of([&] { (void)load_label_families(dir.path() / "nope.csv"); }), ErrorKind::FileNotFound);
    EXPECT_EQ(kind_of([&] { (void)load_label_families(dir.file("d.csv", "A,x\nA,y\n")); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([&] { (void)load_label_families(dir.file("b.csv", "A,x,z\n")); }), ErrorKind::InvalidConfig);
}

TEST(Subsample, FractionOneIsIdentity) {
    const auto y = labels_from_counts({5, 3, 0, 7});
    Rng rng(1);
    const auto keep = subsample_indices(y, 4, 1.0, rng);
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EXPECT_EQ(keep, all);
}

TEST(Subsample, ProportionAndFloor) {
    const auto y = labels_from_counts({1000, 3, 1, 25});
    Rng rng(9);
    const auto keep = subsample_indices(y, 4, 0.1, rng);
    std::vector<std::size_t> counts(4, 0);
    for (auto i : keep) ++counts[y[i]];
    EXPECT_EQ(counts[0], 100u);
    EXPECT_EQ(counts[1], 1u);  // round(0.3) = 0, floor of 1
    EXPECT_EQ(counts[2], 1u);
    EXPECT_EQ(counts[3], 3u);  // round(2.5) = 3
    EXPECT_TRUE(std::is_sorted(keep.begin(), keep.end()));
    EXPECT_EQ(std::set<std::size_t>(keep.begin(), keep.end()).size(), keep.size());
}

TEST(Subsample, DeterministicUnderSeed) {
    const auto y = labels_from_counts({400, 300, 50});
    Rng a(77), b(77), c(78);
    const auto ka = subsample_indices(y, 3, 0.3, a);
    EXPECT_EQ(ka, subsample_indices(y, 3, 0.3, b));
    EXPECT_NE(ka, subsample_indices(y, 3, 0.3, c));
}

TEST(Subsample, RejectsBadFraction) {
    const auto y = labels_from_counts({4});
    Rng rng(1);
    EXPECT_EQ(kind_of([&] { (void)subsample_indices(y, 1, 0.0, rng); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([&] { (void)subsample_indices(y, 1, 1.5, rng); }), ErrorKind::InvalidConfig);
}

TEST(Subsample, ReportAccountsForRemovedRows) {
    FlowDataset d;
    d.feature_names = {"x"};
    d.classes = {"Benign", "Attack"};
    d.y = labels_from_counts({50, 30});
    d.X.assign(80, 1.0f);
    IngestReport report;
    report.rows_read = 80;
    Rng rng(3);
    const auto out = subsample(d, 0.1, rng, &report);
    EXPECT_EQ(out.rows(), 8u);
    EXPECT_EQ(report.rows_dropped.at(std::string(kDropSubsampled)), 72u);
    EXPECT_EQ(report.rows_retained + report.total_dropped(), report.rows_read);
}

TEST(Split, ProportionsForced) {
    const auto y = labels_from_counts({900, 100});
    const auto s = stratified_split(y, 0.8, 5);
    EXPECT_EQ(s.train.size(), 800u);
    EXPECT_EQ(s.test.size(), 200u);
    std::size_t train0 = 0;
    for (auto i : s.train) train0 += y[i] == 0;
    EXPECT_EQ(train0, 720u);
}

TEST(Split, SingleClassIsPlainCut) {
    const std::vector<std::uint16_t> y(37, 0);
    const auto s = stratified_split(y, 0.8, 1);
    EXPECT_EQ(s.train.size(), 30u);  // round(29.6)
    EXPECT_EQ(s.test.size(), 7u);
}

TEST(Split, FullScaleBinaryRowCounts) {
    // 4,668,653 rows in one stratum: 0.8 * n = 3,734,922.4
    EXPECT_EQ(stratified_train_count(4'668'653, 0.8), 3'734'922u);
    const std::vector<std::uint16_t> y(4'668'653, 0);
    const auto s = stratified_split(y, 0.8, 42);
    EXPECT_EQ(s.train.size(), 3'734'922u);
    EXPECT_EQ(s.test.size(), 933'731u);
}

TEST(Split, RoundHalfUpOnTrainSide) {
    EXPECT_EQ(stratified_train_count(5, 0.5), 3u);
    EXPECT_EQ(stratified_train_count(3, 0.5), 2u);
    EXPECT_EQ(stratified_train_count(2, 0.8), 2u);
    EXPECT_EQ(stratified_train_count(10, 0.85), 9u);
}

TEST(Split, StratificationPropertyOver100Distributions) {
    Rng gen(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + gen.below(34);
        std::vector<std::size_t> counts(k);
        for (auto& c : counts) c = 2 + gen.below(gen.uniform() < 0.3 ? 5 : 400);
        const auto y = labels_from_counts(counts);
        const auto s = stratified_split(y, 0.8, gen.next_u64());

        std::vector<std::size_t> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all.size(), y.size());
        for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i) << "overlap or gap, trial " << trial;

        std::vector<std::size_t> train_c(k, 0);
        for (auto i : s.train) ++train_c[y[i]];
        for (std::size_t c = 0; c < k; ++c) {
            const double n = static_cast<double>(counts[c]);
            const double frac = static_cast<double>(train_c[c]) / n;
            EXPECT_GE(frac, 0.8 - 1.0 / n) << "trial " << trial << " class " << c;
            EXPECT_LE(frac, 0.8 + 1.0 / n) << "trial " << trial << " class " << c;
        }
    }
}

TEST(Split, DeterministicAndSeedSensitive) {
    const auto y = labels_from_counts({60, 40, 20});
    EXPECT_EQ(stratified_split(y, 0.8, 3).train, stratified_split(y, 0.8, 3).train);
    EXPECT_NE(stratified_split(y, 0.8, 3).train, stratified_split(y, 0.8, 4).train);
}

TEST(Split, ClassTooSmall) {
    const auto y = labels_from_counts({10, 1, 5});
    EXPECT_EQ(kind_of([&] { (void)stratified_split(y, 0.8, 1); }), ErrorKind::ClassTooSmall);
    // absent classes are fine
    EXPECT_NO_THROW((void)stratified_split(labels_from_counts({10, 0, 5}), 0.8, 1));
}

TEST(Normalizer, MinMaxExamples) {
    FlowDataset d;
    d.feature_names = {"a", "const"};
    d.classes = {"Benign", "Attack"};
    d.X = {0, 3, 10, 3, 4, 3};
    d.y = {0, 1, 0};
    const auto norm = fit_normalizer(d);
    EXPECT_FLOAT_EQ(norm.apply(0, 5.0f), 0.5f);
    EXPECT_FLOAT_EQ(norm.apply(0, 10.0f), 1.0f);
    EXPECT_FLOAT_EQ(norm.apply(1, 3.0f), 0.0f);
    EXPECT_FLOAT_EQ(norm.apply(1, 99.0f), 0.0f);
    const auto out = apply_normalizer(d, norm);
    EXPECT_EQ(out.X, (std::vector<float>{0.0f, 0.0f, 1.0f, 0.0f, 0.4f, 0.0f}));
}

TEST(Normalizer, FitsOnTrainRowsOnly) {
    const auto d = small_dataset();
    const std::vector<std::size_t> train{0, 1};
    const auto norm = fit_normalizer(d, train);
    EXPECT_DOUBLE_EQ(norm.stats[0].min, 0.0);
    EXPECT_DOUBLE_EQ(norm.stats[0].max, 3.0);
    EXPECT_DOUBLE_EQ(norm.stats[0].mean, 1.5);
    EXPECT_DOUBLE_EQ(norm.stats[0].std, 1.5);
}

TEST(Normalizer, TestValuesClippedToUnitInterval) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        FlowDataset d;
        d.feature_names = {"a", "b", "c", "d"};
        d.classes = {"Benign", "Attack"};
        for (int i = 0; i < 40; ++i) {
            for (int c = 0; c < 4; ++c) d.X.push_back(static_cast<float>(rng.uniform(-100, 100) * (c + 1)));
            d.y.push_back(static_cast<std::uint16_t>(i % 2));
        }
        const auto split = stratified_split(d.y, 0.8, rng.next_u64());
        const auto norm = fit_normalizer(d, split.train);
        const auto out = apply_normalizer(take_rows(d, split.test), norm);
        for (float v : out.X) {
            EXPECT_GE(v, 0.0f);
            EXPECT_LE(v, 1.0f);
        }
    }
}

TEST(Normalizer, ZScoreAndErrors) {
    const auto d = small_dataset();
    const auto norm = fit_normalizer(d, {}, Scaling::ZScore);
    // column 0: 0,3,6,9 -> mean 4.5, population std sqrt(11.25)
    EXPECT_NEAR(norm.apply(0, 4.5f), 0.0f, 1e-7);
    EXPECT_NEAR(norm.apply(0, 9.0f), 4.5 / std::sqrt(11.25), 1e-6);
    FlowDataset empty;
    empty.feature_names = {"a"};
    EXPECT_EQ(kind_of([&] { (void)fit_normalizer(empty); }), ErrorKind::EmptyInput);
    EXPECT_EQ(parse_scaling("zscore"), Scaling::ZScore);
    EXPECT_EQ(kind_of([] { (void)parse_scaling("robust"); }), ErrorKind::InvalidConfig);
}

TEST(Dataset, SelectColumns) {
    const auto d = small_dataset();
    const auto s = select_columns(d, {"c", "a"});
    EXPECT_EQ(s.feature_names, (std::vector<std::string>{"c", "a"}));
    EXPECT_EQ(s.X, (std::vector<float>{2, 0, 5, 3, 8, 6, 11, 9}));
    EXPECT_EQ(s.y, d.y);
    EXPECT_EQ(kind_of([&] { (void)select_columns(d, {"zz"}); }), ErrorKind::MissingColumn);
}

TEST(Cache, RoundTrip) {
    TempDir dir;
    auto d = small_dataset();
    d.mode = ClassificationMode::Binary;
    const auto p = dir.path() / "sub" / "d.fsds";
    write_dataset_cache(p, d);
    const auto back = read_dataset_cache(p);
    EXPECT_EQ(back.mode, d.mode);
    EXPECT_EQ(back.feature_names, d.feature_names);
    EXPECT_EQ(back.classes, d.classes);
    EXPECT_EQ(back.X, d.X);
    EXPECT_EQ(back.y, d.y);
}

TEST(Cache, LayoutIsLittleEndian) {
    TempDir dir;
    FlowDataset d;
    d.mode = ClassificationMode::Binary;
    d.feature_names = {"f"};
    d.classes = {"Benign", "Attack"};
    d.X = {1.0f};
    d.y = {1};
    const auto p = dir.path() / "d.fsds";
    write_dataset_cache(p, d);
    const auto bytes = read_file_bytes(p);
    ASSERT_GE(bytes.size(), 22u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FSDS");
    EXPECT_EQ(bytes[4], 1);  // version
    EXPECT_EQ(bytes[5], 0);  // mode
    EXPECT_EQ(bytes[6], 1);  // rows, low byte
    EXPECT_EQ(bytes[14], 1);  // cols, low byte
    // tail: f32 1.0 = 00 00 80 3F, then u16 1
    const std::size_t n = bytes.size();
    EXPECT_EQ(bytes[n - 6], 0x00);
    EXPECT_EQ(bytes[n - 4], 0x80);
    EXPECT_EQ(bytes[n - 3], 0x3F);
    EXPECT_EQ(bytes[n - 2], 0x01);
    EXPECT_EQ(bytes[n - 1], 0x00);
}

TEST(Cache, RejectsCorruption) {
    TempDir dir;
    const auto good_path = dir.path() / "good.fsds";
    write_dataset_cache(good_path, small_dataset());
    const auto good = read_file_bytes(good_path);
    auto expect_corrupt = [&](std::vector<std::uint8_t> bytes, const char* what) {
        const auto p = dir.path() / "bad.fsds";
        write_file_bytes(p, bytes);
        EXPECT_EQ(kind_of([&] { (void)read_dataset_cache(p); }), ErrorKind::CorruptCache) << what;
    };
    auto b = good;
    b[0] = 'X';
    expect_corrupt(b, "magic");
    b = good;
    b[4] = 9;
    expect_corrupt(b, "version");
    b = good;
    b[5] = 7;
    expect_corrupt(b, "mode");
    b = good;
    b.resize(b.size() - 1);
    expect_corrupt(b, "truncated");
    b = good;
    b.push_back(0);
    expect_corrupt(b, "trailing");
    b = good;
    b[b.size() - 2] = 5;
    expect_corrupt(b, "class index");
    b = good;
    const std::size_t first_value = b.size() - 4 * 2 - 12 * 4;
    b[first_value + 2] = 0xC0;
    b[first_value + 3] = 0x7F;  // NaN
    expect_corrupt(b, "non-finite");
    expect_corrupt({}, "empty");
    EXPECT_EQ(kind_of([&] { (void)read_dataset_cache(dir.path() / "none.fsds"); }), ErrorKind::FileNotFound);
}

TEST(Fixture, ClassSizesFollowSkewWithFloor) {
    const auto sizes = fixture_class_sizes({});
    ASSERT_EQ(sizes.size(), 34u);
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 5000u);
    EXPECT_GE(*std::min_element(sizes.begin(), sizes.end()), 40u);
    // DDoS-ICMP_Flood is the largest class
    EXPECT_EQ(std::max_element(sizes.begin(), sizes.end()) - sizes.begin(), 3);
    FixtureOptions tiny;
    tiny.rows = 100;
    EXPECT_EQ(kind_of([&] { (void)fixture_class_sizes(tiny); }), ErrorKind::InvalidConfig);
}

TEST(Fixture, DeterministicUnderSeed) {
    FixtureOptions opt;
    opt.rows = 1000;
    opt.min_per_class = 10;
    const auto a = make_fixture(opt);
    const auto b = make_fixture(opt);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.label_ids, b.label_ids);
    opt.seed += 1;
    EXPECT_NE(make_fixture(opt).values, a.values);
    EXPECT_EQ(a.feature_names, ciciot2023_feature_columns());
}

TEST(Fixture, MalformedRowsAreDropped) {
    TempDir dir;
    FixtureOptions opt;
    opt.rows = 102;
    opt.min_per_class = 3;
    auto table = make_fixture(opt);
    table.label_ids.resize(100);
    table.values.resize(100 * table.cols());
    const auto p = dir.path() / "fixture.csv";
    write_fixture_csv(table, p, 5);
    CsvOptions csv;
    csv.schema = ciciot2023_feature_columns();
    const auto [loaded, report] = load_csv({p}, csv);
    EXPECT_EQ(report.rows_read, 100u);
    EXPECT_EQ(loaded.rows(), 95u);
    EXPECT_EQ(report.total_dropped(), 5u);

    const auto vocab = build_vocabulary(loaded.label_names, ClassificationMode::Multi, default_label_families(),
                                        LabelPolicy::Strict);
    IngestReport r2 = report;
    const auto data = label_records(loaded, vocab, r2);
    const auto cache = dir.path() / "fixture.fsds";
    write_dataset_cache(cache, data);
    EXPECT_EQ(read_dataset_cache(cache).rows(), 95u);
}

TEST(Fixture, CsvValuesRoundTripExactly) {
    TempDir dir;
    FixtureOptions opt;
    opt.rows = 340;
    opt.min_per_class = 10;
    const auto table = make_fixture(opt);
    const auto p = dir.path() / "f.csv";
    write_fixture_csv(table, p);
    const auto [loaded, report] = load_csv({p});
    EXPECT_EQ(loaded.values, table.values);
    for (std::size_t i = 0; i < table.rows(); ++i) ASSERT_EQ(loaded.label(i), table.label(i));
}

TEST(Fixture, CanonicalListMatchesShippedFile) {
    EXPECT_EQ(load_feature_list(fs::path(FLOWSENTINEL_DATA_DIR) / "canonical_top20.txt"), canonical_top20());
    EXPECT_EQ(canonical_top20().size(), 20u);
    for (const auto& name : canonical_top20())
        EXPECT_NE(std::find(ciciot2023_feature_columns().begin(), ciciot2023_feature_columns().end(), name),
                  ciciot2023_feature_columns().end());
}
