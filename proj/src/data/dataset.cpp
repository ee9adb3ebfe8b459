#include "flowsentinel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "flowsentinel/binary_io.hpp"
#include "flowsentinel/error.hpp"

namespace flowsentinel {

std::vector<std::size_t> FlowDataset::class_counts() const {
    std::vector<std::size_t> counts(classes.size(), 0);
    for (auto c : y) ++counts[c];
    return counts;
}

FlowDataset label_records(const FlowTable& table, const LabelVocabulary& vocab, IngestReport& report) {
    FlowDataset data;
    data.mode = vocab.mode;
    data.feature_names = table.feature_names;
    data.classes = vocab.classes;
    std::vector<std::optional<std::uint16_t>> mapped(table.label_names.size());
    for (std::size_t l = 0; l < mapped.size(); ++l) mapped[l] = vocab.lookup(table.label_names[l]);

    data.X.reserve(table.values.size());
    data.y.reserve(table.rows());
    std::size_t unknown = 0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const auto cls = mapped[table.label_ids[i]];
        if (!cls) {
            ++unknown;
            continue;
        }
        const auto rec = table.record(i);
        data.X.insert(data.X.end(), rec.features.begin(), rec.features.end());
        data.y.push_back(*cls);
    }
    report.drop(kDropUnknownLabel, unknown);
    report.rows_retained = data.rows();
    report.class_histogram.clear();
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) report.class_histogram[data.classes[c]] = counts[c];
    return data;
}

FlowDataset take_rows(const FlowDataset& data, std::span<const std::size_t> indices) {
    FlowDataset out;
    out.mode = data.mode;
    out.feature_names = data.feature_names;
    out.classes = data.classes;
    out.X.reserve(indices.size() * data.cols());
    out.y.reserve(indices.size());
    for (auto i : indices) {
        if (i >= data.rows()) fail(ErrorKind::IndexOutOfRange, "row " + std::to_string(i) + " out of range");
        const auto r = data.row(i);
        out.X.insert(out.X.end(), r.begin(), r.end());
        out.y.push_back(data.y[i]);
    }
    return out;
}

FlowDataset select_columns(const FlowDataset& data, const std::vector<std::string>& names) {
    std::vector<std::size_t> source;
    source.reserve(names.size());
    for (const auto& name : names) {
        const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
        if (it == data.feature_names.end()) fail(ErrorKind::MissingColumn, "dataset has no column '" + name + "'");
        source.push_back(static_cast<std::size_t>(it - data.feature_names.begin()));
    }
    FlowDataset out;
    out.mode = data.mode;
    out.feature_names = names;
    out.classes = data.classes;
    out.y = data.y;
    out.X.reserve(data.rows() * names.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto r = data.row(i);
        for (auto s : source) out.X.push_back(r[s]);
    }
    return out;
}

std::vector<std::size_t> subsample_indices(std::span<const std::uint16_t> y, std::size_t num_classes, double fraction,
                                           Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        fail(ErrorKind::InvalidConfig, "subsample fraction must be in (0, 1], got " + std::to_string(fraction));
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] >= num_classes) fail(ErrorKind::IndexOutOfRange, "class index out of range in subsample");
        by_class[y[i]].push_back(i);
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        const std::size_t target = std::max<std::size_t>(1, stratified_train_count(rows.size(), fraction));
        if (target < rows.size()) {
            Rng stream = rng.substream(c);
            stream.shuffle(std::span<std::size_t>(rows));
            rows.resize(target);
        }
        keep.insert(keep.end(), rows.begin(), rows.end());
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

FlowDataset subsample(const FlowDataset& data, double fraction, Rng& rng, IngestReport* report) {
    const auto keep = subsample_indices(data.y, data.num_classes(), fraction, rng);
    FlowDataset out = take_rows(data, keep);
    if (report) {
        report->drop(kDropSubsampled, data.rows() - out.rows());
        report->rows_retained = out.rows();
        const auto counts = out.class_counts();
        report->class_histogram.clear();
        for (std::size_t c = 0; c < counts.size(); ++c) report->class_histogram[out.classes[c]] = counts[c];
    }
    return out;
}

std::size_t stratified_train_count(std::size_t n, double fraction) {
    // The small bias keeps exact halves (e.g. 0.5 * 3) rounding up despite
    // representation error in `fraction`.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5 + 1e-9));
}

SplitIndices stratified_split(std::span<const std::uint16_t> y, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        fail(ErrorKind::InvalidConfig, "split fraction must be in (0, 1), got " + std::to_string(fraction));
    std::size_t num_classes = 0;
    for (auto c : y) num_classes = std::max<std::size_t>(num_classes, c + 1u);
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

    SplitIndices split;
    split.seed = seed;
    split.fraction = fraction;
    const Rng root(seed);
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() < 2)
            fail(ErrorKind::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                                               " row(s); stratified split needs at least 2");
        Rng stream = root.substream(c);
        stream.shuffle(std::span<std::size_t>(rows));
        const std::size_t cut = stratified_train_count(rows.size(), fraction);
        split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
        split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::string_view to_string(Scaling scaling) { return scaling == Scaling::MinMax ? "minmax" : "zscore"; }

Scaling parse_scaling(std::string_view text) {
    if (text == "minmax") return Scaling::MinMax;
    if (text == "zscore") return Scaling::ZScore;
    fail(ErrorKind::InvalidConfig, "unknown normalizer '" + std::string(text) + "' (expected minmax or zscore)");
}

float Normalizer::apply(std::size_t feature, float value) const {
    const FeatureStats& s = stats[feature];
    if (scaling == Scaling::MinMax) {
        const double range = s.max - s.min;
        if (!(range > 0.0)) return 0.0f;
        return static_cast<float>(std::clamp((static_cast<double>(value) - s.min) / range, 0.0, 1.0));
    }
    if (!(s.std > 0.0)) return 0.0f;
    return static_cast<float>((static_cast<double>(value) - s.mean) / s.std);
}

void Normalizer::apply_inplace(std::span<float> rows) const {
    const std::size_t cols = stats.size();
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = apply(i % cols, rows[i]);
}

Normalizer fit_normalizer(const FlowDataset& data, std::span<const std::size_t> rows, Scaling scaling) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(data.rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        rows = all;
    }
    if (rows.empty() || data.cols() == 0) fail(ErrorKind::EmptyInput, "fit_normalizer: no training rows");
    Normalizer norm;
    norm.scaling = scaling;
    norm.stats.resize(data.cols());
    const double n = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < data.cols(); ++c) {
        FeatureStats& s = norm.stats[c];
        s.min = s.max = data.row(rows[0])[c];
        double sum = 0.0;
        for (auto r : rows) {
            const double v = data.row(r)[c];
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / n;
        double sq = 0.0;
        for (auto r : rows) {
            const double d = data.row(r)[c] - s.mean;
            sq += d * d;
        }
        s.std = std::sqrt(sq / n);
    }
    return norm;
}

FlowDataset apply_normalizer(const FlowDataset& data, const Normalizer& normalizer) {
    if (normalizer.stats.size() != data.cols())
        fail(ErrorKind::ShapeMismatch, "normalizer has " + std::to_string(normalizer.stats.size()) +
                                           " features, dataset has " + std::to_string(data.cols()));
    FlowDataset out = data;
    normalizer.apply_inplace(out.X);
    return out;
}

void write_dataset_cache(const std::filesystem::path& path, const FlowDataset& data) {
    ByteWriter w;
    w.raw("FSDS");
    w.u8(kDatasetCacheVersion);
    w.u8(static_cast<std::uint8_t>(data.mode));
    w.u64(data.rows());
    w.u64(data.cols());
    for (const auto& name : data.feature_names) w.str(name);
    w.u16(static_cast<std::uint16_t>(data.classes.size()));
    for (const auto& name : data.classes) w.str(name);
    w.bytes().reserve(w.bytes().size() + data.X.size() * 4 + data.y.size() * 2);
    for (float v : data.X) w.f32(v);
    for (auto c : data.y) w.u16(c);
    write_file_bytes(path, w.bytes());
}

FlowDataset read_dataset_cache(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::FileNotFound, "dataset cache not found: " + path.string());
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes, ErrorKind::CorruptCache);
    if (r.raw(4) != "FSDS") fail(ErrorKind::CorruptCache, path.string() + ": bad magic");
    const auto version = r.u8();
    if (version != kDatasetCacheVersion)
        fail(ErrorKind::CorruptCache, path.string() + ": unsupported version " + std::to_string(version));
    const auto mode_byte = r.u8();
    if (mode_byte > 2) fail(ErrorKind::CorruptCache, path.string() + ": bad mode byte " + std::to_string(mode_byte));
    FlowDataset data;
    data.mode = static_cast<ClassificationMode>(mode_byte);
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols > r.remaining()) fail(ErrorKind::CorruptCache, path.string() + ": column count exceeds file size");
    for (std::uint64_t c = 0; c < cols; ++c) data.feature_names.push_back(r.str());
    const auto n_classes = r.u16();
    if (n_classes != class_count(data.mode))
        fail(ErrorKind::CorruptCache, path.string() + ": class count " + std::to_string(n_classes) + " does not match mode");
    for (std::uint16_t c = 0; c < n_classes; ++c) data.classes.push_back(r.str());
    const std::uint64_t payload = rows * cols * 4 + rows * 2;
    if (rows > r.remaining() || payload != r.remaining())
        fail(ErrorKind::CorruptCache, path.string() + ": payload size does not match header (truncated or trailing bytes)");
    data.X.resize(rows * cols);
    for (auto& v : data.X) {
        v = r.f32();
        if (!std::isfinite(v)) fail(ErrorKind::CorruptCache, path.string() + ": non-finite feature value");
    }
    data.y.resize(rows);
    for (auto& c : data.y) {
        c = r.u16();
        if (c >= n_classes) fail(ErrorKind::CorruptCache, path.string() + ": class index out of range");
    }
    return data;
}

}  // namespace flowsentinel
