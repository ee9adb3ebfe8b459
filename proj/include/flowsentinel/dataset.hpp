#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowsentinel/csv.hpp"
#include "flowsentinel/labels.hpp"
#include "flowsentinel/rng.hpp"

namespace flowsentinel {

/// Feature matrix + class indices for one label regime. Immutable once built.
struct FlowDataset {
    ClassificationMode mode = ClassificationMode::Binary;
    std::vector<std::string> feature_names;
    std::vector<float> X;  // row-major [rows x cols]
    std::vector<std::uint16_t> y;
    std::vector<std::string> classes;

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t cols() const noexcept { return feature_names.size(); }
    std::span<const float> row(std::size_t i) const { return std::span<const float>(X).subspan(i * cols(), cols()); }
    std::size_t num_classes() const noexcept { return classes.size(); }
    /// Row count per class index.
    std::vector<std::size_t> class_counts() const;
};

/// Maps raw labels through `vocab`. Rows whose label has no class are
/// dropped as "unknown_label"; the class histogram is filled.
FlowDataset label_records(const FlowTable& table, const LabelVocabulary& vocab, IngestReport& report);

/// Rows with the given indices, in the given order.
FlowDataset take_rows(const FlowDataset& data, std::span<const std::size_t> indices);

/// Keeps only `names`, in that order. Throws MissingColumn.
FlowDataset select_columns(const FlowDataset& data, const std::vector<std::string>& names);

/// Per-class sampling without replacement: each non-empty class keeps
/// max(1, round(fraction * n_c)) rows. Returns ascending row indices.
/// Requires 0 < fraction <= 1 (InvalidConfig otherwise).
std::vector<std::size_t> subsample_indices(std::span<const std::uint16_t> y, std::size_t num_classes,
                                           double fraction, Rng& rng);

/// subsample_indices applied to a dataset; counts removed rows as
/// "subsampled" in the report.
FlowDataset subsample(const FlowDataset& data, double fraction, Rng& rng, IngestReport* report = nullptr);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    double fraction = 0.8;
};

/// Per class: seeded shuffle, then the first round-half-up(fraction * n_c)
/// rows go to train. Both lists are returned in ascending order.
/// Throws ClassTooSmall if a present class has fewer than 2 rows.
SplitIndices stratified_split(std::span<const std::uint16_t> y, double fraction, std::uint64_t seed);

/// round-half-up(fraction * n), the per-class train count.
std::size_t stratified_train_count(std::size_t n, double fraction);

enum class Scaling : std::uint8_t { MinMax = 0, ZScore = 1 };

std::string_view to_string(Scaling scaling);
Scaling parse_scaling(std::string_view text);

struct FeatureStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/// Train-fitted feature scaler.
/// MinMax: (x - min) / (max - min), clipped to [0, 1]; constant features -> 0.
/// ZScore: (x - mean) / std; constant features -> 0.
struct Normalizer {
    Scaling scaling = Scaling::MinMax;
    std::vector<FeatureStats> stats;

    float apply(std::size_t feature, float value) const;
    void apply_inplace(std::span<float> rows) const;
};

/// Fits on the rows listed in `rows` (all rows when empty). Throws EmptyInput.
Normalizer fit_normalizer(const FlowDataset& data, std::span<const std::size_t> rows = {},
                          Scaling scaling = Scaling::MinMax);
FlowDataset apply_normalizer(const FlowDataset& data, const Normalizer& normalizer);

// ---- dataset cache (FSDS) ----------------------------------------------
//
//   "FSDS" | u8 version (1) | u8 mode | u64 rows | u64 cols
//   | cols x (u32 len, UTF-8 name)
//   | u16 class count | class count x (u32 len, UTF-8 name)
//   | rows*cols f32 row-major | rows x u16 class index
//
// All integers and floats little-endian.

inline constexpr std::uint8_t kDatasetCacheVersion = 1;

void write_dataset_cache(const std::filesystem::path& path, const FlowDataset& data);
/// Throws FileNotFound, CorruptCache (bad magic/version/mode, truncation,
/// trailing bytes, out-of-range class index, non-finite values).
FlowDataset read_dataset_cache(const std::filesystem::path& path);

}  // namespace flowsentinel
