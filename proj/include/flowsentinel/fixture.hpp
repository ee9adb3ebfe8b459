#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowsentinel/csv.hpp"

namespace flowsentinel {

/// Synthetic stand-in for the CICIoT2023 CSVs.
///
/// Every raw label gets a random prototype on the 20 canonical features;
/// rows are prototype + N(0, noise) on those and uniform noise on the other
/// 26 columns. Class sizes follow the real dataset's skew with square-root
/// compression and a per-class floor.
struct FixtureOptions {
    std::size_t rows = 5000;
    std::uint64_t seed = 2023;
    double noise = 0.06;
    std::size_t min_per_class = 40;
};

/// Row count per raw label (ordered as default_label_families()). Sums to
/// options.rows. Throws InvalidConfig if rows < 34 * min_per_class.
std::vector<std::size_t> fixture_class_sizes(const FixtureOptions& options);

/// All 46 CICIoT2023 columns, rows in shuffled order.
FlowTable make_fixture(const FixtureOptions& options = {});

/// Writes `table` as CSV (features then "label"). `malformed` evenly spaced
/// rows are corrupted in rotation with NaN, non-numeric text and a missing
/// field, so loading it back drops exactly that many rows.
void write_fixture_csv(const FlowTable& table, const std::filesystem::path& path, std::size_t malformed = 0);

/// 20 canonical feature names, most important first.
const std::vector<std::string>& canonical_top20();

/// Reads one feature name per line (blank lines and # comments skipped).
std::vector<std::string> load_feature_list(const std::filesystem::path& path);

}  // namespace flowsentinel
