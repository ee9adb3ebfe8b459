#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowsentinel {

/// Splits one CSV record. Fields may be double-quoted; "" inside quotes is a
/// literal quote. Surrounding whitespace of unquoted fields is trimmed.
std::vector<std::string> split_csv_line(std::string_view line);

/// The 46 flow-feature column names of the CICIoT2023 CSVs, in file order.
const std::vector<std::string>& ciciot2023_feature_columns();

/// One ingested row: named feature values plus the raw label.
struct FlowRecord {
    std::span<const float> features;  // ordered as FlowTable::feature_names
    std::string_view label;
};

/// Columnar store of ingested rows. Labels are interned.
struct FlowTable {
    std::vector<std::string> feature_names;
    std::vector<float> values;             // row-major [rows x features]
    std::vector<std::uint32_t> label_ids;  // index into label_names
    std::vector<std::string> label_names;

    std::size_t rows() const noexcept { return label_ids.size(); }
    std::size_t cols() const noexcept { return feature_names.size(); }
    FlowRecord record(std::size_t i) const {
        return {std::span<const float>(values).subspan(i * cols(), cols()), label_names[label_ids[i]]};
    }
    std::string_view label(std::size_t i) const { return label_names[label_ids[i]]; }
};

inline constexpr std::string_view kDropUnparseable = "unparseable";
inline constexpr std::string_view kDropNonFinite = "non_finite";
inline constexpr std::string_view kDropMalformedRow = "malformed_row";
inline constexpr std::string_view kDropEmptyLabel = "empty_label";
inline constexpr std::string_view kDropUnknownLabel = "unknown_label";
inline constexpr std::string_view kDropSubsampled = "subsampled";

struct IngestReport {
    std::vector<std::string> files;
    std::size_t rows_read = 0;
    std::size_t rows_retained = 0;
    std::map<std::string, std::size_t> rows_dropped;  // reason -> count
    std::map<std::string, std::size_t> class_histogram;
    std::vector<std::string> notes;

    std::size_t total_dropped() const;
    void drop(std::string_view reason, std::size_t count = 1);
};

struct CsvOptions {
    std::string label_column = "label";
    /// Expected feature columns, matched by header name in any order. Empty
    /// means every non-label column in header order.
    std::vector<std::string> schema;
};

/// Parses every file (in parallel, merged in sorted-path order) and drops
/// rows with unparseable or non-finite numbers, wrong field counts or empty
/// labels, counting each reason in the report.
/// Throws EmptyInput (no paths), FileNotFound, MissingColumn (names it).
std::pair<FlowTable, IngestReport> load_csv(std::vector<std::filesystem::path> paths, const CsvOptions& options = {});

/// All *.csv files directly under `dir`, sorted.
std::vector<std::filesystem::path> list_csv_files(const std::filesystem::path& dir);

}  // namespace flowsentinel
