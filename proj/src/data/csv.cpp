#include "flowsentinel/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <unordered_map>

#include "flowsentinel/error.hpp"
#include "flowsentinel/parallel.hpp"

namespace flowsentinel {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

enum class ParseStatus { Ok, Unparseable, NonFinite };

ParseStatus parse_number(std::string_view text, float& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return ParseStatus::Unparseable;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc::result_out_of_range) return ParseStatus::NonFinite;
    if (ec != std::errc() || ptr != text.data() + text.size()) return ParseStatus::Unparseable;
    out = static_cast<float>(value);
    if (!std::isfinite(value) || !std::isfinite(out)) return ParseStatus::NonFinite;
    return ParseStatus::Ok;
}

struct FileResult {
    FlowTable table;
    IngestReport report;
};

FileResult parse_file(const std::filesystem::path& path, const std::vector<std::string>& columns,
                      const std::string& label_column) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::FileNotFound, "cannot open " + path.string());
    FileResult result;
    result.table.feature_names = columns;

    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::EmptyInput, path.string() + ": no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);
    const auto label_it = position.find(label_column);
    if (label_it == position.end())
        fail(ErrorKind::MissingColumn, path.string() + ": missing column '" + label_column + "'");
    const std::size_t label_pos = label_it->second;
    std::vector<std::size_t> source;
    source.reserve(columns.size());
    for (const auto& name : columns) {
        const auto it = position.find(name);
        if (it == position.end()) fail(ErrorKind::MissingColumn, path.string() + ": missing column '" + name + "'");
        source.push_back(it->second);
    }

    std::unordered_map<std::string, std::uint32_t> label_index;
    std::vector<float> row(columns.size());
    auto& report = result.report;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++report.rows_read;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            report.drop(kDropMalformedRow);
            continue;
        }
        std::optional<std::string_view> reason;
        for (std::size_t c = 0; c < source.size() && !reason; ++c) {
            switch (parse_number(fields[source[c]], row[c])) {
                case ParseStatus::Ok: break;
                case ParseStatus::Unparseable: reason = kDropUnparseable; break;
                case ParseStatus::NonFinite: reason = kDropNonFinite; break;
            }
        }
        const std::string& label = fields[label_pos];
        if (!reason && label.empty()) reason = kDropEmptyLabel;
        if (reason) {
            report.drop(*reason);
            continue;
        }
        auto [it, inserted] = label_index.emplace(label, static_cast<std::uint32_t>(result.table.label_names.size()));
        if (inserted) result.table.label_names.push_back(label);
        result.table.values.insert(result.table.values.end(), row.begin(), row.end());
        result.table.label_ids.push_back(it->second);
    }
    report.rows_retained = result.table.rows();
    return result;
}

std::vector<std::string> header_columns(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::FileNotFound, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::EmptyInput, path.string() + ": no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto fields = split_csv_line(line);
    std::erase(fields, label_column);
    return fields;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    bool was_quoted = false;
    auto finish = [&] {
        fields.push_back(was_quoted ? current : std::string(trim(current)));
        current.clear();
        was_quoted = false;
    };
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                current += ch;
            }
        } else if (ch == '"' && trim(current).empty()) {
            current.clear();
            in_quotes = true;
            was_quoted = true;
        } else if (ch == ',') {
            finish();
        } else if (!(was_quoted && (ch == ' ' || ch == '\t'))) {
            current += ch;
        }
    }
    finish();
    return fields;
}

const std::vector<std::string>& ciciot2023_feature_columns() {
    static const std::vector<std::string> columns{
        "flow_duration", "Header_Length", "Protocol Type", "Duration", "Rate", "Srate", "Drate",
        "fin_flag_number", "syn_flag_number", "rst_flag_number", "psh_flag_number", "ack_flag_number",
        "ece_flag_number", "cwr_flag_number", "ack_count", "syn_count", "fin_count", "urg_count", "rst_count",
        "HTTP", "HTTPS", "DNS", "Telnet", "SMTP", "SSH", "IRC", "TCP", "UDP", "DHCP", "ARP", "ICMP", "IPv", "LLC",
        "Tot sum", "Min", "Max", "AVG", "Std", "Tot size", "IAT", "Number", "Magnitue", "Radius", "Covariance",
        "Variance", "Weight",
    };
    return columns;
}

std::size_t IngestReport::total_dropped() const {
    std::size_t total = 0;
    for (const auto& [reason, count] : rows_dropped) total += count;
    return total;
}

void IngestReport::drop(std::string_view reason, std::size_t count) {
    if (count) rows_dropped[std::string(reason)] += count;
}

std::vector<std::filesystem::path> list_csv_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::pair<FlowTable, IngestReport> load_csv(std::vector<std::filesystem::path> paths, const CsvOptions& options) {
    if (paths.empty()) fail(ErrorKind::EmptyInput, "no input files");
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
        if (!std::filesystem::is_regular_file(p)) fail(ErrorKind::FileNotFound, "input file not found: " + p.string());

    const std::vector<std::string> columns =
        options.schema.empty() ? header_columns(paths.front(), options.label_column) : options.schema;

    std::vector<FileResult> parts(paths.size());
    parallel_for(paths.size(), [&](std::size_t i) { parts[i] = parse_file(paths[i], columns, options.label_column); });

    FlowTable table;
    table.feature_names = columns;
    IngestReport report;
    std::unordered_map<std::string, std::uint32_t> label_index;
    for (std::size_t f = 0; f < parts.size(); ++f) {
        auto& part = parts[f];
        report.files.push_back(paths[f].string());
        report.rows_read += part.report.rows_read;
        for (const auto& [reason, count] : part.report.rows_dropped) report.rows_dropped[reason] += count;
        std::vector<std::uint32_t> remap(part.table.label_names.size());
        for (std::size_t l = 0; l < remap.size(); ++l) {
            auto [it, inserted] = label_index.emplace(part.table.label_names[l], static_cast<std::uint32_t>(table.label_names.size()));
            if (inserted) table.label_names.push_back(part.table.label_names[l]);
            remap[l] = it->second;
        }
        table.values.insert(table.values.end(), part.table.values.begin(), part.table.values.end());
        for (auto id : part.table.label_ids) table.label_ids.push_back(remap[id]);
        part = {};
    }
    report.rows_retained = table.rows();
    if (report.rows_read == 0) report.notes.push_back("empty: input files contain a header but no data rows");
    return {std::move(table), std::move(report)};
}

}  // namespace flowsentinel
