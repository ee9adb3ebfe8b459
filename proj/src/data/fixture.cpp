#include "flowsentinel/fixture.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "flowsentinel/error.hpp"
#include "flowsentinel/labels.hpp"
#include "flowsentinel/rng.hpp"

namespace flowsentinel {

namespace {

// Approximate full-dataset row counts per raw label, in thousands, ordered
// as default_label_families().
constexpr double kLabelWeights[] = {
    1098,  // BenignTraffic
    285, 28, 7200, 452, 4094, 4045, 4059, 23, 3598, 4497, 5412, 286,  // DDoS-*
    71, 2028, 2671, 3318,  // DoS-*
    991, 752, 890,  // Mirai-*
    134, 98, 2.2, 82, 37,  // Recon
    178, 307,  // Spoofing
    3.2, 5.9, 5.4, 5.2, 1.25, 3.8,  // Web-based
    13,  // BruteForce
};

static_assert(std::size(kLabelWeights) == 34);

void append_float(std::string& out, float v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

const std::vector<std::string>& canonical_top20() {
    static const std::vector<std::string> names{
        "Srate",   "Rate", "Duration",      "syn_count", "Weight",    "ack_flag_number", "Number",
        "Header_Length", "flow_duration", "Max", "HTTP", "Protocol Type", "urg_count", "ack_count",
        "syn_flag_number", "rst_count", "UDP", "fin_count", "Variance", "IAT",
    };
    return names;
}

std::vector<std::string> load_feature_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::FileNotFound, "feature list not found: " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t");
        names.push_back(line.substr(first, last - first + 1));
    }
    if (names.empty()) fail(ErrorKind::EmptyInput, "feature list " + path.string() + " is empty");
    return names;
}

std::vector<std::size_t> fixture_class_sizes(const FixtureOptions& options) {
    constexpr std::size_t n = std::size(kLabelWeights);
    if (options.rows < n * options.min_per_class)
        fail(ErrorKind::InvalidConfig, "fixture needs at least " + std::to_string(n * options.min_per_class) + " rows");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::sqrt(kLabelWeights[i]);
    const double total_w = std::accumulate(w.begin(), w.end(), 0.0);
    const std::size_t spare = options.rows - n * options.min_per_class;

    // Largest-remainder apportionment of the rows above the floor.
    std::vector<std::size_t> sizes(n, options.min_per_class);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t given = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = static_cast<double>(spare) * w[i] / total_w;
        const auto whole = static_cast<std::size_t>(share);
        sizes[i] += whole;
        given += whole;
        remainders.emplace_back(share - static_cast<double>(whole), i);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t k = 0; given < spare; ++k, ++given) ++sizes[remainders[k].second];
    return sizes;
}

FlowTable make_fixture(const FixtureOptions& options) {
    const auto& families = default_label_families();
    const auto sizes = fixture_class_sizes(options);
    const auto& columns = ciciot2023_feature_columns();
    const auto& signal = canonical_top20();
    const std::size_t cols = columns.size();

    std::vector<int> signal_slot(cols, -1);
    for (std::size_t s = 0; s < signal.size(); ++s) {
        const auto it = std::find(columns.begin(), columns.end(), signal[s]);
        signal_slot[static_cast<std::size_t>(it - columns.begin())] = static_cast<int>(s);
    }
    // Per-column magnitude so the raw values span several orders, as in the real CSVs.
    std::vector<double> scale(cols);
    for (std::size_t c = 0; c < cols; ++c) scale[c] = std::pow(10.0, static_cast<double>(c % 4));

    Rng root(options.seed);
    Rng proto_rng = root.substream(1);
    std::vector<std::vector<double>> prototypes(sizes.size(), std::vector<double>(signal.size()));
    for (auto& p : prototypes)
        for (auto& v : p) v = proto_rng.uniform();

    std::vector<std::uint32_t> order;
    for (std::size_t l = 0; l < sizes.size(); ++l) order.insert(order.end(), sizes[l], static_cast<std::uint32_t>(l));
    Rng shuffle_rng = root.substream(2);
    shuffle_rng.shuffle(std::span<std::uint32_t>(order));

    FlowTable table;
    table.feature_names = columns;
    for (const auto& [label, family] : families.entries) table.label_names.push_back(label);
    table.values.reserve(order.size() * cols);
    Rng row_rng = root.substream(3);
    for (auto label : order) {
        for (std::size_t c = 0; c < cols; ++c) {
            double v = signal_slot[c] >= 0
                           ? prototypes[label][static_cast<std::size_t>(signal_slot[c])] + options.noise * row_rng.normal()
                           : row_rng.uniform();
            table.values.push_back(static_cast<float>(v * scale[c]));
        }
        table.label_ids.push_back(label);
    }
    return table;
}

void write_fixture_csv(const FlowTable& table, const std::filesystem::path& path, std::size_t malformed) {
    if (malformed > table.rows()) fail(ErrorKind::InvalidConfig, "more malformed rows than rows");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());

    std::string line;
    for (const auto& name : table.feature_names) line += name + ",";
    line += "label\n";
    out << line;

    const std::size_t stride = malformed ? table.rows() / malformed : 0;
    std::size_t corrupted = 0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const auto rec = table.record(i);
        const bool bad = malformed && corrupted < malformed && i % stride == 0;
        line.clear();
        for (std::size_t c = 0; c < rec.features.size(); ++c) {
            if (bad && c == 0 && corrupted % 3 == 0) {
                line += "NaN";
            } else if (bad && c == 0 && corrupted % 3 == 1) {
                line += "n/a";
            } else if (bad && c == 0) {
                continue;  // missing field
            } else {
                append_float(line, rec.features[c]);
            }
            line += ',';
        }
        line.append(rec.label);
        line += '\n';
        out << line;
        if (bad) ++corrupted;
    }
    if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace flowsentinel
