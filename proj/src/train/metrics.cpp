#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "flowsentinel/error.hpp"
#include "flowsentinel/training.hpp"

namespace flowsentinel {

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics_from_confusion(std::vector<std::vector<std::uint64_t>> confusion,
                                     std::vector<std::string> classes) {
    const std::size_t c = confusion.size();
    for (const auto& row : confusion)
        if (row.size() != c) fail(ErrorKind::ShapeMismatch, "confusion matrix must be square");
    if (classes.empty())
        for (std::size_t i = 0; i < c; ++i) classes.push_back(std::to_string(i));
    if (classes.size() != c) fail(ErrorKind::ShapeMismatch, "class names do not match the confusion matrix");

    MetricsReport r;
    r.classes = std::move(classes);
    r.confusion = std::move(confusion);
    std::uint64_t trace = 0;
    std::vector<std::uint64_t> predicted(c, 0);
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) {
            r.total += r.confusion[t][p];
            predicted[p] += r.confusion[t][p];
            if (t == p) trace += r.confusion[t][p];
        }
    if (r.total == 0) fail(ErrorKind::EmptyInput, "no samples to score");
    r.accuracy = static_cast<double>(trace) / static_cast<double>(r.total);

    std::size_t present = 0;
    for (std::size_t k = 0; k < c; ++k) {
        ClassMetrics m;
        m.name = r.classes[k];
        const std::uint64_t tp = r.confusion[k][k];
        for (auto v : r.confusion[k]) m.support += v;
        m.predicted = predicted[k];
        m.precision = ratio(tp, m.predicted, m.precision_undefined);
        m.recall = ratio(tp, m.support, m.recall_undefined);
        const double pr = m.precision + m.recall;
        m.f1_undefined = pr == 0.0;
        m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / pr;

        if (m.support > 0 || m.predicted > 0) {
            ++present;
            r.macro.precision += m.precision;
            r.macro.recall += m.recall;
            r.macro.f1 += m.f1;
        }
        const double w = static_cast<double>(m.support) / static_cast<double>(r.total);
        r.weighted.precision += w * m.precision;
        r.weighted.recall += w * m.recall;
        r.weighted.f1 += w * m.f1;
        r.per_class.push_back(std::move(m));
    }
    r.macro.precision /= static_cast<double>(present);
    r.macro.recall /= static_cast<double>(present);
    r.macro.f1 /= static_cast<double>(present);
    return r;
}

MetricsReport metrics_from_predictions(std::span<const std::uint16_t> truth, std::span<const std::uint16_t> predicted,
                                       std::size_t num_classes, std::vector<std::string> classes) {
    if (truth.size() != predicted.size()) fail(ErrorKind::ShapeMismatch, "truth and prediction lengths differ");
    if (truth.empty()) fail(ErrorKind::EmptyInput, "no samples to score");
    std::vector<std::vector<std::uint64_t>> confusion(num_classes, std::vector<std::uint64_t>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= num_classes || predicted[i] >= num_classes)
            fail(ErrorKind::InvalidLabel, "class index out of range at sample " + std::to_string(i));
        ++confusion[truth[i]][predicted[i]];
    }
    return metrics_from_confusion(std::move(confusion), std::move(classes));
}

std::string MetricsReport::to_json(int indent) const {
    using nlohmann::json;
    json per = json::array();
    for (const auto& m : per_class) {
        per.push_back({{"class", m.name},
                       {"support", m.support},
                       {"predicted", m.predicted},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined},
                       {"f1_undefined", m.f1_undefined}});
    }
    json j;
    j["classes"] = classes;
    j["total"] = total;
    j["accuracy"] = accuracy;
    j["loss"] = loss;
    j["macro"] = {{"precision", macro.precision}, {"recall", macro.recall}, {"f1", macro.f1}};
    j["weighted"] = {{"precision", weighted.precision}, {"recall", weighted.recall}, {"f1", weighted.f1}};
    j["per_class"] = per;
    j["confusion"] = confusion;
    return j.dump(indent);
}

std::string MetricsReport::to_table() const {
    std::size_t width = 9;
    for (const auto& n : classes) width = std::max(width, n.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s %9s %9s %9s %9s\n", static_cast<int>(width), "class", "precision", "recall",
                  "f1", "support");
    out += buf;
    for (const auto& m : per_class) {
        std::snprintf(buf, sizeof buf, "%-*s %9.4f %9.4f %9.4f %9llu%s\n", static_cast<int>(width), m.name.c_str(),
                      m.precision, m.recall, m.f1, static_cast<unsigned long long>(m.support),
                      m.precision_undefined || m.recall_undefined ? "  (undefined)" : "");
        out += buf;
    }
    out += '\n';
    std::snprintf(buf, sizeof buf, "%-*s %9.4f %9.4f %9.4f %9llu\n", static_cast<int>(width), "macro", macro.precision,
                  macro.recall, macro.f1, static_cast<unsigned long long>(total));
    out += buf;
    std::snprintf(buf, sizeof buf, "%-*s %9.4f %9.4f %9.4f %9llu\n", static_cast<int>(width), "weighted",
                  weighted.precision, weighted.recall, weighted.f1, static_cast<unsigned long long>(total));
    out += buf;
    std::snprintf(buf, sizeof buf, "\naccuracy %.4f over %llu samples\n", accuracy,
                  static_cast<unsigned long long>(total));
    out += buf;
    return out;
}

}  // namespace flowsentinel
