#include "flowsentinel/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace flowsentinel {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    return std::abs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
    double worst_err = 0.0;
    for (const auto& e : entries) worst_err = std::max(worst_err, e.max_rel_error);
    return worst_err;
}

const GradCheckEntry* GradCheckReport::worst() const {
    if (entries.empty()) return nullptr;
    return &*std::max_element(entries.begin(), entries.end(),
                              [](const auto& a, const auto& b) { return a.max_rel_error < b.max_rel_error; });
}

GradCheckReport gradient_check(std::vector<GradTarget>& targets, const std::function<double()>& loss, double step) {
    GradCheckReport report;
    for (auto& target : targets) {
        require_shape(target.value->same_shape(target.analytic),
                      "gradient_check: analytic gradient shape differs for " + target.name);
        GradCheckEntry entry{target.name};
        auto values = target.value->data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double original = values[i];
            values[i] = original + step;
            const double plus = loss();
            values[i] = original - step;
            const double minus = loss();
            values[i] = original;
            const double numeric = (plus - minus) / (2.0 * step);
            const double err = relative_error(target.analytic[i], numeric);
            if (err > entry.max_rel_error || i == 0) {
                entry.max_rel_error = err;
                entry.worst_index = i;
                entry.analytic = target.analytic[i];
                entry.numeric = numeric;
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

GradCheckReport check_parameters(const std::vector<std::pair<std::string, Parameter<double>*>>& params,
                                 const std::function<void()>& analytic_pass, const std::function<double()>& loss,
                                 double step) {
    analytic_pass();
    std::vector<GradTarget> targets;
    targets.reserve(params.size());
    for (const auto& [name, p] : params) targets.push_back({name, &p->value, p->grad});
    return gradient_check(targets, loss, step);
}

}  // namespace flowsentinel
