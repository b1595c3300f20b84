#pragma once

// Central-difference gradient verification. The caller supplies a scalar
// re-evaluation function that reads the parameter matrices in place; each
// entry is nudged by +/- step and the analytic gradient is compared against
// (f+ - f-) / (2 step) under a relative error with an absolute floor (so
// near-zero gradients do not blow the ratio up).

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcgae/matrix.hpp"

namespace hcgae {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    int worst_index = -1;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;

    bool ok(double tol) const { return worst <= tol; }
};

inline GradCheckReport check_gradients(
    const std::function<double()>& loss_fn,
    const std::vector<std::pair<std::string, Matrix*>>& params,
    const std::map<std::string, Matrix>& analytic, double step = 1e-5,
    double floor = 1e-3) {
    GradCheckReport report;
    for (const auto& [name, param] : params) {
        auto it = analytic.find(name);
        if (it == analytic.end())
            throw std::invalid_argument("check_gradients: no analytic gradient for " + name);
        const Matrix& grad = it->second;
        if (!grad.same_shape(*param))
            throw std::invalid_argument("check_gradients: gradient shape mismatch for " + name);
        GradCheckEntry entry;
        entry.name = name;
        for (std::size_t i = 0; i < param->size(); ++i) {
            double saved = param->data[i];
            param->data[i] = saved + step;
            double fp = loss_fn();
            param->data[i] = saved - step;
            double fm = loss_fn();
            param->data[i] = saved;
            double numeric = (fp - fm) / (2.0 * step);
            double a = grad.data[i];
            double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), floor});
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = static_cast<int>(i);
                entry.analytic_at_worst = a;
                entry.numeric_at_worst = numeric;
            }
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace hcgae
