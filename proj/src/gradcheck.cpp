#include "spnf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace spnf::nn {

GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                                  Tensor x, double h) {
    if (!x.requires_grad())
        throw InvalidArgument("finite_diff_check: probe tensor must require grad");
    x.clear_grad();
    Tensor y = f(x);
    if (y.size() != 1)
        throw ShapeMismatch("finite_diff_check: f must be scalar-valued");
    backward(y);
    x.node()->ensure_grad();
    std::vector<double> analytic = x.node()->grad;
    const double f0 = y.item();

    GradCheckReport report;
    NoGradGuard no_grad;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + h;
        const double fp = f(x).item();
        x.data()[i] = saved - h;
        const double fm = f(x).item();
        x.data()[i] = saved;

        // Kink detection: a large second difference relative to the local
        // slope means the probe straddles a non-smooth point and the
        // central difference is not trustworthy there.
        const double curvature = std::abs(fp + fm - 2.0 * f0);
        const double slope = std::max(std::abs(fp - fm) / 2.0, h);
        if (curvature > 0.25 * slope) {
            ++report.kinks;
            continue;
        }

        const double numeric = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        ++report.checked;
    }
    return report;
}

}  // namespace spnf::nn
