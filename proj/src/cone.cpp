#include "mrm/cone.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mrm/errors.hpp"

namespace mrm {

void validate(const ConeParams& p) {
    detail::require(std::isfinite(p.l) && p.l > 0, "cone: l must be > 0");
    detail::require(std::isfinite(p.T) && p.T > 0, "cone: T must be > 0");
}

double cone_mass(const ConeParams& p) {
    validate(p);
    if (p.l <= p.T) return std::log(p.T / p.l) + 1.0;
    return p.T / p.l;
}

double cone_overlap(const ConeParams& p, double tau) {
    validate(p);
    if (p.l > p.T) throw ValidationError("cone_overlap: regime l > T is not supported");
    detail::require(tau >= 0, "cone_overlap: tau must be >= 0");
    if (tau < p.l) return std::log(p.T / p.l) + 1.0 - tau / p.l;
    if (tau <= p.T) return std::log(p.T / tau);
    return 0.0;
}

double band_overlap(double lo, double hi, double T, double tau) {
    detail::require(lo > 0 && lo <= hi && hi <= T, "band_overlap: need 0 < lo <= hi <= T");
    return cone_overlap({lo, T}, tau) - cone_overlap({hi, T}, tau);
}

bool point_in_cone(double s, double y, double t, const ConeParams& p) {
    if (y < p.l) return false;
    const double half = 0.5 * cone_width(y, p.T);
    const double d = s - t;
    return -half <= d && d <= half;
}

Eigen::MatrixXd overlap_covariance_matrix(std::span<const double> grid, const ConeParams& p,
                                          double sigma2) {
    validate(p);
    detail::require(sigma2 >= 0, "overlap_covariance_matrix: sigma2 must be >= 0");
    detail::require(std::is_sorted(grid.begin(), grid.end()),
                    "overlap_covariance_matrix: grid must be sorted");
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i, i) = sigma2 * cone_overlap(p, 0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = sigma2 * cone_overlap(p, std::abs(grid[i] - grid[j]));
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    return c;
}

double cone_overlap_quadrature(const ConeParams& p, double tau) {
    validate(p);
    using boost::math::quadrature::gauss_kronrod;
    // Inner integral over s of the indicator of both slabs at height y.
    auto slice = [&](double y) {
        const double half = 0.5 * cone_width(y, p.T);
        const double a = std::max(-half, tau - half);
        const double b = std::min(half, tau + half);
        if (b <= a) return 0.0;
        return gauss_kronrod<double, 15>::integrate([](double) { return 1.0; }, a, b, 0);
    };
    // Finite heights, split at the kinks of the integrand.
    std::vector<double> cuts{p.l, std::max(p.l, tau), std::max(p.l, p.T)};
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] <= cuts[k]) continue;
        // y = e^v, dy / y^2 = e^-v dv
        total += gauss_kronrod<double, 31>::integrate(
            [&](double v) {
                const double y = std::exp(v);
                return slice(y) / y;
            },
            std::log(cuts[k]), std::log(cuts[k + 1]), 12, 1e-14);
    }
    // Heights above max(l, T): substitute u = 1/y, dy / y^2 = du on (0, 1/top].
    const double top = cuts.back();
    total += gauss_kronrod<double, 31>::integrate(
        [&](double u) { return u > 0 ? slice(1.0 / u) : slice(1e300); }, 0.0, 1.0 / top, 12,
        1e-13);
    return total;
}

}  // namespace mrm
