#include "mrm/stats.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "mrm/errors.hpp"
#include "mrm/random.hpp"

namespace mrm::stats {

double mean(std::span<const double> v) {
    detail::require(!v.empty(), "mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    detail::require(v.size() >= 2, "variance needs at least two values");
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

double stderr_mean(std::span<const double> v) {
    return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

double third_cumulant(std::span<const double> v) {
    detail::require(v.size() >= 3, "third cumulant needs at least three values");
    const double n = static_cast<double>(v.size());
    const double mu = mean(v);
    double m3 = 0.0;
    for (double x : v) m3 += (x - mu) * (x - mu) * (x - mu);
    m3 /= n;
    return n * n / ((n - 1) * (n - 2)) * m3;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    std::vector<double> w(x.size(), 1.0);
    LineFit f = fit_line_weighted(x, y, w);
    // Residual-based errors for the unweighted fit.
    const double n = static_cast<double>(x.size());
    if (x.size() > 2) {
        const double mx = mean(x);
        double sxx = 0.0, rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxx += (x[i] - mx) * (x[i] - mx);
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        const double s2 = rss / (n - 2);
        f.slope_se = std::sqrt(s2 / sxx);
        f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return f;
}

LineFit fit_line_weighted(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
    detail::require(x.size() == y.size() && x.size() == w.size(), "fit_line: size mismatch");
    detail::require(x.size() >= 2, "fit_line: need at least two points");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    detail::require(det > 0, "fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.slope_se = std::sqrt(sw / det);
    f.intercept_se = std::sqrt(sxx / det);
    const double ybar = sy / sw;
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ss_res += w[i] * r * r;
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

double bootstrap_se(std::size_t n,
                    const std::function<double(std::span<const std::size_t>)>& statistic,
                    std::size_t resamples, std::uint64_t seed) {
    detail::require(n > 0 && resamples >= 2, "bootstrap_se: need data and >= 2 resamples");
    Engine rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    std::vector<double> values;
    values.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& i : idx) i = pick(rng);
        values.push_back(statistic(idx));
    }
    return std::sqrt(variance(values));
}

}  // namespace mrm::stats
