#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mrm::stats {

double mean(std::span<const double> v);
/// Unbiased sample variance.
double variance(std::span<const double> v);
double stderr_mean(std::span<const double> v);
/// Unbiased third cumulant (k-statistic k3).
double third_cumulant(std::span<const double> v);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double r2 = 1.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with weights w_i (typically 1 / se_i^2). Standard
/// errors are the model-based ones, sqrt of the inverse normal matrix.
LineFit fit_line_weighted(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w);

/// Bootstrap standard deviation of `statistic` over `resamples` resamples of
/// the index set {0..n-1}; the statistic receives the resampled indices.
double bootstrap_se(std::size_t n,
                    const std::function<double(std::span<const std::size_t>)>& statistic,
                    std::size_t resamples, std::uint64_t seed);

}  // namespace mrm::stats
