#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "mrm/random.hpp"

namespace mrm {

/// Exact multivariate normal sampler backed by a dense Cholesky factor.
///
/// Factorization policy: plain LLT; on failure add 1e-12 * trace / n to the
/// diagonal and retry once; a second failure throws NumericalError. An
/// all-zero covariance is accepted and yields the mean deterministically.
class GaussianSampler {
  public:
    GaussianSampler() = default;
    GaussianSampler(const Eigen::MatrixXd& covariance, Eigen::VectorXd mean);

    Eigen::Index dim() const { return mean_.size(); }
    bool jittered() const { return jitter_ > 0; }
    double jitter() const { return jitter_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& factor() const { return lower_; }

    Eigen::VectorXd sample(Engine& rng) const;

    /// One column per seed, column k driven by Engine(seeds[k]). Agrees with
    /// sample() up to floating-point summation order.
    Eigen::MatrixXd sample_batch(std::span<const std::uint64_t> seeds) const;

  private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd lower_;
    double jitter_ = 0.0;
    bool degenerate_ = false;
};

/// Standard normal draws in a fixed order; shared so every sampler consumes
/// an engine identically.
void fill_standard_normal(Engine& rng, std::span<double> out);

}  // namespace mrm
