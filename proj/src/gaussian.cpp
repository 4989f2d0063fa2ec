#include "mrm/gaussian.hpp"

#include <random>

#include "mrm/errors.hpp"

namespace mrm {

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& covariance, Eigen::VectorXd mean)
    : mean_(std::move(mean)) {
    const Eigen::Index n = covariance.rows();
    detail::require(covariance.cols() == n && mean_.size() == n,
                    "GaussianSampler: covariance/mean shape mismatch");
    const double trace = covariance.trace();
    if (n == 0 || trace == 0.0) {
        degenerate_ = true;
        lower_ = Eigen::MatrixXd::Zero(n, n);
        return;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) {
        jitter_ = 1e-12 * trace / static_cast<double>(n);
        Eigen::MatrixXd shifted = covariance;
        shifted.diagonal().array() += jitter_;
        llt.compute(shifted);
        if (llt.info() != Eigen::Success)
            throw NumericalError("Cholesky factorization failed after diagonal jitter");
    }
    lower_ = llt.matrixL();
}

void fill_standard_normal(Engine& rng, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out) v = normal(rng);
}

Eigen::VectorXd GaussianSampler::sample(Engine& rng) const {
    Eigen::VectorXd z(dim());
    fill_standard_normal(rng, {z.data(), static_cast<std::size_t>(z.size())});
    if (degenerate_) return mean_;
    Eigen::VectorXd out = mean_;
    out.noalias() += lower_.triangularView<Eigen::Lower>() * z;
    return out;
}

Eigen::MatrixXd GaussianSampler::sample_batch(std::span<const std::uint64_t> seeds) const {
    const auto cols = static_cast<Eigen::Index>(seeds.size());
    Eigen::MatrixXd z(dim(), cols);
    for (Eigen::Index k = 0; k < cols; ++k) {
        Engine rng(seeds[static_cast<std::size_t>(k)]);
        fill_standard_normal(rng, {z.col(k).data(), static_cast<std::size_t>(dim())});
    }
    Eigen::MatrixXd out = mean_.replicate(1, cols);
    if (!degenerate_) out.noalias() += lower_.triangularView<Eigen::Lower>() * z;
    return out;
}

}  // namespace mrm
