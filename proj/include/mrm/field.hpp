#pragma once

// Sampling of the log-field omega_l(t) = mu(A_l(t)) on a uniform grid.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mrm/cone.hpp"
#include "mrm/gaussian.hpp"
#include "mrm/levy.hpp"
#include "mrm/random.hpp"

namespace mrm {

inline constexpr std::size_t kMaxExactGrid = 8192;

/// Points origin + i * spacing, i = 0..n-1.
struct UniformGrid {
    double origin = 0.0;
    double spacing = 1.0;
    std::size_t n = 0;

    double at(std::size_t i) const { return origin + spacing * static_cast<double>(i); }
    std::vector<double> points() const;
};

/// Cell midpoints of [0, length] cut into n cells.
UniformGrid midpoint_grid(double length, std::size_t n);

enum class FieldMethod : std::uint32_t { GaussianExact = 0, PoissonExact = 1, TruncatedGeneral = 2 };

std::string_view to_string(FieldMethod m);
FieldMethod field_method_from_string(std::string_view s);

struct Field1D {
    UniformGrid grid;
    std::vector<double> values;
    ConeParams cone;
    LevyTriple triple;
    std::uint64_t seed = 0;
    FieldMethod method = FieldMethod::GaussianExact;
};

struct PointCloud {
    struct Point {
        double s;
        double y;
        double x;
    };
    std::vector<Point> points;
    double s_min = 0.0;
    double s_max = 0.0;
    double expected_count = 0.0;
};

/// Draws jump sizes from nu / |nu| for a finite-mass nu. Densities are
/// sampled through a tabulated CDF on log-spaced nodes.
class JumpSampler {
  public:
    JumpSampler() = default;
    explicit JumpSampler(const JumpMeasure& finite_nu);

    double total_mass() const { return mass_; }
    double operator()(Engine& rng) const;

  private:
    double mass_ = 0.0;
    std::vector<double> nodes_;  ///< signed jump sizes, increasing
    std::vector<double> cdf_;    ///< cumulative mass at nodes_
    bool atomic_ = false;
};

/// Marked Poisson process on [s_min, s_max] x [l, inf) x R with intensity
/// theta (x) nu: Poisson(|window| |nu| / l) points, s uniform, y = l / U,
/// x ~ nu / |nu|.
PointCloud sample_poisson_points(double s_min, double s_max, const ConeParams& cone,
                                 const JumpMeasure& finite_nu, std::uint64_t seed);

struct FieldOptions {
    /// Required grid resolution: spacing <= l / resolution. Allowed 4..16.
    double resolution = 4.0;
    /// Small-jump cutoff for the truncated-general path.
    double jump_eps = 1e-2;
};

/// Effective (Gaussian + finite jumps) representation of a triple used by
/// the samplers. For finite nu this is the triple itself.
struct EffectiveTriple {
    double m = 0.0;
    double sigma2 = 0.0;
    JumpMeasure finite_nu = NoJumps{};
    double sin_comp = 0.0;  ///< int sin(x) finite_nu(dx)
};

EffectiveTriple effective_triple(const LevyTriple& triple, FieldMethod method, double jump_eps);

/// Samples Field1D realizations for a fixed (grid, cone, triple, method).
/// The Cholesky factor and jump tables are built once and reused.
class FieldSampler {
  public:
    FieldSampler(UniformGrid grid, ConeParams cone, LevyTriple triple, FieldMethod method,
                 FieldOptions options = {});

    const UniformGrid& grid() const { return grid_; }
    const ConeParams& cone() const { return cone_; }
    const LevyTriple& triple() const { return triple_; }
    FieldMethod method() const { return method_; }
    const EffectiveTriple& effective() const { return eff_; }
    double window_lo() const;
    double window_hi() const;

    Field1D sample(std::uint64_t seed) const;

    /// Field values for several seeds, one column per seed.
    Eigen::MatrixXd sample_values(std::span<const std::uint64_t> seeds) const;

  private:
    void add_jumps(std::uint64_t seed, std::span<double> values) const;

    UniformGrid grid_;
    ConeParams cone_;
    LevyTriple triple_;
    FieldMethod method_;
    EffectiveTriple eff_;
    GaussianSampler gauss_;
    JumpSampler jumps_;
    double theta_ = 0.0;
};

/// Exact Gaussian field: mean m * theta(A_l), covariance sigma2 * overlap.
Field1D sample_gaussian_field(const UniformGrid& grid, const ConeParams& cone,
                              const LevyTriple& triple, std::uint64_t seed,
                              FieldOptions options = {});

/// omega(t_i) = m theta + G(t_i) + sum_{points in A_l(t_i)} x - theta int sin(x) nu(dx),
/// G drawn from the Gaussian part of `triple` with `seed`.
Field1D assemble_omega(const UniformGrid& grid, const PointCloud& cloud, const ConeParams& cone,
                       const LevyTriple& triple, std::uint64_t seed);

/// Draw of an infinitely divisible variable with exponent theta * phi
/// (e.g. Omega_lambda with theta = ln(1/lambda)).
double sample_id_variable(const EffectiveTriple& eff, const JumpSampler& jumps, double theta,
                          Engine& rng);

struct MomentComparison {
    std::string statistic;
    double lhs = 0.0;
    double rhs = 0.0;
    double stderr_diff = 0.0;
    double z = 0.0;
    bool pass = true;
};

struct ScaleInvarianceReport {
    double lambda = 1.0;
    double expected_gap = 0.0;          ///< sigma2 ln(1/lambda)
    double max_variance_gap_error = 0.0;
    double max_covariance_gap_error = 0.0;
    std::vector<MomentComparison> moments;  ///< jump cases only
    bool pass = true;
};

/// Checks that omega_{lambda l}(lambda t) and Omega_lambda + omega_l(t) share
/// their law: exactly on covariances for the Gaussian part, by two-sample
/// moment tests (5 standard errors) when nu is present.
ScaleInvarianceReport scale_invariance_check(const ConeParams& cone, const LevyTriple& triple,
                                             double lambda, std::size_t replicas,
                                             std::uint64_t seed, FieldOptions options = {});

/// omega_{l_k} on the level-k midpoint grids of [0, length] for one realization,
/// l_k = l_0 / 2^k, spacing l_k / resolution. Levels share the white noise
/// of the bands y >= l_k, which makes the sequence a coupled refinement.
class CoupledGaussianLevels {
  public:
    CoupledGaussianLevels(double length, ConeParams coarse, double sigma2, std::size_t levels,
                          double resolution = 4.0);

    std::size_t levels() const { return grids_.size(); }
    const UniformGrid& grid(std::size_t k) const { return grids_[k]; }
    double l(std::size_t k) const;
    std::vector<Field1D> sample(std::uint64_t seed) const;

  private:
    double length_;
    ConeParams coarse_;
    LevyTriple triple_;
    std::vector<UniformGrid> grids_;
    std::vector<double> points_;                   ///< union of all grid points
    std::vector<std::vector<std::size_t>> index_;  ///< level -> positions in points_
    std::vector<std::vector<std::size_t>> band_support_;
    std::vector<GaussianSampler> bands_;
};

/// Little-endian binary dump: magic "MRMF1D01", u64 n, f64 l, f64 T,
/// u64 seed, u32 method, u32 reserved, f64 origin, f64 spacing, n x f64.
void write_field_binary(std::ostream& os, const Field1D& field);
Field1D read_field_binary(std::istream& is);

}  // namespace mrm
