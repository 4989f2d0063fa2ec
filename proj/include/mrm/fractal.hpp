#pragma once

// Test sets, box-counting dimension estimates, images under the random
// metric R(x) = rho(0, x) and the KPZ exponent solver.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrm/cone.hpp"
#include "mrm/levy.hpp"
#include "mrm/measure.hpp"

namespace mrm {

struct Interval {
    double a = 0.0;
    double b = 0.0;
};

enum class SetKind { Cantor, FullInterval, FinitePoints, Image };

/// Finite cover of a 1D set by closed intervals (points are a == b).
struct FractalSet {
    SetKind kind = SetKind::FullInterval;
    double ratio = 0.0;  ///< Cantor only
    int depth = 0;       ///< Cantor only
    double domain_length = 1.0;
    std::vector<Interval> cover;  ///< sorted, pairwise disjoint
    double delta0 = 1.0;          ///< nominal dimension
    /// Largest cover interval length; box scales must not go below it.
    double resolution = 0.0;

    std::string describe() const;
};

/// Two-branch self-similar Cantor set in [0, domain_length]: 2^depth
/// intervals of length ratio^depth * domain_length.
FractalSet make_cantor(double ratio, int depth, double domain_length = 1.0);
FractalSet make_full_interval(double domain_length = 1.0);
FractalSet make_point_set(std::vector<double> points);

/// Number of boxes [k eps, (k+1) eps) meeting the set.
std::size_t box_count(const FractalSet& set, double eps);

enum class DimensionMethod { EuclideanBox, RhoBox, MeasureContent };

struct DimensionEstimate {
    DimensionMethod method = DimensionMethod::EuclideanBox;
    double scale_min = 0.0;
    double scale_max = 0.0;
    std::vector<double> scales;
    std::vector<double> counts;
    double slope = 0.0;
    double std_error = 0.0;  ///< floored at 1e-9
    double r2 = 1.0;
};

/// OLS slope of log N(eps) against log(1/eps). Needs >= 4 scales spanning
/// >= 3 octaves, none finer than set.resolution.
DimensionEstimate box_dimension(const FractalSet& set, std::span<const double> scales,
                                DimensionMethod method = DimensionMethod::EuclideanBox);

/// Image cover {[R(a_i), R(b_i)]}. With `normalize` the image is divided by
/// the total mass so it lies in [0, 1].
FractalSet rho_image(const FractalSet& set, const MeasureGrid& measure, bool normalize = false);

/// Root of zeta_fn(delta) = delta0 on [0, 1] by bisection. Checks
/// zeta_fn(0) = 0, zeta_fn(1) = 1 to 1e-9 and monotone sampling.
double kpz_solve(const std::function<double(double)>& zeta_fn, double delta0);

/// Same on [0, hi] without the zeta(1) = 1 check; needs zeta_fn(hi) >= delta0.
double kpz_solve_on(const std::function<double(double)>& zeta_fn, double delta0, double hi);

struct KpzReplica {
    std::size_t replica = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    bool discarded = false;
};

struct KpzReport {
    std::string set;
    double delta0 = 0.0;
    double delta_pred = 0.0;
    std::vector<KpzReplica> replicas;
    std::size_t discarded = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double tolerance = 0.08;
    bool pass = false;
    bool too_many_discarded = false;
    bool outside_hypotheses = false;
    std::vector<std::string> notes;
};

/// Mean and standard error over the kept replicas, the 5% discard rule and
/// pass iff |mean - delta_pred| <= max(tolerance, 3 stderr).
void summarize_replicas(KpzReport& report);

struct Kpz1DOptions {
    EstimatorOptions estimator{};
    double tolerance = 0.08;
};

/// Per replica: field and measure on [0, set.domain_length], normalized
/// rho-image of the set, box dimension of the image at `scales` (fractions
/// of the total mass). Pass iff |mean - delta_pred| <= max(tol, 3 stderr)
/// and at most 5% of the replicas were discarded.
KpzReport kpz_verify_1d(const FractalSet& set, const LevyTriple& triple, const ConeParams& cone,
                        std::size_t replicas, std::uint64_t seed, std::span<const double> scales,
                        const Kpz1DOptions& options = {});

struct CapacityEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo of int int |x - y|^{-s} gamma(dx) gamma(dy) for the natural
/// measure gamma of the set (uniform branch choice, uniform inside the
/// finest interval).
CapacityEstimate capacity_probe(const FractalSet& set, double s, std::size_t n_samples,
                                std::uint64_t seed);

/// Per-replica CSV: replica,dim_rho_est,stderr,discarded.
void write_kpz_csv(std::ostream& os, const KpzReport& report);
void write_kpz_summary(std::ostream& os, const KpzReport& report);

}  // namespace mrm
