#pragma once

// The measure M_l(dt) = e^{omega_l(t)} dt on a cell grid, its cumulative map
// R(x) = rho(origin, x) and Monte Carlo checks of its scaling laws.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrm/cone.hpp"
#include "mrm/field.hpp"
#include "mrm/levy.hpp"

namespace mrm {

/// Cell masses on [origin, origin + n * spacing] with prefix sums at the edges.
struct MeasureGrid {
    double origin = 0.0;
    double spacing = 1.0;
    std::vector<double> masses;      ///< n cells
    std::vector<double> cumulative;  ///< n + 1 edges, cumulative[0] = 0

    std::size_t cells() const { return masses.size(); }
    double length() const { return spacing * static_cast<double>(masses.size()); }
    double end() const { return origin + length(); }
    double total() const { return cumulative.back(); }
};

/// Midpoint rule: the field is read as cell-centred values, cell mass
/// e^{omega(midpoint)} * spacing.
MeasureGrid build_measure(const Field1D& field);
MeasureGrid build_measure(const UniformGrid& cell_centres, std::span<const double> values);

/// R(x) = rho(origin, x), linear between edges.
double cumulative_at(const MeasureGrid& measure, double x);

/// rho(x, y) = M([x, y]) for origin <= x <= y <= end.
double rho(const MeasureGrid& measure, double x, double y);

struct EstimatorOptions {
    FieldOptions field{};
    std::size_t bootstrap = 200;
    unsigned threads = 1;
    std::size_t batch = 64;  ///< replicas per sampling batch (fixed for reproducibility)
    /// Windows per replica in estimate_zeta: [j s, j s + t] for j < blocks,
    /// s the largest scale. The simulated length is blocks * s.
    std::size_t blocks = 1;
};

/// Field method implied by the jump measure of a triple.
FieldMethod default_method(const LevyTriple& triple);

struct MomentScalingFit {
    double q = 0.0;
    std::vector<double> scales;
    std::vector<double> log_means;  ///< log of the replica mean of M([0,t])^q
    std::vector<double> stderrs;    ///< bootstrap standard errors of log_means
    std::size_t replicas = 0;
    double slope = 0.0;             ///< zeta-hat(q)
    double slope_se = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
    bool reliable = true;           ///< false when E[M^q] may be infinite
    double analytic_zeta = 0.0;
};

/// Fits log E[M([0,t])^q] against log(t/T) over `scales` for each q.
/// Scales must lie in [32 l, T]; each replica simulates [0, max scale] once
/// and contributes M([0, t]) for every t.
std::vector<MomentScalingFit> estimate_zeta(const LevyTriple& triple, const ConeParams& cone,
                                            std::span<const double> qs,
                                            std::span<const double> scales,
                                            std::size_t replicas, std::uint64_t seed,
                                            const EstimatorOptions& options = {});

MomentScalingFit estimate_zeta(const LevyTriple& triple, const ConeParams& cone, double q,
                               std::span<const double> scales, std::size_t replicas,
                               std::uint64_t seed, const EstimatorOptions& options = {});

struct GlobalScalingReport {
    double lambda = 1.0;
    double q = 1.0;
    double lhs_mean = 0.0;   ///< E[M([0, lambda T])^q]
    double rhs_mean = 0.0;   ///< E[M([0, T])^q]
    double ratio = 1.0;
    double ratio_se = 0.0;
    double predicted = 1.0;  ///< lambda^{zeta(q)}
    double z = 0.0;
    bool pass = true;
};

/// E[M([0, lambda T])^q] against lambda^{zeta(q)} E[M([0, T])^q]. The small
/// interval is simulated at resolution lambda l on the lambda-scaled grid,
/// which makes the identity exact at finite l.
GlobalScalingReport global_scaling_check(const LevyTriple& triple, const ConeParams& cone,
                                         double lambda, double q, std::size_t replicas,
                                         std::uint64_t seed,
                                         const EstimatorOptions& options = {});

struct AtomlessnessReport {
    std::vector<double> max_cell_mass;
    bool decreasing = true;
};

/// Largest single-cell mass along a sequence of refining grids.
AtomlessnessReport atomlessness_probe(std::span<const MeasureGrid> refinements);

/// One coupled Gaussian realization refined `levels` times, then probed.
AtomlessnessReport atomlessness_trial(double length, const ConeParams& coarse, double sigma2,
                                      std::size_t levels, std::uint64_t seed);

/// CSV with header q,t,log_mean,stderr,n_rep; one fit row per q with t = "fit",
/// log_mean = slope and stderr = slope standard error.
void write_moment_csv(std::ostream& os, std::span<const MomentScalingFit> fits);

}  // namespace mrm
