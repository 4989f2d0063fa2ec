#pragma once

// Infinitely divisible exponents: Levy triples, the Laplace exponent psi,
// the structure function zeta(q) = q - psi(q) and the normalization psi(1) = 0.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mrm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Atom {
    double x;  ///< jump size
    double w;  ///< weight, > 0
};

/// nu = 0: pure Gaussian (or Lebesgue when sigma2 = 0 too).
struct NoJumps {};

/// nu = sum_j w_j delta_{x_j}. Finite total mass.
struct AtomicJumps {
    std::vector<Atom> atoms;
};

/// Serializable density family
///   nu(dx) = c |x|^{-1-alpha} e^{-rate |x|} dx  on 0 < side*x < upper.
/// alpha = -1 gives an exponential density, rate = 0 a pure power law.
struct PowerExpFamily {
    double c = 1.0;
    double alpha = 0.5;
    double rate = 0.0;
    double upper = 1.0;  ///< may be +inf when rate > 0
    int side = +1;       ///< +1 positive jumps, -1 negative jumps
};

/// nu with a density. The body [-x_max,-eps] U [eps,x_max] is integrated by
/// adaptive Gauss-Kronrod, |x| < eps by tanh-sinh on a Taylor-corrected
/// integrand. Beyond x_max the density is either zero (infinite tail rate) or
/// bounded by an exponential e^{-rate |x|}, which drives the psi = +inf test.
struct DensityJumps {
    std::function<double(double)> density;
    double eps = 1e-2;
    double x_max = 1.0;
    double left_tail_rate = kInf;
    double right_tail_rate = kInf;
    /// Density is treated as zero on |x| < cut (set by small_jump_split).
    double cut = 0.0;
    /// Integrability at the tail rate itself: true when e^{rate |x|} nu(dx)
    /// is still integrable (e.g. power prefactor decaying faster than 1/x).
    bool finite_at_rate = false;
    std::optional<PowerExpFamily> family;  ///< set when built from a family
};

using JumpMeasure = std::variant<NoJumps, AtomicJumps, DensityJumps>;

DensityJumps make_density(const PowerExpFamily& family, double eps = 1e-2,
                          double x_max_if_unbounded = 40.0);

/// (m, sigma2, nu) of the Levy-Khintchine exponent with the sin(x) compensator.
struct LevyTriple {
    double m = 0.0;
    double sigma2 = 0.0;
    JumpMeasure nu = NoJumps{};

    bool is_gaussian() const { return std::holds_alternative<NoJumps>(nu); }
};

/// Throws ValidationError on negative sigma2, non-positive weights, eps <= 0,
/// or a density violating int min(1, x^2) nu(dx) < inf.
void validate(const LevyTriple& triple);

/// Laplace exponent psi(q) = m q + sigma2 q^2 / 2 + int (e^{qx} - 1 - q sin x) nu(dx).
/// Returns +inf when e^{qx} is not integrable against the tail of nu.
double psi(const LevyTriple& triple, double q);

/// zeta(q) = q - psi(q); -inf where psi = +inf.
double zeta(const LevyTriple& triple, double q);

/// int (e^{qx} - 1 - q sin x) nu(dx) alone (no drift, no Gaussian part).
double jump_exponent(const JumpMeasure& nu, double q);

/// int sin(x) nu(dx); only defined for finite-mass measures in general, but
/// also finite for densities with int min(1,|x|) nu < inf.
double sin_compensator(const JumpMeasure& nu);

/// Total mass of nu (may be +inf for densities singular at 0).
double total_mass(const JumpMeasure& nu);

/// Triple with drift m = -sigma2/2 - int (e^x - 1 - sin x) nu(dx), so psi(1) = 0.
LevyTriple normalize(double sigma2, JumpMeasure nu);

/// Log-normal triple (sigma2, m = -sigma2/2).
LevyTriple lognormal(double sigma2);

/// q_c = sup{q >= 0 : psi(q) < inf}.
double critical_moment(const LevyTriple& triple);

struct NondegeneracyCheck {
    bool nondegenerate = false;  ///< exists eps > 0 with zeta(1+eps) > 1
    double witness_eps = 0.0;
    double witness_zeta = 1.0;
    /// psi(-q) < inf for all q in [0,1] (needed by the 1D KPZ theorem).
    bool negative_moments_finite = false;
};

NondegeneracyCheck check_nondegenerate(const LevyTriple& triple);

struct ExponentTable {
    std::vector<double> qs;
    std::vector<double> psi_vals;
    std::vector<double> zeta_vals;
    double q_c = kInf;
};

/// Table of psi and zeta over `qs` (sorted on output).
ExponentTable exponent_table(const LevyTriple& triple, std::vector<double> qs);

/// Restriction of a density to |x| >= eps plus the Gaussian compensation of
/// the removed small jumps.
struct SmallJumpSplit {
    JumpMeasure finite_nu;
    double compensating_sigma2 = 0.0;  ///< int_{|x|<eps} x^2 nu(dx)
    double drift_correction = 0.0;     ///< int_{|x|<eps} (x - sin x) nu(dx)
};

SmallJumpSplit small_jump_split(const JumpMeasure& nu, double eps);

std::string describe(const LevyTriple& triple);

}  // namespace mrm
