#include "mrm/levy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mrm/errors.hpp"

namespace mrm {

namespace {

constexpr double kRelTol = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// e^{qx} - 1 - q sin x without cancellation near x = 0.
double lk_integrand(double q, double x) {
    const double qx = q * x;
    if (std::abs(x) < 1e-2 && std::abs(qx) < 1e-2) {
        const double x2 = x * x;
        const double x3 = x2 * x;
        const double qx2 = qx * qx;
        const double exp_part =
            qx2 * (0.5 + qx * (1.0 / 6 + qx * (1.0 / 24 + qx * (1.0 / 120 + qx / 720))));
        const double sin_part = q * x3 * (1.0 / 6 - x2 * (1.0 / 120 - x2 / 5040));
        return exp_part + sin_part;
    }
    return std::expm1(qx) - q * std::sin(x);
}

void check_quadrature(double value, double error, double l1, const char* where) {
    if (!std::isfinite(value) || error > 1e-6 * std::max(1.0, l1)) {
        std::ostringstream os;
        os << "quadrature did not converge in " << where << ": value=" << value
           << " error=" << error << " L1=" << l1;
        throw NumericalError(os.str());
    }
}

// Integral of g(x) nu(dx) over one side (sign = +1 or -1) of a density.
template <class G>
double integrate_side(const DensityJumps& d, int sign, G&& g) {
    auto f = [&](double u) {
        if (!std::isfinite(u)) return 0.0;
        const double x = sign * u;
        const auto& fam = d.family;
        if (fam && u < 1.0) {
            // (g / u^2) (u^2 density): both factors stay finite as u -> 0.
            if (fam->side != sign || u >= fam->upper || u * u == 0.0) return 0.0;
            const double v = g(x);
            if (v == 0.0) return 0.0;
            return v / (u * u) * fam->c * std::pow(u, 1.0 - fam->alpha) * std::exp(-fam->rate * u);
        }
        const double dens = d.density(x);
        if (dens == 0.0) return 0.0;
        const double v = g(x);
        return v == 0.0 ? 0.0 : v * dens;
    };
    double total = 0.0;
    const double lo = std::max(d.cut, 0.0);
    if (lo < d.eps) {
        boost::math::quadrature::tanh_sinh<double> ts;
        double err = 0.0, l1 = 0.0;
        const double v = ts.integrate(f, lo, d.eps, kRelTol, &err, &l1);
        check_quadrature(v, err, l1, "small-jump region");
        total += v;
    }
    const double a = std::max(d.eps, d.cut);
    if (a < d.x_max) {
        double err = 0.0, l1 = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, a, d.x_max, 20, kRelTol, &err, &l1);
        check_quadrature(v, err, l1, "body region");
        total += v;
    }
    const double rate = sign > 0 ? d.right_tail_rate : d.left_tail_rate;
    if (std::isfinite(rate)) {
        boost::math::quadrature::exp_sinh<double> es;
        double err = 0.0, l1 = 0.0;
        const double v = es.integrate(f, std::max(a, d.x_max), kInf, kRelTol, &err, &l1);
        check_quadrature(v, err, l1, "tail region");
        total += v;
    }
    return total;
}

template <class G>
double integrate_density(const DensityJumps& d, G&& g) {
    return integrate_side(d, +1, g) + integrate_side(d, -1, g);
}

// True when e^{qx} is integrable against the tails of a density.
bool density_tail_finite(const DensityJumps& d, double q) {
    if (q > 0 && std::isfinite(d.right_tail_rate)) {
        if (q > d.right_tail_rate) return false;
        if (q == d.right_tail_rate && !d.finite_at_rate) return false;
    }
    if (q < 0 && std::isfinite(d.left_tail_rate)) {
        if (-q > d.left_tail_rate) return false;
        if (-q == d.left_tail_rate && !d.finite_at_rate) return false;
    }
    return true;
}

bool tail_finite(const JumpMeasure& nu, double q) {
    if (const auto* d = std::get_if<DensityJumps>(&nu)) return density_tail_finite(*d, q);
    return true;
}

}  // namespace

DensityJumps make_density(const PowerExpFamily& fam, double eps, double x_max_if_unbounded) {
    detail::require(fam.c > 0, "density family: c must be > 0");
    detail::require(fam.alpha < 2, "density family: alpha must be < 2 for int min(1,x^2) nu < inf");
    detail::require(fam.rate >= 0, "density family: rate must be >= 0");
    detail::require(fam.upper > 0, "density family: upper must be > 0");
    detail::require(fam.side == 1 || fam.side == -1, "density family: side must be +1 or -1");
    detail::require(std::isfinite(fam.upper) || fam.rate > 0,
                    "density family: unbounded support needs rate > 0");
    detail::require(eps > 0, "density: eps must be > 0");

    DensityJumps d;
    d.family = fam;
    d.eps = eps;
    d.density = [fam](double x) {
        const double u = fam.side * x;
        if (u <= 0 || u >= fam.upper) return 0.0;
        return fam.c * std::pow(u, -1.0 - fam.alpha) * std::exp(-fam.rate * u);
    };
    if (std::isfinite(fam.upper)) {
        d.x_max = fam.upper;
    } else {
        d.x_max = std::max(x_max_if_unbounded, 2 * eps);
        (fam.side > 0 ? d.right_tail_rate : d.left_tail_rate) = fam.rate;
        // c u^{-1-alpha} is integrable at infinity iff alpha > 0.
        d.finite_at_rate = fam.alpha > 0;
    }
    // Keep the small-jump region inside the support.
    d.eps = std::min(d.eps, 0.5 * d.x_max);
    return d;
}

void validate(const LevyTriple& t) {
    detail::require(std::isfinite(t.m), "triple: drift m must be finite");
    detail::require(std::isfinite(t.sigma2) && t.sigma2 >= 0, "triple: sigma2 must be >= 0");
    std::visit(overloaded{
                   [](const NoJumps&) {},
                   [](const AtomicJumps& a) {
                       for (const auto& atom : a.atoms) {
                           detail::require(std::isfinite(atom.x) && atom.x != 0,
                                           "triple: atom positions must be finite and non-zero");
                           detail::require(std::isfinite(atom.w) && atom.w > 0,
                                           "triple: atom weights must be > 0");
                       }
                   },
                   [](const DensityJumps& d) {
                       detail::require(static_cast<bool>(d.density), "triple: density is empty");
                       detail::require(d.eps > 0, "triple: density eps must be > 0");
                       detail::require(d.x_max > d.eps || d.cut >= d.x_max,
                                       "triple: density x_max must exceed eps");
                       detail::require(d.left_tail_rate >= 0 && d.right_tail_rate >= 0,
                                       "triple: tail rates must be >= 0");
                       double integral = 0.0;
                       try {
                           integral = integrate_density(
                               d, [](double x) { return std::min(1.0, x * x); });
                       } catch (const NumericalError&) {
                           throw ValidationError(
                               "triple: int min(1, x^2) nu(dx) does not converge");
                       }
                       detail::require(std::isfinite(integral),
                                       "triple: int min(1, x^2) nu(dx) is infinite");
                   },
               },
               t.nu);
}

double jump_exponent(const JumpMeasure& nu, double q) {
    if (!tail_finite(nu, q)) return kInf;
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [q](const AtomicJumps& a) {
                              double s = 0.0;
                              for (const auto& atom : a.atoms) s += atom.w * lk_integrand(q, atom.x);
                              return s;
                          },
                          [q](const DensityJumps& d) {
                              if (q == 0.0) return 0.0;
                              return integrate_density(
                                  d, [q](double x) { return lk_integrand(q, x); });
                          },
                      },
                      nu);
}

double psi(const LevyTriple& t, double q) {
    detail::require(t.sigma2 >= 0, "psi: sigma2 must be >= 0");
    const double gauss = t.m * q + 0.5 * t.sigma2 * q * q;
    if (t.is_gaussian()) return gauss;
    const double j = jump_exponent(t.nu, q);
    if (!std::isfinite(j)) return kInf;
    return gauss + j;
}

double zeta(const LevyTriple& t, double q) {
    const double p = psi(t, q);
    if (!std::isfinite(p)) return -kInf;
    return q - p;
}

double sin_compensator(const JumpMeasure& nu) {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [](const AtomicJumps& a) {
                              double s = 0.0;
                              for (const auto& atom : a.atoms) s += atom.w * std::sin(atom.x);
                              return s;
                          },
                          [](const DensityJumps& d) {
                              return integrate_density(d, [](double x) { return std::sin(x); });
                          },
                      },
                      nu);
}

double total_mass(const JumpMeasure& nu) {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [](const AtomicJumps& a) {
                              double s = 0.0;
                              for (const auto& atom : a.atoms) s += atom.w;
                              return s;
                          },
                          [](const DensityJumps& d) {
                              if (d.cut <= 0 && d.family && d.family->alpha >= 0) return kInf;
                              try {
                                  return integrate_density(d, [](double) { return 1.0; });
                              } catch (const NumericalError&) {
                                  return kInf;
                              }
                          },
                      },
                      nu);
}

LevyTriple normalize(double sigma2, JumpMeasure nu) {
    LevyTriple t;
    t.sigma2 = sigma2;
    t.nu = std::move(nu);
    validate(t);
    const double j = jump_exponent(t.nu, 1.0);
    if (!std::isfinite(j)) throw ValidationError("cannot normalize: int e^x nu(dx) diverges");
    t.m = -0.5 * sigma2 - j;
    return t;
}

LevyTriple lognormal(double sigma2) { return normalize(sigma2, NoJumps{}); }

double critical_moment(const LevyTriple& t) {
    const auto* d = std::get_if<DensityJumps>(&t.nu);
    if (!d) return kInf;
    auto finite = [&](double q) { return density_tail_finite(*d, q); };
    double hi = 1e6;
    if (finite(hi)) return kInf;
    double lo = 0.0;
    while (hi - lo > 1e-6 * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        (finite(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

NondegeneracyCheck check_nondegenerate(const LevyTriple& t) {
    NondegeneracyCheck out;
    out.negative_moments_finite = std::isfinite(psi(t, -1.0));
    const double q_c = critical_moment(t);
    if (q_c <= 1.0) return out;
    const double top = std::min(q_c, 3.0);
    constexpr int kSteps = 400;
    for (int i = 1; i <= kSteps; ++i) {
        const double q = 1.0 + (top - 1.0) * i / kSteps;
        const double z = zeta(t, q);
        if (std::isfinite(z) && z > 1.0 + 1e-12) {
            out.nondegenerate = true;
            out.witness_eps = q - 1.0;
            out.witness_zeta = z;
            return out;
        }
    }
    return out;
}

ExponentTable exponent_table(const LevyTriple& t, std::vector<double> qs) {
    std::sort(qs.begin(), qs.end());
    ExponentTable tab;
    tab.q_c = critical_moment(t);
    tab.qs = std::move(qs);
    tab.psi_vals.reserve(tab.qs.size());
    tab.zeta_vals.reserve(tab.qs.size());
    for (double q : tab.qs) {
        const double p = psi(t, q);
        tab.psi_vals.push_back(p);
        tab.zeta_vals.push_back(std::isfinite(p) ? q - p : -kInf);
    }
    return tab;
}

SmallJumpSplit small_jump_split(const JumpMeasure& nu, double eps) {
    detail::require(eps > 0, "small_jump_split: eps must be > 0");
    SmallJumpSplit out;
    std::visit(overloaded{
                   [&](const NoJumps&) { out.finite_nu = NoJumps{}; },
                   [&](const AtomicJumps& a) {
                       AtomicJumps kept;
                       for (const auto& atom : a.atoms) {
                           if (std::abs(atom.x) >= eps) {
                               kept.atoms.push_back(atom);
                           } else {
                               out.compensating_sigma2 += atom.w * atom.x * atom.x;
                               out.drift_correction += atom.w * (atom.x - std::sin(atom.x));
                           }
                       }
                       out.finite_nu = std::move(kept);
                   },
                   [&](const DensityJumps& d) {
                       DensityJumps small = d;
                       small.eps = std::min(eps, d.x_max);
                       small.x_max = small.eps;
                       small.left_tail_rate = kInf;
                       small.right_tail_rate = kInf;
                       double x2 = 0.0, corr = 0.0;
                       try {
                           x2 = integrate_density(small, [](double x) { return x * x; });
                           corr = integrate_density(small, [](double x) {
                               // x - sin x, series near 0
                               const double x2l = x * x;
                               if (std::abs(x) < 1e-2)
                                   return x * x2l * (1.0 / 6 - x2l * (1.0 / 120 - x2l / 5040));
                               return x - std::sin(x);
                           });
                       } catch (const NumericalError&) {
                           throw ValidationError(
                               "small_jump_split: int_{|x|<eps} x^2 nu(dx) does not converge");
                       }
                       if (!std::isfinite(x2))
                           throw ValidationError("small_jump_split: x^2 not integrable near 0");
                       out.compensating_sigma2 = x2;
                       out.drift_correction = corr;
                       DensityJumps big = d;
                       big.cut = std::max(d.cut, eps);
                       big.eps = std::max(d.cut, eps);
                       out.finite_nu = std::move(big);
                   },
               },
               nu);
    return out;
}

std::string describe(const LevyTriple& t) {
    std::ostringstream os;
    os.precision(17);
    os << "m=" << t.m << " sigma2=" << t.sigma2 << " nu=";
    std::visit(overloaded{
                   [&](const NoJumps&) { os << "none"; },
                   [&](const AtomicJumps& a) {
                       os << "atoms[";
                       for (std::size_t i = 0; i < a.atoms.size(); ++i)
                           os << (i ? "," : "") << a.atoms[i].x << ":" << a.atoms[i].w;
                       os << "]";
                   },
                   [&](const DensityJumps& d) {
                       os << "density(eps=" << d.eps << ",x_max=" << d.x_max << ",cut=" << d.cut;
                       if (d.family)
                           os << ",c=" << d.family->c << ",alpha=" << d.family->alpha
                              << ",rate=" << d.family->rate << ",upper=" << d.family->upper
                              << ",side=" << d.family->side;
                       os << ")";
                   },
               },
               t.nu);
    return os.str();
}

}  // namespace mrm
