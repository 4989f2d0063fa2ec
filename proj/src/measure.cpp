#include "mrm/measure.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mrm/csv.hpp"
#include "mrm/errors.hpp"
#include "mrm/parallel.hpp"
#include "mrm/stats.hpp"

namespace mrm {

MeasureGrid build_measure(const UniformGrid& centres, std::span<const double> values) {
    detail::require(centres.n == values.size() && centres.n > 0,
                    "build_measure: field/grid size mismatch");
    detail::require(centres.spacing > 0, "build_measure: grid spacing must be > 0");
    MeasureGrid m;
    m.origin = centres.origin - 0.5 * centres.spacing;
    m.spacing = centres.spacing;
    m.masses.resize(values.size());
    m.cumulative.resize(values.size() + 1);
    m.cumulative[0] = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw NumericalError("build_measure: non-finite field value");
        m.masses[i] = std::exp(values[i]) * m.spacing;
        m.cumulative[i + 1] = m.cumulative[i] + m.masses[i];
    }
    return m;
}

MeasureGrid build_measure(const Field1D& field) { return build_measure(field.grid, field.values); }

double cumulative_at(const MeasureGrid& m, double x) {
    const double tol = 1e-12 * std::max(1.0, std::abs(m.end()));
    if (x < m.origin - tol || x > m.end() + tol) throw DomainError("rho: point outside the measure domain");
    const double u = std::clamp((x - m.origin) / m.spacing, 0.0, static_cast<double>(m.cells()));
    const auto k = std::min(static_cast<std::size_t>(u), m.cells() - 1);
    const double frac = u - static_cast<double>(k);
    return m.cumulative[k] + frac * m.masses[k];
}

double rho(const MeasureGrid& m, double x, double y) {
    if (x > y) throw DomainError("rho: need x <= y");
    if (x == y) {
        cumulative_at(m, x);  // domain check
        return 0.0;
    }
    return cumulative_at(m, y) - cumulative_at(m, x);
}

FieldMethod default_method(const LevyTriple& triple) {
    if (triple.is_gaussian()) return FieldMethod::GaussianExact;
    if (std::isfinite(total_mass(triple.nu))) return FieldMethod::PoissonExact;
    return FieldMethod::TruncatedGeneral;
}

namespace {

std::size_t cells_for(double length, double l, double resolution) {
    return static_cast<std::size_t>(std::ceil(length * resolution / l - 1e-9));
}

// Mean of M([a, a + t])^q over block starts a = j * stride.
double window_moment(const MeasureGrid& m, double t, double q, double stride, std::size_t blocks) {
    if (q == 0.0) return 1.0;
    double s = 0.0;
    for (std::size_t j = 0; j < blocks; ++j) {
        const double a = m.origin + stride * static_cast<double>(j);
        const double hi = std::min(a + t, m.end());
        s += std::pow(cumulative_at(m, hi) - cumulative_at(m, a), q);
    }
    return s / static_cast<double>(blocks);
}

}  // namespace

std::vector<MomentScalingFit> estimate_zeta(const LevyTriple& triple, const ConeParams& cone,
                                            std::span<const double> qs,
                                            std::span<const double> scales,
                                            std::size_t replicas, std::uint64_t seed,
                                            const EstimatorOptions& options) {
    validate(triple);
    validate(cone);
    detail::require(cone.l <= cone.T, "estimate_zeta: need l <= T");
    detail::require(!qs.empty(), "estimate_zeta: empty q list");
    for (double q : qs) detail::require(q >= 0 && std::isfinite(q), "estimate_zeta: q must be >= 0");
    detail::require(scales.size() >= 4, "estimate_zeta: need at least 4 scales");
    detail::require(std::is_sorted(scales.begin(), scales.end()), "estimate_zeta: scales must be sorted");
    for (double t : scales) {
        detail::require(t <= cone.T * (1 + 1e-12), "estimate_zeta: scales must lie in (0, T]");
        detail::require(t >= 32 * cone.l * (1 - 1e-12), "estimate_zeta: scales must be >= 32 l");
    }
    detail::require(replicas >= 100, "estimate_zeta: need at least 100 replicas");

    detail::require(options.blocks >= 1, "estimate_zeta: blocks must be >= 1");
    const double stride = scales.back();
    const double length = stride * static_cast<double>(options.blocks);
    const std::size_t n = cells_for(length, cone.l, options.field.resolution);
    const FieldSampler sampler(midpoint_grid(length, n), cone, triple, default_method(triple),
                               options.field);

    const std::size_t nq = qs.size(), ns = scales.size();
    // per_rep[(iq * ns + is) * replicas + r]
    std::vector<double> per_rep(nq * ns * replicas);
    const std::size_t batch = std::max<std::size_t>(1, options.batch);
    const std::size_t batches = (replicas + batch - 1) / batch;
    parallel_for(batches, options.threads, [&](std::size_t b) {
        const std::size_t lo = b * batch, hi = std::min(replicas, lo + batch);
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = lo; r < hi; ++r) seeds.push_back(derive_seed(seed, "replica", r));
        const Eigen::MatrixXd vals = sampler.sample_values(seeds);
        for (std::size_t r = lo; r < hi; ++r) {
            const auto col = static_cast<Eigen::Index>(r - lo);
            const MeasureGrid m = build_measure(sampler.grid(), {vals.col(col).data(), n});
            for (std::size_t iq = 0; iq < nq; ++iq)
                for (std::size_t is = 0; is < ns; ++is)
                    per_rep[(iq * ns + is) * replicas + r] = window_moment(m, scales[is], qs[iq], stride, options.blocks);
        }
    });

    std::vector<double> x(ns);
    for (std::size_t is = 0; is < ns; ++is) x[is] = std::log(scales[is] / cone.T);

    std::vector<MomentScalingFit> fits;
    for (std::size_t iq = 0; iq < nq; ++iq) {
        MomentScalingFit fit;
        fit.q = qs[iq];
        fit.scales.assign(scales.begin(), scales.end());
        fit.replicas = replicas;
        fit.analytic_zeta = zeta(triple, fit.q);
        fit.reliable = fit.q <= 1.0 || fit.analytic_zeta > 1.0;

        auto log_means_for = [&](std::span<const std::size_t> idx) {
            std::vector<double> out(ns);
            for (std::size_t is = 0; is < ns; ++is) {
                const double* v = &per_rep[(iq * ns + is) * replicas];
                double s = 0.0;
                for (std::size_t r : idx) s += v[r];
                out[is] = std::log(s / static_cast<double>(idx.size()));
            }
            return out;
        };
        std::vector<std::size_t> all(replicas);
        for (std::size_t r = 0; r < replicas; ++r) all[r] = r;
        fit.log_means = log_means_for(all);

        // Bootstrap over replicas: per-scale errors first, then the slope
        // under the resulting weights.
        const std::size_t nb = options.bootstrap;
        Engine rng(derive_seed(seed, "zeta-bootstrap", iq));
        std::uniform_int_distribution<std::size_t> pick(0, replicas - 1);
        std::vector<std::vector<double>> boot(nb);
        std::vector<std::size_t> idx(replicas);
        for (std::size_t b = 0; b < nb; ++b) {
            for (auto& i : idx) i = pick(rng);
            boot[b] = log_means_for(idx);
        }
        fit.stderrs.assign(ns, 0.0);
        for (std::size_t is = 0; is < ns; ++is) {
            std::vector<double> col(nb);
            for (std::size_t b = 0; b < nb; ++b) col[b] = boot[b][is];
            fit.stderrs[is] = nb >= 2 ? std::sqrt(stats::variance(col)) : 0.0;
        }
        std::vector<double> w(ns);
        for (std::size_t is = 0; is < ns; ++is) {
            const double se = std::max(fit.stderrs[is], 1e-12);
            w[is] = 1.0 / (se * se);
        }
        const auto lf = stats::fit_line_weighted(x, fit.log_means, w);
        fit.slope = lf.slope;
        fit.intercept = lf.intercept;
        fit.r2 = lf.r2;
        if (nb >= 2) {
            std::vector<double> slopes(nb);
            for (std::size_t b = 0; b < nb; ++b) slopes[b] = stats::fit_line_weighted(x, boot[b], w).slope;
            fit.slope_se = std::sqrt(stats::variance(slopes));
        }
        fits.push_back(std::move(fit));
    }
    return fits;
}

MomentScalingFit estimate_zeta(const LevyTriple& triple, const ConeParams& cone, double q,
                               std::span<const double> scales, std::size_t replicas,
                               std::uint64_t seed, const EstimatorOptions& options) {
    const double qs[] = {q};
    return estimate_zeta(triple, cone, qs, scales, replicas, seed, options).front();
}

GlobalScalingReport global_scaling_check(const LevyTriple& triple, const ConeParams& cone,
                                         double lambda, double q, std::size_t replicas,
                                         std::uint64_t seed, const EstimatorOptions& options) {
    validate(triple);
    validate(cone);
    detail::require(lambda > 0 && lambda <= 1, "global_scaling_check: lambda must lie in (0, 1]");
    detail::require(replicas >= 2, "global_scaling_check: need at least 2 replicas");
    GlobalScalingReport rep;
    rep.lambda = lambda;
    rep.q = q;
    const double z_q = zeta(triple, q);
    detail::require(std::isfinite(z_q), "global_scaling_check: zeta(q) must be finite");
    rep.predicted = std::pow(lambda, z_q);

    const std::size_t n = cells_for(cone.T, cone.l, options.field.resolution);
    const UniformGrid big_grid = midpoint_grid(cone.T, n);
    const UniformGrid small_grid{lambda * big_grid.origin, lambda * big_grid.spacing, n};
    const FieldMethod method = default_method(triple);
    const FieldSampler big(big_grid, cone, triple, method, options.field);
    const FieldSampler small(small_grid, {lambda * cone.l, cone.T}, triple, method, options.field);

    std::vector<double> a(replicas), b(replicas);
    const std::size_t batch = std::max<std::size_t>(1, options.batch);
    const std::size_t batches = (replicas + batch - 1) / batch;
    parallel_for(batches, options.threads, [&](std::size_t k) {
        const std::size_t lo = k * batch, hi = std::min(replicas, lo + batch);
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = lo; r < hi; ++r) seeds.push_back(derive_seed(seed, "replica", r));
        const Eigen::MatrixXd vs = small.sample_values(seeds);
        const Eigen::MatrixXd vb = big.sample_values(seeds);
        for (std::size_t r = lo; r < hi; ++r) {
            const auto c = static_cast<Eigen::Index>(r - lo);
            a[r] = std::pow(build_measure(small_grid, {vs.col(c).data(), n}).total(), q);
            b[r] = std::pow(build_measure(big_grid, {vb.col(c).data(), n}).total(), q);
        }
    });
    rep.lhs_mean = stats::mean(a);
    rep.rhs_mean = stats::mean(b);
    rep.ratio = rep.lhs_mean / rep.rhs_mean;
    rep.ratio_se = stats::bootstrap_se(
        replicas,
        [&](std::span<const std::size_t> idx) {
            double sa = 0, sb = 0;
            for (std::size_t i : idx) {
                sa += a[i];
                sb += b[i];
            }
            return sa / sb;
        },
        std::max<std::size_t>(options.bootstrap, 2), derive_seed(seed, "global-bootstrap", 0));
    rep.z = rep.ratio_se > 0 ? (rep.ratio - rep.predicted) / rep.ratio_se : 0.0;
    rep.pass = rep.ratio == rep.predicted || std::abs(rep.z) <= 5.0;
    return rep;
}

AtomlessnessReport atomlessness_probe(std::span<const MeasureGrid> refinements) {
    detail::require(refinements.size() >= 3, "atomlessness_probe: need at least 3 refinement levels");
    AtomlessnessReport rep;
    for (const auto& m : refinements) {
        detail::require(!m.masses.empty(), "atomlessness_probe: empty measure");
        rep.max_cell_mass.push_back(*std::max_element(m.masses.begin(), m.masses.end()));
    }
    for (std::size_t k = 1; k < rep.max_cell_mass.size(); ++k)
        if (!(rep.max_cell_mass[k] < rep.max_cell_mass[k - 1])) rep.decreasing = false;
    return rep;
}

AtomlessnessReport atomlessness_trial(double length, const ConeParams& coarse, double sigma2,
                                      std::size_t levels, std::uint64_t seed) {
    const CoupledGaussianLevels coupled(length, coarse, sigma2, levels);
    std::vector<MeasureGrid> ms;
    for (const auto& f : coupled.sample(seed)) ms.push_back(build_measure(f));
    return atomlessness_probe(ms);
}

void write_moment_csv(std::ostream& os, std::span<const MomentScalingFit> fits) {
    os << "q,t,log_mean,stderr,n_rep\n";
    for (const auto& f : fits) {
        for (std::size_t i = 0; i < f.scales.size(); ++i)
            os << csv::num(f.q) << ',' << csv::num(f.scales[i]) << ',' << csv::num(f.log_means[i])
               << ',' << csv::num(f.stderrs[i]) << ',' << f.replicas << '\n';
        os << csv::num(f.q) << ",fit," << csv::num(f.slope) << ',' << csv::num(f.slope_se) << ','
           << f.replicas << '\n';
    }
}

}  // namespace mrm
