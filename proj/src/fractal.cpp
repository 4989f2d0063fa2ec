#include "mrm/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mrm/csv.hpp"
#include "mrm/errors.hpp"
#include "mrm/field.hpp"
#include "mrm/parallel.hpp"
#include "mrm/random.hpp"
#include "mrm/stats.hpp"

namespace mrm {

namespace {

constexpr double kBoxTol = 1e-9;

void finish_cover(FractalSet& s) {
    std::sort(s.cover.begin(), s.cover.end(), [](const Interval& u, const Interval& v) { return u.a < v.a; });
    s.resolution = 0.0;
    for (const auto& iv : s.cover) s.resolution = std::max(s.resolution, iv.b - iv.a);
}

std::string kind_name(SetKind k) {
    switch (k) {
        case SetKind::Cantor: return "cantor";
        case SetKind::FullInterval: return "full-interval";
        case SetKind::FinitePoints: return "finite-point-set";
        case SetKind::Image: return "image";
    }
    return "?";
}

}  // namespace

std::string FractalSet::describe() const {
    std::ostringstream os;
    os << kind_name(kind);
    if (kind == SetKind::Cantor) os << "(ratio=" << csv::num(ratio) << ",depth=" << depth << ')';
    os << " on [0," << csv::num(domain_length) << "], " << cover.size() << " intervals";
    return os.str();
}

FractalSet make_cantor(double ratio, int depth, double domain_length) {
    detail::require(ratio > 0 && ratio <= 0.5, "make_cantor: ratio must lie in (0, 1/2]");
    detail::require(depth >= 1 && depth <= 26, "make_cantor: depth must lie in [1, 26]");
    detail::require(domain_length > 0, "make_cantor: domain length must be > 0");
    FractalSet s;
    s.kind = SetKind::Cantor;
    s.ratio = ratio;
    s.depth = depth;
    s.domain_length = domain_length;
    s.delta0 = std::log(2.0) / std::log(1.0 / ratio);
    const std::size_t count = std::size_t{1} << depth;
    const double len = std::pow(ratio, depth) * domain_length;
    // Left endpoint: L * sum_k d_k (1 - r) r^{k-1}, d_k the k-th branch bit.
    std::vector<double> step(depth);
    for (int k = 0; k < depth; ++k) step[k] = (1 - ratio) * std::pow(ratio, k) * domain_length;
    s.cover.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        double a = 0.0;
        for (int k = 0; k < depth; ++k)
            if ((i >> (depth - 1 - k)) & 1u) a += step[k];
        s.cover[i] = {a, a + len};
    }
    finish_cover(s);
    return s;
}

FractalSet make_full_interval(double domain_length) {
    detail::require(domain_length > 0, "make_full_interval: length must be > 0");
    FractalSet s;
    s.kind = SetKind::FullInterval;
    s.domain_length = domain_length;
    s.delta0 = 1.0;
    s.cover = {{0.0, domain_length}};
    s.resolution = 0.0;
    return s;
}

FractalSet make_point_set(std::vector<double> points) {
    detail::require(!points.empty(), "make_point_set: empty point list");
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    detail::require(points.front() >= 0, "make_point_set: points must be >= 0");
    FractalSet s;
    s.kind = SetKind::FinitePoints;
    s.domain_length = std::max(1.0, points.back());
    s.delta0 = 0.0;
    for (double p : points) s.cover.push_back({p, p});
    s.resolution = 0.0;
    return s;
}

std::size_t box_count(const FractalSet& set, double eps) {
    detail::require(eps > 0, "box_count: eps must be > 0");
    std::size_t count = 0;
    long long last = -1;
    for (const auto& iv : set.cover) {
        const auto i0 = static_cast<long long>(std::floor(iv.a / eps + kBoxTol));
        const auto i1 = std::max(i0, static_cast<long long>(std::ceil(iv.b / eps - kBoxTol)) - 1);
        const long long from = std::max(i0, last + 1);
        if (i1 >= from) count += static_cast<std::size_t>(i1 - from + 1);
        last = std::max(last, i1);
    }
    return count;
}

DimensionEstimate box_dimension(const FractalSet& set, std::span<const double> scales,
                                DimensionMethod method) {
    detail::require(scales.size() >= 4, "box_dimension: need at least 4 scales");
    const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
    detail::require(*lo > 0, "box_dimension: scales must be > 0");
    detail::require(std::log2(*hi / *lo) >= 3.0 - 1e-9, "box_dimension: scales must span >= 3 octaves");
    detail::require(*lo >= set.resolution * (1 - 1e-12),
                    "box_dimension: scale finer than the construction scale");
    DimensionEstimate est;
    est.method = method;
    est.scale_min = *lo;
    est.scale_max = *hi;
    std::vector<double> x, y;
    for (double eps : scales) {
        const auto n = static_cast<double>(box_count(set, eps));
        est.scales.push_back(eps);
        est.counts.push_back(n);
        x.push_back(std::log(1.0 / eps));
        y.push_back(std::log(n));
    }
    const auto fit = stats::fit_line(x, y);
    est.slope = fit.slope;
    est.std_error = std::max(fit.slope_se, 1e-9);
    est.r2 = fit.r2;
    return est;
}

FractalSet rho_image(const FractalSet& set, const MeasureGrid& measure, bool normalize) {
    FractalSet img;
    img.kind = SetKind::Image;
    img.delta0 = set.delta0;
    const double total = measure.total();
    const double scale = normalize ? 1.0 / total : 1.0;
    if (normalize) detail::require(total > 0, "rho_image: zero total mass");
    img.domain_length = normalize ? 1.0 : total;
    img.cover.reserve(set.cover.size());
    for (const auto& iv : set.cover) {
        const double ra = cumulative_at(measure, measure.origin + iv.a);
        const double rb = iv.b == iv.a ? ra : cumulative_at(measure, measure.origin + iv.b);
        img.cover.push_back({ra * scale, rb * scale});
    }
    finish_cover(img);
    return img;
}

double kpz_solve_on(const std::function<double(double)>& zeta_fn, double delta0, double hi) {
    detail::require(hi > 0 && std::isfinite(hi), "kpz_solve: upper end must be finite and > 0");
    detail::require(std::abs(zeta_fn(0.0)) <= 1e-9, "kpz_solve: invalid exponent, zeta(0) != 0");
    constexpr int kSamples = 200;
    double prev = zeta_fn(0.0);
    for (int i = 1; i <= kSamples; ++i) {
        const double v = zeta_fn(hi * i / kSamples);
        if (!(v > prev)) throw ValidationError("kpz_solve: invalid exponent, zeta not increasing");
        prev = v;
    }
    detail::require(delta0 >= 0 && delta0 <= zeta_fn(hi) + 1e-12,
                    "kpz_solve: delta0 outside the range of zeta on the search interval");
    double lo = 0.0, up = hi;
    if (delta0 <= 0) return 0.0;
    if (std::abs(zeta_fn(hi) - delta0) <= 1e-12) return hi;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + up);
        const double f = zeta_fn(mid) - delta0;
        if (std::abs(f) <= 1e-12) return mid;
        (f < 0 ? lo : up) = mid;
    }
    return 0.5 * (lo + up);
}

double kpz_solve(const std::function<double(double)>& zeta_fn, double delta0) {
    detail::require(delta0 >= 0 && delta0 <= 1, "kpz_solve: delta0 must lie in [0, 1]");
    detail::require(std::abs(zeta_fn(1.0) - 1.0) <= 1e-9, "kpz_solve: invalid exponent, zeta(1) != 1");
    return kpz_solve_on(zeta_fn, delta0, 1.0);
}

KpzReport kpz_verify_1d(const FractalSet& set, const LevyTriple& triple, const ConeParams& cone,
                        std::size_t replicas, std::uint64_t seed, std::span<const double> scales,
                        const Kpz1DOptions& options) {
    validate(triple);
    validate(cone);
    detail::require(replicas >= 1, "kpz_verify_1d: need at least one replica");
    detail::require(options.tolerance > 0, "kpz_verify_1d: tolerance must be > 0");
    const bool lebesgue = triple.is_gaussian() && triple.sigma2 == 0.0;
    const auto nd = check_nondegenerate(triple);
    detail::require(lebesgue || nd.nondegenerate, "kpz_verify_1d: degenerate triple");

    KpzReport rep;
    rep.set = set.describe();
    rep.delta0 = set.delta0;
    rep.tolerance = options.tolerance;
    rep.outside_hypotheses = !lebesgue && !nd.negative_moments_finite;
    if (rep.outside_hypotheses) rep.notes.push_back("outside theorem hypotheses: psi(-q) infinite for some q in [0,1]");
    if (set.kind != SetKind::Cantor && set.kind != SetKind::FullInterval && set.kind != SetKind::FinitePoints)
        rep.notes.push_back("box-dimension only");
    rep.delta_pred = lebesgue ? set.delta0
                              : kpz_solve([&](double q) { return zeta(triple, q); }, set.delta0);

    const double length = set.domain_length;
    const auto n = static_cast<std::size_t>(std::ceil(length * options.estimator.field.resolution / cone.l - 1e-9));
    const FieldSampler sampler(midpoint_grid(length, n), cone, triple, default_method(triple),
                               options.estimator.field);
    rep.replicas.resize(replicas);
    const std::size_t batch = std::max<std::size_t>(1, options.estimator.batch);
    const std::size_t batches = (replicas + batch - 1) / batch;
    parallel_for(batches, options.estimator.threads, [&](std::size_t b) {
        const std::size_t lo = b * batch, hi = std::min(replicas, lo + batch);
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = lo; r < hi; ++r) seeds.push_back(derive_seed(seed, "replica", r));
        const Eigen::MatrixXd vals = sampler.sample_values(seeds);
        for (std::size_t r = lo; r < hi; ++r) {
            auto& out = rep.replicas[r];
            out.replica = r;
            const MeasureGrid m = build_measure(sampler.grid(), {vals.col(static_cast<Eigen::Index>(r - lo)).data(), n});
            if (!(m.total() >= 1e-12 * length)) {
                out.discarded = true;
                out.estimate = out.std_error = std::nan("");
                continue;
            }
            const auto est = box_dimension(rho_image(set, m, true), scales, DimensionMethod::RhoBox);
            out.estimate = est.slope;
            out.std_error = est.std_error;
        }
    });

    summarize_replicas(rep);
    return rep;
}

void summarize_replicas(KpzReport& rep) {
    std::vector<double> kept;
    rep.discarded = 0;
    for (const auto& r : rep.replicas) {
        if (r.discarded) ++rep.discarded;
        else kept.push_back(r.estimate);
    }
    rep.too_many_discarded =
        static_cast<double>(rep.discarded) > 0.05 * static_cast<double>(rep.replicas.size());
    if (kept.empty() || !std::isfinite(rep.delta_pred)) {
        rep.mean = kept.empty() ? std::nan("") : stats::mean(kept);
        rep.std_error = kept.size() >= 2 ? stats::stderr_mean(kept) : std::nan("");
        rep.pass = false;
        return;
    }
    rep.mean = stats::mean(kept);
    rep.std_error = kept.size() >= 2 ? stats::stderr_mean(kept) : 0.0;
    rep.pass = !rep.too_many_discarded &&
               std::abs(rep.mean - rep.delta_pred) <= std::max(rep.tolerance, 3 * rep.std_error);
}

CapacityEstimate capacity_probe(const FractalSet& set, double s, std::size_t n_samples,
                                std::uint64_t seed) {
    detail::require(s >= 0 && std::isfinite(s), "capacity_probe: s must be >= 0");
    detail::require(n_samples >= 2, "capacity_probe: need at least 2 samples");
    detail::require(!set.cover.empty(), "capacity_probe: empty set");
    CapacityEstimate est;
    est.samples = n_samples;
    if (s == 0.0) {
        est.value = 1.0;
        return est;
    }
    detail::require(set.kind != SetKind::FinitePoints,
                    "capacity_probe: atomic measure has infinite energy for s > 0");
    Engine rng(derive_seed(seed, "capacity", 0));
    std::uniform_int_distribution<std::size_t> branch(0, set.cover.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&] {
        const auto& iv = set.cover[branch(rng)];
        return iv.a + (iv.b - iv.a) * unit(rng);
    };
    std::vector<double> v(n_samples);
    for (auto& out : v) {
        double x = draw(), y = draw();
        for (int tries = 0; x == y; ++tries) {
            if (tries > 100) throw NumericalError("capacity_probe: repeated coincident samples");
            x = draw();
            y = draw();
        }
        out = std::pow(std::abs(x - y), -s);
    }
    est.value = stats::mean(v);
    est.std_error = stats::stderr_mean(v);
    return est;
}

void write_kpz_csv(std::ostream& os, const KpzReport& report) {
    os << "replica,dim_rho_est,stderr,discarded\n";
    for (const auto& r : report.replicas)
        os << r.replica << ',' << csv::num(r.estimate) << ',' << csv::num(r.std_error) << ','
           << (r.discarded ? 1 : 0) << '\n';
}

void write_kpz_summary(std::ostream& os, const KpzReport& report) {
    os << "set: " << report.set << '\n'
       << "delta0: " << csv::num(report.delta0) << '\n'
       << "delta_pred: " << csv::num(report.delta_pred) << '\n'
       << "replicas: " << report.replicas.size() << '\n'
       << "discarded: " << report.discarded << '\n'
       << "mean: " << csv::num(report.mean) << '\n'
       << "stderr: " << csv::num(report.std_error) << '\n'
       << "tolerance: " << csv::num(report.tolerance) << '\n'
       << "pass: " << (report.pass ? "true" : "false") << '\n';
    for (const auto& note : report.notes) os << "note: " << note << '\n';
}

}  // namespace mrm
