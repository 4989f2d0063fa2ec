#include "mrm/field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "binary_io.hpp"
#include "mrm/errors.hpp"
#include "mrm/stats.hpp"

namespace mrm {

std::vector<double> UniformGrid::points() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = at(i);
    return out;
}

UniformGrid midpoint_grid(double length, std::size_t n) {
    detail::require(length > 0 && n > 0, "midpoint_grid: need length > 0 and n > 0");
    const double h = length / static_cast<double>(n);
    return {0.5 * h, h, n};
}

std::string_view to_string(FieldMethod m) {
    switch (m) {
        case FieldMethod::GaussianExact: return "gaussian-exact";
        case FieldMethod::PoissonExact: return "poisson-exact";
        case FieldMethod::TruncatedGeneral: return "truncated-general";
    }
    return "unknown";
}

FieldMethod field_method_from_string(std::string_view s) {
    if (s == "gaussian-exact") return FieldMethod::GaussianExact;
    if (s == "poisson-exact") return FieldMethod::PoissonExact;
    if (s == "truncated-general") return FieldMethod::TruncatedGeneral;
    throw ValidationError("unknown field method: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Jump sizes

namespace {
double mass_of_density(const DensityJumps& d) { return total_mass(JumpMeasure{d}); }
}  // namespace

JumpSampler::JumpSampler(const JumpMeasure& nu) {
    if (std::holds_alternative<NoJumps>(nu)) return;
    if (const auto* a = std::get_if<AtomicJumps>(&nu)) {
        atomic_ = true;
        auto atoms = a->atoms;
        std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.x < q.x; });
        for (const auto& atom : atoms) {
            mass_ += atom.w;
            nodes_.push_back(atom.x);
            cdf_.push_back(mass_);
        }
        return;
    }
    const auto& d = std::get<DensityJumps>(nu);
    if (!std::isfinite(mass_of_density(d)))
        throw ValidationError("JumpSampler: density has infinite mass; split small jumps first");
    // Mass below 1e-9 x_max is dropped when the density reaches 0.
    const double lower = d.cut > 0 ? d.cut : 1e-9 * d.x_max;
    constexpr std::size_t kNodes = 2048;
    auto side_nodes = [&](int sign) {
        const double rate = sign > 0 ? d.right_tail_rate : d.left_tail_rate;
        const double hi = std::isfinite(rate) ? d.x_max + 40.0 / std::max(rate, 1e-3) : d.x_max;
        std::vector<double> u(kNodes);
        const double lr = std::log(hi / lower);
        for (std::size_t i = 0; i < kNodes; ++i)
            u[i] = lower * std::exp(lr * static_cast<double>(i) / (kNodes - 1));
        return u;
    };
    const auto pos = side_nodes(+1);
    const auto neg = side_nodes(-1);
    for (auto it = neg.rbegin(); it != neg.rend(); ++it) nodes_.push_back(-*it);
    for (double u : pos) nodes_.push_back(u);
    cdf_.assign(nodes_.size(), 0.0);
    using boost::math::quadrature::gauss_kronrod;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const double a = nodes_[i - 1], b = nodes_[i];
        double seg = 0.0;
        if (!(a < 0 && b > 0))  // skip the gap (-cut, cut)
            seg = gauss_kronrod<double, 15>::integrate(d.density, a, b, 0);
        cdf_[i] = cdf_[i - 1] + std::max(seg, 0.0);
    }
    mass_ = cdf_.back();
    detail::require(std::isfinite(mass_), "JumpSampler: jump measure mass is not finite");
}

double JumpSampler::operator()(Engine& rng) const {
    if (mass_ <= 0) throw ValidationError("JumpSampler: empty jump measure");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * mass_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    const auto k = static_cast<std::size_t>(it - cdf_.begin());
    if (atomic_) return nodes_[k];
    if (k == 0) return nodes_[0];
    const double c0 = cdf_[k - 1], c1 = cdf_[k];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return nodes_[k - 1] + frac * (nodes_[k] - nodes_[k - 1]);
}

namespace {

PointCloud draw_cloud(double s_min, double s_max, const ConeParams& cone, const JumpSampler& jumps,
                      Engine& rng) {
    PointCloud cloud;
    cloud.s_min = s_min;
    cloud.s_max = s_max;
    cloud.expected_count = (s_max - s_min) * jumps.total_mass() / cone.l;
    if (cloud.expected_count <= 0) return cloud;
    std::poisson_distribution<long long> count(cloud.expected_count);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto n = count(rng);
    cloud.points.reserve(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) {
        PointCloud::Point p{};
        p.s = s_min + (s_max - s_min) * unif(rng);
        p.y = cone.l / (1.0 - unif(rng));  // U in (0, 1]
        p.x = jumps(rng);
        cloud.points.push_back(p);
    }
    return cloud;
}

}  // namespace

PointCloud sample_poisson_points(double s_min, double s_max, const ConeParams& cone,
                                 const JumpMeasure& finite_nu, std::uint64_t seed) {
    validate(cone);
    detail::require(s_max >= s_min, "sample_poisson_points: empty window");
    Engine rng(seed);
    return draw_cloud(s_min, s_max, cone, JumpSampler(finite_nu), rng);
}

namespace {

// Adds sum over points in A_l(t_i) of x to values[i] via a difference array.
void add_cloud(const UniformGrid& grid, const PointCloud& cloud, const ConeParams& cone,
               std::span<double> values) {
    const auto n = static_cast<long long>(grid.n);
    std::vector<double> diff(grid.n + 1, 0.0);
    for (const auto& p : cloud.points) {
        if (p.y < cone.l) continue;
        const double half = 0.5 * cone_width(p.y, cone.T);
        auto lo = static_cast<long long>(std::ceil((p.s - half - grid.origin) / grid.spacing));
        auto hi = static_cast<long long>(std::floor((p.s + half - grid.origin) / grid.spacing));
        lo = std::max(lo, 0LL);
        hi = std::min(hi, n - 1);
        if (lo > hi) continue;
        diff[static_cast<std::size_t>(lo)] += p.x;
        diff[static_cast<std::size_t>(hi + 1)] -= p.x;
    }
    double run = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        run += diff[i];
        values[i] += run;
    }
}

double theta_of(const ConeParams& cone) { return cone_mass(cone); }

}  // namespace

EffectiveTriple effective_triple(const LevyTriple& triple, FieldMethod method, double jump_eps) {
    validate(triple);
    EffectiveTriple eff;
    eff.m = triple.m;
    eff.sigma2 = triple.sigma2;
    switch (method) {
        case FieldMethod::GaussianExact:
            if (!triple.is_gaussian())
                throw ValidationError("gaussian-exact method requires nu = none");
            break;
        case FieldMethod::PoissonExact: {
            const double mass = total_mass(triple.nu);
            if (!std::isfinite(mass))
                throw ValidationError(
                    "poisson-exact method requires a finite jump measure; use truncated-general");
            eff.finite_nu = triple.nu;
            break;
        }
        case FieldMethod::TruncatedGeneral: {
            const auto split = small_jump_split(triple.nu, jump_eps);
            eff.finite_nu = split.finite_nu;
            eff.sigma2 += split.compensating_sigma2;
            eff.m += split.drift_correction;
            break;
        }
    }
    eff.sin_comp = sin_compensator(eff.finite_nu);
    return eff;
}

// ---------------------------------------------------------------------------
// FieldSampler

FieldSampler::FieldSampler(UniformGrid grid, ConeParams cone, LevyTriple triple,
                           FieldMethod method, FieldOptions options)
    : grid_(grid), cone_(cone), triple_(std::move(triple)), method_(method) {
    validate(cone_);
    if (cone_.l > cone_.T) throw ValidationError("field: l > T is not supported");
    detail::require(grid_.n >= 1, "field: empty grid");
    detail::require(options.resolution >= 4 && options.resolution <= 16,
                    "field: resolution must lie in [4, 16]");
    if (grid_.n > 1)
        detail::require(grid_.spacing <= cone_.l / options.resolution * (1 + 1e-12),
                        "field: grid spacing must be <= l / resolution");
    eff_ = effective_triple(triple_, method_, options.jump_eps);
    theta_ = theta_of(cone_);
    if (eff_.sigma2 > 0)
        detail::require(grid_.n <= kMaxExactGrid, "field: grid exceeds the exact Cholesky cap (8192)");
    const auto pts = grid_.points();
    Eigen::MatrixXd cov = eff_.sigma2 > 0 ? overlap_covariance_matrix(pts, cone_, eff_.sigma2)
                                          : Eigen::MatrixXd::Zero(1, 1);
    if (eff_.sigma2 > 0) {
        gauss_ = GaussianSampler(cov, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid_.n),
                                                                 eff_.m * theta_));
    }
    jumps_ = JumpSampler(eff_.finite_nu);
}

double FieldSampler::window_lo() const { return grid_.at(0) - 0.5 * cone_.T; }
double FieldSampler::window_hi() const { return grid_.at(grid_.n - 1) + 0.5 * cone_.T; }

void FieldSampler::add_jumps(std::uint64_t seed, std::span<double> values) const {
    if (jumps_.total_mass() <= 0) return;
    Engine rng(derive_seed(seed, "poisson", 0));
    const PointCloud cloud = draw_cloud(window_lo(), window_hi(), cone_, jumps_, rng);
    add_cloud(grid_, cloud, cone_, values);
    const double shift = theta_ * eff_.sin_comp;
    for (double& v : values) v -= shift;
}

Field1D FieldSampler::sample(std::uint64_t seed) const {
    Field1D f;
    f.grid = grid_;
    f.cone = cone_;
    f.triple = triple_;
    f.seed = seed;
    f.method = method_;
    if (eff_.sigma2 > 0) {
        Engine rng(derive_seed(seed, "gaussian", 0));
        const Eigen::VectorXd g = gauss_.sample(rng);
        f.values.assign(g.data(), g.data() + g.size());
    } else {
        f.values.assign(grid_.n, eff_.m * theta_);
    }
    add_jumps(seed, f.values);
    return f;
}

Eigen::MatrixXd FieldSampler::sample_values(std::span<const std::uint64_t> seeds) const {
    const auto cols = static_cast<Eigen::Index>(seeds.size());
    const auto n = static_cast<Eigen::Index>(grid_.n);
    Eigen::MatrixXd out;
    if (eff_.sigma2 > 0) {
        std::vector<std::uint64_t> gs(seeds.size());
        for (std::size_t k = 0; k < seeds.size(); ++k) gs[k] = derive_seed(seeds[k], "gaussian", 0);
        out = gauss_.sample_batch(gs);
    } else {
        out = Eigen::MatrixXd::Constant(n, cols, eff_.m * theta_);
    }
    for (Eigen::Index k = 0; k < cols; ++k)
        add_jumps(seeds[static_cast<std::size_t>(k)], {out.col(k).data(), grid_.n});
    return out;
}

Field1D sample_gaussian_field(const UniformGrid& grid, const ConeParams& cone,
                              const LevyTriple& triple, std::uint64_t seed, FieldOptions options) {
    return FieldSampler(grid, cone, triple, FieldMethod::GaussianExact, options).sample(seed);
}

Field1D assemble_omega(const UniformGrid& grid, const PointCloud& cloud, const ConeParams& cone,
                       const LevyTriple& triple, std::uint64_t seed) {
    validate(cone);
    validate(triple);
    detail::require(grid.n >= 1, "assemble_omega: empty grid");
    if (cone.l > cone.T) throw ValidationError("assemble_omega: l > T is not supported");
    const double need_lo = grid.at(0) - 0.5 * cone.T;
    const double need_hi = grid.at(grid.n - 1) + 0.5 * cone.T;
    if (cloud.s_min > need_lo + 1e-12 * cone.T || cloud.s_max < need_hi - 1e-12 * cone.T)
        throw ValidationError("assemble_omega: point window does not cover every cone of the grid");
    const double theta = cone_mass(cone);
    Field1D f;
    f.grid = grid;
    f.cone = cone;
    f.triple = triple;
    f.seed = seed;
    f.method = FieldMethod::PoissonExact;
    if (triple.sigma2 > 0) {
        detail::require(grid.n <= kMaxExactGrid, "assemble_omega: grid exceeds the Cholesky cap");
        const GaussianSampler g(overlap_covariance_matrix(grid.points(), cone, triple.sigma2),
                                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.n),
                                                          triple.m * theta));
        Engine rng(derive_seed(seed, "gaussian", 0));
        const Eigen::VectorXd v = g.sample(rng);
        f.values.assign(v.data(), v.data() + v.size());
    } else {
        f.values.assign(grid.n, triple.m * theta);
    }
    add_cloud(grid, cloud, cone, f.values);
    const double shift = theta * sin_compensator(triple.nu);
    for (double& v : f.values) v -= shift;
    return f;
}

double sample_id_variable(const EffectiveTriple& eff, const JumpSampler& jumps, double theta,
                          Engine& rng) {
    detail::require(theta >= 0, "sample_id_variable: theta must be >= 0");
    std::normal_distribution<double> normal(0.0, 1.0);
    double v = eff.m * theta + std::sqrt(eff.sigma2 * theta) * normal(rng);
    const double rate = theta * jumps.total_mass();
    if (rate > 0) {
        std::poisson_distribution<long long> count(rate);
        const auto n = count(rng);
        for (long long k = 0; k < n; ++k) v += jumps(rng);
    }
    return v - theta * eff.sin_comp;
}

// ---------------------------------------------------------------------------
// Scale invariance

ScaleInvarianceReport scale_invariance_check(const ConeParams& cone, const LevyTriple& triple,
                                             double lambda, std::size_t replicas,
                                             std::uint64_t seed, FieldOptions options) {
    validate(cone);
    detail::require(lambda > 0 && lambda <= 1, "scale_invariance_check: lambda must lie in (0, 1]");
    detail::require(cone.l <= cone.T, "scale_invariance_check: need l <= T");
    ScaleInvarianceReport rep;
    rep.lambda = lambda;
    const double log_inv = std::log(1.0 / lambda);
    rep.expected_gap = triple.sigma2 * log_inv;

    // Analytic covariance gap on [0, T].
    const ConeParams small{lambda * cone.l, cone.T};
    constexpr std::size_t kPts = 65;
    std::vector<double> t(kPts), ts(kPts);
    for (std::size_t i = 0; i < kPts; ++i) {
        t[i] = cone.T * static_cast<double>(i) / (kPts - 1);
        ts[i] = lambda * t[i];
    }
    const Eigen::MatrixXd c_big = overlap_covariance_matrix(t, cone, triple.sigma2);
    const Eigen::MatrixXd c_small = overlap_covariance_matrix(ts, small, triple.sigma2);
    const Eigen::MatrixXd gap = c_small - c_big;
    rep.max_variance_gap_error =
        (gap.diagonal().array() - rep.expected_gap).abs().maxCoeff();
    rep.max_covariance_gap_error = (gap.array() - rep.expected_gap).abs().maxCoeff();
    const double tol = 1e-12 * std::max(1.0, triple.sigma2);
    rep.pass = rep.max_variance_gap_error <= tol && rep.max_covariance_gap_error <= tol;

    if (triple.is_gaussian() || replicas < 10) return rep;

    // Two-sample moment comparison for the jump part.
    const FieldMethod method = std::isfinite(total_mass(triple.nu)) ? FieldMethod::PoissonExact
                                                                    : FieldMethod::TruncatedGeneral;
    constexpr std::size_t kGrid = 16;
    const double h = cone.l / options.resolution;
    const FieldSampler big({0.0, h, kGrid}, cone, triple, method, options);
    const FieldSampler little({0.0, lambda * h, kGrid}, small, triple, method, options);
    const JumpSampler omega_jumps(big.effective().finite_nu);

    std::vector<double> lhs_pt(replicas), rhs_pt(replicas), lhs_inc(replicas), rhs_inc(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
        const Field1D a = little.sample(derive_seed(seed, "scale-lhs", r));
        const Field1D b = big.sample(derive_seed(seed, "scale-rhs", r));
        Engine rng(derive_seed(seed, "scale-omega", r));
        const double omega = sample_id_variable(big.effective(), omega_jumps, log_inv, rng);
        lhs_pt[r] = a.values.front();
        rhs_pt[r] = omega + b.values.front();
        lhs_inc[r] = a.values.back() - a.values.front();
        rhs_inc[r] = b.values.back() - b.values.front();
    }

    auto compare = [&](const std::string& name, const std::vector<double>& x,
                       const std::vector<double>& y,
                       double (*stat)(std::span<const double>), std::uint64_t salt) {
        MomentComparison mc;
        mc.statistic = name;
        mc.lhs = stat(x);
        mc.rhs = stat(y);
        auto boot = [&](const std::vector<double>& v, std::uint64_t s) {
            return stats::bootstrap_se(
                v.size(),
                [&](std::span<const std::size_t> idx) {
                    std::vector<double> w(idx.size());
                    for (std::size_t i = 0; i < idx.size(); ++i) w[i] = v[idx[i]];
                    return stat(w);
                },
                200, derive_seed(seed, "scale-boot", s));
        };
        mc.stderr_diff = std::hypot(boot(x, 2 * salt), boot(y, 2 * salt + 1));
        mc.z = mc.stderr_diff > 0 ? (mc.lhs - mc.rhs) / mc.stderr_diff : 0.0;
        mc.pass = std::abs(mc.z) <= 5.0 || mc.lhs == mc.rhs;
        rep.pass = rep.pass && mc.pass;
        rep.moments.push_back(mc);
    };
    compare("point_mean", lhs_pt, rhs_pt, stats::mean, 0);
    compare("point_variance", lhs_pt, rhs_pt, stats::variance, 1);
    compare("point_k3", lhs_pt, rhs_pt, stats::third_cumulant, 2);
    compare("increment_mean", lhs_inc, rhs_inc, stats::mean, 3);
    compare("increment_variance", lhs_inc, rhs_inc, stats::variance, 4);
    return rep;
}

// ---------------------------------------------------------------------------
// Coupled refinement

CoupledGaussianLevels::CoupledGaussianLevels(double length, ConeParams coarse, double sigma2,
                                             std::size_t levels, double resolution)
    : length_(length), coarse_(coarse), triple_(lognormal(sigma2)) {
    validate(coarse_);
    detail::require(coarse_.l <= coarse_.T, "coupled levels: need l <= T");
    detail::require(levels >= 1, "coupled levels: need at least one level");
    detail::require(resolution >= 4 && resolution <= 16, "coupled levels: resolution in [4, 16]");
    const auto n0 = static_cast<std::size_t>(std::ceil(length * resolution / coarse_.l - 1e-9));
    std::size_t total = 0;
    for (std::size_t k = 0; k < levels; ++k) {
        grids_.push_back(midpoint_grid(length, n0 << k));
        total += n0 << k;
    }
    detail::require(total <= kMaxExactGrid, "coupled levels: union of grids exceeds 8192 points");
    index_.resize(levels);
    for (std::size_t k = 0; k < levels; ++k)
        for (std::size_t i = 0; i < grids_[k].n; ++i) {
            index_[k].push_back(points_.size());
            points_.push_back(grids_[k].at(i));
        }
    // Band b covers heights [l_b, l_{b-1}) (band 0: y >= l_0); it feeds levels >= b.
    const double T = coarse_.T;
    for (std::size_t b = 0; b < levels; ++b) {
        std::vector<std::size_t> support;
        for (std::size_t k = b; k < levels; ++k)
            support.insert(support.end(), index_[k].begin(), index_[k].end());
        const auto m = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd cov(m, m);
        const double lo = l(b);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double tau = std::abs(points_[support[i]] - points_[support[j]]);
                const double v = b == 0 ? cone_overlap({lo, T}, tau)
                                        : band_overlap(lo, l(b - 1), T, tau);
                cov(i, j) = cov(j, i) = sigma2 * v;
            }
        const double band_theta =
            b == 0 ? cone_mass({lo, T}) : cone_mass({lo, T}) - cone_mass({l(b - 1), T});
        bands_.emplace_back(cov, Eigen::VectorXd::Constant(m, triple_.m * band_theta));
        band_support_.push_back(std::move(support));
    }
}

double CoupledGaussianLevels::l(std::size_t k) const {
    return coarse_.l / static_cast<double>(std::size_t{1} << k);
}

std::vector<Field1D> CoupledGaussianLevels::sample(std::uint64_t seed) const {
    std::vector<Field1D> out(levels());
    // Running per-point sums: point p at level k accumulates bands 0..k.
    std::vector<double> value(points_.size(), 0.0);
    for (std::size_t b = 0; b < bands_.size(); ++b) {
        Engine rng(derive_seed(seed, "band", b));
        const Eigen::VectorXd draw = bands_[b].sample(rng);
        for (std::size_t i = 0; i < band_support_[b].size(); ++i)
            value[band_support_[b][i]] += draw[static_cast<Eigen::Index>(i)];
    }
    for (std::size_t k = 0; k < levels(); ++k) {
        Field1D& f = out[k];
        f.grid = grids_[k];
        f.cone = {l(k), coarse_.T};
        f.triple = triple_;
        f.seed = seed;
        f.method = FieldMethod::GaussianExact;
        f.values.reserve(grids_[k].n);
        for (std::size_t p : index_[k]) f.values.push_back(value[p]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary dump

void write_field_binary(std::ostream& os, const Field1D& f) {
    binio::put_magic(os, "MRMF1D01");
    binio::put_u64(os, f.values.size());
    binio::put_f64(os, f.cone.l);
    binio::put_f64(os, f.cone.T);
    binio::put_u64(os, f.seed);
    binio::put_u32(os, static_cast<std::uint32_t>(f.method));
    binio::put_u32(os, 0);
    binio::put_f64(os, f.grid.origin);
    binio::put_f64(os, f.grid.spacing);
    for (double v : f.values) binio::put_f64(os, v);
}

Field1D read_field_binary(std::istream& is) {
    binio::expect_magic(is, "MRMF1D01");
    Field1D f;
    const auto n = binio::get_u64(is);
    f.cone.l = binio::get_f64(is);
    f.cone.T = binio::get_f64(is);
    f.seed = binio::get_u64(is);
    const auto method = binio::get_u32(is);
    detail::require(method <= 2, "binary dump: unknown method tag");
    f.method = static_cast<FieldMethod>(method);
    binio::get_u32(is);
    f.grid.origin = binio::get_f64(is);
    f.grid.spacing = binio::get_f64(is);
    f.grid.n = n;
    f.values.resize(n);
    for (auto& v : f.values) v = binio::get_f64(is);
    return f;
}

}  // namespace mrm
