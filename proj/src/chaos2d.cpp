#include "mrm/chaos2d.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "mrm/csv.hpp"
#include "mrm/errors.hpp"
#include "mrm/parallel.hpp"
#include "mrm/random.hpp"
#include "mrm/stats.hpp"

namespace mrm {

double lognormal_kernel(Point2 x, Point2 y, double l, double gamma2, double R) {
    detail::require(l > 0 && l <= R, "lognormal_kernel: need 0 < l <= R");
    detail::require(gamma2 >= 0 && gamma2 < 4, "lognormal_kernel: gamma2 must lie in [0, 4)");
    const double d = distance(x, y);
    if (d <= l) return gamma2 * (std::log(R / l) + 2.0 * (1.0 - std::sqrt(d / l)));
    return d >= R ? 0.0 : gamma2 * std::log(R / d);
}

double zeta2d(double gamma2, double q) { return (2.0 + gamma2) * q - 0.5 * gamma2 * q * q; }

double zeta2d_mass_consistent(double gamma2, double q) {
    return (2.0 + 0.5 * gamma2) * q - 0.5 * gamma2 * q * q;
}

double green_disk(Point2 x, Point2 y, double R) {
    detail::require(R > 0, "green_disk: R must be > 0");
    const double rx = std::hypot(x.x, x.y), ry = std::hypot(y.x, y.y);
    if (!(rx < R) || !(ry < R)) throw DomainError("green_disk: points must lie in the open disk");
    const double d = distance(x, y);
    if (d == 0.0) throw ValidationError("green_disk: singular argument x = y");
    if (ry == 0.0) return std::log(R / rx);
    // |x - y*| |y| = |x |y| - R^2 y / |y||
    const double s = R * R / ry;
    const double num = std::hypot(x.x * ry - s * y.x, x.y * ry - s * y.y);
    return std::log(num / (R * d));
}

double green_disk_cell_mean(Point2 x, double h, double R) {
    detail::require(h > 0, "green_disk_cell_mean: h must be > 0");
    const double r2 = x.x * x.x + x.y * x.y;
    if (!(r2 < R * R)) throw DomainError("green_disk_cell_mean: centre outside the disk");
    return -std::log(h) - kUnitSquareLogMean + std::log((R * R - r2) / R);
}

double green_harmonicity_residual(std::span<const Point2> probes, Point2 y, double R, double step) {
    constexpr int kPoints = 32;
    double worst = 0.0;
    for (const auto& p : probes) {
        double mean = 0.0;
        for (int k = 0; k < kPoints; ++k) {
            const double a = 2.0 * std::numbers::pi * k / kPoints;
            mean += green_disk({p.x + step * std::cos(a), p.y + step * std::sin(a)}, y, R);
        }
        mean /= kPoints;
        const double lap = 4.0 * (mean - green_disk(p, y, R)) / (step * step);
        worst = std::max(worst, std::abs(lap) * R * R);
    }
    return worst;
}

std::string_view to_string(KernelKind k) {
    return k == KernelKind::LognormalMrm ? "lognormal-mrm" : "gff-disk";
}

KernelKind kernel_kind_from_string(std::string_view s) {
    if (s == "lognormal-mrm") return KernelKind::LognormalMrm;
    if (s == "gff-disk") return KernelKind::GffDisk;
    throw ValidationError("unknown kernel kind: " + std::string(s));
}

void validate(const Kernel2D& k) {
    detail::require(k.gamma2 >= 0 && k.gamma2 < 4, "kernel: gamma2 must lie in [0, 4)");
    detail::require(k.R > 0 && std::isfinite(k.R), "kernel: R must be > 0");
    if (k.kind == KernelKind::LognormalMrm)
        detail::require(k.l > 0 && k.l <= k.R, "kernel: need 0 < l <= R");
}

double Kernel2D::operator()(Point2 x, Point2 y) const {
    if (kind == KernelKind::LognormalMrm) return lognormal_kernel(x, y, l, gamma2, R);
    return gamma2 == 0.0 ? 0.0 : gamma2 * green_disk(x, y, R);
}

double Kernel2D::diagonal(Point2 x, double h) const {
    if (kind == KernelKind::LognormalMrm) return gamma2 * (std::log(R / l) + 2.0);
    return gamma2 == 0.0 ? 0.0 : gamma2 * green_disk_cell_mean(x, h, R);
}

Point2 Grid2D::centre(std::size_t index) const {
    const auto i = index % n, j = index / n;
    return {x0 + (static_cast<double>(i) + 0.5) * h, y0 + (static_cast<double>(j) + 0.5) * h};
}

Grid2D square_grid(double x0, double y0, double side, std::size_t n) {
    detail::require(n >= 1 && side > 0, "square_grid: need n >= 1 and side > 0");
    return {x0, y0, side / static_cast<double>(n), n};
}

std::vector<std::uint8_t> disk_mask(const Grid2D& grid, Point2 c, double radius) {
    std::vector<std::uint8_t> mask(grid.cells());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = distance(grid.centre(k), c) < radius ? 1 : 0;
    return mask;
}

double Measure2D::total() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

Eigen::MatrixXd gram_matrix(std::span<const Point2> points, const Kernel2D& kernel, double h,
                            unsigned threads) {
    validate(kernel);
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd g(n, n);
    parallel_for(points.size(), threads, [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index c = 0; c < r; ++c) g(r, c) = kernel(points[i], points[static_cast<std::size_t>(c)]);
        g(r, r) = kernel.diagonal(points[i], h);
    });
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

Field2DSampler::Field2DSampler(Grid2D grid, Kernel2D kernel, std::vector<std::uint8_t> mask,
                               unsigned threads)
    : grid_(grid), kernel_(kernel), mask_(std::move(mask)) {
    validate(kernel_);
    detail::require(grid_.n >= 1 && grid_.h > 0, "Field2DSampler: empty grid");
    if (mask_.empty()) mask_.assign(grid_.cells(), 1);
    detail::require(mask_.size() == grid_.cells(), "Field2DSampler: mask size mismatch");
    std::vector<Point2> pts;
    for (std::size_t k = 0; k < mask_.size(); ++k)
        if (mask_[k]) {
            active_.push_back(k);
            pts.push_back(grid_.centre(k));
        }
    detail::require(!active_.empty(), "Field2DSampler: no active cells");
    detail::require(active_.size() <= kMaxExactGrid2D, "Field2DSampler: more than 4096 active cells");
    const Eigen::MatrixXd gram = gram_matrix(pts, kernel_, grid_.h, threads);
    variances_.assign(gram.diagonal().data(), gram.diagonal().data() + gram.rows());
    gauss_ = GaussianSampler(gram, Eigen::VectorXd::Zero(gram.rows()));
}

Eigen::MatrixXd Field2DSampler::sample_values(std::span<const std::uint64_t> seeds) const {
    std::vector<std::uint64_t> derived(seeds.size());
    for (std::size_t k = 0; k < seeds.size(); ++k) derived[k] = derive_seed(seeds[k], "gaussian2d", 0);
    return gauss_.sample_batch(derived);
}

Field2D Field2DSampler::sample(std::uint64_t seed) const {
    const std::uint64_t seeds[] = {seed};
    const Eigen::MatrixXd v = sample_values(seeds);
    Field2D f;
    f.grid = grid_;
    f.kernel = kernel_;
    f.seed = seed;
    f.mask = mask_;
    f.values.assign(grid_.cells(), 0.0);
    f.variances.assign(grid_.cells(), 0.0);
    for (std::size_t a = 0; a < active_.size(); ++a) {
        f.values[active_[a]] = v(static_cast<Eigen::Index>(a), 0);
        f.variances[active_[a]] = variances_[a];
    }
    return f;
}

Measure2D Field2DSampler::measure(const double* values) const {
    Measure2D m;
    m.grid = grid_;
    m.masses.assign(grid_.cells(), 0.0);
    const double area = grid_.h * grid_.h;
    for (std::size_t a = 0; a < active_.size(); ++a)
        m.masses[active_[a]] = std::exp(values[a] - 0.5 * variances_[a]) * area;
    return m;
}

Field2D sample_field2d(const Grid2D& grid, const Kernel2D& kernel, std::uint64_t seed) {
    return Field2DSampler(grid, kernel).sample(seed);
}

Measure2D build_measure2d(const Field2D& f) {
    detail::require(f.values.size() == f.grid.cells() && f.variances.size() == f.grid.cells(),
                    "build_measure2d: field size mismatch");
    Measure2D m;
    m.grid = f.grid;
    m.masses.assign(f.grid.cells(), 0.0);
    const double area = f.grid.h * f.grid.h;
    for (std::size_t k = 0; k < m.masses.size(); ++k)
        if (f.mask.empty() || f.mask[k]) m.masses[k] = std::exp(f.values[k] - 0.5 * f.variances[k]) * area;
    return m;
}

BallScalingReport ball_mass_scaling_check(double gamma2, double R, double l, double lambda,
                                          double q, std::size_t replicas, std::uint64_t seed,
                                          const Ball2DOptions& options) {
    detail::require(lambda > 0 && lambda <= 1, "ball_mass_scaling_check: lambda must lie in (0, 1]");
    detail::require(q >= 0 && q <= 1, "ball_mass_scaling_check: q must lie in [0, 1]");
    detail::require(replicas >= 2, "ball_mass_scaling_check: need at least 2 replicas");
    const double r = 0.5 * R;
    const Grid2D big = square_grid(-r, -r, 2 * r, options.n);
    detail::require(lambda * r >= 16 * big.h * (1 - 1e-12),
                    "ball_mass_scaling_check: ball under-resolved, need lambda R/2 >= 16 h");
    const Grid2D small = square_grid(-lambda * r, -lambda * r, 2 * lambda * r, options.n);
    const Field2DSampler sb(big, {KernelKind::LognormalMrm, gamma2, R, l}, disk_mask(big, {}, r),
                            options.threads);
    const Field2DSampler ss(small, {KernelKind::LognormalMrm, gamma2, R, lambda * l},
                            disk_mask(small, {}, lambda * r), options.threads);

    BallScalingReport rep;
    rep.gamma2 = gamma2;
    rep.lambda = lambda;
    rep.q = q;
    rep.predicted = std::pow(lambda, zeta2d(gamma2, q));
    rep.predicted_mass_consistent = std::pow(lambda, zeta2d_mass_consistent(gamma2, q));

    std::vector<double> a(replicas), b(replicas);
    const std::size_t batch = std::max<std::size_t>(1, options.batch);
    parallel_for((replicas + batch - 1) / batch, options.threads, [&](std::size_t k) {
        const std::size_t lo = k * batch, hi = std::min(replicas, lo + batch);
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = lo; i < hi; ++i) seeds.push_back(derive_seed(seed, "replica", i));
        const Eigen::MatrixXd vs = ss.sample_values(seeds), vb = sb.sample_values(seeds);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto c = static_cast<Eigen::Index>(i - lo);
            a[i] = std::pow(ss.measure(vs.col(c).data()).total(), q);
            b[i] = std::pow(sb.measure(vb.col(c).data()).total(), q);
        }
    });
    rep.lhs_mean = stats::mean(a);
    rep.rhs_mean = stats::mean(b);
    rep.ratio = rep.lhs_mean / rep.rhs_mean;
    rep.ratio_se = stats::bootstrap_se(
        replicas,
        [&](std::span<const std::size_t> idx) {
            double sa = 0, sb2 = 0;
            for (std::size_t i : idx) {
                sa += a[i];
                sb2 += b[i];
            }
            return sa / sb2;
        },
        std::max<std::size_t>(options.bootstrap, 2), derive_seed(seed, "ball-bootstrap", 0));
    if (rep.ratio_se > 0) {
        rep.z = (rep.ratio - rep.predicted) / rep.ratio_se;
        rep.z_mass_consistent = (rep.ratio - rep.predicted_mass_consistent) / rep.ratio_se;
    }
    rep.pass = rep.ratio == rep.predicted || std::abs(rep.z) <= 5.0;
    return rep;
}

SandwichReport sandwich_check(double gamma2, double R, double r, double delta, std::size_t n) {
    detail::require(gamma2 >= 0 && gamma2 < 4, "sandwich_check: gamma2 must lie in [0, 4)");
    detail::require(r > 0 && delta >= 0 && r + delta < R, "sandwich_check: need r + delta < R");
    detail::require(n >= 2, "sandwich_check: need n >= 2");
    const double rho = r + delta;
    auto diff = [&](Point2 x, Point2 y) {
        const double d = distance(x, y);
        const double lp = d < R ? std::log(R / d) : 0.0;
        return gamma2 * green_disk(x, y, R) - gamma2 * lp;
    };
    const Grid2D g = square_grid(-rho, -rho, 2 * rho, n);
    std::vector<Point2> pts;
    for (std::size_t k = 0; k < g.cells(); ++k)
        if (std::hypot(g.centre(k).x, g.centre(k).y) < rho) pts.push_back(g.centre(k));
    SandwichReport rep;
    rep.min_diff = kInf;
    rep.max_diff = -kInf;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double v = diff(pts[i], pts[j]);
            rep.finite = rep.finite && std::isfinite(v);
            rep.min_diff = std::min(rep.min_diff, v);
            rep.max_diff = std::max(rep.max_diff, v);
        }
    const Point2 base{0.5 * r, 0.0};
    for (int k = 4; k <= 14; ++k) {
        const double d = std::ldexp(R, -k);
        const Point2 other{base.x + d, base.y};
        if (std::hypot(other.x, other.y) >= rho) continue;
        rep.distances.push_back(d);
        const double v = diff(base, other);
        rep.diffs.push_back(v);
        rep.finite = rep.finite && std::isfinite(v);
        rep.min_diff = std::min(rep.min_diff, v);
        rep.max_diff = std::max(rep.max_diff, v);
    }
    detail::require(rep.diffs.size() >= 2, "sandwich_check: pair sequence leaves B(0, r + delta)");
    rep.cauchy_gap = std::abs(rep.diffs.back() - rep.diffs[rep.diffs.size() - 2]);
    rep.cauchy = rep.cauchy_gap <= 1e-3;
    rep.pass = rep.finite && rep.cauchy;
    return rep;
}

Set2D make_cantor_dust(double ratio, int depth, double side) {
    const FractalSet c = make_cantor(ratio, depth, side);
    Set2D s;
    s.delta0 = 2.0 * c.delta0;
    std::ostringstream os;
    os << "cantor-dust(ratio=" << csv::num(ratio) << ",depth=" << depth << ")";
    s.name = os.str();
    s.boxes.reserve(c.cover.size() * c.cover.size());
    for (const auto& v : c.cover)
        for (const auto& u : c.cover) s.boxes.push_back({u.a, u.b, v.a, v.b});
    return s;
}

Set2D make_full_square(double side) {
    detail::require(side > 0, "make_full_square: side must be > 0");
    return {{{0.0, side, 0.0, side}}, 2.0, "full-square"};
}

Set2D place(const Set2D& unit_set, double x0, double y0, double side) {
    Set2D s = unit_set;
    for (auto& b : s.boxes) b = {x0 + side * b.x0, x0 + side * b.x1, y0 + side * b.y0, y0 + side * b.y1};
    return s;
}

namespace {

constexpr double kBoxTol = 1e-9;

struct ContentTable {
    std::vector<int> levels;
    std::vector<std::vector<double>> masses;  ///< masses of the marked squares per level
};

std::pair<long long, long long> box_range(double a, double b, double origin, double w, long long count) {
    auto i0 = static_cast<long long>(std::floor((a - origin) / w + kBoxTol));
    auto i1 = std::max(i0, static_cast<long long>(std::ceil((b - origin) / w - kBoxTol)) - 1);
    return {std::clamp(i0, 0LL, count - 1), std::clamp(i1, 0LL, count - 1)};
}

// Exact integral of the cellwise-constant density: the cumulative mass
// F(x, y) = M([x0, x] x [y0, y]) is bilinear inside each cell.
class CumulativeMass {
  public:
    explicit CumulativeMass(const Measure2D& M) : g_(M.grid), pre_((g_.n + 1) * (g_.n + 1), 0.0) {
        const std::size_t n = g_.n;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                at(i + 1, j + 1) = M.masses[i + n * j] + at(i, j + 1) + at(i + 1, j) - at(i, j);
    }

    double operator()(double x, double y) const {
        const auto [i, fx] = locate(x, g_.x0);
        const auto [j, fy] = locate(y, g_.y0);
        const double p00 = at(i, j), p10 = at(i + 1, j), p01 = at(i, j + 1), p11 = at(i + 1, j + 1);
        return p00 + fx * (p10 - p00) + fy * (p01 - p00) + fx * fy * (p11 - p10 - p01 + p00);
    }

    double rect(double xa, double xb, double ya, double yb) const {
        return (*this)(xb, yb) - (*this)(xa, yb) - (*this)(xb, ya) + (*this)(xa, ya);
    }

  private:
    // Cell index and fraction along one axis.
    std::pair<std::size_t, double> locate(double v, double origin) const {
        const double u = std::clamp((v - origin) / g_.h, 0.0, static_cast<double>(g_.n));
        const auto k = std::min(static_cast<std::size_t>(u), g_.n - 1);
        return {k, u - static_cast<double>(k)};
    }
    double& at(std::size_t i, std::size_t j) { return pre_[j * (g_.n + 1) + i]; }
    double at(std::size_t i, std::size_t j) const { return pre_[j * (g_.n + 1) + i]; }

    Grid2D g_;
    std::vector<double> pre_;
};

ContentTable content_table(const Set2D& K, const Measure2D& M, std::span<const int> levels, int base) {
    detail::require(base >= 2, "measure content: base must be >= 2");
    detail::require(!levels.empty(), "measure content: empty level list");
    detail::require(!K.boxes.empty(), "measure content: empty set");
    const double side = M.grid.side(), tol = 1e-9 * side;
    for (const auto& b : K.boxes)
        detail::require(b.x0 >= M.grid.x0 - tol && b.x1 <= M.grid.x0 + side + tol &&
                            b.y0 >= M.grid.y0 - tol && b.y1 <= M.grid.y0 + side + tol,
                        "measure content: set leaves the measure domain");
    const CumulativeMass F(M);
    ContentTable t;
    for (int L : levels) {
        detail::require(L >= 0, "measure content: negative level");
        const double countf = std::pow(static_cast<double>(base), L);
        const double w = side / countf;
        detail::require(w >= M.grid.h * (1 - 1e-9), "measure content: squares finer than a grid cell");
        const auto count = static_cast<long long>(std::llround(countf));
        std::vector<std::uint8_t> marked(static_cast<std::size_t>(count * count), 0);
        for (const auto& b : K.boxes) {
            const auto [i0, i1] = box_range(b.x0, b.x1, M.grid.x0, w, count);
            const auto [j0, j1] = box_range(b.y0, b.y1, M.grid.y0, w, count);
            for (long long j = j0; j <= j1; ++j)
                for (long long i = i0; i <= i1; ++i) marked[static_cast<std::size_t>(i + count * j)] = 1;
        }
        std::vector<double> masses;
        for (long long j = 0; j < count; ++j)
            for (long long i = 0; i < count; ++i) {
                if (!marked[static_cast<std::size_t>(i + count * j)]) continue;
                const double xa = M.grid.x0 + w * static_cast<double>(i);
                const double ya = M.grid.y0 + w * static_cast<double>(j);
                masses.push_back(F.rect(xa, xa + w, ya, ya + w));
            }
        t.levels.push_back(L);
        t.masses.push_back(std::move(masses));
    }
    return t;
}

double content_sum(const std::vector<double>& masses, double s) {
    double acc = 0.0;
    for (double m : masses) acc += std::pow(std::max(m, 0.0), s);
    return acc;
}

stats::LineFit content_fit(const ContentTable& t, double s) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        x.push_back(t.levels[k]);
        y.push_back(std::log(content_sum(t.masses[k], s)));
    }
    return stats::fit_line(x, y);
}

}  // namespace

std::vector<double> measure_hausdorff_content(const Set2D& K, const Measure2D& M, double s,
                                              std::span<const int> levels, int base) {
    detail::require(s >= 0, "measure content: s must be >= 0");
    const ContentTable t = content_table(K, M, levels, base);
    std::vector<double> out;
    for (const auto& m : t.masses) out.push_back(content_sum(m, s));
    return out;
}

CriticalExponent critical_content_exponent(const Set2D& K, const Measure2D& M,
                                           std::span<const int> levels, int base) {
    detail::require(levels.size() >= 3, "critical exponent: need at least 3 levels");
    const ContentTable t = content_table(K, M, levels, base);
    auto slope = [&](double s) { return content_fit(t, s).slope; };
    double lo = 0.0, hi = 2.0;
    const double f_lo = slope(lo), f_hi = slope(hi);
    if (!(f_lo > 0) || !(f_hi < 0))
        throw NumericalError("estimator-degenerate: content slope does not change sign on [0, 2]");
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0 ? lo : hi) = mid;
    }
    CriticalExponent ce;
    ce.s = 0.5 * (lo + hi);
    constexpr double ds = 1e-3;
    const double deriv = (slope(ce.s + ds) - slope(ce.s - ds)) / (2 * ds);
    ce.std_error = std::max(content_fit(t, ce.s).slope_se / std::max(std::abs(deriv), 1e-12), 1e-9);
    return ce;
}

std::pair<Grid2D, Kernel2D> kpz2d_setup(const Kpz2DParams& p) {
    Grid2D grid;
    Kernel2D kernel{p.kind, p.gamma2, p.R, 0.0};
    if (p.kind == KernelKind::LognormalMrm) {
        grid = square_grid(0.0, 0.0, p.R, p.n);
        kernel.l = p.l > 0 ? p.l : grid.h;
    } else {
        detail::require(p.r > 0 && p.r < p.R, "kpz2d: need 0 < r < R");
        const double a = p.r / std::sqrt(2.0);
        grid = square_grid(-a, -a, 2 * a, p.n);
        kernel.l = grid.h;
    }
    return {grid, kernel};
}

KpzReport kpz_verify_2d(const Set2D& unit_set, const Kpz2DParams& p, std::size_t replicas,
                        std::uint64_t seed) {
    detail::require(replicas >= 1, "kpz_verify_2d: need at least one replica");
    detail::require(p.gamma2 >= 0 && p.gamma2 < 4, "kpz_verify_2d: gamma2 must lie in [0, 4)");
    detail::require(p.tolerance > 0, "kpz_verify_2d: tolerance must be > 0");
    detail::require(unit_set.delta0 >= 0 && unit_set.delta0 <= 2, "kpz_verify_2d: delta0 must lie in [0, 2]");
    const auto [grid, kernel] = kpz2d_setup(p);
    const Set2D K = place(unit_set, grid.x0, grid.y0, grid.side());
    const Field2DSampler sampler(grid, kernel, {}, p.threads);

    KpzReport rep;
    rep.set = unit_set.name;
    rep.delta0 = unit_set.delta0;
    rep.tolerance = p.tolerance;
    const double top = zeta2d(p.gamma2, 1.0);
    if (rep.delta0 <= top) {
        rep.delta_pred = kpz_solve_on([&](double q) { return zeta2d(p.gamma2, q); }, rep.delta0, 1.0);
    } else {
        rep.delta_pred = std::nan("");
        rep.notes.push_back("delta0 exceeds zeta(1); no root on the increasing branch in [0,1]");
    }
    if (rep.delta0 <= zeta2d_mass_consistent(p.gamma2, 1.0)) {
        const double alt = kpz_solve_on([&](double q) { return zeta2d_mass_consistent(p.gamma2, q); },
                                        rep.delta0, 1.0);
        rep.notes.push_back("root of the mass-consistent exponent (2+gamma2/2)q-gamma2 q^2/2: " + csv::num(alt));
    }

    rep.replicas.resize(replicas);
    const double area = grid.side() * grid.side();
    const std::size_t batch = std::max<std::size_t>(1, p.batch);
    parallel_for((replicas + batch - 1) / batch, p.threads, [&](std::size_t b) {
        const std::size_t lo = b * batch, hi = std::min(replicas, lo + batch);
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = lo; r < hi; ++r) seeds.push_back(derive_seed(seed, "replica", r));
        const Eigen::MatrixXd vals = sampler.sample_values(seeds);
        for (std::size_t r = lo; r < hi; ++r) {
            auto& out = rep.replicas[r];
            out.replica = r;
            const Measure2D m = sampler.measure(vals.col(static_cast<Eigen::Index>(r - lo)).data());
            if (!(m.total() >= 1e-12 * area)) {
                out.discarded = true;
                out.estimate = out.std_error = std::nan("");
                continue;
            }
            const auto ce = critical_content_exponent(K, m, p.levels, p.base);
            out.estimate = ce.s;
            out.std_error = ce.std_error;
        }
    });
    summarize_replicas(rep);
    return rep;
}

void write_field2d_binary(std::ostream& os, const Field2D& f) {
    detail::require(f.values.size() == f.grid.cells() && f.variances.size() == f.grid.cells(),
                    "write_field2d_binary: field size mismatch");
    binio::put_magic(os, "MRMF2D01");
    binio::put_u64(os, f.grid.n);
    binio::put_u32(os, static_cast<std::uint32_t>(f.kernel.kind));
    binio::put_u32(os, 0);
    binio::put_f64(os, f.kernel.gamma2);
    binio::put_f64(os, f.kernel.R);
    binio::put_f64(os, f.kernel.l);
    binio::put_u64(os, f.seed);
    binio::put_f64(os, f.grid.x0);
    binio::put_f64(os, f.grid.y0);
    binio::put_f64(os, f.grid.h);
    for (double v : f.values) binio::put_f64(os, v);
    for (double v : f.variances) binio::put_f64(os, v);
    for (std::size_t k = 0; k < f.grid.cells(); ++k) {
        const char c = f.mask.empty() || f.mask[k] ? 1 : 0;
        os.write(&c, 1);
    }
}

Field2D read_field2d_binary(std::istream& is) {
    binio::expect_magic(is, "MRMF2D01");
    Field2D f;
    f.grid.n = binio::get_u64(is);
    detail::require(f.grid.n <= 1u << 16, "binary dump: implausible grid size");
    const auto kind = binio::get_u32(is);
    detail::require(kind <= 1, "binary dump: unknown kernel tag");
    f.kernel.kind = static_cast<KernelKind>(kind);
    binio::get_u32(is);
    f.kernel.gamma2 = binio::get_f64(is);
    f.kernel.R = binio::get_f64(is);
    f.kernel.l = binio::get_f64(is);
    f.seed = binio::get_u64(is);
    f.grid.x0 = binio::get_f64(is);
    f.grid.y0 = binio::get_f64(is);
    f.grid.h = binio::get_f64(is);
    f.values.resize(f.grid.cells());
    for (auto& v : f.values) v = binio::get_f64(is);
    f.variances.resize(f.grid.cells());
    for (auto& v : f.variances) v = binio::get_f64(is);
    f.mask.resize(f.grid.cells());
    for (auto& m : f.mask) {
        char c = 0;
        if (!is.read(&c, 1)) throw ValidationError("truncated binary dump");
        m = static_cast<std::uint8_t>(c);
    }
    return f;
}

}  // namespace mrm
