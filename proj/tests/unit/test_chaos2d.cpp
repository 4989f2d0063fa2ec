#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mrm/chaos2d.hpp"
#include "mrm/errors.hpp"
#include "mrm/stats.hpp"
#include "testing.hpp"

using namespace mrm;

namespace {

Measure2D uniform_measure(std::size_t n, double side = 1.0) {
    Measure2D m;
    m.grid = square_grid(0.0, 0.0, side, n);
    m.masses.assign(m.grid.cells(), m.grid.h * m.grid.h);
    return m;
}

}  // namespace

TEST_CASE("log-normal kernel") {
    const double l = 0.05, R = 1.0, g2 = 0.5;
    const Point2 o{0.3, 0.3};
    CHECK(lognormal_kernel(o, o, l, g2, R) == doctest::Approx(g2 * (std::log(R / l) + 2)).epsilon(1e-15));
    const Point2 at_l{0.3 + l, 0.3};
    CHECK(lognormal_kernel(o, at_l, l, g2, R) == doctest::Approx(g2 * std::log(R / l)).epsilon(1e-14));
    const Point2 just_out{0.3 + l * (1 + 1e-9), 0.3};
    CHECK(std::abs(lognormal_kernel(o, just_out, l, g2, R) - g2 * std::log(R / l)) <= 1e-8);
    CHECK(lognormal_kernel(o, {0.3, 0.3 + R}, l, g2, R) == 0.0);
    CHECK(lognormal_kernel(o, {1.5, 1.5}, l, g2, R) == 0.0);
    CHECK(lognormal_kernel(o, {0.5, 0.3}, l, g2, R) == doctest::Approx(g2 * std::log(5.0)).epsilon(1e-14));
    CHECK_THROWS_AS(lognormal_kernel(o, o, 2.0, g2, R), ValidationError);
    CHECK_THROWS_AS(lognormal_kernel(o, o, l, 4.0, R), ValidationError);
}

TEST_CASE("2D exponents") {
    for (double g2 : {0.0, 0.3, 1.0, 2.5}) {
        CHECK(zeta2d(g2, 0.0) == 0.0);
        CHECK(zeta2d_mass_consistent(g2, 0.0) == 0.0);
        CHECK(zeta2d_mass_consistent(g2, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(zeta2d_mass_consistent(g2, 2.0) == doctest::Approx(4.0 - g2).epsilon(1e-15));
    }
    CHECK(zeta2d(0.0, 2.0) == 4.0);
    CHECK(zeta2d(1.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(zeta2d(0.5, 0.5) == doctest::Approx(1.1875).epsilon(1e-15));
}

TEST_CASE("green function of the disk") {
    const double R = 1.0;
    CHECK(green_disk({0.5, 0.0}, {0.0, 0.0}, R) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(green_disk({0.0, 0.0}, {0.0, 0.25}, R) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    Engine rng(1);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int k = 0; k < 100; ++k) {
        const Point2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
        CHECK(green_disk(x, y, R) == doctest::Approx(green_disk(y, x, R)).epsilon(1e-12));
        CHECK(green_disk(x, y, R) > 0.0);
        const double a = std::atan2(x.y, x.x);
        const Point2 edge{(R - 1e-12) * std::cos(a), (R - 1e-12) * std::sin(a)};
        CHECK(std::abs(green_disk(edge, y, R)) <= 1e-9);
    }
    const std::vector<Point2> probes{{0.3, 0.1}, {-0.5, 0.2}, {0.1, -0.6}, {0.6, 0.6}};
    CHECK(green_harmonicity_residual(probes, {0.05, -0.1}, R, 1e-3) <= 1e-4);
    CHECK_THROWS_AS(green_disk({1.2, 0.0}, {0.0, 0.0}, R), DomainError);
    CHECK_THROWS_AS(green_disk({0.2, 0.0}, {0.2, 0.0}, R), ValidationError);
}

TEST_CASE("cell mean of the green function against Monte Carlo") {
    const double R = 1.0, h = 0.02;
    const Point2 c{0.2, -0.3};
    Engine rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> v(400000);
    for (auto& g : v) {
        const Point2 a{c.x + h * u(rng), c.y + h * u(rng)}, b{c.x + h * u(rng), c.y + h * u(rng)};
        g = green_disk(a, b, R);
    }
    const double mc = stats::mean(v);
    CHECK(std::abs(green_disk_cell_mean(c, h, R) - mc) <= 5 * stats::stderr_mean(v) + 1e-3);

    // E ln|U - V| on the unit square.
    for (auto& g : v) g = 0.5 * std::log(std::pow(u(rng) - u(rng), 2) + std::pow(u(rng) - u(rng), 2));
    CHECK(std::abs(stats::mean(v) - kUnitSquareLogMean) <= 5 * stats::stderr_mean(v));
}

TEST_CASE("property: gram matrices are symmetric and PSD") {
    Engine rng(4);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (const auto kind : {KernelKind::LognormalMrm, KernelKind::GffDisk}) {
        const Kernel2D k{kind, 0.7, 1.0, 1.0 / 32};
        const Grid2D g = square_grid(-0.5, -0.5, 1.0, 20);
        std::vector<Point2> pts;
        for (std::size_t i = 0; i < g.cells(); ++i) pts.push_back(g.centre(i));
        const auto gram = gram_matrix(pts, k, g.h, 2);
        CHECK(gram.isApprox(gram.transpose(), 0.0));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * gram.trace());
        CHECK(gram(0, 0) == doctest::Approx(k.diagonal(pts[0], g.h)).epsilon(1e-15));
    }
}

TEST_CASE("field sampler marginals") {
    const Kernel2D k{KernelKind::LognormalMrm, 0.5, 1.0, 1.0 / 16};
    const Grid2D one = square_grid(0.0, 0.0, 1.0 / 16, 1);
    const Field2DSampler s1(one, k);
    std::vector<std::uint64_t> seeds(5000);
    for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(1, "c2", r);
    const auto v = s1.sample_values(seeds);
    std::vector<double> x(v.cols()), e(v.cols());
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        x[c] = v(0, c);
        e[c] = s1.measure(&v(0, c)).total();
    }
    const double var = k.diagonal(one.centre(0), one.h);
    CHECK(std::abs(stats::mean(x)) <= 5 * stats::stderr_mean(x));
    CHECK(std::abs(stats::variance(x) - var) <= 5 * var * std::sqrt(2.0 / 4999));
    CHECK(std::abs(stats::mean(e) - one.h * one.h) <= 5 * stats::stderr_mean(e));

    // Cells farther apart than R are independent.
    const Grid2D far = square_grid(0.0, 0.0, 1.2, 2);
    const Field2DSampler s2(far, {KernelKind::LognormalMrm, 0.5, 0.5, 0.5});
    const auto w = s2.sample_values(seeds);
    double sxy = 0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) sxy += w(0, c) * w(3, c);
    CHECK(std::abs(sxy / w.cols()) <= 5 * k.diagonal({0, 0}, 0.6) / std::sqrt(5000.0));

    const auto f = s1.sample(7);
    CHECK(f.values.size() == 1);
    CHECK(f.values[0] == s1.sample(7).values[0]);
}

TEST_CASE("disk mask") {
    const Grid2D g = square_grid(-1.0, -1.0, 2.0, 10);
    const auto mask = disk_mask(g, {0.0, 0.0}, 0.8);
    std::size_t active = 0;
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Point2 c = g.centre(i);
        CHECK(static_cast<bool>(mask[i]) == (std::hypot(c.x, c.y) < 0.8));
        active += mask[i];
    }
    const Field2DSampler s(g, {KernelKind::GffDisk, 1.0, 1.0, 1.0}, mask);
    CHECK(s.active() == active);
    const auto f = s.sample(1);
    for (std::size_t i = 0; i < g.cells(); ++i)
        if (!mask[i]) CHECK(f.values[i] == 0.0);
}

TEST_CASE("measure content on a uniform measure") {
    const auto m = uniform_measure(81);
    CHECK(m.total() == doctest::Approx(1.0).epsilon(1e-12));
    const auto full = make_full_square();
    const std::vector<int> levels{0, 1, 2, 3, 4};
    const auto s0 = measure_hausdorff_content(full, m, 0.0, levels, 3);
    for (std::size_t k = 0; k < levels.size(); ++k)
        CHECK(s0[k] == doctest::Approx(std::pow(9.0, levels[k])).epsilon(1e-12));
    const auto s1 = measure_hausdorff_content(full, m, 1.0, levels, 3);
    for (double v : s1) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(critical_content_exponent(full, m, levels, 3).s == doctest::Approx(1.0).epsilon(1e-3));

    // Triadic dust: 4^n squares of mass 9^{-n}, critical exponent ln 4 / ln 9.
    const auto dust = make_cantor_dust(1.0 / 3, 4);
    CHECK(dust.boxes.size() == 256);
    CHECK(dust.delta0 == doctest::Approx(2 * std::log(2.0) / std::log(3.0)).epsilon(1e-15));
    const auto sd = measure_hausdorff_content(dust, m, 0.0, levels, 3);
    for (std::size_t k = 0; k < levels.size(); ++k)
        CHECK(sd[k] == doctest::Approx(std::pow(4.0, levels[k])).epsilon(1e-12));
    CHECK(critical_content_exponent(dust, m, levels, 3).s ==
          doctest::Approx(std::log(4.0) / std::log(9.0)).epsilon(1e-3));

    const std::vector<int> too_fine{0, 1, 5};
    CHECK_THROWS_AS(measure_hausdorff_content(dust, m, 1.0, too_fine, 3), ValidationError);
}

TEST_CASE("placing sets") {
    const auto dust = make_cantor_dust(1.0 / 3, 2);
    const auto p = place(dust, 0.5, -0.25, 0.5);
    REQUIRE(p.boxes.size() == dust.boxes.size());
    CHECK(p.delta0 == dust.delta0);
    for (std::size_t i = 0; i < p.boxes.size(); ++i) {
        CHECK(p.boxes[i].x0 == doctest::Approx(0.5 + 0.5 * dust.boxes[i].x0));
        CHECK(p.boxes[i].y1 == doctest::Approx(-0.25 + 0.5 * dust.boxes[i].y1));
    }
}

TEST_CASE("ball scaling trivial ratio and sandwich") {
    Ball2DOptions opt;
    opt.n = 32;
    const auto same = ball_mass_scaling_check(0.5, 1.0, 1.0 / 32, 1.0, 0.5, 20, 1, opt);
    CHECK(same.ratio == 1.0);
    CHECK(same.pass);
    CHECK_THROWS_AS(ball_mass_scaling_check(0.5, 1.0, 1.0 / 32, 0.5, 0.5, 20, 1, opt), ValidationError);
    CHECK_THROWS_AS(ball_mass_scaling_check(0.5, 1.0, 1.0 / 32, 1.0, 1.5, 20, 1, opt), ValidationError);

    const auto sw = sandwich_check(1.0, 1.0, 0.6, 0.1, 16);
    CHECK(sw.finite);
    CHECK(sw.pass);
    CHECK(sw.min_diff <= sw.max_diff);
    CHECK(sw.cauchy_gap <= 1e-3);
}

TEST_CASE("lebesgue control for the 2D kpz check") {
    Kpz2DParams p;
    p.gamma2 = 0.0;
    p.n = 27;
    p.levels = {0, 1, 2, 3};
    p.base = 3;
    const auto rep = kpz_verify_2d(make_cantor_dust(1.0 / 3, 3), p, 2, 1);
    // zeta(q) = 2q: the prediction is half the Euclidean dimension.
    CHECK(rep.delta_pred == doctest::Approx(rep.delta0 / 2).epsilon(1e-9));
    CHECK(rep.mean == doctest::Approx(rep.delta0 / 2).epsilon(1e-3));
    CHECK(rep.pass);
}

TEST_CASE("2D binary round trip") {
    const Grid2D g = square_grid(0.0, 0.0, 1.0, 6);
    const auto f = sample_field2d(g, {KernelKind::LognormalMrm, 0.5, 1.0, 1.0 / 6}, 3);
    std::stringstream ss;
    write_field2d_binary(ss, f);
    const auto r = read_field2d_binary(ss);
    CHECK(r.values == f.values);
    CHECK(r.variances == f.variances);
    CHECK(r.mask == f.mask);
    CHECK(r.grid.n == 6);
    CHECK(r.kernel.gamma2 == 0.5);
    CHECK(r.seed == 3);
    std::stringstream truncated(ss.str().substr(0, 40));
    CHECK_THROWS(read_field2d_binary(truncated));
}

TEST_CASE("2D validation errors") {
    CHECK_THROWS_AS(validate(Kernel2D{KernelKind::LognormalMrm, 4.0, 1.0, 0.1}), ValidationError);
    CHECK_THROWS_AS(validate(Kernel2D{KernelKind::LognormalMrm, 0.5, 1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(Field2DSampler(square_grid(0, 0, 1, 65), {KernelKind::LognormalMrm, 0.5, 1.0, 0.1}),
                    ValidationError);
    CHECK_THROWS_AS(kernel_kind_from_string("cauchy"), ValidationError);
    CHECK(kernel_kind_from_string(to_string(KernelKind::GffDisk)) == KernelKind::GffDisk);
}
