#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mrm/errors.hpp"
#include "mrm/fractal.hpp"
#include "mrm/stats.hpp"
#include "testing.hpp"

using namespace mrm;

namespace {

std::vector<double> triadic_scales(int from, int to) {
    std::vector<double> s;
    for (int k = from; k <= to; ++k) s.push_back(std::pow(3.0, -k));
    return s;
}

// Quadratic exponent 1.15 q - 0.15 q^2 of the log-normal with sigma2 = 0.3.
double quadratic_root(double delta0) {
    return (1.15 - std::sqrt(1.15 * 1.15 - 0.6 * delta0)) / 0.3;
}

}  // namespace

TEST_CASE("middle-thirds cantor set") {
    const auto c = make_cantor(1.0 / 3, 8);
    CHECK(c.cover.size() == 256);
    CHECK(c.delta0 == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-15));
    CHECK(c.resolution == doctest::Approx(std::pow(3.0, -8)).epsilon(1e-12));
    CHECK(c.cover.front().a == 0.0);
    CHECK(c.cover.back().b == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 1; i < c.cover.size(); ++i) CHECK(c.cover[i].a > c.cover[i - 1].b);
    for (int k = 0; k <= 8; ++k) CHECK(box_count(c, std::pow(3.0, -k)) == (std::size_t{1} << k));
    const auto est = box_dimension(c, triadic_scales(2, 8));
    CHECK(est.slope == doctest::Approx(c.delta0).epsilon(1e-9));
    CHECK(est.r2 == doctest::Approx(1.0));

    const auto quarter = make_cantor(0.25, 6, 2.0);
    CHECK(quarter.delta0 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(quarter.cover.back().b == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("full interval and finite points") {
    const auto full = make_full_interval();
    CHECK(full.delta0 == 1.0);
    for (int k = 1; k < 10; ++k) CHECK(box_count(full, std::pow(2.0, -k)) == (std::size_t{1} << k));
    const std::vector<double> dyadic{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    CHECK(box_dimension(full, dyadic).slope == doctest::Approx(1.0).epsilon(1e-12));

    const auto pts = make_point_set({0.1, 0.5, 0.5, 0.9});
    CHECK(pts.cover.size() == 3);
    CHECK(pts.delta0 == 0.0);
    const auto est = box_dimension(pts, dyadic);
    CHECK(std::abs(est.slope) <= 1e-12);
    CHECK(est.std_error == 1e-9);
    CHECK_THROWS_AS(make_point_set({}), ValidationError);
}

TEST_CASE("property: box dimension is invariant under affine maps") {
    const auto c = make_cantor(1.0 / 3, 9);
    const auto s = triadic_scales(2, 7);
    const double base = box_dimension(c, s).slope;
    // A constant field makes R(x) linear; scaling the domain by 3 shifts the count index.
    for (double level : {-1.0, 0.0, 0.7}) {
        const UniformGrid g = midpoint_grid(1.0, 729);
        const std::vector<double> v(729, level);
        const auto img = rho_image(c, build_measure(g, v), true);
        CHECK(img.cover.back().b == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(box_dimension(img, s).slope == doctest::Approx(base).epsilon(1e-9));
    }
    const auto big = make_cantor(1.0 / 3, 9, 3.0);
    std::vector<double> s3;
    for (double e : s) s3.push_back(3 * e);
    CHECK(box_dimension(big, s3).slope == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("rho image is monotone") {
    Engine rng(2);
    std::normal_distribution<double> n01(0.0, 1.0);
    const UniformGrid g = midpoint_grid(1.0, 512);
    std::vector<double> v(512);
    for (auto& x : v) x = n01(rng);
    const auto m = build_measure(g, v);
    const auto c = make_cantor(1.0 / 3, 6);
    const auto img = rho_image(c, m);
    REQUIRE(img.cover.size() == c.cover.size());
    for (std::size_t i = 0; i < img.cover.size(); ++i) {
        CHECK(img.cover[i].b >= img.cover[i].a);
        if (i) CHECK(img.cover[i].a >= img.cover[i - 1].b);
        CHECK(img.cover[i].b - img.cover[i].a ==
              doctest::Approx(rho(m, c.cover[i].a, c.cover[i].b)).epsilon(1e-12));
    }
    CHECK(img.domain_length == doctest::Approx(m.total()));
}

TEST_CASE("kpz solver against the quadratic root") {
    const auto t = lognormal(0.3);
    auto z = [&](double q) { return zeta(t, q); };
    CHECK(kpz_solve(z, 0.0) == 0.0);
    CHECK(kpz_solve(z, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    const double d0 = std::log(2.0) / std::log(3.0);
    CHECK(kpz_solve(z, d0) == doctest::Approx(quadratic_root(d0)).epsilon(1e-12));

    Engine rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double prev_d = -1, prev_q = -1;
    std::vector<double> ds(50);
    for (auto& d : ds) d = u(rng);
    std::sort(ds.begin(), ds.end());
    for (double d : ds) {
        const double q = kpz_solve(z, d);
        CHECK(std::abs(zeta(t, q) - d) <= 1e-12);
        CHECK(q == doctest::Approx(quadratic_root(d)).epsilon(1e-11));
        // Monotone coupling: the random dimension never exceeds the Euclidean one.
        CHECK(q <= d + 1e-15);
        if (d > prev_d) CHECK(q > prev_q);
        prev_d = d;
        prev_q = q;
    }
}

TEST_CASE("kpz solver on random jump triples") {
    Engine rng(6);
    for (int k = 0; k < 20; ++k) {
        const auto t = testing::random_atomic_triple(rng);
        if (!check_nondegenerate(t).nondegenerate) continue;
        const double q = kpz_solve([&](double x) { return zeta(t, x); }, 0.5);
        CHECK(std::abs(zeta(t, q) - 0.5) <= 1e-10);
        CHECK(q <= 0.5 + 1e-12);
    }
}

TEST_CASE("kpz solver rejects invalid exponents") {
    CHECK_THROWS_AS(kpz_solve([](double q) { return 2 * q; }, 0.5), ValidationError);
    CHECK_THROWS_AS(kpz_solve([](double q) { return q + 0.1; }, 0.5), ValidationError);
    CHECK_THROWS_AS(kpz_solve([](double q) { return std::sin(3 * M_PI * q) + q; }, 0.5),
                    ValidationError);
    CHECK_THROWS_AS(kpz_solve([](double q) { return q; }, 1.5), ValidationError);
    CHECK(kpz_solve_on([](double q) { return 2 * q - 0.5 * q * q; }, 1.5, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("capacity probe") {
    const auto full = make_full_interval();
    CHECK(capacity_probe(full, 0.0, 10, 1).value == 1.0);
    // int int |x - y|^{-1/2} dx dy on [0, 1]^2 = 8/3
    const auto e = capacity_probe(full, 0.5, 200000, 2);
    CHECK(std::abs(e.value - 8.0 / 3.0) <= 5 * e.std_error);
    const auto c = make_cantor(1.0 / 3, 10);
    CHECK(std::isfinite(capacity_probe(c, 0.4, 20000, 3).value));
    CHECK_THROWS_AS(capacity_probe(make_point_set({0.5}), 0.5, 10, 1), ValidationError);
    CHECK_THROWS_AS(capacity_probe(full, -1.0, 10, 1), ValidationError);
}

TEST_CASE("lebesgue control and replica summary") {
    const auto c = make_cantor(1.0 / 3, 8);
    const auto flat = normalize(0.0, NoJumps{});
    Kpz1DOptions opt;
    const auto rep = kpz_verify_1d(c, flat, {1.0 / 256, 1.0}, 4, 1, triadic_scales(2, 6), opt);
    CHECK(rep.delta_pred == rep.delta0);
    CHECK(rep.mean == doctest::Approx(rep.delta0).epsilon(1e-6));
    CHECK(rep.pass);
    CHECK(rep.discarded == 0);

    std::ostringstream os;
    write_kpz_csv(os, rep);
    CHECK(os.str().rfind("replica,dim_rho_est,stderr,discarded\n", 0) == 0);

    KpzReport manual;
    manual.delta_pred = 0.5;
    manual.tolerance = 0.08;
    for (std::size_t r = 0; r < 20; ++r) manual.replicas.push_back({r, 0.55, 0.01, false});
    summarize_replicas(manual);
    CHECK(manual.pass);
    manual.replicas[0].discarded = true;
    manual.replicas[1].discarded = true;
    summarize_replicas(manual);
    CHECK(manual.discarded == 2);
    CHECK(manual.too_many_discarded);
    CHECK_FALSE(manual.pass);

    CHECK_THROWS_AS(kpz_verify_1d(c, lognormal(8.0), {1.0 / 256, 1.0}, 2, 1, triadic_scales(2, 6)),
                    ValidationError);
}

TEST_CASE("construction errors") {
    CHECK_THROWS_AS(make_cantor(0.6, 5), ValidationError);
    CHECK_THROWS_AS(make_cantor(1.0 / 3, 0), ValidationError);
    CHECK_THROWS_AS(box_count(make_full_interval(), 0.0), ValidationError);
    const auto c = make_cantor(1.0 / 3, 4);
    CHECK_THROWS_AS(box_dimension(c, triadic_scales(2, 6)), ValidationError);  // finer than 3^-4
    const std::vector<double> narrow{0.5, 0.4, 0.3, 0.25};
    CHECK_THROWS_AS(box_dimension(make_full_interval(), narrow), ValidationError);
}
