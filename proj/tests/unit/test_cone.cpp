#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "mrm/cone.hpp"
#include "mrm/errors.hpp"
#include "mrm/random.hpp"

using namespace mrm;

namespace {

// Independent oracle: theta(A_l(0) ∩ A_l(tau)) as a midpoint sum over log-spaced
// heights of the closed-form slab width, plus the exact tail above max(T, tau).
double overlap_by_heights(double l, double T, double tau, int n = 400000) {
    const double top = std::max(T, tau);
    const double a = std::log(l), b = std::log(top);
    double sum = 0.0;
    if (b > a) {
        const double dv = (b - a) / n;
        for (int k = 0; k < n; ++k) {
            const double y = std::exp(a + (k + 0.5) * dv);
            sum += std::max(0.0, std::min(y, T) - tau) / y * dv;
        }
    }
    return sum + std::max(0.0, T - tau) / top;
}

}  // namespace

TEST_CASE("cone mass") {
    CHECK(cone_mass({1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cone_mass({1.0 / std::exp(1.0), 1.0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cone_mass({2.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(cone_mass({0.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(cone_mass({1.0, -1.0}), ValidationError);
}

TEST_CASE("cone overlap branches") {
    const ConeParams p{1.0 / 8, 1.0};
    CHECK(cone_overlap(p, 0.0) == cone_mass(p));
    CHECK(cone_overlap(p, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cone_overlap_quadrature(p, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cone_overlap(p, 1.0) == 0.0);
    CHECK(cone_overlap(p, 3.0) == 0.0);
    CHECK_THROWS_AS(cone_overlap({2.0, 1.0}, 0.1), ValidationError);
}

TEST_CASE("property: overlap matches both quadrature oracles") {
    Engine rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double T = 0.5 + 1.5 * u(rng);
        const double l = T * std::pow(10.0, -3.0 * u(rng));
        const double tau = 1.5 * T * u(rng);
        const double exact = cone_overlap({l, T}, tau);
        CHECK(std::abs(exact - cone_overlap_quadrature({l, T}, tau)) <= 1e-8);
        CHECK(std::abs(exact - overlap_by_heights(l, T, tau)) <= 1e-8);
    }
}

TEST_CASE("property: seam continuity and monotonicity") {
    Engine rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double T = 0.1 + 5 * u(rng), l = T * (1e-4 + u(rng));
        const ConeParams p{l, T};
        const double below = std::log(T / l) + 1.0 - std::nextafter(l, 0.0) / l;
        CHECK(std::abs(below - cone_overlap(p, l)) <= 1e-12);
        double prev = cone_overlap(p, 0.0);
        for (double tau = 0.0; tau <= 1.2 * T; tau += T / 97) {
            const double v = cone_overlap(p, tau);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("point in cone") {
    const ConeParams p{0.25, 1.0};
    CHECK(point_in_cone(0.3, 0.25, 0.3, p));
    for (double y : {0.3, 1.0, 7.0}) CHECK_FALSE(point_in_cone(0.3 + 1.0, y, 0.3, p));
    CHECK(point_in_cone(0.25, 0.5, 0.0, p));  // boundary s - t = f(y)/2
    CHECK_FALSE(point_in_cone(0.0, 0.2, 0.0, p));
}

TEST_CASE("overlap covariance matrix") {
    const ConeParams p{0.01, 1.0};
    const double one[] = {0.3};
    const auto c1 = overlap_covariance_matrix(one, p, 2.0);
    CHECK(c1(0, 0) == doctest::Approx(2.0 * (std::log(100.0) + 1)).epsilon(1e-15));

    const double far[] = {0.0, 1.0};
    CHECK(overlap_covariance_matrix(far, p, 1.0)(0, 1) == 0.0);

    const double tri[] = {0.0, 0.005, 0.01};
    const auto c3 = overlap_covariance_matrix(tri, p, 1.0);
    CHECK(c3(0, 1) == doctest::Approx(std::log(100.0) + 0.5).epsilon(1e-14));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c3);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * c3.trace());
}

TEST_CASE("property: random grids give PSD covariance") {
    Engine rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t n : {8u, 64u, 256u, 512u}) {
        std::vector<double> grid(n);
        for (auto& g : grid) g = 2.0 * u(rng);
        std::sort(grid.begin(), grid.end());
        const auto c = overlap_covariance_matrix(grid, {0.01 + 0.1 * u(rng), 1.0}, 0.7);
        CHECK(c.isApprox(c.transpose(), 0.0));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * c.trace());
    }
}

TEST_CASE("band overlap telescopes") {
    const double T = 1.0;
    for (double tau : {0.0, 0.003, 0.02, 0.4}) {
        const double whole = cone_overlap({0.001, T}, tau) - cone_overlap({0.1, T}, tau);
        const double parts = band_overlap(0.001, 0.01, T, tau) + band_overlap(0.01, 0.1, T, tau);
        CHECK(std::abs(whole - parts) <= 1e-13);
    }
}
