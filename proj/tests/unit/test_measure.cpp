#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mrm/errors.hpp"
#include "mrm/measure.hpp"
#include "mrm/stats.hpp"
#include "testing.hpp"

using namespace mrm;

namespace {

std::vector<double> masses_of(const FieldSampler& fs, std::uint64_t base, std::size_t reps,
                              double power) {
    std::vector<std::uint64_t> s(reps);
    for (std::size_t r = 0; r < reps; ++r) s[r] = derive_seed(base, "m", r);
    const auto vals = fs.sample_values(s);
    std::vector<double> out(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto col = static_cast<Eigen::Index>(r);
        out[r] = std::pow(build_measure(fs.grid(), {vals.col(col).data(), fs.grid().n}).total(), power);
    }
    return out;
}

}  // namespace

TEST_CASE("constant field gives a uniform measure") {
    const UniformGrid g = midpoint_grid(2.0, 8);
    const std::vector<double> v(8, std::log(3.0));
    const auto m = build_measure(g, v);
    CHECK(m.cells() == 8);
    CHECK(m.origin == 0.0);
    CHECK(m.length() == 2.0);
    CHECK(m.total() == doctest::Approx(6.0).epsilon(1e-14));
    for (std::size_t i = 0; i <= 8; ++i) CHECK(m.cumulative[i] == doctest::Approx(0.75 * i).epsilon(1e-14));
    CHECK(cumulative_at(m, 0.1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(rho(m, 0.5, 1.5) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("property: rho is additive and monotone") {
    Engine rng(3);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const UniformGrid g = midpoint_grid(1.0, 64);
    std::vector<double> v(64);
    for (auto& x : v) x = n01(rng);
    const auto m = build_measure(g, v);
    for (int k = 0; k < 200; ++k) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        CHECK(std::abs(rho(m, a, b) + rho(m, b, c) - rho(m, a, c)) <= 1e-13 * m.total());
        CHECK(rho(m, a, b) >= 0.0);
    }
    CHECK(rho(m, 0.0, 1.0) == doctest::Approx(m.total()).epsilon(1e-14));
    CHECK(rho(m, 0.3, 0.3) == 0.0);
    CHECK_THROWS_AS(rho(m, 0.5, 0.4), DomainError);
    CHECK_THROWS_AS(rho(m, -0.1, 0.4), DomainError);
    CHECK_THROWS_AS(cumulative_at(m, 1.2), DomainError);

    v[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_measure(g, v), NumericalError);
    CHECK_THROWS_AS(build_measure(g, std::span<const double>(v.data(), 3)), ValidationError);
}

TEST_CASE("first and second moments match the discrete oracle") {
    // E M = t; E M^2 = sum_ij h^2 exp(sigma2 overlap(|t_i - t_j|)) for the lognormal case.
    const ConeParams cone{1.0 / 64, 1.0};
    const double sigma2 = 0.3;
    const UniformGrid g = midpoint_grid(0.25, 64);
    const FieldSampler fs(g, cone, lognormal(sigma2), FieldMethod::GaussianExact);
    const auto m1 = masses_of(fs, 1, 6000, 1.0);
    CHECK(std::abs(stats::mean(m1) - 0.25) <= 5 * stats::stderr_mean(m1));

    double second = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j)
            second += g.spacing * g.spacing *
                      std::exp(sigma2 * cone_overlap(cone, std::abs(g.at(i) - g.at(j))));
    const auto m2 = masses_of(fs, 2, 6000, 2.0);
    CHECK(std::abs(stats::mean(m2) - second) <= 5 * stats::stderr_mean(m2));

    // Jump case: E M = t still holds.
    const auto t = normalize(0.1, AtomicJumps{{{-0.3, 2.0}}});
    const FieldSampler fj(g, cone, t, FieldMethod::PoissonExact);
    const auto mj = masses_of(fj, 3, 4000, 1.0);
    CHECK(std::abs(stats::mean(mj) - 0.25) <= 5 * stats::stderr_mean(mj));
}

TEST_CASE("estimate_zeta: trivial moments and analytic column") {
    const ConeParams cone{1.0 / 1024, 1.0};
    const std::vector<double> scales{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};
    const std::vector<double> qs{0.0, 1.0, 2.0};
    const auto t = lognormal(0.2);
    EstimatorOptions opt;
    opt.bootstrap = 100;
    const auto fits = estimate_zeta(t, cone, qs, scales, 300, 11, opt);
    REQUIRE(fits.size() == 3);
    CHECK(fits[0].slope == 0.0);
    for (double lm : fits[0].log_means) CHECK(lm == 0.0);
    CHECK(std::abs(fits[1].slope - 1.0) <= 5 * fits[1].slope_se + 1e-12);
    CHECK(fits[1].slope_se > 0.0);
    CHECK(fits[2].analytic_zeta == doctest::Approx(zeta(t, 2.0)).epsilon(1e-15));
    CHECK(fits[2].replicas == 300);
    CHECK(fits[2].scales == scales);

    std::ostringstream os;
    write_moment_csv(os, fits);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "q,t,log_mean,stderr,n_rep");
    std::size_t rows = 0, fit_rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        fit_rows += line.find(",fit,") != std::string::npos;
    }
    CHECK(rows == 3 * (scales.size() + 1));
    CHECK(fit_rows == 3);

    // Same seed, same answer; threads do not change the result.
    opt.threads = 2;
    const auto again = estimate_zeta(t, cone, qs, scales, 300, 11, opt);
    CHECK(again[2].slope == fits[2].slope);
    CHECK(again[2].log_means == fits[2].log_means);
}

TEST_CASE("estimate_zeta validation") {
    const ConeParams cone{1.0 / 1024, 1.0};
    const auto t = lognormal(0.2);
    const std::vector<double> good{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};
    const std::vector<double> few{1.0 / 32, 1.0 / 16, 1.0 / 8};
    const std::vector<double> fine{1.0 / 64, 1.0 / 16, 1.0 / 8, 1.0 / 4};
    const std::vector<double> big{1.0 / 32, 1.0 / 16, 1.0 / 8, 2.0};
    CHECK_THROWS_AS(estimate_zeta(t, cone, 1.0, few, 200, 1), ValidationError);
    CHECK_THROWS_AS(estimate_zeta(t, cone, 1.0, fine, 200, 1), ValidationError);
    CHECK_THROWS_AS(estimate_zeta(t, cone, 1.0, big, 200, 1), ValidationError);
    CHECK_THROWS_AS(estimate_zeta(t, cone, -1.0, good, 200, 1), ValidationError);
    CHECK_THROWS_AS(estimate_zeta(t, cone, 1.0, good, 50, 1), ValidationError);
}

TEST_CASE("global scaling") {
    const ConeParams cone{1.0 / 64, 1.0};
    const auto t = lognormal(0.5);
    const auto same = global_scaling_check(t, cone, 1.0, 1.5, 50, 1);
    CHECK(same.ratio == 1.0);
    CHECK(same.predicted == 1.0);
    CHECK(same.pass);

    const auto one = global_scaling_check(t, cone, 0.5, 1.0, 2000, 2);
    CHECK(one.predicted == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(one.pass);

    const auto three_halves = global_scaling_check(t, cone, 0.25, 1.5, 2000, 3);
    CHECK(three_halves.predicted == doctest::Approx(std::pow(0.25, zeta(t, 1.5))).epsilon(1e-14));
    CHECK(three_halves.pass);
    CHECK_THROWS_AS(global_scaling_check(t, cone, 0.0, 1.0, 10, 1), ValidationError);
}

TEST_CASE("atomlessness") {
    const auto rep = atomlessness_trial(0.25, {1.0 / 16, 1.0}, 0.5, 5, 4);
    CHECK(rep.max_cell_mass.size() == 5);
    CHECK(rep.decreasing);
    std::vector<MeasureGrid> two(2);
    CHECK_THROWS_AS(atomlessness_probe(two), ValidationError);
}

TEST_CASE("default method") {
    CHECK(default_method(lognormal(0.2)) == FieldMethod::GaussianExact);
    CHECK(default_method(normalize(0.1, AtomicJumps{{{0.2, 1.0}}})) == FieldMethod::PoissonExact);
    CHECK(default_method(normalize(0.1, make_density({1.0, 0.5, 0.0, 1.0, +1}))) ==
          FieldMethod::TruncatedGeneral);
}
