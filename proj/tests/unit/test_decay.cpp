#include "speclab/decay.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

using namespace speclab;
using namespace speclab::decay;
using namespace speclab::model;

namespace {

Eigensystem power_system(double tau, double lambda_max, double half_width, std::size_t n) {
    const Grid grid = Grid::make(1, half_width, n);
    return eigendecompose(assemble(grid, PotentialSpec::power_law(tau)), lambda_max);
}

std::vector<double> gaussian_ground_state(const Grid& grid) {
    const double norm = std::pow(std::numbers::pi, -0.25);
    std::vector<double> f(grid.total_points());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = grid.point(i)[0];
        f[i] = norm * std::exp(-0.5 * x * x);
    }
    return f;
}

}  // namespace

TEST_CASE("weighted_l2: mu = 0 is the plain norm, single-point indicator") {
    const Grid grid = Grid::make(1, 4.0, 15);
    std::vector<double> f(grid.total_points(), 0.0);
    const std::size_t i0 = 11;
    f[i0] = 1.0;
    const double h = grid.spacing();
    CHECK(weighted_l2(grid, f, 0.0) == doctest::Approx(std::sqrt(h)).epsilon(1e-14));
    const double x0 = std::abs(grid.point(i0)[0]);
    CHECK(weighted_l2(grid, f, 0.7) ==
          doctest::Approx(std::exp(0.7 * x0) * std::sqrt(h)).epsilon(1e-14));
}

TEST_CASE("weighted_l2: harmonic ground state against the Gaussian closed form") {
    // integral e^{|x|} pi^{-1/2} e^{-x^2} dx = e^{1/4} (1 + erf(1/2))
    const Grid grid = Grid::make(1, 10.0, 8191);
    const std::vector<double> f = gaussian_ground_state(grid);
    const double got = weighted_l2(grid, f, 0.5);
    const double expected = std::sqrt(std::exp(0.25) * (1.0 + std::erf(0.5)));
    CHECK(got == doctest::Approx(expected).epsilon(1e-6));
    // finite and below the Prop-3.4-style bound with R = sqrt(3)
    CHECK(got * got <= 8.0 * std::exp(std::sqrt(3.0) + 1.0));
}

TEST_CASE("weighted_l2: overflow guard") {
    const Grid grid = Grid::make(1, 10.0, 15);
    std::vector<double> f(grid.total_points(), 1.0);
    CHECK_THROWS_AS(weighted_l2(grid, f, 100.0), ValidationError);
}

TEST_CASE("fit_weight_rate picks the smallest workable nu") {
    const Grid grid = Grid::make(1, 12.0, 101);
    const NuFit linear = fit_weight_rate(PotentialSpec::power_law(1.0), grid);
    CHECK(linear.nu == doctest::Approx(0.1));
    CHECK(linear.monotone);
    CHECK(linear.m_nu == doctest::Approx(std::exp(-0.1)).epsilon(1e-6));  // sup of e^{-nu r} at r=1

    const NuFit quad = fit_weight_rate(PotentialSpec::power_law(2.0), grid);
    CHECK(quad.nu == doctest::Approx(1.0));
    CHECK(quad.monotone);
    CHECK(quad.m_nu == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-6));

    const NuFit quart = fit_weight_rate(PotentialSpec::power_law(4.0), grid);
    CHECK(quart.nu == doctest::Approx(1.0));
    CHECK_FALSE(quart.monotone);
    // peak of e^{-r} 4 r^3 at r = 3
    CHECK(quart.m_nu == doctest::Approx(4.0 * 27.0 * std::exp(-3.0)).epsilon(1e-4));
}

TEST_CASE("check_prop34: ratios at most one on the harmonic spectrum") {
    const Eigensystem sys = power_system(2.0, 20.0, 12.0, 1500);
    double prev_rhs = 0.0;
    for (std::size_t k = 0; k < sys.size(); ++k) {
        const WeightedNormReport rep = check_prop34(sys, k);
        CHECK(rep.ratio <= 1.0);
        CHECK(rep.ratio > 0.0);
        CHECK(rep.rhs >= prev_rhs);  // R increases with lambda
        prev_rhs = rep.rhs;
    }
    // ground state lhs agrees with the Gaussian quadrature value
    const WeightedNormReport ground = check_prop34(sys, 0);
    const double analytic = std::exp(0.25) * (1.0 + std::erf(0.5));
    CHECK(ground.lhs == doctest::Approx(analytic).epsilon(1e-3));
}

TEST_CASE("check_prop34: box too small is rejected") {
    const Eigensystem sys = power_system(2.0, 20.0, 6.0, 500);
    CHECK_THROWS_AS(check_prop34(sys, sys.size() - 1), ValidationError);
}

TEST_CASE("check_prop35: gradient estimates hold and the form identity is tight") {
    const Eigensystem sys = power_system(2.0, 20.0, 12.0, 1500);
    const NuFit fit = fit_weight_rate(sys.potential(), sys.grid());
    for (std::size_t k = 0; k < sys.size(); ++k) {
        const WeightedNormReport rep = check_prop35(sys, k, fit);
        CHECK(rep.ratio <= 1.0);
        CHECK(rep.ratio > 0.0);
    }
    // || |grad f| ||^2 <= lambda ||f||^2 with near equality minus the potential term:
    // check the Dirichlet identity sum h |grad f|^2 + sum h V f^2 = lambda to 2%
    for (std::size_t k = 0; k < 3; ++k) {
        const auto f = sys.vector(k);
        const std::vector<double> g = gradient_sq(sys.grid(), f);
        double kinetic = 0.0, pot = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double x = sys.grid().point(i)[0];
            kinetic += g[i];
            pot += x * x * f[i] * f[i];
        }
        kinetic *= sys.grid().cell_weight();
        pot *= sys.grid().cell_weight();
        CHECK(kinetic + pot == doctest::Approx(sys.value(k)).epsilon(0.02));
        CHECK(kinetic <= sys.value(k) * 1.02);
    }
}

TEST_CASE("h1_tail: endpoints, monotonicity, exact partition") {
    const Eigensystem sys = power_system(2.0, 8.0, 9.0, 600);
    const auto f = sys.vector(1);
    const Grid& grid = sys.grid();

    const double full = h1_tail(grid, f, 0.0);
    CHECK(full > 0.0);
    CHECK(h1_tail(grid, f, grid.max_radius() + 1.0) == 0.0);

    double prev = full;
    for (double r : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double t = h1_tail(grid, f, r);
        CHECK(t <= prev + 1e-15);
        prev = t;
    }

    // inside + tail reproduces the full quadrature
    const std::vector<double> g = gradient_sq(grid, f);
    const double r = 1.7;
    double inside = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (grid.radius(i) <= r) inside += f[i] * f[i] + g[i];
    inside *= grid.cell_weight();
    CHECK(inside + h1_tail(grid, f, r) == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("localization_scan: single-eigenfunction subspace and monotone trials") {
    const Eigensystem sys = power_system(2.0, 12.0, 10.0, 800);
    const std::vector<double> single{2.0};  // only lambda_1 = 1 inside
    const LocalizationCurve one = localization_scan(sys, single, 5, 42);
    REQUIRE(one.points.size() == 1);
    CHECK(one.points[0].dim == 1);

    // the trial ensemble collapses to +-f_1, so r* equals the half-mass radius
    const auto f = sys.vector(0);
    double lo = 0.0, hi = sys.grid().max_radius();
    while (hi - lo > sys.grid().spacing() / 2.0) {
        const double mid = 0.5 * (lo + hi);
        if (h1_tail(sys.grid(), f, mid) <= 0.5)
            hi = mid;
        else
            lo = mid;
    }
    CHECK(one.points[0].r_star == doctest::Approx(hi).epsilon(1e-10));

    // more trials never shrink r*
    const std::vector<double> lams{4.0, 8.0, 12.0};
    const LocalizationCurve few = localization_scan(sys, lams, 3, 7);
    const LocalizationCurve many = localization_scan(sys, lams, 9, 7);
    for (std::size_t i = 0; i < lams.size(); ++i)
        CHECK(many.points[i].r_star >= few.points[i].r_star - 1e-15);
}

TEST_CASE("localization_scan: harmonic exponent near one half") {
    const PotentialSpec p = PotentialSpec::power_law(2.0);
    const double half_width = localization_halfwidth(80.0, p, 2.0);
    const Grid grid = Grid::make(1, half_width, 1200);
    const Eigensystem sys = eigendecompose(assemble(grid, p), 80.0);
    const std::vector<double> lams{5, 10, 20, 40, 80};
    const LocalizationCurve curve = localization_scan(sys, lams, 8, 2024);
    REQUIRE(curve.points.size() == 5);
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].r_star >= curve.points[i - 1].r_star - 1e-12);
    CHECK(curve.fitted_exponent > 0.3);
    CHECK(curve.fitted_exponent < 0.7);
    CHECK(curve.effective_constant > 0.0);
}

TEST_CASE("localization_scan: empty subspace is skipped with a warning entry") {
    const Eigensystem sys = power_system(2.0, 6.0, 8.0, 400);
    const std::vector<double> lams{0.5, 4.0};
    const LocalizationCurve curve = localization_scan(sys, lams, 2, 1);
    CHECK(curve.skipped == std::vector<double>{0.5});
    CHECK(curve.points.size() == 1);
}
