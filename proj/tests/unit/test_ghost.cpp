#include "speclab/ghost.hpp"

#include <cmath>

#include "doctest.h"
#include "speclab/rng.hpp"

using namespace speclab;
using namespace speclab::ghost;
using namespace speclab::model;

namespace {

struct HarmonicSetup {
    Hamiltonian ham;
    Eigensystem sys;
};

HarmonicSetup harmonic(double lambda_max, double half_width, std::size_t n) {
    const Grid grid = Grid::make(1, half_width, n);
    Hamiltonian ham = assemble(grid, PotentialSpec::power_law(2.0));
    Eigensystem sys = eigendecompose(ham, lambda_max);
    return {std::move(ham), std::move(sys)};
}

std::vector<double> random_unit_coeff(std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> c(m);
    double nrm = 0.0;
    for (auto& v : c) {
        v = rng.gaussian();
        nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    for (auto& v : c) v /= nrm;
    return c;
}

}  // namespace

TEST_CASE("s_eval: branches and the frozen value") {
    CHECK(s_eval(0.0, 0.7) == 0.7);
    CHECK(s_eval(5.0, 0.0) == 0.0);
    CHECK(s_eval(4.0, 1.0) == doctest::Approx(std::sinh(2.0) / 2.0).epsilon(1e-15));
    CHECK(s_eval(4.0, 1.0) == doctest::Approx(1.8134302039235093).epsilon(1e-12));
    CHECK_THROWS_AS(s_eval(-1.0, 0.5), ValidationError);

    // series and direct branch agree at the switchover
    for (double mu : {1e-6, 1.0, 25.0}) {
        const double t = 1e-4 / std::sqrt(mu);
        const double series = s_eval(mu, t * 0.999999);
        const double direct = std::sinh(std::sqrt(mu) * t * 0.999999) / std::sqrt(mu);
        CHECK(series == doctest::Approx(direct).epsilon(1e-13));
    }
    CHECK(s_eval_dt(9.0, 0.5) == doctest::Approx(std::cosh(1.5)).epsilon(1e-15));
}

TEST_CASE("extend: single eigenfunction gives exact identities") {
    const HarmonicSetup hs = harmonic(4.0, 9.0, 800);
    const SpectralSubspace sub = subspace(hs.sys, 2.0);
    REQUIRE(sub.dim == 1);
    const std::vector<double> coeff{1.0};
    const GhostField field = extend(sub, coeff, 1.0, 65);

    // F(x, t) = f_1(x) s_t(lambda_1)
    const double lam = hs.sys.value(0);
    const auto f1 = hs.sys.vector(0);
    const std::size_t j = 50;
    const double st = s_eval(lam, field.t(j));
    const auto slice = field.slice(j);
    for (std::size_t i = 0; i < 20; ++i)
        CHECK(slice[i] == doctest::Approx(f1[i] * st).epsilon(1e-12));

    const IdentityReport rep = verify_identities(field, hs.ham);
    CHECK(rep.boundary_residual <= 1e-13);
    CHECK(rep.elliptic_residual <= 1e-11);
    CHECK(rep.odd_defect <= 1e-12);
}

TEST_CASE("extend: identities for random combinations, F(.,0) = 0 and oddness") {
    const HarmonicSetup hs = harmonic(30.0, 14.0, 1100);
    const SpectralSubspace sub = subspace(hs.sys, 30.0);
    REQUIRE(sub.dim >= 10);
    const std::vector<double> coeff = random_unit_coeff(sub.dim, 77);
    const GhostField field = extend(sub, coeff, 1.0, 129);  // odd count includes t = 0

    const IdentityReport rep = verify_identities(field, hs.ham);
    CHECK(rep.boundary_residual <= 1e-12);
    CHECK(rep.elliptic_residual <= 1e-10);
    CHECK(rep.odd_defect <= 1e-12);

    // middle slice is t = 0, where F vanishes identically
    const auto mid = field.slice(64);
    for (std::size_t i = 0; i < mid.size(); i += 100) CHECK(std::abs(mid[i]) <= 1e-14);
}

TEST_CASE("h1_sandwich: slacks nonnegative over (m, rho, lambda) scan") {
    const HarmonicSetup hs = harmonic(20.0, 12.0, 900);
    for (double lam : {4.0, 10.0, 20.0}) {
        const SpectralSubspace sub = subspace(hs.sys, lam);
        REQUIRE(sub.dim >= 1);
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            const std::vector<double> coeff = random_unit_coeff(sub.dim, seed);
            for (double rho : {0.5, 1.0, 2.0}) {
                const GhostField field = extend(sub, coeff, rho, 129);
                const SandwichReport rep = h1_sandwich(field, rho, lam);
                CHECK(rep.lower_slack >= -1e-6);
                CHECK(rep.upper_slack >= -1e-6);
            }
        }
    }
}

TEST_CASE("h1_sandwich: monotone in rho and tight lower bound as rho -> 0") {
    const HarmonicSetup hs = harmonic(6.0, 9.0, 700);
    const SpectralSubspace sub = subspace(hs.sys, 2.0);
    const std::vector<double> coeff{1.0};
    double prev = 0.0;
    for (double rho : {0.25, 0.5, 1.0, 2.0}) {
        const GhostField field = extend(sub, coeff, rho, 129);
        const SandwichReport rep = h1_sandwich(field, rho, 2.0);
        CHECK(rep.h1_sq > prev);
        prev = rep.h1_sq;
    }
    // for small rho the time-derivative term dominates: h1 ~ 2 rho ||f||^2
    const GhostField tiny = extend(sub, coeff, 0.01, 129);
    const SandwichReport rep = h1_sandwich(tiny, 0.01, 2.0);
    CHECK(rep.h1_sq == doctest::Approx(rep.lower_bound).epsilon(0.01));
}

TEST_CASE("geometry_constants") {
    const PotentialSpec p = PotentialSpec::power_law(2.0);
    const GeometryConstants g1 = geometry_constants(1.0, p, 0.2, 0.3, 2.5, 1);
    CHECK(2.0 * g1.half_width == doctest::Approx(5.0));  // smallest sidelength is five

    const GeometryConstants g2 = geometry_constants(50.0, p, 0.2, 0.0, 2.5, 2);
    CHECK(g2.theta == doctest::Approx(0.04).epsilon(1e-12));  // alpha = 0: theta = delta^2

    const GeometryConstants g3 = geometry_constants(9.0, p, 0.25, 0.0, 2.5, 1);
    CHECK(g3.carleman_radius == doctest::Approx(9.0 * std::exp(1.0)).epsilon(1e-15));
    CHECK(g3.kappa_proxy == doctest::Approx(-1.0 / (2.0 * std::log(0.25))).epsilon(1e-12));

    const GeometryConstants g4 = geometry_constants(16.0, p, 0.2, 0.5, 3.0, 2);
    CHECK(2.0 * g4.half_width >= 2.0 * 3.0 * 4.0);
    CHECK(g4.carleman_radius == doctest::Approx(9.0 * std::exp(1.0) * std::sqrt(2.0)));
    CHECK(g4.log_theta < 0.0);
}
