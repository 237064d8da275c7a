#include "speclab/numerics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "speclab/rng.hpp"

using namespace speclab;
using namespace speclab::numerics;

namespace {

SymTridiag dirichlet_laplacian_1d(std::size_t n, double h = 1.0) {
    SymTridiag t;
    t.diag.assign(n, 2.0 / (h * h));
    t.offdiag.assign(n - 1, -1.0 / (h * h));
    return t;
}

DenseSym random_sym(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    DenseSym a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) a.at(i, j) = rng.gaussian();
    return a;
}

double gram_identity_defect(const EigPairs& p) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.count(); ++i) {
        for (std::size_t j = i; j < p.count(); ++j) {
            double g = 0.0;
            for (std::size_t r = 0; r < p.vectors[i].size(); ++r)
                g += p.vectors[i][r] * p.vectors[j][r];
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double max_residual_tridiag(const SymTridiag& t, const EigPairs& p) {
    std::vector<double> y(t.order());
    double worst = 0.0;
    for (std::size_t k = 0; k < p.count(); ++k) {
        t.mul(p.vectors[k], y);
        double r = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - p.values[k] * p.vectors[k][i];
            r += d * d;
        }
        worst = std::max(worst, std::sqrt(r));
    }
    return worst;
}

}  // namespace

TEST_CASE("tridiag_eigh: 1x1") {
    SymTridiag t;
    t.diag = {2.0};
    const EigPairs p = tridiag_eigh(t);
    REQUIRE(p.count() == 1);
    CHECK(p.values[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(std::abs(p.vectors[0][0]) - 1.0) < 1e-15);
}

TEST_CASE("tridiag_eigh: 2x2 symmetric pair") {
    SymTridiag t;
    t.diag = {0.0, 0.0};
    t.offdiag = {1.0};
    const EigPairs p = tridiag_eigh(t);
    CHECK(p.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(p.values[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tridiag_eigh: 3x3 Dirichlet stencil closed form") {
    // eigenvalues of diag 2, offdiag -1 are 2 - 2 cos(k pi / 4), k = 1..3
    SymTridiag t;
    t.diag = {2.0, 2.0, 2.0};
    t.offdiag = {-1.0, -1.0};
    const EigPairs p = tridiag_eigh(t);
    const double pi = std::numbers::pi;
    for (int k = 1; k <= 3; ++k)
        CHECK(p.values[k - 1] == doctest::Approx(2.0 - 2.0 * std::cos(k * pi / 4.0)).epsilon(1e-13));
    CHECK(p.values[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-13));
    CHECK(p.values[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("tridiag_eigh: residuals, orthonormality and trace on a large stencil") {
    const std::size_t n = 500;
    SymTridiag t = dirichlet_laplacian_1d(n);
    const EigPairs p = tridiag_eigh(t);
    CHECK(gram_identity_defect(p) < 1e-10);
    CHECK(max_residual_tridiag(t, p) <= 1e-10 * t.norm_bound());
    double sum = 0.0;
    for (double v : p.values) sum += v;
    CHECK(sum == doctest::Approx(t.trace()).epsilon(1e-8));
    for (std::size_t k = 1; k < n; ++k) CHECK(p.values[k] >= p.values[k - 1]);
}

TEST_CASE("tridiag_eigh: rejects invalid input") {
    SymTridiag t;
    CHECK_THROWS_AS(tridiag_eigh(t), ValidationError);
    t.diag = {1.0, 2.0};
    t.offdiag = {std::nan("")};
    CHECK_THROWS_AS(tridiag_eigh(t), ValidationError);
}

TEST_CASE("dense_eigh: identity and swap matrix") {
    const EigPairs id3 = dense_eigh(DenseSym::identity(3));
    for (int k = 0; k < 3; ++k) CHECK(id3.values[k] == doctest::Approx(1.0).epsilon(1e-14));

    DenseSym swap2(2);
    swap2.at(0, 1) = 1.0;
    const EigPairs p = dense_eigh(swap2);
    CHECK(p.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(p.values[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dense_eigh: random 20x20 residual and orthonormality") {
    const DenseSym a = random_sym(20, 42);
    const EigPairs p = dense_eigh(a);
    CHECK(gram_identity_defect(p) < 1e-10);
    std::vector<double> y(20);
    for (std::size_t k = 0; k < 20; ++k) {
        a.mul(p.vectors[k], y);
        double r = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            const double d = y[i] - p.values[k] * p.vectors[k][i];
            r += d * d;
        }
        CHECK(std::sqrt(r) < 1e-10 * a.norm_bound());
    }
    double sum = 0.0;
    for (double v : p.values) sum += v;
    CHECK(sum == doctest::Approx(a.trace()).epsilon(1e-8));
}

TEST_CASE("lanczos_smallest: diagonal 1..n returns 1,2,3") {
    const std::size_t n = 200;
    std::vector<SparseSym::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, double(i + 1)});
    const SparseSym a = SparseSym::from_upper(n, entries);
    const EigPairs p = lanczos_smallest(a, 3, 7);
    REQUIRE(p.count() == 3);
    for (int k = 0; k < 3; ++k) CHECK(p.values[k] == doctest::Approx(k + 1.0).epsilon(1e-11));
}

TEST_CASE("lanczos_smallest: matches tridiag_eigh on the 1D Dirichlet Laplacian") {
    const std::size_t n = 100;
    SymTridiag t = dirichlet_laplacian_1d(n);
    const std::vector<double> exact = tridiag_eigvals(t);
    const SparseSym a = SparseSym::from_tridiag(t);
    const EigPairs p = lanczos_smallest(a, 5, 3);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(p.values[k] - exact[k]) < 1e-9);
}

TEST_CASE("lanczos_smallest: 2D tensor-sum Laplacian matches 1D sums (with multiplicity)") {
    // 20x20 grid, 5-point stencil; eigenvalues are sums of 1D stencil values,
    // so cross pairs appear with multiplicity two.
    const std::size_t n1 = 20;
    const std::size_t n = n1 * n1;
    std::vector<SparseSym::Entry> entries;
    for (std::size_t ix = 0; ix < n1; ++ix) {
        for (std::size_t iy = 0; iy < n1; ++iy) {
            const std::size_t r = ix * n1 + iy;
            entries.push_back({r, r, 4.0});
            if (iy + 1 < n1) entries.push_back({r, r + 1, -1.0});
            if (ix + 1 < n1) entries.push_back({r, r + n1, -1.0});
        }
    }
    const SparseSym a = SparseSym::from_upper(n, entries);

    const std::vector<double> one_d = tridiag_eigvals(dirichlet_laplacian_1d(n1));
    std::vector<double> sums;
    for (double x : one_d)
        for (double y : one_d) sums.push_back(x + y);
    std::sort(sums.begin(), sums.end());

    const std::size_t k = 12;
    const EigPairs p = lanczos_smallest(a, k, 11);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p.values[i] - sums[i]) < 1e-9);
}

TEST_CASE("lanczos_smallest agrees with dense_eigh on a random sparse matrix") {
    const std::size_t n = 120;
    Rng rng(5);
    std::vector<SparseSym::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        entries.push_back({i, i, 2.0 + rng.uniform()});
        if (i + 1 < n) entries.push_back({i, i + 1, rng.gaussian() * 0.3});
        if (i + 7 < n) entries.push_back({i, i + 7, rng.gaussian() * 0.2});
    }
    const SparseSym a = SparseSym::from_upper(n, entries);
    const EigPairs sparse = lanczos_smallest(a, 6, 17);

    DenseSym d(n);
    for (const auto& e : entries) d.at(e.row, e.col) += e.value;
    // rebuild exactly: from_upper sums duplicates, DenseSym::at returns slots
    DenseSym dd(n);
    for (const auto& e : entries) dd.at(e.row, e.col) = d(e.row, e.col);
    const EigPairs dense = dense_eigh(dd);
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(sparse.values[k] == doctest::Approx(dense.values[k]).epsilon(1e-10));
}

TEST_CASE("tridiag_below: shift-inverted scan matches the full decomposition") {
    const std::size_t n = 300;
    Rng rng(23);
    SymTridiag t;
    t.diag.resize(n);
    t.offdiag.resize(n - 1);
    for (auto& d : t.diag) d = 2.0 + 0.5 * rng.uniform();
    for (auto& e : t.offdiag) e = -1.0 + 0.2 * rng.gaussian();

    const EigPairs full = tridiag_eigh(t);
    const double cap = full.values[n / 4];
    const EigPairs below = tridiag_below(t, cap, 5);
    std::size_t expected = 0;
    while (expected < n && full.values[expected] <= cap) ++expected;
    REQUIRE(below.count() == expected);
    for (std::size_t k = 0; k < expected; ++k)
        CHECK(std::abs(below.values[k] - full.values[k]) < 1e-10 * t.norm_bound());
    CHECK(max_residual_tridiag(t, below) < 1e-9 * t.norm_bound());
    CHECK(gram_identity_defect(below) < 1e-9);

    // a cap under the whole spectrum comes back empty
    const EigPairs none = tridiag_below(t, full.values[0] - 0.5, 5);
    CHECK(none.count() == 0);
}

TEST_CASE("lanczos_below stops right past the cap") {
    const std::size_t n = 150;
    std::vector<SparseSym::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 0.5 * double(i + 1)});
    const SparseSym a = SparseSym::from_upper(n, entries);
    const EigPairs p = lanczos_below(a, 10.2, 3);
    REQUIRE(p.count() == 20);  // 0.5 * k <= 10.2 for k = 1..20
    for (std::size_t k = 0; k < p.count(); ++k)
        CHECK(p.values[k] == doctest::Approx(0.5 * double(k + 1)).epsilon(1e-10));
}

TEST_CASE("gen_eig_extreme: identity pair and diagonal case") {
    const DenseSym id2 = DenseSym::identity(2);
    CHECK(gen_eig_extreme(id2, id2, Extreme::Min).value == doctest::Approx(1.0));
    CHECK(gen_eig_extreme(id2, id2, Extreme::Max).value == doctest::Approx(1.0));

    DenseSym a(2);
    a.at(0, 0) = 1.0;
    a.at(1, 1) = 4.0;
    CHECK(gen_eig_extreme(a, id2, Extreme::Max).value == doctest::Approx(4.0));
    CHECK(gen_eig_extreme(a, id2, Extreme::Min).value == doctest::Approx(1.0));
}

TEST_CASE("gen_eig_extreme: random SPD pair vs Rayleigh sampling oracle") {
    const std::size_t n = 10;
    Rng rng(99);
    // SPD B: G G^T + n I
    std::vector<double> g(n * n);
    for (auto& v : g) v = rng.gaussian();
    DenseSym b(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += g[i * n + k] * g[j * n + k];
            b.at(i, j) = s + (i == j ? double(n) : 0.0);
        }
    const DenseSym a = random_sym(n, 123);

    const GenEigResult mx = gen_eig_extreme(a, b, Extreme::Max);
    const GenEigResult mn = gen_eig_extreme(a, b, Extreme::Min);
    CHECK(mx.residual < 1e-10);
    CHECK(mn.residual < 1e-10);
    CHECK(mn.value <= mx.value);

    // sampled Rayleigh quotients never exceed the reported extremes
    std::vector<double> x(n), ax(n), bx(n);
    for (int trial = 0; trial < 2000; ++trial) {
        for (auto& v : x) v = rng.gaussian();
        a.mul(x, ax);
        b.mul(x, bx);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += x[i] * ax[i];
            den += x[i] * bx[i];
        }
        const double q = num / den;
        CHECK(q <= mx.value + 1e-10);
        CHECK(q >= mn.value - 1e-10);
    }
}

TEST_CASE("gen_eig_extreme: indefinite B reports the offending pivot") {
    DenseSym a = DenseSym::identity(3);
    DenseSym b = DenseSym::identity(3);
    b.at(2, 2) = -1.0;
    try {
        gen_eig_extreme(a, b, Extreme::Min);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot == 2);
    }
}
