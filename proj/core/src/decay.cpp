#include "speclab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "speclab/rng.hpp"
#include "speclab/stats.hpp"

namespace speclab::decay {

namespace {

/// sum h^d e^{2 mu |x_i|} q_i for a nonnegative pointwise quantity q.
/// Large exponents are combined with log q per term to dodge intermediate
/// overflow; a term that itself exceeds the double range throws.
double weighted_sum(const model::Grid& grid, std::span<const double> q, double mu) {
    if (mu * grid.half_width() > 700.0)
        throw ValidationError("mu",
                              "weight exponent too large (mu * L > 700); rescale the computation "
                              "to the log domain");
    const double w = grid.cell_weight();
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        const double expo = 2.0 * mu * grid.radius(i);
        double term;
        if (expo < 600.0) {
            term = std::exp(expo) * q[i];
        } else {
            const double log_term = expo + std::log(q[i]);
            if (log_term > 706.0)
                throw Error("weighted_l2: a quadrature term overflows the double range; "
                            "rescale the computation to the log domain");
            term = std::exp(log_term);
        }
        sum += term;
    }
    const double value = sum * w;
    if (!std::isfinite(value))
        throw Error("weighted_l2: quadrature overflowed; rescale the computation to the log domain");
    return value;
}

std::vector<double> squares(std::span<const double> f) {
    std::vector<double> q(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) q[i] = f[i] * f[i];
    return q;
}

}  // namespace

double weighted_l2(const model::Grid& grid, std::span<const double> f, double mu) {
    if (f.size() != grid.total_points())
        throw ValidationError("f", "grid function has wrong length");
    return std::sqrt(weighted_sum(grid, squares(f), mu));
}

std::vector<double> gradient_sq(const model::Grid& grid, std::span<const double> f) {
    const std::size_t n = grid.points_per_axis();
    const double inv2h = 1.0 / (2.0 * grid.spacing());
    std::vector<double> g(f.size(), 0.0);
    auto axis_deriv = [&](auto value, std::size_t i) {
        if (i == 0) return (-3.0 * value(0) + 4.0 * value(1) - value(2)) * inv2h;
        if (i == n - 1) return (3.0 * value(n - 1) - 4.0 * value(n - 2) + value(n - 3)) * inv2h;
        return (value(i + 1) - value(i - 1)) * inv2h;
    };
    if (grid.dimension() == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = axis_deriv([&](std::size_t j) { return f[j]; }, i);
            g[i] = d * d;
        }
    } else {
        for (std::size_t ix = 0; ix < n; ++ix) {
            for (std::size_t iy = 0; iy < n; ++iy) {
                const double dx =
                    axis_deriv([&](std::size_t j) { return f[grid.flat(j, iy)]; }, ix);
                const double dy =
                    axis_deriv([&](std::size_t j) { return f[grid.flat(ix, j)]; }, iy);
                g[grid.flat(ix, iy)] = dx * dx + dy * dy;
            }
        }
    }
    return g;
}

NuFit fit_weight_rate(const model::PotentialSpec& p, const model::Grid& grid) {
    using model::PotentialKind;
    if (p.kind() == PotentialKind::Free) return {0.0, 0.0, true};
    if (p.kind() == PotentialKind::TwoSidedPower) {
        if (p.nu() <= 0.0 && p.m_nu() <= 0.0)
            throw ValidationError("potential.nu", "two-sided potentials need explicit (nu, M_nu)");
        return {p.nu(), p.m_nu(), true};
    }
    if (p.nu() > 0.0 || p.m_nu() > 0.0) return {p.nu(), p.m_nu(), true};

    const double tau = p.tau1();
    const double r_max = grid.max_radius();
    auto weighted_grad = [&](double nu, double r) {
        return std::exp(-nu * r) * tau * std::pow(r, tau - 1.0);
    };

    NuFit fit;
    fit.monotone = false;
    fit.nu = 1.0;
    for (double nu : {0.1, 0.25, 0.5, 1.0}) {
        // nonincreasing on [1, r_max] iff the single interior peak (tau-1)/nu
        // sits at or below radius one
        if ((tau - 1.0) / nu <= 1.0 + 1e-12) {
            fit.nu = nu;
            fit.monotone = true;
            break;
        }
    }
    // sup over r >= 1 is attained at max(1, (tau-1)/nu)
    const double r_peak = std::min(std::max(1.0, (tau - 1.0) / fit.nu), r_max);
    fit.m_nu = weighted_grad(fit.nu, r_peak);
    // cross-check against the grid maximization (covers non-radial cases)
    for (std::size_t i = 0; i < grid.total_points(); ++i) {
        const double r = grid.radius(i);
        if (r < 1.0) continue;
        const auto pt = grid.point(i);
        const double g = std::exp(-fit.nu * r) *
                         p.gradient_norm(std::span<const double>(pt.data(), grid.dimension()));
        fit.m_nu = std::max(fit.m_nu, g);
    }
    return fit;
}

WeightedNormReport check_prop34(const model::Eigensystem& sys, std::size_t k) {
    const model::PotentialSpec& p = sys.potential();
    const double lambda = sys.value(k);
    const double radius = std::max(1.0, std::pow((lambda + 2.0) / p.c1(), 1.0 / p.tau1()));
    if (sys.grid().half_width() < radius + 2.0)
        throw ValidationError("grid", "box half-width must reach R + 2 for the weighted estimate");

    WeightedNormReport rep;
    rep.mu = 0.5;
    rep.radius = radius;
    rep.near_boundary = sys.grid().half_width() < radius + 4.0;
    rep.lhs = weighted_sum(sys.grid(), squares(sys.vector(k)), 0.5);
    const double norm_sq = sys.dot(sys.vector(k), sys.vector(k));
    rep.rhs = 8.0 * std::exp(radius + 1.0) * norm_sq;
    rep.ratio = rep.lhs / rep.rhs;
    return rep;
}

WeightedNormReport check_prop35(const model::Eigensystem& sys, std::size_t k,
                                std::optional<NuFit> fit) {
    const model::PotentialSpec& p = sys.potential();
    const NuFit nf = fit ? *fit : fit_weight_rate(p, sys.grid());
    const double lambda = sys.value(k);
    const double nu = nf.nu;
    const double radius =
        std::max(1.0, std::pow(((nu + 1.0) * (nu + 1.0) + lambda + 1.0) / p.c1(), 1.0 / p.tau1()));
    if (sys.grid().half_width() < radius + 2.0)
        throw ValidationError("grid", "box half-width must reach R + 2 for the weighted estimate");

    WeightedNormReport rep;
    rep.mu = 0.5;
    rep.radius = radius;
    rep.nu = nu;
    rep.m_nu = nf.m_nu;
    rep.near_boundary = sys.grid().half_width() < radius + 4.0;
    rep.lhs = weighted_sum(sys.grid(), gradient_sq(sys.grid(), sys.vector(k)), 0.5);
    const double norm_sq = sys.dot(sys.vector(k), sys.vector(k));
    const double log_factor = 2.0 * (1.0 + nu) * (radius + 1.0);
    const double front = 8.0 * lambda + (2.0 * nu + 5.0) * nf.m_nu * nf.m_nu;
    rep.rhs = std::exp(log_factor + std::log(front)) * norm_sq;
    rep.ratio = std::isfinite(rep.rhs)
                    ? rep.lhs / rep.rhs
                    : std::exp(std::log(rep.lhs) - log_factor - std::log(front) - std::log(norm_sq));
    return rep;
}

double h1_tail(const model::Grid& grid, std::span<const double> f, double r) {
    if (r < 0.0) throw ValidationError("r", "tail radius must be nonnegative");
    const std::vector<double> g = gradient_sq(grid, f);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (grid.radius(i) > r) sum += f[i] * f[i] + g[i];
    return sum * grid.cell_weight();
}

LocalizationCurve localization_scan(const model::Eigensystem& sys,
                                    std::span<const double> lambdas, std::size_t trials,
                                    std::uint64_t seed) {
    if (trials == 0) throw ValidationError("trials", "need at least one trial");
    const model::Grid& grid = sys.grid();
    const std::size_t npts = grid.total_points();

    // radii sorted once; per-trial tails are suffix sums over this order
    std::vector<std::size_t> order(npts);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> radii(npts);
    for (std::size_t i = 0; i < npts; ++i) radii[i] = grid.radius(i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });
    std::vector<double> sorted_radii(npts);
    for (std::size_t i = 0; i < npts; ++i) sorted_radii[i] = radii[order[i]];

    LocalizationCurve curve;
    curve.seed = seed;
    std::vector<double> f(npts), suffix(npts + 1);

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double lambda = lambdas[li];
        const std::size_t m = model::counting_function(sys, lambda);
        if (m == 0) {
            curve.skipped.push_back(lambda);
            continue;
        }
        double r_star = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng(derive_seed(seed, li * 1000003ULL + t));
            std::vector<double> coeff(m);
            double nrm = 0.0;
            for (auto& c : coeff) {
                c = rng.gaussian();
                nrm += c * c;
            }
            nrm = std::sqrt(nrm);
            for (auto& c : coeff) c /= nrm;

            std::fill(f.begin(), f.end(), 0.0);
            for (std::size_t k = 0; k < m; ++k) {
                const auto v = sys.vector(k);
                for (std::size_t i = 0; i < npts; ++i) f[i] += coeff[k] * v[i];
            }
            const std::vector<double> g = gradient_sq(grid, f);
            suffix[npts] = 0.0;
            for (std::size_t i = npts; i-- > 0;) {
                const std::size_t p = order[i];
                suffix[i] = suffix[i + 1] + f[p] * f[p] + g[p];
            }
            const double w = grid.cell_weight();
            auto tail = [&](double r) {
                const std::size_t j =
                    std::upper_bound(sorted_radii.begin(), sorted_radii.end(), r) -
                    sorted_radii.begin();
                return w * suffix[j];
            };
            // ||f||_{L^2} = 1 by construction, so the target tail is 1/2
            double lo = 0.0, hi = grid.max_radius();
            if (tail(lo) <= 0.5) {
                hi = 0.0;
            } else {
                while (hi - lo > grid.spacing() / 2.0) {
                    const double mid = 0.5 * (lo + hi);
                    if (tail(mid) <= 0.5)
                        hi = mid;
                    else
                        lo = mid;
                }
            }
            r_star = std::max(r_star, hi);
        }
        curve.points.push_back({lambda, m, r_star});
    }

    if (curve.points.size() >= 2) {
        std::vector<double> xs, ys;
        for (const auto& pt : curve.points) {
            if (pt.r_star <= 0.0) continue;
            xs.push_back(pt.lambda);
            ys.push_back(pt.r_star);
        }
        if (xs.size() >= 2) {
            const LineFit fit = fit_loglog(xs, ys);
            curve.fitted_exponent = fit.slope;
            curve.fit_constant = std::exp(fit.intercept);
        }
    }
    const double inv_tau1 = 1.0 / sys.potential().tau1();
    for (const auto& pt : curve.points)
        curve.effective_constant =
            std::max(curve.effective_constant, pt.r_star / std::pow(pt.lambda, inv_tau1));
    return curve;
}

}  // namespace speclab::decay
