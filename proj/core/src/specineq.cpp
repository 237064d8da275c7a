#include "speclab/specineq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "speclab/parallel.hpp"

namespace speclab::specineq {

using numerics::DenseSym;

DenseSym gram(const model::SpectralSubspace& sub, const sensors::SensorMask& mask) {
    const model::Eigensystem& sys = sub.sys();
    if (!(sys.grid() == mask.grid()))
        throw ValidationError("gram", "subspace and mask must live on the same grid");
    const std::size_t m = sub.dim;
    const std::size_t npts = sys.grid().total_points();
    const double w = sys.grid().cell_weight();
    const std::span<const double> mw = mask.weights();
    DenseSym g(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto fj = sys.vector(j);
        for (std::size_t i = j; i < m; ++i) {
            const auto fi = sys.vector(i);
            double s = 0.0;
            for (std::size_t p = 0; p < npts; ++p) s += mw[p] * fi[p] * fj[p];
            g.at(i, j) = s * w;
        }
    }
    return g;
}

DenseSym gram(const model::Eigensystem& confined, const model::Eigensystem& free_factor,
              const model::TensorPairs& pairs, const sensors::SensorMask& mask) {
    const model::Grid& g2 = mask.grid();
    if (g2.dimension() != 2)
        throw ValidationError("gram", "tensor Gram needs a 2D mask");
    const std::size_t n = g2.points_per_axis();
    if (confined.grid().points_per_axis() != n || free_factor.grid().points_per_axis() != n)
        throw ValidationError("gram", "tensor factors must match the mask grid");

    std::size_t m1 = 0, m2 = 0;
    for (const auto& ij : pairs.index) {
        m1 = std::max<std::size_t>(m1, ij[0] + 1);
        m2 = std::max<std::size_t>(m2, ij[1] + 1);
    }
    // W[x](j, j') = sum_y w(x, y) psi_j(y) psi_j'(y); a few MB at scan sizes
    std::vector<double> wtab(n * m2 * m2);
    const std::span<const double> mw = mask.weights();
    for (std::size_t ix = 0; ix < n; ++ix) {
        double* slab = &wtab[ix * m2 * m2];
        for (std::size_t j = 0; j < m2; ++j) {
            const auto pj = free_factor.vector(j);
            for (std::size_t jp = j; jp < m2; ++jp) {
                const auto pjp = free_factor.vector(jp);
                double s = 0.0;
                for (std::size_t iy = 0; iy < n; ++iy)
                    s += mw[g2.flat(ix, iy)] * pj[iy] * pjp[iy];
                slab[j * m2 + jp] = slab[jp * m2 + j] = s;
            }
        }
    }
    const double w2 = g2.cell_weight();
    const std::size_t m = pairs.index.size();
    DenseSym g(m);
    for (std::size_t b = 0; b < m; ++b) {
        const auto [ib, jb] = std::pair{pairs.index[b][0], pairs.index[b][1]};
        const auto phib = confined.vector(ib);
        for (std::size_t a = b; a < m; ++a) {
            const auto [ia, ja] = std::pair{pairs.index[a][0], pairs.index[a][1]};
            const auto phia = confined.vector(ia);
            double s = 0.0;
            for (std::size_t ix = 0; ix < n; ++ix)
                s += phia[ix] * phib[ix] * wtab[ix * m2 * m2 + ja * m2 + jb];
            g.at(a, b) = s * w2;
        }
    }
    return g;
}

double observability_ratio(const numerics::DenseSym& gram_matrix) {
    if (gram_matrix.order() == 0) throw ValidationError("subspace", "empty subspace");
    const numerics::EigPairs p = numerics::dense_eigh(gram_matrix);
    return std::sqrt(std::max(0.0, p.values.front()));
}

double observability_ratio(const model::SpectralSubspace& sub, const sensors::SensorMask& mask) {
    if (sub.dim == 0) throw ValidationError("subspace", "empty subspace");
    return observability_ratio(gram(sub, mask));
}

ReferenceExponents reference_exponents(double alpha, double tau1, double tau2) {
    ReferenceExponents r;
    r.thm_equidistributed = (alpha + 2.0 * tau2 / 3.0) / tau1;
    r.zhu_zhuge = alpha / tau1 + tau2 / (2.0 * tau1);
    r.conjecture = alpha / tau1 + 0.5;
    r.anisotropic = alpha / tau1 + 2.0 / 3.0;
    return r;
}

namespace {

/// Smallest required ball radius among lattice cells inside a box of
/// half-width L, for resolution planning.
double smallest_radius(const sensors::SensorSpec& spec, double half_width, int dimension) {
    using V = sensors::SensorSpec::Variant;
    const double k_max = std::floor(half_width + 0.5 - 1e-12);
    double knorm = k_max;
    if (dimension == 2 && spec.decay_axes == sensors::DecayAxes::All) knorm = k_max * std::sqrt(2.0);
    const double expo =
        (spec.alpha == 0.0 || knorm == 0.0) ? 1.0 : 1.0 + std::pow(knorm, spec.alpha);
    switch (spec.variant) {
        case V::EquidistributedDecay:
            return std::pow(spec.delta, expo);
        case V::BallUnion:
            return std::pow(0.5, expo);
        case V::ThickDecay:
            return spec.rho * std::pow(spec.gamma, expo);  // measure-scale proxy
        case V::Cone:
            return 0.05 * half_width;  // resolution set by the box instead
    }
    return 0.1;
}

std::size_t plan_resolution(const sensors::SensorSpec& spec, double half_width, int dim,
                            const GridPolicy& policy) {
    const double r_min = smallest_radius(spec, half_width, dim);
    const double h_target = std::max(r_min / policy.resolve_divisor, 1e-6);
    const std::size_t want = std::size_t(std::ceil(2.0 * half_width / h_target));
    const std::size_t cap = dim == 1 ? policy.n_cap_1d : policy.n_cap_2d;
    return std::clamp<std::size_t>(want, policy.n_min, cap);
}

numerics::DenseSym principal_block(const numerics::DenseSym& g, std::size_t m) {
    numerics::DenseSym out(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) out.at(i, j) = g(i, j);
    return out;
}

/// Builds the Gram matrix for the largest threshold on one grid, then reads
/// every c(lambda) off nested principal blocks.
void scan_shared(const model::PotentialSpec& p, const sensors::SensorSpec& spec,
                 std::span<const double> lambdas, const GridPolicy& policy, bool coarse,
                 RatioCurve& curve) {
    const bool tensor = p.kind() == model::PotentialKind::Anisotropic;
    const int dim = tensor ? 2 : 1;
    const double lambda_top = lambdas.back();
    const double half_width = model::localization_halfwidth(lambda_top, p, policy.margin);
    std::size_t n = plan_resolution(spec, half_width, dim, policy);
    if (coarse) n = std::max<std::size_t>(n / 2, 33);

    model::EigOptions eopts;
    eopts.buffer = policy.buffer;
    eopts.rel_tol = policy.rel_tol;
    eopts.seed = policy.seed;

    numerics::DenseSym g(0);
    std::vector<std::size_t> dims(lambdas.size());
    double unresolved = 0.0;
    if (!tensor) {
        const model::Grid grid = model::Grid::make(1, half_width, n);
        const model::Eigensystem sys = eigendecompose(assemble(grid, p), lambda_top, eopts);
        const sensors::SensorMask mask = sensors::realize(spec, grid);
        unresolved = mask.unresolved_fraction();
        const model::SpectralSubspace top = model::subspace(sys, lambda_top);
        if (top.dim == 0) throw ValidationError("subspace", "empty subspace");
        g = gram(top, mask);
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            dims[i] = model::counting_function(sys, lambdas[i]);
    } else {
        const model::Grid grid1 = model::Grid::make(1, half_width, n);
        const model::PotentialSpec w1 = model::PotentialSpec::power_law(p.tau1());
        const model::Eigensystem conf = eigendecompose(assemble(grid1, w1), lambda_top, eopts);
        const model::Eigensystem box = eigendecompose(
            assemble(grid1, model::PotentialSpec::free_potential()), lambda_top, eopts);
        const model::TensorPairs pairs = model::tensor_pairs(conf, box, lambda_top);
        if (pairs.index.empty()) throw ValidationError("subspace", "empty subspace");
        const model::Grid grid2 = model::Grid::make(2, half_width, n);
        const sensors::SensorMask mask = sensors::realize(spec, grid2);
        unresolved = mask.unresolved_fraction();
        g = gram(conf, box, pairs, mask);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            std::size_t m = 0;
            while (m < pairs.values.size() && pairs.values[m] <= lambdas[i]) ++m;
            dims[i] = m;
        }
    }

    parallel_for(lambdas.size(), policy.jobs, [&](std::size_t i) {
        if (dims[i] == 0)
            throw ValidationError("subspace",
                                  "empty subspace at the smallest scan threshold");
        const numerics::EigPairs ge = numerics::dense_eigh(principal_block(g, dims[i]));
        RatioSample& s = curve.samples[i];
        if (!coarse) {
            s.lambda = lambdas[i];
            s.dim = dims[i];
            s.unresolved_fraction = unresolved;
            s.gram_min = ge.values.front();
            s.gram_max = ge.values.back();
            s.c = std::sqrt(std::max(0.0, ge.values.front()));
        } else {
            s.c_coarse = std::sqrt(std::max(0.0, ge.values.front()));
            s.richardson_delta = s.c - s.c_coarse;
        }
    });
}

RatioSample measure_point(const model::PotentialSpec& p, const sensors::SensorSpec& spec,
                          double lambda, const GridPolicy& policy, std::size_t n_override) {
    const bool tensor = p.kind() == model::PotentialKind::Anisotropic;
    const int dim = tensor ? 2 : 1;
    const double half_width = model::localization_halfwidth(lambda, p, policy.margin);

    const std::size_t n = n_override ? n_override : plan_resolution(spec, half_width, dim, policy);

    model::EigOptions eopts;
    eopts.buffer = policy.buffer;
    eopts.rel_tol = policy.rel_tol;
    eopts.seed = policy.seed;

    RatioSample sample;
    sample.lambda = lambda;
    numerics::DenseSym g(0);
    if (!tensor) {
        const model::Grid grid = model::Grid::make(1, half_width, n);
        const model::Eigensystem sys = eigendecompose(assemble(grid, p), lambda, eopts);
        const model::SpectralSubspace sub = model::subspace(sys, lambda);
        if (sub.dim == 0) throw ValidationError("subspace", "empty subspace");
        const sensors::SensorMask mask = sensors::realize(spec, grid);
        sample.unresolved_fraction = mask.unresolved_fraction();
        sample.dim = sub.dim;
        g = gram(sub, mask);
    } else {
        const model::Grid grid1 = model::Grid::make(1, half_width, n);
        const model::PotentialSpec w1 = model::PotentialSpec::power_law(p.tau1());
        const model::Eigensystem conf = eigendecompose(assemble(grid1, w1), lambda, eopts);
        const model::Eigensystem box =
            eigendecompose(assemble(grid1, model::PotentialSpec::free_potential()), lambda, eopts);
        model::TensorPairs pairs = model::tensor_pairs(conf, box, lambda);
        if (pairs.index.empty()) throw ValidationError("subspace", "empty subspace");
        const model::Grid grid2 = model::Grid::make(2, half_width, n);
        const sensors::SensorMask mask = sensors::realize(spec, grid2);
        sample.unresolved_fraction = mask.unresolved_fraction();
        sample.dim = pairs.index.size();
        g = gram(conf, box, pairs, mask);
    }
    const numerics::EigPairs ge = numerics::dense_eigh(g);
    sample.gram_min = ge.values.front();
    sample.gram_max = ge.values.back();
    sample.c = std::sqrt(std::max(0.0, sample.gram_min));
    return sample;
}

}  // namespace

RatioCurve ratio_scan(const model::PotentialSpec& p, const sensors::SensorSpec& spec,
                      std::span<const double> lambdas, const GridPolicy& policy) {
    if (lambdas.size() < 4)
        throw ValidationError("scan.lambdas", "need an increasing list of at least 4 thresholds");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i - 1]))
            throw ValidationError("scan.lambdas", "thresholds must increase strictly");

    RatioCurve curve;
    curve.alpha = spec.variant == sensors::SensorSpec::Variant::Cone ? 0.0 : spec.alpha;
    curve.tau1 = p.tau1();
    curve.tau2 = p.tau2();
    curve.refs = reference_exponents(curve.alpha, curve.tau1, curve.tau2);
    curve.potential_desc = p.describe();
    curve.sensor_desc = spec.describe();
    curve.samples.resize(lambdas.size());

    if (policy.shared_grid) {
        scan_shared(p, spec, lambdas, policy, false, curve);
        if (policy.richardson) scan_shared(p, spec, lambdas, policy, true, curve);
        return curve;
    }

    parallel_for(lambdas.size(), policy.jobs, [&](std::size_t i) {
        RatioSample s = measure_point(p, spec, lambdas[i], policy, 0);
        if (policy.richardson) {
            // redo at half resolution for an error proxy (never a bound)
            const int dim = p.kind() == model::PotentialKind::Anisotropic ? 2 : 1;
            const double half_width = model::localization_halfwidth(lambdas[i], p, policy.margin);
            const std::size_t n_half =
                std::max<std::size_t>(plan_resolution(spec, half_width, dim, policy) / 2, 33);
            const RatioSample coarse = measure_point(p, spec, lambdas[i], policy, n_half);
            s.c_coarse = coarse.c;
            s.richardson_delta = s.c - coarse.c;
        }
        curve.samples[i] = s;
    });
    return curve;
}

ExponentFit fit_exponent(const RatioCurve& curve, double s_step, double s_max) {
    std::vector<double> lams, ys;
    std::size_t decaying = 0;
    for (const RatioSample& s : curve.samples) {
        if (s.c >= 1.0) continue;
        ++decaying;
        if (s.c <= 1e-300) continue;  // collapsed below measurable range
        lams.push_back(s.lambda);
        ys.push_back(std::log(1.0 / s.c));
    }
    if (decaying == 0) throw Error("fit_exponent: no decay to fit (every sample has c = 1)");
    if (lams.size() < 4)
        throw ValidationError("fit_exponent", "need at least 4 samples with c in (0, 1)");

    ExponentFit best;
    best.residual = std::numeric_limits<double>::infinity();
    const std::size_t n = lams.size();
    for (double s = s_step; s <= s_max + 1e-12; s += s_step) {
        double st = 0, sy = 0, stt = 0, sty = 0;
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = std::pow(lams[i], s);
            st += t[i];
            sy += ys[i];
            stt += t[i] * t[i];
            sty += t[i] * ys[i];
        }
        const double det = double(n) * stt - st * st;
        double b = det != 0.0 ? (double(n) * sty - st * sy) / det : 0.0;
        double a = (sy - b * st) / double(n);
        // d1 >= 0 and d0 >= 1: decay rates are nonnegative, and c <= 1 pins
        // the additive constant (this blocks the small-s collapse where a
        // large negative intercept mimics decay)
        if (b < 0.0) {
            b = 0.0;
            a = std::max(sy / double(n), 0.0);
        } else if (a < 0.0) {
            a = 0.0;
            b = std::max(sty / stt, 0.0);
        }
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - a - b * t[i];
            rss += r * r;
        }
        const double rms = std::sqrt(rss / double(n));
        if (rms < best.residual - 1e-12) {  // strict improvement; ties keep smaller s
            best.residual = rms;
            best.s_hat = s;
            best.a_hat = a;
            best.b_hat = b;
            best.used = n;
        }
    }
    return best;
}

ExponentReport exponent_report(const RatioCurve& curve, double tolerance) {
    ExponentReport rep;
    rep.fit = fit_exponent(curve);
    rep.refs = curve.refs;
    rep.below_equidistributed = rep.fit.s_hat <= rep.refs.thm_equidistributed + tolerance;
    rep.conjecture_gap = rep.fit.s_hat - rep.refs.conjecture;
    rep.admissible_limit = curve.tau1 - 2.0 * curve.tau2 / 3.0;
    rep.admissible = curve.alpha < rep.admissible_limit;
    rep.harmonic_condition = curve.alpha < 2.0 / 3.0;
    return rep;
}

}  // namespace speclab::specineq
