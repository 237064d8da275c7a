#include "speclab/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "speclab/specineq.hpp"

namespace speclab::control {

using numerics::DenseSym;

HeatState project(const model::Eigensystem& sys, std::span<const double> g, double lambda_trunc) {
    const std::size_t m = model::counting_function(sys, lambda_trunc);
    HeatState state;
    state.coefficients.resize(m);
    for (std::size_t k = 0; k < m; ++k) state.coefficients[k] = sys.dot(g, sys.vector(k));
    return state;
}

HeatState heat_propagate(const model::Eigensystem& sys, const HeatState& state, double dt) {
    if (!(dt >= 0.0)) throw ValidationError("dt", "heat propagation needs dt >= 0");
    HeatState out = state;
    out.time += dt;
    for (std::size_t k = 0; k < out.coefficients.size(); ++k)
        out.coefficients[k] *= std::exp(-sys.value(k) * dt);
    return out;
}

double state_norm(const HeatState& state) {
    double s = 0.0;
    for (double a : state.coefficients) s += a * a;
    return std::sqrt(s);
}

namespace {

/// B_jk = G_jk (1 - e^{-(lambda_j + lambda_k) T}) / (lambda_j + lambda_k):
/// the exact time integral of the windowed observation Gramian.
DenseSym observation_gramian(const model::Eigensystem& sys, const DenseSym& g, double T,
                             std::size_t m) {
    DenseSym b(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = j; i < m; ++i) {
            const double lsum = sys.value(i) + sys.value(j);
            b.at(i, j) = g(i, j) * (1.0 - std::exp(-lsum * T)) / lsum;
        }
    }
    return b;
}

}  // namespace

CobsEstimate estimate_cobs(const model::Eigensystem& sys, const sensors::SensorMask& mask,
                           double T, double lambda_trunc, const BoundConstants& constants) {
    if (!(T > 0.0)) throw ValidationError("T", "observability horizon must be positive");
    const std::size_t m = model::counting_function(sys, lambda_trunc);
    if (m == 0) throw ValidationError("lambda_trunc", "truncated subspace is empty");

    const model::SpectralSubspace sub = model::subspace(sys, lambda_trunc);
    const DenseSym g = specineq::gram(sub, mask);
    const DenseSym b = observation_gramian(sys, g, T, m);

    DenseSym a(m);
    for (std::size_t k = 0; k < m; ++k) a.at(k, k) = std::exp(-2.0 * sys.value(k) * T);

    CobsEstimate est;
    est.T = T;
    est.lambda_trunc = lambda_trunc;
    est.dim = m;
    est.constants = constants;
    try {
        const numerics::GenEigResult top = numerics::gen_eig_extreme(a, b, numerics::Extreme::Max);
        est.cobs_sq = top.value;
    } catch (const NotPositiveDefinite&) {
        const numerics::EigPairs be = numerics::dense_eigh(b);
        throw Error("estimate_cobs: observation Gramian numerically singular "
                    "(mask too small or unresolved); smallest B eigenvalue = " +
                    std::to_string(be.values.front()));
    }
    est.cobs = std::sqrt(std::max(0.0, est.cobs_sq));
    {
        const numerics::EigPairs be = numerics::dense_eigh(b);
        est.smallest_b_eigenvalue = be.values.front();
    }

    const model::PotentialSpec& p = sys.potential();
    if (p.confining()) {
        // bounds only make sense for admissible alpha; report NaN otherwise
        est.closed_bound_log = 0.0;
        est.closed_form_bound = std::numeric_limits<double>::quiet_NaN();
        est.single_power_bound = std::numeric_limits<double>::quiet_NaN();
        try {
            est.closed_bound_log =
                cobs_bound_log(T, constants.delta, constants.alpha, p, constants.K, constants.C);
            est.closed_form_bound = std::exp(est.closed_bound_log);
            if (p.tau1() == p.tau2())
                est.single_power_bound =
                    single_power_bound(T, constants.alpha, p.tau1(), constants.D);
        } catch (const ValidationError&) {
        }
    }
    return est;
}

double cobs_bound_log(double T, double delta, double alpha, const model::PotentialSpec& p,
                      double K, double C) {
    if (!(T > 0.0)) throw ValidationError("T", "bound needs T > 0");
    if (!(delta > 0.0 && delta < 0.5))
        throw ValidationError("delta", "delta must lie in (0, 1/2)");
    if (!(K >= 1.0)) throw ValidationError("K", "K must be >= 1");
    if (!(C > 0.0)) throw ValidationError("C", "C must be positive");
    const double s = (alpha + 2.0 * p.tau2() / 3.0) / p.tau1();
    if (!(s > 0.0 && s < 1.0))
        throw ValidationError("alpha", "s >= 1, bound inapplicable (needs alpha < tau1 - 2 tau2/3)");
    const double cpow = std::pow(C, 1.0 + alpha);
    const double d1 = -cpow * std::log(delta);
    const double log_d0 = -cpow * std::log(delta);  // log(delta^{-C^{1+alpha}})
    // log[(K/T)(2 d0 + 1)^K] + K (d1 / T^s)^{1/(1-s)}
    double log_2d0p1;
    if (log_d0 > 700.0)
        log_2d0p1 = std::log(2.0) + log_d0;  // the +1 is negligible
    else
        log_2d0p1 = std::log(2.0 * std::exp(log_d0) + 1.0);
    return std::log(K) - std::log(T) + K * log_2d0p1 +
           K * std::pow(d1 / std::pow(T, s), 1.0 / (1.0 - s));
}

double cobs_bound(double T, double delta, double alpha, const model::PotentialSpec& p, double K,
                  double C) {
    return std::exp(cobs_bound_log(T, delta, alpha, p, K, C));
}

double single_power_bound(double T, double alpha, double tau, double D) {
    if (!(T > 0.0)) throw ValidationError("T", "bound needs T > 0");
    if (!(tau > 3.0 * alpha))
        throw ValidationError("alpha", "single-power form needs tau > 3 alpha");
    const double expo = 1.0 + (2.0 * alpha + tau / 3.0) / (tau / 3.0 - alpha);
    return (D / T) * std::exp(D / std::pow(T, expo));
}

ControlResult min_norm_control(const model::Eigensystem& sys, const sensors::SensorMask& mask,
                               double T, double lambda_trunc, std::span<const double> g) {
    if (!(T > 0.0)) throw ValidationError("T", "control horizon must be positive");
    const std::size_t m = model::counting_function(sys, lambda_trunc);
    if (m == 0) throw ValidationError("lambda_trunc", "truncated subspace is empty");

    const model::SpectralSubspace sub = model::subspace(sys, lambda_trunc);
    const DenseSym gram = specineq::gram(sub, mask);
    const DenseSym b = observation_gramian(sys, gram, T, m);

    HeatState init = project(sys, g, lambda_trunc);
    std::vector<double> free_final(m);
    for (std::size_t k = 0; k < m; ++k)
        free_final[k] = init.coefficients[k] * std::exp(-sys.value(k) * T);

    ControlResult out;
    out.initial_norm = state_norm(init);
    if (out.initial_norm == 0.0) {
        out.coefficients.assign(m, 0.0);
        return out;  // zero data steers itself
    }

    std::vector<double> l;
    try {
        l = numerics::cholesky(b);
    } catch (const NotPositiveDefinite&) {
        const numerics::EigPairs be = numerics::dense_eigh(b);
        throw Error("min_norm_control: observation Gramian numerically singular; "
                    "smallest B eigenvalue = " + std::to_string(be.values.front()));
    }
    std::vector<double> rhs(m);
    for (std::size_t k = 0; k < m; ++k) rhs[k] = -free_final[k];
    out.coefficients = numerics::cholesky_solve(l, m, rhs);

    // cost^2 = c^T B c; final state = e^{-lambda T} a + B c (zero up to roundoff)
    double cost_sq = 0.0, final_sq = 0.0;
    std::vector<double> bc(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += b(i, j) * out.coefficients[j];
        bc[i] = s;
        cost_sq += out.coefficients[i] * s;
        const double fin = free_final[i] + s;
        final_sq += fin * fin;
    }
    out.cost = std::sqrt(std::max(0.0, cost_sq));
    out.final_norm = std::sqrt(final_sq);
    return out;
}

std::vector<double> control_snapshot(const model::Eigensystem& sys,
                                     const sensors::SensorMask& mask, const ControlResult& result,
                                     double T, double t) {
    if (!(t >= 0.0 && t <= T)) throw ValidationError("t", "snapshot time must lie in [0, T]");
    const std::size_t npts = sys.grid().total_points();
    std::vector<double> u(npts, 0.0);
    for (std::size_t k = 0; k < result.coefficients.size(); ++k) {
        const double a = result.coefficients[k] * std::exp(-sys.value(k) * (T - t));
        const auto f = sys.vector(k);
        for (std::size_t i = 0; i < npts; ++i) u[i] += a * f[i];
    }
    for (std::size_t i = 0; i < npts; ++i) u[i] *= mask.weights()[i];
    return u;
}

}  // namespace speclab::control
