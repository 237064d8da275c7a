#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "speclab/model.hpp"
#include "speclab/numerics.hpp"
#include "speclab/sensors.hpp"

namespace speclab::control {

/// Heat-semigroup state in the eigenbasis: coefficients a_k = <g, f_k>.
struct HeatState {
    std::vector<double> coefficients;
    double time = 0.0;
};

/// a_k = <g, f_k> for eigenvalues up to lambda_trunc.
HeatState project(const model::Eigensystem& sys, std::span<const double> g, double lambda_trunc);

/// a_k <- a_k e^{-lambda_k dt}; exact in the discrete model.
HeatState heat_propagate(const model::Eigensystem& sys, const HeatState& state, double dt);

double state_norm(const HeatState& state);

/// Constants for the closed-form bound; the underlying constants are
/// existential in the analysis, so these are caller-supplied knobs.
/// delta and alpha describe the sensor geometry the bound is evaluated for.
struct BoundConstants {
    double K = 1.0;
    double C = 1.0;
    double D = 1.0;
    double delta = 0.25;
    double alpha = 0.0;
};

struct CobsEstimate {
    double T = 0.0;
    double lambda_trunc = 0.0;
    std::size_t dim = 0;
    double cobs_sq = 0.0;  // max generalized eigenvalue of A v = mu B v
    double cobs = 0.0;
    double smallest_b_eigenvalue = 0.0;
    double closed_form_bound = 0.0;      // closed-form bound at the supplied (K, C)
    double closed_bound_log = 0.0;
    double single_power_bound = 0.0;     // single-power form at the supplied D (power laws only)
    BoundConstants constants;
};

/// Observability constant of the truncated discrete system over [0, T]:
/// numerator A = diag(e^{-2 lambda_k T}), denominator B_jk =
/// G_jk (1 - e^{-(lambda_j + lambda_k) T}) / (lambda_j + lambda_k) with the
/// time integral in closed form. The estimate grows with the truncation
/// level (it is a restricted supremum).
CobsEstimate estimate_cobs(const model::Eigensystem& sys, const sensors::SensorMask& mask,
                           double T, double lambda_trunc, const BoundConstants& constants = {});

/// (K/T) (2 d0 + 1)^K exp[K (d1 / T^s)^{1/(1-s)}] with s = (alpha + 2 tau2/3)/tau1,
/// d1 = -C^{1+alpha} ln(delta), d0 = delta^{-C^{1+alpha}}; log-domain inside.
/// Rejects alpha >= tau1 - 2 tau2 / 3 (then s >= 1 and the bound is vacuous).
double cobs_bound(double T, double delta, double alpha, const model::PotentialSpec& p, double K,
                  double C);
double cobs_bound_log(double T, double delta, double alpha, const model::PotentialSpec& p,
                      double K, double C);

/// (D/T) exp(D / T^{1 + (2 alpha + tau/3)/(tau/3 - alpha)}) for V = |x|^tau.
double single_power_bound(double T, double alpha, double tau, double D);

struct ControlResult {
    std::vector<double> coefficients;  // c in u(t) = 1_omega sum c_k e^{-lambda_k (T-t)} f_k
    double cost = 0.0;                 // L^2(omega x [0, T]) norm of the control
    double final_norm = 0.0;           // reached truncated state at time T
    double initial_norm = 0.0;         // ||g|| over the truncated subspace
};

/// Minimal-norm control steering the truncated system to zero at time T:
/// solve B c = -(e^{-lambda T} a). The cost satisfies cost <= C_obs ||g|| by
/// duality with estimate_cobs.
ControlResult min_norm_control(const model::Eigensystem& sys, const sensors::SensorMask& mask,
                               double T, double lambda_trunc, std::span<const double> g);

/// Control value on the grid at time t (weights applied), for inspection.
std::vector<double> control_snapshot(const model::Eigensystem& sys,
                                     const sensors::SensorMask& mask, const ControlResult& result,
                                     double T, double t);

}  // namespace speclab::control
