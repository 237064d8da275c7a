#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speclab/model.hpp"
#include "speclab/numerics.hpp"
#include "speclab/sensors.hpp"

namespace speclab::specineq {

/// G_jk = <f_j, w f_k> in the weighted discrete inner product, over the
/// subspace basis. Eigenvalues lie in [0, 1] up to solver tolerance.
numerics::DenseSym gram(const model::SpectralSubspace& sub, const sensors::SensorMask& mask);

/// Streaming Gram over a tensor-product basis (confined x free); avoids
/// materializing the 2D eigenvectors.
numerics::DenseSym gram(const model::Eigensystem& confined, const model::Eigensystem& free_factor,
                        const model::TensorPairs& pairs, const sensors::SensorMask& mask);

/// c(lambda, omega) = sqrt(max(0, lambda_min(G))): the smallest L2(omega) norm
/// over unit functions of the subspace in the discrete model.
double observability_ratio(const model::SpectralSubspace& sub, const sensors::SensorMask& mask);
double observability_ratio(const numerics::DenseSym& gram_matrix);

struct ReferenceExponents {
    double thm_equidistributed = 0.0;  // (alpha + 2 tau2 / 3) / tau1
    double zhu_zhuge = 0.0;            // alpha / tau1 + tau2 / (2 tau1)
    double conjecture = 0.0;           // alpha / tau + 1/2
    double anisotropic = 0.0;          // alpha / tau + 2/3
};
ReferenceExponents reference_exponents(double alpha, double tau1, double tau2);

struct RatioSample {
    double lambda = 0.0;
    std::size_t dim = 0;
    double c = 0.0;
    double c_coarse = 0.0;           // half-resolution value (error proxy); 0 if skipped
    double richardson_delta = 0.0;   // c - c_coarse
    double unresolved_fraction = 0.0;
    double gram_min = 0.0;           // smallest Gram eigenvalue (clipped at 0 in c)
    double gram_max = 0.0;
};

struct RatioCurve {
    std::vector<RatioSample> samples;
    ReferenceExponents refs;
    double alpha = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    std::string potential_desc;
    std::string sensor_desc;
};

struct GridPolicy {
    std::size_t n_cap_1d = 4000;
    std::size_t n_cap_2d = 700;
    std::size_t n_min = 301;
    double resolve_divisor = 4.0;  // want h <= (smallest resolved radius) / divisor
    double margin = 2.0;
    double buffer = 0.2;
    double rel_tol = 1e-12;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool richardson = true;   // also evaluate at half resolution
    bool shared_grid = true;  // one grid (sized for the largest lambda) for the whole scan
};

/// Measures c over the lambda list. With shared_grid the box and mask are
/// built once for the largest threshold and every c(lambda) is the smallest
/// eigenvalue of a nested principal block of one Gram matrix, which makes the
/// monotonicity c(lambda) >= c(lambda') exact. Without it, each lambda
/// rebuilds its own box from localization_halfwidth (cheaper per point at
/// small lambda, monotone only up to discretization differences).
/// 2D anisotropic potentials take the tensor route for the eigenbasis.
RatioCurve ratio_scan(const model::PotentialSpec& p, const sensors::SensorSpec& spec,
                      std::span<const double> lambdas, const GridPolicy& policy = {});

struct ExponentFit {
    double s_hat = 0.0;
    double a_hat = 0.0;      // additive constant (log d0), constrained >= 0
    double b_hat = 0.0;      // rate constant (d1), constrained >= 0
    double residual = 0.0;   // RMS of log(1/c) residuals at s_hat
    std::size_t used = 0;    // samples with c < 1 entering the fit
};

/// Grid search over s with a linear inner solve of log(1/c) = a + b lambda^s.
/// Both constants are constrained nonnegative (c <= 1 forces d0 >= 1), which
/// keeps a flat decay from collapsing onto a tiny s with a negative intercept;
/// ties break toward smaller s. Throws when fewer than four samples decay
/// (all c = 1 means there is nothing to fit).
ExponentFit fit_exponent(const RatioCurve& curve, double s_step = 0.05, double s_max = 1.2);

struct ExponentReport {
    ExponentFit fit;
    ReferenceExponents refs;
    bool below_equidistributed = false;  // s_hat <= thm exponent (+ tolerance)
    double conjecture_gap = 0.0;         // s_hat - conjecture exponent
    bool admissible = false;             // alpha < tau1 - 2 tau2 / 3
    double admissible_limit = 0.0;
    bool harmonic_condition = false;     // alpha < 2/3 specialization
};

ExponentReport exponent_report(const RatioCurve& curve, double tolerance = 0.05);

}  // namespace speclab::specineq
