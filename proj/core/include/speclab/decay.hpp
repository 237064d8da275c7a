#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "speclab/model.hpp"

namespace speclab::decay {

/// One weighted-estimate check: lhs = weighted norm squared, rhs = the bound,
/// together with the radius R and (nu, M_nu) that produced the bound.
/// A ratio above one is recorded, not thrown; tests decide what it means.
struct WeightedNormReport {
    double mu = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    double radius = 0.0;
    double nu = 0.0;
    double m_nu = 0.0;
    bool near_boundary = false;  // box edge within 4 units of R; flagged, never asserted
};

/// ||e^{mu |x|} f||_{L^2} by grid quadrature. Terms with a large exponent are
/// evaluated in the log domain; the documented precondition mu * L <= 700
/// rejects hopeless inputs up front.
double weighted_l2(const model::Grid& grid, std::span<const double> f, double mu);

/// |grad f|^2 per grid point: central differences inside, one-sided
/// second-order stencils at the boundary.
std::vector<double> gradient_sq(const model::Grid& grid, std::span<const double> f);

/// Gradient-growth parameters fitted on the truncated box: the smallest nu in
/// {0.1, 0.25, 0.5, 1} making e^{-nu r} |grad V|(r) nonincreasing for r >= 1
/// on the box, and the corresponding sup M_nu. Falls back to nu = 1 with
/// monotone = false when no candidate qualifies.
struct NuFit {
    double nu = 0.0;
    double m_nu = 0.0;
    bool monotone = true;
};
NuFit fit_weight_rate(const model::PotentialSpec& p, const model::Grid& grid);

/// ||e^{|x|/2} f_k||^2 <= 8 e^{R+1} ||f_k||^2 with R = max(1, ((lambda+2)/c1)^(1/tau1)).
WeightedNormReport check_prop34(const model::Eigensystem& sys, std::size_t k);

/// ||e^{|x|/2} |grad f_k|||^2 <= (8 lambda + (2 nu + 5) M_nu^2) e^{2(1+nu)(R+1)} ||f_k||^2
/// with R = max(1, (((nu+1)^2 + lambda + 1)/c1)^(1/tau1)). (nu, M_nu) come from
/// the potential when set, otherwise from fit_weight_rate.
WeightedNormReport check_prop35(const model::Eigensystem& sys, std::size_t k,
                                std::optional<NuFit> fit = std::nullopt);

/// Squared H^1 content outside the centered ball of radius r.
double h1_tail(const model::Grid& grid, std::span<const double> f, double r);

struct LocalizationPoint {
    double lambda = 0.0;
    std::size_t dim = 0;
    double r_star = 0.0;
};

struct LocalizationCurve {
    std::vector<LocalizationPoint> points;
    std::vector<double> skipped;     // lambdas with empty subspace
    double fitted_exponent = 0.0;    // e in r* ~ C lambda^e
    double fit_constant = 0.0;       // C from the fit intercept
    double effective_constant = 0.0; // max r* / lambda^{1/tau1}
    std::uint64_t seed = 0;
};

/// For each lambda draw `trials` random unit combinations from Ran P_lambda
/// and bisect (to spacing/2) the smallest radius whose H^1 tail is at most
/// half the L^2 mass, maximized over trials; then fit r* ~ C lambda^e.
LocalizationCurve localization_scan(const model::Eigensystem& sys,
                                    std::span<const double> lambdas, std::size_t trials,
                                    std::uint64_t seed);

}  // namespace speclab::decay
