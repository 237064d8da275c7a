#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "speclab/model.hpp"

namespace speclab::ghost {

/// s_t(mu) = sinh(sqrt(mu) t)/sqrt(mu) for mu > 0, t for mu = 0; a Taylor
/// branch guards against cancellation when sqrt(mu)|t| < 1e-4.
double s_eval(double mu, double t);

/// d/dt s_t(mu) = cosh(sqrt(mu) t).
double s_eval_dt(double mu, double t);

/// Extension F(x, t) = sum_k c_k f_k(x) s_t(lambda_k) of f = sum c_k f_k on a
/// uniform t-grid over [-rho, rho]. Time derivatives stay analytic (cosh);
/// only spatial structure is discrete.
class GhostField {
  public:
    const model::Eigensystem& sys() const { return *sys_; }
    double rho() const { return rho_; }
    std::size_t t_count() const { return t_.size(); }
    double t(std::size_t j) const { return t_[j]; }
    std::span<const double> coefficients() const { return coeff_; }
    std::size_t subspace_dim() const { return coeff_.size(); }
    double lambda() const { return lambda_; }

    std::span<const double> slice(std::size_t j) const;     // F(., t_j)
    std::span<const double> dt_slice(std::size_t j) const;  // dF/dt(., t_j)
    std::vector<double> dtt_slice(std::size_t j) const;     // d2F/dt2 = sum c lambda s f
    std::vector<double> boundary_velocity() const;          // dF/dt(., 0) analytic
    std::vector<double> source() const;                     // f = sum c_k f_k

    friend GhostField extend(const model::SpectralSubspace& sub, std::span<const double> coeff,
                             double rho, std::size_t t_points);

  private:
    const model::Eigensystem* sys_ = nullptr;
    double rho_ = 0.0;
    double lambda_ = 0.0;
    std::vector<double> coeff_;
    std::vector<double> t_;
    std::vector<double> field_;     // t-major: [j * npts + i]
    std::vector<double> dt_field_;
};

GhostField extend(const model::SpectralSubspace& sub, std::span<const double> coeff, double rho,
                  std::size_t t_points);

struct IdentityReport {
    double boundary_residual = 0.0;  // ||dF/dt(., 0) - f|| / ||f||
    double elliptic_residual = 0.0;  // max_j ||H F(., t_j) - d2F/dt2(., t_j)|| / ||F(., t_j)||
    double odd_defect = 0.0;         // max_j max_i |F(x_i, t_j) + F(x_i, -t_j)|
};

/// Verifies (dF/dt)(., 0) = f and H F = d2F/dt2 against the assembled
/// operator, plus oddness of F in t.
IdentityReport verify_identities(const GhostField& field, const model::Hamiltonian& ham);

struct SandwichReport {
    double h1_sq = 0.0;        // ||F||^2_{H^1(box x (-rho, rho))}
    double lower_bound = 0.0;  // 2 rho ||f||^2
    double upper_bound = 0.0;  // 2 rho (1 + (1+lambda) rho^2) e^{2 rho sqrt(lambda)} ||f||^2
    double log_upper = 0.0;
    double lower_slack = 0.0;  // (h1 - lower) / scale
    double upper_slack = 0.0;  // (upper - h1) / scale, via logs if upper overflows
};

/// Trapezoid quadrature of the space-time H^1 norm; both slacks are reported
/// relative to the H^1 value.
SandwichReport h1_sandwich(const GhostField& field, double rho, double lambda);

struct GeometryConstants {
    double half_width = 0.0;   // L with 2L the smallest workable integer sidelength
    double theta = 0.0;        // delta^{2 (2 sqrt(d) C')^alpha lambda^{alpha/tau1}}
    double log_theta = 0.0;
    double carleman_radius = 0.0;  // 9 e sqrt(d)
    double kappa_proxy = 0.0;      // 1 / log(1/theta), dimensional factor set to one
};

/// Box, equidistribution constant and interpolation radius entering the
/// covering step; the kappa value is a reported proxy only.
GeometryConstants geometry_constants(double lambda, const model::PotentialSpec& p, double delta,
                                     double alpha, double c_eff, int dimension);

/// Optional binary dump of the field for external visualization.
void save_field(const GhostField& field, const std::string& path);

}  // namespace speclab::ghost
