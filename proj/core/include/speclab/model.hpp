#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/numerics.hpp"

namespace speclab::model {

/// Pointwise potential sampler for the TwoSidedPower kind; receives the point
/// coordinates (d of them).
using PotentialSampler = std::function<double(std::span<const double>)>;

enum class PotentialKind { PowerLaw, Anisotropic, TwoSidedPower, Free };

/// A confinement potential together with its growth parameters
/// (c1, tau1, c2, tau2) and the gradient-growth pair (nu, M_nu).
///
/// PowerLaw is V = |x|^tau (c1 = c2 = 1, tau1 = tau2 = tau); Anisotropic is
/// V = |x_1|^tau depending on the first `confined_axes` coordinates only;
/// TwoSidedPower wraps a user sampler whose values must stay inside
/// [c1 |x|^tau1, c2 |x|^tau2] on every grid point (checked at assembly).
/// Free (V = 0) exists solely as the unconfined factor of tensor products.
class PotentialSpec {
  public:
    static PotentialSpec power_law(double tau);
    static PotentialSpec anisotropic(double tau, int confined_axes);
    static PotentialSpec two_sided(double c1, double tau1, double c2, double tau2,
                                   PotentialSampler sampler, double nu, double m_nu,
                                   std::string sampler_name = "custom");
    static PotentialSpec free_potential();

    PotentialKind kind() const { return kind_; }
    double c1() const { return c1_; }
    double tau1() const { return tau1_; }
    double c2() const { return c2_; }
    double tau2() const { return tau2_; }
    /// Explicitly set (nu, M_nu); 0/0 means "fit on the box" for power laws.
    double nu() const { return nu_; }
    double m_nu() const { return m_nu_; }
    void set_gradient_growth(double nu, double m_nu);
    int confined_axes() const { return confined_axes_; }
    bool confining() const { return kind_ != PotentialKind::Free; }

    double operator()(std::span<const double> x) const;
    /// |grad V| where known in closed form (PowerLaw/Anisotropic/Free).
    bool has_analytic_gradient() const;
    double gradient_norm(std::span<const double> x) const;

    /// Stable one-line descriptor, used in cache keys and CSV metadata.
    std::string describe() const;

  private:
    PotentialKind kind_ = PotentialKind::PowerLaw;
    double c1_ = 1.0, tau1_ = 2.0, c2_ = 1.0, tau2_ = 2.0;
    double nu_ = 0.0, m_nu_ = 0.0;
    int confined_axes_ = 1;
    PotentialSampler sampler_;
    std::string sampler_name_;
};

/// Uniform tensor grid of interior Dirichlet points in (-L, L)^d:
/// per axis x_i = -L + (i+1) h with h = 2L/(n+1), i = 0..n-1.
class Grid {
  public:
    Grid() = default;
    static Grid make(int dimension, double half_width, std::size_t points_per_axis);

    int dimension() const { return d_; }
    double half_width() const { return half_width_; }
    std::size_t points_per_axis() const { return n_; }
    double spacing() const { return spacing_; }
    std::size_t total_points() const { return d_ == 1 ? n_ : n_ * n_; }
    double cell_weight() const;  // h^d
    double axis_coord(std::size_t i) const { return -half_width_ + double(i + 1) * spacing_; }

    std::size_t flat(std::size_t ix, std::size_t iy) const { return ix * n_ + iy; }
    /// Coordinates of a flattened point (second entry unused when d = 1).
    std::array<double, 2> point(std::size_t flat_index) const;
    double radius(std::size_t flat_index) const;  // |x|
    double max_radius() const;

    bool operator==(const Grid& other) const {
        return d_ == other.d_ && half_width_ == other.half_width_ && n_ == other.n_;
    }

  private:
    int d_ = 1;
    double half_width_ = 1.0;
    std::size_t n_ = 3;
    double spacing_ = 0.5;
};

/// Assembled discrete Hamiltonian H = -Delta_h + V on a grid, kept together
/// with its grid and potential. The d = 1 operator is tridiagonal.
class Hamiltonian {
  public:
    const Grid& grid() const { return grid_; }
    const PotentialSpec& potential() const { return potential_; }
    bool is_tridiagonal() const { return grid_.dimension() == 1; }
    const numerics::SymTridiag& tridiag() const;
    const numerics::SparseSym& sparse() const;  // materialized on demand for d = 1

    friend Hamiltonian assemble(const Grid& grid, const PotentialSpec& p);

  private:
    Grid grid_;
    PotentialSpec potential_;
    numerics::SymTridiag tri_;
    mutable std::shared_ptr<const numerics::SparseSym> sparse_;
};

/// Second-order central stencil with Dirichlet boundary plus the diagonal
/// potential. Throws if a TwoSidedPower sampler leaves its bounds, naming the
/// grid point.
Hamiltonian assemble(const Grid& grid, const PotentialSpec& p);

struct EigOptions {
    double buffer = 0.20;          // fraction above lambda_max harvested
    double rel_tol = 1e-12;        // Lanczos residual tolerance
    std::uint64_t seed = 1;
    bool polish = true;            // inverse-iteration polish (d = 1 only)
};

/// Discrete eigenpairs with eigenvalue <= lambda_max (plus buffer),
/// orthonormal in the weighted inner product <u, v> = sum h^d u v.
class Eigensystem {
  public:
    const Grid& grid() const { return grid_; }
    const PotentialSpec& potential() const { return potential_; }
    double lambda_max() const { return lambda_max_; }
    double harvest_cap() const { return harvest_cap_; }

    std::size_t size() const { return values_.size(); }
    double value(std::size_t k) const { return values_[k]; }
    std::span<const double> vector(std::size_t k) const { return vectors_[k]; }
    const std::vector<double>& values() const { return values_; }
    double max_residual() const { return max_residual_; }

    /// Weighted inner product of two grid functions.
    double dot(std::span<const double> u, std::span<const double> v) const;
    double norm(std::span<const double> u) const;

    /// Used by tensor_compose and the cache loader.
    static Eigensystem from_parts(Grid grid, PotentialSpec p, double lambda_max,
                                  double harvest_cap, std::vector<double> values,
                                  std::vector<std::vector<double>> vectors, double max_residual);

  private:
    Grid grid_;
    PotentialSpec potential_;
    double lambda_max_ = 0.0;
    double harvest_cap_ = 0.0;
    double max_residual_ = 0.0;
    std::vector<double> values_;
    std::vector<std::vector<double>> vectors_;
};

Eigensystem eigendecompose(const Hamiltonian& h, double lambda_max, const EigOptions& opts = {});

/// Members of an Eigensystem with eigenvalue <= threshold (a prefix, since
/// eigenvalues are ascending).
struct SpectralSubspace {
    const Eigensystem* system = nullptr;
    double threshold = 0.0;
    std::size_t dim = 0;

    const Eigensystem& sys() const { return *system; }
};

SpectralSubspace subspace(const Eigensystem& sys, double lambda);

/// Eigenvalue counting function N(lambda), with multiplicity. (The continuum
/// enumeration is multiplicity-free, but its Lieb-Thirring majorant counts
/// multiplicities, and discrete spectra are generically simple, so counting
/// with multiplicity majorizes both readings.)
std::size_t counting_function(const Eigensystem& sys, double lambda);

/// Quadrature of integral max(lambda + 1 - V, 0)^(d/2 + 1) dx over a box that
/// contains the integrand's support; absolute constant fixed to one, only the
/// lambda-scaling is meaningful.
double counting_bound(double lambda, const PotentialSpec& p, int dimension);

/// Box half-width L = margin * max(1, ((lambda + 2)/c1)^(1/tau1)) + 2, which
/// keeps the weighted-estimate radius R inside the box.
double localization_halfwidth(double lambda, const PotentialSpec& p, double margin);

/// Composed 2D system for V(x1, x2) = W(x1): eigenvalues are pairwise sums
/// (<= lambda_max), eigenvectors are products. Both factors must live on the
/// same 1D grid. The default lambda_max is the largest threshold that the two
/// factor harvests can cover completely.
Eigensystem tensor_compose(const Eigensystem& confined, const Eigensystem& free_factor,
                           std::optional<double> lambda_max = std::nullopt);

/// Index pairs (confined k1, free k2) with value sums <= lambda_max, sorted by
/// sum; shared by tensor_compose and the memory-lean Gram path.
struct TensorPairs {
    std::vector<std::array<std::uint32_t, 2>> index;
    std::vector<double> values;
    double lambda_max = 0.0;
};
TensorPairs tensor_pairs(const Eigensystem& confined, const Eigensystem& free_factor,
                         std::optional<double> lambda_max = std::nullopt);

}  // namespace speclab::model
