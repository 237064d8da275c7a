#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab::numerics {

/// Symmetric tridiagonal matrix: diag has length n, offdiag length n-1.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> offdiag;

    std::size_t order() const { return diag.size(); }
    void validate() const;  // finite entries, n >= 1, sizes consistent
    double trace() const;
    double norm_bound() const;  // Gershgorin row-sum bound on the spectral radius
    void mul(std::span<const double> x, std::span<double> y) const;
};

/// Dense symmetric matrix. Only the lower triangle is stored, so symmetry
/// holds exactly by construction.
class DenseSym {
  public:
    DenseSym() = default;
    explicit DenseSym(std::size_t n) : n_(n), tri_(n * (n + 1) / 2, 0.0) {}
    static DenseSym identity(std::size_t n);

    std::size_t order() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return tri_[idx(i, j)]; }
    /// Writes the single stored slot for the unordered pair {i, j}.
    double& at(std::size_t i, std::size_t j) { return tri_[idx(i, j)]; }
    double trace() const;
    double norm_bound() const;
    void mul(std::span<const double> x, std::span<double> y) const;

  private:
    static std::size_t pack(std::size_t r, std::size_t c) { return r * (r + 1) / 2 + c; }
    std::size_t idx(std::size_t i, std::size_t j) const { return i >= j ? pack(i, j) : pack(j, i); }
    std::size_t n_ = 0;
    std::vector<double> tri_;
};

/// Sparse symmetric matrix in CSR form. Both triangles are materialized and
/// the diagonal is always present; construction takes the upper triangle
/// only, so the pattern is symmetric by construction.
class SparseSym {
  public:
    struct Entry {
        std::size_t row, col;  // col >= row
        double value;
    };

    SparseSym() = default;
    static SparseSym from_upper(std::size_t n, std::vector<Entry> upper);
    static SparseSym from_tridiag(const SymTridiag& t);

    std::size_t order() const { return n_; }
    std::size_t stored_entries() const { return values_.size(); }
    void mul(std::span<const double> x, std::span<double> y) const;
    double trace() const;
    double norm_bound() const;

  private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_start_;  // size n+1
    std::vector<std::size_t> col_;
    std::vector<double> values_;
};

/// Eigenpairs sorted by ascending eigenvalue. Vectors are Euclidean-orthonormal.
struct EigPairs {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;

    std::size_t count() const { return values.size(); }
};

struct SolverOptions {
    double rel_tol = 1e-10;       // residual tolerance relative to a norm bound of the matrix
    int max_sweeps = 50;          // QL iteration cap per eigenvalue
};

/// Full eigendecomposition of a symmetric tridiagonal matrix by implicit-shift
/// QL with Wilkinson shifts. Throws ConvergenceError naming the failing index
/// if any eigenvalue exceeds the iteration cap.
EigPairs tridiag_eigh(const SymTridiag& t, const SolverOptions& opts = {});

/// Eigenvalues only (no accumulation); same algorithm, O(n^2) total.
std::vector<double> tridiag_eigvals(const SymTridiag& t, const SolverOptions& opts = {});

/// Full eigendecomposition of a dense symmetric matrix: Householder
/// tridiagonalization followed by QL with accumulated transforms.
EigPairs dense_eigh(const DenseSym& a, const SolverOptions& opts = {});

struct LanczosOptions {
    double rel_tol = 1e-12;       // Ritz residual tolerance relative to norm_bound()
    int max_restarts = 3;         // restarts with a fresh start vector after breakdown/stall
    std::size_t max_subspace = 0; // per-pass Krylov cap; 0 picks a size from the request
};

/// k smallest eigenpairs of a sparse symmetric matrix by Lanczos iteration with
/// full reorthogonalization. Converged pairs are locked and deflated, so
/// repeated eigenvalues are resolved by successive restarted passes.
EigPairs lanczos_smallest(const SparseSym& a, std::size_t k, std::uint64_t seed,
                          const LanczosOptions& opts = {});

/// All eigenpairs with eigenvalue <= cap, found by the same deflated Lanczos
/// engine; the scan stops once a converged eigenvalue beyond cap is seen.
EigPairs lanczos_below(const SparseSym& a, double cap, std::uint64_t seed,
                       const LanczosOptions& opts = {});

/// Same contract as lanczos_below for a symmetric tridiagonal matrix, but the
/// engine iterates on a shift-inverted operator (O(n) pivoted solves). Fine
/// discretizations make the plain iteration stall on the bottom of the
/// spectrum; the inverted one converges in a few steps per eigenvalue.
EigPairs tridiag_below(const SymTridiag& t, double cap, std::uint64_t seed,
                       const LanczosOptions& opts = {});

/// Inverse-iteration refinement of an approximate eigenpair of a symmetric
/// tridiagonal matrix. Updates vec in place (unit norm) and returns the
/// refined Rayleigh quotient.
double tridiag_polish(const SymTridiag& t, double value, std::vector<double>& vec, int iters = 2);

enum class Extreme { Min, Max };

struct GenEigResult {
    double value = 0.0;
    std::vector<double> vector;  // Euclidean-normalized
    double residual = 0.0;       // ||A x - value B x|| / ((||A|| + |value| ||B||) ||x||)
};

/// Extreme generalized eigenvalue of A x = mu B x with B positive definite.
/// The reduction is B = L L^T, C = L^-1 A L^-T, then dense_eigh on C.
/// Throws NotPositiveDefinite carrying the offending pivot index if the
/// factorization of B fails.
GenEigResult gen_eig_extreme(const DenseSym& a, const DenseSym& b, Extreme which,
                             const SolverOptions& opts = {});

/// Cholesky factor (lower, row-packed like DenseSym storage) of an SPD matrix.
std::vector<double> cholesky(const DenseSym& b);

/// Solves B x = rhs given the packed Cholesky factor of B.
std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   std::span<const double> rhs);

}  // namespace speclab::numerics
