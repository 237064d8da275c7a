#include "speclab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "speclab/rng.hpp"

namespace speclab::numerics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double nrm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void scal(double alpha, std::span<double> x) {
    for (auto& v : x) v *= alpha;
}

/// Implicit-shift QL with Wilkinson shifts on (d, e); e[n-1] is workspace.
/// If z is non-null it must point at an n x n row-major matrix whose columns
/// are rotated along with the iteration (pass identity to accumulate the
/// eigenvector matrix).
void ql_implicit(std::vector<double>& d, std::vector<double>& e, double* z, int cap) {
    const std::size_t n = d.size();
    if (n == 0) return;
    e.resize(n, 0.0);  // e[n-1] used as scratch

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= kEps * dd) break;
            }
            if (m != l) {
                if (iter++ == cap)
                    throw ConvergenceError(
                        "tridiag_eigh: eigenvalue " + std::to_string(l) +
                            " failed to converge after " + std::to_string(cap) + " iterations",
                        l);
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                std::size_t i = m;
                bool underflow = false;
                while (i-- > l) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (z) {
                        for (std::size_t k = 0; k < n; ++k) {
                            f = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * f;
                            z[k * n + i] = c * z[k * n + i] - s * f;
                        }
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

EigPairs sorted_pairs(std::vector<double> d, const std::vector<double>& z) {
    const std::size_t n = d.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    EigPairs out;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = d[perm[k]];
        for (std::size_t r = 0; r < n; ++r) out.vectors[k][r] = z[r * n + perm[k]];
    }
    return out;
}

/// Householder reduction of a full symmetric matrix (row-major) to
/// tridiagonal form, accumulating the orthogonal transform in place.
void householder_tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& d,
                                std::vector<double>& e) {
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::abs(a[i * n + k]);
            if (scale == 0.0) {
                e[i] = a[i * n + l];
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                double f = a[i * n + l];
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    a[j * n + i] = a[i * n + j] / h;
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a[j * n + k] * a[i * n + k];
                    for (std::size_t k = j + 1; k <= l; ++k) g += a[k * n + j] * a[i * n + k];
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a[i * n + j];
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k)
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i;
        if (d[i] != 0.0) {
            for (std::size_t j = 0; j < l; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < l; ++k) g += a[i * n + k] * a[k * n + j];
                for (std::size_t k = 0; k < l; ++k) a[k * n + j] -= g * a[k * n + i];
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for (std::size_t j = 0; j < l; ++j) a[j * n + i] = a[i * n + j] = 0.0;
    }
}

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw ValidationError(what, "entries must be finite");
}

}  // namespace

void SymTridiag::validate() const {
    if (diag.empty()) throw ValidationError("SymTridiag", "order must be >= 1");
    if (offdiag.size() + 1 != diag.size())
        throw ValidationError("SymTridiag", "offdiag must have length n-1");
    check_finite(diag, "SymTridiag.diag");
    check_finite(offdiag, "SymTridiag.offdiag");
}

double SymTridiag::trace() const { return std::accumulate(diag.begin(), diag.end(), 0.0); }

double SymTridiag::norm_bound() const {
    const std::size_t n = diag.size();
    double bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(diag[i]);
        if (i > 0) row += std::abs(offdiag[i - 1]);
        if (i + 1 < n) row += std::abs(offdiag[i]);
        bound = std::max(bound, row);
    }
    return bound;
}

void SymTridiag::mul(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * x[i];
        if (i > 0) s += offdiag[i - 1] * x[i - 1];
        if (i + 1 < n) s += offdiag[i] * x[i + 1];
        y[i] = s;
    }
}

DenseSym DenseSym::identity(std::size_t n) {
    DenseSym a(n);
    for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
    return a;
}

double DenseSym::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

double DenseSym::norm_bound() const {
    double bound = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n_; ++j) row += std::abs((*this)(i, j));
        bound = std::max(bound, row);
    }
    return bound;
}

void DenseSym::mul(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
}

SparseSym SparseSym::from_upper(std::size_t n, std::vector<Entry> upper) {
    if (n == 0) throw ValidationError("SparseSym", "order must be >= 1");
    std::vector<bool> diag_seen(n, false);
    std::vector<Entry> all;
    all.reserve(upper.size() * 2);
    for (const Entry& t : upper) {
        if (t.row >= n || t.col >= n || t.col < t.row)
            throw ValidationError("SparseSym", "entries must satisfy row <= col < n");
        if (!std::isfinite(t.value)) throw ValidationError("SparseSym", "entries must be finite");
        all.push_back(t);
        if (t.row == t.col)
            diag_seen[t.row] = true;
        else
            all.push_back({t.col, t.row, t.value});
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!diag_seen[i]) all.push_back({i, i, 0.0});  // diagonal always present

    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseSym s;
    s.n_ = n;
    s.row_start_.assign(n + 1, 0);
    s.col_.reserve(all.size());
    s.values_.reserve(all.size());
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        double v = 0.0;
        while (j < all.size() && all[j].row == all[i].row && all[j].col == all[i].col)
            v += all[j++].value;
        s.col_.push_back(all[i].col);
        s.values_.push_back(v);
        s.row_start_[all[i].row + 1]++;
        i = j;
    }
    for (std::size_t r = 0; r < n; ++r) s.row_start_[r + 1] += s.row_start_[r];
    return s;
}

SparseSym SparseSym::from_tridiag(const SymTridiag& t) {
    t.validate();
    std::vector<Entry> upper;
    const std::size_t n = t.order();
    upper.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        upper.push_back({i, i, t.diag[i]});
        if (i + 1 < n) upper.push_back({i, i + 1, t.offdiag[i]});
    }
    return from_upper(n, std::move(upper));
}

void SparseSym::mul(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < n_; ++r) {
        double s = 0.0;
        for (std::size_t p = row_start_[r]; p < row_start_[r + 1]; ++p) s += values_[p] * x[col_[p]];
        y[r] = s;
    }
}

double SparseSym::trace() const {
    double t = 0.0;
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t p = row_start_[r]; p < row_start_[r + 1]; ++p)
            if (col_[p] == r) t += values_[p];
    return t;
}

double SparseSym::norm_bound() const {
    double bound = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
        double row = 0.0;
        for (std::size_t p = row_start_[r]; p < row_start_[r + 1]; ++p) row += std::abs(values_[p]);
        bound = std::max(bound, row);
    }
    return bound;
}

EigPairs tridiag_eigh(const SymTridiag& t, const SolverOptions& opts) {
    t.validate();
    const std::size_t n = t.order();
    std::vector<double> d = t.diag;
    std::vector<double> e(t.offdiag.begin(), t.offdiag.end());
    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
    ql_implicit(d, e, z.data(), opts.max_sweeps);
    return sorted_pairs(std::move(d), z);
}

std::vector<double> tridiag_eigvals(const SymTridiag& t, const SolverOptions& opts) {
    t.validate();
    std::vector<double> d = t.diag;
    std::vector<double> e(t.offdiag.begin(), t.offdiag.end());
    ql_implicit(d, e, nullptr, opts.max_sweeps);
    std::sort(d.begin(), d.end());
    return d;
}

EigPairs dense_eigh(const DenseSym& a, const SolverOptions& opts) {
    const std::size_t n = a.order();
    if (n == 0) throw ValidationError("dense_eigh", "order must be >= 1");
    std::vector<double> full(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) full[i * n + j] = a(i, j);
    std::vector<double> d, e;
    householder_tridiagonalize(full, n, d, e);
    // shift e so that e[i] couples d[i], d[i+1]
    std::vector<double> off(n > 1 ? n - 1 : 0);
    for (std::size_t i = 0; i + 1 < n; ++i) off[i] = e[i + 1];
    ql_implicit(d, off, full.data(), opts.max_sweeps);
    return sorted_pairs(std::move(d), full);
}

namespace {

DenseSym densify(const SparseSym& a) {
    DenseSym d(a.order());
    std::vector<double> unit(a.order(), 0.0), col(a.order());
    for (std::size_t j = 0; j < a.order(); ++j) {
        unit[j] = 1.0;
        a.mul(unit, col);
        unit[j] = 0.0;
        for (std::size_t i = j; i < a.order(); ++i) d.at(i, j) = col[i];
    }
    return d;
}

/// Solves (T - shift I) x = rhs by Gaussian elimination with partial
/// pivoting; the band grows to two superdiagonals. rhs is overwritten.
void band_solve_shifted(const std::vector<double>& d, const std::vector<double>& e, double shift,
                        double scale, std::vector<double>& rhs) {
    const std::size_t n = d.size();
    std::vector<double> a(n), b(n, 0.0), c(n, 0.0), low(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i] = d[i] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) low[i] = b[i] = e[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(low[i]) > std::abs(a[i])) {
            std::swap(a[i], low[i]);
            std::swap(b[i], a[i + 1]);
            if (i + 2 < n) std::swap(c[i], b[i + 1]);
            std::swap(rhs[i], rhs[i + 1]);
        }
        if (a[i] == 0.0) a[i] = kEps * scale;
        const double m = low[i] / a[i];
        a[i + 1] -= m * b[i];
        if (i + 2 < n) b[i + 1] -= m * c[i];
        rhs[i + 1] -= m * rhs[i];
    }
    if (a[n - 1] == 0.0) a[n - 1] = kEps * scale;
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        if (i + 1 < n) s -= b[i] * rhs[i + 1];
        if (i + 2 < n) s -= c[i] * rhs[i + 2];
        rhs[i] = s / a[i];
    }
}

/// Eigenvector of an unreduced symmetric tridiagonal matrix for a converged
/// Ritz value, by inverse iteration with partial pivoting.
std::vector<double> tridiag_inverse_iter(const std::vector<double>& d, const std::vector<double>& e,
                                         double theta, double scale, Rng& rng) {
    const std::size_t n = d.size();
    std::vector<double> x(n);
    for (auto& v : x) v = rng.gaussian();
    scal(1.0 / nrm2(x), x);
    const double shift = theta + 16.0 * kEps * scale;  // keep the solve nonsingular

    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> rhs = x;
        band_solve_shifted(d, e, shift, scale, rhs);
        const double norm = nrm2(rhs);
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / norm;
    }
    return x;
}

struct RitzInfo {
    double value;
    double residual;
    std::vector<double> small_vec;  // eigenvector of the small tridiagonal T
};

/// Operator abstraction so the Lanczos engine can run on a sparse matrix
/// directly or on a shift-inverted tridiagonal.
struct LinOp {
    std::size_t n = 0;
    double bound = 1.0;  // estimate of the spectral radius
    std::function<void(std::span<const double>, std::span<double>)> apply;
};

LinOp wrap(const SparseSym& a) {
    return {a.order(), std::max(a.norm_bound(), std::numeric_limits<double>::min()),
            [&a](std::span<const double> x, std::span<double> y) { a.mul(x, y); }};
}

/// Pivoted LU of (T - shift I); the band grows to two superdiagonals.
class TridiagLU {
  public:
    TridiagLU(const std::vector<double>& d, const std::vector<double>& e, double shift,
              double scale) {
        const std::size_t n = d.size();
        a_.resize(n);
        b_.assign(n, 0.0);
        c_.assign(n, 0.0);
        m_.assign(n, 0.0);
        swapped_.assign(n, 0);
        std::vector<double> low(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) a_[i] = d[i] - shift;
        for (std::size_t i = 0; i + 1 < n; ++i) low[i] = b_[i] = e[i];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(low[i]) > std::abs(a_[i])) {
                swapped_[i] = 1;
                std::swap(a_[i], low[i]);
                std::swap(b_[i], a_[i + 1]);
                if (i + 2 < n) std::swap(c_[i], b_[i + 1]);
            }
            if (a_[i] == 0.0) a_[i] = kEps * scale;
            m_[i] = low[i] / a_[i];
            a_[i + 1] -= m_[i] * b_[i];
            if (i + 2 < n) b_[i + 1] -= m_[i] * c_[i];
        }
        if (a_[n - 1] == 0.0) a_[n - 1] = kEps * scale;
    }

    void solve(std::span<double> rhs) const {
        const std::size_t n = a_.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (swapped_[i]) std::swap(rhs[i], rhs[i + 1]);
            rhs[i + 1] -= m_[i] * rhs[i];
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = rhs[i];
            if (i + 1 < n) s -= b_[i] * rhs[i + 1];
            if (i + 2 < n) s -= c_[i] * rhs[i + 2];
            rhs[i] = s / a_[i];
        }
    }

  private:
    std::vector<double> a_, b_, c_, m_;
    std::vector<char> swapped_;
};

class LanczosEngine {
  public:
    LanczosEngine(LinOp op, const LanczosOptions& opts, std::uint64_t seed)
        : op_(std::move(op)), opts_(opts), rng_(seed ? seed : 0x1db3u), n_(op_.n) {
        scale_ = op_.bound;
        tol_abs_ = opts_.rel_tol * scale_;
    }

    /// When set, a pass may stop as soon as its converged prefix reaches past
    /// this value (used by lanczos_below).
    void set_stop_value(double v) { stop_value_ = v; }

    /// Runs deflated passes until `done` returns true on the sorted locked
    /// values. `done` also receives the smallest value locked by the most
    /// recent pass, which bounds the as-yet-unseen part of the spectrum.
    template <class DonePredicate>
    void run(std::size_t upper_bound_pairs, const DonePredicate& done) {
        int restarts = 0;
        std::size_t passes = 0;
        const std::size_t max_passes = std::min(upper_bound_pairs, n_) + 24;
        while (locked_vals_.size() < n_) {
            if (passes++ > max_passes)
                throw ConvergenceError("lanczos: pass budget exhausted with " +
                                           std::to_string(locked_vals_.size()) + " converged pairs",
                                       locked_vals_.size());
            double pass_min = std::numeric_limits<double>::infinity();
            const std::size_t hint =
                std::min(upper_bound_pairs, locked_vals_.size() + 32);
            const PassResult res = pass(hint, &pass_min);
            if (res.breakdown || res.locked == 0) {
                if (res.locked == 0 && !res.breakdown) grow_ = std::min(grow_ * 2, 16u);
                if (++restarts > opts_.max_restarts)
                    throw ConvergenceError(
                        "lanczos: breakdown persisted after " + std::to_string(opts_.max_restarts) +
                            " restarts; converged " + std::to_string(locked_vals_.size()) + " pairs",
                        locked_vals_.size());
                if (res.locked > 0 && done(sorted_values(), pass_min)) return;
                continue;
            }
            restarts = 0;
            if (done(sorted_values(), pass_min)) return;
        }
        // Whole space locked; nothing left to find.
    }

    std::vector<double> sorted_values() const {
        std::vector<double> v = locked_vals_;
        std::sort(v.begin(), v.end());
        return v;
    }

    /// Rayleigh-Ritz over the locked subspace with respect to `rr_op`
    /// (normally the original matrix), then selection of pairs up to the cap;
    /// refines clustered values to close to machine accuracy.
    EigPairs harvest(double value_cap, std::size_t max_pairs, const LinOp& rr_op) {
        const std::size_t m = locked_vals_.size();
        DenseSym proj(m);
        std::vector<double> tmp(n_);
        for (std::size_t j = 0; j < m; ++j) {
            rr_op.apply(locked_[j], tmp);
            for (std::size_t i = j; i < m; ++i) proj.at(i, j) = dot(locked_[i], tmp);
        }
        EigPairs small = dense_eigh(proj);
        EigPairs out;
        for (std::size_t k = 0; k < m && out.values.size() < max_pairs; ++k) {
            if (small.values[k] > value_cap) break;
            std::vector<double> v(n_, 0.0);
            for (std::size_t j = 0; j < m; ++j) axpy(small.vectors[k][j], locked_[j], v);
            const double nrm = nrm2(v);
            scal(1.0 / nrm, v);
            out.values.push_back(small.values[k]);
            out.vectors.push_back(std::move(v));
        }
        return out;
    }

    double tol_abs() const { return tol_abs_; }
    double scale() const { return scale_; }

  private:
    struct PassResult {
        std::size_t locked = 0;
        bool breakdown = false;  // start vector annihilated by the locked span
    };

    PassResult pass(std::size_t hint, double* pass_min) {
        const std::size_t room = n_ - locked_vals_.size();
        std::size_t m_cap = opts_.max_subspace
                                ? opts_.max_subspace
                                : grow_ * std::max<std::size_t>(80, 2 * hint + 40);
        m_cap = std::min(m_cap, room);

        std::vector<std::vector<double>> v;
        std::vector<double> alpha, beta;
        std::vector<double> start(n_);
        for (auto& s : start) s = rng_.gaussian();
        if (!orthonormalize(start)) return {0, true};
        v.push_back(start);

        std::vector<double> w(n_);
        std::size_t steps = 0;
        bool fresh_ritz = false;
        std::vector<RitzInfo> ritz;
        while (steps < m_cap) {
            const std::size_t j = steps;
            op_.apply(v[j], w);
            if (j > 0) axpy(-beta[j - 1], v[j - 1], w);
            const double aj = dot(w, v[j]);
            axpy(-aj, v[j], w);
            alpha.push_back(aj);
            reorthogonalize(w, v);
            double bj = nrm2(w);
            ++steps;
            if (bj <= 256.0 * kEps * scale_) {
                beta.push_back(0.0);  // invariant subspace: Ritz pairs are exact
                fresh_ritz = false;
                break;
            }
            beta.push_back(bj);
            if (steps < m_cap) {
                std::vector<double> next(w);
                scal(1.0 / bj, next);
                v.push_back(std::move(next));
            }
            fresh_ritz = false;
            if (steps % 16 == 0 && steps >= 8) {
                ritz = extract_ritz(alpha, beta, hint);
                fresh_ritz = true;
                if (enough_converged(ritz, hint)) break;
            }
        }
        if (!fresh_ritz) ritz = extract_ritz(alpha, beta, hint);

        // Lock the converged prefix of the Ritz values (smallest first).
        std::size_t newly = 0;
        for (const RitzInfo& r : ritz) {
            if (r.residual > tol_abs_) break;
            std::vector<double> y(n_, 0.0);
            for (std::size_t j = 0; j < r.small_vec.size() && j < v.size(); ++j)
                axpy(r.small_vec[j], v[j], y);
            if (!orthonormalize(y)) continue;  // direction already represented
            locked_.push_back(std::move(y));
            locked_vals_.push_back(r.value);
            *pass_min = std::min(*pass_min, r.value);
            ++newly;
        }
        return {newly, false};
    }

    std::vector<RitzInfo> extract_ritz(const std::vector<double>& alpha,
                                       const std::vector<double>& beta,
                                       std::size_t hint) {
        const std::size_t j = alpha.size();
        SymTridiag t;
        t.diag = alpha;
        t.offdiag.assign(beta.begin(), beta.end() - (beta.empty() ? 0 : 1));
        std::vector<double> vals = tridiag_eigvals(t);
        const double bj = beta.empty() ? 0.0 : beta.back();
        std::size_t want = std::min<std::size_t>(j, hint + 4);
        if (std::isfinite(stop_value_)) {
            std::size_t below = 0;
            while (below < j && vals[below] <= stop_value_) ++below;
            want = std::min<std::size_t>(j, below + 4);
        }
        std::vector<RitzInfo> out;
        Rng local(rng_.next_u64());
        for (std::size_t i = 0; i < want; ++i) {
            RitzInfo info;
            info.value = vals[i];
            info.small_vec = tridiag_inverse_iter(t.diag, t.offdiag, vals[i], scale_, local);
            // separate members of a tight cluster
            for (std::size_t p = 0; p < out.size(); ++p) {
                if (std::abs(out[p].value - vals[i]) < 1e-8 * scale_) {
                    axpy(-dot(info.small_vec, out[p].small_vec), out[p].small_vec, info.small_vec);
                }
            }
            const double nv = nrm2(info.small_vec);
            if (nv > 1e-8) scal(1.0 / nv, info.small_vec);
            info.residual = std::abs(bj * info.small_vec[j - 1]);
            out.push_back(std::move(info));
        }
        return out;
    }

    bool enough_converged(const std::vector<RitzInfo>& ritz, std::size_t hint) const {
        std::size_t prefix = 0;
        for (const RitzInfo& r : ritz) {
            if (r.residual > tol_abs_) break;
            if (ritz[prefix].value > stop_value_) return true;  // prefix reaches past the cap
            ++prefix;
        }
        const std::size_t remaining =
            hint > locked_vals_.size() ? hint - locked_vals_.size() : 1;
        return prefix >= std::min(remaining + 1, ritz.size());
    }

    /// Two-pass Gram-Schmidt against the locked set; false if the vector is
    /// (numerically) inside the locked span.
    bool orthonormalize(std::vector<double>& x) {
        for (int round = 0; round < 2; ++round)
            for (const auto& u : locked_) axpy(-dot(x, u), u, x);
        const double nrm = nrm2(x);
        if (!(nrm > 1e-6)) return false;
        scal(1.0 / nrm, x);
        return true;
    }

    void reorthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& v) {
        for (int round = 0; round < 2; ++round) {
            for (const auto& u : locked_) axpy(-dot(w, u), u, w);
            for (const auto& u : v) axpy(-dot(w, u), u, w);
        }
    }

    LinOp op_;
    LanczosOptions opts_;
    Rng rng_;
    std::size_t n_;
    double scale_ = 1.0;
    double tol_abs_ = 0.0;
    double stop_value_ = std::numeric_limits<double>::infinity();
    unsigned grow_ = 1;  // pass-size multiplier, doubled after a stalled pass
    std::vector<std::vector<double>> locked_;
    std::vector<double> locked_vals_;
};

EigPairs select_smallest(const EigPairs& all, std::size_t k) {
    EigPairs out;
    for (std::size_t i = 0; i < k; ++i) {
        out.values.push_back(all.values[i]);
        out.vectors.push_back(all.vectors[i]);
    }
    return out;
}

}  // namespace

EigPairs lanczos_smallest(const SparseSym& a, std::size_t k, std::uint64_t seed,
                          const LanczosOptions& opts) {
    const std::size_t n = a.order();
    if (k == 0 || k > n) throw ValidationError("lanczos_smallest", "need 1 <= k <= n");
    if (n <= 32) return select_smallest(dense_eigh(densify(a)), k);

    LanczosEngine engine(wrap(a), opts, seed);
    const double tol = engine.tol_abs();
    engine.run(k, [&](const std::vector<double>& vals, double pass_min) {
        return vals.size() >= k && pass_min > vals[k - 1] + tol;
    });
    EigPairs out = engine.harvest(std::numeric_limits<double>::infinity(), k, wrap(a));
    if (out.count() < k)
        throw ConvergenceError("lanczos_smallest: converged only " + std::to_string(out.count()) +
                                   " of " + std::to_string(k) + " pairs",
                               out.count());
    return out;
}

EigPairs lanczos_below(const SparseSym& a, double cap, std::uint64_t seed,
                       const LanczosOptions& opts) {
    const std::size_t n = a.order();
    if (n <= 32) {
        EigPairs all = dense_eigh(densify(a));
        std::size_t k = 0;
        while (k < n && all.values[k] <= cap) ++k;
        return select_smallest(all, k);
    }
    LanczosEngine engine(wrap(a), opts, seed);
    // exact ties at the cap stay included despite solver-scale rounding
    const double cap_in = cap + 64.0 * kEps * std::max(a.norm_bound(), std::abs(cap));
    engine.set_stop_value(cap_in);
    // The count below cap is unknown up front; the scan is done once a whole
    // pass locked only values beyond the cap.
    engine.run(n, [&](const std::vector<double>&, double pass_min) { return pass_min > cap_in; });
    return engine.harvest(cap_in, n, wrap(a));
}

EigPairs tridiag_below(const SymTridiag& t, double cap, std::uint64_t seed,
                       const LanczosOptions& opts) {
    t.validate();
    const std::size_t n = t.order();
    if (n <= 32) {
        EigPairs all = tridiag_eigh(t);
        std::size_t k = 0;
        while (k < n && all.values[k] <= cap) ++k;
        return select_smallest(all, k);
    }
    // Gershgorin lower bound; the shift sits strictly below the spectrum so
    // the factorization of (T - sigma I) is positive definite.
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double row = t.diag[i];
        if (i > 0) row -= std::abs(t.offdiag[i - 1]);
        if (i + 1 < n) row -= std::abs(t.offdiag[i]);
        lower = std::min(lower, row);
    }
    const double sigma = std::min(0.0, lower) - 1.0;
    if (!(cap > sigma)) throw ValidationError("tridiag_below", "cap below the spectrum");
    const double scale = t.norm_bound() + std::abs(sigma);
    const TridiagLU lu(t.diag, t.offdiag, sigma, scale);

    // Iterate on C = -(T - sigma I)^-1; smallest C-eigenvalues correspond to
    // the smallest eigenvalues of T, and the map value -> sigma - 1/value is
    // increasing on the negative axis.
    LinOp c_op{n, 1.0 / std::max(lower - sigma, 1e-3),
               [&lu](std::span<const double> x, std::span<double> y) {
                   std::copy(x.begin(), x.end(), y.begin());
                   lu.solve(y);
                   for (auto& v : y) v = -v;
               }};
    LanczosEngine engine(std::move(c_op), opts, seed);
    // exact ties at the cap stay included despite solver-scale rounding
    const double cap_in = cap + 64.0 * kEps * std::max(t.norm_bound(), std::abs(cap));
    const double cap_c = -1.0 / (cap_in - sigma);
    engine.set_stop_value(cap_c);
    engine.run(n, [&](const std::vector<double>&, double pass_min) { return pass_min > cap_c; });

    LinOp t_op{n, t.norm_bound(),
               [&t](std::span<const double> x, std::span<double> y) { t.mul(x, y); }};
    return engine.harvest(cap_in, n, t_op);
}

double tridiag_polish(const SymTridiag& t, double value, std::vector<double>& vec, int iters) {
    const std::size_t n = t.order();
    const double scale = std::max(t.norm_bound(), std::numeric_limits<double>::min());
    double theta = value;
    std::vector<double> y(n);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> rhs = vec;
        band_solve_shifted(t.diag, t.offdiag, theta + 4.0 * kEps * scale, scale, rhs);
        const double norm = nrm2(rhs);
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        scal(1.0 / norm, rhs);
        t.mul(rhs, y);
        theta = dot(rhs, y);
        vec = std::move(rhs);
    }
    return theta;
}

std::vector<double> cholesky(const DenseSym& b) {
    const std::size_t n = b.order();
    std::vector<double> l(n * (n + 1) / 2, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return l[i * (i + 1) / 2 + j]; };
    for (std::size_t j = 0; j < n; ++j) {
        double d = b(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
        if (!(d > 0.0))
            throw NotPositiveDefinite(
                "matrix not positive definite at pivot " + std::to_string(j), j);
        at(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = b(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
            at(i, j) = s / at(j, j);
        }
    }
    return l;
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   std::span<const double> rhs) {
    auto at = [&](std::size_t i, std::size_t j) { return l[i * (i + 1) / 2 + j]; };
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= at(i, k) * y[k];
        y[i] = s / at(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= at(k, i) * y[k];
        y[i] = s / at(i, i);
    }
    return y;
}

GenEigResult gen_eig_extreme(const DenseSym& a, const DenseSym& b, Extreme which,
                             const SolverOptions& opts) {
    const std::size_t n = a.order();
    if (n == 0 || b.order() != n)
        throw ValidationError("gen_eig_extreme", "A and B must have equal order >= 1");
    const std::vector<double> l = cholesky(b);
    auto lat = [&](std::size_t i, std::size_t j) { return l[i * (i + 1) / 2 + j]; };

    // X = L^-1 A  (forward substitution on each column of A)
    std::vector<double> x(n * n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = a(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= lat(i, k) * x[k * n + c];
            x[i * n + c] = s / lat(i, i);
        }
    }
    // C = X L^-T (forward substitution along each row)
    DenseSym cmat(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(n);
        for (std::size_t j = 0; j < n; ++j) {
            double s = x[r * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= lat(j, k) * row[k];
            row[j] = s / lat(j, j);
        }
        for (std::size_t j = 0; j <= r; ++j) cmat.at(r, j) = row[j];
    }

    EigPairs pairs = dense_eigh(cmat, opts);
    const std::size_t pick = which == Extreme::Min ? 0 : n - 1;

    GenEigResult out;
    out.value = pairs.values[pick];
    // back-transform: x = L^-T y
    std::vector<double> vec(n);
    const std::vector<double>& y = pairs.vectors[pick];
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= lat(k, i) * vec[k];
        vec[i] = s / lat(i, i);
    }
    const double nrm = nrm2(vec);
    scal(1.0 / nrm, vec);
    std::vector<double> av(n), bv(n);
    a.mul(vec, av);
    b.mul(vec, bv);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = av[i] - out.value * bv[i];
        res += r * r;
    }
    out.residual = std::sqrt(res) / std::max(a.norm_bound() + std::abs(out.value) * b.norm_bound(),
                                             std::numeric_limits<double>::min());
    out.vector = std::move(vec);
    return out;
}

}  // namespace speclab::numerics
