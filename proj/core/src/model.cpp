#include "speclab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace speclab::model {

namespace {

double euclid(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

PotentialSpec PotentialSpec::power_law(double tau) {
    if (!(tau > 0.0)) throw ValidationError("potential.tau", "tau must be positive");
    PotentialSpec p;
    p.kind_ = PotentialKind::PowerLaw;
    p.c1_ = p.c2_ = 1.0;
    p.tau1_ = p.tau2_ = tau;
    return p;
}

PotentialSpec PotentialSpec::anisotropic(double tau, int confined_axes) {
    if (!(tau > 0.0)) throw ValidationError("potential.tau", "tau must be positive");
    if (confined_axes < 1) throw ValidationError("potential.d1", "confined axis count must be >= 1");
    PotentialSpec p;
    p.kind_ = PotentialKind::Anisotropic;
    p.c1_ = p.c2_ = 1.0;
    p.tau1_ = p.tau2_ = tau;
    p.confined_axes_ = confined_axes;
    return p;
}

PotentialSpec PotentialSpec::two_sided(double c1, double tau1, double c2, double tau2,
                                       PotentialSampler sampler, double nu, double m_nu,
                                       std::string sampler_name) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw ValidationError("potential.c", "c1, c2 must be positive");
    if (!(tau1 > 0.0) || !(tau2 > 0.0))
        throw ValidationError("potential.tau", "tau1, tau2 must be positive");
    if (tau1 > tau2) throw ValidationError("potential.tau", "tau1 must not exceed tau2");
    if (nu < 0.0 || m_nu < 0.0)
        throw ValidationError("potential.nu", "nu and M_nu must be nonnegative");
    PotentialSpec p;
    p.kind_ = PotentialKind::TwoSidedPower;
    p.c1_ = c1;
    p.tau1_ = tau1;
    p.c2_ = c2;
    p.tau2_ = tau2;
    p.nu_ = nu;
    p.m_nu_ = m_nu;
    p.sampler_ = std::move(sampler);
    p.sampler_name_ = std::move(sampler_name);
    return p;
}

PotentialSpec PotentialSpec::free_potential() {
    PotentialSpec p;
    p.kind_ = PotentialKind::Free;
    p.c1_ = p.c2_ = 0.0;
    p.tau1_ = p.tau2_ = 1.0;
    return p;
}

void PotentialSpec::set_gradient_growth(double nu, double m_nu) {
    if (nu < 0.0 || m_nu < 0.0)
        throw ValidationError("potential.nu", "nu and M_nu must be nonnegative");
    nu_ = nu;
    m_nu_ = m_nu;
}

double PotentialSpec::operator()(std::span<const double> x) const {
    switch (kind_) {
        case PotentialKind::PowerLaw:
            return std::pow(euclid(x), tau1_);
        case PotentialKind::Anisotropic: {
            const std::size_t d1 = std::min<std::size_t>(confined_axes_, x.size());
            return std::pow(euclid(x.subspan(0, d1)), tau1_);
        }
        case PotentialKind::TwoSidedPower:
            if (!sampler_)
                throw Error("TwoSidedPower potential has no sampler attached (loaded from cache?)");
            return sampler_(x);
        case PotentialKind::Free:
            return 0.0;
    }
    return 0.0;
}

bool PotentialSpec::has_analytic_gradient() const {
    return kind_ != PotentialKind::TwoSidedPower;
}

double PotentialSpec::gradient_norm(std::span<const double> x) const {
    switch (kind_) {
        case PotentialKind::PowerLaw: {
            const double r = euclid(x);
            if (r == 0.0)
                return tau1_ == 1.0 ? 1.0
                                    : (tau1_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
            return tau1_ * std::pow(r, tau1_ - 1.0);
        }
        case PotentialKind::Anisotropic: {
            const std::size_t d1 = std::min<std::size_t>(confined_axes_, x.size());
            const double r = euclid(x.subspan(0, d1));
            if (r == 0.0)
                return tau1_ == 1.0 ? 1.0
                                    : (tau1_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
            return tau1_ * std::pow(r, tau1_ - 1.0);
        }
        case PotentialKind::Free:
            return 0.0;
        case PotentialKind::TwoSidedPower:
            throw Error("TwoSidedPower potential has no analytic gradient");
    }
    return 0.0;
}

std::string PotentialSpec::describe() const {
    std::string s;
    switch (kind_) {
        case PotentialKind::PowerLaw:
            s = "power(tau=" + fmt(tau1_) + ")";
            break;
        case PotentialKind::Anisotropic:
            s = "aniso(tau=" + fmt(tau1_) + ",d1=" + std::to_string(confined_axes_) + ")";
            break;
        case PotentialKind::TwoSidedPower:
            s = "two_sided(c1=" + fmt(c1_) + ",tau1=" + fmt(tau1_) + ",c2=" + fmt(c2_) +
                ",tau2=" + fmt(tau2_) + ",sampler=" + sampler_name_ + ")";
            break;
        case PotentialKind::Free:
            s = "free";
            break;
    }
    if (nu_ != 0.0 || m_nu_ != 0.0) s += "[nu=" + fmt(nu_) + ",Mnu=" + fmt(m_nu_) + "]";
    return s;
}

Grid Grid::make(int dimension, double half_width, std::size_t points_per_axis) {
    if (dimension != 1 && dimension != 2)
        throw ValidationError("grid.dimension", "dimension must be 1 or 2");
    if (!(half_width > 0.0)) throw ValidationError("grid.half_width", "half-width must be positive");
    if (points_per_axis < 3) throw ValidationError("grid.n", "points per axis must be >= 3");
    Grid g;
    g.d_ = dimension;
    g.half_width_ = half_width;
    g.n_ = points_per_axis;
    g.spacing_ = 2.0 * half_width / double(points_per_axis + 1);
    return g;
}

double Grid::cell_weight() const { return d_ == 1 ? spacing_ : spacing_ * spacing_; }

std::array<double, 2> Grid::point(std::size_t flat_index) const {
    if (d_ == 1) return {axis_coord(flat_index), 0.0};
    return {axis_coord(flat_index / n_), axis_coord(flat_index % n_)};
}

double Grid::radius(std::size_t flat_index) const {
    const auto p = point(flat_index);
    return d_ == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

double Grid::max_radius() const {
    const double m = std::max(std::abs(axis_coord(n_ - 1)), std::abs(axis_coord(0)));
    return d_ == 1 ? m : m * std::sqrt(2.0);
}

const numerics::SymTridiag& Hamiltonian::tridiag() const {
    if (!is_tridiagonal()) throw Error("Hamiltonian: tridiagonal form only exists for d = 1");
    return tri_;
}

const numerics::SparseSym& Hamiltonian::sparse() const {
    if (!sparse_) {
        if (!is_tridiagonal()) throw Error("Hamiltonian: sparse form missing");
        sparse_ =
            std::make_shared<const numerics::SparseSym>(numerics::SparseSym::from_tridiag(tri_));
    }
    return *sparse_;
}

Hamiltonian assemble(const Grid& grid, const PotentialSpec& p) {
    if (p.kind() == PotentialKind::Anisotropic && p.confined_axes() >= grid.dimension())
        throw ValidationError("potential.d1",
                              "anisotropic potential needs confined axes < grid dimension");
    const double h = grid.spacing();
    const double inv_h2 = 1.0 / (h * h);
    const bool check_bounds = p.kind() == PotentialKind::TwoSidedPower;
    const double slack = 1e-12;

    auto sample = [&](std::size_t flat) {
        const auto pt = grid.point(flat);
        const std::span<const double> x(pt.data(), grid.dimension());
        const double v = p(x);
        if (!std::isfinite(v))
            throw Error("potential sample not finite at flat index " + std::to_string(flat));
        if (check_bounds) {
            const double r = grid.radius(flat);
            const double lo = p.c1() * std::pow(r, p.tau1());
            const double hi = p.c2() * std::pow(r, p.tau2());
            if (v < lo - slack * (1.0 + lo) || v > hi + slack * (1.0 + hi)) {
                std::string where = grid.dimension() == 1
                                        ? "x = " + fmt(pt[0])
                                        : "x = (" + fmt(pt[0]) + ", " + fmt(pt[1]) + ")";
                throw Error("two-sided potential out of [c1 |x|^tau1, c2 |x|^tau2] at grid point " +
                            std::to_string(flat) + ", " + where + ": V = " + fmt(v));
            }
        }
        return v;
    };

    Hamiltonian ham;
    ham.grid_ = grid;
    ham.potential_ = p;
    const std::size_t n = grid.points_per_axis();
    if (grid.dimension() == 1) {
        ham.tri_.diag.resize(n);
        ham.tri_.offdiag.assign(n - 1, -inv_h2);
        for (std::size_t i = 0; i < n; ++i) ham.tri_.diag[i] = 2.0 * inv_h2 + sample(i);
    } else {
        std::vector<numerics::SparseSym::Entry> entries;
        entries.reserve(3 * n * n);
        for (std::size_t ix = 0; ix < n; ++ix) {
            for (std::size_t iy = 0; iy < n; ++iy) {
                const std::size_t r = grid.flat(ix, iy);
                entries.push_back({r, r, 4.0 * inv_h2 + sample(r)});
                if (iy + 1 < n) entries.push_back({r, r + 1, -inv_h2});
                if (ix + 1 < n) entries.push_back({r, r + n, -inv_h2});
            }
        }
        ham.sparse_ = std::make_shared<const numerics::SparseSym>(
            numerics::SparseSym::from_upper(n * n, std::move(entries)));
    }
    return ham;
}

double Eigensystem::dot(std::span<const double> u, std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s * grid_.cell_weight();
}

double Eigensystem::norm(std::span<const double> u) const { return std::sqrt(dot(u, u)); }

Eigensystem Eigensystem::from_parts(Grid grid, PotentialSpec p, double lambda_max,
                                    double harvest_cap, std::vector<double> values,
                                    std::vector<std::vector<double>> vectors,
                                    double max_residual) {
    if (!values.empty() && !(values.front() > 0.0))
        throw Error("Eigensystem: lowest eigenvalue must be positive, got " + fmt(values.front()));
    if (!std::is_sorted(values.begin(), values.end()))
        throw Error("Eigensystem: eigenvalues must be ascending");
    Eigensystem sys;
    sys.grid_ = std::move(grid);
    sys.potential_ = std::move(p);
    sys.lambda_max_ = lambda_max;
    sys.harvest_cap_ = harvest_cap;
    sys.values_ = std::move(values);
    sys.vectors_ = std::move(vectors);
    sys.max_residual_ = max_residual;
    return sys;
}

Eigensystem eigendecompose(const Hamiltonian& h, double lambda_max, const EigOptions& opts) {
    if (!(lambda_max > 0.0)) throw ValidationError("lambda_max", "must be positive");
    if (!(opts.buffer >= 0.0)) throw ValidationError("buffer", "must be nonnegative");
    const double cap = lambda_max * (1.0 + opts.buffer);

    numerics::LanczosOptions lopts;
    lopts.rel_tol = opts.rel_tol;
    numerics::EigPairs pairs = h.is_tridiagonal()
                                   ? numerics::tridiag_below(h.tridiag(), cap, opts.seed, lopts)
                                   : numerics::lanczos_below(h.sparse(), cap, opts.seed, lopts);

    if (h.is_tridiagonal() && opts.polish) {
        for (std::size_t k = 0; k < pairs.count(); ++k)
            pairs.values[k] =
                numerics::tridiag_polish(h.tridiag(), pairs.values[k], pairs.vectors[k]);
        // polish can nudge values across each other inside tight clusters
        for (std::size_t k = 1; k < pairs.count(); ++k)
            if (pairs.values[k] < pairs.values[k - 1])
                std::swap(pairs.values[k], pairs.values[k - 1]);
    }

    // residuals in the Euclidean metric; the ratio is the same in the weighted one
    const Grid& grid = h.grid();
    double max_resid = 0.0;
    {
        std::vector<double> y(grid.total_points());
        for (std::size_t k = 0; k < pairs.count(); ++k) {
            h.sparse().mul(pairs.vectors[k], y);
            double r = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double d = y[i] - pairs.values[k] * pairs.vectors[k][i];
                r += d * d;
            }
            max_resid = std::max(max_resid, std::sqrt(r));
        }
    }

    if (pairs.values.empty())
        throw ConvergenceError("eigendecompose: no eigenvalue at or below " + fmt(cap), 0);

    // normalize in the weighted inner product: sum h^d u^2 = 1
    const double scale = 1.0 / std::sqrt(grid.cell_weight());
    for (auto& v : pairs.vectors)
        for (auto& x : v) x *= scale;

    return Eigensystem::from_parts(grid, h.potential(), lambda_max, cap, std::move(pairs.values),
                                   std::move(pairs.vectors), max_resid);
}

SpectralSubspace subspace(const Eigensystem& sys, double lambda) {
    SpectralSubspace s;
    s.system = &sys;
    s.threshold = lambda;
    s.dim = counting_function(sys, lambda);
    return s;
}

std::size_t counting_function(const Eigensystem& sys, double lambda) {
    if (lambda > sys.lambda_max() * (1.0 + 1e-12))
        throw ValidationError("lambda", "counting_function needs lambda <= lambda_max of the system");
    const auto& v = sys.values();
    return std::upper_bound(v.begin(), v.end(), lambda) - v.begin();
}

double counting_bound(double lambda, const PotentialSpec& p, int dimension) {
    if (!(lambda >= 1.0)) throw ValidationError("lambda", "counting_bound needs lambda >= 1");
    if (p.kind() == PotentialKind::Free || p.kind() == PotentialKind::Anisotropic)
        throw ValidationError("potential", "counting_bound needs a fully confining potential");
    // support of (lambda + 1 - V)_+ lies in |x| <= ((lambda+1)/c1)^(1/tau1)
    const double support = std::pow((lambda + 1.0) / p.c1(), 1.0 / p.tau1());
    const double box = support + 1.0;
    const std::size_t n = dimension == 1 ? 4001 : 401;
    const Grid grid = Grid::make(dimension, box, n);
    const double expo = 0.5 * dimension + 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.total_points(); ++i) {
        const auto pt = grid.point(i);
        const double v = p(std::span<const double>(pt.data(), dimension));
        const double core = lambda + 1.0 - v;
        if (core > 0.0) sum += std::pow(core, expo);
    }
    return sum * grid.cell_weight();
}

double localization_halfwidth(double lambda, const PotentialSpec& p, double margin) {
    if (!(lambda >= 1.0))
        throw ValidationError("lambda", "localization_halfwidth needs lambda >= 1");
    if (!(margin >= 1.0)) throw ValidationError("margin", "margin must be >= 1");
    if (!p.confining())
        throw ValidationError("potential", "localization_halfwidth needs a confining potential");
    const double r = std::pow((lambda + 2.0) / p.c1(), 1.0 / p.tau1());
    return margin * std::max(1.0, r) + 2.0;
}

TensorPairs tensor_pairs(const Eigensystem& confined, const Eigensystem& free_factor,
                         std::optional<double> lambda_max) {
    if (confined.grid().dimension() != 1 || free_factor.grid().dimension() != 1)
        throw ValidationError("tensor", "both factors must be 1D systems");
    if (!(confined.grid() == free_factor.grid()))
        throw ValidationError("tensor", "factors must share one grid");
    if (confined.size() == 0 || free_factor.size() == 0)
        throw ValidationError("tensor", "factors must be nonempty");

    const double complete = std::min(confined.lambda_max() + free_factor.value(0),
                                     free_factor.lambda_max() + confined.value(0));
    const double cap = lambda_max.value_or(complete);
    if (cap > complete * (1.0 + 1e-12))
        throw ValidationError("tensor.lambda_max",
                              "requested threshold exceeds what the factor harvests cover");

    TensorPairs out;
    out.lambda_max = cap;
    for (std::uint32_t i = 0; i < confined.size(); ++i) {
        if (confined.value(i) + free_factor.value(0) > cap) break;
        for (std::uint32_t j = 0; j < free_factor.size(); ++j) {
            const double sum = confined.value(i) + free_factor.value(j);
            if (sum > cap) break;
            out.index.push_back({i, j});
            out.values.push_back(sum);
        }
    }
    std::vector<std::size_t> perm(out.values.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return out.values[a] < out.values[b]; });
    TensorPairs sorted;
    sorted.lambda_max = cap;
    sorted.index.reserve(perm.size());
    sorted.values.reserve(perm.size());
    for (std::size_t i : perm) {
        sorted.index.push_back(out.index[i]);
        sorted.values.push_back(out.values[i]);
    }
    return sorted;
}

Eigensystem tensor_compose(const Eigensystem& confined, const Eigensystem& free_factor,
                           std::optional<double> lambda_max) {
    if (free_factor.potential().kind() != PotentialKind::Free)
        throw ValidationError("tensor", "second factor must carry the free potential");
    if (confined.potential().kind() != PotentialKind::PowerLaw)
        throw ValidationError("tensor", "confined factor must be a power-law potential");

    const TensorPairs pairs = tensor_pairs(confined, free_factor, lambda_max);
    const std::size_t n = confined.grid().points_per_axis();
    const Grid grid2 = Grid::make(2, confined.grid().half_width(), n);

    std::vector<std::vector<double>> vectors;
    vectors.reserve(pairs.values.size());
    for (std::size_t m = 0; m < pairs.values.size(); ++m) {
        const auto phi = confined.vector(pairs.index[m][0]);
        const auto psi = free_factor.vector(pairs.index[m][1]);
        std::vector<double> v(n * n);
        for (std::size_t ix = 0; ix < n; ++ix)
            for (std::size_t iy = 0; iy < n; ++iy) v[grid2.flat(ix, iy)] = phi[ix] * psi[iy];
        vectors.push_back(std::move(v));
    }
    PotentialSpec p2 = PotentialSpec::anisotropic(confined.potential().tau1(), 1);
    p2.set_gradient_growth(confined.potential().nu(), confined.potential().m_nu());
    return Eigensystem::from_parts(grid2, std::move(p2), pairs.lambda_max, pairs.lambda_max,
                                   std::vector<double>(pairs.values), std::move(vectors),
                                   confined.max_residual() + free_factor.max_residual());
}

}  // namespace speclab::model
