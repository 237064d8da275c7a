#include "speclab/ghost.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "speclab/decay.hpp"

namespace speclab::ghost {

double s_eval(double mu, double t) {
    if (mu < 0.0) throw ValidationError("mu", "s_eval needs mu >= 0");
    if (mu == 0.0) return t;
    const double root = std::sqrt(mu);
    const double z = root * std::abs(t);
    if (z < 1e-4) {
        const double t2 = t * t;
        return t * (1.0 + mu * t2 / 6.0 + mu * mu * t2 * t2 / 120.0);
    }
    return std::sinh(root * t) / root;
}

double s_eval_dt(double mu, double t) {
    if (mu < 0.0) throw ValidationError("mu", "s_eval needs mu >= 0");
    return std::cosh(std::sqrt(mu) * t);
}

std::span<const double> GhostField::slice(std::size_t j) const {
    const std::size_t npts = sys_->grid().total_points();
    return {field_.data() + j * npts, npts};
}

std::span<const double> GhostField::dt_slice(std::size_t j) const {
    const std::size_t npts = sys_->grid().total_points();
    return {dt_field_.data() + j * npts, npts};
}

std::vector<double> GhostField::dtt_slice(std::size_t j) const {
    const std::size_t npts = sys_->grid().total_points();
    std::vector<double> out(npts, 0.0);
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        const double a = coeff_[k] * sys_->value(k) * s_eval(sys_->value(k), t_[j]);
        const auto f = sys_->vector(k);
        for (std::size_t i = 0; i < npts; ++i) out[i] += a * f[i];
    }
    return out;
}

std::vector<double> GhostField::boundary_velocity() const {
    const std::size_t npts = sys_->grid().total_points();
    std::vector<double> out(npts, 0.0);
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        const double a = coeff_[k] * s_eval_dt(sys_->value(k), 0.0);
        const auto f = sys_->vector(k);
        for (std::size_t i = 0; i < npts; ++i) out[i] += a * f[i];
    }
    return out;
}

std::vector<double> GhostField::source() const {
    const std::size_t npts = sys_->grid().total_points();
    std::vector<double> out(npts, 0.0);
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        const auto f = sys_->vector(k);
        for (std::size_t i = 0; i < npts; ++i) out[i] += coeff_[k] * f[i];
    }
    return out;
}

GhostField extend(const model::SpectralSubspace& sub, std::span<const double> coeff, double rho,
                  std::size_t t_points) {
    if (coeff.size() != sub.dim)
        throw ValidationError("coeff", "coefficient count must match the subspace dimension");
    if (sub.dim == 0) throw ValidationError("subspace", "empty subspace");
    if (!(rho > 0.0)) throw ValidationError("rho", "rho must be positive");
    if (t_points < 2) throw ValidationError("t_points", "need at least 2 time points");

    GhostField field;
    field.sys_ = sub.system;
    field.rho_ = rho;
    field.lambda_ = sub.threshold;
    field.coeff_.assign(coeff.begin(), coeff.end());
    field.t_.resize(t_points);
    const double dt = 2.0 * rho / double(t_points - 1);
    for (std::size_t j = 0; j < t_points; ++j) field.t_[j] = -rho + double(j) * dt;

    const std::size_t npts = sub.sys().grid().total_points();
    field.field_.assign(t_points * npts, 0.0);
    field.dt_field_.assign(t_points * npts, 0.0);
    for (std::size_t j = 0; j < t_points; ++j) {
        double* f_slab = &field.field_[j * npts];
        double* d_slab = &field.dt_field_[j * npts];
        for (std::size_t k = 0; k < sub.dim; ++k) {
            const double lam = sub.sys().value(k);
            const double sf = coeff[k] * s_eval(lam, field.t_[j]);
            const double sd = coeff[k] * s_eval_dt(lam, field.t_[j]);
            const auto basis = sub.sys().vector(k);
            for (std::size_t i = 0; i < npts; ++i) {
                f_slab[i] += sf * basis[i];
                d_slab[i] += sd * basis[i];
            }
        }
    }
    return field;
}

IdentityReport verify_identities(const GhostField& field, const model::Hamiltonian& ham) {
    const model::Eigensystem& sys = field.sys();
    if (!(ham.grid() == sys.grid()))
        throw ValidationError("hamiltonian", "operator and field must share the grid");
    const std::size_t npts = sys.grid().total_points();

    IdentityReport rep;
    {
        const std::vector<double> v = field.boundary_velocity();
        const std::vector<double> f = field.source();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < npts; ++i) {
            num += (v[i] - f[i]) * (v[i] - f[i]);
            den += f[i] * f[i];
        }
        rep.boundary_residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
    }

    std::vector<double> hf(npts);
    for (std::size_t j = 0; j < field.t_count(); ++j) {
        const auto slice = field.slice(j);
        double norm_sq = 0.0;
        for (double x : slice) norm_sq += x * x;
        if (norm_sq < 1e-280) continue;  // F(., 0) vanishes identically
        ham.sparse().mul(slice, hf);
        const std::vector<double> dtt = field.dtt_slice(j);
        double num = 0.0;
        for (std::size_t i = 0; i < npts; ++i) {
            const double r = hf[i] - dtt[i];
            num += r * r;
        }
        rep.elliptic_residual = std::max(rep.elliptic_residual, std::sqrt(num / norm_sq));
    }

    // oddness: pair each t_j with its mirror (uniform symmetric grid)
    for (std::size_t j = 0; j < field.t_count() / 2; ++j) {
        const auto a = field.slice(j);
        const auto b = field.slice(field.t_count() - 1 - j);
        for (std::size_t i = 0; i < npts; ++i)
            rep.odd_defect = std::max(rep.odd_defect, std::abs(a[i] + b[i]));
    }
    return rep;
}

SandwichReport h1_sandwich(const GhostField& field, double rho, double lambda) {
    if (std::abs(rho - field.rho()) > 1e-12 * std::max(1.0, rho))
        throw ValidationError("rho", "sandwich rho must match the field extension");
    if (field.t_count() < 64)
        throw ValidationError("t_points", "sandwich quadrature needs at least 64 time points");

    const model::Eigensystem& sys = field.sys();
    const model::Grid& grid = sys.grid();
    const double w = grid.cell_weight();
    const std::size_t nt = field.t_count();
    const double dt = 2.0 * rho / double(nt - 1);

    double integral = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
        const auto f = field.slice(j);
        const auto df = field.dt_slice(j);
        const std::vector<double> g = decay::gradient_sq(grid, f);
        double slab = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) slab += f[i] * f[i] + g[i] + df[i] * df[i];
        slab *= w;
        const double trap = (j == 0 || j + 1 == nt) ? 0.5 : 1.0;
        integral += trap * slab * dt;
    }

    double f_norm_sq = 0.0;
    {
        const std::vector<double> f = field.source();
        for (double x : f) f_norm_sq += x * x;
        f_norm_sq *= w;
    }

    SandwichReport rep;
    rep.h1_sq = integral;
    rep.lower_bound = 2.0 * rho * f_norm_sq;
    rep.log_upper = std::log(2.0 * rho * (1.0 + (1.0 + lambda) * rho * rho)) +
                    2.0 * rho * std::sqrt(lambda) + std::log(f_norm_sq);
    rep.upper_bound = std::exp(rep.log_upper);
    rep.lower_slack = (rep.h1_sq - rep.lower_bound) / rep.h1_sq;
    rep.upper_slack = std::isfinite(rep.upper_bound)
                          ? (rep.upper_bound - rep.h1_sq) / rep.h1_sq
                          : 1.0;  // overflowing bound is vacuously satisfied
    return rep;
}

GeometryConstants geometry_constants(double lambda, const model::PotentialSpec& p, double delta,
                                     double alpha, double c_eff, int dimension) {
    if (!(lambda >= 1.0)) throw ValidationError("lambda", "geometry needs lambda >= 1");
    if (!(delta > 0.0 && delta < 0.5))
        throw ValidationError("delta", "delta must lie in (0, 1/2)");
    if (!(alpha >= 0.0)) throw ValidationError("alpha", "alpha must be >= 0");
    if (!(c_eff > 0.0)) throw ValidationError("c_eff", "effective constant must be positive");
    if (dimension != 1 && dimension != 2)
        throw ValidationError("dimension", "dimension must be 1 or 2");

    GeometryConstants out;
    const double scale = std::pow(lambda, 1.0 / p.tau1());
    const double sidelength = std::max(5.0, std::ceil(2.0 * c_eff * scale));
    out.half_width = sidelength / 2.0;
    const double root_d = std::sqrt(double(dimension));
    const double expo = 2.0 * std::pow(2.0 * root_d * c_eff, alpha) *
                        std::pow(lambda, alpha / p.tau1());
    out.log_theta = expo * std::log(delta);
    out.theta = std::exp(out.log_theta);
    out.carleman_radius = 9.0 * std::exp(1.0) * root_d;
    out.kappa_proxy = -1.0 / out.log_theta;  // dimensional factor c_d set to one
    return out;
}

void save_field(const GhostField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    const char magic[8] = {'S', 'L', 'G', 'H', 'S', 'T', '0', '1'};
    out.write(magic, sizeof magic);
    const std::uint32_t version = 1;
    const std::uint32_t d = field.sys().grid().dimension();
    const std::uint64_t n = field.sys().grid().points_per_axis();
    const std::uint64_t nt = field.t_count();
    const double L = field.sys().grid().half_width();
    const double rho = field.rho();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&nt), sizeof nt);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    out.write(reinterpret_cast<const char*>(&rho), sizeof rho);
    for (std::size_t j = 0; j < field.t_count(); ++j) {
        const auto s = field.slice(j);
        out.write(reinterpret_cast<const char*>(s.data()), std::streamsize(s.size() * sizeof(double)));
    }
    if (!out) throw Error("failed writing ghost field to " + path);
}

}  // namespace speclab::ghost
