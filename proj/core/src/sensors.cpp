#include "speclab/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <ostream>

#include "speclab/rng.hpp"

namespace speclab::sensors {

namespace {

constexpr char kMaskMagic[8] = {'S', 'L', 'M', 'A', 'S', 'K', '0', '1'};

// Decay exponent 1 + |k|^alpha. alpha = 0 keeps the undecayed radius in every
// cell (the realized set is then plain delta-equidistributed), and the origin
// cell is never decayed.
double cell_exponent(double knorm, double alpha) {
    if (alpha == 0.0 || knorm == 0.0) return 1.0;
    return 1.0 + std::pow(knorm, alpha);
}

double lattice_norm(const SensorSpec& spec, int kx, int ky, int dimension) {
    if (spec.decay_axes == DecayAxes::FirstBlock) return std::abs(double(kx));
    return dimension == 1 ? std::abs(double(kx)) : std::hypot(double(kx), double(ky));
}

std::uint64_t cell_stream(int kx, int ky) {
    return (std::uint64_t(std::uint32_t(kx + (1 << 20))) << 21) ^ std::uint32_t(ky + (1 << 20));
}

/// Realized geometry of the lattice cells, precomputed so point-membership
/// queries are O(1).
struct CellTable {
    int k_max = 0;            // cells k in [-k_max, k_max]^d
    double pitch = 1.0;       // 1 for unit cells, rho for thick cells
    int side = 0;             // 2 k_max + 1
    std::vector<double> radius;
    std::vector<std::array<double, 2>> center;
    std::vector<double> target;
    // ThickDecay: chosen dyadic sub-cells per cell
    int subdiv = 0;
    std::vector<std::vector<std::uint32_t>> chosen;

    std::size_t index(int kx, int ky) const {
        return std::size_t(kx + k_max) * side + std::size_t(ky + k_max);
    }
    bool in_range(int kx, int ky) const {
        return std::abs(kx) <= k_max && std::abs(ky) <= k_max;
    }
};

double ball_volume(double r, int d) {
    return d == 1 ? 2.0 * r : std::numbers::pi * r * r;
}

CellTable build_cells(const SensorSpec& spec, const model::Grid& grid) {
    CellTable table;
    const int d = grid.dimension();
    const double L = grid.half_width();
    table.pitch = spec.variant == SensorSpec::Variant::ThickDecay ? spec.rho : 1.0;
    table.k_max = int(std::floor(L / table.pitch + 0.5 - 1e-12));
    table.side = 2 * table.k_max + 1;
    const std::size_t count = d == 1 ? table.side : std::size_t(table.side) * table.side;
    table.radius.assign(count, 0.0);
    table.center.assign(count, {0.0, 0.0});
    table.target.assign(count, 0.0);

    const int ky_lo = d == 1 ? 0 : -table.k_max;
    const int ky_hi = d == 1 ? 0 : table.k_max;

    switch (spec.variant) {
        case SensorSpec::Variant::EquidistributedDecay:
        case SensorSpec::Variant::BallUnion: {
            const bool random = spec.variant == SensorSpec::Variant::EquidistributedDecay &&
                                spec.placement == Placement::Random;
            const double base =
                spec.variant == SensorSpec::Variant::BallUnion ? 0.5 : spec.delta;
            for (int kx = -table.k_max; kx <= table.k_max; ++kx) {
                for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                    const std::size_t idx = d == 1 ? std::size_t(kx + table.k_max)
                                                   : table.index(kx, ky);
                    const double knorm = lattice_norm(spec, kx, ky, d);
                    const double r = std::pow(base, cell_exponent(knorm, spec.alpha));
                    table.radius[idx] = r;
                    std::array<double, 2> c{double(kx), double(ky)};
                    if (random) {
                        Rng rng(derive_seed(spec.seed, cell_stream(kx, ky)));
                        const double play = 0.5 - r;  // keep the ball inside the cell
                        for (int a = 0; a < d; ++a) c[a] += rng.uniform(-play, play);
                    }
                    table.center[idx] = c;
                    table.target[idx] = ball_volume(r, d);
                }
            }
            break;
        }
        case SensorSpec::Variant::ThickDecay: {
            const double rho = spec.rho;
            const double cell_vol = d == 1 ? rho : rho * rho;
            for (int kx = -table.k_max; kx <= table.k_max; ++kx) {
                for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                    const std::size_t idx = d == 1 ? std::size_t(kx + table.k_max)
                                                   : table.index(kx, ky);
                    const double knorm = lattice_norm(spec, kx, ky, d);
                    const double target =
                        std::pow(spec.gamma, cell_exponent(knorm, spec.alpha)) * cell_vol;
                    table.target[idx] = target;
                    table.center[idx] = {double(kx) * rho, double(ky) * rho};
                }
            }
            // one dyadic subdivision for the whole table: fine enough for the
            // smallest target, capped to keep the bookkeeping bounded
            double min_target = cell_vol;
            for (double t : table.target) min_target = std::min(min_target, std::max(t, 0.0));
            int s = 2;
            const int cap = d == 1 ? 4096 : 128;
            while (s < cap && std::pow(rho / s, d) > std::max(min_target, 1e-300)) s *= 2;
            table.subdiv = s;
            const std::uint32_t cells_per = d == 1 ? s : s * s;
            const double sub_vol = std::pow(rho / s, d);
            table.chosen.assign(table.target.size(), {});
            for (int kx = -table.k_max; kx <= table.k_max; ++kx) {
                for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                    const std::size_t idx = d == 1 ? std::size_t(kx + table.k_max)
                                                   : table.index(kx, ky);
                    std::uint32_t need = std::uint32_t(
                        std::min<double>(cells_per, std::ceil(table.target[idx] / sub_vol)));
                    if (table.target[idx] > 0.0 && need == 0) need = 1;
                    // Floyd-style sample of `need` distinct sub-cells
                    Rng rng(derive_seed(spec.seed, cell_stream(kx, ky)));
                    std::vector<std::uint32_t> pick;
                    pick.reserve(need);
                    for (std::uint32_t j = cells_per - need; j < cells_per; ++j) {
                        std::uint32_t t = std::uint32_t(rng.below(j + 1));
                        if (std::find(pick.begin(), pick.end(), t) != pick.end()) t = j;
                        pick.push_back(t);
                    }
                    std::sort(pick.begin(), pick.end());
                    table.chosen[idx] = std::move(pick);
                }
            }
            break;
        }
        case SensorSpec::Variant::Cone:
            // no per-cell geometry; records carry realized measure only
            break;
    }
    return table;
}

/// Membership test for a point (outside any cell table for cones).
bool member(const SensorSpec& spec, const CellTable& table, int d, double px, double py) {
    switch (spec.variant) {
        case SensorSpec::Variant::EquidistributedDecay:
        case SensorSpec::Variant::BallUnion: {
            const int kx = int(std::lround(px));
            const int ky = d == 1 ? 0 : int(std::lround(py));
            if (!table.in_range(kx, d == 1 ? 0 : ky)) return false;
            const std::size_t idx = d == 1 ? std::size_t(kx + table.k_max) : table.index(kx, ky);
            const double r = table.radius[idx];
            const auto& c = table.center[idx];
            const double dx = px - c[0];
            const double dy = d == 1 ? 0.0 : py - c[1];
            return dx * dx + dy * dy < r * r;
        }
        case SensorSpec::Variant::ThickDecay: {
            const double rho = spec.rho;
            const int kx = int(std::lround(px / rho));
            const int ky = d == 1 ? 0 : int(std::lround(py / rho));
            if (!table.in_range(kx, d == 1 ? 0 : ky)) return false;
            const std::size_t idx = d == 1 ? std::size_t(kx + table.k_max) : table.index(kx, ky);
            const int s = table.subdiv;
            const double lx = px - (kx * rho - 0.5 * rho);
            int sx = std::clamp(int(std::floor(lx * s / rho)), 0, s - 1);
            std::uint32_t sub = std::uint32_t(sx);
            if (d == 2) {
                const double ly = py - (ky * rho - 0.5 * rho);
                const int sy = std::clamp(int(std::floor(ly * s / rho)), 0, s - 1);
                sub = std::uint32_t(sx) * s + std::uint32_t(sy);
            }
            const auto& ch = table.chosen[idx];
            return std::binary_search(ch.begin(), ch.end(), sub);
        }
        case SensorSpec::Variant::Cone: {
            if (d == 1) {
                if (std::abs(px) < spec.r0) return false;
                return px < 0.0 ? spec.ray_negative : spec.ray_positive;
            }
            const double r = std::hypot(px, py);
            if (r < spec.r0) return false;
            const double ax = std::cos(spec.axis_angle), ay = std::sin(spec.axis_angle);
            return ax * px + ay * py >= r * std::cos(spec.half_width);
        }
    }
    return false;
}

}  // namespace

SensorSpec SensorSpec::equidistributed(double delta, double alpha, Placement placement,
                                       std::uint64_t seed, DecayAxes axes) {
    SensorSpec s;
    s.variant = Variant::EquidistributedDecay;
    s.delta = delta;
    s.alpha = alpha;
    s.placement = placement;
    s.seed = seed;
    s.decay_axes = axes;
    return s;
}

SensorSpec SensorSpec::thick(double rho, double gamma, double alpha, std::uint64_t seed) {
    SensorSpec s;
    s.variant = Variant::ThickDecay;
    s.rho = rho;
    s.gamma = gamma;
    s.alpha = alpha;
    s.seed = seed;
    return s;
}

SensorSpec SensorSpec::ball_union(double alpha) {
    SensorSpec s;
    s.variant = Variant::BallUnion;
    s.alpha = alpha;
    return s;
}

SensorSpec SensorSpec::cone_rays(double r0, bool negative, bool positive) {
    SensorSpec s;
    s.variant = Variant::Cone;
    s.r0 = r0;
    s.ray_negative = negative;
    s.ray_positive = positive;
    return s;
}

SensorSpec SensorSpec::cone_sector(double r0, double axis_angle, double half_width) {
    SensorSpec s;
    s.variant = Variant::Cone;
    s.r0 = r0;
    s.axis_angle = axis_angle;
    s.half_width = half_width;
    return s;
}

void SensorSpec::validate(int dimension) const {
    if (dimension != 1 && dimension != 2)
        throw ValidationError("sensor.dimension", "dimension must be 1 or 2");
    switch (variant) {
        case Variant::EquidistributedDecay:
            if (!(delta > 0.0 && delta < 0.5))
                throw ValidationError("sensor.delta", "delta must lie in (0, 1/2)");
            if (!(alpha >= 0.0)) throw ValidationError("sensor.alpha", "alpha must be >= 0");
            if (decay_axes == DecayAxes::FirstBlock && dimension != 2)
                throw ValidationError("sensor.decay_axes",
                                      "first-axis decay needs a 2D grid");
            break;
        case Variant::ThickDecay:
            if (!(rho > 0.0)) throw ValidationError("sensor.rho", "rho must be positive");
            if (!(gamma > 0.0 && gamma <= 1.0))
                throw ValidationError("sensor.gamma", "gamma must lie in (0, 1]");
            if (!(alpha >= 0.0)) throw ValidationError("sensor.alpha", "alpha must be >= 0");
            break;
        case Variant::BallUnion:
            if (!(alpha >= 0.0)) throw ValidationError("sensor.alpha", "alpha must be >= 0");
            break;
        case Variant::Cone:
            if (!(r0 > 0.0)) throw ValidationError("sensor.r0", "r0 must be positive");
            if (dimension == 1 && !ray_negative && !ray_positive)
                throw ValidationError("sensor.rays", "at least one ray must be kept");
            if (dimension == 2 && !(half_width > 0.0 && half_width <= std::numbers::pi))
                throw ValidationError("sensor.half_width",
                                      "sector half-width must lie in (0, pi]");
            break;
    }
}

std::string SensorSpec::describe() const {
    char buf[160];
    switch (variant) {
        case Variant::EquidistributedDecay:
            std::snprintf(buf, sizeof buf, "equidistributed(delta=%g,alpha=%g,%s,%s,seed=%llu)",
                          delta, alpha, placement == Placement::Center ? "center" : "random",
                          decay_axes == DecayAxes::All ? "all-axes" : "first-axis",
                          static_cast<unsigned long long>(seed));
            break;
        case Variant::ThickDecay:
            std::snprintf(buf, sizeof buf, "thick(rho=%g,gamma=%g,alpha=%g,seed=%llu)", rho, gamma,
                          alpha, static_cast<unsigned long long>(seed));
            break;
        case Variant::BallUnion:
            std::snprintf(buf, sizeof buf, "ball_union(alpha=%g)", alpha);
            break;
        case Variant::Cone:
            std::snprintf(buf, sizeof buf, "cone(r0=%g,neg=%d,pos=%d,angle=%g,width=%g)", r0,
                          int(ray_negative), int(ray_positive), axis_angle, half_width);
            break;
    }
    return buf;
}

std::size_t SensorMask::unresolved_count() const {
    std::size_t c = 0;
    for (const auto& cell : cells_)
        if (!cell.resolved) ++c;
    return c;
}

double SensorMask::unresolved_fraction() const {
    return cells_.empty() ? 0.0 : double(unresolved_count()) / double(cells_.size());
}

SensorMask SensorMask::from_parts(model::Grid grid, std::vector<double> weights,
                                  std::vector<CellRecord> cells) {
    SensorMask m;
    m.grid_ = std::move(grid);
    m.weights_ = std::move(weights);
    m.cells_ = std::move(cells);
    return m;
}

SensorMask realize(const SensorSpec& spec, const model::Grid& grid) {
    spec.validate(grid.dimension());
    if (grid.half_width() < 1.5)
        throw ValidationError("grid.half_width", "sensor realization needs L >= 3/2");

    const CellTable table = build_cells(spec, grid);
    const int d = grid.dimension();
    const double h = grid.spacing();
    const double third = h / 3.0;
    const std::size_t npts = grid.total_points();

    SensorMask mask;
    mask.grid_ = grid;
    mask.weights_.assign(npts, 0.0);

    const double offsets[3] = {-third, 0.0, third};
    for (std::size_t i = 0; i < npts; ++i) {
        const auto pt = grid.point(i);
        int hits = 0;
        if (d == 1) {
            for (double ox : offsets) hits += member(spec, table, d, pt[0] + ox, 0.0);
            mask.weights_[i] = hits / 3.0;
        } else {
            for (double ox : offsets)
                for (double oy : offsets) hits += member(spec, table, d, pt[0] + ox, pt[1] + oy);
            mask.weights_[i] = hits / 9.0;
        }
    }

    // cell records with realized measure accumulated from the mask
    const double L = grid.half_width();
    const double pitch = table.pitch;
    const int k_max = table.k_max;
    const int side = 2 * k_max + 1;
    const std::size_t cell_count = d == 1 ? side : std::size_t(side) * side;
    std::vector<CellRecord> records(cell_count);
    const int ky_lo = d == 1 ? 0 : -k_max;
    const int ky_hi = d == 1 ? 0 : k_max;
    for (int kx = -k_max; kx <= k_max; ++kx) {
        for (int ky = ky_lo; ky <= ky_hi; ++ky) {
            const std::size_t idx = d == 1 ? std::size_t(kx + k_max)
                                           : std::size_t(kx + k_max) * side + (ky + k_max);
            CellRecord& rec = records[idx];
            rec.k = {kx, ky};
            if (spec.variant != SensorSpec::Variant::Cone) {
                rec.radius = table.radius.empty() ? 0.0 : table.radius[idx];
                rec.center = table.center[idx];
            }
            rec.target_measure = table.target.empty() ? 0.0 : table.target[idx];
            if (spec.variant == SensorSpec::Variant::EquidistributedDecay ||
                spec.variant == SensorSpec::Variant::BallUnion)
                rec.resolved = rec.radius >= h;
            else if (spec.variant == SensorSpec::Variant::ThickDecay)
                rec.resolved = pitch / table.subdiv >= h;
            const double reach = std::max(std::abs(kx * pitch), std::abs(ky * pitch)) + 0.5 * pitch;
            rec.boundary = reach > L - 0.5 * h;
        }
    }
    const double w = grid.cell_weight();
    for (std::size_t i = 0; i < npts; ++i) {
        if (mask.weights_[i] == 0.0) continue;
        const auto pt = grid.point(i);
        const int kx = int(std::lround(pt[0] / pitch));
        const int ky = d == 1 ? 0 : int(std::lround(pt[1] / pitch));
        if (!table.in_range(kx, ky)) continue;
        const std::size_t idx = d == 1 ? std::size_t(kx + k_max)
                                       : std::size_t(kx + k_max) * side + (ky + k_max);
        records[idx].realized_measure += mask.weights_[i] * w;
    }
    mask.cells_ = std::move(records);
    return mask;
}

VerifyReport verify_cells(const SensorMask& mask, const SensorSpec& spec) {
    const int d = mask.grid().dimension();
    const double h = mask.grid().spacing();
    VerifyReport report;
    report.cells.reserve(mask.cells().size());
    for (const CellRecord& rec : mask.cells()) {
        CellCheck check;
        check.k = rec.k;
        check.realized = rec.realized_measure;
        double boundary_measure = 0.0;
        switch (spec.variant) {
            case SensorSpec::Variant::EquidistributedDecay:
            case SensorSpec::Variant::BallUnion:
                check.required = ball_volume(rec.radius, d);
                boundary_measure = d == 1 ? 2.0 : 2.0 * std::numbers::pi * rec.radius;
                break;
            case SensorSpec::Variant::ThickDecay:
                check.required = rec.target_measure;
                break;
            case SensorSpec::Variant::Cone:
                check.required = 0.0;
                break;
        }
        if (spec.variant == SensorSpec::Variant::ThickDecay) {
            // boundary of the chosen sub-cell union
            const double sub = spec.rho;  // conservative: one rho-cell perimeter per sub-cell row
            boundary_measure = 2.0 * d * sub * std::ceil(check.required / std::pow(h, d) + 1.0);
            boundary_measure = std::min(boundary_measure, 4.0 * d * spec.rho / h);
        }
        check.slack = 1.5 * boundary_measure * (h / 3.0) + 1e-12;
        check.skipped = !rec.resolved || rec.boundary;
        check.pass = check.skipped || check.realized >= check.required - check.slack;
        if (check.skipped)
            ++report.skipped;
        else if (!check.pass) {
            ++report.failures;
            report.all_pass = false;
        }
        report.cells.push_back(check);
    }
    return report;
}

double total_measure(const SensorMask& mask) {
    double s = 0.0;
    for (double w : mask.weights()) s += w;
    return s * mask.grid().cell_weight();
}

void export_cells_csv(const SensorMask& mask, std::ostream& out) {
    out << "kx,ky,radius,center_x,center_y,target_measure,realized_measure,resolved,boundary\r\n";
    char buf[256];
    for (const CellRecord& c : mask.cells()) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%d,%d\r\n", c.k[0],
                      c.k[1], c.radius, c.center[0], c.center[1], c.target_measure,
                      c.realized_measure, int(c.resolved), int(c.boundary));
        out << buf;
    }
}

void save_weights(const SensorMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kMaskMagic, sizeof kMaskMagic);
    const std::uint32_t version = 1;
    const std::uint32_t d = mask.grid().dimension();
    const std::uint64_t n = mask.grid().points_per_axis();
    const double L = mask.grid().half_width();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    out.write(reinterpret_cast<const char*>(mask.weights().data()),
              std::streamsize(mask.weights().size() * sizeof(double)));
    if (!out) throw Error("failed writing mask blob to " + path);
}

SensorMask load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMaskMagic, sizeof magic) != 0)
        throw Error(path + " is not a mask blob");
    std::uint32_t version = 0, d = 0;
    std::uint64_t n = 0;
    double L = 0.0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&L), sizeof L);
    if (!in || version != 1) throw Error(path + ": unsupported mask blob version");
    const model::Grid grid = model::Grid::make(int(d), L, std::size_t(n));
    std::vector<double> weights(grid.total_points());
    in.read(reinterpret_cast<char*>(weights.data()), std::streamsize(weights.size() * sizeof(double)));
    if (!in) throw Error(path + ": truncated mask blob");
    return SensorMask::from_parts(grid, std::move(weights), {});
}

}  // namespace speclab::sensors
