#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "speclab/model.hpp"

namespace speclab::sensors {

enum class Placement { Center, Random };
enum class DecayAxes { All, FirstBlock };  // FirstBlock: exponent uses |k_1| only

/// Sensor-set geometry. The per-cell decay exponent is 1 + |k|^alpha, with the
/// convention |k|^alpha = 0 at k = 0 (so the origin cell always gets the
/// undecayed radius delta).
struct SensorSpec {
    enum class Variant { EquidistributedDecay, ThickDecay, BallUnion, Cone };
    Variant variant = Variant::EquidistributedDecay;

    // EquidistributedDecay
    double delta = 0.2;
    double alpha = 0.0;
    Placement placement = Placement::Center;
    DecayAxes decay_axes = DecayAxes::All;

    // ThickDecay
    double rho = 1.0;
    double gamma = 0.5;

    // Cone: |x| >= r0 restricted to rays (d = 1) or a sector (d = 2)
    double r0 = 1.0;
    bool ray_negative = true;
    bool ray_positive = true;
    double axis_angle = 0.0;
    double half_width = 0.5;

    std::uint64_t seed = 0;

    static SensorSpec equidistributed(double delta, double alpha,
                                      Placement placement = Placement::Center,
                                      std::uint64_t seed = 0,
                                      DecayAxes axes = DecayAxes::All);
    static SensorSpec thick(double rho, double gamma, double alpha, std::uint64_t seed);
    static SensorSpec ball_union(double alpha);
    static SensorSpec cone_rays(double r0, bool negative, bool positive);
    static SensorSpec cone_sector(double r0, double axis_angle, double half_width);

    void validate(int dimension) const;  // throws ValidationError naming the field
    std::string describe() const;
};

/// One lattice cell of the realized set: required geometry vs what the grid
/// mask actually carries.
struct CellRecord {
    std::array<int, 2> k{0, 0};
    double radius = 0.0;                 // required ball radius (0 for thick/cone)
    std::array<double, 2> center{0, 0};  // realized ball center
    double target_measure = 0.0;         // required measure of the cell intersection
    double realized_measure = 0.0;       // from mask weights
    bool resolved = true;                // geometry at or above grid resolution
    bool boundary = false;               // cell cut by the box edge; checks skip it
};

/// Per-grid-point weights in [0, 1]: the fraction of each h-cell covered by
/// the sensor set, estimated by 3^d-point subsampling.
class SensorMask {
  public:
    const model::Grid& grid() const { return grid_; }
    std::span<const double> weights() const { return weights_; }
    const std::vector<CellRecord>& cells() const { return cells_; }
    std::size_t unresolved_count() const;
    double unresolved_fraction() const;

    friend SensorMask realize(const SensorSpec& spec, const model::Grid& grid);
    static SensorMask from_parts(model::Grid grid, std::vector<double> weights,
                                 std::vector<CellRecord> cells);

  private:
    model::Grid grid_;
    std::vector<double> weights_;
    std::vector<CellRecord> cells_;
};

/// Realizes the sensor geometry as a weight mask. Cells whose ball falls
/// below one grid spacing are kept but flagged unresolved.
SensorMask realize(const SensorSpec& spec, const model::Grid& grid);

struct CellCheck {
    std::array<int, 2> k{0, 0};
    double required = 0.0;
    double realized = 0.0;
    double slack = 0.0;
    bool pass = true;
    bool skipped = false;  // unresolved or boundary-cut
};

struct VerifyReport {
    std::vector<CellCheck> cells;
    std::size_t failures = 0;
    std::size_t skipped = 0;
    bool all_pass = true;  // over non-skipped cells
};

/// Checks realized measure >= required measure (ball volume resp. thickness
/// target) per cell, up to the subsampling slack.
VerifyReport verify_cells(const SensorMask& mask, const SensorSpec& spec);

/// sum of weights * h^d.
double total_measure(const SensorMask& mask);

/// CSV of (kx, ky, radius, center, target, realized, resolved, boundary).
void export_cells_csv(const SensorMask& mask, std::ostream& out);

/// Versioned little-endian blob of the raw weight grid.
void save_weights(const SensorMask& mask, const std::string& path);
SensorMask load_weights(const std::string& path);

}  // namespace speclab::sensors
