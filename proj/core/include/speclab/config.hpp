#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speclab/model.hpp"
#include "speclab/sensors.hpp"
#include "speclab/specineq.hpp"

namespace speclab::config {

struct PotentialConfig {
    std::string kind = "power";  // power | anisotropic | two_sided | free
    double tau = 2.0;
    int d1 = 1;
    double c1 = 1.0, tau1 = 2.0, c2 = 1.0, tau2 = 2.0;  // two_sided (mean sampler)
    std::optional<double> nu;
    std::optional<double> m_nu;
    int dimension = 1;
};

struct SensorConfig {
    std::string variant = "equidistributed";  // equidistributed|thick|ball_union|cone|full
    double delta = 0.2;
    double alpha = 0.0;
    std::string placement = "center";  // center | random
    std::string decay_axes = "all";    // all | first
    double rho = 1.0;
    double gamma = 0.5;
    double r0 = 1.0;
    std::string rays = "both";  // both | positive | negative
    double axis_angle = 0.0;
    double half_width = 0.5;
    std::uint64_t seed = 0;
};

struct ScanConfig {
    std::vector<double> lambdas;
    double lambda_max = 0.0;
    std::vector<double> times;
    std::size_t trials = 12;
    double lambda_trunc = 0.0;
    double K = 1.0, C = 1.0, D = 1.0;
    std::vector<double> rho_values{0.5, 1.0, 2.0};
    std::size_t t_points = 129;
    std::size_t subspace_dim = 40;
    double c_eff = 2.5;  // fallback when no localization data is available
};

struct NumericsConfig {
    std::size_t n = 0;    // explicit grid resolution (0 = derive)
    double L = 0.0;       // explicit half-width (0 = derive)
    std::size_t n_cap = 4000;
    std::size_t n_cap_2d = 700;
    std::size_t n_min = 301;
    double tol = 1e-10;
    double eig_tol = 1e-12;
    double margin = 2.0;
    double buffer = 0.2;
    double resolve_divisor = 4.0;
    bool richardson = true;
};

struct OutputConfig {
    std::vector<std::string> formats{"csv", "json"};
};

struct ExperimentConfig {
    PotentialConfig potential;
    SensorConfig sensor;
    ScanConfig scan;
    NumericsConfig numerics;
    OutputConfig output;
    std::uint64_t seed = 1;
    int jobs = 1;

    std::string canonical;   // canonical JSON of the effective config
    std::uint64_t hash = 0;  // FNV-1a of `canonical`
};

/// Parses and validates a config file; throws ValidationError naming the
/// offending field. Overrides (from CLI flags) are applied before hashing.
ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed_override = {},
                      std::optional<int> jobs_override = {});
ExperimentConfig parse(const std::string& json_text,
                       std::optional<std::uint64_t> seed_override = {},
                       std::optional<int> jobs_override = {});

model::PotentialSpec make_potential(const PotentialConfig& c);
/// `full_mask` is set when the variant is "full" (no SensorSpec applies).
sensors::SensorSpec make_sensor(const SensorConfig& c, int dimension, bool* full_mask = nullptr);
specineq::GridPolicy make_policy(const ExperimentConfig& c);

}  // namespace speclab::config
