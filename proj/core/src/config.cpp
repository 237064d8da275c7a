#include "speclab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "speclab/rng.hpp"

namespace speclab::config {

using nlohmann::json;

namespace {

ValidationError bad(const std::string& field, const std::string& what) {
    return ValidationError(field, what);
}

/// Misspelled keys fail loudly instead of silently falling back to defaults.
void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw bad(scope.empty() ? it.key() : scope + "." + it.key(), "unknown field");
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, const std::string& scope) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw bad(scope + "." + key, "has the wrong type");
    }
}

std::vector<double> number_list(const json& j, const char* key, const std::string& scope) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const json& arr = j.at(key);
    if (!arr.is_array()) throw bad(scope + "." + key, "must be an array of numbers");
    for (const auto& v : arr) {
        if (!v.is_number()) throw bad(scope + "." + key, "must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

PotentialConfig parse_potential(const json& j) {
    reject_unknown(j, {"kind", "tau", "d1", "c1", "tau1", "c2", "tau2", "nu", "m_nu", "dimension"},
                   "potential");
    PotentialConfig c;
    c.kind = field_or<std::string>(j, "kind", c.kind, "potential");
    if (c.kind != "power" && c.kind != "anisotropic" && c.kind != "two_sided" && c.kind != "free")
        throw bad("potential.kind", "must be one of power, anisotropic, two_sided, free");
    c.tau = field_or(j, "tau", c.tau, "potential");
    c.d1 = field_or(j, "d1", c.d1, "potential");
    c.c1 = field_or(j, "c1", c.c1, "potential");
    c.tau1 = field_or(j, "tau1", c.kind == "two_sided" ? c.tau1 : c.tau, "potential");
    c.c2 = field_or(j, "c2", c.c2, "potential");
    c.tau2 = field_or(j, "tau2", c.kind == "two_sided" ? c.tau2 : c.tau, "potential");
    if (j.contains("nu")) c.nu = field_or(j, "nu", 0.0, "potential");
    if (j.contains("m_nu")) c.m_nu = field_or(j, "m_nu", 0.0, "potential");
    c.dimension = field_or(j, "dimension", c.kind == "anisotropic" ? 2 : 1, "potential");
    if (c.dimension != 1 && c.dimension != 2)
        throw bad("potential.dimension", "must be 1 or 2");
    if (c.kind != "free" && !(c.tau > 0.0)) throw bad("potential.tau", "tau must be positive");
    return c;
}

SensorConfig parse_sensor(const json& j) {
    reject_unknown(j,
                   {"variant", "delta", "alpha", "placement", "decay_axes", "rho", "gamma", "r0",
                    "rays", "axis_angle", "half_width", "seed"},
                   "sensor");
    SensorConfig c;
    c.variant = field_or<std::string>(j, "variant", c.variant, "sensor");
    if (c.variant != "equidistributed" && c.variant != "thick" && c.variant != "ball_union" &&
        c.variant != "cone" && c.variant != "full")
        throw bad("sensor.variant",
                  "must be one of equidistributed, thick, ball_union, cone, full");
    c.delta = field_or(j, "delta", c.delta, "sensor");
    c.alpha = field_or(j, "alpha", c.alpha, "sensor");
    c.placement = field_or<std::string>(j, "placement", c.placement, "sensor");
    if (c.placement != "center" && c.placement != "random")
        throw bad("sensor.placement", "must be center or random");
    c.decay_axes = field_or<std::string>(j, "decay_axes", c.decay_axes, "sensor");
    if (c.decay_axes != "all" && c.decay_axes != "first")
        throw bad("sensor.decay_axes", "must be all or first");
    c.rho = field_or(j, "rho", c.rho, "sensor");
    c.gamma = field_or(j, "gamma", c.gamma, "sensor");
    c.r0 = field_or(j, "r0", c.r0, "sensor");
    c.rays = field_or<std::string>(j, "rays", c.rays, "sensor");
    if (c.rays != "both" && c.rays != "positive" && c.rays != "negative")
        throw bad("sensor.rays", "must be both, positive or negative");
    c.axis_angle = field_or(j, "axis_angle", c.axis_angle, "sensor");
    c.half_width = field_or(j, "half_width", c.half_width, "sensor");
    c.seed = field_or<std::uint64_t>(j, "seed", c.seed, "sensor");
    return c;
}

ScanConfig parse_scan(const json& j) {
    reject_unknown(j,
                   {"lambdas", "lambda_range", "lambda_max", "times", "trials", "lambda_trunc",
                    "K", "C", "D", "rho_values", "t_points", "subspace_dim", "c_eff"},
                   "scan");
    ScanConfig c;
    c.lambdas = number_list(j, "lambdas", "scan");
    if (j.contains("lambda_range")) {
        const json& r = j.at("lambda_range");
        reject_unknown(r, {"from", "to", "step"}, "scan.lambda_range");
        const double from = field_or(r, "from", 0.0, "scan.lambda_range");
        const double to = field_or(r, "to", 0.0, "scan.lambda_range");
        const double step = field_or(r, "step", 0.0, "scan.lambda_range");
        if (!(step > 0.0) || !(to >= from))
            throw bad("scan.lambda_range", "needs from <= to and step > 0");
        for (double v = from; v <= to + 1e-12; v += step) c.lambdas.push_back(v);
    }
    c.lambda_max = field_or(j, "lambda_max", c.lambda_max, "scan");
    c.times = number_list(j, "times", "scan");
    c.trials = field_or<std::size_t>(j, "trials", c.trials, "scan");
    if (c.trials == 0) throw bad("scan.trials", "must be at least 1");
    c.lambda_trunc = field_or(j, "lambda_trunc", c.lambda_trunc, "scan");
    c.K = field_or(j, "K", c.K, "scan");
    c.C = field_or(j, "C", c.C, "scan");
    c.D = field_or(j, "D", c.D, "scan");
    if (j.contains("rho_values")) c.rho_values = number_list(j, "rho_values", "scan");
    c.t_points = field_or<std::size_t>(j, "t_points", c.t_points, "scan");
    c.subspace_dim = field_or<std::size_t>(j, "subspace_dim", c.subspace_dim, "scan");
    c.c_eff = field_or(j, "c_eff", c.c_eff, "scan");
    return c;
}

NumericsConfig parse_numerics(const json& j) {
    reject_unknown(j,
                   {"n", "L", "n_cap", "n_cap_2d", "n_min", "tol", "eig_tol", "margin", "buffer",
                    "resolve_divisor", "richardson"},
                   "numerics");
    NumericsConfig c;
    c.n = field_or<std::size_t>(j, "n", c.n, "numerics");
    c.L = field_or(j, "L", c.L, "numerics");
    c.n_cap = field_or<std::size_t>(j, "n_cap", c.n_cap, "numerics");
    c.n_cap_2d = field_or<std::size_t>(j, "n_cap_2d", c.n_cap_2d, "numerics");
    c.n_min = field_or<std::size_t>(j, "n_min", c.n_min, "numerics");
    c.tol = field_or(j, "tol", c.tol, "numerics");
    c.eig_tol = field_or(j, "eig_tol", c.eig_tol, "numerics");
    c.margin = field_or(j, "margin", c.margin, "numerics");
    c.buffer = field_or(j, "buffer", c.buffer, "numerics");
    c.resolve_divisor = field_or(j, "resolve_divisor", c.resolve_divisor, "numerics");
    c.richardson = field_or(j, "richardson", c.richardson, "numerics");
    if (!(c.margin >= 1.0)) throw bad("numerics.margin", "must be >= 1");
    if (!(c.buffer >= 0.0)) throw bad("numerics.buffer", "must be >= 0");
    if (!(c.tol > 0.0) || !(c.eig_tol > 0.0))
        throw bad("numerics.tol", "tolerances must be positive");
    if (c.n_min < 3) throw bad("numerics.n_min", "must be >= 3");
    return c;
}

json canonical_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["potential"] = {{"kind", c.potential.kind},   {"tau", c.potential.tau},
                      {"d1", c.potential.d1},       {"c1", c.potential.c1},
                      {"tau1", c.potential.tau1},   {"c2", c.potential.c2},
                      {"tau2", c.potential.tau2},   {"dimension", c.potential.dimension}};
    if (c.potential.nu) j["potential"]["nu"] = *c.potential.nu;
    if (c.potential.m_nu) j["potential"]["m_nu"] = *c.potential.m_nu;
    j["sensor"] = {{"variant", c.sensor.variant},
                   {"delta", c.sensor.delta},
                   {"alpha", c.sensor.alpha},
                   {"placement", c.sensor.placement},
                   {"decay_axes", c.sensor.decay_axes},
                   {"rho", c.sensor.rho},
                   {"gamma", c.sensor.gamma},
                   {"r0", c.sensor.r0},
                   {"rays", c.sensor.rays},
                   {"axis_angle", c.sensor.axis_angle},
                   {"half_width", c.sensor.half_width},
                   {"seed", c.sensor.seed}};
    j["scan"] = {{"lambdas", c.scan.lambdas},
                 {"lambda_max", c.scan.lambda_max},
                 {"times", c.scan.times},
                 {"trials", c.scan.trials},
                 {"lambda_trunc", c.scan.lambda_trunc},
                 {"K", c.scan.K},
                 {"C", c.scan.C},
                 {"D", c.scan.D},
                 {"rho_values", c.scan.rho_values},
                 {"t_points", c.scan.t_points},
                 {"subspace_dim", c.scan.subspace_dim},
                 {"c_eff", c.scan.c_eff}};
    j["numerics"] = {{"n", c.numerics.n},
                     {"L", c.numerics.L},
                     {"n_cap", c.numerics.n_cap},
                     {"n_cap_2d", c.numerics.n_cap_2d},
                     {"n_min", c.numerics.n_min},
                     {"tol", c.numerics.tol},
                     {"eig_tol", c.numerics.eig_tol},
                     {"margin", c.numerics.margin},
                     {"buffer", c.numerics.buffer},
                     {"resolve_divisor", c.numerics.resolve_divisor},
                     {"richardson", c.numerics.richardson}};
    j["output"] = {{"formats", c.output.formats}};
    return j;
}

}  // namespace

ExperimentConfig parse(const std::string& json_text, std::optional<std::uint64_t> seed_override,
                       std::optional<int> jobs_override) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError("config", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config", "top level must be a JSON object");
    reject_unknown(j, {"seed", "jobs", "potential", "sensor", "scan", "numerics", "output"}, "");

    ExperimentConfig c;
    if (j.contains("potential")) c.potential = parse_potential(j.at("potential"));
    if (j.contains("sensor")) c.sensor = parse_sensor(j.at("sensor"));
    if (j.contains("scan")) c.scan = parse_scan(j.at("scan"));
    if (j.contains("numerics")) c.numerics = parse_numerics(j.at("numerics"));
    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown(o, {"formats"}, "output");
        if (o.contains("formats")) {
            c.output.formats.clear();
            for (const auto& f : o.at("formats")) c.output.formats.push_back(f.get<std::string>());
        }
    }
    c.seed = field_or<std::uint64_t>(j, "seed", c.seed, "config");
    c.jobs = field_or<int>(j, "jobs", c.jobs, "config");
    if (seed_override) c.seed = *seed_override;
    if (jobs_override) c.jobs = *jobs_override;

    // construction-time validation for the pieces that have their own checks
    make_potential(c.potential);
    bool full = false;
    const sensors::SensorSpec spec = make_sensor(c.sensor, c.potential.dimension, &full);
    if (!full) spec.validate(c.potential.dimension);

    c.canonical = canonical_json(c).dump();
    c.hash = fnv1a(c.canonical);
    return c;
}

ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed_override,
                      std::optional<int> jobs_override) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), seed_override, jobs_override);
}

model::PotentialSpec make_potential(const PotentialConfig& c) {
    if (c.kind == "power") return model::PotentialSpec::power_law(c.tau);
    if (c.kind == "anisotropic") {
        if (c.dimension != 2) throw ValidationError("potential.dimension",
                                                    "anisotropic potentials need dimension 2");
        return model::PotentialSpec::anisotropic(c.tau, c.d1);
    }
    if (c.kind == "free") return model::PotentialSpec::free_potential();
    // two_sided: arithmetic mean of the two bounds; valid whenever the bounds
    // are ordered on the grid (checked at assembly)
    const double c1 = c.c1, tau1 = c.tau1, c2 = c.c2, tau2 = c.tau2;
    auto sampler = [c1, tau1, c2, tau2](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        const double r = std::sqrt(r2);
        return 0.5 * (c1 * std::pow(r, tau1) + c2 * std::pow(r, tau2));
    };
    model::PotentialSpec p = model::PotentialSpec::two_sided(
        c1, tau1, c2, tau2, sampler, c.nu.value_or(0.0), c.m_nu.value_or(0.0), "mean");
    return p;
}

sensors::SensorSpec make_sensor(const SensorConfig& c, int dimension, bool* full_mask) {
    if (full_mask) *full_mask = c.variant == "full";
    if (c.variant == "full") return sensors::SensorSpec{};  // placeholder, unused
    if (c.variant == "equidistributed")
        return sensors::SensorSpec::equidistributed(
            c.delta, c.alpha,
            c.placement == "center" ? sensors::Placement::Center : sensors::Placement::Random,
            c.seed,
            c.decay_axes == "all" ? sensors::DecayAxes::All : sensors::DecayAxes::FirstBlock);
    if (c.variant == "thick") return sensors::SensorSpec::thick(c.rho, c.gamma, c.alpha, c.seed);
    if (c.variant == "ball_union") return sensors::SensorSpec::ball_union(c.alpha);
    if (dimension == 1)
        return sensors::SensorSpec::cone_rays(c.r0, c.rays != "positive", c.rays != "negative");
    return sensors::SensorSpec::cone_sector(c.r0, c.axis_angle, c.half_width);
}

specineq::GridPolicy make_policy(const ExperimentConfig& c) {
    specineq::GridPolicy policy;
    policy.n_cap_1d = c.numerics.n_cap;
    policy.n_cap_2d = c.numerics.n_cap_2d;
    policy.n_min = c.numerics.n_min;
    policy.resolve_divisor = c.numerics.resolve_divisor;
    policy.margin = c.numerics.margin;
    policy.buffer = c.numerics.buffer;
    policy.rel_tol = c.numerics.eig_tol;
    policy.seed = c.seed;
    policy.jobs = c.jobs;
    policy.richardson = c.numerics.richardson;
    return policy;
}

}  // namespace speclab::config
