// speclab: experiment runner for spectral-inequality and heat-observability
// measurements of confined Schrodinger operators on truncated grids.
//
// Subcommands map onto the library modules: spectrum, decay, sensors,
// ratio-scan, ghost-check, observability, report. Every run writes its CSVs
// plus a metadata sidecar into <out>/<subcommand>-<confighash>/; bodies are
// byte-stable for a fixed config and seed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "speclab/cache.hpp"
#include "speclab/config.hpp"
#include "speclab/control.hpp"
#include "speclab/csv.hpp"
#include "speclab/decay.hpp"
#include "speclab/ghost.hpp"
#include "speclab/model.hpp"
#include "speclab/rng.hpp"
#include "speclab/sensors.hpp"
#include "speclab/specineq.hpp"
#include "speclab/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace speclab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
    config::ExperimentConfig cfg;
    fs::path dir;
    std::string command;
};

std::string hash8(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h >> 32));
    return buf;
}

RunContext open_run(const std::string& command, const std::string& config_path,
                    const std::string& out_dir, std::optional<std::uint64_t> seed,
                    std::optional<int> jobs) {
    RunContext ctx;
    ctx.cfg = config::load(config_path, seed, jobs);
    ctx.command = command;
    ctx.dir = fs::path(out_dir) / (command + "-" + hash8(ctx.cfg.hash));
    fs::create_directories(ctx.dir);
    return ctx;
}

void write_metadata(const RunContext& ctx) {
    json meta;
    meta["command"] = ctx.command;
    meta["version"] = kVersion;
    meta["config_hash"] = hash8(ctx.cfg.hash) + hash8(ctx.cfg.hash << 32);
    meta["seed"] = ctx.cfg.seed;
    meta["jobs"] = ctx.cfg.jobs;
    const auto now = std::chrono::system_clock::now();
    meta["created_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    meta["config"] = json::parse(ctx.cfg.canonical);
    std::ofstream out(ctx.dir / "metadata.json");
    out << meta.dump(2) << "\n";
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

/// Shared grid/eigensystem construction with an on-disk cache inside the run
/// directory, so re-running a config skips the decomposition.
model::Eigensystem build_system(const RunContext& ctx, const model::PotentialSpec& p,
                                double lambda_max, int dimension) {
    const auto& num = ctx.cfg.numerics;
    double half_width = num.L;
    if (half_width <= 0.0) {
        if (!p.confining())
            throw ValidationError("numerics.L", "free potentials need an explicit half-width");
        half_width = model::localization_halfwidth(lambda_max, p, num.margin);
    }
    std::size_t n = num.n;
    if (n == 0) {
        // direct 2D eigensolves get expensive fast; derived grids stay modest
        // and larger boxes need an explicit numerics.n
        const std::size_t cap = dimension == 1 ? num.n_cap : std::min<std::size_t>(num.n_cap_2d, 128);
        const std::size_t floor_n = dimension == 1 ? num.n_min : std::min<std::size_t>(num.n_min, 96);
        n = std::clamp<std::size_t>(std::size_t(std::ceil(half_width * 100.0)), floor_n, cap);
    }
    const model::Grid grid = model::Grid::make(dimension, half_width, n);

    const fs::path cache_dir = ctx.dir / "cache";
    fs::create_directories(cache_dir);
    const fs::path cache_file = cache_dir / (cache::eigensystem_key(p, grid, lambda_max) + ".bin");
    if (fs::exists(cache_file)) {
        try {
            return cache::load_eigensystem(cache_file.string());
        } catch (const Error&) {
            // recompute on any cache damage
        }
    }
    model::EigOptions opts;
    opts.buffer = num.buffer;
    opts.rel_tol = num.eig_tol;
    opts.seed = ctx.cfg.seed;
    model::Eigensystem sys = eigendecompose(assemble(grid, p), lambda_max, opts);
    cache::save_eigensystem(sys, cache_file.string());
    return sys;
}

sensors::SensorMask build_mask(const RunContext& ctx, const model::Grid& grid) {
    bool full = false;
    const sensors::SensorSpec spec = config::make_sensor(ctx.cfg.sensor, grid.dimension(), &full);
    if (full)
        return sensors::SensorMask::from_parts(grid,
                                               std::vector<double>(grid.total_points(), 1.0), {});
    return sensors::realize(spec, grid);
}

double require_lambda_max(const RunContext& ctx) {
    double lm = ctx.cfg.scan.lambda_max;
    if (lm <= 0.0 && !ctx.cfg.scan.lambdas.empty()) lm = ctx.cfg.scan.lambdas.back();
    if (lm <= 0.0)
        throw ValidationError("scan.lambda_max", "a positive spectral threshold is required");
    return lm;
}

// ---------------------------------------------------------------- spectrum

int run_spectrum(const RunContext& ctx) {
    const model::PotentialSpec p = config::make_potential(ctx.cfg.potential);
    const double lambda_max = require_lambda_max(ctx);
    const model::Eigensystem sys = build_system(ctx, p, lambda_max, ctx.cfg.potential.dimension);

    const bool harmonic = ctx.cfg.potential.kind == "power" && ctx.cfg.potential.tau == 2.0 &&
                          ctx.cfg.potential.dimension == 1;
    auto out = open_csv(ctx.dir / "spectrum.csv");
    io::CsvWriter csv(out);
    csv.row({"k", "lambda", "analytic", "rel_err"});
    for (std::size_t k = 0; k < sys.size(); ++k) {
        std::string analytic, rel;
        if (harmonic) {
            const double exact = 2.0 * double(k) + 1.0;
            analytic = io::fmt(exact);
            rel = io::fmt(std::abs(sys.value(k) - exact) / exact);
        }
        csv.row({io::fmt_int(long(k)), io::fmt(sys.value(k)), analytic, rel});
    }

    json rep;
    rep["count"] = sys.size();
    rep["lambda_max"] = sys.lambda_max();
    rep["max_residual"] = sys.max_residual();
    const double scale =
        sys.grid().dimension() == 1
            ? assemble(sys.grid(), p).tridiag().norm_bound()
            : 8.0 / (sys.grid().spacing() * sys.grid().spacing());
    rep["residual_within_tol"] = sys.max_residual() <= ctx.cfg.numerics.tol * scale;
    rep["grid"] = {{"dimension", sys.grid().dimension()},
                   {"half_width", sys.grid().half_width()},
                   {"points_per_axis", sys.grid().points_per_axis()}};
    write_json(ctx.dir / "spectrum_report.json", rep);
    return 0;
}

// ------------------------------------------------------------------- decay

int run_decay(const RunContext& ctx) {
    const model::PotentialSpec p = config::make_potential(ctx.cfg.potential);
    const double lambda_max = require_lambda_max(ctx);
    const model::Eigensystem sys = build_system(ctx, p, lambda_max, 1);
    const decay::NuFit fit = decay::fit_weight_rate(sys.potential(), sys.grid());

    double worst34 = 0.0, worst35 = 0.0;
    {
        auto out = open_csv(ctx.dir / "decay_checks.csv");
        io::CsvWriter csv(out);
        csv.row({"k", "lambda", "ratio34", "radius34", "ratio35", "radius35", "nu", "m_nu",
                 "near_boundary"});
        for (std::size_t k = 0; k < sys.size(); ++k) {
            const decay::WeightedNormReport r34 = decay::check_prop34(sys, k);
            const decay::WeightedNormReport r35 = decay::check_prop35(sys, k, fit);
            worst34 = std::max(worst34, r34.ratio);
            worst35 = std::max(worst35, r35.ratio);
            csv.row({io::fmt_int(long(k)), io::fmt(sys.value(k)), io::fmt(r34.ratio),
                     io::fmt(r34.radius), io::fmt(r35.ratio), io::fmt(r35.radius),
                     io::fmt(r35.nu), io::fmt(r35.m_nu),
                     io::fmt_int(r34.near_boundary || r35.near_boundary)});
        }
    }

    json rep;
    rep["prop34_max_ratio"] = worst34;
    rep["prop35_max_ratio"] = worst35;
    rep["nu"] = fit.nu;
    rep["m_nu"] = fit.m_nu;
    rep["nu_monotone_from_unit_radius"] = fit.monotone;

    if (!ctx.cfg.scan.lambdas.empty()) {
        const decay::LocalizationCurve curve = decay::localization_scan(
            sys, ctx.cfg.scan.lambdas, ctx.cfg.scan.trials, ctx.cfg.seed);
        auto out = open_csv(ctx.dir / "localization.csv");
        io::CsvWriter csv(out);
        csv.row({"lambda", "subspace_dim", "r_star", "fitted_e", "seed"});
        for (const auto& pt : curve.points)
            csv.row({io::fmt(pt.lambda), io::fmt_int(long(pt.dim)), io::fmt(pt.r_star),
                     io::fmt(curve.fitted_exponent), io::fmt_int(long(curve.seed))});
        rep["localization"] = {{"fitted_exponent", curve.fitted_exponent},
                               {"fit_constant", curve.fit_constant},
                               {"effective_constant", curve.effective_constant},
                               {"expected_exponent", 1.0 / p.tau1()},
                               {"skipped", curve.skipped}};
    }
    write_json(ctx.dir / "decay_report.json", rep);
    return 0;
}

// ----------------------------------------------------------------- sensors

int run_sensors(const RunContext& ctx) {
    if (ctx.cfg.numerics.L <= 0.0 || ctx.cfg.numerics.n == 0)
        throw ValidationError("numerics", "sensor runs need explicit L and n");
    const model::Grid grid =
        model::Grid::make(ctx.cfg.potential.dimension, ctx.cfg.numerics.L, ctx.cfg.numerics.n);
    bool full = false;
    const sensors::SensorSpec spec = config::make_sensor(ctx.cfg.sensor, grid.dimension(), &full);
    if (full) throw ValidationError("sensor.variant", "the full mask has no geometry to export");

    const sensors::SensorMask mask = sensors::realize(spec, grid);
    {
        auto out = open_csv(ctx.dir / "sensor_cells.csv");
        sensors::export_cells_csv(mask, out);
    }
    sensors::save_weights(mask, (ctx.dir / "mask.bin").string());
    const sensors::VerifyReport verify = sensors::verify_cells(mask, spec);

    json rep;
    rep["spec"] = spec.describe();
    rep["total_measure"] = sensors::total_measure(mask);
    rep["cells"] = mask.cells().size();
    rep["unresolved_fraction"] = mask.unresolved_fraction();
    rep["verify_failures"] = verify.failures;
    rep["verify_skipped"] = verify.skipped;
    write_json(ctx.dir / "sensors_report.json", rep);
    return 0;
}

// --------------------------------------------------------------- ratio-scan

int run_ratio_scan(const RunContext& ctx) {
    if (ctx.cfg.scan.lambdas.size() < 4)
        throw ValidationError("scan.lambdas", "ratio scans need at least 4 thresholds");
    const model::PotentialSpec p = config::make_potential(ctx.cfg.potential);
    bool full = false;
    const sensors::SensorSpec spec =
        config::make_sensor(ctx.cfg.sensor, ctx.cfg.potential.dimension, &full);
    if (full)
        throw ValidationError("sensor.variant", "ratio scans need a nontrivial sensor set");

    const specineq::GridPolicy policy = config::make_policy(ctx.cfg);
    const specineq::RatioCurve curve = specineq::ratio_scan(p, spec, ctx.cfg.scan.lambdas, policy);
    const specineq::ExponentReport rep = specineq::exponent_report(curve);

    {
        auto out = open_csv(ctx.dir / "ratio_curve.csv");
        io::CsvWriter csv(out);
        csv.row({"lambda", "m", "c", "c_coarse", "richardson_delta", "unresolved_fraction",
                 "s_hat", "thm_equidistributed", "zhu_zhuge", "conjecture", "anisotropic"});
        for (const auto& s : curve.samples)
            csv.row({io::fmt(s.lambda), io::fmt_int(long(s.dim)), io::fmt(s.c),
                     io::fmt(s.c_coarse), io::fmt(s.richardson_delta),
                     io::fmt(s.unresolved_fraction), "", "", "", "", ""});
        csv.row({"", "", "", "", "", "", io::fmt(rep.fit.s_hat),
                 io::fmt(curve.refs.thm_equidistributed), io::fmt(curve.refs.zhu_zhuge),
                 io::fmt(curve.refs.conjecture), io::fmt(curve.refs.anisotropic)});
    }

    json j;
    j["potential"] = curve.potential_desc;
    j["sensor"] = curve.sensor_desc;
    j["alpha"] = curve.alpha;
    j["fit"] = {{"s_hat", rep.fit.s_hat},
                {"a_hat", rep.fit.a_hat},
                {"b_hat", rep.fit.b_hat},
                {"residual", rep.fit.residual},
                {"samples_used", rep.fit.used}};
    j["reference_exponents"] = {{"thm_equidistributed", curve.refs.thm_equidistributed},
                                {"zhu_zhuge", curve.refs.zhu_zhuge},
                                {"conjecture", curve.refs.conjecture},
                                {"anisotropic", curve.refs.anisotropic}};
    j["below_equidistributed_exponent"] = rep.below_equidistributed;
    j["conjecture_gap"] = rep.conjecture_gap;
    j["admissible_alpha"] = rep.admissible;
    j["admissible_limit"] = rep.admissible_limit;
    j["harmonic_condition_alpha_lt_2_3"] = rep.harmonic_condition;
    write_json(ctx.dir / "ratio_report.json", j);
    return 0;
}

// --------------------------------------------------------------- ghost-check

int run_ghost_check(const RunContext& ctx) {
    const model::PotentialSpec p = config::make_potential(ctx.cfg.potential);
    const double lambda_max = require_lambda_max(ctx);
    const model::Grid grid = [&] {
        const auto& num = ctx.cfg.numerics;
        const double L =
            num.L > 0.0 ? num.L : model::localization_halfwidth(lambda_max, p, num.margin);
        const std::size_t n =
            num.n ? num.n
                  : std::clamp<std::size_t>(std::size_t(std::ceil(L * 80.0)), num.n_min, num.n_cap);
        return model::Grid::make(1, L, n);
    }();
    model::EigOptions opts;
    opts.buffer = ctx.cfg.numerics.buffer;
    opts.rel_tol = ctx.cfg.numerics.eig_tol;
    opts.seed = ctx.cfg.seed;
    const model::Hamiltonian ham = assemble(grid, p);
    const model::Eigensystem sys = eigendecompose(ham, lambda_max, opts);

    const model::SpectralSubspace sub = model::subspace(sys, lambda_max);
    const std::size_t m = std::min<std::size_t>(ctx.cfg.scan.subspace_dim, sub.dim);
    model::SpectralSubspace used = sub;
    used.dim = m;

    Rng rng(derive_seed(ctx.cfg.seed, 0x6705ULL));
    std::vector<double> coeff(m);
    double nrm = 0.0;
    for (auto& c : coeff) {
        c = rng.gaussian();
        nrm += c * c;
    }
    for (auto& c : coeff) c /= std::sqrt(nrm);

    json rep;
    {
        const ghost::GhostField field = ghost::extend(used, coeff, 1.0, ctx.cfg.scan.t_points);
        const ghost::IdentityReport ids = ghost::verify_identities(field, ham);
        rep["identities"] = {{"boundary_residual", ids.boundary_residual},
                             {"elliptic_residual", ids.elliptic_residual},
                             {"odd_defect", ids.odd_defect},
                             {"subspace_dim", m}};
        for (const std::string& f : ctx.cfg.output.formats)
            if (f == "blob") ghost::save_field(field, (ctx.dir / "ghost_field.bin").string());
    }

    auto out = open_csv(ctx.dir / "ghost_sandwich.csv");
    io::CsvWriter csv(out);
    csv.row({"rho", "h1_sq", "lower_bound", "log_upper_bound", "lower_slack", "upper_slack"});
    for (double rho : ctx.cfg.scan.rho_values) {
        const ghost::GhostField field = ghost::extend(used, coeff, rho, ctx.cfg.scan.t_points);
        const ghost::SandwichReport s = ghost::h1_sandwich(field, rho, used.threshold);
        csv.row({io::fmt(rho), io::fmt(s.h1_sq), io::fmt(s.lower_bound), io::fmt(s.log_upper),
                 io::fmt(s.lower_slack), io::fmt(s.upper_slack)});
    }

    double c_eff = ctx.cfg.scan.c_eff;
    if (!ctx.cfg.scan.lambdas.empty()) {
        const decay::LocalizationCurve curve = decay::localization_scan(
            sys, ctx.cfg.scan.lambdas, ctx.cfg.scan.trials, ctx.cfg.seed);
        if (curve.effective_constant > 0.0) c_eff = curve.effective_constant;
        rep["c_eff_source"] = "localization_scan";
    } else {
        rep["c_eff_source"] = "config";
    }
    const ghost::GeometryConstants geo = ghost::geometry_constants(
        lambda_max, p, ctx.cfg.sensor.delta, ctx.cfg.sensor.alpha, c_eff, grid.dimension());
    rep["geometry"] = {{"half_width", geo.half_width},
                       {"theta", geo.theta},
                       {"log_theta", geo.log_theta},
                       {"carleman_radius", geo.carleman_radius},
                       {"kappa_proxy", geo.kappa_proxy},
                       {"c_eff", c_eff}};
    write_json(ctx.dir / "ghost_report.json", rep);
    return 0;
}

// ------------------------------------------------------------- observability

int run_observability(const RunContext& ctx) {
    if (ctx.cfg.scan.times.empty())
        throw ValidationError("scan.times", "observability runs need a list of horizons T");
    const model::PotentialSpec p = config::make_potential(ctx.cfg.potential);
    const double lambda_max = require_lambda_max(ctx);
    const double trunc = ctx.cfg.scan.lambda_trunc > 0.0 ? ctx.cfg.scan.lambda_trunc : lambda_max;
    if (trunc > lambda_max)
        throw ValidationError("scan.lambda_trunc", "truncation cannot exceed lambda_max");
    const model::Eigensystem sys = build_system(ctx, p, lambda_max, 1);
    const sensors::SensorMask mask = build_mask(ctx, sys.grid());

    control::BoundConstants constants{ctx.cfg.scan.K, ctx.cfg.scan.C, ctx.cfg.scan.D,
                                      ctx.cfg.sensor.delta, ctx.cfg.sensor.alpha};

    std::vector<double> ts(ctx.cfg.scan.times.begin(), ctx.cfg.scan.times.end());
    std::vector<double> cobs_values;
    json rep;
    {
        auto out = open_csv(ctx.dir / "cobs.csv");
        io::CsvWriter csv(out);
        csv.row({"T", "m", "cobs_num", "cobs_bound", "single_power_bound",
                 "smallest_b_eigenvalue", "large_T_slope"});
        for (double T : ts) {
            const control::CobsEstimate est =
                control::estimate_cobs(sys, mask, T, trunc, constants);
            cobs_values.push_back(est.cobs);
            csv.row({io::fmt(T), io::fmt_int(long(est.dim)), io::fmt(est.cobs),
                     io::fmt(est.closed_form_bound), io::fmt(est.single_power_bound),
                     io::fmt(est.smallest_b_eigenvalue), ""});
        }
        if (ts.size() >= 3) {
            const std::size_t tail = std::max<std::size_t>(3, ts.size() / 2);
            std::vector<double> tx(ts.end() - tail, ts.end());
            std::vector<double> cy(cobs_values.end() - tail, cobs_values.end());
            const double slope = fit_loglog(tx, cy).slope;
            rep["large_T_loglog_slope"] = slope;
            csv.row({"", "", "", "", "", "", io::fmt(slope)});
        }
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < cobs_values.size(); ++i)
        decreasing = decreasing && cobs_values[i] < cobs_values[i - 1];
    rep["strictly_decreasing_in_T"] = decreasing;
    rep["constants_note"] =
        "K, C, D are caller-supplied; the closed-form bound's constants are existential";

    {
        auto out = open_csv(ctx.dir / "truncation.csv");
        io::CsvWriter csv(out);
        csv.row({"lambda_trunc", "m", "cobs_num"});
        const double T0 = ts.front();
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
            const double level = trunc * frac;
            if (model::counting_function(sys, level) == 0) continue;
            const control::CobsEstimate est =
                control::estimate_cobs(sys, mask, T0, level, constants);
            csv.row({io::fmt(level), io::fmt_int(long(est.dim)), io::fmt(est.cobs)});
        }
    }

    {
        const double T0 = ts.front();
        const control::CobsEstimate est = control::estimate_cobs(sys, mask, T0, trunc, constants);
        auto out = open_csv(ctx.dir / "control.csv");
        io::CsvWriter csv(out);
        csv.row({"trial", "initial_norm", "cost", "duality_bound", "final_norm"});
        double worst = 0.0;
        std::vector<double> g(sys.grid().total_points());
        for (std::size_t trial = 0; trial < ctx.cfg.scan.trials; ++trial) {
            Rng rng(derive_seed(ctx.cfg.seed, 7000 + trial));
            std::vector<double> coeff(est.dim);
            for (auto& c : coeff) c = rng.gaussian();
            std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t k = 0; k < coeff.size(); ++k) {
                const auto f = sys.vector(k);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += coeff[k] * f[i];
            }
            const control::ControlResult r = control::min_norm_control(sys, mask, T0, trunc, g);
            worst = std::max(worst, r.cost / (est.cobs * r.initial_norm));
            csv.row({io::fmt_int(long(trial)), io::fmt(r.initial_norm), io::fmt(r.cost),
                     io::fmt(est.cobs * r.initial_norm), io::fmt(r.final_norm)});
        }
        rep["duality_worst_cost_fraction"] = worst;
        rep["T0"] = T0;
        rep["lambda_trunc"] = trunc;
        rep["dim"] = est.dim;
    }
    write_json(ctx.dir / "observability_report.json", rep);
    return 0;
}

// ------------------------------------------------------------------- report

int run_report(const std::string& out_dir) {
    if (!fs::is_directory(out_dir))
        throw ValidationError("out", out_dir + " is not a directory with prior runs");
    json summary;
    summary["version"] = kVersion;
    summary["runs"] = json::array();
    json exponent_table = json::array();
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        if (!entry.is_directory()) continue;
        json run;
        run["directory"] = entry.path().filename().string();
        const fs::path meta = entry.path() / "metadata.json";
        if (fs::exists(meta)) {
            std::ifstream in(meta);
            json m = json::parse(in, nullptr, false);
            if (!m.is_discarded()) {
                run["command"] = m.value("command", "");
                run["config_hash"] = m.value("config_hash", "");
            }
        }
        for (const auto& file : fs::directory_iterator(entry.path())) {
            const std::string name = file.path().filename().string();
            if (name.size() > 12 && name.ends_with("_report.json")) {
                std::ifstream in(file.path());
                json r = json::parse(in, nullptr, false);
                if (r.is_discarded()) continue;
                run[name.substr(0, name.size() - 12)] = r;
                if (name == "ratio_report.json") {
                    json rowj;
                    rowj["directory"] = entry.path().filename().string();
                    rowj["potential"] = r.value("potential", "");
                    rowj["sensor"] = r.value("sensor", "");
                    rowj["s_hat"] = r["fit"].value("s_hat", 0.0);
                    rowj["reference_exponents"] = r["reference_exponents"];
                    rowj["below_equidistributed_exponent"] =
                        r.value("below_equidistributed_exponent", false);
                    exponent_table.push_back(rowj);
                }
            }
        }
        summary["runs"].push_back(run);
    }
    summary["exponent_table"] = exponent_table;
    write_json(fs::path(out_dir) / "report.json", summary);
    std::cout << "report written to " << (fs::path(out_dir) / "report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral inequality and heat observability laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs";
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::uint64_t seed_raw = 0;
    int jobs_raw = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output root directory");
        sub->add_option("--seed", seed_raw, "override the config seed")
            ->each([&](const std::string&) { seed = seed_raw; });
        sub->add_option("--jobs", jobs_raw, "worker threads for scans")
            ->each([&](const std::string&) { jobs = jobs_raw; });
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalues of the discretized operator");
    CLI::App* decay_cmd = app.add_subcommand("decay", "weighted decay checks and localization");
    CLI::App* sensors_cmd = app.add_subcommand("sensors", "realize and export a sensor mask");
    CLI::App* ratio = app.add_subcommand("ratio-scan", "observability ratio c(lambda, omega)");
    CLI::App* ghost_cmd = app.add_subcommand("ghost-check", "ghost extension identities");
    CLI::App* obs = app.add_subcommand("observability", "heat observability constants and control");
    CLI::App* report = app.add_subcommand("report", "aggregate prior runs into one JSON summary");
    for (CLI::App* sub : {spectrum, decay_cmd, sensors_cmd, ratio, ghost_cmd, obs})
        add_common(sub, true);
    add_common(report, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) return run_report(out_dir);
        const std::string command = app.get_subcommands().front()->get_name();
        RunContext ctx = open_run(command, config_path, out_dir, seed, jobs);
        write_metadata(ctx);
        int rc = 1;
        if (spectrum->parsed()) rc = run_spectrum(ctx);
        if (decay_cmd->parsed()) rc = run_decay(ctx);
        if (sensors_cmd->parsed()) rc = run_sensors(ctx);
        if (ratio->parsed()) rc = run_ratio_scan(ctx);
        if (ghost_cmd->parsed()) rc = run_ghost_check(ctx);
        if (obs->parsed()) rc = run_observability(ctx);
        if (rc == 0) std::cout << "artifacts in " << ctx.dir.string() << "\n";
        return rc;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
