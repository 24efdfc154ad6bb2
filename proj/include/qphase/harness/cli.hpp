#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../estimator_design.hpp"
#include "../fock_oracle.hpp"
#include "../limits.hpp"
#include "../pll_sim.hpp"
#include "../sensing.hpp"
#include "../version.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "manifest.hpp"

namespace qphase::harness {

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_numerical = 3 };

inline constexpr const char* output_dir_env = "QPHASE_OUTPUT_DIR";

// ---- schemas ---------------------------------------------------------------

namespace keys {

inline KeySpec req(std::string name, ValueType t, std::string doc) { return {std::move(name), t, true, {}, std::move(doc)}; }
inline KeySpec opt(std::string name, ValueType t, std::string doc) { return {std::move(name), t, false, {}, std::move(doc)}; }
inline KeySpec def(std::string name, ValueType t, Value v, std::string doc) {
    return {std::move(name), t, false, std::move(v), std::move(doc)};
}

inline void common(std::vector<KeySpec>& k, const std::string& sub) {
    k.push_back(def("seed", ValueType::Integer, 1LL, "master seed"));
    k.push_back(def("output_dir", ValueType::String, std::string("qphase_out"), "results root; QPHASE_OUTPUT_DIR overrides"));
    k.push_back(def("run_id", ValueType::String, sub, "subdirectory of output_dir and run_id column"));
}

inline void cell(std::vector<KeySpec>& k, bool lists) {
    auto num = lists ? ValueType::RealList : ValueType::Real;
    k.push_back(req("mod", ValueType::String, "pm | fm"));
    k.push_back(def("variant", ValueType::String, std::string("coherent"),
                    "coherent | squeezed_z_feedback | phase_squeezed_no_feedback"));
    k.push_back(def("message", ValueType::String, std::string("flat"), "flat | lorentzian"));
    k.push_back(req("beta", num, "modulation index"));
    k.push_back(opt("lambda", num, "coherent-equivalent Lambda; exclusive with n_photon"));
    k.push_back(opt("n_photon", num, "photons per message correlation time; exclusive with lambda"));
    k.push_back(lists ? def("r", num, std::vector<double>{0.0}, "squeeze parameter")
                      : def("r", num, 0.0, "squeeze parameter"));
    k.push_back(def("bandwidth", ValueType::Real, 1.0, "simulation bandwidth B"));
    k.push_back(def("grid_size", ValueType::Integer, 4096LL, "samples per record, power of two"));
    k.push_back(def("message_bins", ValueType::Integer, 63LL, "flat message: occupied DFT bins"));
    k.push_back(def("band_ratio", ValueType::Real, 256.0, "Lorentzian message: B / b"));
    k.push_back(opt("delay", ValueType::Integer, "post-loop delay in samples; default 8 ceil(B/b)"));
    k.push_back(def("lag", ValueType::Integer, 1LL, "loop latency in samples"));
}

inline void monte_carlo(std::vector<KeySpec>& k) {
    k.push_back(def("trials", ValueType::Integer, 64LL, "trials per cell"));
    k.push_back(def("threads", ValueType::Integer, 0LL, "worker threads, 0 = all cores; never changes results"));
}

} // namespace keys

inline Schema schema_for(const std::string& sub) {
    using namespace keys;
    Schema s{sub, {}};
    auto& k = s.keys;
    if (sub == "design") {
        cell(k, false);
    } else if (sub == "simulate") {
        cell(k, false);
        monte_carlo(k);
        k.push_back(def("linearized", ValueType::Boolean, false, "replace sin(e) by e in the loop"));
        k.push_back(def("phase_offset", ValueType::Real, 0.0, "common carrier phase offset"));
        k.push_back(def("noise_scale", ValueType::Real, 1.0, "vacuum noise multiplier, 0 switches it off"));
        k.push_back(def("trace", ValueType::Boolean, false, "also write the first trial's time series"));
    } else if (sub == "sweep") {
        cell(k, true);
        monte_carlo(k);
    } else if (sub == "limits") {
        k.push_back(req("mod", ValueType::String, "pm | fm"));
        k.push_back(req("beta", ValueType::RealList, "modulation indices"));
        k.push_back(opt("lambda", ValueType::RealList, "Lambda values; exclusive with n_photon"));
        k.push_back(opt("n_photon", ValueType::RealList, "photon numbers; exclusive with lambda"));
        k.push_back(def("r", ValueType::RealList, std::vector<double>{0.0}, "squeeze parameters"));
        k.push_back(def("phase_squeezed", ValueType::Boolean, false, "apply the exp(4r) threshold penalty"));
    } else if (sub == "fock") {
        k.push_back(def("check", ValueType::String, std::string("all"),
                        "povm | pegg_barnett | density | frequency | commutator | all"));
        k.push_back(def("n_max", ValueType::Integer, 5LL, "POVM check cutoff"));
        k.push_back(def("points", ValueType::Integer, 64LL, "POVM phase grid points"));
        k.push_back(def("s", ValueType::Integer, 3LL, "Pegg-Barnett cutoff"));
        k.push_back(def("phi0", ValueType::Real, 0.0, "Pegg-Barnett reference phase"));
        k.push_back(def("alpha_re", ValueType::Real, 1.0, "coherent amplitude for the density, real part"));
        k.push_back(def("alpha_im", ValueType::Real, 0.0, "coherent amplitude for the density, imaginary part"));
        k.push_back(def("density_points", ValueType::Integer, 512LL, "phase grid for the density"));
        k.push_back(def("modes", ValueType::Integer, 2LL, "frequency operator modes"));
        k.push_back(def("dt", ValueType::Real, 1.0, "frequency operator sample spacing"));
        k.push_back(def("sites", ValueType::Integer, 2LL, "commutator chain length"));
        k.push_back(def("bosons", ValueType::Integer, 2LL, "commutator boson number"));
    } else if (sub == "sense") {
        k.push_back(def("kind", ValueType::String, std::string("multipass"), "multipass | fabry_perot"));
        k.push_back(req("quantity", ValueType::String, "position | velocity"));
        k.push_back(def("passes", ValueType::Integer, 1LL, "multipass M"));
        k.push_back(def("reflectivity", ValueType::Real, 0.0, "Fabry-Perot mirror R"));
        k.push_back(def("theta", ValueType::Real, 0.0, "incidence angle, rad"));
        k.push_back(def("wavelength", ValueType::Real, 1550e-9, "carrier wavelength, m"));
        k.push_back(opt("rms_position", ValueType::Real, "RMS target position, m"));
        k.push_back(opt("rms_velocity", ValueType::Real, "RMS target velocity, m/s"));
        k.push_back(req("message_bw", ValueType::Real, "message bandwidth b, Hz"));
        k.push_back(def("cavity_length", ValueType::Real, 0.0, "path or cavity length, m"));
        k.push_back(req("n_photon", ValueType::Real, "photons per 1/b"));
        k.push_back(def("r", ValueType::Real, 0.0, "squeeze parameter"));
    } else {
        throw ConfigError("unknown subcommand '" + sub + "'");
    }
    keys::common(k, sub);
    return s;
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"design", "simulate", "sweep", "limits", "fock", "sense"};
    return names;
}

// ---- config helpers --------------------------------------------------------

inline ModKind parse_mod(const std::string& s) {
    if (s == "pm") return ModKind::PM;
    if (s == "fm") return ModKind::FM;
    throw ConfigError("mod must be pm or fm, got '" + s + "'");
}

inline MessageKind parse_message(const std::string& s) {
    if (s == "flat") return MessageKind::FlatBand;
    if (s == "lorentzian") return MessageKind::Lorentzian;
    throw ConfigError("message must be flat or lorentzian, got '" + s + "'");
}

inline Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::Coherent, Variant::SqueezedZFeedback, Variant::PhaseSqueezedNoFeedback})
        if (to_string(v) == s) return v;
    throw ConfigError("unknown variant '" + s + "'");
}

inline std::size_t positive_size(const Config& c, const std::string& key) {
    long long v = c.integer(key);
    if (v < 1) throw ConfigError(key + " must be positive");
    return static_cast<std::size_t>(v);
}

inline void exclusive_budget(const Config& c) {
    bool l = c.has("lambda"), n = c.has("n_photon");
    if (l == n) throw ConfigError(l ? "set only one of lambda and n_photon" : "missing required key: lambda or n_photon");
}

/// Base cell from the scalar keys shared by design, simulate and sweep.
inline CellSpec base_cell(const Config& c) {
    CellSpec s;
    s.mod = parse_mod(c.string("mod"));
    s.variant = parse_variant(c.string("variant"));
    s.message = parse_message(c.string("message"));
    s.bandwidth = c.real("bandwidth");
    s.grid_size = positive_size(c, "grid_size");
    s.message_bins = positive_size(c, "message_bins");
    s.band_ratio = c.real("band_ratio");
    if (c.has("delay")) {
        long long d = c.integer("delay");
        if (d < 0) throw ConfigError("delay must be nonnegative");
        s.delay = static_cast<std::size_t>(d);
    }
    s.lag = positive_size(c, "lag");
    return s;
}

inline CellSpec scalar_cell(const Config& c) {
    exclusive_budget(c);
    CellSpec s = base_cell(c);
    s.beta = c.real("beta");
    if (c.has("lambda")) s.lambda = c.real("lambda");
    else s.n_photon = c.real("n_photon");
    s.r = c.real("r");
    return s;
}

/// Cartesian product beta x (lambda | n_photon) x r, beta slowest.
inline std::vector<CellSpec> sweep_cells(const Config& c) {
    exclusive_budget(c);
    CellSpec base = base_cell(c);
    bool use_lambda = c.has("lambda");
    const auto& budget = c.list(use_lambda ? "lambda" : "n_photon");
    std::vector<CellSpec> out;
    for (double beta : c.list("beta"))
        for (double x : budget)
            for (double r : c.list("r")) {
                CellSpec s = base;
                s.beta = beta;
                if (use_lambda) s.lambda = x;
                else s.n_photon = x;
                s.r = r;
                out.push_back(s);
            }
    return out;
}

inline ResultRow result_row(const std::string& run_id, std::uint64_t seed, const Cell& cell, const CellStats& st) {
    ResultRow r;
    r.run_id = run_id;
    r.seed = seed;
    r.variant = to_string(cell.spec.variant);
    r.mod_kind = to_string(cell.spec.mod);
    r.beta = cell.spec.beta;
    r.lambda = cell.lambda;
    r.n_photon = cell.n_photon;
    r.r = cell.spec.r;
    r.snr_empirical = st.snr;
    r.snr_stderr = st.snr_stderr;
    r.snr_analytic = cell.snr_analytic;
    r.sigma0_sq = cell.sigma0_sq;
    r.sigma0_sq_empirical = st.sigma0_sq_empirical;
    r.cycle_slips = st.cycle_slips;
    r.pass_threshold = cell.pass_threshold;
    return r;
}

// ---- subcommands -----------------------------------------------------------

/// Files produced by a subcommand (relative to the run directory) and an optional failure to report after writing.
struct Outputs {
    Outputs() = default;
    Outputs(std::initializer_list<std::pair<std::string, std::string>> f) : files(f) {}
    std::vector<std::pair<std::string, std::string>> files;
    std::string failure;
};

inline Outputs run_design(const Config& c) {
    std::uint64_t seed = static_cast<std::uint64_t>(c.integer("seed"));
    Cell cell = build_cell(scalar_cell(c), 1, seed);
    const LoopDesign& d = *cell.config.design;
    SpectralDensity sm = effective_message_psd(cell.config.msg, cell.spec.mod);
    PhaseResponse h = phase_response(cell.config.mod, d.grid());

    std::ostringstream dump;
    write_design_dump(dump, d);
    Table t{{"delay", "lag", "two_alpha", "wh_residual", "postloop_anticausal", "lprime_causal", "loop_causal",
             "tracking_variance", "sigma0_sq", "snr_analytic", "lambda", "n_photon"},
            {}};
    t.add({std::to_string(d.delay), std::to_string(d.lag), sci(d.two_alpha), sci(d.wh_residual),
           sci(d.postloop_anticausal), d.Lprime.causal ? "true" : "false", d.L.causal ? "true" : "false",
           sci(predicted_tracking_variance(d, sm, h)), sci(cell.sigma0_sq), sci(cell.snr_analytic), sci(cell.lambda),
           sci(cell.n_photon)});
    return {{"design.csv", dump.str()}, {"design_summary.csv", t.str()}};
}

inline Outputs run_simulate(const Config& c) {
    std::uint64_t seed = static_cast<std::uint64_t>(c.integer("seed"));
    long long trials = c.integer("trials");
    if (trials < 2) throw ConfigError("trials must be at least 2");
    Cell cell = build_cell(scalar_cell(c), static_cast<int>(trials), seed);
    cell.config.threads = static_cast<unsigned>(std::max(0LL, c.integer("threads")));
    cell.config.linearized = c.boolean("linearized");
    cell.config.phase_offset = c.real("phase_offset");
    cell.config.noise_scale = c.real("noise_scale");
    auto rs = run_trials(cell.config, 0);
    CellStats st = aggregate(rs);

    Outputs out;
    out.files.emplace_back("results.csv", results_table({result_row(c.string("run_id"), seed, cell, st)}).str());
    Table per{{"trial", "trial_seed", "mse", "snr_empirical", "sigma0_sq_empirical", "cycle_slips"}, {}};
    for (std::size_t i = 0; i < rs.size(); ++i)
        per.add({std::to_string(i), std::to_string(trial_seed(seed, 0, i)), sci(rs[i].mse), sci(rs[i].snr_empirical),
                 sci(rs[i].sigma0_sq_empirical), std::to_string(rs[i].cycle_slips)});
    out.files.emplace_back("trials.csv", per.str());
    if (c.boolean("trace")) {
        TrialTrace tr = run_trial_trace(cell.config, trial_seed(seed, 0, 0));
        Table tt{{"sample", "message", "phibar", "phiprime", "estimate"}, {}};
        for (std::size_t i = 0; i < tr.phibar.size(); ++i)
            tt.add({std::to_string(i), sci(tr.message[i]), sci(tr.phibar[i]), sci(tr.phiprime[i]), sci(tr.estimate[i])});
        out.files.emplace_back("trace.csv", tt.str());
    }
    return out;
}

inline Outputs run_sweep(const Config& c) {
    std::uint64_t seed = static_cast<std::uint64_t>(c.integer("seed"));
    long long trials = c.integer("trials");
    if (trials < 2) throw ConfigError("trials must be at least 2");
    auto grid = sweep_cells(c);
    auto results = monte_carlo_sweep(grid, static_cast<int>(trials), seed,
                                     static_cast<unsigned>(std::max(0LL, c.integer("threads"))));
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < results.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "-%03zu", i);
        rows.push_back(result_row(c.string("run_id") + id, seed, results[i].cell, results[i].stats));
    }
    return {{"results.csv", results_table(rows).str()}};
}

inline Outputs run_limits(const Config& c) {
    bool use_lambda = c.has("lambda");
    if (use_lambda == c.has("n_photon"))
        throw ConfigError(use_lambda ? "set only one of lambda and n_photon" : "missing required key: lambda or n_photon");
    ModKind mod = parse_mod(c.string("mod"));
    bool ps = c.boolean("phase_squeezed");
    Table t{{"mod_kind", "beta", "lambda", "n_photon", "r", "sigma_sq", "snr", "sigma0_sq", "threshold_lhs",
             "pass_threshold", "snr_sql", "snr_heisenberg"},
            {}};
    for (double beta : c.list("beta"))
        for (double x : c.list(use_lambda ? "lambda" : "n_photon"))
            for (double r : c.list("r")) {
                double lambda, n;
                if (use_lambda) {
                    lambda = x;
                    double s = std::sinh(r);
                    n = x * std::exp(-2.0 * r) / 4.0 + s * s;
                } else {
                    n = x;
                    lambda = lambda_from_budget(n, r);
                }
                LimitQuery q{mod, beta, lambda, n, r, MessageKind::FlatBand, ps};
                SnrResult s = closed_form_snr(q);
                ThresholdResult th = threshold_check(q);
                bool have_n = n > 0.0;
                t.add({to_string(mod), sci(beta), sci(lambda), sci(n), sci(r), sci(s.sigma_sq), sci(s.snr),
                       sci(sigma0(q)), sci(th.lhs), th.pass ? "true" : "false",
                       have_n ? sci(quantum_limit_snr(QuantumLimit::SQL, n, beta, mod)) : "nan",
                       have_n ? sci(quantum_limit_snr(QuantumLimit::Heisenberg, n, beta, mod)) : "nan"});
            }
    return {{"limits.csv", t.str()}};
}

inline Outputs run_fock(const Config& c) {
    const std::string check = c.string("check");
    const std::vector<std::string> known{"povm", "pegg_barnett", "density", "frequency", "commutator", "all"};
    if (std::find(known.begin(), known.end(), check) == known.end())
        throw ConfigError("unknown fock check '" + check + "'");
    auto want = [&](const char* name) { return check == "all" || check == name; };
    auto as_int = [&](const char* key) { return static_cast<int>(c.integer(key)); };

    Table t{{"check", "quantity", "value", "tolerance", "pass"}, {}};
    bool ok = true;
    auto row = [&](const std::string& name, const std::string& quantity, double value, double tol) {
        bool pass = value <= tol;
        ok = ok && pass;
        t.add({name, quantity, sci(value), sci(tol), pass ? "true" : "false"});
    };
    Outputs out;

    if (want("povm")) {
        int n = as_int("n_max");
        if (n < 0) throw ConfigError("n_max must be nonnegative");
        row("povm", "resolution_residual", fock::povm_resolution_check(n, positive_size(c, "points")), 1e-10);
    }
    if (want("pegg_barnett")) {
        auto u = fock::pegg_barnett_unitary(as_int("s"), c.real("phi0"));
        Eigen::Index d = u.matrix.rows();
        row("pegg_barnett", "unitarity_residual",
            fock::max_abs(u.matrix.adjoint() * u.matrix - fock::Matrix::Identity(d, d)), 1e-12);
        row("pegg_barnett", "commutator_residual", fock::pegg_barnett_commutator_residual(as_int("s"), c.real("phi0")),
            1e-12);
    }
    if (want("density")) {
        cplx alpha(c.real("alpha_re"), c.real("alpha_im"));
        auto st = fock::coherent_coeffs(alpha, fock::coherent_cutoff(std::abs(alpha)));
        auto dens = fock::canonical_phase_density(st, positive_size(c, "density_points"));
        row("density", "normalization_error", std::abs(dens.integral() - 1.0), 1e-10);
        Table dt{{"phi", "density"}, {}};
        for (std::size_t m = 0; m < dens.points; ++m) dt.add({sci(fock::phase_point(m, dens.points)), sci(dens.values[m])});
        out.files.emplace_back("phase_density.csv", dt.str());
    }
    if (want("frequency")) {
        auto f = fock::instantaneous_frequency_operator(as_int("modes"), as_int("s"), c.real("dt"));
        double worst = 0.0;
        for (const auto& op : f) worst = std::max(worst, fock::max_abs(op.matrix - op.matrix.adjoint()));
        row("frequency", "hermiticity_residual", worst, 1e-12);
    }
    if (want("commutator")) {
        auto cc = fock::fluid_velocity_commutator_check(as_int("sites"), as_int("bosons"));
        row("commutator", "residual_over_bound", cc.residual, cc.bound);
        row("commutator", "subspace_residual", cc.subspace_residual, 1e-12);
    }
    out.files.insert(out.files.begin(), {"fock_checks.csv", t.str()});
    if (!ok) out.failure = "fock oracle check failed; see fock_checks.csv";
    return out;
}

inline Outputs run_sense(const Config& c) {
    SensorConfig s;
    const std::string kind = c.string("kind");
    if (kind == "multipass") s.kind = SensorKind::Multipass;
    else if (kind == "fabry_perot") s.kind = SensorKind::FabryPerot;
    else throw ConfigError("kind must be multipass or fabry_perot, got '" + kind + "'");
    const std::string quantity = c.string("quantity");
    SensedQuantity q;
    if (quantity == "position") q = SensedQuantity::Position;
    else if (quantity == "velocity") q = SensedQuantity::Velocity;
    else throw ConfigError("quantity must be position or velocity, got '" + quantity + "'");
    const char* rms_key = q == SensedQuantity::Position ? "rms_position" : "rms_velocity";
    if (!c.has(rms_key)) throw ConfigError(std::string("missing required key: ") + rms_key);

    s.passes = static_cast<double>(c.integer("passes"));
    s.reflectivity = c.real("reflectivity");
    s.theta = c.real("theta");
    s.wavelength = c.real("wavelength");
    if (c.has("rms_position")) s.rms_position = c.real("rms_position");
    if (c.has("rms_velocity")) s.rms_velocity = c.real("rms_velocity");
    s.message_bw = c.real("message_bw");
    s.cavity_length = c.real("cavity_length");

    SenseResult r = sense_to_limits(s, q, c.real("n_photon"), c.real("r"));
    Table t{{"kind", "quantity", "passes", "beta", "deviation", "narrowband_ok", "interrogation_lhs",
             "interrogation_budget", "interrogation_pass", "mod_kind", "lambda", "n_photon", "r", "sigma_sq", "snr"},
            {}};
    t.add({kind, quantity, sci(r.passes), sci(r.beta), sci(r.deviation), r.narrowband_ok ? "true" : "false",
           sci(r.interrogation.lhs), sci(r.interrogation.budget), r.interrogation.pass ? "true" : "false",
           to_string(r.mod), sci(r.query.lambda), sci(r.query.n_photon), sci(r.query.r), sci(r.snr.sigma_sq),
           sci(r.snr.snr)});
    return {{"sense.csv", t.str()}};
}

inline Outputs dispatch(const std::string& sub, const Config& c) {
    if (sub == "design") return run_design(c);
    if (sub == "simulate") return run_simulate(c);
    if (sub == "sweep") return run_sweep(c);
    if (sub == "limits") return run_limits(c);
    if (sub == "fock") return run_fock(c);
    if (sub == "sense") return run_sense(c);
    throw ConfigError("unknown subcommand '" + sub + "'");
}

/// Resolves the config, applies the output-directory override, runs, and writes results plus manifest.
inline std::filesystem::path execute(const std::string& sub, const std::string& config_path) {
    Schema schema = schema_for(sub);
    Config cfg = load_config(schema, config_path);
    auto values = cfg.values();
    if (const char* env = std::getenv(output_dir_env); env && *env) values["output_dir"] = std::string(env);
    cfg = Config(cfg.schema(), std::move(values));
    if (cfg.integer("seed") < 0) throw ConfigError("seed must be nonnegative");

    std::filesystem::path dir = std::filesystem::path(cfg.string("output_dir")) / cfg.string("run_id");
    RunManifest m;
    m.subcommand = sub;
    m.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    m.config = cfg;
    m.started = utc_timestamp(std::chrono::system_clock::now());

    Outputs outputs;
    try {
        outputs = dispatch(sub, cfg);
    } catch (const NumericalError&) {
        m.finished = utc_timestamp(std::chrono::system_clock::now());
        m.write(dir / "manifest.json");
        throw;
    }
    for (const auto& [name, text] : outputs.files) {
        write_text(dir / name, text);
        m.outputs.push_back(name);
    }
    m.finished = utc_timestamp(std::chrono::system_clock::now());
    m.write(dir / "manifest.json");
    if (!outputs.failure.empty()) throw NumericalError(outputs.failure);
    return dir;
}

inline std::string schema_help(const Schema& s) {
    std::ostringstream os;
    for (const auto& k : s.keys) {
        os << "  " << k.name << " (" << to_string(k.type) << ")";
        if (k.required) os << " required";
        else if (k.fallback) os << " default " << format_value(*k.fallback);
        else os << " optional";
        os << ": " << k.doc << "\n";
    }
    return os.str();
}

inline int cli_main(int argc, char** argv) {
    CLI::App app{"qphase: quantum-limited phase and frequency estimation toolkit"};
    app.set_version_flag("--version", std::string(qphase::version));
    app.require_subcommand(1);
    std::string config_path;
    bool show_keys = false;
    for (const auto& name : subcommands()) {
        auto* sc = app.add_subcommand(name, "run the " + name + " workflow");
        sc->add_option("config", config_path, "configuration file");
        sc->add_flag("--keys", show_keys, "list configuration keys and exit");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (show_keys) {
            std::cout << sub << " keys:\n" << schema_help(schema_for(sub));
            return exit_ok;
        }
        if (config_path.empty()) throw ConfigError("missing configuration file argument");
        auto dir = execute(sub, config_path);
        std::cout << "wrote " << dir.string() << "\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "qphase " << sub << ": configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "qphase " << sub << ": numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "qphase " << sub << ": " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace qphase::harness
