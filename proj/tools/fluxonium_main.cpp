#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxonium/benchmarking.hpp"
#include "fluxonium/circuit.hpp"
#include "fluxonium/config.hpp"
#include "fluxonium/csv.hpp"
#include "fluxonium/dissipation.hpp"
#include "fluxonium/fitting.hpp"
#include "fluxonium/protocols.hpp"
#include "fluxonium/pumping.hpp"
#include "fluxonium/readout.hpp"
#include "fluxonium/rng.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;
using namespace fluxonium;

namespace {

constexpr const char* kConfigEnvVar = "FLUXONIUM_CONFIG";

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<uint64_t> seed;
    std::optional<double> flux;
    std::string flux_range;  // "A:B:N"
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts, bool with_flux) {
    cmd->add_option("--config", opts.config_path,
                    std::string("device config JSON (default: $") + kConfigEnvVar +
                        ", else built-in constants)");
    cmd->add_option("--out", opts.out_dir, "output directory")
        ->capture_default_str();
    cmd->add_option("--seed", opts.seed, "override the config RNG seed");
    if (with_flux) {
        auto* f = cmd->add_option("--flux", opts.flux, "single external flux value");
        auto* r = cmd->add_option("--flux-range", opts.flux_range,
                                  "flux sweep A:B:N (inclusive endpoints)");
        f->excludes(r);
        r->excludes(f);
    }
}

DeviceConfig resolve_config(const CommonOptions& opts) {
    DeviceConfig config;
    if (!opts.config_path.empty()) {
        config = load_device_config(opts.config_path);
    } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
        config = load_device_config(env);
    }
    if (opts.seed) config.seed = *opts.seed;
    if (opts.flux) config.circuit.flux = *opts.flux;
    return config;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> grid(n);
    for (int k = 0; k < n; ++k) {
        grid[k] = lo + (hi - lo) * static_cast<double>(k) / (n - 1);
    }
    return grid;
}

// flux points requested on the command line, else the fallback single point
std::vector<double> flux_grid_from(const CommonOptions& opts, double fallback) {
    if (!opts.flux_range.empty()) {
        double lo = 0.0, hi = 0.0;
        int n = 0;
        char tail = 0;
        if (std::sscanf(opts.flux_range.c_str(), "%lf:%lf:%d%c", &lo, &hi, &n,
                        &tail) != 3 ||
            n < 2 || !(lo < hi)) {
            throw std::invalid_argument(
                "--flux-range expects A:B:N with A < B and N >= 2, got '" +
                opts.flux_range + "'");
        }
        return linspace(lo, hi, n);
    }
    if (opts.flux) return {*opts.flux};
    return {fallback};
}

fs::path prepare_out_dir(const CommonOptions& opts) {
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json_file(const fs::path& path, const njson& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string fmt(double v) { return csv::format_double(v); }

njson decay_fit_json(const DecayFit& fit) {
    njson j;
    j["model"] = fit.model == DecayModel::Exponential ? "exponential" : "damped_cosine";
    j["amplitude"] = fit.amplitude;
    j["amplitude_err"] = fit.amplitude_err;
    j["offset"] = fit.offset;
    j["offset_err"] = fit.offset_err;
    j["time_constant_us"] = fit.time_constant_us;
    j["time_constant_err_us"] = fit.time_constant_err_us;
    if (fit.model == DecayModel::DampedCosine) {
        j["frequency_hz"] = fit.frequency_hz;
        j["frequency_err_hz"] = fit.frequency_err_hz;
        j["phase_rad"] = fit.phase_rad;
        j["phase_err_rad"] = fit.phase_err_rad;
    }
    j["rms_residual"] = fit.rms_residual;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["span_limited"] = fit.span_limited;
    if (!fit.message.empty()) j["message"] = fit.message;
    return j;
}

std::vector<std::pair<int, int>> all_transitions(int levels) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < levels; ++i) {
        for (int j = i + 1; j < levels; ++j) out.emplace_back(i, j);
    }
    return out;
}

// ---------------------------------------------------------------- spectrum

int run_spectrum(const CommonOptions& opts, int levels_flag) {
    DeviceConfig config = resolve_config(opts);
    const int levels = levels_flag > 0 ? levels_flag : config.levels;
    if (levels < 2) throw std::invalid_argument("--levels must be at least 2");
    const auto grid = flux_grid_from(opts, config.circuit.flux);
    const auto transitions = all_transitions(levels);

    csv::Table table = spectrum_vs_flux(config.circuit, grid, transitions);
    const fs::path dir = prepare_out_dir(opts);
    csv::write_file((dir / "spectrum.csv").string(), table);

    // summary at the flux point nearest the half quantum
    size_t pick = 0;
    for (size_t k = 1; k < grid.size(); ++k) {
        if (std::abs(grid[k] - 0.5) < std::abs(grid[pick] - 0.5)) pick = k;
    }
    std::string line = "spectrum: wrote " + (dir / "spectrum.csv").string() + " (" +
                       std::to_string(grid.size()) + " flux points); flux=" +
                       fmt(grid[pick]);
    for (const char* name : {"f01", "f12", "f03", "f23"}) {
        if (table.has_column(name)) {
            line += std::string(" ") + name + "=" +
                    fmt(table.rows[pick][table.column(name)]) + " GHz";
        }
    }
    std::cout << line << "\n";
    return 0;
}

// ------------------------------------------------------------------ melem

int run_melem(const CommonOptions& opts, int levels_flag) {
    DeviceConfig config = resolve_config(opts);
    const int levels = levels_flag > 0 ? levels_flag : 4;
    if (levels < 2) throw std::invalid_argument("--levels must be at least 2");
    const auto grid = flux_grid_from(opts, config.circuit.flux);
    const auto pairs = all_transitions(levels);

    csv::Table table;
    table.header.push_back("flux");
    for (auto [i, j] : pairs) {
        table.header.push_back("n" + std::to_string(i) + std::to_string(j));
    }
    for (auto [i, j] : pairs) {
        table.header.push_back("hsin" + std::to_string(i) + std::to_string(j));
    }
    for (double flux : grid) {
        CircuitParams p = config.circuit;
        p.flux = flux;
        const EigenSystem eig = solve(p, levels, false);
        std::vector<double> row{flux};
        for (auto [i, j] : pairs) {
            row.push_back(std::abs(matrix_element(eig, OperatorKind::Charge, i, j)));
        }
        for (auto [i, j] : pairs) {
            row.push_back(std::abs(matrix_element(eig, OperatorKind::HalfSin, i, j)));
        }
        table.rows.push_back(std::move(row));
    }

    const fs::path dir = prepare_out_dir(opts);
    csv::write_file((dir / "melem.csv").string(), table);

    size_t pick = 0;
    for (size_t k = 1; k < grid.size(); ++k) {
        if (std::abs(grid[k] - 0.5) < std::abs(grid[pick] - 0.5)) pick = k;
    }
    const auto& row = table.rows[pick];
    std::cout << "melem: wrote " << (dir / "melem.csv").string() << " ("
              << grid.size() << " flux points); flux=" << fmt(grid[pick])
              << " |n01|=" << fmt(row[table.column("n01")])
              << " |n02|=" << fmt(row[table.column("n02")])
              << " |hsin02|=" << fmt(row[table.column("hsin02")]) << "\n";
    return 0;
}

// ----------------------------------------------------------------- budget

struct BudgetRow {
    double flux;
    int transition;  // encoded i*10+j
    std::string channel;
    double rate_per_ms;
};

int run_budget(const CommonOptions& opts) {
    DeviceConfig config = resolve_config(opts);
    const BudgetDefaults& bd = config.budget;
    std::vector<double> grid;
    if (opts.flux || !opts.flux_range.empty()) {
        grid = flux_grid_from(opts, config.circuit.flux);
    } else {
        grid = linspace(bd.flux_min, bd.flux_max, bd.flux_points);
    }

    const double tan_lo = bd.tan_delta_bracket[0];
    const double tan_hi = bd.tan_delta_bracket[1];
    const NoiseEnvironment& env = config.noise;

    std::vector<BudgetRow> rows;
    for (double flux : grid) {
        CircuitParams p = config.circuit;
        p.flux = flux;
        const EigenSystem eig = solve(p, 3, false);
        const double f01 = transition_frequency(eig, 0, 1);
        const double f02 = transition_frequency(eig, 0, 2);
        const double n01 = matrix_element(eig, OperatorKind::Charge, 0, 1);
        const double n02 = matrix_element(eig, OperatorKind::Charge, 0, 2);
        const double phi01 = 0.5 * matrix_element(eig, OperatorKind::Phase, 0, 1);
        const double hs02 = matrix_element(eig, OperatorKind::HalfSin, 0, 2);

        rows.push_back({flux, 1, "dielectric_low",
                        dielectric_rate(p.e_c, n01, f01, env.temperature, tan_lo)});
        rows.push_back({flux, 1, "dielectric_high",
                        dielectric_rate(p.e_c, n01, f01, env.temperature, tan_hi)});
        rows.push_back({flux, 1, "qp_array",
                        qp_array_rate(p.e_l, env.gap_delta, f01, phi01, env.x_qp)});
        rows.push_back({flux, 2, "dielectric_low",
                        dielectric_rate(p.e_c, n02, f02, env.temperature, tan_lo)});
        rows.push_back({flux, 2, "dielectric_high",
                        dielectric_rate(p.e_c, n02, f02, env.temperature, tan_hi)});
        rows.push_back({flux, 2, "qp_junction",
                        qp_junction_rate(p.e_j, env.gap_delta, f02, hs02, env.x_qp)});
    }

    const fs::path dir = prepare_out_dir(opts);
    {
        std::string text = "flux,transition,channel,rate_per_ms,t1_ms\n";
        for (const auto& r : rows) {
            const double t1 = r.rate_per_ms > 0.0
                                  ? 1.0 / r.rate_per_ms
                                  : std::numeric_limits<double>::infinity();
            text += fmt(r.flux) + "," + std::to_string(r.transition) + "," +
                    r.channel + "," + fmt(r.rate_per_ms) + "," + fmt(t1) + "\n";
        }
        write_text_file(dir / "budget.csv", text);
    }

    // inverse bounds at the single summary flux (--flux wins, else config)
    CircuitParams p = config.circuit;
    const EigenSystem eig = solve(p, 3, false);
    const double f01 = transition_frequency(eig, 0, 1);
    const double f02 = transition_frequency(eig, 0, 2);
    const double n01 = matrix_element(eig, OperatorKind::Charge, 0, 1);
    const double phi01 = 0.5 * matrix_element(eig, OperatorKind::Phase, 0, 1);
    const double hs02 = matrix_element(eig, OperatorKind::HalfSin, 0, 2);

    std::vector<RateChannel> ch01;
    ch01.push_back({"dielectric",
                    dielectric_rate(p.e_c, n01, f01, env.temperature, env.tan_delta_c),
                    ChannelKind::Relaxation, 0.0});
    ch01.push_back({"qp_array",
                    qp_array_rate(p.e_l, env.gap_delta, f01, phi01, env.x_qp),
                    ChannelKind::Relaxation,
                    qp_array_rate(p.e_l, env.gap_delta, f01, phi01, 1.0)});
    ch01.push_back({"thermal_photon",
                    thermal_photon_dephasing(env.n_th, env.kappa, env.chi01),
                    ChannelKind::Dephasing, 0.0});
    const RateBudget budget01 = compose_budget(ch01, bd.t1_measured_ms);

    std::vector<RateChannel> ch02;
    ch02.push_back({"qp_junction",
                    qp_junction_rate(p.e_j, env.gap_delta, f02, hs02, env.x_qp),
                    ChannelKind::Relaxation,
                    qp_junction_rate(p.e_j, env.gap_delta, f02, hs02, 1.0)});
    const RateBudget budget02 = compose_budget(ch02, bd.t1_02_measured_ms);

    njson j;
    j["flux"] = p.flux;
    j["f01_ghz"] = f01;
    j["f02_ghz"] = f02;
    njson chans = njson::array();
    for (const auto& c : budget01.channels) {
        chans.push_back({{"name", c.name},
                         {"transition", "01"},
                         {"rate_per_ms", c.rate_per_ms},
                         {"kind", c.kind == ChannelKind::Relaxation ? "relaxation"
                                                                    : "dephasing"}});
    }
    for (const auto& c : budget02.channels) {
        chans.push_back({{"name", c.name},
                         {"transition", "02"},
                         {"rate_per_ms", c.rate_per_ms},
                         {"kind", "relaxation"}});
    }
    j["channels"] = chans;
    j["t1_01_predicted_ms"] =
        budget01.t1_unbounded ? njson(nullptr) : njson(budget01.t1_ms);
    j["t_phi_predicted_ms"] =
        budget01.t_phi_unbounded ? njson(nullptr) : njson(budget01.t_phi_ms);
    j["t2_predicted_ms"] = budget01.t2_ms;
    j["t1_measured_ms"] = bd.t1_measured_ms;
    j["t1_02_measured_ms"] = bd.t1_02_measured_ms;
    njson bounds = njson::array();
    double xqp_array_bound = 0.0, xqp_junction_bound = 0.0;
    for (const auto& b : budget01.xqp_bounds) {
        bounds.push_back({{"channel", b.channel},
                          {"from_t1_ms", bd.t1_measured_ms},
                          {"x_qp_max", b.x_qp_max}});
        if (b.channel == "qp_array") xqp_array_bound = b.x_qp_max;
    }
    for (const auto& b : budget02.xqp_bounds) {
        bounds.push_back({{"channel", b.channel},
                          {"from_t1_ms", bd.t1_02_measured_ms},
                          {"x_qp_max", b.x_qp_max}});
        if (b.channel == "qp_junction") xqp_junction_bound = b.x_qp_max;
    }
    j["x_qp_bounds"] = bounds;
    write_json_file(dir / "budget.json", j);

    std::cout << "budget: wrote " << (dir / "budget.csv").string() << " and "
              << (dir / "budget.json").string() << "; at flux=" << fmt(p.flux)
              << " T1^01 >= " << fmt(bd.t1_measured_ms)
              << " ms implies x_qp <= " << fmt(xqp_array_bound)
              << " (array); T1^02 >= " << fmt(bd.t1_02_measured_ms)
              << " ms implies x_qp <= " << fmt(xqp_junction_bound)
              << " (junction)\n";
    return 0;
}

// ------------------------------------------------------------------- pump

int run_pump(const CommonOptions& opts, double gamma02_flag, double noise_sigma) {
    DeviceConfig config = resolve_config(opts);
    QutritRates rates = config.pump.rates;
    if (gamma02_flag >= 0.0) {
        rates.gamma_02 = gamma02_flag;
    }

    const auto durations = linspace(config.pump.max_duration_us / config.pump.points,
                                    config.pump.max_duration_us, config.pump.points);
    const T102ProtocolResult result = run_t102_protocol(
        rates, durations, noise_sigma, config.seed, config.pump.blind_precision);

    const fs::path dir = prepare_out_dir(opts);
    {
        csv::Table sat;
        sat.header = {"duration_us", "p0"};
        for (size_t k = 0; k < result.durations_us.size(); ++k) {
            sat.rows.push_back({result.durations_us[k], result.p0_measured[k]});
        }
        csv::write_file((dir / "pump_saturation.csv").string(), sat);
    }
    {
        // full population trace over the longest drive for inspection
        const auto t_grid = linspace(0.0, config.pump.max_duration_us, 201);
        const PopulationTrace trace = simulate_qutrit(
            rates, {rates.p0_th, rates.p1_th, 0.0}, t_grid);
        csv::Table tr;
        tr.header = {"t_us", "p0", "p1", "p2"};
        for (size_t k = 0; k < trace.times.size(); ++k) {
            tr.rows.push_back({trace.times[k], trace.p0[k], trace.p1[k], trace.p2[k]});
        }
        csv::write_file((dir / "pump_trace.csv").string(), tr);
    }

    njson j;
    j["rates"] = {{"gamma_01_per_ms", rates.gamma_01},
                  {"p0_th", rates.p0_th},
                  {"gamma_02_per_ms", rates.gamma_02},
                  {"omega_12_per_us", rates.omega_12}};
    j["noise_sigma"] = noise_sigma;
    j["seed"] = config.seed;
    j["saturation_fit"] = decay_fit_json(result.saturation_fit);
    const char* kind = result.estimate.kind == T102Estimate::Kind::Value
                           ? "value"
                           : result.estimate.kind == T102Estimate::Kind::LowerBound
                                 ? "lower_bound"
                                 : "unbounded";
    j["estimate"] = {{"kind", kind},
                     {"t102_ms", result.estimate.t102_ms},
                     {"stderr_ms", result.estimate.stderr_ms}};
    write_json_file(dir / "pump.json", j);

    std::string verdict;
    if (result.estimate.kind == T102Estimate::Kind::Value) {
        verdict = "T1^02 = " + fmt(result.estimate.t102_ms) + " ms (stderr " +
                  fmt(result.estimate.stderr_ms) + " ms)";
    } else if (result.estimate.kind == T102Estimate::Kind::LowerBound) {
        verdict = "T1^02 >= " + fmt(result.estimate.t102_ms) +
                  " ms (inside the protocol's blind window)";
    } else {
        verdict = "T1^02 unbounded (no measurable 2->0 decay)";
    }
    std::cout << "pump: wrote " << (dir / "pump_saturation.csv").string() << ", "
              << (dir / "pump_trace.csv").string() << ", "
              << (dir / "pump.json").string() << "; " << verdict << "\n";
    return 0;
}

// ------------------------------------------------------------- readout-cal

int run_readout_cal(const CommonOptions& opts, const std::string& in_path) {
    DeviceConfig config = resolve_config(opts);
    const ReadoutDefaults& rd = config.readout;
    const fs::path dir = prepare_out_dir(opts);

    std::vector<std::pair<double, double>> shots;
    std::optional<BlobInit> blob_init;
    if (!in_path.empty()) {
        const csv::Table table = csv::read_file(in_path);
        const int ci = table.column("I");
        const int cq = table.column("Q");
        for (const auto& row : table.rows) shots.emplace_back(row[ci], row[cq]);
    } else {
        // blob geometry implied by the configured chi/kappa ratio
        const double sigma = 1.0;
        const double separation = rd.separation_sigma * sigma;
        const double chi = rd.chi_kappa_ratio * config.noise.kappa;
        const double angle = blob_angle_from_shift(chi, config.noise.kappa);
        const double radius = separation / (2.0 * std::sin(angle / 2.0));
        const std::array<double, 2> c0{radius * std::cos(angle / 2.0),
                                       radius * std::sin(angle / 2.0)};
        const std::array<double, 2> c1{radius * std::cos(-angle / 2.0),
                                       radius * std::sin(-angle / 2.0)};
        Rng rng(config.seed);
        shots = simulate_shots(rd.shots, rd.p0_measured, c0, c1, sigma, rng);
        // pin the blob labels to the generating centers; the label of the
        // lower projected coordinate would otherwise depend on the noise
        blob_init = BlobInit{c0, c1};
        csv::Table st;
        st.header = {"I", "Q"};
        for (const auto& s : shots) st.rows.push_back({s.first, s.second});
        csv::write_file((dir / "shots.csv").string(), st);
    }

    const IQHistogram hist = IQHistogram::from_shots(shots, rd.bins);
    const ReadoutFit fit = fit_double_gaussian(hist, blob_init);

    const double chi01 = dispersive_shift_from_angle(fit.blob_angle, config.noise.kappa);
    const double p0_zero = deconvolve_readout_decay(fit.p0, rd.p0_infinity,
                                                    rd.t1_ro_us, rd.t_ro_us);
    const EigenSystem eig = solve(config.circuit, 2, false);
    const double f01 = transition_frequency(eig, 0, 1);
    const double temperature_k = temperature_from_populations(p0_zero, f01);

    njson j;
    j["shots"] = static_cast<int>(shots.size());
    j["fit"] = {{"center0", njson::array({fit.center0[0], fit.center0[1]})},
                {"center1", njson::array({fit.center1[0], fit.center1[1]})},
                {"sigma", fit.sigma},
                {"a0", fit.a0},
                {"a1", fit.a1},
                {"p0", fit.p0},
                {"p1", fit.p1},
                {"blob_angle_rad", fit.blob_angle},
                {"low_population", fit.low_population}};
    j["chi01_mhz"] = chi01;
    j["chi_over_kappa"] = chi01 / config.noise.kappa;
    j["p0_measured"] = fit.p0;
    j["p0_deconvolved"] = p0_zero;
    j["f01_ghz"] = f01;
    j["temperature_mk"] = temperature_k * 1e3;
    write_json_file(dir / "readout.json", j);

    std::cout << "readout-cal: wrote " << (dir / "readout.json").string()
              << "; p0(0)=" << fmt(p0_zero) << " T=" << fmt(temperature_k * 1e3)
              << " mK chi01/2pi=" << fmt(chi01) << " MHz\n";
    return 0;
}

// --------------------------------------------------------------- rb and pb

std::optional<int> resolve_interleaved(const std::string& name) {
    if (name.empty()) return std::nullopt;
    const auto& table = CliffordTable::instance();
    for (int g = 0; g <= static_cast<int>(Gate::Ym2); ++g) {
        if (gate_name(static_cast<Gate>(g)) == name) {
            return table.clifford_of_gate(static_cast<Gate>(g));
        }
    }
    throw std::invalid_argument("unknown gate '" + name +
                                "' (expected one of I, X, -X, Y, -Y, X/2, -X/2, "
                                "Y/2, -Y/2)");
}

csv::Table outcome_table(const RBOutcome& out) {
    csv::Table t;
    t.header = {"m", "mean", "stderr"};
    for (size_t k = 0; k < out.lengths.size(); ++k) {
        t.rows.push_back({static_cast<double>(out.lengths[k]), out.mean[k],
                          out.std_error[k]});
    }
    return t;
}

njson rb_fit_json(const RBFit& fit) {
    return njson{{"a", fit.a},           {"a_err", fit.a_err},
                 {"b", fit.b},           {"b_err", fit.b_err},
                 {"p", fit.p},           {"p_err", fit.p_err},
                 {"r_cliff", fit.r_cliff}, {"r_cliff_err", fit.r_cliff_err},
                 {"avg_fidelity", fit.avg_fidelity}};
}

int run_rb_command(const CommonOptions& opts, const std::string& interleave_name) {
    DeviceConfig config = resolve_config(opts);
    const RBDefaults& rb = config.rb;
    const fs::path dir = prepare_out_dir(opts);

    const RBOutcome reference =
        run_rb(rb.lengths, rb.n_random, rb.noise, rb.spam, config.seed);
    const RBFit ref_fit = fit_rb(reference);
    csv::write_file((dir / "rb_outcome.csv").string(), outcome_table(reference));

    njson j;
    j["seed"] = config.seed;
    j["n_random"] = rb.n_random;
    j["lengths"] = rb.lengths;
    j["noise"] = {{"depolarizing", rb.noise.depolarizing},
                  {"overrotation", rb.noise.overrotation},
                  {"amplitude_damping", rb.noise.amplitude_damping},
                  {"dephasing", rb.noise.dephasing}};
    j["reference"] = rb_fit_json(ref_fit);
    j["avg_gates_per_clifford"] = CliffordTable::instance().average_gate_count();

    std::string extra;
    const std::optional<int> interleaved = resolve_interleaved(interleave_name);
    if (interleaved) {
        const RBOutcome inter = run_rb(rb.lengths, rb.n_random, rb.noise, rb.spam,
                                       config.seed + 1, interleaved);
        const RBFit int_fit = fit_rb(inter);
        csv::write_file((dir / "rb_interleaved.csv").string(), outcome_table(inter));
        const double r_gate = interleaved_error(ref_fit, int_fit);
        j["interleaved"] = rb_fit_json(int_fit);
        j["interleaved_gate"] = interleave_name;
        j["interleaved_clifford"] = *interleaved;
        j["r_gate"] = r_gate;
        extra = "; r_" + interleave_name + " = " + fmt(r_gate);
    }
    write_json_file(dir / "rb_fit.json", j);

    std::cout << "rb: wrote " << (dir / "rb_outcome.csv").string() << " and "
              << (dir / "rb_fit.json").string()
              << "; r_cliff = " << fmt(ref_fit.r_cliff)
              << ", avg gate fidelity = " << fmt(ref_fit.avg_fidelity) << extra
              << "\n";
    return 0;
}

int run_pb_command(const CommonOptions& opts, double shot_noise) {
    DeviceConfig config = resolve_config(opts);
    const RBDefaults& rb = config.rb;
    const fs::path dir = prepare_out_dir(opts);

    const RBOutcome outcome = run_pb(rb.lengths, rb.n_random, rb.noise, rb.spam,
                                     config.seed, shot_noise);
    const PBFit fit = fit_pb(outcome);
    csv::write_file((dir / "pb_outcome.csv").string(), outcome_table(outcome));

    njson j;
    j["seed"] = config.seed;
    j["n_random"] = rb.n_random;
    j["lengths"] = rb.lengths;
    j["shot_noise_sigma"] = shot_noise;
    j["fit"] = {{"a", fit.a},
                {"a_err", fit.a_err},
                {"b", fit.b},
                {"b_err", fit.b_err},
                {"u", fit.u},
                {"u_err", fit.u_err},
                {"r_dec_cliff", fit.r_dec_cliff},
                {"r_dec_cliff_err", fit.r_dec_cliff_err},
                {"r_dec_gate", fit.r_dec_gate}};
    write_json_file(dir / "pb_fit.json", j);

    std::cout << "pb: wrote " << (dir / "pb_outcome.csv").string() << " and "
              << (dir / "pb_fit.json").string() << "; u = " << fmt(fit.u)
              << ", r_dec_cliff = " << fmt(fit.r_dec_cliff) << "\n";
    return 0;
}

// ------------------------------------------------------------- fit-spectro

int run_fit_spectro(const CommonOptions& opts, const std::string& in_path) {
    DeviceConfig config = resolve_config(opts);
    const csv::Table table = csv::read_file(in_path);
    const int cf = table.column("flux");
    const int ct = table.column("transition");
    const int cg = table.column("freq_ghz");

    std::vector<SpectroscopyPoint> data;
    for (const auto& row : table.rows) {
        const auto [i, j] = decode_transition(static_cast<int>(row[ct]));
        data.push_back({row[cf], i, j, row[cg]});
    }

    const FitResult fit = fit_spectroscopy(data, config.circuit);
    if (!fit.converged) {
        throw NumericError("spectroscopy fit did not converge: " + fit.message);
    }

    const fs::path dir = prepare_out_dir(opts);
    njson j;
    j["points"] = static_cast<int>(data.size());
    j["e_c_ghz"] = fit.params[0];
    j["e_l_ghz"] = fit.params[1];
    j["e_j_ghz"] = fit.params[2];
    j["e_c_err_ghz"] = fit.std_errors[0];
    j["e_l_err_ghz"] = fit.std_errors[1];
    j["e_j_err_ghz"] = fit.std_errors[2];
    j["cost"] = fit.cost;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    write_json_file(dir / "spectro_fit.json", j);

    std::cout << "fit-spectro: wrote " << (dir / "spectro_fit.json").string()
              << "; E_C = " << fmt(fit.params[0]) << " GHz, E_L = "
              << fmt(fit.params[1]) << " GHz, E_J = " << fmt(fit.params[2])
              << " GHz\n";
    return 0;
}

// --------------------------------------------------------------- fit-trace

int run_fit_trace(const CommonOptions& opts, const std::string& in_path,
                  const std::string& model_name, int loop_count) {
    DeviceConfig config = resolve_config(opts);
    const fs::path dir = prepare_out_dir(opts);

    if (loop_count > 0) {
        // interleaved T1 / Ramsey batch: one fit pair per iteration
        const ProtocolDefaults& pd = config.protocols;
        const auto grid = linspace(pd.max_time_us / pd.points, pd.max_time_us,
                                   pd.points);
        Rng master(config.seed);
        csv::Table table;
        table.header = {"iteration", "t1_ms",   "t1_err_ms", "t2_ms",
                        "t2_err_ms", "freq_hz", "freq_err_hz"};
        std::vector<double> t1s, t2s, freqs;
        for (int k = 0; k < loop_count; ++k) {
            const uint64_t seed_t1 = master.child(2 * k).next_u64();
            const uint64_t seed_t2 = master.child(2 * k + 1).next_u64();
            const TraceData t1_trace = simulate_t1(pd.t1_ms, pd.spam, grid,
                                                   pd.noise_sigma, seed_t1);
            const DecayFit t1_fit = fit_decay(t1_trace, DecayModel::Exponential);
            const TraceData ramsey = simulate_ramsey(pd.t2_ms,
                                                     pd.detuning_hz * 1e-3, pd.spam,
                                                     grid, pd.noise_sigma, seed_t2);
            const DecayFit t2_fit = fit_decay(ramsey, DecayModel::DampedCosine);
            if (!t1_fit.converged || !t2_fit.converged) {
                throw NumericError("loop iteration " + std::to_string(k) +
                                   " fit did not converge");
            }
            table.rows.push_back({static_cast<double>(k),
                                  t1_fit.time_constant_us * 1e-3,
                                  t1_fit.time_constant_err_us * 1e-3,
                                  t2_fit.time_constant_us * 1e-3,
                                  t2_fit.time_constant_err_us * 1e-3,
                                  t2_fit.frequency_hz, t2_fit.frequency_err_hz});
            t1s.push_back(t1_fit.time_constant_us * 1e-3);
            t2s.push_back(t2_fit.time_constant_us * 1e-3);
            freqs.push_back(t2_fit.frequency_hz);
        }
        csv::write_file((dir / "loop_fits.csv").string(), table);

        auto mean_std = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
            return std::pair<double, double>(mean, std::sqrt(var));
        };
        const auto [t1_mean, t1_std] = mean_std(t1s);
        const auto [t2_mean, t2_std] = mean_std(t2s);
        const auto [f_mean, f_std] = mean_std(freqs);

        njson j;
        j["iterations"] = loop_count;
        j["seed"] = config.seed;
        j["t1_mean_ms"] = t1_mean;
        j["t1_std_ms"] = t1_std;
        j["t2_mean_ms"] = t2_mean;
        j["t2_std_ms"] = t2_std;
        j["detuning_mean_hz"] = f_mean;
        j["detuning_std_hz"] = f_std;
        write_json_file(dir / "loop_summary.json", j);

        std::cout << "fit-trace: wrote " << (dir / "loop_fits.csv").string()
                  << " and " << (dir / "loop_summary.json").string() << "; T1 = "
                  << fmt(t1_mean) << " +- " << fmt(t1_std) << " ms, T2* = "
                  << fmt(t2_mean) << " +- " << fmt(t2_std)
                  << " ms, detuning scatter " << fmt(f_std) << " Hz over "
                  << loop_count << " loops\n";
        return 0;
    }

    DecayModel model;
    if (model_name == "exp") {
        model = DecayModel::Exponential;
    } else if (model_name == "cos") {
        model = DecayModel::DampedCosine;
    } else {
        throw std::invalid_argument("--model must be 'exp' or 'cos', got '" +
                                    model_name + "'");
    }

    const csv::Table table = csv::read_file(in_path);
    const int ct = table.column("t_us");
    const int cs = table.column("signal");
    TraceData trace;
    trace.protocol = model == DecayModel::Exponential ? "t1" : "ramsey";
    for (const auto& row : table.rows) {
        trace.times_us.push_back(row[ct]);
        trace.signal.push_back(row[cs]);
    }

    const DecayFit fit = fit_decay(trace, model);
    write_json_file(dir / "trace_fit.json", decay_fit_json(fit));
    if (!fit.converged) {
        std::cerr << "fit-trace: fit did not converge: " << fit.message << "\n";
        return 3;
    }

    std::string line = "fit-trace: wrote " + (dir / "trace_fit.json").string() +
                       "; tau = " + fmt(fit.time_constant_us) + " us";
    if (model == DecayModel::DampedCosine) {
        line += ", frequency = " + fmt(fit.frequency_hz) + " Hz";
    }
    if (fit.span_limited) {
        line += " (span-limited: trace shorter than the fitted constant)";
    }
    std::cout << line << "\n";
    return 0;
}

// --------------------------------------------------------------- calibrate

int run_calibrate(const CommonOptions& opts, double center, double span, int points,
                  double noise_sigma) {
    DeviceConfig config = resolve_config(opts);
    if (span <= 0.0 || points < 3) {
        throw std::invalid_argument("--span must be positive and --points >= 3");
    }
    const auto grid = linspace(center - span / 2.0, center + span / 2.0, points);
    const PulseCalibration cal = calibrate_pulse_train(grid, config.protocols.spam,
                                                       noise_sigma, config.seed);

    const fs::path dir = prepare_out_dir(opts);
    csv::Table table;
    table.header = {"amplitude", "signal_std"};
    for (size_t k = 0; k < cal.amplitudes.size(); ++k) {
        table.rows.push_back({cal.amplitudes[k], cal.signal_std[k]});
    }
    csv::write_file((dir / "calibrate.csv").string(), table);

    njson j;
    j["optimal_amplitude"] = cal.optimal_amplitude;
    j["optimal_index"] = cal.optimal_index;
    j["bracketed"] = cal.bracketed;
    j["pulse_counts"] = cal.pulse_counts;
    j["seed"] = config.seed;
    write_json_file(dir / "calibrate.json", j);

    std::cout << "calibrate: wrote " << (dir / "calibrate.csv").string() << " and "
              << (dir / "calibrate.json").string() << "; optimal amplitude = "
              << fmt(cal.optimal_amplitude)
              << (cal.bracketed ? "" : " (minimum at grid edge, not bracketed)")
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluxonium device modeling toolkit"};
    app.require_subcommand(1);

    CommonOptions spectrum_opts, melem_opts, budget_opts, pump_opts, readout_opts,
        rb_opts, pb_opts, spectro_opts, trace_opts, calibrate_opts;

    auto* spectrum_cmd =
        app.add_subcommand("spectrum", "transition frequencies vs flux");
    add_common_flags(spectrum_cmd, spectrum_opts, true);
    int spectrum_levels = 0;
    spectrum_cmd->add_option("--levels", spectrum_levels,
                             "number of levels (default: config)");

    auto* melem_cmd =
        app.add_subcommand("melem", "charge and half-sine matrix elements vs flux");
    add_common_flags(melem_cmd, melem_opts, true);
    int melem_levels = 0;
    melem_cmd->add_option("--levels", melem_levels, "number of levels (default: 4)");

    auto* budget_cmd = app.add_subcommand(
        "budget", "decoherence rate budget and quasiparticle bounds");
    add_common_flags(budget_cmd, budget_opts, true);

    auto* pump_cmd =
        app.add_subcommand("pump", "three-level pumping protocol for T1^02");
    add_common_flags(pump_cmd, pump_opts, false);
    double pump_gamma02 = -1.0, pump_noise = 0.0;
    pump_cmd->add_option("--gamma02", pump_gamma02,
                         "injected 2->0 rate in 1/ms (default: config)");
    pump_cmd->add_option("--noise-sigma", pump_noise,
                         "per-point measurement noise on p0")
        ->capture_default_str();

    auto* readout_cmd = app.add_subcommand(
        "readout-cal", "single-shot histogram fit, chi, temperature");
    add_common_flags(readout_cmd, readout_opts, true);
    std::string readout_in;
    readout_cmd->add_option("--in", readout_in,
                            "shot records CSV 'I,Q' (default: simulate from config)");

    auto* rb_cmd = app.add_subcommand("rb", "randomized benchmarking");
    add_common_flags(rb_cmd, rb_opts, false);
    std::string rb_interleave;
    rb_cmd->add_option("--interleave", rb_interleave,
                       "interleaved target gate (X, Y/2, ...)");

    auto* pb_cmd = app.add_subcommand("pb", "purity benchmarking");
    add_common_flags(pb_cmd, pb_opts, false);
    double pb_shot_noise = 0.0;
    pb_cmd->add_option("--shot-noise", pb_shot_noise,
                       "gaussian noise added to each purity point")
        ->capture_default_str();

    auto* spectro_cmd = app.add_subcommand(
        "fit-spectro", "fit (E_C, E_L, E_J) to spectroscopy data");
    add_common_flags(spectro_cmd, spectro_opts, false);
    std::string spectro_in;
    spectro_cmd->add_option("--in", spectro_in, "CSV 'flux,transition,freq_ghz'")
        ->required();

    auto* trace_cmd =
        app.add_subcommand("fit-trace", "fit decay traces or run the T1/T2 loop");
    add_common_flags(trace_cmd, trace_opts, false);
    std::string trace_in, trace_model = "exp";
    int trace_loop = 0;
    auto* in_opt =
        trace_cmd->add_option("--in", trace_in, "trace CSV 't_us,signal'");
    trace_cmd->add_option("--model", trace_model, "decay model: exp | cos")
        ->capture_default_str();
    auto* loop_opt = trace_cmd->add_option(
        "--loop", trace_loop, "simulate and fit N interleaved T1/Ramsey pairs");
    in_opt->excludes(loop_opt);
    loop_opt->excludes(in_opt);

    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "pi/2 pulse-train amplitude calibration");
    add_common_flags(calibrate_cmd, calibrate_opts, false);
    double cal_center = 1.0, cal_span = 0.2, cal_noise = 0.0;
    int cal_points = 21;
    calibrate_cmd->add_option("--center", cal_center, "grid center amplitude")
        ->capture_default_str();
    calibrate_cmd->add_option("--span", cal_span, "grid span")
        ->capture_default_str();
    calibrate_cmd->add_option("--points", cal_points, "grid points")
        ->capture_default_str();
    calibrate_cmd->add_option("--noise-sigma", cal_noise, "per-point signal noise")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (spectrum_cmd->parsed()) return run_spectrum(spectrum_opts, spectrum_levels);
        if (melem_cmd->parsed()) return run_melem(melem_opts, melem_levels);
        if (budget_cmd->parsed()) return run_budget(budget_opts);
        if (pump_cmd->parsed()) return run_pump(pump_opts, pump_gamma02, pump_noise);
        if (readout_cmd->parsed()) return run_readout_cal(readout_opts, readout_in);
        if (rb_cmd->parsed()) return run_rb_command(rb_opts, rb_interleave);
        if (pb_cmd->parsed()) return run_pb_command(pb_opts, pb_shot_noise);
        if (spectro_cmd->parsed()) return run_fit_spectro(spectro_opts, spectro_in);
        if (trace_cmd->parsed()) {
            if (trace_loop <= 0 && trace_in.empty()) {
                std::cerr << "fit-trace: provide --in FILE or --loop N\n";
                return 1;
            }
            return run_fit_trace(trace_opts, trace_in, trace_model, trace_loop);
        }
        if (calibrate_cmd->parsed()) {
            return run_calibrate(calibrate_opts, cal_center, cal_span, cal_points,
                                 cal_noise);
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const csv::CsvError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
