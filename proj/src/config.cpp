#include "fluxonium/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fluxonium {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& path,
                       const std::string& what) {
    throw ConfigError(source + ": " + (path.empty() ? "<root>" : path) + ": " + what);
}

// Strict object reader: every consumed key is dispatched through one of the
// typed getters; leftover keys (except '_'-prefixed annotations) are errors
// reported with their full path.
class Section {
public:
    Section(const json& node, std::string path, const std::string& source)
        : node_(node), path_(std::move(path)), source_(source) {
        if (!node_.is_object()) fail(source_, path_, "expected a JSON object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    void number(const std::string& key, double& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        if (!v.is_number()) fail(source_, join(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) fail(source_, join(key), "value must be finite");
    }

    void integer(const std::string& key, int& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) fail(source_, join(key), "expected an integer");
        const auto wide = v.get<int64_t>();
        if (wide < INT32_MIN || wide > INT32_MAX) {
            fail(source_, join(key), "integer out of range");
        }
        out = static_cast<int>(wide);
    }

    void unsigned64(const std::string& key, uint64_t& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        const bool negative = v.is_number_integer() && !v.is_number_unsigned() &&
                              v.get<int64_t>() < 0;
        if (!(v.is_number_integer() || v.is_number_unsigned()) || negative) {
            fail(source_, join(key), "expected a nonnegative integer");
        }
        out = v.get<uint64_t>();
    }

    void string(const std::string& key, std::string& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        if (!v.is_string()) fail(source_, join(key), "expected a string");
        out = v.get<std::string>();
    }

    void int_array(const std::string& key, std::vector<int>& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        if (!v.is_array()) fail(source_, join(key), "expected an array of integers");
        out.clear();
        for (size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number_integer()) {
                fail(source_, join(key) + "[" + std::to_string(k) + "]",
                     "expected an integer");
            }
            out.push_back(v[k].get<int>());
        }
    }

    void number_array(const std::string& key, std::vector<double>& out) {
        if (!claim(key)) return;
        const json& v = node_.at(key);
        if (!v.is_array()) fail(source_, join(key), "expected an array of numbers");
        out.clear();
        for (size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number()) {
                fail(source_, join(key) + "[" + std::to_string(k) + "]",
                     "expected a number");
            }
            out.push_back(v[k].get<double>());
        }
    }

    void object(const std::string& key,
                const std::function<void(Section&)>& reader) {
        if (!claim(key)) return;
        Section child(node_.at(key), join(key), source_);
        reader(child);
        child.finish();
    }

    // call after all known keys were consumed
    void finish() const {
        for (const auto& item : node_.items()) {
            const std::string& key = item.key();
            if (!key.empty() && key[0] == '_') continue;  // annotation slot
            if (!claimed_.count(key)) {
                fail(source_, join(key), "unknown key");
            }
        }
    }

private:
    bool claim(const std::string& key) {
        if (!node_.contains(key)) return false;
        claimed_.insert(key);
        return true;
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& node_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> claimed_;
};

void read_circuit(Section& s, CircuitParams& out) {
    s.number("e_c_ghz", out.e_c);
    s.number("e_l_ghz", out.e_l);
    s.number("e_j_ghz", out.e_j);
    s.number("flux", out.flux);
    s.integer("basis_dim", out.basis_dim);
}

void read_noise(Section& s, NoiseEnvironment& out) {
    s.number("temperature_k", out.temperature);
    s.number("tan_delta_c", out.tan_delta_c);
    s.number("x_qp", out.x_qp);
    s.number("gap_delta_uev", out.gap_delta);
    s.number("kappa_mhz", out.kappa);
    s.number("chi01_mhz", out.chi01);
    s.number("n_th", out.n_th);
    s.number("g_coupling_mhz", out.g_coupling);
}

void read_protocols(Section& s, ProtocolDefaults& out) {
    s.number("t1_ms", out.t1_ms);
    s.number("t2_ms", out.t2_ms);
    s.number("detuning_hz", out.detuning_hz);
    s.number("spam_contrast", out.spam.contrast);
    s.number("spam_offset", out.spam.offset);
    s.number("noise_sigma", out.noise_sigma);
    s.integer("points", out.points);
    s.number("max_time_us", out.max_time_us);
}

void read_pump(Section& s, PumpDefaults& out) {
    s.number("gamma_01_per_ms", out.rates.gamma_01);
    double p0 = out.rates.p0_th;
    s.number("p0_th", p0);
    out.rates.p0_th = p0;
    out.rates.p1_th = 1.0 - p0;
    s.number("gamma_02_per_ms", out.rates.gamma_02);
    s.number("omega_12_per_us", out.rates.omega_12);
    s.number("max_duration_us", out.max_duration_us);
    s.integer("points", out.points);
    s.number("blind_precision", out.blind_precision);
}

void read_readout(Section& s, ReadoutDefaults& out) {
    s.number("p0_measured", out.p0_measured);
    s.number("p0_infinity", out.p0_infinity);
    s.number("t1_ro_us", out.t1_ro_us);
    s.number("t_ro_us", out.t_ro_us);
    s.number("chi_kappa_ratio", out.chi_kappa_ratio);
    s.integer("shots", out.shots);
    s.integer("bins", out.bins);
    s.number("separation_sigma", out.separation_sigma);
}

void read_rb(Section& s, RBDefaults& out) {
    s.int_array("lengths", out.lengths);
    s.integer("n_random", out.n_random);
    s.object("noise", [&out](Section& n) {
        n.number("depolarizing", out.noise.depolarizing);
        n.number("overrotation", out.noise.overrotation);
        n.number("amplitude_damping", out.noise.amplitude_damping);
        n.number("dephasing", out.noise.dephasing);
    });
    s.object("spam", [&out](Section& n) {
        n.number("prep_fidelity", out.spam.prep_fidelity);
        n.number("meas_scale", out.spam.meas_scale);
        n.number("meas_offset", out.spam.meas_offset);
    });
}

void read_budget(Section& s, BudgetDefaults& out) {
    s.number("t1_measured_ms", out.t1_measured_ms);
    s.number("t1_02_measured_ms", out.t1_02_measured_ms);
    s.number_array("tan_delta_bracket", out.tan_delta_bracket);
    s.number("flux_min", out.flux_min);
    s.number("flux_max", out.flux_max);
    s.integer("flux_points", out.flux_points);
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be positive");
    }
}

}  // namespace

void ProtocolDefaults::validate() const {
    require_positive(t1_ms, "protocols.t1_ms");
    require_positive(t2_ms, "protocols.t2_ms");
    if (!std::isfinite(detuning_hz)) {
        throw std::invalid_argument("protocols.detuning_hz must be finite");
    }
    spam.validate();
    if (noise_sigma < 0.0) {
        throw std::invalid_argument("protocols.noise_sigma must be nonnegative");
    }
    if (points < 4) throw std::invalid_argument("protocols.points must be at least 4");
    require_positive(max_time_us, "protocols.max_time_us");
}

void PumpDefaults::validate() const {
    rates.validate();
    require_positive(max_duration_us, "pump.max_duration_us");
    if (points < 8) throw std::invalid_argument("pump.points must be at least 8");
    require_positive(blind_precision, "pump.blind_precision");
}

void ReadoutDefaults::validate() const {
    if (!(p0_measured > 0.0 && p0_measured < 1.0)) {
        throw std::invalid_argument("readout.p0_measured must be in (0, 1)");
    }
    if (!(p0_infinity >= 0.0 && p0_infinity < 1.0)) {
        throw std::invalid_argument("readout.p0_infinity must be in [0, 1)");
    }
    require_positive(t1_ro_us, "readout.t1_ro_us");
    require_positive(t_ro_us, "readout.t_ro_us");
    if (chi_kappa_ratio < 0.0) {
        throw std::invalid_argument("readout.chi_kappa_ratio must be nonnegative");
    }
    if (shots < 1000) {
        throw std::invalid_argument("readout.shots must be at least 1000");
    }
    if (bins < 3) throw std::invalid_argument("readout.bins must be at least 3");
    require_positive(separation_sigma, "readout.separation_sigma");
}

void RBDefaults::validate() const {
    if (lengths.size() < 2) {
        throw std::invalid_argument("rb.lengths needs at least 2 entries");
    }
    for (size_t k = 0; k < lengths.size(); ++k) {
        if (lengths[k] < 1) {
            throw std::invalid_argument("rb.lengths entries must be positive");
        }
        if (k > 0 && lengths[k] <= lengths[k - 1]) {
            throw std::invalid_argument("rb.lengths must be strictly increasing");
        }
    }
    if (n_random < 2) throw std::invalid_argument("rb.n_random must be at least 2");
    noise.validate();
    spam.validate();
}

void BudgetDefaults::validate() const {
    require_positive(t1_measured_ms, "budget.t1_measured_ms");
    require_positive(t1_02_measured_ms, "budget.t1_02_measured_ms");
    if (tan_delta_bracket.size() != 2 || !(tan_delta_bracket[0] > 0.0) ||
        !(tan_delta_bracket[1] > tan_delta_bracket[0])) {
        throw std::invalid_argument(
            "budget.tan_delta_bracket must be [low, high] with 0 < low < high");
    }
    if (!(flux_min < flux_max)) {
        throw std::invalid_argument("budget.flux_min must be below budget.flux_max");
    }
    if (flux_points < 2) {
        throw std::invalid_argument("budget.flux_points must be at least 2");
    }
}

void DeviceConfig::validate() const {
    circuit.validate();
    noise.validate();
    protocols.validate();
    pump.validate();
    readout.validate();
    rb.validate();
    budget.validate();
    if (levels < 2 || levels > 20) {
        throw std::invalid_argument("levels must be between 2 and 20");
    }
    if (levels >= circuit.basis_dim) {
        throw std::invalid_argument("levels must be far below basis_dim");
    }
}

const char* DeviceConfig::schema_tag() { return "fluxonium-device/1"; }

DeviceConfig parse_device_config(const std::string& json_text,
                                 const std::string& source_name) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source_name + ": JSON parse failure: " + e.what());
    }
    if (!root.is_object()) {
        fail(source_name, "", "config root must be a JSON object");
    }

    DeviceConfig config;
    Section top(root, "", source_name);

    if (!top.has("schema")) fail(source_name, "schema", "missing required key");
    {
        std::string tag;
        top.string("schema", tag);
        if (tag != DeviceConfig::schema_tag()) {
            fail(source_name, "schema",
                 "unsupported schema '" + tag + "', expected '" +
                     std::string(DeviceConfig::schema_tag()) + "'");
        }
    }

    top.unsigned64("seed", config.seed);
    top.integer("levels", config.levels);
    top.object("circuit", [&config](Section& s) { read_circuit(s, config.circuit); });
    top.object("noise", [&config](Section& s) { read_noise(s, config.noise); });
    top.object("protocols",
               [&config](Section& s) { read_protocols(s, config.protocols); });
    top.object("pump", [&config](Section& s) { read_pump(s, config.pump); });
    top.object("readout", [&config](Section& s) { read_readout(s, config.readout); });
    top.object("rb", [&config](Section& s) { read_rb(s, config.rb); });
    top.object("budget", [&config](Section& s) { read_budget(s, config.budget); });
    top.finish();

    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    return config;
}

DeviceConfig load_device_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_device_config(buf.str(), path);
}

std::string device_config_to_json(const DeviceConfig& config) {
    nlohmann::ordered_json j;
    j["schema"] = DeviceConfig::schema_tag();
    j["seed"] = config.seed;
    j["levels"] = config.levels;
    j["circuit"] = {{"e_c_ghz", config.circuit.e_c},
                    {"e_l_ghz", config.circuit.e_l},
                    {"e_j_ghz", config.circuit.e_j},
                    {"flux", config.circuit.flux},
                    {"basis_dim", config.circuit.basis_dim}};
    j["noise"] = {{"temperature_k", config.noise.temperature},
                  {"tan_delta_c", config.noise.tan_delta_c},
                  {"x_qp", config.noise.x_qp},
                  {"gap_delta_uev", config.noise.gap_delta},
                  {"kappa_mhz", config.noise.kappa},
                  {"chi01_mhz", config.noise.chi01},
                  {"n_th", config.noise.n_th},
                  {"g_coupling_mhz", config.noise.g_coupling}};
    j["protocols"] = {{"t1_ms", config.protocols.t1_ms},
                      {"t2_ms", config.protocols.t2_ms},
                      {"detuning_hz", config.protocols.detuning_hz},
                      {"spam_contrast", config.protocols.spam.contrast},
                      {"spam_offset", config.protocols.spam.offset},
                      {"noise_sigma", config.protocols.noise_sigma},
                      {"points", config.protocols.points},
                      {"max_time_us", config.protocols.max_time_us}};
    j["pump"] = {{"gamma_01_per_ms", config.pump.rates.gamma_01},
                 {"p0_th", config.pump.rates.p0_th},
                 {"gamma_02_per_ms", config.pump.rates.gamma_02},
                 {"omega_12_per_us", config.pump.rates.omega_12},
                 {"max_duration_us", config.pump.max_duration_us},
                 {"points", config.pump.points},
                 {"blind_precision", config.pump.blind_precision}};
    j["readout"] = {{"p0_measured", config.readout.p0_measured},
                    {"p0_infinity", config.readout.p0_infinity},
                    {"t1_ro_us", config.readout.t1_ro_us},
                    {"t_ro_us", config.readout.t_ro_us},
                    {"chi_kappa_ratio", config.readout.chi_kappa_ratio},
                    {"shots", config.readout.shots},
                    {"bins", config.readout.bins},
                    {"separation_sigma", config.readout.separation_sigma}};
    j["rb"] = {{"lengths", config.rb.lengths},
               {"n_random", config.rb.n_random},
               {"noise",
                {{"depolarizing", config.rb.noise.depolarizing},
                 {"overrotation", config.rb.noise.overrotation},
                 {"amplitude_damping", config.rb.noise.amplitude_damping},
                 {"dephasing", config.rb.noise.dephasing}}},
               {"spam",
                {{"prep_fidelity", config.rb.spam.prep_fidelity},
                 {"meas_scale", config.rb.spam.meas_scale},
                 {"meas_offset", config.rb.spam.meas_offset}}}};
    j["budget"] = {{"t1_measured_ms", config.budget.t1_measured_ms},
                   {"t1_02_measured_ms", config.budget.t1_02_measured_ms},
                   {"tan_delta_bracket", config.budget.tan_delta_bracket},
                   {"flux_min", config.budget.flux_min},
                   {"flux_max", config.budget.flux_max},
                   {"flux_points", config.budget.flux_points}};
    return j.dump(2) + "\n";
}

}  // namespace fluxonium
