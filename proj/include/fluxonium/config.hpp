#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxonium/benchmarking.hpp"
#include "fluxonium/circuit.hpp"
#include "fluxonium/dissipation.hpp"
#include "fluxonium/protocols.hpp"
#include "fluxonium/pumping.hpp"

namespace fluxonium {

// Configuration problem: unreadable file, malformed JSON, schema violation,
// out-of-range value. Carries the offending location in the message.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProtocolDefaults {
    double t1_ms = 1.20;
    double t2_ms = 1.48;
    double detuning_hz = 1000.0;
    SpamModel spam{};
    double noise_sigma = 0.02;
    int points = 40;
    double max_time_us = 6000.0;

    void validate() const;
};

struct PumpDefaults {
    QutritRates rates{1.0, 0.58, 1.0 - 0.58, 0.5, 1.0};
    double max_duration_us = 6000.0;
    int points = 25;
    double blind_precision = 0.01;

    void validate() const;
};

struct ReadoutDefaults {
    double p0_measured = 0.558;
    double p0_infinity = 0.166;
    double t1_ro_us = 204.0;
    double t_ro_us = 20.0;
    double chi_kappa_ratio = 0.064;
    int shots = 15000;
    int bins = 81;
    double separation_sigma = 4.0;

    void validate() const;
};

struct RBDefaults {
    std::vector<int> lengths{2, 25, 50, 100, 200, 400, 800};
    int n_random = 50;
    NoiseChannel noise = NoiseChannel::make_depolarizing(3.4e-4);
    SpamReadout spam{};

    void validate() const;
};

struct BudgetDefaults {
    double t1_measured_ms = 1.0;
    double t1_02_measured_ms = 1.5;
    std::vector<double> tan_delta_bracket{1.5e-6, 4.5e-6};
    double flux_min = 0.4;
    double flux_max = 0.6;
    int flux_points = 81;

    void validate() const;
};

// Everything a command needs to run: device constants plus per-protocol
// defaults, all overridable from one JSON file.
struct DeviceConfig {
    uint64_t seed = 7181;
    int levels = 6;
    CircuitParams circuit{};
    NoiseEnvironment noise{};
    ProtocolDefaults protocols{};
    PumpDefaults pump{};
    ReadoutDefaults readout{};
    RBDefaults rb{};
    BudgetDefaults budget{};

    void validate() const;

    static const char* schema_tag();  // "fluxonium-device/1"
};

// Strict parse: the schema tag must match, every key must be known, and all
// values range-checked. Keys starting with '_' are annotation slots and are
// ignored wherever they appear. Errors name the offending key path and the
// source (file path or caller-supplied label).
DeviceConfig parse_device_config(const std::string& json_text,
                                 const std::string& source_name);
DeviceConfig load_device_config(const std::string& path);

// Full round-trippable dump, defaults included.
std::string device_config_to_json(const DeviceConfig& config);

}  // namespace fluxonium
