#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "fluxonium/benchmarking.hpp"
#include "fluxonium/circuit.hpp"
#include "fluxonium/config.hpp"
#include "fluxonium/dissipation.hpp"
#include "fluxonium/fitting.hpp"
#include "fluxonium/protocols.hpp"
#include "fluxonium/pumping.hpp"
#include "fluxonium/readout.hpp"
#include "fluxonium/rng.hpp"

namespace py = pybind11;
using namespace fluxonium;

namespace {

std::string format_params(const CircuitParams& p) {
  std::ostringstream out;
  out << "CircuitParams(e_c=" << p.e_c << ", e_l=" << p.e_l << ", e_j=" << p.e_j
      << ", flux=" << p.flux << ", basis_dim=" << p.basis_dim << ")";
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fluxonium qubit modeling toolkit: spectra, dissipation budgets, "
            "qutrit pumping, readout thermometry, benchmarking, and fitting.";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<csv::CsvError>(m, "CsvError", PyExc_ValueError);

  // ---- circuit ----
  py::class_<CircuitParams>(m, "CircuitParams")
      .def(py::init<>())
      .def(py::init([](double e_c, double e_l, double e_j, double flux, int basis_dim) {
             return CircuitParams{e_c, e_l, e_j, flux, basis_dim};
           }),
           py::arg("e_c"), py::arg("e_l"), py::arg("e_j"), py::arg("flux") = 0.5,
           py::arg("basis_dim") = 120)
      .def_readwrite("e_c", &CircuitParams::e_c)
      .def_readwrite("e_l", &CircuitParams::e_l)
      .def_readwrite("e_j", &CircuitParams::e_j)
      .def_readwrite("flux", &CircuitParams::flux)
      .def_readwrite("basis_dim", &CircuitParams::basis_dim)
      .def("__repr__", &format_params);

  py::enum_<OperatorKind>(m, "OperatorKind")
      .value("Charge", OperatorKind::Charge)
      .value("Phase", OperatorKind::Phase)
      .value("HalfSin", OperatorKind::HalfSin)
      .value("HalfCos", OperatorKind::HalfCos);

  py::class_<EigenSystem>(m, "EigenSystem")
      .def_readonly("params", &EigenSystem::params)
      .def_property_readonly("energies",
                             [](const EigenSystem& s) {
                               return std::vector<double>(s.energies.begin(), s.energies.end());
                             })
      .def("transition_frequency",
           [](const EigenSystem& s, int i, int j) { return transition_frequency(s, i, j); },
           py::arg("i"), py::arg("j"))
      .def("matrix_element",
           [](const EigenSystem& s, OperatorKind op, int i, int j) {
             return matrix_element(s, op, i, j);
           },
           py::arg("op"), py::arg("i"), py::arg("j"));

  m.def("solve", &solve, py::arg("params"), py::arg("levels"),
        py::arg("check_convergence") = true,
        "Diagonalize the fluxonium Hamiltonian and keep the lowest levels.");

  // ---- dissipation ----
  py::class_<NoiseEnvironment>(m, "NoiseEnvironment")
      .def(py::init<>())
      .def_readwrite("temperature", &NoiseEnvironment::temperature)
      .def_readwrite("tan_delta_c", &NoiseEnvironment::tan_delta_c)
      .def_readwrite("x_qp", &NoiseEnvironment::x_qp)
      .def_readwrite("gap_delta", &NoiseEnvironment::gap_delta)
      .def_readwrite("kappa", &NoiseEnvironment::kappa)
      .def_readwrite("chi01", &NoiseEnvironment::chi01)
      .def_readwrite("n_th", &NoiseEnvironment::n_th)
      .def_readwrite("g_coupling", &NoiseEnvironment::g_coupling);

  m.def("dielectric_rate", &dielectric_rate, py::arg("e_c"), py::arg("n_elem"),
        py::arg("f_ij"), py::arg("temperature"), py::arg("tan_delta"));
  m.def("qp_junction_rate", &qp_junction_rate, py::arg("e_j"), py::arg("gap_delta"),
        py::arg("f_ij"), py::arg("halfsin_elem"), py::arg("x_qp"));
  m.def("qp_array_rate", &qp_array_rate, py::arg("e_l"), py::arg("gap_delta"),
        py::arg("f01"), py::arg("half_phi_elem"), py::arg("x_qp"));
  m.def("thermal_photon_dephasing", &thermal_photon_dephasing, py::arg("n_th"),
        py::arg("kappa"), py::arg("chi01"));
  m.def("n_th_from_dephasing", &n_th_from_dephasing, py::arg("t_phi_ms"),
        py::arg("kappa"), py::arg("chi01"));
  m.def("x_qp_from_t1", &x_qp_from_t1, py::arg("rate_per_unit_xqp"), py::arg("t1_ms"));
  m.def("thermal_excitation_rate", &thermal_excitation_rate, py::arg("downward_rate"),
        py::arg("f_ij"), py::arg("temperature"));
  m.def("pure_dephasing_time", &pure_dephasing_time, py::arg("t1_ms"), py::arg("t2_ms"));

  py::enum_<ChannelKind>(m, "ChannelKind")
      .value("Relaxation", ChannelKind::Relaxation)
      .value("Dephasing", ChannelKind::Dephasing);

  py::class_<RateChannel>(m, "RateChannel")
      .def(py::init([](std::string name, double rate_per_ms, ChannelKind kind,
                       double rate_per_unit_xqp) {
             return RateChannel{std::move(name), rate_per_ms, kind, rate_per_unit_xqp};
           }),
           py::arg("name"), py::arg("rate_per_ms"),
           py::arg("kind") = ChannelKind::Relaxation,
           py::arg("rate_per_unit_xqp") = 0.0)
      .def_readwrite("name", &RateChannel::name)
      .def_readwrite("rate_per_ms", &RateChannel::rate_per_ms)
      .def_readwrite("kind", &RateChannel::kind)
      .def_readwrite("rate_per_unit_xqp", &RateChannel::rate_per_unit_xqp);

  py::class_<XqpBound>(m, "XqpBound")
      .def_readonly("channel", &XqpBound::channel)
      .def_readonly("x_qp_max", &XqpBound::x_qp_max);

  py::class_<RateBudget>(m, "RateBudget")
      .def_readonly("channels", &RateBudget::channels)
      .def_readonly("t1_ms", &RateBudget::t1_ms)
      .def_readonly("t1_unbounded", &RateBudget::t1_unbounded)
      .def_readonly("t_phi_ms", &RateBudget::t_phi_ms)
      .def_readonly("t_phi_unbounded", &RateBudget::t_phi_unbounded)
      .def_readonly("t2_ms", &RateBudget::t2_ms)
      .def_readonly("xqp_bounds", &RateBudget::xqp_bounds);

  m.def("compose_budget", &compose_budget, py::arg("channels"),
        py::arg("t1_measured_ms") = std::nullopt,
        "Combine rate channels into T1/Tphi/T2 and x_qp upper bounds.");

  // ---- pumping ----
  py::class_<QutritRates>(m, "QutritRates")
      .def(py::init([](double gamma_01, double p0_th, double p1_th, double gamma_02,
                       double omega_12) {
             return QutritRates{gamma_01, p0_th, p1_th, gamma_02, omega_12};
           }),
           py::arg("gamma_01") = 1.0, py::arg("p0_th") = 0.58,
           py::arg("p1_th") = 1.0 - 0.58, py::arg("gamma_02") = 0.5,
           py::arg("omega_12") = 1.0)
      .def_readwrite("gamma_01", &QutritRates::gamma_01)
      .def_readwrite("p0_th", &QutritRates::p0_th)
      .def_readwrite("p1_th", &QutritRates::p1_th)
      .def_readwrite("gamma_02", &QutritRates::gamma_02)
      .def_readwrite("omega_12", &QutritRates::omega_12)
      .def("gamma_down", &QutritRates::gamma_down)
      .def("gamma_up", &QutritRates::gamma_up);

  py::class_<PopulationTrace>(m, "PopulationTrace")
      .def_readonly("times", &PopulationTrace::times)
      .def_readonly("p0", &PopulationTrace::p0)
      .def_readonly("p1", &PopulationTrace::p1)
      .def_readonly("p2", &PopulationTrace::p2);

  m.def("simulate_qutrit", &simulate_qutrit, py::arg("rates"), py::arg("initial"),
        py::arg("t_grid_us"),
        "Integrate the three-level rate equations on the given time grid.");
  m.def("effective_rate", &effective_rate, py::arg("rates"));
  m.def("cooling_saturation_p0", &cooling_saturation_p0, py::arg("p0_th"), py::arg("r"));
  m.def("gamma_02_with_escape", &gamma_02_with_escape, py::arg("gamma_02"),
        py::arg("gamma_23_down"), py::arg("f23_ghz"), py::arg("temperature_k"));

  py::class_<T102Estimate> t102(m, "T102Estimate");
  py::enum_<T102Estimate::Kind>(t102, "Kind")
      .value("Value", T102Estimate::Kind::Value)
      .value("LowerBound", T102Estimate::Kind::LowerBound)
      .value("Unbounded", T102Estimate::Kind::Unbounded);
  t102.def_readonly("kind", &T102Estimate::kind)
      .def_readonly("t102_ms", &T102Estimate::t102_ms)
      .def_readonly("stderr_ms", &T102Estimate::stderr_ms);

  m.def("invert_t102", &invert_t102, py::arg("t_eff_ms"), py::arg("t1_01_ms"),
        py::arg("p0_th"), py::arg("t_eff_stderr_ms") = 0.0);

  py::class_<CoolingAnalysis>(m, "CoolingAnalysis")
      .def_readonly("p0_heat_limit", &CoolingAnalysis::p0_heat_limit)
      .def_readonly("blind_center_r", &CoolingAnalysis::blind_center_r)
      .def_readonly("r_low", &CoolingAnalysis::r_low)
      .def_readonly("r_high", &CoolingAnalysis::r_high)
      .def_readonly("t102_low_ms", &CoolingAnalysis::t102_low_ms)
      .def_readonly("t102_high_ms", &CoolingAnalysis::t102_high_ms)
      .def_readonly("curve", &CoolingAnalysis::curve);

  m.def("cooling_analysis", &cooling_analysis, py::arg("t1_01_ms"), py::arg("p0_th"),
        py::arg("precision"));

  // ---- readout ----
  m.def("temperature_from_populations", &temperature_from_populations, py::arg("p0"),
        py::arg("f01_ghz"));
  m.def("populations_from_temperature", &populations_from_temperature,
        py::arg("temperature_k"), py::arg("f01_ghz"));
  m.def("deconvolve_readout_decay", &deconvolve_readout_decay, py::arg("p0_measured"),
        py::arg("p0_infinity"), py::arg("t1_ro_us"), py::arg("t_ro_us"));
  m.def("average_during_readout", &average_during_readout, py::arg("p0_initial"),
        py::arg("p0_infinity"), py::arg("t1_ro_us"), py::arg("t_ro_us"));
  m.def("dispersive_shift_from_angle", &dispersive_shift_from_angle, py::arg("angle_rad"),
        py::arg("kappa_mhz"));
  m.def("blob_angle_from_shift", &blob_angle_from_shift, py::arg("chi_mhz"),
        py::arg("kappa_mhz"));
  m.def("reset_populations", &reset_populations, py::arg("fidelity"));

  py::class_<ReadoutFit>(m, "ReadoutFit")
      .def_readonly("p0", &ReadoutFit::p0)
      .def_readonly("p1", &ReadoutFit::p1)
      .def_readonly("center0", &ReadoutFit::center0)
      .def_readonly("center1", &ReadoutFit::center1)
      .def_readonly("sigma", &ReadoutFit::sigma)
      .def_readonly("blob_angle", &ReadoutFit::blob_angle)
      .def_readonly("low_population", &ReadoutFit::low_population);

  m.def("simulate_shots",
        [](int n_shots, double p0, std::array<double, 2> c0, std::array<double, 2> c1,
           double sigma, std::uint64_t seed) {
          Rng rng(seed);
          return simulate_shots(n_shots, p0, c0, c1, sigma, rng);
        },
        py::arg("n_shots"), py::arg("p0"), py::arg("center0"), py::arg("center1"),
        py::arg("sigma"), py::arg("seed"),
        "Draw IQ shots from a two-blob Gaussian mixture with a seeded generator.");

  py::class_<BlobInit>(m, "BlobInit")
      .def(py::init([](std::array<double, 2> c0, std::array<double, 2> c1) {
             return BlobInit{c0, c1};
           }),
           py::arg("c0"), py::arg("c1"))
      .def_readwrite("c0", &BlobInit::c0)
      .def_readwrite("c1", &BlobInit::c1);

  m.def("fit_shots",
        [](const std::vector<std::pair<double, double>>& shots, int bins,
           const std::optional<BlobInit>& init) {
          auto hist = IQHistogram::from_shots(shots, bins);
          return fit_double_gaussian(hist, init);
        },
        py::arg("shots"), py::arg("bins") = 81, py::arg("init") = std::nullopt,
        "Histogram IQ shots and fit the two-Gaussian blob model.");

  // ---- protocols ----
  py::class_<SpamModel>(m, "SpamModel")
      .def(py::init<>())
      .def_readwrite("contrast", &SpamModel::contrast)
      .def_readwrite("offset", &SpamModel::offset);

  py::class_<TraceData>(m, "TraceData")
      .def_readonly("times_us", &TraceData::times_us)
      .def_readonly("signal", &TraceData::signal);

  py::enum_<DecayModel>(m, "DecayModel")
      .value("Exponential", DecayModel::Exponential)
      .value("DampedCosine", DecayModel::DampedCosine);

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("model", &DecayFit::model)
      .def_readonly("amplitude", &DecayFit::amplitude)
      .def_readonly("offset", &DecayFit::offset)
      .def_readonly("time_constant_us", &DecayFit::time_constant_us)
      .def_readonly("frequency_hz", &DecayFit::frequency_hz)
      .def_readonly("phase_rad", &DecayFit::phase_rad)
      .def_readonly("amplitude_err", &DecayFit::amplitude_err)
      .def_readonly("offset_err", &DecayFit::offset_err)
      .def_readonly("time_constant_err_us", &DecayFit::time_constant_err_us)
      .def_readonly("frequency_err_hz", &DecayFit::frequency_err_hz)
      .def_readonly("rms_residual", &DecayFit::rms_residual)
      .def_readonly("iterations", &DecayFit::iterations)
      .def_readonly("converged", &DecayFit::converged)
      .def_readonly("span_limited", &DecayFit::span_limited)
      .def_readonly("message", &DecayFit::message);

  m.def("simulate_t1", &simulate_t1, py::arg("t1_ms"), py::arg("spam"),
        py::arg("t_grid_us"), py::arg("noise_sigma"), py::arg("seed"));
  m.def("simulate_ramsey", &simulate_ramsey, py::arg("t2_ms"), py::arg("detuning_khz"),
        py::arg("spam"), py::arg("t_grid_us"), py::arg("noise_sigma"), py::arg("seed"),
        py::arg("phi0_rad") = 0.0);
  m.def("fit_decay", &fit_decay, py::arg("trace"), py::arg("model"));

  py::class_<PulseCalibration>(m, "PulseCalibration")
      .def_readonly("amplitudes", &PulseCalibration::amplitudes)
      .def_readonly("signal_std", &PulseCalibration::signal_std)
      .def_readonly("pulse_counts", &PulseCalibration::pulse_counts)
      .def_readonly("optimal_index", &PulseCalibration::optimal_index)
      .def_readonly("optimal_amplitude", &PulseCalibration::optimal_amplitude)
      .def_readonly("bracketed", &PulseCalibration::bracketed);

  m.def("calibrate_pulse_train", &calibrate_pulse_train, py::arg("amplitudes"),
        py::arg("spam") = SpamModel{}, py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);

  py::class_<T102ProtocolResult>(m, "T102ProtocolResult")
      .def_readonly("durations_us", &T102ProtocolResult::durations_us)
      .def_readonly("p0_measured", &T102ProtocolResult::p0_measured)
      .def_readonly("saturation_fit", &T102ProtocolResult::saturation_fit)
      .def_readonly("estimate", &T102ProtocolResult::estimate);

  m.def("run_t102_protocol", &run_t102_protocol, py::arg("rates"),
        py::arg("duration_grid_us"), py::arg("noise_sigma"), py::arg("seed"),
        py::arg("blind_precision") = 0.01, py::arg("t1_12_ms") = 0.0);

  // ---- benchmarking ----
  py::enum_<Gate>(m, "Gate")
      .value("I", Gate::I)
      .value("Xp", Gate::Xp)
      .value("Xm", Gate::Xm)
      .value("Yp", Gate::Yp)
      .value("Ym", Gate::Ym)
      .value("Xp2", Gate::Xp2)
      .value("Xm2", Gate::Xm2)
      .value("Yp2", Gate::Yp2)
      .value("Ym2", Gate::Ym2);

  m.def("gate_name", &gate_name, py::arg("gate"));
  m.def("gate_pulse_count", &gate_pulse_count, py::arg("gate"));
  m.def("clifford_average_gate_count",
        []() { return CliffordTable::instance().average_gate_count(); });
  m.def("clifford_of_gate",
        [](Gate g) { return CliffordTable::instance().clifford_of_gate(g); },
        py::arg("gate"));

  py::class_<NoiseChannel>(m, "NoiseChannel")
      .def(py::init<>())
      .def_readwrite("depolarizing", &NoiseChannel::depolarizing)
      .def_readwrite("overrotation", &NoiseChannel::overrotation)
      .def_readwrite("amplitude_damping", &NoiseChannel::amplitude_damping)
      .def_readwrite("dephasing", &NoiseChannel::dephasing)
      .def_static("none", &NoiseChannel::none)
      .def_static("make_depolarizing", &NoiseChannel::make_depolarizing, py::arg("rate"))
      .def_static("make_overrotation", &NoiseChannel::make_overrotation, py::arg("angle"))
      .def_static("make_amplitude_dephasing", &NoiseChannel::make_amplitude_dephasing,
                  py::arg("amplitude_damping"), py::arg("dephasing"));

  py::class_<SpamReadout>(m, "SpamReadout")
      .def(py::init<>())
      .def_readwrite("prep_fidelity", &SpamReadout::prep_fidelity)
      .def_readwrite("meas_scale", &SpamReadout::meas_scale)
      .def_readwrite("meas_offset", &SpamReadout::meas_offset)
      .def_static("ideal", &SpamReadout::ideal);

  py::class_<RBOutcome>(m, "RBOutcome")
      .def_readonly("lengths", &RBOutcome::lengths)
      .def_readonly("mean", &RBOutcome::mean)
      .def_readonly("std_error", &RBOutcome::std_error)
      .def_readonly("n_random", &RBOutcome::n_random)
      .def_readonly("purity", &RBOutcome::purity)
      .def_readonly("interleaved_clifford", &RBOutcome::interleaved_clifford)
      .def_readonly("seed", &RBOutcome::seed);

  py::class_<RBFit>(m, "RBFit")
      .def_readonly("a", &RBFit::a)
      .def_readonly("b", &RBFit::b)
      .def_readonly("p", &RBFit::p)
      .def_readonly("a_err", &RBFit::a_err)
      .def_readonly("b_err", &RBFit::b_err)
      .def_readonly("p_err", &RBFit::p_err)
      .def_readonly("r_cliff", &RBFit::r_cliff)
      .def_readonly("r_cliff_err", &RBFit::r_cliff_err)
      .def_readonly("avg_fidelity", &RBFit::avg_fidelity);

  py::class_<PBFit>(m, "PBFit")
      .def_readonly("a", &PBFit::a)
      .def_readonly("b", &PBFit::b)
      .def_readonly("u", &PBFit::u)
      .def_readonly("a_err", &PBFit::a_err)
      .def_readonly("b_err", &PBFit::b_err)
      .def_readonly("u_err", &PBFit::u_err)
      .def_readonly("r_dec_cliff", &PBFit::r_dec_cliff)
      .def_readonly("r_dec_cliff_err", &PBFit::r_dec_cliff_err)
      .def_readonly("r_dec_gate", &PBFit::r_dec_gate);

  m.def("run_rb", &run_rb, py::arg("lengths"), py::arg("n_random"), py::arg("noise"),
        py::arg("spam"), py::arg("seed"), py::arg("interleaved") = std::nullopt);
  m.def("run_pb", &run_pb, py::arg("lengths"), py::arg("n_random"), py::arg("noise"),
        py::arg("spam"), py::arg("seed"), py::arg("shot_noise_sigma") = 0.0);
  m.def("fit_rb", &fit_rb, py::arg("outcome"));
  m.def("fit_pb", &fit_pb, py::arg("outcome"));
  m.def("interleaved_error", &interleaved_error, py::arg("reference"),
        py::arg("interleaved"));
  m.def("depolarizing_clifford_p", &depolarizing_clifford_p, py::arg("rate"));

  // ---- fitting ----
  py::class_<SpectroscopyPoint>(m, "SpectroscopyPoint")
      .def(py::init([](double flux, int level_i, int level_j, double freq_ghz) {
             return SpectroscopyPoint{flux, level_i, level_j, freq_ghz};
           }),
           py::arg("flux"), py::arg("level_i"), py::arg("level_j"), py::arg("freq_ghz"))
      .def_readwrite("flux", &SpectroscopyPoint::flux)
      .def_readwrite("level_i", &SpectroscopyPoint::level_i)
      .def_readwrite("level_j", &SpectroscopyPoint::level_j)
      .def_readwrite("freq_ghz", &SpectroscopyPoint::freq_ghz);

  auto vector_of = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("params",
                             [vector_of](const FitResult& r) { return vector_of(r.params); })
      .def_property_readonly(
          "std_errors", [vector_of](const FitResult& r) { return vector_of(r.std_errors); })
      .def_readonly("cost", &FitResult::cost)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("message", &FitResult::message);

  m.def("fit_spectroscopy", &fit_spectroscopy, py::arg("data"), py::arg("init"),
        "Recover e_c, e_l, e_j from transition frequencies across flux.");
  m.def("encode_transition", &encode_transition, py::arg("i"), py::arg("j"));
  m.def("decode_transition", &decode_transition, py::arg("code"));

  // ---- config ----
  py::class_<DeviceConfig>(m, "DeviceConfig")
      .def_readonly("seed", &DeviceConfig::seed)
      .def_readonly("levels", &DeviceConfig::levels)
      .def_readonly("circuit", &DeviceConfig::circuit)
      .def_readonly("noise", &DeviceConfig::noise)
      .def("to_json", [](const DeviceConfig& c) { return device_config_to_json(c); });

  m.def("load_device_config", &load_device_config, py::arg("path"));
  m.def("parse_device_config", &parse_device_config, py::arg("text"),
        py::arg("source_name") = "<string>");
}
