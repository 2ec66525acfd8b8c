#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dastank/das_sim.hpp"
#include "dastank/dsp.hpp"
#include "dastank/errors.hpp"
#include "dastank/estimators.hpp"
#include "dastank/io.hpp"
#include "dastank/pipeline.hpp"
#include "dastank/wavefield.hpp"

namespace py = pybind11;
using namespace dastank;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

py::array_t<double> record_data(const sim::DasRecord& rec) {
  py::array_t<double> out({static_cast<py::ssize_t>(rec.n_channels()), static_cast<py::ssize_t>(rec.n_samples)});
  std::copy(rec.data.begin(), rec.data.end(), out.mutable_data());
  return out;
}

void set_record_data(sim::DasRecord& rec, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("data must be a 2-D (channels x samples) array");
  rec.n_samples = static_cast<std::size_t>(a.shape(1));
  rec.data.assign(a.data(), a.data() + a.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DAS wave-tank simulation and sea-state estimators";
  m.attr("__version__") = io::kToolVersion;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  auto estimation_error = py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);
  py::register_exception<NoPeakError>(m, "NoPeakError", estimation_error.ptr());
  py::register_exception<WeakPeakError>(m, "WeakPeakError", estimation_error.ptr());
  py::register_exception<UndefinedCorrelationError>(m, "UndefinedCorrelationError", estimation_error.ptr());
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError", estimation_error.ptr());
  py::register_exception<DegenerateCurveError>(m, "DegenerateCurveError", estimation_error.ptr());
  py::register_exception<InconsistentLayoutsError>(m, "InconsistentLayoutsError", estimation_error.ptr());

  // wavefield
  py::class_<wavefield::TankEnvironment>(m, "TankEnvironment")
      .def(py::init([](double depth_m, double gravity_mps2) {
             wavefield::TankEnvironment e{depth_m, gravity_mps2};
             e.validate();
             return e;
           }),
           py::arg("depth_m") = 4.5, py::arg("gravity_mps2") = wavefield::kStandardGravity)
      .def_readwrite("depth_m", &wavefield::TankEnvironment::depth_m)
      .def_readwrite("gravity_mps2", &wavefield::TankEnvironment::gravity_mps2);

  py::class_<wavefield::WaveSpec>(m, "WaveSpec")
      .def(py::init(&wavefield::WaveSpec::make), py::arg("height_m"), py::arg("period_s"), py::arg("doa_deg"),
           py::arg("env") = wavefield::TankEnvironment{}, py::arg("phase_rad") = 0.0)
      .def_readonly("height_m", &wavefield::WaveSpec::height_m)
      .def_readonly("period_s", &wavefield::WaveSpec::period_s)
      .def_readonly("doa_deg", &wavefield::WaveSpec::doa_deg)
      .def_readonly("wavelength_m", &wavefield::WaveSpec::wavelength_m)
      .def_readonly("phase_rad", &wavefield::WaveSpec::phase_rad)
      .def("__repr__", [](const wavefield::WaveSpec& w) {
        return "WaveSpec(height_m=" + std::to_string(w.height_m) + ", period_s=" + std::to_string(w.period_s) +
               ", doa_deg=" + std::to_string(w.doa_deg) + ", wavelength_m=" + std::to_string(w.wavelength_m) + ")";
      });

  m.def("solve_dispersion", &wavefield::solve_dispersion, py::arg("period_s"),
        py::arg("env") = wavefield::TankEnvironment{});
  m.def("surface_elevation", &wavefield::surface_elevation, py::arg("wave"), py::arg("x_m"), py::arg("y_m"),
        py::arg("t_s"));

  // das-sim
  py::class_<sim::CableGeometry>(m, "CableGeometry")
      .def(py::init([](std::vector<double> positions, double axis_angle_deg, std::array<double, 2> origin) {
             sim::CableGeometry g{std::move(positions), axis_angle_deg, origin};
             g.validate();
             return g;
           }),
           py::arg("channel_positions_m"), py::arg("axis_angle_deg") = 0.0,
           py::arg("origin_xy_m") = std::array<double, 2>{0.0, 0.0})
      .def_static("uniform", &sim::CableGeometry::uniform, py::arg("start_m") = 161.65, py::arg("spacing_m") = 0.8,
                  py::arg("count") = 18, py::arg("axis_angle_deg") = 0.0,
                  py::arg("origin_xy_m") = std::array<double, 2>{0.0, 0.0})
      .def_readwrite("channel_positions_m", &sim::CableGeometry::channel_positions_m)
      .def_readwrite("axis_angle_deg", &sim::CableGeometry::axis_angle_deg)
      .def_readwrite("origin_xy_m", &sim::CableGeometry::origin_xy_m);

  py::enum_<sim::CouplingMode>(m, "CouplingMode")
      .value("HEIGHT_PROPORTIONAL", sim::CouplingMode::kHeightProportional)
      .value("PRESSURE_ATTENUATED", sim::CouplingMode::kPressureAttenuated);

  py::class_<sim::SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("sample_rate_hz", &sim::SimConfig::sample_rate_hz)
      .def_readwrite("duration_s", &sim::SimConfig::duration_s)
      .def_readwrite("amplitude_scale", &sim::SimConfig::amplitude_scale)
      .def_readwrite("poisson_ratio", &sim::SimConfig::poisson_ratio)
      .def_readwrite("harmonic_gains", &sim::SimConfig::harmonic_gains)
      .def_readwrite("noise_rms", &sim::SimConfig::noise_rms)
      .def_readwrite("seed", &sim::SimConfig::seed)
      .def_readwrite("coupling_mode", &sim::SimConfig::coupling_mode)
      .def_readwrite("gauge_length_m", &sim::SimConfig::gauge_length_m)
      .def_readwrite("pulse_width_m", &sim::SimConfig::pulse_width_m);

  py::class_<sim::DasRecord>(m, "DasRecord")
      .def(py::init<>())
      .def_readwrite("sample_rate_hz", &sim::DasRecord::sample_rate_hz)
      .def_readwrite("channel_positions_m", &sim::DasRecord::channel_positions_m)
      .def_readwrite("gauge_length_m", &sim::DasRecord::gauge_length_m)
      .def_readwrite("pulse_width_m", &sim::DasRecord::pulse_width_m)
      .def_readwrite("start_time_s", &sim::DasRecord::start_time_s)
      .def_property_readonly("n_channels", &sim::DasRecord::n_channels)
      .def_readonly("n_samples", &sim::DasRecord::n_samples)
      .def_property("data", &record_data, &set_record_data, "channels x samples strain matrix (copy)")
      .def("channel", [](const sim::DasRecord& r, std::size_t ch) {
        if (ch >= r.n_channels()) throw py::index_error("channel index out of range");
        const auto s = r.channel(ch);
        return Array(static_cast<py::ssize_t>(s.size()), s.data());
      })
      .def("nearest_channel", &sim::DasRecord::nearest_channel);

  m.def("directional_sensitivity", &sim::directional_sensitivity, py::arg("theta_rel_deg"),
        py::arg("poisson_ratio") = 0.25);
  m.def("expected_signal_rms", &sim::expected_signal_rms);
  m.def("synthesize_das", &sim::synthesize_das, py::arg("wave"), py::arg("geom"),
        py::arg("env") = wavefield::TankEnvironment{}, py::arg("cfg") = sim::SimConfig{},
        py::call_guard<py::gil_scoped_release>());

  // dsp
  py::class_<dsp::Psd>(m, "Psd")
      .def_property_readonly("frequencies_hz", [](const dsp::Psd& p) { return to_array(p.frequencies_hz); })
      .def_property_readonly("power", [](const dsp::Psd& p) { return to_array(p.power); })
      .def_readonly("resolution_hz", &dsp::Psd::resolution_hz)
      .def_readonly("segments", &dsp::Psd::segments);

  m.def(
      "lowpass",
      [](const Array& x, double fs, double cutoff_hz) {
        const auto v = to_vector(x);
        return to_array(dsp::lowpass({fs, v}, cutoff_hz).samples);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("cutoff_hz"));
  m.def(
      "welch_psd",
      [](const Array& x, double fs, double segment_s, double overlap) {
        const auto v = to_vector(x);
        return dsp::welch_psd({fs, v}, segment_s, overlap);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("segment_s") = 60.0, py::arg("overlap_fraction") = 0.5);
  m.def(
      "windowed_rms",
      [](const Array& x, double fs, double window_s) {
        const auto v = to_vector(x);
        return dsp::windowed_rms({fs, v}, window_s);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("window_s") = 10.0);
  m.def(
      "pearson_correlation",
      [](const Array& x, const Array& y) { return dsp::pearson_correlation(to_vector(x), to_vector(y)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "complex_amplitude",
      [](const Array& x, double fs, double f0) {
        const auto v = to_vector(x);
        const auto c = dsp::complex_amplitude({fs, v}, f0);
        return py::make_tuple(c.amplitude, c.phase_rad);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("f0_hz"));

  // estimators
  py::class_<est::PeriodEstimate>(m, "PeriodEstimate")
      .def_readonly("period_s", &est::PeriodEstimate::period_s)
      .def_readonly("peak_freq_hz", &est::PeriodEstimate::peak_freq_hz)
      .def_readonly("peak_to_median", &est::PeriodEstimate::peak_to_median);
  m.def("estimate_period", py::overload_cast<const dsp::Psd&, double, double>(&est::estimate_period),
        py::arg("psd"), py::arg("f_min_hz") = 0.05, py::arg("f_max_hz") = 3.0);

  py::class_<est::CalibrationPoint>(m, "CalibrationPoint")
      .def_readonly("height_m", &est::CalibrationPoint::height_m)
      .def_readonly("median_rms", &est::CalibrationPoint::median_rms)
      .def_readonly("iqr", &est::CalibrationPoint::iqr);
  py::class_<est::HeightCalibration>(m, "HeightCalibration")
      .def_readonly("slope", &est::HeightCalibration::slope)
      .def_readonly("fit_points", &est::HeightCalibration::fit_points)
      .def_readonly("rmspe_percent", &est::HeightCalibration::rmspe_percent);
  m.def(
      "fit_height_calibration",
      [](const std::vector<std::pair<double, std::vector<double>>>& samples) {
        std::vector<est::HeightSamples> s;
        for (const auto& [h, v] : samples) s.push_back({h, v});
        return est::fit_height_calibration(s);
      },
      py::arg("samples"), "samples: list of (height_m, [rms values])");
  m.def(
      "estimate_height",
      [](const est::HeightCalibration& cal, const std::vector<double>& rms) { return est::estimate_height(cal, rms); },
      py::arg("calibration"), py::arg("rms_values"));
  m.def(
      "rmspe", [](const std::vector<double>& p, const std::vector<double>& a) { return est::rmspe(p, a); },
      py::arg("predicted"), py::arg("actual"));
  m.def(
      "distribution_stats",
      [](const std::vector<double>& v) {
        const auto s = est::distribution_stats(v);
        return py::make_tuple(s.median, s.iqr);
      },
      py::arg("values"));

  py::class_<est::BeamSpectrum>(m, "BeamSpectrum")
      .def_property_readonly("apparent_wavenumbers",
                             [](const est::BeamSpectrum& b) { return to_array(b.apparent_wavenumbers); })
      .def_property_readonly("power", [](const est::BeamSpectrum& b) { return to_array(b.power); })
      .def_readonly("peak_k_app", &est::BeamSpectrum::peak_k_app)
      .def_readonly("f0_hz", &est::BeamSpectrum::f0_hz)
      .def_property_readonly("apparent_wavelength_m", &est::BeamSpectrum::apparent_wavelength_m)
      .def("power_at", &est::BeamSpectrum::power_at);
  m.def(
      "beamform_apparent_wavenumber",
      [](const sim::DasRecord& rec, double f0, std::optional<std::vector<double>> k_grid) {
        const auto grid = k_grid ? *k_grid : est::default_k_grid(rec.channel_positions_m);
        return est::beamform_apparent_wavenumber(rec, f0, grid);
      },
      py::arg("record"), py::arg("f0_hz"), py::arg("k_grid") = std::nullopt);
  m.def(
      "wavelength_doa_curve",
      [](const est::BeamSpectrum& s, std::optional<std::vector<double>> theta) {
        const auto grid = theta ? *theta : est::default_theta_grid();
        std::vector<std::pair<double, double>> out;
        for (const auto& p : est::wavelength_doa_curve(s, grid)) out.emplace_back(p.theta_deg, p.wavelength_m);
        return out;
      },
      py::arg("spectrum"), py::arg("theta_grid_deg") = std::nullopt);

  py::class_<est::DoaEstimate>(m, "DoaEstimate")
      .def_readonly("doa_c1_deg", &est::DoaEstimate::doa_c1_deg)
      .def_readonly("doa_c2_deg", &est::DoaEstimate::doa_c2_deg)
      .def_readonly("wavelength_m", &est::DoaEstimate::wavelength_m)
      .def_readonly("apparent_wavelength_c1_m", &est::DoaEstimate::apparent_wavelength_c1_m)
      .def_readonly("apparent_wavelength_c2_m", &est::DoaEstimate::apparent_wavelength_c2_m)
      .def_readonly("delta_deg", &est::DoaEstimate::delta_deg)
      .def_readonly("ambiguity_flag", &est::DoaEstimate::ambiguity_flag);
  m.def(
      "solve_dual_layout",
      [](double l1, double l2, double delta) { return est::solve_dual_layout(l1, l2, delta); },
      py::arg("lambda_app_c1_m"), py::arg("lambda_app_c2_m"), py::arg("delta_deg"));
  m.def(
      "analyze_doa",
      [](const sim::DasRecord& r1, const sim::DasRecord& r2, double delta, std::optional<double> f0) {
        return pipeline::analyze_doa(r1, r2, delta, f0, io::AnalysisConfig{}).estimate;
      },
      py::arg("record_c1"), py::arg("record_c2"), py::arg("delta_deg"), py::arg("f0_hz") = std::nullopt,
      py::call_guard<py::gil_scoped_release>());

  // io
  m.def(
      "write_das_record",
      [](const sim::DasRecord& rec, const std::filesystem::path& path, const std::string& format) {
        if (format.empty()) {
          io::write_das_record(rec, path);
        } else {
          io::write_das_record(rec, path, io::record_format_from_string(format));
        }
      },
      py::arg("record"), py::arg("path"), py::arg("format") = "");
  m.def("read_das_record", &io::read_das_record, py::arg("path"));
  m.def(
      "load_run_config", [](const std::filesystem::path& p) { return io::to_json(io::load_run_config(p)).dump(); },
      py::arg("path"), "Validated config, defaults applied, as a JSON string.");
}
