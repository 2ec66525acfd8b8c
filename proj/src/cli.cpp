#include "dastank/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "dastank/errors.hpp"
#include "dastank/io.hpp"
#include "dastank/pipeline.hpp"

namespace dastank::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

// Raised inside a command to leave with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw Exit{kUsageError, msg}; }

std::array<double, 2> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) usage_error("--range expects a:b, got '" + s + "'");
  try {
    std::size_t used = 0;
    const double a = std::stod(s.substr(0, colon), &used);
    const double b = std::stod(s.substr(colon + 1));
    if (!(a <= b)) usage_error("--range expects a <= b, got '" + s + "'");
    return {a, b};
  } catch (const std::logic_error&) {
    usage_error("--range expects numeric a:b, got '" + s + "'");
  }
}

fs::path output_dir_for(const fs::path& input, const std::string& outdir) {
  fs::path dir = outdir.empty() ? input.parent_path() : fs::path(outdir);
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) usage_error("cannot create output directory '" + dir.string() + "'");
  return dir;
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) usage_error("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".dastank_write_probe";
  {
    std::ofstream f(probe);
    if (!f) usage_error("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

sim::DasRecord load_record(const std::string& path) {
  try {
    return io::read_das_record(path);
  } catch (const FormatError& e) {
    usage_error("cannot read record '" + path + "': " + e.what());
  }
}

void write_psd_csv(const fs::path& path, const dsp::Psd& psd) {
  io::write_columns_csv(path, {"freq_hz", "psd_strain2_per_hz"}, {psd.frequencies_hz, psd.power});
}

void write_rms_csv(const fs::path& path, const std::vector<pipeline::RmsSample>& rms) {
  std::vector<double> ch, t, v;
  for (const auto& s : rms) {
    ch.push_back(s.channel_m);
    t.push_back(s.window_start_s);
    v.push_back(s.rms);
  }
  io::write_columns_csv(path, {"channel_m", "window_start_s", "rms_strain"}, {ch, t, v});
}

void write_beam_csv(const fs::path& path, const pipeline::DoaAnalysis& doa) {
  std::vector<double> p2;
  for (double k : doa.spectrum_c1.apparent_wavenumbers) p2.push_back(doa.spectrum_c2.power_at(k));
  io::write_columns_csv(path, {"k_app_rad_per_m", "power_c1", "power_c2"},
                        {doa.spectrum_c1.apparent_wavenumbers, doa.spectrum_c1.power, p2});
}

void write_curves_csv(const fs::path& path, const pipeline::DoaAnalysis& doa) {
  const auto c1 = est::wavelength_doa_curve(doa.spectrum_c1, doa.theta_grid_deg);
  const auto c2 = est::wavelength_doa_curve(doa.spectrum_c2, doa.theta_grid_deg);
  const double lam2 = doa.spectrum_c2.apparent_wavelength_m();
  const double delta = doa.estimate.delta_deg * std::numbers::pi / 180.0;
  std::vector<double> th, l1, l2, ldiff;
  for (std::size_t i = 0; i < c1.size(); ++i) {
    th.push_back(c1[i].theta_deg);
    l1.push_back(c1[i].wavelength_m);
    l2.push_back(c2[i].wavelength_m);
    // C2 locus re-expressed against the C1-relative DOA; crosses lambda_c1 at the solution.
    const double c = std::cos(c1[i].theta_deg * std::numbers::pi / 180.0 + delta);
    ldiff.push_back(c > 0.0 ? lam2 * c : 0.0);
  }
  io::write_columns_csv(path, {"theta_deg", "lambda_c1_m", "lambda_c2_m", "lambda_diff_curve_m"}, {th, l1, l2, ldiff});
}

std::string channel_list(const sim::DasRecord& rec, const std::vector<std::size_t>& chans) {
  std::ostringstream s;
  if (chans.size() == 1) {
    s << rec.channel_positions_m[chans[0]] << " m";
  } else {
    s << chans.size() << " channels " << rec.channel_positions_m[chans.front()] << "-"
      << rec.channel_positions_m[chans.back()] << " m";
  }
  return s.str();
}

// ---------------------------------------------------------------- commands

int cmd_simulate(const std::string& config, const std::string& out_path, std::optional<std::uint64_t> seed,
                 const std::string& format, std::ostream& out) {
  io::RunConfig cfg;
  try {
    cfg = io::load_run_config(config);
  } catch (const ConfigError& e) {
    usage_error(std::string("invalid config: ") + e.what());
  }
  if (seed) cfg.sim.seed = *seed;
  io::RecordFormat fmt = io::record_format_for_path(out_path);
  if (!format.empty()) fmt = io::record_format_from_string(format);

  sim::DasRecord rec;
  try {
    rec = sim::synthesize_das(cfg.wave, cfg.geometry, cfg.environment, cfg.sim);
  } catch (const ConfigError& e) {
    usage_error(std::string("invalid config: ") + e.what());
  } catch (const InvalidArgument& e) {
    usage_error(std::string("invalid config: ") + e.what());
  }
  const fs::path p(out_path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  try {
    io::write_das_record(rec, p, fmt);
  } catch (const std::runtime_error& e) {
    usage_error(e.what());
  }
  out << "wrote " << out_path << ": " << rec.n_channels() << " channels x " << rec.n_samples << " samples ("
      << rec.duration_s() << " s at " << rec.sample_rate_hz << " Hz); wave H=" << cfg.wave.height_m
      << " m T=" << cfg.wave.period_s << " s DOA=" << cfg.wave.doa_deg << " deg (cable-relative "
      << wavefield::wrap_degrees(cfg.wave.doa_deg - cfg.geometry.axis_angle_deg) << " deg) wavelength="
      << cfg.wave.wavelength_m << " m; seed " << cfg.sim.seed << " [" << sim::kNoiseGenerator << "]\n";
  return kOk;
}

struct AnalyzeArgs {
  std::string in;
  std::optional<double> channel_x;
  std::string range;
  std::string mode;
  std::string calibration;
  std::string outdir;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  if (a.mode != "period" && a.mode != "height" && a.mode != "psd") {
    usage_error("--mode must be period, height or psd");
  }
  if (a.channel_x && !a.range.empty()) usage_error("--channel-x and --range are mutually exclusive");
  std::optional<est::HeightCalibration> cal;
  if (a.mode == "height") {
    if (a.calibration.empty()) usage_error("--mode height requires --calibration");
    try {
      cal = io::load_calibration(a.calibration);
    } catch (const std::exception& e) {
      usage_error(e.what());
    }
  }
  const auto rec = load_record(a.in);
  const io::AnalysisConfig acfg;
  const fs::path dir = output_dir_for(a.in, a.outdir);
  const std::string stem = fs::path(a.in).stem().string();

  pipeline::ChannelSelection sel;
  if (a.channel_x) sel.channel_x_m = a.channel_x;
  if (!a.range.empty()) sel.range_m = parse_range(a.range);
  if (!sel.channel_x_m && !sel.range_m) {
    if (a.mode == "height") {
      sel.range_m = acfg.channel_range_m;
    } else {
      sel.channel_x_m = acfg.channel_x_m;
    }
  }
  std::vector<std::size_t> chans;
  try {
    chans = pipeline::select_channels(rec, sel);
  } catch (const InvalidArgument& e) {
    usage_error(e.what());
  }

  io::ResultDocument doc;
  doc.command = "analyze";
  doc.inputs.push_back({a.in, io::sha256_file(a.in)});
  doc.diagnostics["channels_m"] = json::array();
  for (std::size_t c : chans) doc.diagnostics["channels_m"].push_back(rec.channel_positions_m[c]);
  if (sel.channel_x_m) {
    doc.diagnostics["requested_channel_x_m"] = *sel.channel_x_m;
    doc.diagnostics["selected_channel_x_m"] = rec.channel_positions_m[chans.front()];
  }

  if (a.mode == "psd" || a.mode == "period") {
    const auto psd = pipeline::channel_psd(rec, chans, acfg);
    const fs::path psd_path = dir / (stem + ".psd.csv");
    write_psd_csv(psd_path, psd);
    out << "channel " << channel_list(rec, chans) << "; PSD written to " << psd_path.string() << "\n";
    if (a.mode == "psd") return kOk;

    est::PeriodOptions popt;
    popt.f_min_hz = acfg.band_hz[0];
    popt.f_max_hz = acfg.band_hz[1];
    popt.min_peak_to_median = acfg.min_peak_to_median;
    est::PeriodEstimate pe;
    try {
      pe = est::estimate_period(psd, popt);
    } catch (const EstimationError& e) {
      throw Exit{kEstimationFailure, std::string("period estimation failed: ") + e.what()};
    }
    doc.outputs = io::to_json(pe);
    doc.diagnostics["psd_csv"] = psd_path.string();
    doc.diagnostics["psd_resolution_hz"] = psd.resolution_hz;
    doc.diagnostics["welch_segments"] = psd.segments;
    doc.diagnostics["band_hz"] = acfg.band_hz;
    const fs::path res = dir / (stem + ".period.json");
    io::write_json(doc.to_json(), res);
    out << std::setprecision(6) << "period_s=" << pe.period_s << " peak_freq_hz=" << pe.peak_freq_hz
        << " (result " << res.string() << ")\n";
    return kOk;
  }

  const auto rms = pipeline::pooled_rms(rec, chans, acfg);
  const auto values = pipeline::rms_values(rms);
  if (values.empty()) throw Exit{kEstimationFailure, "record is shorter than one RMS window"};
  const double height = est::estimate_height(*cal, values);
  const auto st = est::distribution_stats(values);
  const fs::path rms_path = dir / (stem + ".rms.csv");
  write_rms_csv(rms_path, rms);
  doc.inputs.push_back({a.calibration, io::sha256_file(a.calibration)});
  doc.outputs = {{"height_m", height}, {"median_rms", st.median}, {"iqr_rms", st.iqr}, {"n_rms", values.size()},
                 {"calibration_slope", cal->slope}};
  doc.diagnostics["rms_csv"] = rms_path.string();
  doc.diagnostics["rms_window_s"] = acfg.rms_window_s;
  doc.diagnostics["rms_lowpass_hz"] = acfg.rms_lowpass_hz;
  const fs::path res = dir / (stem + ".height.json");
  io::write_json(doc.to_json(), res);
  out << std::setprecision(6) << "height_m=" << height << " from " << values.size() << " RMS samples over "
      << channel_list(rec, chans) << " (result " << res.string() << ")\n";
  return kOk;
}

int cmd_calibrate(const std::vector<std::string>& inputs, const std::vector<double>& heights,
                  const std::string& out_path, const std::string& range, std::ostream& out) {
  if (inputs.size() != heights.size()) {
    usage_error("each --in needs a matching --height (got " + std::to_string(inputs.size()) + " inputs and " +
                std::to_string(heights.size()) + " heights)");
  }
  io::AnalysisConfig acfg;
  if (!range.empty()) acfg.channel_range_m = parse_range(range);

  io::ResultDocument doc;
  doc.command = "calibrate";
  std::vector<est::HeightSamples> samples;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!(heights[i] > 0.0)) usage_error("--height values must be > 0");
    const auto rec = load_record(inputs[i]);
    std::vector<std::size_t> chans;
    try {
      chans = pipeline::select_channels(rec, {std::nullopt, acfg.channel_range_m});
    } catch (const InvalidArgument& e) {
      usage_error(e.what());
    }
    samples.push_back({heights[i], pipeline::rms_values(pipeline::pooled_rms(rec, chans, acfg))});
    if (samples.back().rms_values.empty()) usage_error("'" + inputs[i] + "' is shorter than one RMS window");
    doc.inputs.push_back({inputs[i], io::sha256_file(inputs[i])});
  }
  est::HeightCalibration cal;
  try {
    cal = est::fit_height_calibration(samples);
  } catch (const DegenerateFitError& e) {
    usage_error(e.what());
  }
  doc.outputs["calibration"] = io::to_json(cal);
  doc.diagnostics["channel_range_m"] = acfg.channel_range_m;
  doc.diagnostics["rms_window_s"] = acfg.rms_window_s;
  doc.diagnostics["rms_lowpass_hz"] = acfg.rms_lowpass_hz;
  const fs::path p(out_path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  io::write_json(doc.to_json(), p);
  out << std::setprecision(6) << "slope=" << cal.slope << " rmspe_percent=" << cal.rmspe_percent << " over "
      << cal.fit_points.size() << " heights (written to " << out_path << ")\n";
  return kOk;
}

int cmd_doa(const std::string& in1, const std::string& in2, double delta_deg, std::optional<double> f0,
            const std::string& outdir, std::ostream& out) {
  if (!(std::abs(delta_deg) > 0.0 && std::abs(delta_deg) < 90.0)) {
    usage_error("--delta-deg must satisfy 0 < |d| < 90");
  }
  const auto r1 = load_record(in1);
  const auto r2 = load_record(in2);
  if (r1.sample_rate_hz != r2.sample_rate_hz) usage_error("records must share the sampling frequency");
  if (f0 && !(*f0 > 0.0 && *f0 < 0.5 * r1.sample_rate_hz)) usage_error("--f0 must lie in (0, fs/2)");

  const io::AnalysisConfig acfg;
  pipeline::DoaAnalysis doa;
  try {
    doa = pipeline::analyze_doa(r1, r2, delta_deg, f0, acfg);
  } catch (const InconsistentLayoutsError& e) {
    throw Exit{kEstimationFailure, std::string("DOA estimation failed: ") + e.what()};
  } catch (const EstimationError& e) {
    throw Exit{kEstimationFailure, std::string("DOA estimation failed: ") + e.what()};
  } catch (const InvalidArgument& e) {
    usage_error(e.what());
  }

  const fs::path dir = output_dir_for(in1, outdir);
  const std::string stem = fs::path(in1).stem().string();
  const fs::path beam_path = dir / (stem + ".beam.csv");
  const fs::path curve_path = dir / (stem + ".curves.csv");
  write_beam_csv(beam_path, doa);
  write_curves_csv(curve_path, doa);

  io::ResultDocument doc;
  doc.command = "doa";
  doc.inputs.push_back({in1, io::sha256_file(in1)});
  doc.inputs.push_back({in2, io::sha256_file(in2)});
  doc.outputs = io::to_json(doa.estimate);
  doc.diagnostics["f0_hz"] = doa.f0_hz;
  doc.diagnostics["f0_source"] = f0 ? "--f0" : "fundamental of --in1";
  doc.diagnostics["peak_k_app_c1_rad_per_m"] = doa.spectrum_c1.peak_k_app;
  doc.diagnostics["peak_k_app_c2_rad_per_m"] = doa.spectrum_c2.peak_k_app;
  doc.diagnostics["beam_csv"] = beam_path.string();
  doc.diagnostics["curves_csv"] = curve_path.string();
  const fs::path res = dir / (stem + ".doa.json");
  io::write_json(doc.to_json(), res);
  out << std::setprecision(6) << "doa_c1_deg=" << doa.estimate.doa_c1_deg << " doa_c2_deg=" << doa.estimate.doa_c2_deg
      << " wavelength_m=" << doa.estimate.wavelength_m << " (apparent " << doa.estimate.apparent_wavelength_c1_m
      << " / " << doa.estimate.apparent_wavelength_c2_m << " m, f0 " << doa.f0_hz << " Hz"
      << (doa.estimate.ambiguity_flag ? ", mirror candidate not excluded" : "") << ") result " << res.string()
      << "\n";
  return kOk;
}

int cmd_reproduce(const std::string& outdir, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  const fs::path dir(outdir);
  ensure_writable_dir(dir);

  pipeline::ReproduceOptions opt;
  opt.seed = seed;
  pipeline::ReproduceSinks sinks;
  sinks.on_condition = [&](const pipeline::ConditionArtifacts& a) {
    write_psd_csv(dir / ("psd_" + a.tag + ".csv"), *a.psd);
    write_rms_csv(dir / ("rms_" + a.tag + ".csv"), *a.rms);
  };
  sinks.on_pair = [&](const pipeline::PairArtifacts& a) {
    write_beam_csv(dir / ("beam_" + a.tag + ".csv"), *a.doa);
    write_curves_csv(dir / ("curves_" + a.tag + ".csv"), *a.doa);
  };
  const auto summary = pipeline::reproduce(opt, sinks);

  {
    std::vector<double> h, t, d, pe, err_pct, med, iqr, he, pass;
    for (const auto& c : summary.conditions) {
      h.push_back(c.height_m);
      t.push_back(c.period_s);
      d.push_back(c.doa_rel_deg);
      pe.push_back(c.estimated_period_s);
      err_pct.push_back(c.period_error_percent);
      med.push_back(c.median_rms);
      iqr.push_back(c.iqr_rms);
      he.push_back(c.estimated_height_m);
      pass.push_back(c.pass ? 1.0 : 0.0);
    }
    io::write_columns_csv(dir / "conditions.csv",
                          {"height_m", "period_s", "doa_rel_deg", "estimated_period_s", "period_error_percent",
                           "median_rms_strain", "iqr_rms_strain", "estimated_height_m", "pass"},
                          {h, t, d, pe, err_pct, med, iqr, he, pass});
  }

  double worst_period_short = 0.0, worst_period_long = 0.0, worst_rmspe = 0.0, worst_pi = 0.0;
  double worst_doa_c1 = 0.0, worst_doa_c2 = 0.0, worst_lambda = 0.0, worst_dir = 0.0;
  const double t_short = *std::min_element(opt.periods_s.begin(), opt.periods_s.end());
  for (const auto& c : summary.conditions) {
    (c.period_s == t_short ? worst_period_short : worst_period_long) =
        std::max(c.period_s == t_short ? worst_period_short : worst_period_long, c.period_error_percent);
  }
  for (const auto& g : summary.calibrations) worst_rmspe = std::max(worst_rmspe, g.calibration.rmspe_percent);
  for (const auto& g : summary.period_independence) worst_pi = std::max(worst_pi, g.difference_percent);
  for (const auto& g : summary.directionality) {
    worst_dir = std::max(worst_dir, 100.0 * std::abs(g.observed_ratio / g.model_ratio - 1.0));
  }
  for (const auto& g : summary.doa) {
    worst_doa_c1 = std::max(worst_doa_c1, g.error_c1_deg);
    worst_doa_c2 = std::max(worst_doa_c2, g.error_c2_deg);
    worst_lambda = std::max(worst_lambda, g.wavelength_error_percent);
  }

  struct Row {
    std::string metric;
    double achieved;
    double threshold;
    std::string reference;
  };
  const auto& th = opt.thresholds;
  const std::vector<Row> rows = {
      {"period error T=1.25 s [%] (worst)", worst_period_short, th.period_error_percent, "0.825"},
      {"period error T=2.5 s [%] (worst)", worst_period_long, th.period_error_percent, "0.703"},
      {"height RMSPE [%] (worst group)", worst_rmspe, th.rmspe_percent, "1.78"},
      {"median RMS difference across periods [%]", worst_pi, th.period_independence_percent, "9.41"},
      {"directionality ratio deviation from model [%]", worst_dir, 100.0 * th.directionality_ratio_tolerance, "-"},
      {"DOA error C1 [deg] (worst)", worst_doa_c1, th.doa_error_deg, "1.40"},
      {"DOA error C2 [deg] (worst)", worst_doa_c2, th.doa_error_deg, "1.53"},
      {"wavelength error vs dispersion [%] (worst)", worst_lambda, th.wavelength_error_percent, "-"},
  };
  std::ostringstream table;
  table << std::left << std::setw(48) << "metric" << std::right << std::setw(12) << "achieved" << std::setw(12)
        << "threshold" << std::setw(12) << "tank ref" << "  status\n";
  std::vector<double> achieved, thresholds;
  for (const auto& r : rows) {
    table << std::left << std::setw(48) << r.metric << std::right << std::fixed << std::setprecision(4)
          << std::setw(12) << r.achieved << std::setw(12) << r.threshold << std::setw(12) << r.reference << "  "
          << (r.achieved <= r.threshold ? "PASS" : "FAIL") << "\n";
  }
  table << summary.conditions.size() << " conditions, seed " << seed << ": "
        << (summary.all_pass ? "ALL PASS" : "FAIL") << "\n";
  {
    std::ofstream f(dir / "summary.txt");
    f << table.str();
  }
  io::json sj = pipeline::to_json(summary);
  sj["seed"] = seed;
  sj["tool_version"] = io::kToolVersion;
  sj["table"] = io::json::array();
  for (const auto& r : rows) {
    sj["table"].push_back({{"metric", r.metric}, {"achieved", r.achieved}, {"threshold", r.threshold},
                           {"tank_reference", r.reference}, {"pass", r.achieved <= r.threshold}});
  }
  io::write_json(sj, dir / "summary.json");
  out << table.str();
  if (!summary.all_pass) {
    for (const auto& f : summary.failures()) err << "FAIL " << f << "\n";
    return kEstimationFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sea-state estimation from distributed acoustic sensing records", "dastank"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);

  auto* sim_cmd = app.add_subcommand("simulate", "synthesize a DAS record from a run config");
  std::string sim_config, sim_out, sim_format;
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("--config", sim_config, "run config (JSON)")->required();
  sim_cmd->add_option("--out", sim_out, "output record path")->required();
  sim_cmd->add_option("--seed", sim_seed, "override sim.seed");
  sim_cmd->add_option("--format", sim_format, "csv or bin (default: from extension)")
      ->check(CLI::IsMember({"csv", "bin"}));

  auto* an_cmd = app.add_subcommand("analyze", "estimate period, PSD or height from one record");
  AnalyzeArgs an;
  an_cmd->add_option("--in", an.in, "record path")->required();
  an_cmd->add_option("--channel-x", an.channel_x, "use the channel nearest this arc length [m]");
  an_cmd->add_option("--range", an.range, "use channels within a:b [m]");
  an_cmd->add_option("--mode", an.mode, "period | height | psd")->required();
  an_cmd->add_option("--calibration", an.calibration, "height calibration document (height mode)");
  an_cmd->add_option("--outdir", an.outdir, "output directory (default: next to --in)");

  auto* cal_cmd = app.add_subcommand("calibrate", "fit a zero-intercept RMS-to-height calibration");
  std::vector<std::string> cal_in;
  std::vector<double> cal_heights;
  std::string cal_out, cal_range;
  cal_cmd->add_option("--in", cal_in, "record path (repeat; pairs with --height in order)")->required();
  cal_cmd->add_option("--height", cal_heights, "true wave height of the matching --in [m]")->required();
  cal_cmd->add_option("--out", cal_out, "calibration output path")->required();
  cal_cmd->add_option("--range", cal_range, "channels within a:b [m] (default 161:176)");

  auto* doa_cmd = app.add_subcommand("doa", "joint DOA / wavelength from two cable layouts");
  std::string doa_in1, doa_in2, doa_outdir;
  double doa_delta = 0.0;
  std::optional<double> doa_f0;
  doa_cmd->add_option("--in1", doa_in1, "record of layout C1")->required();
  doa_cmd->add_option("--in2", doa_in2, "record of layout C2")->required();
  doa_cmd->add_option("--delta-deg", doa_delta, "DOA difference C2 - C1 [deg]")->required();
  doa_cmd->add_option("--f0", doa_f0, "analysis frequency [Hz] (default: fundamental of --in1)");
  doa_cmd->add_option("--outdir", doa_outdir, "output directory (default: next to --in1)");

  auto* rep_cmd = app.add_subcommand("reproduce", "run the full height x period x DOA grid");
  std::string rep_outdir;
  std::uint64_t rep_seed = 42;
  rep_cmd->add_option("--outdir", rep_outdir, "output directory")->required();
  rep_cmd->add_option("--seed", rep_seed, "base seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sim_config, sim_out, sim_seed, sim_format, out);
    if (*an_cmd) return cmd_analyze(an, out);
    if (*cal_cmd) return cmd_calibrate(cal_in, cal_heights, cal_out, cal_range, out);
    if (*doa_cmd) return cmd_doa(doa_in1, doa_in2, doa_delta, doa_f0, doa_outdir, out);
    if (*rep_cmd) return cmd_reproduce(rep_outdir, rep_seed, out, err);
  } catch (const Exit& e) {
    err << "dastank: " << e.message << "\n";
    return e.code;
  } catch (const ConfigError& e) {
    err << "dastank: " << e.what() << "\n";
    return kUsageError;
  } catch (const EstimationError& e) {
    err << "dastank: " << e.what() << "\n";
    return kEstimationFailure;
  } catch (const std::exception& e) {
    err << "dastank: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace dastank::cli
