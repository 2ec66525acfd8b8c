#include "dastank/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dastank/errors.hpp"

namespace dastank::pipeline {

namespace {

std::uint64_t condition_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + (index + 1) * 0xD1B54A32D192ED03ULL;
  x ^= x >> 29;
  x *= 0xBF58476D1CE4E5B9ULL;
  return x ^ (x >> 32);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

}  // namespace

std::vector<std::size_t> select_channels(const sim::DasRecord& rec, const ChannelSelection& sel) {
  if (sel.channel_x_m && sel.range_m) throw InvalidArgument("select either a channel position or a range, not both");
  if (sel.channel_x_m) return {rec.nearest_channel(*sel.channel_x_m)};
  if (sel.range_m) {
    auto chans = rec.channels_in_range((*sel.range_m)[0], (*sel.range_m)[1]);
    if (chans.empty()) {
      throw InvalidArgument("no channels within " + fmt((*sel.range_m)[0]) + ":" + fmt((*sel.range_m)[1]) + " m");
    }
    return chans;
  }
  std::vector<std::size_t> all(rec.n_channels());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

dsp::Psd channel_psd(const sim::DasRecord& rec, const std::vector<std::size_t>& channels,
                     const io::AnalysisConfig& cfg) {
  if (channels.empty()) throw InvalidArgument("no channels selected");
  dsp::Psd acc;
  for (std::size_t ch : channels) {
    auto psd = dsp::welch_psd({rec.sample_rate_hz, rec.channel(ch)}, cfg.welch_segment_s, cfg.welch_overlap);
    if (acc.power.empty()) {
      acc = std::move(psd);
    } else {
      for (std::size_t k = 0; k < acc.power.size(); ++k) acc.power[k] += psd.power[k];
    }
  }
  for (double& p : acc.power) p /= static_cast<double>(channels.size());
  return acc;
}

PeriodAnalysis analyze_period(const sim::DasRecord& rec, const ChannelSelection& sel, const io::AnalysisConfig& cfg) {
  PeriodAnalysis out;
  out.channels = select_channels(rec, sel);
  out.psd = channel_psd(rec, out.channels, cfg);
  est::PeriodOptions opt;
  opt.f_min_hz = cfg.band_hz[0];
  opt.f_max_hz = cfg.band_hz[1];
  opt.min_peak_to_median = cfg.min_peak_to_median;
  out.estimate = est::estimate_period(out.psd, opt);
  return out;
}

std::vector<RmsSample> pooled_rms(const sim::DasRecord& rec, const std::vector<std::size_t>& channels,
                                  const io::AnalysisConfig& cfg) {
  std::vector<RmsSample> out;
  for (std::size_t ch : channels) {
    std::vector<double> values;
    if (cfg.rms_lowpass_hz > 0.0) {
      const auto filtered = dsp::lowpass({rec.sample_rate_hz, rec.channel(ch)}, cfg.rms_lowpass_hz);
      values = dsp::windowed_rms(filtered, cfg.rms_window_s);
    } else {
      values = dsp::windowed_rms({rec.sample_rate_hz, rec.channel(ch)}, cfg.rms_window_s);
    }
    for (std::size_t w = 0; w < values.size(); ++w) {
      out.push_back({rec.channel_positions_m[ch], rec.start_time_s + static_cast<double>(w) * cfg.rms_window_s,
                     values[w]});
    }
  }
  return out;
}

std::vector<double> rms_values(const std::vector<RmsSample>& samples) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.rms);
  return v;
}

DoaAnalysis analyze_doa(const sim::DasRecord& rec_c1, const sim::DasRecord& rec_c2, double delta_deg,
                        std::optional<double> f0_hz, const io::AnalysisConfig& cfg) {
  if (rec_c1.sample_rate_hz != rec_c2.sample_rate_hz) {
    throw InvalidArgument("the two layouts must share the sampling frequency");
  }
  if (!(std::abs(delta_deg) > 0.0 && std::abs(delta_deg) < 90.0)) {
    throw InvalidArgument("delta_deg must satisfy 0 < |delta| < 90");
  }
  DoaAnalysis out;
  if (f0_hz) {
    out.f0_hz = *f0_hz;
  } else {
    out.f0_hz = analyze_period(rec_c1, {cfg.channel_x_m, std::nullopt}, cfg).estimate.peak_freq_hz;
  }

  const ChannelSelection range{std::nullopt, cfg.channel_range_m};
  const auto ch1 = select_channels(rec_c1, range);
  const auto ch2 = select_channels(rec_c2, range);
  auto positions = [](const sim::DasRecord& r, const std::vector<std::size_t>& ch) {
    std::vector<double> p;
    for (std::size_t c : ch) p.push_back(r.channel_positions_m[c]);
    return p;
  };
  const auto grid1 = est::default_k_grid(positions(rec_c1, ch1), cfg.k_grid_points);
  const auto grid2 = est::default_k_grid(positions(rec_c2, ch2), cfg.k_grid_points);
  out.spectrum_c1 = est::beamform_apparent_wavenumber(rec_c1, out.f0_hz, grid1, ch1);
  out.spectrum_c2 = est::beamform_apparent_wavenumber(rec_c2, out.f0_hz, grid2, ch2);
  out.theta_grid_deg = est::default_theta_grid(cfg.theta_step_deg);

  // Degenerate (zero apparent wavenumber) layouts are reported through the curve check.
  (void)est::wavelength_doa_curve(out.spectrum_c1, out.theta_grid_deg);
  (void)est::wavelength_doa_curve(out.spectrum_c2, out.theta_grid_deg);

  out.estimate = est::solve_dual_layout(out.spectrum_c1.apparent_wavelength_m(),
                                        out.spectrum_c2.apparent_wavelength_m(), delta_deg, &out.spectrum_c1,
                                        &out.spectrum_c2);
  return out;
}

// ---------------------------------------------------------------- reproduce

std::vector<std::string> ReproduceSummary::failures() const {
  std::vector<std::string> f;
  for (const auto& c : conditions) {
    if (!c.pass) {
      f.push_back("period H=" + fmt(c.height_m) + " T=" + fmt(c.period_s) + " DOA=" + fmt(c.doa_rel_deg) +
                  ": error " + fmt(c.period_error_percent) + "%");
    }
  }
  for (const auto& g : calibrations) {
    if (!g.pass) {
      f.push_back("height linearity T=" + fmt(g.period_s) + " DOA=" + fmt(g.doa_rel_deg) + ": RMSPE " +
                  fmt(g.calibration.rmspe_percent) + "%");
    }
  }
  for (const auto& g : period_independence) {
    if (!g.pass) {
      f.push_back("period independence H=" + fmt(g.height_m) + " DOA=" + fmt(g.doa_rel_deg) + ": " +
                  fmt(g.difference_percent) + "%");
    }
  }
  for (const auto& g : directionality) {
    if (!g.pass) {
      f.push_back("directionality H=" + fmt(g.height_m) + " T=" + fmt(g.period_s) + ": ratio " +
                  fmt(g.observed_ratio) + " vs model " + fmt(g.model_ratio));
    }
  }
  for (const auto& g : doa) {
    if (!g.pass) {
      f.push_back("DOA H=" + fmt(g.height_m) + " T=" + fmt(g.period_s) + ": errors " + fmt(g.error_c1_deg) + "/" +
                  fmt(g.error_c2_deg) + " deg, wavelength " + fmt(g.wavelength_error_percent) + "%");
    }
  }
  return f;
}

ReproduceSummary reproduce(const ReproduceOptions& opt, const ReproduceSinks& sinks) {
  const auto& base = opt.base;
  const auto& acfg = base.analysis;
  const double delta = opt.doa_c2_deg - opt.doa_c1_deg;
  const std::array<double, 2> layouts{opt.doa_c1_deg, opt.doa_c2_deg};

  struct PairJob {
    double height;
    double period;
  };
  std::vector<PairJob> jobs;
  for (double t : opt.periods_s) {
    for (double h : opt.heights_m) jobs.push_back({h, t});
  }

  ReproduceSummary summary;
  summary.conditions.resize(jobs.size() * 2);
  summary.doa.resize(jobs.size());
  std::mutex sink_mutex;
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto run_pair = [&](std::size_t j) {
    const auto& job = jobs[j];
    std::array<sim::DasRecord, 2> records;
    for (std::size_t l = 0; l < 2; ++l) {
      const std::size_t idx = 2 * j + l;
      // The wave travels along the tank x axis; the cable is rotated so that
      // the cable-relative DOA equals the layout angle.
      const auto wave = wavefield::WaveSpec::make(job.height, job.period, 0.0, base.environment, base.wave.phase_rad);
      auto geom = base.geometry;
      geom.axis_angle_deg = -layouts[l];
      auto cfg = base.sim;
      cfg.seed = condition_seed(opt.seed, idx);
      cfg.noise_rms = opt.noise_fraction * sim::expected_signal_rms(wave, geom, base.environment, cfg);
      records[l] = sim::synthesize_das(wave, geom, base.environment, cfg);

      auto& c = summary.conditions[idx];
      c.height_m = job.height;
      c.period_s = job.period;
      c.doa_rel_deg = layouts[l];
      c.seed = cfg.seed;

      const auto period = analyze_period(records[l], {acfg.channel_x_m, std::nullopt}, acfg);
      c.estimated_period_s = period.estimate.period_s;
      c.period_error_percent = 100.0 * std::abs(c.estimated_period_s - job.period) / job.period;
      c.pass = c.period_error_percent <= opt.thresholds.period_error_percent;

      const auto rms = pooled_rms(records[l], select_channels(records[l], {std::nullopt, acfg.channel_range_m}), acfg);
      const auto stats = est::distribution_stats(rms_values(rms));
      c.median_rms = stats.median;
      c.iqr_rms = stats.iqr;

      if (sinks.on_condition) {
        std::ostringstream tag;
        tag << "H" << std::lround(job.height * 100) << "cm_T" << job.period << "s_DOA" << layouts[l];
        std::lock_guard lock(sink_mutex);
        sinks.on_condition({tag.str(), &records[l], &period.psd, &rms});
      }
    }

    auto& g = summary.doa[j];
    g.height_m = job.height;
    g.period_s = job.period;
    g.true_wavelength_m = wavefield::solve_dispersion(job.period, base.environment);
    const auto doa = analyze_doa(records[0], records[1], delta, std::nullopt, acfg);
    g.estimate = doa.estimate;
    g.error_c1_deg = std::abs(doa.estimate.doa_c1_deg - opt.doa_c1_deg);
    g.error_c2_deg = std::abs(doa.estimate.doa_c2_deg - opt.doa_c2_deg);
    g.wavelength_error_percent = 100.0 * std::abs(doa.estimate.wavelength_m - g.true_wavelength_m) / g.true_wavelength_m;
    g.pass = g.error_c1_deg <= opt.thresholds.doa_error_deg && g.error_c2_deg <= opt.thresholds.doa_error_deg &&
             g.wavelength_error_percent <= opt.thresholds.wavelength_error_percent;
    if (sinks.on_pair) {
      std::ostringstream tag;
      tag << "H" << std::lround(job.height * 100) << "cm_T" << job.period << "s";
      std::lock_guard lock(sink_mutex);
      sinks.on_pair({tag.str(), &doa});
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_workers = std::min<unsigned>(opt.workers ? opt.workers : std::min(3u, hw),
                                                static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          try {
            run_pair(j);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  auto find = [&](double h, double t, double d) -> ConditionResult& {
    for (auto& c : summary.conditions) {
      if (c.height_m == h && c.period_s == t && c.doa_rel_deg == d) return c;
    }
    throw std::logic_error("missing condition");
  };

  for (double t : opt.periods_s) {
    for (double d : layouts) {
      std::vector<est::HeightSamples> samples;
      for (double h : opt.heights_m) samples.push_back({h, {find(h, t, d).median_rms}});
      CalibrationGroup g;
      g.period_s = t;
      g.doa_rel_deg = d;
      g.calibration = est::fit_height_calibration(samples);
      g.pass = g.calibration.rmspe_percent <= opt.thresholds.rmspe_percent;
      for (double h : opt.heights_m) {
        auto& c = find(h, t, d);
        const std::array<double, 1> v{c.median_rms};
        c.estimated_height_m = est::estimate_height(g.calibration, v);
        c.height_error_percent = 100.0 * std::abs(c.estimated_height_m - h) / h;
      }
      summary.calibrations.push_back(std::move(g));
    }
  }

  if (opt.periods_s.size() >= 2) {
    const double t_short = *std::min_element(opt.periods_s.begin(), opt.periods_s.end());
    const double t_long = *std::max_element(opt.periods_s.begin(), opt.periods_s.end());
    for (double h : opt.heights_m) {
      for (double d : layouts) {
        PeriodIndependenceGroup g;
        g.height_m = h;
        g.doa_rel_deg = d;
        g.median_short = find(h, t_short, d).median_rms;
        g.median_long = find(h, t_long, d).median_rms;
        g.difference_percent =
            100.0 * std::abs(g.median_short - g.median_long) / std::min(g.median_short, g.median_long);
        g.pass = g.difference_percent <= opt.thresholds.period_independence_percent;
        summary.period_independence.push_back(g);
      }
    }
  }

  const double model_ratio = sim::directional_sensitivity(opt.doa_c2_deg, base.sim.poisson_ratio) /
                             sim::directional_sensitivity(opt.doa_c1_deg, base.sim.poisson_ratio);
  for (double t : opt.periods_s) {
    for (double h : opt.heights_m) {
      DirectionalityGroup g;
      g.height_m = h;
      g.period_s = t;
      g.model_ratio = model_ratio;
      g.observed_ratio = find(h, t, opt.doa_c2_deg).median_rms / find(h, t, opt.doa_c1_deg).median_rms;
      // The layout nearer the cable axis must see the larger strain.
      const bool ordered = (std::abs(opt.doa_c2_deg) < std::abs(opt.doa_c1_deg)) == (g.observed_ratio > 1.0);
      g.pass = ordered && std::abs(g.observed_ratio / model_ratio - 1.0) <= opt.thresholds.directionality_ratio_tolerance;
      summary.directionality.push_back(g);
    }
  }

  summary.all_pass = summary.failures().empty();
  return summary;
}

io::json to_json(const ReproduceSummary& s) {
  io::json j;
  j["all_pass"] = s.all_pass;
  j["conditions"] = io::json::array();
  for (const auto& c : s.conditions) {
    j["conditions"].push_back({{"height_m", c.height_m},
                               {"period_s", c.period_s},
                               {"doa_rel_deg", c.doa_rel_deg},
                               {"seed", c.seed},
                               {"estimated_period_s", c.estimated_period_s},
                               {"period_error_percent", c.period_error_percent},
                               {"median_rms", c.median_rms},
                               {"iqr_rms", c.iqr_rms},
                               {"estimated_height_m", c.estimated_height_m},
                               {"height_error_percent", c.height_error_percent},
                               {"pass", c.pass}});
  }
  j["height_calibrations"] = io::json::array();
  for (const auto& g : s.calibrations) {
    j["height_calibrations"].push_back(
        {{"period_s", g.period_s}, {"doa_rel_deg", g.doa_rel_deg}, {"calibration", io::to_json(g.calibration)}, {"pass", g.pass}});
  }
  j["period_independence"] = io::json::array();
  for (const auto& g : s.period_independence) {
    j["period_independence"].push_back({{"height_m", g.height_m},
                                        {"doa_rel_deg", g.doa_rel_deg},
                                        {"median_rms_short", g.median_short},
                                        {"median_rms_long", g.median_long},
                                        {"difference_percent", g.difference_percent},
                                        {"pass", g.pass}});
  }
  j["directionality"] = io::json::array();
  for (const auto& g : s.directionality) {
    j["directionality"].push_back({{"height_m", g.height_m},
                                   {"period_s", g.period_s},
                                   {"observed_ratio", g.observed_ratio},
                                   {"model_ratio", g.model_ratio},
                                   {"pass", g.pass}});
  }
  j["doa"] = io::json::array();
  for (const auto& g : s.doa) {
    j["doa"].push_back({{"height_m", g.height_m},
                        {"period_s", g.period_s},
                        {"true_wavelength_m", g.true_wavelength_m},
                        {"estimate", io::to_json(g.estimate)},
                        {"error_c1_deg", g.error_c1_deg},
                        {"error_c2_deg", g.error_c2_deg},
                        {"wavelength_error_percent", g.wavelength_error_percent},
                        {"pass", g.pass}});
  }
  return j;
}

}  // namespace dastank::pipeline
