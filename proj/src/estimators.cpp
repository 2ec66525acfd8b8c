#include "dastank/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>

#include "dastank/errors.hpp"

namespace dastank::est {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

double median_of(std::vector<double> v) { return percentile(v, 0.5); }

}  // namespace

// ---------------------------------------------------------------- period

PeriodEstimate estimate_period(const dsp::Psd& psd, const PeriodOptions& opt) {
  if (!(opt.f_min_hz > 0.0) || !(opt.f_max_hz > opt.f_min_hz)) {
    throw InvalidArgument("period band must satisfy 0 < f_min < f_max");
  }
  if (psd.frequencies_hz.size() != psd.power.size()) throw InvalidArgument("malformed PSD");

  std::size_t lo = psd.frequencies_hz.size();
  std::size_t hi = 0;
  for (std::size_t i = 0; i < psd.frequencies_hz.size(); ++i) {
    if (psd.frequencies_hz[i] >= opt.f_min_hz && psd.frequencies_hz[i] <= opt.f_max_hz) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  if (lo > hi) throw NoPeakError("no PSD bins inside the analysis band");

  const auto band_begin = psd.power.begin() + static_cast<std::ptrdiff_t>(lo);
  const auto band_end = psd.power.begin() + static_cast<std::ptrdiff_t>(hi + 1);
  const auto peak_it = std::max_element(band_begin, band_end);
  if (!(*peak_it > 0.0)) throw NoPeakError("in-band PSD power is zero");
  const auto peak = static_cast<std::size_t>(peak_it - psd.power.begin());

  PeriodEstimate est;
  est.peak_power = *peak_it;
  const double med = median_of(std::vector<double>(band_begin, band_end));
  est.peak_to_median = med > 0.0 ? est.peak_power / med : std::numeric_limits<double>::infinity();
  if (opt.min_peak_to_median > 0.0 && est.peak_to_median <= opt.min_peak_to_median) {
    throw WeakPeakError("weak PSD peak: peak at " + std::to_string(psd.frequencies_hz[peak]) + " Hz is only " +
                        std::to_string(est.peak_to_median) + "x the in-band median (need > " +
                        std::to_string(opt.min_peak_to_median) + ")");
  }

  double freq = psd.frequencies_hz[peak];
  if (opt.interpolate && peak > 0 && peak + 1 < psd.power.size() && psd.power[peak - 1] > 0.0 &&
      psd.power[peak + 1] > 0.0) {
    const double l = std::log(psd.power[peak - 1]);
    const double c = std::log(psd.power[peak]);
    const double r = std::log(psd.power[peak + 1]);
    const double denom = l - 2.0 * c + r;
    if (denom < 0.0) {
      const double delta = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
      freq += delta * psd.resolution_hz;
    }
  }
  est.peak_freq_hz = freq;
  est.period_s = 1.0 / freq;
  return est;
}

PeriodEstimate estimate_period(const dsp::Psd& psd, double f_min_hz, double f_max_hz) {
  PeriodOptions opt;
  opt.f_min_hz = f_min_hz;
  opt.f_max_hz = f_max_hz;
  return estimate_period(psd, opt);
}

// ---------------------------------------------------------------- height

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw InvalidArgument("percentile of an empty list");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("percentile fraction must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double rank = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(rank));
  if (i + 1 >= v.size()) return v.back();
  const double frac = rank - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

DistributionStats distribution_stats(std::span<const double> values) {
  DistributionStats s;
  s.median = percentile(values, 0.5);
  s.q25 = percentile(values, 0.25);
  s.q75 = percentile(values, 0.75);
  s.iqr = s.q75 - s.q25;
  return s;
}

double rmspe(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw InvalidArgument("rmspe needs equal-length lists");
  if (actual.empty()) throw InvalidArgument("rmspe of empty lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw InvalidArgument("rmspe: actual value at index " + std::to_string(i) + " is zero");
    const double e = (predicted[i] - actual[i]) / actual[i];
    acc += e * e;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(actual.size()));
}

void HeightCalibration::validate() const {
  if (!(slope > 0.0) || !std::isfinite(slope)) throw InvalidArgument("calibration slope must be > 0");
  if (!(rmspe_percent >= 0.0)) throw InvalidArgument("calibration rmspe_percent must be >= 0");
}

HeightCalibration fit_height_calibration(std::span<const HeightSamples> samples) {
  std::map<double, std::vector<double>> pooled;
  for (const auto& s : samples) {
    if (!(s.height_m > 0.0) || !std::isfinite(s.height_m)) {
      throw InvalidArgument("calibration heights must be > 0");
    }
    if (s.rms_values.empty()) {
      throw InvalidArgument("height " + std::to_string(s.height_m) + " m has no RMS values");
    }
    auto& dst = pooled[s.height_m];
    dst.insert(dst.end(), s.rms_values.begin(), s.rms_values.end());
  }
  if (pooled.size() < 2) {
    throw DegenerateFitError("calibration needs at least 2 distinct heights, got " +
                             std::to_string(pooled.size()));
  }

  HeightCalibration cal;
  double shm = 0.0;
  double shh = 0.0;
  for (const auto& [h, values] : pooled) {
    const auto st = distribution_stats(values);
    cal.fit_points.push_back({h, st.median, st.iqr, values.size()});
    shm += h * st.median;
    shh += h * h;
  }
  cal.slope = shm / shh;
  if (!(cal.slope > 0.0)) throw DegenerateFitError("fitted calibration slope is not positive");

  std::vector<double> predicted;
  std::vector<double> actual;
  for (const auto& p : cal.fit_points) {
    predicted.push_back(cal.slope * p.height_m);
    actual.push_back(p.median_rms);
  }
  cal.rmspe_percent = rmspe(predicted, actual);
  return cal;
}

double estimate_height(const HeightCalibration& cal, std::span<const double> rms_values) {
  cal.validate();
  if (rms_values.empty()) throw InvalidArgument("estimate_height needs at least one RMS value");
  return percentile(rms_values, 0.5) / cal.slope;
}

// ---------------------------------------------------------------- DOA

double BeamSpectrum::apparent_wavelength_m() const {
  if (peak_k_app == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * kPi / std::abs(peak_k_app);
}

double BeamSpectrum::power_at(double k_app) const {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < channel_phasors.size(); ++n) {
    acc += channel_phasors[n] * std::polar(1.0, k_app * channel_positions_m[n]);
  }
  const double nn = static_cast<double>(channel_phasors.size());
  return std::norm(acc) / (nn * nn);
}

std::vector<double> default_k_grid(std::span<const double> positions, std::size_t points) {
  if (positions.size() < 2) throw InvalidArgument("k grid needs at least 2 channel positions");
  if (points < 3) throw InvalidArgument("k grid needs at least 3 points");
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < positions.size(); ++i) d = std::min(d, positions[i] - positions[i - 1]);
  const double kmax = kPi / d;
  const double step = 2.0 * kmax / static_cast<double>(points);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = -kmax + (static_cast<double>(i) + 0.5) * step;
  return grid;
}

BeamSpectrum beamform_apparent_wavenumber(const sim::DasRecord& rec, double f0_hz,
                                          std::span<const double> k_grid,
                                          std::span<const std::size_t> channels,
                                          const BeamformOptions& opt) {
  std::vector<std::size_t> chans(channels.begin(), channels.end());
  if (chans.empty()) {
    chans.resize(rec.n_channels());
    std::iota(chans.begin(), chans.end(), std::size_t{0});
  }
  if (chans.size() < 4) {
    throw InvalidArgument("beamforming needs at least 4 channels, got " + std::to_string(chans.size()));
  }
  if (!(f0_hz > 0.0 && f0_hz < 0.5 * rec.sample_rate_hz)) {
    throw InvalidArgument("beamforming frequency must lie in (0, fs/2)");
  }
  if (k_grid.size() < 3) throw InvalidArgument("k grid needs at least 3 points");
  for (std::size_t i = 1; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > k_grid[i - 1])) throw InvalidArgument("k grid must be strictly ascending");
  }

  BeamSpectrum bs;
  bs.f0_hz = f0_hz;
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < chans.size(); ++i) {
    if (chans[i] >= rec.n_channels()) throw InvalidArgument("channel index out of range");
    const double s = rec.channel_positions_m[chans[i]];
    if (i > 0) spacing = std::min(spacing, s - bs.channel_positions_m.back());
    bs.channel_positions_m.push_back(s);
  }
  if (!(spacing > 0.0)) throw InvalidArgument("beamforming channels must have increasing positions");
  const double k_nyquist = kPi / spacing;
  if (std::abs(k_grid.front()) >= k_nyquist || std::abs(k_grid.back()) >= k_nyquist) {
    throw InvalidArgument("k grid reaches the spatial Nyquist limit pi/spacing = " + std::to_string(k_nyquist) +
                          " rad/m (spatial aliasing)");
  }

  for (std::size_t ch : chans) {
    bs.channel_phasors.push_back(
        dsp::complex_amplitude({rec.sample_rate_hz, rec.channel(ch)}, f0_hz).phasor());
  }

  bs.apparent_wavenumbers.assign(k_grid.begin(), k_grid.end());
  bs.power.resize(k_grid.size());
  for (std::size_t i = 0; i < k_grid.size(); ++i) bs.power[i] = bs.power_at(k_grid[i]);
  bs.grid_step = (k_grid.back() - k_grid.front()) / static_cast<double>(k_grid.size() - 1);

  bs.peak_index = static_cast<std::size_t>(std::max_element(bs.power.begin(), bs.power.end()) - bs.power.begin());
  bs.peak_k_app = k_grid[bs.peak_index];
  bs.median_power = median_of(bs.power);
  const double peak_power = bs.power[bs.peak_index];
  if (!(peak_power > opt.min_peak_to_median * bs.median_power)) {
    throw WeakPeakError("weak beam peak: power " + std::to_string(peak_power) + " is not above " +
                        std::to_string(opt.min_peak_to_median) + "x the median beam power " +
                        std::to_string(bs.median_power));
  }

  if (opt.refine_peak) {
    // Golden-section search on the continuous beam pattern between the
    // neighbouring grid points.
    double a = k_grid[bs.peak_index == 0 ? 0 : bs.peak_index - 1];
    double b = k_grid[std::min(bs.peak_index + 1, k_grid.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = bs.power_at(c);
    double fd = bs.power_at(d);
    for (int iter = 0; iter < 200 && (b - a) > 1e-12; ++iter) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = bs.power_at(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = bs.power_at(d);
      }
    }
    const double k_refined = 0.5 * (a + b);
    if (bs.power_at(k_refined) >= peak_power) bs.peak_k_app = k_refined;
  }
  return bs;
}

std::vector<double> default_theta_grid(double step_deg) {
  if (!(step_deg > 0.0 && step_deg < 90.0)) throw InvalidArgument("theta step must lie in (0, 90) degrees");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((90.0 - 1e-9) / step_deg));
  for (long i = -n; i <= n; ++i) grid.push_back(static_cast<double>(i) * step_deg);
  return grid;
}

std::vector<CurvePoint> wavelength_doa_curve(double apparent_wavelength_m, std::span<const double> theta_grid_deg) {
  if (!(apparent_wavelength_m > 0.0) || !std::isfinite(apparent_wavelength_m)) {
    throw DegenerateCurveError("apparent wavelength is unbounded (zero apparent wavenumber)");
  }
  std::vector<CurvePoint> out;
  out.reserve(theta_grid_deg.size());
  for (double th : theta_grid_deg) {
    if (!(th > -90.0 && th < 90.0)) throw InvalidArgument("theta grid must lie strictly inside (-90, 90)");
    out.push_back({th, apparent_wavelength_m * std::cos(th * kDegToRad)});
  }
  return out;
}

std::vector<CurvePoint> wavelength_doa_curve(const BeamSpectrum& spectrum, std::span<const double> theta_grid_deg) {
  const double tol = spectrum.grid_step > 0.0 ? 0.5 * spectrum.grid_step : 0.0;
  if (std::abs(spectrum.peak_k_app) <= tol) {
    throw DegenerateCurveError("beam peak at k_app = " + std::to_string(spectrum.peak_k_app) +
                               " rad/m is indistinguishable from zero; apparent wavelength is unbounded");
  }
  return wavelength_doa_curve(spectrum.apparent_wavelength_m(), theta_grid_deg);
}

DoaEstimate solve_dual_layout(double lambda_app_c1_m, double lambda_app_c2_m, double delta_deg,
                              const BeamSpectrum* spectrum_c1, const BeamSpectrum* spectrum_c2) {
  if (!(lambda_app_c1_m > 0.0) || !(lambda_app_c2_m > 0.0) || !std::isfinite(lambda_app_c1_m) ||
      !std::isfinite(lambda_app_c2_m)) {
    throw InvalidArgument("apparent wavelengths must be finite and > 0");
  }
  if (!(std::abs(delta_deg) > 0.0 && std::abs(delta_deg) < 90.0)) {
    throw InvalidArgument("layout difference delta_deg must satisfy 0 < |delta| < 90");
  }
  auto inconsistent = [&](const std::string& why) {
    return InconsistentLayoutsError("inconsistent layouts (apparent wavelengths " + std::to_string(lambda_app_c1_m) +
                                        " m and " + std::to_string(lambda_app_c2_m) + " m): " + why,
                                    lambda_app_c1_m, lambda_app_c2_m);
  };
  if (spectrum_c1 && spectrum_c2 && (spectrum_c1->peak_k_app > 0.0) != (spectrum_c2->peak_k_app > 0.0)) {
    throw inconsistent("beam peaks travel in opposite senses along the two cables");
  }

  const double d = delta_deg * kDegToRad;
  const double theta = std::atan((lambda_app_c2_m * std::cos(d) - lambda_app_c1_m) / (lambda_app_c2_m * std::sin(d)));
  if (!(std::cos(theta) > 0.0 && std::cos(theta + d) > 0.0)) {
    throw inconsistent("no DOA in (-90, 90) deg keeps both cosines positive");
  }

  DoaEstimate est;
  est.apparent_wavelength_c1_m = lambda_app_c1_m;
  est.apparent_wavelength_c2_m = lambda_app_c2_m;
  est.delta_deg = delta_deg;
  est.chosen.doa_c1_deg = theta * kRadToDeg;
  est.chosen.doa_c2_deg = est.chosen.doa_c1_deg + delta_deg;
  est.chosen.wavelength_m = lambda_app_c1_m * std::cos(theta);

  const double mirror_theta = -theta - d;
  est.mirror.doa_c1_deg = -est.chosen.doa_c1_deg - delta_deg;
  est.mirror.doa_c2_deg = est.mirror.doa_c1_deg + delta_deg;
  est.mirror.wavelength_m = lambda_app_c1_m * std::cos(mirror_theta);

  const bool mirror_distinct = std::abs(est.mirror.doa_c1_deg - est.chosen.doa_c1_deg) > 1e-9;
  if (spectrum_c1 && spectrum_c2) {
    auto score = [&](const DoaCandidate& c) {
      const double k = 2.0 * kPi / c.wavelength_m;
      const double s1 = spectrum_c1->peak_k_app >= 0.0 ? 1.0 : -1.0;
      const double s2 = spectrum_c2->peak_k_app >= 0.0 ? 1.0 : -1.0;
      const double p1 = spectrum_c1->power_at(s1 * k * std::cos(c.doa_c1_deg * kDegToRad)) /
                        spectrum_c1->power_at(spectrum_c1->peak_k_app);
      const double p2 = spectrum_c2->power_at(s2 * k * std::cos(c.doa_c2_deg * kDegToRad)) /
                        spectrum_c2->power_at(spectrum_c2->peak_k_app);
      return p1 + p2;
    };
    est.chosen.beam_power = score(est.chosen);
    est.mirror.beam_power = score(est.mirror);
    if (est.mirror.beam_power > est.chosen.beam_power + 1e-9) std::swap(est.chosen, est.mirror);
    est.ambiguity_flag = mirror_distinct && std::abs(est.chosen.beam_power - est.mirror.beam_power) <= 1e-6;
  } else {
    est.ambiguity_flag = mirror_distinct;
  }

  est.doa_c1_deg = est.chosen.doa_c1_deg;
  est.doa_c2_deg = est.chosen.doa_c2_deg;
  est.wavelength_m = est.chosen.wavelength_m;
  return est;
}

}  // namespace dastank::est
