#include "dastank/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "dastank/errors.hpp"

namespace dastank::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

// Direct-form II transposed biquad; a0 == 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

std::vector<Biquad> design_butterworth_lowpass(int order, double cutoff_hz, double fs) {
  const double warped = 2.0 * fs * std::tan(kPi * cutoff_hz / fs);
  const double two_fs = 2.0 * fs;
  auto bilinear = [&](std::complex<double> s) { return (1.0 + s / two_fs) / (1.0 - s / two_fs); };

  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double angle = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
    const std::complex<double> pole = bilinear(warped * std::polar(1.0, angle));
    Biquad q;
    q.a1 = -2.0 * pole.real();
    q.a2 = std::norm(pole);
    const double gain = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = gain;
    q.b1 = 2.0 * gain;
    q.b2 = gain;
    sections.push_back(q);
  }
  if (order % 2 == 1) {
    const double pole = bilinear(std::complex<double>(-warped, 0.0)).real();
    Biquad q;
    q.a1 = -pole;
    q.b0 = 0.5 * (1.0 - pole);
    q.b1 = q.b0;
    sections.push_back(q);
  }
  return sections;
}

// Runs the cascade in place, starting every section at the steady state it
// would reach for a constant input equal to x[0].
void filter_cascade(const std::vector<Biquad>& sections, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const Biquad& q : sections) {
    const double y_ss = q.dc_gain() * level;
    double z2 = q.b2 * level - q.a2 * y_ss;
    double z1 = q.b1 * level - q.a1 * y_ss + z2;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
    level = y_ss;
  }
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

}  // namespace

void TimeSeriesView::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw InvalidArgument("sample_rate_hz must be > 0");
  }
  if (samples.size() < 2) throw InvalidArgument("time series needs at least 2 samples");
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

TimeSeries lowpass(const TimeSeriesView& x, double cutoff_hz, const LowpassOptions& opt) {
  x.validate();
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * x.sample_rate_hz)) {
    throw InvalidArgument("lowpass cutoff must lie in (0, fs/2), got " + std::to_string(cutoff_hz));
  }
  if (opt.order < 1) throw InvalidArgument("lowpass order must be >= 1");

  const auto sections = design_butterworth_lowpass(opt.order, cutoff_hz, x.sample_rate_hz);
  const std::size_t n = x.samples.size();
  const std::size_t pad = std::min<std::size_t>(
      n - 1, static_cast<std::size_t>(std::ceil(10.0 * x.sample_rate_hz / cutoff_hz)));

  // Odd reflection about both end points keeps value and slope continuous.
  std::vector<double> buf(n + 2 * pad);
  const double first = x.samples.front();
  const double last = x.samples.back();
  for (std::size_t i = 0; i < pad; ++i) buf[i] = 2.0 * first - x.samples[pad - i];
  std::copy(x.samples.begin(), x.samples.end(), buf.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) buf[pad + n + i] = 2.0 * last - x.samples[n - 2 - i];

  filter_cascade(sections, buf);
  std::reverse(buf.begin(), buf.end());
  filter_cascade(sections, buf);
  std::reverse(buf.begin(), buf.end());

  TimeSeries out;
  out.sample_rate_hz = x.sample_rate_hz;
  out.samples.assign(buf.begin() + static_cast<std::ptrdiff_t>(pad),
                     buf.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

Psd welch_psd(const TimeSeriesView& x, double segment_s, double overlap_fraction) {
  x.validate();
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw InvalidArgument("overlap_fraction must lie in [0, 1)");
  }
  const double seg_samples = segment_s * x.sample_rate_hz;
  if (!(seg_samples >= 16.0)) throw InvalidArgument("Welch segment must span at least 16 samples");
  const auto nseg = static_cast<std::size_t>(std::llround(seg_samples));
  if (nseg > x.samples.size()) {
    throw InvalidArgument("record (" + std::to_string(x.samples.size()) +
                          " samples) is shorter than one Welch segment (" + std::to_string(nseg) + ")");
  }
  const auto overlap = static_cast<std::size_t>(std::floor(overlap_fraction * static_cast<double>(nseg)));
  const std::size_t hop = std::max<std::size_t>(1, nseg - overlap);
  const std::size_t nfreq = nseg / 2 + 1;

  const auto window = hann_window(nseg);
  const double window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);

  double* in = fftw_alloc_real(nseg);
  fftw_complex* out = fftw_alloc_complex(nfreq);
  FftwPlan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan.plan = fftw_plan_dft_r2c_1d(static_cast<int>(nseg), in, out, FFTW_ESTIMATE);
  }

  Psd psd;
  psd.power.assign(nfreq, 0.0);
  for (std::size_t start = 0; start + nseg <= x.samples.size(); start += hop) {
    const auto seg = x.samples.subspan(start, nseg);
    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(nseg);
    for (std::size_t i = 0; i < nseg; ++i) in[i] = (seg[i] - mean) * window[i];
    fftw_execute(plan.plan);
    for (std::size_t k = 0; k < nfreq; ++k) {
      psd.power[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    ++psd.segments;
  }
  fftw_free(in);
  fftw_free(out);

  const double scale = 1.0 / (x.sample_rate_hz * window_power * static_cast<double>(psd.segments));
  psd.resolution_hz = x.sample_rate_hz / static_cast<double>(nseg);
  psd.frequencies_hz.resize(nfreq);
  for (std::size_t k = 0; k < nfreq; ++k) {
    const bool unpaired = (k == 0) || (nseg % 2 == 0 && k == nseg / 2);
    psd.power[k] *= scale * (unpaired ? 1.0 : 2.0);
    psd.frequencies_hz[k] = static_cast<double>(k) * psd.resolution_hz;
  }
  return psd;
}

double integrate_psd(const Psd& psd) {
  return std::accumulate(psd.power.begin(), psd.power.end(), 0.0) * psd.resolution_hz;
}

std::vector<double> windowed_rms(const TimeSeriesView& x, double window_s) {
  if (!(x.sample_rate_hz > 0.0)) throw InvalidArgument("sample_rate_hz must be > 0");
  if (x.samples.empty()) throw InvalidArgument("windowed_rms needs a non-empty series");
  const double w = window_s * x.sample_rate_hz;
  if (!(w >= 1.0 - 1e-9)) throw InvalidArgument("RMS window must span at least one sample");
  const auto n = static_cast<std::size_t>(std::floor(w + 1e-9));

  std::vector<double> out;
  for (std::size_t start = 0; start + n <= x.samples.size(); start += n) {
    const auto win = x.samples.subspan(start, n);
    const double mean = std::accumulate(win.begin(), win.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : win) ss += (v - mean) * (v - mean);
    out.push_back(std::sqrt(ss / static_cast<double>(n)));
  }
  return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("pearson_correlation needs equal lengths");
  if (x.size() < 2) throw InvalidArgument("pearson_correlation needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("correlation is undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ComplexAmplitude complex_amplitude(const TimeSeriesView& x, double f0_hz) {
  x.validate();
  if (!(f0_hz > 0.0 && f0_hz < 0.5 * x.sample_rate_hz)) {
    throw InvalidArgument("analysis frequency must lie in (0, fs/2), got " + std::to_string(f0_hz));
  }
  const std::size_t n = x.samples.size();
  const auto window = hann_window(n);
  const double mean = std::accumulate(x.samples.begin(), x.samples.end(), 0.0) / static_cast<double>(n);
  const double wsum = std::accumulate(window.begin(), window.end(), 0.0);
  const double step = -2.0 * kPi * f0_hz / x.sample_rate_hz;

  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    acc += window[i] * (x.samples[i] - mean) * std::polar(1.0, step * static_cast<double>(i));
  }
  acc *= 2.0 / wsum;
  return {std::abs(acc), std::arg(acc)};
}

}  // namespace dastank::dsp
