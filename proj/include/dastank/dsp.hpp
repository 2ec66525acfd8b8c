#pragma once

// Signal-processing primitives shared by the estimators.

#include <complex>
#include <span>
#include <vector>

namespace dastank::dsp {

/// Non-owning view of a uniformly sampled real series.
struct TimeSeriesView {
  double sample_rate_hz = 0.0;
  std::span<const double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  void validate() const;
};

struct TimeSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;

  TimeSeriesView view() const { return {sample_rate_hz, samples}; }
  operator TimeSeriesView() const { return view(); }
};

struct Psd {
  std::vector<double> frequencies_hz;
  std::vector<double> power;  // one-sided density, units^2 / Hz
  double resolution_hz = 0.0;
  std::size_t segments = 0;
};

struct LowpassOptions {
  // Butterworth order of one pass; the forward-backward cascade doubles it.
  int order = 12;
};

/// Zero-phase Butterworth low-pass (forward-backward second-order sections,
/// odd-reflection padding and steady-state initial conditions).
TimeSeries lowpass(const TimeSeriesView& x, double cutoff_hz, const LowpassOptions& opt = {});

/// Welch PSD with a periodic Hann taper and per-segment mean removal.
Psd welch_psd(const TimeSeriesView& x, double segment_s = 60.0, double overlap_fraction = 0.5);

/// Integral of the PSD over its full frequency range (trapezoid-free bin sum).
double integrate_psd(const Psd& psd);

/// RMS of consecutive non-overlapping windows, each mean-removed; the
/// trailing partial window is dropped.
std::vector<double> windowed_rms(const TimeSeriesView& x, double window_s);

/// Sample Pearson correlation. Throws UndefinedCorrelationError for constant input.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct ComplexAmplitude {
  double amplitude = 0.0;
  double phase_rad = 0.0;

  std::complex<double> phasor() const { return std::polar(amplitude, phase_rad); }
};

/// Hann-tapered projection onto exp(-i 2 pi f0 t), t = n / fs, scaled so that
/// A cos(2 pi f0 t + phi) returns (A, phi).
ComplexAmplitude complex_amplitude(const TimeSeriesView& x, double f0_hz);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

}  // namespace dastank::dsp
