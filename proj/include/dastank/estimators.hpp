#pragma once

// Wave period, wave height and direction-of-arrival estimators.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dastank/das_sim.hpp"
#include "dastank/dsp.hpp"

namespace dastank::est {

// ---------------------------------------------------------------- period

struct PeriodOptions {
  double f_min_hz = 0.05;
  double f_max_hz = 3.0;
  // Three-point parabolic refinement on log power around the peak bin.
  bool interpolate = true;
  // Peak must exceed this multiple of the in-band median power; <= 0 disables.
  double min_peak_to_median = 10.0;
};

struct PeriodEstimate {
  double period_s = 0.0;
  double peak_freq_hz = 0.0;
  double peak_power = 0.0;
  double peak_to_median = 0.0;
};

/// Period from the strongest in-band PSD peak (the fundamental is assumed to
/// dominate its harmonics). Throws NoPeakError / WeakPeakError.
PeriodEstimate estimate_period(const dsp::Psd& psd, const PeriodOptions& opt = {});
PeriodEstimate estimate_period(const dsp::Psd& psd, double f_min_hz, double f_max_hz);

// ---------------------------------------------------------------- height

struct DistributionStats {
  double median = 0.0;
  double iqr = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Percentile by linear interpolation between order statistics at rank
/// p (n - 1) (the "linear" / type-7 definition).
double percentile(std::span<const double> values, double p);
DistributionStats distribution_stats(std::span<const double> values);

/// 100 sqrt(mean(((pred - act) / act)^2)).
double rmspe(std::span<const double> predicted, std::span<const double> actual);

struct CalibrationPoint {
  double height_m = 0.0;
  double median_rms = 0.0;
  double iqr = 0.0;
  std::size_t n_values = 0;
};

struct HeightCalibration {
  double slope = 0.0;  // RMS strain per metre of height
  std::vector<CalibrationPoint> fit_points;
  double rmspe_percent = 0.0;

  void validate() const;
};

struct HeightSamples {
  double height_m = 0.0;
  std::vector<double> rms_values;
};

/// Zero-intercept least squares through the per-height medians. Samples that
/// share a height are pooled. Throws DegenerateFitError with < 2 distinct heights.
HeightCalibration fit_height_calibration(std::span<const HeightSamples> samples);

/// median(rms_values) / slope.
double estimate_height(const HeightCalibration& cal, std::span<const double> rms_values);

// ---------------------------------------------------------------- DOA

struct BeamSpectrum {
  std::vector<double> apparent_wavenumbers;  // rad/m, ascending
  std::vector<double> power;
  double peak_k_app = 0.0;  // continuous maximum refined around the grid argmax
  std::size_t peak_index = 0;
  double f0_hz = 0.0;
  double grid_step = 0.0;
  double median_power = 0.0;

  double apparent_wavelength_m() const;
  /// B(k) evaluated off-grid with the same channel amplitudes.
  double power_at(double k_app) const;

  // Channel phasors and positions kept for off-grid evaluation.
  std::vector<std::complex<double>> channel_phasors;
  std::vector<double> channel_positions_m;
};

struct BeamformOptions {
  double min_peak_to_median = 2.0;
  bool refine_peak = true;
};

/// Default scan: `points` wavenumbers at cell centres of (-pi/d, pi/d), d the
/// smallest channel spacing.
std::vector<double> default_k_grid(std::span<const double> channel_positions_m, std::size_t points = 2048);

/// Delay-and-sum over channels: B(k) = |sum_n a_n exp(+i k s_n)|^2 / N^2 where
/// a_n is the channel's complex amplitude at f0. A positive peak means the wave
/// travels toward increasing arc length.
BeamSpectrum beamform_apparent_wavenumber(const sim::DasRecord& rec, double f0_hz,
                                          std::span<const double> k_grid,
                                          std::span<const std::size_t> channels = {},
                                          const BeamformOptions& opt = {});

struct CurvePoint {
  double theta_deg = 0.0;
  double wavelength_m = 0.0;
};

/// theta grid of `step_deg` spacing strictly inside (-90, 90).
std::vector<double> default_theta_grid(double step_deg = 0.1);

/// lambda(theta) = (2 pi / |k_peak|) cos(theta): the (DOA, wavelength) pairs
/// consistent with one layout's apparent wavenumber.
std::vector<CurvePoint> wavelength_doa_curve(const BeamSpectrum& spectrum, std::span<const double> theta_grid_deg);
std::vector<CurvePoint> wavelength_doa_curve(double apparent_wavelength_m, std::span<const double> theta_grid_deg);

struct DoaCandidate {
  double doa_c1_deg = 0.0;
  double doa_c2_deg = 0.0;
  double wavelength_m = 0.0;
  double beam_power = -1.0;  // summed normalised beam power; < 0 when not evaluated
};

struct DoaEstimate {
  double doa_c1_deg = 0.0;
  double doa_c2_deg = 0.0;
  double wavelength_m = 0.0;
  double apparent_wavelength_c1_m = 0.0;
  double apparent_wavelength_c2_m = 0.0;
  double delta_deg = 0.0;
  // True when the mirror candidate could not be ruled out by beam power.
  bool ambiguity_flag = false;
  DoaCandidate chosen;
  DoaCandidate mirror;

  /// lambda / T, the derived phase velocity.
  double phase_velocity_mps(double period_s) const { return wavelength_m / period_s; }
};

/// Closed-form intersection of lambda_app1 cos(theta) = lambda_app2 cos(theta + delta).
/// With both spectra the mirror candidate (theta -> -theta - delta) is scored
/// by summed beam power; without spectra ambiguity_flag is set.
DoaEstimate solve_dual_layout(double lambda_app_c1_m, double lambda_app_c2_m, double delta_deg,
                              const BeamSpectrum* spectrum_c1 = nullptr,
                              const BeamSpectrum* spectrum_c2 = nullptr);

}  // namespace dastank::est
