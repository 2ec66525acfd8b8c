#pragma once

// End-to-end workflows shared by the command line, the Python module and the
// acceptance suite.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dastank/das_sim.hpp"
#include "dastank/dsp.hpp"
#include "dastank/estimators.hpp"
#include "dastank/io.hpp"

namespace dastank::pipeline {

/// Channels used by an analysis: either the one nearest a position or all in a range.
struct ChannelSelection {
  std::optional<double> channel_x_m;
  std::optional<std::array<double, 2>> range_m;
};

std::vector<std::size_t> select_channels(const sim::DasRecord& rec, const ChannelSelection& sel);

struct PeriodAnalysis {
  std::vector<std::size_t> channels;
  dsp::Psd psd;  // averaged over the selected channels
  est::PeriodEstimate estimate;
};

/// Welch PSD of the selected channels (averaged) and the period estimate.
/// The PSD is filled before estimation so it is available even when the
/// estimator throws; use `channel_psd` to get it on its own.
dsp::Psd channel_psd(const sim::DasRecord& rec, const std::vector<std::size_t>& channels,
                     const io::AnalysisConfig& cfg);
PeriodAnalysis analyze_period(const sim::DasRecord& rec, const ChannelSelection& sel, const io::AnalysisConfig& cfg);

struct RmsSample {
  double channel_m = 0.0;
  double window_start_s = 0.0;
  double rms = 0.0;
};

/// Windowed RMS pooled over the selected channels, after the optional low-pass.
std::vector<RmsSample> pooled_rms(const sim::DasRecord& rec, const std::vector<std::size_t>& channels,
                                  const io::AnalysisConfig& cfg);
std::vector<double> rms_values(const std::vector<RmsSample>& samples);

struct DoaAnalysis {
  double f0_hz = 0.0;
  est::BeamSpectrum spectrum_c1;
  est::BeamSpectrum spectrum_c2;
  std::vector<double> theta_grid_deg;
  est::DoaEstimate estimate;
};

/// Beamforms both layouts at f0 (default: fundamental of record 1) over the
/// analysis channel range and solves for (DOA, wavelength).
DoaAnalysis analyze_doa(const sim::DasRecord& rec_c1, const sim::DasRecord& rec_c2, double delta_deg,
                        std::optional<double> f0_hz, const io::AnalysisConfig& cfg);

// ---------------------------------------------------------------- reproduce

struct Thresholds {
  double period_error_percent = 1.0;
  double rmspe_percent = 2.0;
  double period_independence_percent = 10.0;
  double directionality_ratio_tolerance = 0.10;
  double doa_error_deg = 1.5;
  double wavelength_error_percent = 5.0;
};

struct ConditionResult {
  double height_m = 0.0;
  double period_s = 0.0;
  double doa_rel_deg = 0.0;
  std::uint64_t seed = 0;
  double estimated_period_s = 0.0;
  double period_error_percent = 0.0;
  double median_rms = 0.0;
  double iqr_rms = 0.0;
  double estimated_height_m = 0.0;
  double height_error_percent = 0.0;
  bool pass = false;
};

struct CalibrationGroup {
  double period_s = 0.0;
  double doa_rel_deg = 0.0;
  est::HeightCalibration calibration;
  bool pass = false;
};

struct PeriodIndependenceGroup {
  double height_m = 0.0;
  double doa_rel_deg = 0.0;
  double median_short = 0.0;  // T = 1.25 s
  double median_long = 0.0;   // T = 2.5 s
  double difference_percent = 0.0;
  bool pass = false;
};

struct DirectionalityGroup {
  double height_m = 0.0;
  double period_s = 0.0;
  double observed_ratio = 0.0;
  double model_ratio = 0.0;
  bool pass = false;
};

struct DoaGroup {
  double height_m = 0.0;
  double period_s = 0.0;
  double true_wavelength_m = 0.0;
  est::DoaEstimate estimate;
  double error_c1_deg = 0.0;
  double error_c2_deg = 0.0;
  double wavelength_error_percent = 0.0;
  bool pass = false;
};

struct ReproduceOptions {
  std::uint64_t seed = 42;
  double noise_fraction = 0.10;  // noise RMS relative to the per-record signal RMS
  io::RunConfig base;            // environment, geometry spacing, sim and analysis defaults
  Thresholds thresholds;
  std::vector<double> heights_m{0.15, 0.30, 0.40};
  std::vector<double> periods_s{1.25, 2.5};
  double doa_c1_deg = -20.0;
  double doa_c2_deg = -5.0;
  unsigned workers = 0;  // 0 = auto
};

struct ReproduceSummary {
  std::vector<ConditionResult> conditions;
  std::vector<CalibrationGroup> calibrations;
  std::vector<PeriodIndependenceGroup> period_independence;
  std::vector<DirectionalityGroup> directionality;
  std::vector<DoaGroup> doa;
  bool all_pass = false;

  std::vector<std::string> failures() const;
};

/// Per-condition plot data, handed to `sink` as the grid runs (may be empty).
struct ConditionArtifacts {
  std::string tag;
  const sim::DasRecord* record = nullptr;
  const dsp::Psd* psd = nullptr;
  const std::vector<RmsSample>* rms = nullptr;
};
struct PairArtifacts {
  std::string tag;
  const DoaAnalysis* doa = nullptr;
};

struct ReproduceSinks {
  std::function<void(const ConditionArtifacts&)> on_condition;
  std::function<void(const PairArtifacts&)> on_pair;
};

/// Simulates the heights x periods x {C1, C2} grid and runs all estimators.
ReproduceSummary reproduce(const ReproduceOptions& opt, const ReproduceSinks& sinks = {});

/// JSON digest of a summary (used for summary.json).
io::json to_json(const ReproduceSummary& s);

}  // namespace dastank::pipeline
