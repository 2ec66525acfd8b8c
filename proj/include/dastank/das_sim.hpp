#pragma once

// Synthetic DAS strain records for a plane wave crossing a straight cable.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dastank/wavefield.hpp"

namespace dastank::sim {

struct CableGeometry {
  std::vector<double> channel_positions_m;  // arc length, strictly increasing
  double axis_angle_deg = 0.0;              // tank frame, anticlockwise positive
  std::array<double, 2> origin_xy_m{0.0, 0.0};

  /// `count` channels at start_m + i * spacing_m.
  static CableGeometry uniform(double start_m, double spacing_m, std::size_t count,
                               double axis_angle_deg = 0.0,
                               std::array<double, 2> origin_xy_m = {0.0, 0.0});

  /// Tank-frame coordinates of the point at arc length s.
  std::array<double, 2> position_xy(double arc_length_m) const;
  bool is_uniform(double tol_m = 1e-9) const;
  void validate() const;
};

enum class CouplingMode { kHeightProportional, kPressureAttenuated };

std::string to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(const std::string& s);

struct SimConfig {
  double sample_rate_hz = 2000.0;
  double duration_s = 120.0;
  double amplitude_scale = 1.0;  // strain units per metre of wave height
  double poisson_ratio = 0.25;
  // Relative amplitudes of the fundamental (index 0) and its integer harmonics.
  std::vector<double> harmonic_gains{1.0, 0.3, 0.1};
  double noise_rms = 0.01;
  std::uint64_t seed = 0;
  CouplingMode coupling_mode = CouplingMode::kHeightProportional;
  double gauge_length_m = 1.6;
  double pulse_width_m = 2.0;

  std::size_t sample_count() const;
  void validate() const;
};

/// Name of the pseudo-random construction used for the noise streams.
inline constexpr const char* kNoiseGenerator =
    "mt19937_64(splitmix64(seed, channel)) + Box-Muller (53-bit uniforms)";

struct DasRecord {
  double sample_rate_hz = 0.0;
  std::vector<double> channel_positions_m;
  double gauge_length_m = 1.6;
  double pulse_width_m = 2.0;
  double start_time_s = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> data;  // channel-major: data[ch * n_samples + i]

  std::size_t n_channels() const { return channel_positions_m.size(); }
  std::span<const double> channel(std::size_t ch) const;
  std::span<double> channel(std::size_t ch);
  double duration_s() const { return static_cast<double>(n_samples) / sample_rate_hz; }
  /// Index of the channel nearest to the given arc length.
  std::size_t nearest_channel(double arc_length_m) const;
  /// Indices of channels with lo <= position <= hi.
  std::vector<std::size_t> channels_in_range(double lo_m, double hi_m) const;
  void validate() const;
};

/// cos^2(theta) + nu sin^2(theta): axial strain directivity with a transverse floor.
double directional_sensitivity(double theta_rel_deg, double poisson_ratio);

/// Fundamental strain amplitude A seen by every channel.
double strain_amplitude(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                        const wavefield::TankEnvironment& env, const SimConfig& cfg);

/// Noise-free per-channel RMS, A * sqrt(sum(g_m^2) / 2).
double expected_signal_rms(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                           const wavefield::TankEnvironment& env, const SimConfig& cfg);

DasRecord synthesize_das(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                         const wavefield::TankEnvironment& env, const SimConfig& cfg);

}  // namespace dastank::sim
