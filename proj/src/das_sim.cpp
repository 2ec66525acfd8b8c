#include "dastank/das_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "dastank/errors.hpp"

namespace dastank::sim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Standard normal deviates from raw mt19937_64 output. std::normal_distribution
// is implementation-defined, so the transform is spelled out here.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t channel)
      : engine_(splitmix64(seed ^ splitmix64(channel + 1))) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * kScale;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * kScale;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

CableGeometry CableGeometry::uniform(double start_m, double spacing_m, std::size_t count,
                                     double axis_angle_deg, std::array<double, 2> origin_xy_m) {
  CableGeometry g;
  g.channel_positions_m.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    g.channel_positions_m[i] = start_m + static_cast<double>(i) * spacing_m;
  }
  g.axis_angle_deg = axis_angle_deg;
  g.origin_xy_m = origin_xy_m;
  return g;
}

std::array<double, 2> CableGeometry::position_xy(double s) const {
  const double a = axis_angle_deg * kDegToRad;
  return {origin_xy_m[0] + s * std::cos(a), origin_xy_m[1] + s * std::sin(a)};
}

bool CableGeometry::is_uniform(double tol_m) const {
  if (channel_positions_m.size() < 2) return true;
  const double d0 = channel_positions_m[1] - channel_positions_m[0];
  for (std::size_t i = 2; i < channel_positions_m.size(); ++i) {
    if (std::abs(channel_positions_m[i] - channel_positions_m[i - 1] - d0) > tol_m) return false;
  }
  return true;
}

void CableGeometry::validate() const {
  if (channel_positions_m.size() < 2) throw InvalidArgument("geometry needs at least 2 channels");
  for (std::size_t i = 0; i < channel_positions_m.size(); ++i) {
    if (!std::isfinite(channel_positions_m[i])) throw InvalidArgument("channel position not finite");
    if (i > 0 && !(channel_positions_m[i] > channel_positions_m[i - 1])) {
      throw InvalidArgument("channel positions must be strictly increasing");
    }
  }
  if (!std::isfinite(axis_angle_deg)) throw InvalidArgument("axis_angle_deg must be finite");
}

std::string to_string(CouplingMode mode) {
  return mode == CouplingMode::kHeightProportional ? "height-proportional" : "pressure-attenuated";
}

CouplingMode coupling_mode_from_string(const std::string& s) {
  if (s == "height-proportional") return CouplingMode::kHeightProportional;
  if (s == "pressure-attenuated") return CouplingMode::kPressureAttenuated;
  throw InvalidArgument("unknown coupling mode '" + s +
                        "' (expected height-proportional or pressure-attenuated)");
}

std::size_t SimConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

void SimConfig::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw InvalidArgument("sample_rate_hz must be > 0");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw InvalidArgument("duration_s must be > 0");
  if (sample_count() < 2) throw InvalidArgument("duration_s * sample_rate_hz must give >= 2 samples");
  if (!(amplitude_scale > 0.0) || !std::isfinite(amplitude_scale)) {
    throw InvalidArgument("amplitude_scale must be > 0");
  }
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw InvalidArgument("poisson_ratio must lie in [0, 0.5)");
  }
  if (harmonic_gains.empty() || harmonic_gains[0] != 1.0) {
    throw InvalidArgument("harmonic_gains[0] is the fundamental and must equal 1");
  }
  for (double g : harmonic_gains) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("harmonic_gains must be >= 0");
  }
  if (!(noise_rms >= 0.0) || !std::isfinite(noise_rms)) throw InvalidArgument("noise_rms must be >= 0");
  if (!(gauge_length_m > 0.0) || !(pulse_width_m > 0.0)) {
    throw InvalidArgument("gauge_length_m and pulse_width_m must be > 0");
  }
}

std::span<const double> DasRecord::channel(std::size_t ch) const {
  return std::span<const double>(data).subspan(ch * n_samples, n_samples);
}

std::span<double> DasRecord::channel(std::size_t ch) {
  return std::span<double>(data).subspan(ch * n_samples, n_samples);
}

std::size_t DasRecord::nearest_channel(double arc_length_m) const {
  if (channel_positions_m.empty()) throw InvalidArgument("record has no channels");
  std::size_t best = 0;
  for (std::size_t i = 1; i < channel_positions_m.size(); ++i) {
    if (std::abs(channel_positions_m[i] - arc_length_m) <
        std::abs(channel_positions_m[best] - arc_length_m)) {
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> DasRecord::channels_in_range(double lo_m, double hi_m) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < channel_positions_m.size(); ++i) {
    if (channel_positions_m[i] >= lo_m && channel_positions_m[i] <= hi_m) out.push_back(i);
  }
  return out;
}

void DasRecord::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw InvalidArgument("record sample_rate_hz must be > 0");
  }
  if (channel_positions_m.empty()) throw InvalidArgument("record has no channels");
  if (data.size() != channel_positions_m.size() * n_samples) {
    throw InvalidArgument("record data size does not match channels x samples");
  }
  for (std::size_t i = 1; i < channel_positions_m.size(); ++i) {
    if (!(channel_positions_m[i] > channel_positions_m[i - 1])) {
      throw InvalidArgument("record channel positions must be strictly increasing");
    }
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw InvalidArgument("record contains non-finite samples");
  }
}

double directional_sensitivity(double theta_rel_deg, double poisson_ratio) {
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw InvalidArgument("poisson_ratio must lie in [0, 0.5)");
  }
  const double c = std::cos(theta_rel_deg * kDegToRad);
  const double s = std::sin(theta_rel_deg * kDegToRad);
  return c * c + poisson_ratio * s * s;
}

double strain_amplitude(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                        const wavefield::TankEnvironment& env, const SimConfig& cfg) {
  const double theta_rel = wave.doa_deg - geom.axis_angle_deg;
  double a = cfg.amplitude_scale * wave.height_m * directional_sensitivity(theta_rel, cfg.poisson_ratio);
  if (cfg.coupling_mode == CouplingMode::kPressureAttenuated) {
    a /= std::cosh(wave.wavenumber() * env.depth_m);
  }
  return a;
}

double expected_signal_rms(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                           const wavefield::TankEnvironment& env, const SimConfig& cfg) {
  double sum_sq = 0.0;
  for (double g : cfg.harmonic_gains) sum_sq += g * g;
  return strain_amplitude(wave, geom, env, cfg) * std::sqrt(0.5 * sum_sq);
}

DasRecord synthesize_das(const wavefield::WaveSpec& wave, const CableGeometry& geom,
                         const wavefield::TankEnvironment& env, const SimConfig& cfg) {
  wave.validate();
  geom.validate();
  env.validate();
  cfg.validate();

  const double top_freq = static_cast<double>(cfg.harmonic_gains.size()) / wave.period_s;
  if (top_freq >= 0.5 * cfg.sample_rate_hz) {
    throw ConfigError("sim.sample_rate_hz",
                      "highest synthesized harmonic (" + std::to_string(top_freq) +
                          " Hz) is at or above Nyquist");
  }

  DasRecord rec;
  rec.sample_rate_hz = cfg.sample_rate_hz;
  rec.channel_positions_m = geom.channel_positions_m;
  rec.gauge_length_m = cfg.gauge_length_m;
  rec.pulse_width_m = cfg.pulse_width_m;
  rec.start_time_s = 0.0;
  rec.n_samples = cfg.sample_count();
  rec.data.assign(rec.n_channels() * rec.n_samples, 0.0);

  const double amp = strain_amplitude(wave, geom, env, cfg);
  const double k = wave.wavenumber();
  const double omega = wave.angular_frequency();
  const double doa = wave.doa_deg * kDegToRad;
  const double ux = std::cos(doa);
  const double uy = std::sin(doa);
  const double dt = 1.0 / cfg.sample_rate_hz;

  auto fill_channel = [&](std::size_t ch) {
    const auto p = geom.position_xy(geom.channel_positions_m[ch]);
    const double psi = k * (p[0] * ux + p[1] * uy) + wave.phase_rad;
    auto out = rec.channel(ch);
    for (std::size_t i = 0; i < rec.n_samples; ++i) {
      const double arg = psi - omega * (static_cast<double>(i) * dt);
      double v = 0.0;
      for (std::size_t m = 0; m < cfg.harmonic_gains.size(); ++m) {
        if (cfg.harmonic_gains[m] != 0.0) {
          v += cfg.harmonic_gains[m] * std::cos(static_cast<double>(m + 1) * arg);
        }
      }
      out[i] = amp * v;
    }
    if (cfg.noise_rms > 0.0) {
      GaussianStream noise(cfg.seed, ch);
      for (double& v : out) v += cfg.noise_rms * noise.next();
    }
  };

  // Channels are independent; each noise stream depends only on (seed, channel).
  const std::size_t n_ch = rec.n_channels();
  const std::size_t n_threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::min<std::size_t>(n_ch, 8));
  std::vector<std::jthread> workers;
  workers.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t ch = t; ch < n_ch; ch += n_threads) fill_channel(ch);
    });
  }
  workers.clear();
  return rec;
}

}  // namespace dastank::sim
