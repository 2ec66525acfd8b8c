#include "dastank/wavefield.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dastank/errors.hpp"

namespace dastank::wavefield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

void TankEnvironment::validate() const {
  if (!(depth_m > 0.0) || !std::isfinite(depth_m)) {
    throw InvalidArgument("depth_m must be > 0, got " + std::to_string(depth_m));
  }
  if (!(gravity_mps2 > 0.0) || !std::isfinite(gravity_mps2)) {
    throw InvalidArgument("gravity_mps2 must be > 0, got " + std::to_string(gravity_mps2));
  }
}

double solve_dispersion(double period_s, const TankEnvironment& env) {
  if (!(period_s > 0.0) || !std::isfinite(period_s)) {
    throw InvalidArgument("period_s must be > 0, got " + std::to_string(period_s));
  }
  env.validate();

  const double omega = kTwoPi / period_s;
  const double omega2 = omega * omega;
  const double g = env.gravity_mps2;
  const double h = env.depth_m;
  auto f = [&](double k) { return g * k * std::tanh(k * h) - omega2; };

  // f is strictly increasing in k. The deep-water root w^2/g is an upper
  // bound (tanh < 1) and the shallow-water root w/sqrt(g h) a lower bound
  // (tanh(x) < x), so both bracket the solution for any depth.
  double lo = std::min(omega / std::sqrt(g * h), omega2 / g) * 0.5;
  double hi = std::max(omega / std::sqrt(g * h), omega2 / g) * 2.0;
  while (f(hi) < 0.0) hi *= 2.0;
  while (f(lo) > 0.0) lo *= 0.5;

  for (int iter = 0; iter < 400 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return kTwoPi / (0.5 * (lo + hi));
}

WaveSpec WaveSpec::make(double height_m, double period_s, double doa_deg,
                        const TankEnvironment& env, double phase_rad) {
  WaveSpec w;
  w.height_m = height_m;
  w.period_s = period_s;
  w.doa_deg = doa_deg;
  w.phase_rad = phase_rad;
  w.wavelength_m = solve_dispersion(period_s, env);
  w.validate();
  return w;
}

double WaveSpec::angular_frequency() const { return kTwoPi / period_s; }

double WaveSpec::wavenumber() const { return kTwoPi / wavelength_m; }

void WaveSpec::validate() const {
  if (!(height_m > 0.0) || !std::isfinite(height_m)) {
    throw InvalidArgument("height_m must be > 0, got " + std::to_string(height_m));
  }
  if (!(period_s > 0.0) || !std::isfinite(period_s)) {
    throw InvalidArgument("period_s must be > 0, got " + std::to_string(period_s));
  }
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
    throw InvalidArgument("wavelength_m must be > 0; build WaveSpec through WaveSpec::make");
  }
  if (!(doa_deg > -180.0 && doa_deg <= 180.0)) {
    throw InvalidArgument("doa_deg must lie in (-180, 180], got " + std::to_string(doa_deg));
  }
  if (!std::isfinite(phase_rad)) throw InvalidArgument("phase_rad must be finite");
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

double surface_elevation(const WaveSpec& wave, double x_m, double y_m, double t_s) {
  wave.validate();
  const double a = wave.doa_deg * std::numbers::pi / 180.0;
  const double arg = wave.wavenumber() * (x_m * std::cos(a) + y_m * std::sin(a)) -
                     wave.angular_frequency() * t_s + wave.phase_rad;
  return 0.5 * wave.height_m * std::cos(arg);
}

}  // namespace dastank::wavefield
