#pragma once

// Linear wave theory for a monochromatic plane wave in a tank of finite depth.

namespace dastank::wavefield {

inline constexpr double kStandardGravity = 9.80665;

struct TankEnvironment {
  double depth_m = 4.5;
  double gravity_mps2 = kStandardGravity;

  void validate() const;
};

/// Returns the wavelength (m) solving w^2 = g k tanh(k h) for w = 2 pi / period.
/// Bracketed bisection on k; throws InvalidArgument for non-positive period,
/// depth or gravity.
double solve_dispersion(double period_s, const TankEnvironment& env);

/// One monochromatic plane wave. Construct through `make`, which caches the
/// wavelength from the dispersion relation.
struct WaveSpec {
  double height_m = 0.30;
  double period_s = 2.5;
  double doa_deg = -20.0;  // tank frame, anticlockwise positive, in (-180, 180]
  double wavelength_m = 0.0;
  double phase_rad = 0.0;

  static WaveSpec make(double height_m, double period_s, double doa_deg,
                       const TankEnvironment& env, double phase_rad = 0.0);

  double angular_frequency() const;
  double wavenumber() const;
  void validate() const;
};

/// Wraps an angle to (-180, 180].
double wrap_degrees(double deg);

/// Surface elevation (H/2) cos(k (x cos a + y sin a) - w t + phi) at tank
/// coordinates (x, y) and time t.
double surface_elevation(const WaveSpec& wave, double x_m, double y_m, double t_s);

}  // namespace dastank::wavefield
