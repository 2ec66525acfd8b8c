#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dastank/das_sim.hpp"
#include "dastank/dsp.hpp"
#include "dastank/errors.hpp"
#include "dastank/estimators.hpp"
#include "support.hpp"

using namespace dastank;
using namespace dastank::est;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

dsp::Psd tone_psd(double f_hz, double fs = 50.0, double duration_s = 120.0) {
  const auto x = testing::tone(1.0, f_hz, fs, duration_s, 0.3);
  return dsp::welch_psd({fs, x}, 60.0, 0.5);
}

// Plane wave of wavelength lambda at cable-relative angle theta, sampled at
// `positions` along a straight cable.
sim::DasRecord plane_wave(double lambda, double theta_deg, double f0, std::vector<double> positions,
                          double fs = 20.0, double duration_s = 30.0) {
  sim::DasRecord r;
  r.sample_rate_hz = fs;
  r.channel_positions_m = std::move(positions);
  r.n_samples = static_cast<std::size_t>(fs * duration_s);
  r.data.resize(r.n_channels() * r.n_samples);
  const double k = 2.0 * kPi / lambda * std::cos(theta_deg * kDeg);
  for (std::size_t ch = 0; ch < r.n_channels(); ++ch) {
    auto out = r.channel(ch);
    for (std::size_t i = 0; i < r.n_samples; ++i)
      out[i] = std::cos(k * r.channel_positions_m[ch] - 2.0 * kPi * f0 * static_cast<double>(i) / fs);
  }
  return r;
}

std::vector<double> uniform_positions(double start, double dx, std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = start + dx * static_cast<double>(i);
  return p;
}

}  // namespace

// ---------------------------------------------------------------- period

TEST_CASE("period from PSD peaks at the tank frequencies") {
  // Peaks at 0.403 and 0.793 Hz lie between 1/60 Hz bins; interpolation recovers them.
  const auto a = estimate_period(tone_psd(0.403), 0.05, 3.0);
  CHECK(a.period_s == doctest::Approx(2.48).epsilon(0.002));
  CHECK(a.peak_freq_hz == doctest::Approx(0.403).epsilon(0.002));
  const auto b = estimate_period(tone_psd(0.793), 0.05, 3.0);
  CHECK(b.period_s == doctest::Approx(1.26).epsilon(0.002));
}

TEST_CASE("pure 1 Hz tone") {
  const auto psd = tone_psd(1.0);
  const auto e = estimate_period(psd, 0.05, 3.0);
  CHECK(std::abs(e.peak_freq_hz - 1.0) < psd.resolution_hz);
  CHECK(e.period_s == doctest::Approx(1.0).epsilon(0.02));
  PeriodOptions raw;
  raw.interpolate = false;
  CHECK(estimate_period(psd, raw).peak_freq_hz == doctest::Approx(1.0));
}

TEST_CASE("period estimator ignores PSD scale") {
  auto psd = tone_psd(0.55);
  const auto a = estimate_period(psd);
  for (double c : {1e-9, 3.0, 1e6}) {
    auto scaled = psd;
    for (double& v : scaled.power) v *= c;
    const auto b = estimate_period(scaled);
    CHECK(b.period_s == doctest::Approx(a.period_s).epsilon(1e-12));
    CHECK(b.peak_freq_hz == doctest::Approx(a.peak_freq_hz).epsilon(1e-12));
  }
}

TEST_CASE("fundamental beats weaker harmonics") {
  auto x = testing::tone(1.0, 0.4, 50.0, 120.0);
  const auto h2 = testing::tone(0.3, 0.8, 50.0, 120.0);
  const auto h3 = testing::tone(0.1, 1.2, 50.0, 120.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += h2[i] + h3[i];
  CHECK(estimate_period(dsp::welch_psd({50.0, x})).period_s == doctest::Approx(2.5).epsilon(1e-3));
}

TEST_CASE("period estimator failures") {
  dsp::Psd zero = tone_psd(0.4);
  std::fill(zero.power.begin(), zero.power.end(), 0.0);
  CHECK_THROWS_AS(estimate_period(zero), NoPeakError);
  CHECK_THROWS_AS(estimate_period(tone_psd(0.4), 30.0, 40.0), NoPeakError);
  CHECK_THROWS_AS(estimate_period(tone_psd(0.4), 0.0, 3.0), InvalidArgument);
  CHECK_THROWS_AS(estimate_period(tone_psd(0.4), 2.0, 1.0), InvalidArgument);

  const auto noise = testing::white_noise(6000, 1.0, 17);
  CHECK_THROWS_AS(estimate_period(dsp::welch_psd({50.0, noise})), WeakPeakError);
}

// ---------------------------------------------------------------- statistics

TEST_CASE("distribution stats") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = distribution_stats(v);
  CHECK(s.median == 3.0);
  CHECK(s.iqr == 2.0);
  CHECK(s.q25 == 2.0);
  CHECK(s.q75 == 4.0);

  const auto one = distribution_stats(std::vector<double>{7.5});
  CHECK(one.median == 7.5);
  CHECK(one.iqr == 0.0);

  // Type-7 interpolation: {1, 2, 3, 4} has median 2.5 and quartiles 1.75 / 3.25.
  const auto four = distribution_stats(std::vector<double>{4, 1, 3, 2});
  CHECK(four.median == doctest::Approx(2.5));
  CHECK(four.iqr == doctest::Approx(1.5));

  std::vector<double> r = testing::white_noise(101, 1.0, 4);
  const auto base = distribution_stats(r);
  std::mt19937 gen(1);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(r.begin(), r.end(), gen);
    const auto p = distribution_stats(r);
    CHECK(p.median == base.median);
    CHECK(p.iqr == base.iqr);
  }
  CHECK_THROWS_AS(distribution_stats(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("rmspe") {
  const std::vector<double> a{1.0, 2.0, 4.0};
  CHECK(rmspe(a, a) == 0.0);
  CHECK(rmspe(std::vector<double>{1.1, 2.2, 4.4}, a) == doctest::Approx(10.0));
  CHECK(rmspe(std::vector<double>{9.0, 11.0}, std::vector<double>{10.0, 10.0}) == doctest::Approx(10.0));
  CHECK_THROWS_AS(rmspe(std::vector<double>{1.0}, std::vector<double>{0.0}), InvalidArgument);
  CHECK_THROWS_AS(rmspe(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), InvalidArgument);
}

// ---------------------------------------------------------------- height

TEST_CASE("height calibration on exact lines") {
  const std::vector<HeightSamples> line{{0.1, {0.2}}, {0.5, {1.0}}, {0.7, {1.4}}};
  const auto cal = fit_height_calibration(line);
  CHECK(cal.slope == doctest::Approx(2.0));
  CHECK(cal.rmspe_percent == doctest::Approx(0.0).scale(1e-12));
  REQUIRE(cal.fit_points.size() == 3);

  for (double c : {0.01, 1.0, 37.0}) {
    const std::vector<HeightSamples> s{{0.15, {0.15 * c}}, {0.30, {0.30 * c}}, {0.40, {0.40 * c}}};
    CHECK(fit_height_calibration(s).slope == doctest::Approx(c));
  }
}

TEST_CASE("calibration homogeneity") {
  const std::vector<HeightSamples> s{{0.15, {0.14, 0.16, 0.15}}, {0.30, {0.31, 0.33}}, {0.40, {0.38, 0.41, 0.40}}};
  const auto a = fit_height_calibration(s);
  auto scaled = s;
  for (auto& h : scaled)
    for (double& v : h.rms_values) v *= 4.0;
  const auto b = fit_height_calibration(scaled);
  CHECK(b.slope == doctest::Approx(4.0 * a.slope));
  CHECK(b.rmspe_percent == doctest::Approx(a.rmspe_percent));
  // Slope = sum(h m) / sum(h^2) over per-height medians.
  const double expect = (0.15 * 0.15 + 0.30 * 0.32 + 0.40 * 0.40) / (0.15 * 0.15 + 0.30 * 0.30 + 0.40 * 0.40);
  CHECK(a.slope == doctest::Approx(expect));
}

TEST_CASE("samples sharing a height are pooled") {
  const std::vector<HeightSamples> s{{0.2, {1.0}}, {0.2, {2.0, 3.0}}, {0.4, {4.0}}};
  const auto cal = fit_height_calibration(s);
  REQUIRE(cal.fit_points.size() == 2);
  CHECK(cal.fit_points[0].median_rms == doctest::Approx(2.0));
  CHECK(cal.fit_points[0].n_values == 3);
}

TEST_CASE("degenerate calibration") {
  CHECK_THROWS_AS(fit_height_calibration(std::vector<HeightSamples>{{0.3, {1.0}}}), DegenerateFitError);
  CHECK_THROWS_AS(fit_height_calibration(std::vector<HeightSamples>{{0.3, {1.0}}, {0.3, {2.0}}}),
                  DegenerateFitError);
  CHECK_THROWS_AS(fit_height_calibration(std::vector<HeightSamples>{{0.3, {1.0}}, {0.4, {}}}), InvalidArgument);
}

TEST_CASE("height estimation") {
  HeightCalibration unit;
  unit.slope = 1.0;
  CHECK(estimate_height(unit, std::vector<double>(12, 0.15)) == doctest::Approx(0.15));
  CHECK(estimate_height(unit, std::vector<double>{1.0, 2.0, 100.0}) == doctest::Approx(2.0));

  // Round trip on exactly linear medians.
  const std::vector<HeightSamples> s{{0.15, {0.3, 0.3}}, {0.30, {0.6}}, {0.40, {0.8}}};
  const auto cal = fit_height_calibration(s);
  for (const auto& h : s) CHECK(estimate_height(cal, h.rms_values) == doctest::Approx(h.height_m));
}

TEST_CASE("height recovered from a noiseless simulation") {
  const wavefield::TankEnvironment env;
  const auto geom = sim::CableGeometry::uniform(161.65, 0.8, 4);
  sim::SimConfig cfg;
  cfg.sample_rate_hz = 50.0;
  cfg.noise_rms = 0.0;
  auto rms_at = [&](double h) {
    const auto rec = sim::synthesize_das(wavefield::WaveSpec::make(h, 2.5, -20.0, env), geom, env, cfg);
    return dsp::windowed_rms({rec.sample_rate_hz, rec.channel(1)}, 10.0);
  };
  const std::vector<HeightSamples> s{{0.15, rms_at(0.15)}, {0.40, rms_at(0.40)}};
  const auto cal = fit_height_calibration(s);
  CHECK(estimate_height(cal, rms_at(0.30)) == doctest::Approx(0.30).epsilon(0.05));
}

// ---------------------------------------------------------------- beamforming

TEST_CASE("default grids") {
  const auto pos = uniform_positions(0.0, 0.8, 18);
  const auto k = default_k_grid(pos);
  REQUIRE(k.size() == 2048);
  CHECK(k.front() > -kPi / 0.8);
  CHECK(k.back() < kPi / 0.8);
  CHECK(k[1] - k[0] == doctest::Approx(2.0 * kPi / 0.8 / 2048.0));

  const auto th = default_theta_grid();
  CHECK(th.front() > -90.0);
  CHECK(th.back() < 90.0);
  CHECK(th[1] - th[0] == doctest::Approx(0.1));
}

TEST_CASE("axial plane wave peaks at 2 pi / lambda") {
  const auto rec = plane_wave(10.0, 0.0, 0.4, uniform_positions(0.0, 0.8, 18));
  const auto grid = default_k_grid(rec.channel_positions_m);
  const auto b = beamform_apparent_wavenumber(rec, 0.4, grid);
  CHECK(std::abs(b.peak_k_app - 2.0 * kPi / 10.0) <= b.grid_step);
  CHECK(b.apparent_wavelength_m() == doctest::Approx(10.0).epsilon(0.01));
  CHECK(b.f0_hz == 0.4);
  for (double p : b.power) CHECK(p >= 0.0);
  CHECK(b.peak_k_app >= grid.front());
  CHECK(b.peak_k_app <= grid.back());
  CHECK(b.power_at(b.peak_k_app) == doctest::Approx(1.0).epsilon(1e-3));

  // Travelling the other way flips the sign of the peak.
  const auto back = plane_wave(10.0, 180.0, 0.4, uniform_positions(0.0, 0.8, 18));
  CHECK(beamform_apparent_wavenumber(back, 0.4, grid).peak_k_app == doctest::Approx(-b.peak_k_app).epsilon(1e-6));
}

TEST_CASE("oblique plane wave matches a per-channel phase fit") {
  const auto rec = plane_wave(5.0, 60.0, 0.4, uniform_positions(3.0, 0.8, 18));
  const auto b = beamform_apparent_wavenumber(rec, 0.4, default_k_grid(rec.channel_positions_m));
  CHECK(std::abs(b.peak_k_app) == doctest::Approx(0.6283185307179586).epsilon(1e-3));
  CHECK(b.apparent_wavelength_m() == doctest::Approx(10.0).epsilon(1e-3));

  // Least-squares slope of unwrapped channel phase against position.
  std::vector<double> ph;
  for (std::size_t ch = 0; ch < rec.n_channels(); ++ch)
    ph.push_back(dsp::complex_amplitude({rec.sample_rate_hz, rec.channel(ch)}, 0.4).phase_rad);
  for (std::size_t i = 1; i < ph.size(); ++i) {
    while (ph[i] - ph[i - 1] > kPi) ph[i] -= 2.0 * kPi;
    while (ph[i] - ph[i - 1] < -kPi) ph[i] += 2.0 * kPi;
  }
  const auto& s = rec.channel_positions_m;
  const double n = static_cast<double>(s.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < s.size(); ++i) sx += s[i], sy += ph[i], sxx += s[i] * s[i], sxy += s[i] * ph[i];
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(b.peak_k_app) == doctest::Approx(std::abs(slope)).epsilon(1e-4));
}

TEST_CASE("broadside wave has no usable apparent wavenumber") {
  const auto rec = plane_wave(5.0, 90.0, 0.4, uniform_positions(0.0, 0.8, 18));
  const auto b = beamform_apparent_wavenumber(rec, 0.4, default_k_grid(rec.channel_positions_m));
  CHECK(std::abs(b.peak_k_app) <= 0.5 * b.grid_step);
  CHECK_THROWS_AS(wavelength_doa_curve(b, default_theta_grid()), DegenerateCurveError);
}

TEST_CASE("beam power is invariant to translating the array") {
  const auto a = plane_wave(7.0, 25.0, 0.4, uniform_positions(0.0, 0.8, 12));
  auto shifted_pos = a.channel_positions_m;
  for (double& p : shifted_pos) p += 123.4;
  auto b = a;
  b.channel_positions_m = shifted_pos;
  const auto grid = default_k_grid(a.channel_positions_m);
  const auto ba = beamform_apparent_wavenumber(a, 0.4, grid);
  const auto bb = beamform_apparent_wavenumber(b, 0.4, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(bb.power[i] == doctest::Approx(ba.power[i]).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("beamformer argument checks") {
  const auto rec = plane_wave(10.0, 0.0, 0.4, uniform_positions(0.0, 0.8, 18));
  const std::vector<double> aliased{-4.0, 0.0, 4.0};  // pi / 0.8 = 3.93
  CHECK_THROWS_AS(beamform_apparent_wavenumber(rec, 0.4, aliased), InvalidArgument);
  CHECK_THROWS_AS(beamform_apparent_wavenumber(rec, 0.0, default_k_grid(rec.channel_positions_m)), InvalidArgument);
  const auto three = plane_wave(10.0, 0.0, 0.4, uniform_positions(0.0, 0.8, 3));
  CHECK_THROWS_AS(beamform_apparent_wavenumber(three, 0.4, default_k_grid(three.channel_positions_m)),
                  InvalidArgument);

  // One live channel among silent ones gives a flat beam.
  auto lone = rec;
  for (std::size_t ch = 1; ch < lone.n_channels(); ++ch)
    for (double& v : lone.channel(ch)) v = 0.0;
  CHECK_THROWS_AS(beamform_apparent_wavenumber(lone, 0.4, default_k_grid(lone.channel_positions_m)), WeakPeakError);
}

// ---------------------------------------------------------------- curves and dual layout

TEST_CASE("wavelength-DOA curve") {
  const std::vector<double> th{-60.0, -21.4, 0.0, 21.4, 60.0};
  const auto c = wavelength_doa_curve(9.10, th);
  REQUIRE(c.size() == th.size());
  CHECK(c[2].wavelength_m == doctest::Approx(9.10));
  CHECK(c[0].wavelength_m == doctest::Approx(c[4].wavelength_m));
  CHECK(c[1].wavelength_m == doctest::Approx(c[3].wavelength_m));
  CHECK(c[1].wavelength_m == doctest::Approx(8.47).epsilon(0.001));
  CHECK_THROWS_AS(wavelength_doa_curve(9.10, std::vector<double>{90.0}), InvalidArgument);
}

TEST_CASE("closed-form dual-layout solve") {
  const auto eq = solve_dual_layout(8.0, 8.0, 15.0);
  CHECK(eq.doa_c1_deg == doctest::Approx(-7.5));
  CHECK(eq.doa_c2_deg == doctest::Approx(7.5));
  // The mirror of the bisecting solution is itself.
  CHECK_FALSE(eq.ambiguity_flag);

  const auto tank = solve_dual_layout(9.10, 8.53, 15.0);
  CHECK(tank.doa_c1_deg == doctest::Approx(-21.297659883700884).epsilon(1e-9));
  CHECK(tank.wavelength_m == doctest::Approx(8.478525173135694).epsilon(1e-9));
  CHECK(std::abs(tank.doa_c1_deg - -21.4) <= 0.3);
  CHECK(std::abs(tank.wavelength_m - 8.47) <= 0.05);
  CHECK(tank.ambiguity_flag);
  CHECK(tank.apparent_wavelength_c1_m == 9.10);
  CHECK(tank.delta_deg == 15.0);

  const double lam = 6.0;
  const auto axial = solve_dual_layout(lam, lam / std::cos(15.0 * kDeg), 15.0);
  CHECK(axial.doa_c1_deg == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(axial.doa_c1_deg) < 1e-9);
  CHECK(axial.wavelength_m == doctest::Approx(lam));
  CHECK(axial.phase_velocity_mps(2.0) == doctest::Approx(3.0));
}

TEST_CASE("dual-layout output keeps the layout offset") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> lam(2.0, 15.0), delta(-80.0, 80.0);
  for (int i = 0; i < 500; ++i) {
    double d = delta(gen);
    if (std::abs(d) < 1.0) d = 1.0;
    const auto e = solve_dual_layout(lam(gen), lam(gen), d);
    CHECK(e.doa_c2_deg - e.doa_c1_deg == doctest::Approx(d).epsilon(1e-12));
    CHECK(e.wavelength_m > 0.0);
    CHECK(e.mirror.doa_c2_deg - e.mirror.doa_c1_deg == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("dual-layout argument checks") {
  CHECK_THROWS_AS(solve_dual_layout(9.0, 8.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(solve_dual_layout(9.0, 8.0, 90.0), InvalidArgument);
  CHECK_THROWS_AS(solve_dual_layout(-9.0, 8.0, 15.0), InvalidArgument);

  const auto pos = uniform_positions(0.0, 0.8, 18);
  const auto grid = default_k_grid(pos);
  const auto fwd = beamform_apparent_wavenumber(plane_wave(8.0, -20.0, 0.4, pos), 0.4, grid);
  const auto rev = beamform_apparent_wavenumber(plane_wave(8.0, 175.0, 0.4, pos), 0.4, grid);
  try {
    solve_dual_layout(fwd.apparent_wavelength_m(), rev.apparent_wavelength_m(), 15.0, &fwd, &rev);
    FAIL("expected InconsistentLayoutsError");
  } catch (const InconsistentLayoutsError& e) {
    CHECK(e.lambda_app_c1_m == fwd.apparent_wavelength_m());
    CHECK(e.lambda_app_c2_m == rev.apparent_wavelength_m());
  }
}

TEST_CASE("simulate, beamform and solve recovers the wave") {
  const wavefield::TankEnvironment env;
  sim::SimConfig cfg;
  cfg.sample_rate_hz = 20.0;
  cfg.duration_s = 60.0;
  cfg.noise_rms = 0.0;
  const double delta = 15.0;
  const auto theta = default_theta_grid();
  for (double period : {1.25, 2.5}) {
    for (double th1 : {-60.0, -20.0, 0.0, 10.0, 35.0, 60.0}) {
      // Tank-frame wave direction 0; cable axes rotated so the cable-relative DOAs are th1 and th1 + delta.
      const auto wave = wavefield::WaveSpec::make(0.3, period, 0.0, env);
      const auto g1 = sim::CableGeometry::uniform(161.65, 0.8, 18, -th1);
      const auto g2 = sim::CableGeometry::uniform(161.65, 0.8, 18, -(th1 + delta));
      const auto r1 = sim::synthesize_das(wave, g1, env, cfg);
      const auto r2 = sim::synthesize_das(wave, g2, env, cfg);
      const double f0 = 1.0 / period;
      const auto b1 = beamform_apparent_wavenumber(r1, f0, default_k_grid(r1.channel_positions_m));
      const auto b2 = beamform_apparent_wavenumber(r2, f0, default_k_grid(r2.channel_positions_m));
      CHECK_NOTHROW(wavelength_doa_curve(b1, theta));
      const auto e = solve_dual_layout(b1.apparent_wavelength_m(), b2.apparent_wavelength_m(), delta, &b1, &b2);
      INFO("T = " << period << ", theta_c1 = " << th1);
      CHECK(std::abs(e.doa_c1_deg - th1) <= 0.1 + 0.5);
      CHECK(std::abs(e.doa_c2_deg - (th1 + delta)) <= 0.1 + 0.5);
      CHECK(std::abs(e.wavelength_m / wave.wavelength_m - 1.0) <= 0.02);
      CHECK_FALSE(e.ambiguity_flag);
    }
  }
}
