import math

import numpy as np
import pytest

import dastank


def test_dispersion_and_sensitivity():
    assert dastank.solve_dispersion(2.5) == pytest.approx(9.697764863616056, rel=1e-10)
    assert dastank.directional_sensitivity(45.0) == pytest.approx(0.625)
    with pytest.raises(ValueError):
        dastank.solve_dispersion(0.0)


def test_simulate_and_estimate_period():
    wave = dastank.WaveSpec(0.3, 2.5, -20.0)
    geom = dastank.CableGeometry.uniform()
    cfg = dastank.SimConfig()
    cfg.sample_rate_hz = 50.0
    cfg.seed = 3
    rec = dastank.synthesize_das(wave, geom, cfg=cfg)
    assert rec.data.shape == (18, 6000)
    ch = rec.nearest_channel(168.05)
    assert rec.channel_positions_m[ch] == pytest.approx(168.05)
    psd = dastank.welch_psd(rec.channel(ch), rec.sample_rate_hz)
    est = dastank.estimate_period(psd)
    assert est.period_s == pytest.approx(2.5, rel=0.01)


def test_dsp_helpers():
    fs = 100.0
    t = np.arange(6000) / fs
    x = np.cos(2 * math.pi * 0.8 * t)
    amp, phase = dastank.complex_amplitude(x, fs, 0.8)
    assert amp == pytest.approx(1.0, rel=0.02)
    assert phase == pytest.approx(0.0, abs=1e-6)
    rms = dastank.windowed_rms(x, fs, 10.0)
    assert len(rms) == 6
    assert np.allclose(rms, 1 / math.sqrt(2), atol=1e-6)
    y = dastank.lowpass(x, fs, 3.0)
    assert y.shape == x.shape
    assert dastank.pearson_correlation(x, -x) == pytest.approx(-1.0)
    with pytest.raises(dastank.UndefinedCorrelationError):
        dastank.pearson_correlation(x, np.ones_like(x))


def test_height_and_stats():
    cal = dastank.fit_height_calibration([(0.15, [0.3]), (0.30, [0.6]), (0.40, [0.8])])
    assert cal.slope == pytest.approx(2.0)
    assert dastank.estimate_height(cal, [0.5, 0.6, 90.0]) == pytest.approx(0.30)
    assert dastank.distribution_stats([1, 2, 3, 4, 5]) == pytest.approx((3.0, 2.0))
    assert dastank.rmspe([9, 11], [10, 10]) == pytest.approx(10.0)
    with pytest.raises(dastank.DegenerateFitError):
        dastank.fit_height_calibration([(0.3, [1.0])])


def test_dual_layout():
    est = dastank.solve_dual_layout(9.10, 8.53, 15.0)
    assert abs(est.doa_c1_deg + 21.4) <= 0.3
    assert est.wavelength_m == pytest.approx(8.47, abs=0.05)
    assert est.doa_c2_deg - est.doa_c1_deg == pytest.approx(15.0)

    cfg = dastank.SimConfig()
    cfg.sample_rate_hz = 20.0
    cfg.duration_s = 60.0
    cfg.noise_rms = 0.0
    wave = dastank.WaveSpec(0.3, 2.5, 0.0)
    r1 = dastank.synthesize_das(wave, dastank.CableGeometry.uniform(axis_angle_deg=20.0), cfg=cfg)
    r2 = dastank.synthesize_das(wave, dastank.CableGeometry.uniform(axis_angle_deg=5.0), cfg=cfg)
    est = dastank.analyze_doa(r1, r2, 15.0)
    assert est.doa_c1_deg == pytest.approx(-20.0, abs=0.6)
    assert est.wavelength_m == pytest.approx(wave.wavelength_m, rel=0.02)
    beam = dastank.beamform_apparent_wavenumber(r1, 0.4)
    curve = dastank.wavelength_doa_curve(beam)
    assert len(curve) > 1000


def test_record_round_trip(tmp_path):
    cfg = dastank.SimConfig()
    cfg.sample_rate_hz = 20.0
    cfg.duration_s = 10.0
    rec = dastank.synthesize_das(dastank.WaveSpec(0.3, 2.5, -20.0), dastank.CableGeometry.uniform(), cfg=cfg)
    for name in ("r.bin", "r.csv"):
        dastank.write_das_record(rec, tmp_path / name)
        back = dastank.read_das_record(tmp_path / name)
        assert np.array_equal(back.data, rec.data)
        assert back.channel_positions_m == rec.channel_positions_m
    (tmp_path / "bad.bin").write_bytes(b"DASR\x01")
    with pytest.raises(dastank.FormatError):
        dastank.read_das_record(tmp_path / "bad.bin")


def test_config_schema_agrees_with_loader():
    import json
    import pathlib

    jsonschema = pytest.importorskip("jsonschema")
    root = pathlib.Path(__file__).resolve().parents[2]
    schema = json.loads((root / "schemas" / "run_config.schema.json").read_text())
    example = root / "configs" / "default.json"
    jsonschema.validate(json.loads(example.read_text()), schema)
    # The loader's normalised form must itself be a valid config.
    normalised = json.loads(dastank.load_run_config(example))
    jsonschema.validate(normalised, schema)
    assert normalised["sim"]["seed"] == 42
