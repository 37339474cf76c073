"""Signal synthesis and conditioning tests."""

import numpy as np
import pytest

from tdmdc import TimeSeries, add_noise, impulse, log_chirp, resample, zero_pad


def test_timeseries_properties():
    ts = TimeSeries(np.ones((2, 5)), 0.25, t0=1.0)
    assert ts.n_channels == 2
    assert ts.n_samples == 5
    assert ts.fs == 4.0
    assert ts.duration == 1.0
    assert np.allclose(ts.times, [1.0, 1.25, 1.5, 1.75, 2.0])


def test_timeseries_rejects_bad_input():
    with pytest.raises(ValueError):
        TimeSeries(np.ones(5), 0.25)
    with pytest.raises(ValueError):
        TimeSeries(np.ones((1, 5)), 0.0)
    with pytest.raises(ValueError):
        TimeSeries(np.ones((1, 5)), -1.0)
    with pytest.raises(ValueError):
        TimeSeries(np.array([[1.0, np.nan]]), 0.25)


def test_impulse_placement():
    ts = impulse(3, 2, 5.0, 4, 10, 0.5)
    assert ts.data.shape == (3, 10)
    assert ts.data[1, 4] == 5.0
    assert np.count_nonzero(ts.data) == 1


def test_impulse_channel_is_one_based():
    with pytest.raises(ValueError):
        impulse(3, 0, 1.0, 0, 10, 0.5)
    with pytest.raises(ValueError):
        impulse(3, 4, 1.0, 0, 10, 0.5)


def test_log_chirp_endpoints_and_monotonicity():
    sweep, inst = log_chirp(0.01, 2.0, 1000.0, 0.25)
    assert sweep.n_samples == 4001
    assert abs(inst[0] - 0.01) <= 1e-9
    assert abs(inst[-1] - 2.0) <= 1e-9
    assert np.all(np.diff(inst) > 0)
    assert sweep.n_channels == 1


def test_log_chirp_nyquist_edge():
    # Equality with the Nyquist rate is reached only at the final sample
    # and is allowed; anything above is rejected.
    log_chirp(0.01, 2.0, 100.0, 0.25)
    with pytest.raises(ValueError):
        log_chirp(0.01, 2.0001, 100.0, 0.25)
    with pytest.raises(ValueError):
        log_chirp(0.5, 0.1, 100.0, 0.25)


def test_add_noise_is_seed_deterministic():
    clean = TimeSeries(np.sin(np.linspace(0, 20, 500))[None, :], 0.1)
    a = add_noise(clean, 20.0, seed=7)
    b = add_noise(clean, 20.0, seed=7)
    c = add_noise(clean, 20.0, seed=8)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_add_noise_channel_streams_are_independent():
    clean = TimeSeries(np.ones((2, 4000)), 0.1)
    noisy = add_noise(clean, 0.0, seed=3)
    n0 = noisy.data[0] - 1.0
    n1 = noisy.data[1] - 1.0
    rho = np.corrcoef(n0, n1)[0, 1]
    assert abs(rho) < 0.05


def test_add_noise_snr_roughly_calibrated():
    rng = np.random.default_rng(0)
    clean = TimeSeries(rng.standard_normal((3, 5000)), 0.1)
    noisy = add_noise(clean, 14.0, seed=5)
    resid = noisy.data - clean.data
    snr = 10.0 * np.log10(np.mean(clean.data**2) / np.mean(resid**2))
    assert abs(snr - 14.0) < 0.3


def test_resample_identity_at_same_rate():
    ts = TimeSeries(np.random.default_rng(1).standard_normal((2, 300)), 0.25)
    out = resample(ts, 4.0)
    assert np.array_equal(out.data, ts.data)
    assert out.dt == ts.dt


def test_resample_rejects_upsampling():
    ts = TimeSeries(np.zeros((1, 100)), 0.25)
    with pytest.raises(ValueError):
        resample(ts, 8.0)
    with pytest.raises(ValueError):
        resample(ts, 0.0)


def test_resample_keeps_passband_removes_stopband():
    dt = 0.25
    t = dt * np.arange(8000)
    lo = np.sin(2 * np.pi * 0.1 * t)
    hi = np.sin(2 * np.pi * 1.9 * t)
    ts = TimeSeries((lo + hi)[None, :], dt)
    out = resample(ts, 1.4)
    assert abs(out.fs - 1.4) < 1e-12
    t_new = out.t0 + out.dt * np.arange(out.n_samples)
    want = np.sin(2 * np.pi * 0.1 * t_new)
    mid = slice(50, out.n_samples - 50)
    resid = out.data[0, mid] - want[mid]
    # The 1.9 Hz tone sits far above the 0.7 Hz output Nyquist and must be
    # gone; the 0.1 Hz tone passes through the filter untouched.
    assert np.sqrt(np.mean(resid**2)) < 1e-3


def test_zero_pad_layout():
    y = TimeSeries(np.arange(1.0, 7.0)[None, :], 0.5, t0=2.0)
    u = TimeSeries(np.arange(10.0, 16.0)[None, :], 0.5, t0=2.0)
    yp, up = zero_pad(y, u, 2, 2)
    assert yp.n_samples == 10
    assert up.n_samples == 10
    assert np.all(yp.data[:, :2] == 0.0)
    assert np.all(yp.data[:, -2:] == 0.0)
    assert np.array_equal(yp.data[:, 2:8], y.data)
    assert yp.t0 == 1.0
    assert up.t0 == 1.0
