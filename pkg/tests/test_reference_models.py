"""Benchmark model, analytic modes, simulation, and the ARX reference fit."""

import numpy as np
import pytest
from scipy import linalg as sla

from tdmdc import LtiSecondOrderModel, build_6dof, impulse, simulate
from tdmdc.reference_models import (
    analytic_frf,
    arx_fit,
    arx_frf,
    arx_state_matrix,
    companion_state_matrices,
    normalize_shape,
)
from tdmdc import analytic_modes


def test_build_6dof_matrices():
    model = build_6dof()
    assert model.n == 6
    assert np.array_equal(model.M, np.eye(6))
    K = model.K
    assert np.allclose(np.diag(K), [8.0, 8.0, 8.0, 8.0, 8.0, 4.0])
    assert np.allclose(np.diag(K, 1), -4.0)
    assert np.allclose(np.diag(K, -1), -4.0)
    assert np.allclose(model.C, 0.02 * model.M + 1e-4 * K)


def test_companion_layout(model6):
    A, B = companion_state_matrices(model6)
    n = model6.n
    Minv = np.linalg.inv(model6.M)
    assert np.array_equal(A[:n, n:], np.eye(n))
    assert np.array_equal(A[:n, :n], np.zeros((n, n)))
    assert np.allclose(A[n:, :n], -Minv @ model6.K)
    assert np.allclose(A[n:, n:], -Minv @ model6.C)
    assert np.allclose(B[n:], Minv)


def test_analytic_modes_match_companion_eigensolution(model6):
    A, _ = companion_state_matrices(model6)
    lam = np.linalg.eigvals(A)
    lam = lam[lam.imag > 0]
    lam = lam[np.argsort(np.abs(lam))]
    modes = analytic_modes(model6)
    freqs = np.array([m.freq_hz for m in modes])
    damps = np.array([m.damping for m in modes])
    assert np.allclose(freqs, np.abs(lam) / (2 * np.pi), rtol=0, atol=1e-12)
    assert np.allclose(damps, -lam.real / np.abs(lam), rtol=0, atol=1e-12)
    assert np.all(np.diff(freqs) > 0)


def test_analytic_mode_shapes_are_normalized(analytic6):
    for mode in analytic6:
        assert abs(np.linalg.norm(mode.shape) - 1.0) < 1e-12
        pivot = mode.shape[int(np.argmax(np.abs(mode.shape)))]
        assert abs(pivot.imag) < 1e-12
        assert pivot.real > 0


def test_normalize_shape_rejects_zero():
    with pytest.raises(ValueError):
        normalize_shape(np.zeros(4))


def test_simulate_against_exact_discretization(model6):
    exc = impulse(6, 1, 1.0, 0, 200, 0.25)
    resp = simulate(model6, exc)
    assert resp.n_channels == 6
    assert resp.n_samples == 200
    assert resp.dt == 0.25

    A, B = companion_state_matrices(model6)
    Ad = sla.expm(A * exc.dt)
    Bd = np.linalg.solve(A, (Ad - np.eye(12))) @ B
    x = np.zeros(12)
    ref = np.zeros((6, exc.n_samples))
    for k in range(exc.n_samples):
        ref[:, k] = x[:6]
        x = Ad @ x + Bd @ exc.data[:, k]
    assert np.allclose(resp.data, ref, rtol=0, atol=1e-10)


def test_simulate_requires_one_force_channel_per_dof(model6):
    exc = impulse(2, 1, 1.0, 0, 50, 0.25)
    with pytest.raises(ValueError):
        simulate(model6, exc)


def test_model_validation():
    with pytest.raises(ValueError):
        LtiSecondOrderModel(np.eye(3), np.zeros((3, 3)), np.eye(2))
    with pytest.raises(ValueError):
        LtiSecondOrderModel(np.full((2, 2), np.nan), np.zeros((2, 2)), np.eye(2))


def test_arx_fit_one_step_prediction(impulse_response, impulse_excitation):
    # A single impulse is not persistently exciting for the full input
    # map; the estimator must say so and fall back to minimum norm.
    with pytest.warns(UserWarning, match="persistently"):
        arx = arx_fit(impulse_response, impulse_excitation, 2, 2)
    assert arx.a.shape == (2, 6, 6)
    assert arx.b.shape == (2, 6, 6)
    y = impulse_response.data
    u = impulse_excitation.data
    for k in (10, 100, 1000):
        pred = (
            -arx.a[0] @ y[:, k - 1]
            - arx.a[1] @ y[:, k - 2]
            + arx.b[0] @ u[:, k - 1]
            + arx.b[1] @ u[:, k - 2]
        )
        assert np.allclose(pred, y[:, k], atol=1e-8)


def test_arx_state_matrix_spectrum(impulse_response, impulse_excitation, ref_freqs, ref_damps):
    with pytest.warns(UserWarning, match="persistently"):
        arx = arx_fit(impulse_response, impulse_excitation, 2, 2)
    A_bar = arx_state_matrix(arx)
    assert A_bar.shape == (18, 18)
    ev = np.linalg.eigvals(A_bar)
    ev = ev[np.abs(ev) > 1e-6]
    ev = ev[ev.imag > 0]
    s = np.log(ev) / 0.25
    order = np.argsort(np.abs(s))
    s = s[order]
    assert s.size == 6
    assert np.allclose(np.abs(s) / (2 * np.pi), ref_freqs, rtol=1e-8)
    assert np.allclose(-s.real / np.abs(s), ref_damps, rtol=1e-6)


def test_arx_frf_matches_discrete_transfer_function(model6):
    # The ARX fitted on zero-order-hold data reproduces the discrete
    # transfer function, not the continuous receptance, so the oracle is
    # H(w) = [I 0] (e^{jw dt} I - Ad)^{-1} Bd from the exact
    # discretization.  Random excitation on every channel makes the
    # regression full rank, unlike the single-impulse record.
    from tdmdc import TimeSeries

    rng = np.random.default_rng(12)
    exc = TimeSeries(rng.standard_normal((6, 3000)), 0.25)
    resp = simulate(model6, exc)
    arx = arx_fit(resp, exc, 2, 2)
    dt = resp.dt
    A, B = companion_state_matrices(model6)
    Ad = sla.expm(A * dt)
    Bd = np.linalg.solve(A, (Ad - np.eye(12))) @ B
    omegas = 2 * np.pi * np.array([0.05, 0.22, 0.5])
    H_arx = arx_frf(arx, omegas)
    for idx, w in enumerate(omegas):
        z = np.exp(1j * w * dt)
        H_ref = np.linalg.solve(z * np.eye(12) - Ad, Bd)[:6]
        assert np.allclose(H_arx[idx], H_ref, atol=1e-7 * np.abs(H_ref).max())


def test_analytic_frf_peaks_near_resonances(model6, ref_freqs):
    on = analytic_frf(model6, 2 * np.pi * ref_freqs[0])
    off = analytic_frf(model6, 2 * np.pi * ref_freqs[0] * 1.5)
    assert np.abs(on[0, 0, 0]) > 5 * np.abs(off[0, 0, 0])
