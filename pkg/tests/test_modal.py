"""Tests for modal extraction, MAC, sweeps, and the noise study."""

import numpy as np
import pytest

from tdmdc import (
    build_snapshots,
    fit,
    impulse,
    mac,
    mac_matrix,
    noise_scaling_study,
    simulate,
    stabilization_sweep,
    sweep_statistics,
    to_modes,
)
from tdmdc.modal import (
    FLAG_NEW,
    FLAG_STABLE_ALL,
    ModeEstimate,
    ModeSet,
)


@pytest.fixture(scope="module")
def fitted(impulse_response, impulse_excitation):
    snap = build_snapshots(impulse_response, impulse_excitation, 2, 2)
    return fit(snap, ranks=(13, 14))


def test_to_modes_matches_reference(fitted, ref_freqs, ref_damps):
    modes = to_modes(fitted)
    assert len(modes) == 6
    np.testing.assert_allclose([m.freq_hz for m in modes], ref_freqs, rtol=1e-6)
    np.testing.assert_allclose([m.damping for m in modes], ref_damps, rtol=1e-5)
    freqs = [m.freq_hz for m in modes]
    assert freqs == sorted(freqs)
    for m in modes:
        assert m.delay_order == 2
        assert m.shape.size == 6
        assert np.linalg.norm(m.shape) == pytest.approx(1.0)
        # Largest entry rotated real positive.
        peak = m.shape[np.argmax(np.abs(m.shape))]
        assert abs(peak.imag) < 1e-9 * abs(peak)
        assert peak.real > 0


def test_to_modes_band_filter(fitted, ref_freqs):
    inside = to_modes(fitted, band_hz=(0.2, 0.5))
    expect = [f for f in ref_freqs if 0.2 <= f <= 0.5]
    np.testing.assert_allclose([m.freq_hz for m in inside], expect, rtol=1e-6)
    with pytest.raises(ValueError, match="band"):
        to_modes(fitted, band_hz=(0.5, 0.2))


def test_mode_estimate_validation():
    with pytest.raises(ValueError, match="freq_hz"):
        ModeEstimate(
            freq_hz=-1.0, damping=0.01, s=1j, mu=1j,
            shape=np.ones(3), delay_order=1, amplitude=0.0,
        )
    mode = ModeEstimate(
        freq_hz=0.5, damping=-0.01, s=1j, mu=1j,
        shape=np.ones(3), delay_order=1, amplitude=0.0,
    )
    assert mode.flagged_negative_damping


def test_mode_set_accessors(fitted):
    ms = ModeSet(tuple(to_modes(fitted)), dt=fitted.dt)
    assert len(ms) == 6
    assert ms.freqs.shape == (6,)
    assert ms.dampings.shape == (6,)
    mat = ms.shape_matrix()
    assert mat.shape == (6, 6)
    np.testing.assert_allclose(mat[:, 0], ms[0].shape)


def test_mac_basics():
    rng = np.random.default_rng(7)
    phi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert mac(phi, phi) == pytest.approx(1.0)
    assert mac(phi, (2.0 - 3.0j) * phi) == pytest.approx(1.0)
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    assert mac(e1, e2) == 0.0
    with pytest.raises(ValueError, match="lengths differ"):
        mac(e1, phi)
    with pytest.raises(ValueError, match="zero"):
        mac(e1, np.zeros(3))


def test_mac_matrix_layout(fitted, analytic6):
    est = [m.shape for m in to_modes(fitted)]
    ref = [m.shape for m in analytic6]
    M = mac_matrix(est, ref)
    assert M.shape == (6, 6)
    assert np.all((M >= 0.0) & (M <= 1.0))
    assert np.all(np.diag(M) > 0.999)
    # Rectangular when counts differ.
    assert mac_matrix(est[:4], ref).shape == (4, 6)
    # 2-D arrays with shapes as columns are accepted too.
    M2 = mac_matrix(np.column_stack(est), np.column_stack(ref))
    np.testing.assert_allclose(M2, M)


def test_stabilization_flags_on_clean_data(impulse_response, impulse_excitation, ref_freqs):
    # Full rank per order: each embedding recovers the exact modes, so
    # every later order repeats them to machine precision.  (Fixed ranks
    # would under-truncate the deeper embeddings and drift.)
    with pytest.warns(UserWarning, match="deflation"):
        diagram = stabilization_sweep(
            impulse_response, impulse_excitation, (2, 6), rank_policy="full", tau_b=2
        )
    assert diagram.delay_orders == [2, 3, 4, 5, 6]
    assert diagram.failed_orders == ()
    first = diagram.at_order(2)
    assert len(first) == 6
    assert all(flag == FLAG_NEW for _, flag in first)
    for tau in (3, 4, 5, 6):
        here = diagram.at_order(tau)
        assert len(here) == 6
        assert all(flag == FLAG_STABLE_ALL for _, flag in here)
    rows = list(diagram.rows())
    assert len(rows) == len(diagram.entries)
    taus, freqs, damps, flags = zip(*rows)
    assert list(taus) == sorted(taus)


def test_sweep_engines_agree(impulse_response, impulse_excitation):
    kwargs = dict(rank_policy=(13, 14), tau_b=2)
    corr = stabilization_sweep(
        impulse_response, impulse_excitation, (2, 5), engine="correlation", **kwargs
    )
    direct = stabilization_sweep(
        impulse_response, impulse_excitation, (2, 5), engine="direct", **kwargs
    )
    assert len(corr.entries) == len(direct.entries)
    for (t1, m1, f1), (t2, m2, f2) in zip(corr.entries, direct.entries):
        assert t1 == t2 and f1 == f2
        assert m1.freq_hz == pytest.approx(m2.freq_hz, rel=1e-9)
        assert m1.damping == pytest.approx(m2.damping, rel=1e-6, abs=1e-12)


def test_sweep_engines_agree_under_trim(impulse_response, impulse_excitation):
    # At a single order the correlation table's shared column window and
    # per-order trimming coincide exactly.
    kwargs = dict(rank_policy=(13, 14), tau_b=2, boundary="trim")
    corr = stabilization_sweep(
        impulse_response, impulse_excitation, (7, 7), engine="correlation", **kwargs
    )
    direct = stabilization_sweep(
        impulse_response, impulse_excitation, (7, 7), engine="direct", **kwargs
    )
    for (t1, m1, _), (t2, m2, _) in zip(corr.entries, direct.entries):
        assert m1.freq_hz == pytest.approx(m2.freq_hz, rel=1e-9)
        assert m1.damping == pytest.approx(m2.damping, rel=1e-7, abs=1e-12)


def test_sweep_validation():
    y = impulse(2, 1, 1.0, 0, 50, 0.5)
    with pytest.raises(ValueError, match="range"):
        stabilization_sweep(y, y, (5, 2))
    with pytest.raises(ValueError, match="step"):
        stabilization_sweep(y, y, (2, 5), step=0)
    with pytest.raises(ValueError, match="engine"):
        stabilization_sweep(y, y, (2, 3), engine="banana")


def test_sweep_records_failed_orders(model6):
    # A short record cannot support the deepest orders; those fail and
    # leave gaps instead of aborting the sweep.
    exc = impulse(6, 1, 1.0, 0, 40, 0.25)
    resp = simulate(model6, exc)
    with pytest.warns(UserWarning, match="failed at delay order"):
        diagram = stabilization_sweep(
            resp, exc, (2, 50), step=12, tau_b=2, engine="direct"
        )
    assert 2 in diagram.delay_orders
    assert set(diagram.failed_orders) == {38, 50}


def test_sweep_statistics_clean(impulse_response, impulse_excitation, ref_freqs, ref_damps):
    with pytest.warns(UserWarning, match="deflation"):
        diagram = stabilization_sweep(
            impulse_response, impulse_excitation, (2, 6), rank_policy="full", tau_b=2
        )
    stats = sweep_statistics(diagram)
    assert stats.freq_mean.shape == (6,)
    np.testing.assert_allclose(stats.freq_mean, ref_freqs, rtol=1e-6)
    np.testing.assert_allclose(stats.damp_mean, ref_damps, rtol=1e-5)
    assert np.all(stats.counts == 5)
    assert np.all(stats.freq_std < 1e-9)
    assert stats.ci_width_freq < 1e-8
    assert np.all(stats.freq_q1 <= stats.freq_median)
    assert np.all(stats.freq_median <= stats.freq_q3)


def test_sweep_statistics_empty_raises():
    from tdmdc.modal import StabilizationDiagram

    with pytest.raises(ValueError, match="no entries"):
        sweep_statistics(StabilizationDiagram(entries=()))


def test_noise_study_validation(model6):
    exc = impulse(6, 1, 1.0, 0, 600, 0.25)
    with pytest.raises(ValueError, match="at least 20 trials"):
        noise_scaling_study(model6, exc, None, [50], trials=5, seed=1, snr_db=20.0)
    with pytest.raises(ValueError, match="exactly one"):
        noise_scaling_study(model6, exc, 0.1, [50], trials=20, seed=1, snr_db=20.0)
    with pytest.raises(ValueError, match="exactly one"):
        noise_scaling_study(model6, exc, None, [50], trials=20, seed=1)
    with pytest.raises(ValueError, match="ascending"):
        noise_scaling_study(model6, exc, None, [60, 50], trials=20, seed=1, snr_db=20.0)


def test_noise_study_deterministic_and_sane(model6, ref_freqs):
    exc = impulse(6, 1, 1.0, 0, 1200, 0.25)
    kwargs = dict(trials=20, seed=314, snr_db=20.0)
    res = noise_scaling_study(model6, exc, None, [53, 58], **kwargs)
    again = noise_scaling_study(model6, exc, None, [53, 58], **kwargs)
    np.testing.assert_array_equal(res.mean_freq, again.mean_freq)
    np.testing.assert_array_equal(res.std_damp, again.std_damp)
    assert res.slope == again.slope

    assert res.mean_freq.shape == (2, 6)
    assert res.trials == 20
    assert res.snr_db == 20.0 and res.sigma is None
    # First mode recovered within 1% at both orders.
    np.testing.assert_allclose(res.mean_freq[:, 0], ref_freqs[0], rtol=1e-2)
    assert np.all(res.std_damp[:, 0] > 0.0)
    assert np.all(res.failure_rate <= 0.2)
    assert res.excluded_orders == ()
    med = res.quartile("freq", 2)
    q1 = res.quartile("freq", 1)
    q3 = res.quartile("freq", 3)
    assert med.shape == (2, 6)
    assert np.all(q1 <= med) and np.all(med <= q3)

    # Seed sequences accept tuples; a different stream gives different draws.
    other = noise_scaling_study(model6, exc, None, [53, 58], trials=20, seed=(314, 7), snr_db=20.0)
    assert not np.array_equal(other.std_damp, res.std_damp)
