"""Delay embedding: snapshot assembly, boundaries, and order bounds."""

import numpy as np
import pytest

from tdmdc import EmbeddingSpec, TimeSeries, build_snapshots
from tdmdc.embedding import max_delay_order_chirp, min_delay_order, trim_start


def series(values, dt=0.5):
    return TimeSeries(np.atleast_2d(np.asarray(values, dtype=float)), dt)


def test_hand_example_single_delay():
    y = series([1.0, 2.0, 3.0, 4.0])
    u = series([9.0, 7.0, 5.0, 3.0])
    s = build_snapshots(y, u, 1, 1)
    assert s.X.tolist() == [[2.0, 3.0], [1.0, 2.0]]
    assert s.X_prime.tolist() == [[3.0, 4.0], [2.0, 3.0]]
    assert s.Gamma.tolist() == [[7.0, 5.0]]
    assert s.K == 4
    assert s.spec == EmbeddingSpec(1, 1, 1, 1)


def test_zero_fill_wedge():
    y = series([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    u = series([9.0, 7.0, 5.0, 3.0, 2.0, 1.0])
    s = build_snapshots(y, u, 2, 2)
    # First column is the state at sample 1; its two-step history reaches
    # sample -1, which zero-fill takes as zero.
    assert s.X[:, 0].tolist() == [2.0, 1.0, 0.0]
    assert s.X[:, 1].tolist() == [3.0, 2.0, 1.0]
    assert s.Gamma[:, 0].tolist() == [7.0, 9.0]
    assert s.X.shape == (3, 4)


def test_trim_equals_zero_fill_tail():
    rng = np.random.default_rng(4)
    y = TimeSeries(rng.standard_normal((2, 30)), 0.25)
    u = TimeSeries(rng.standard_normal((1, 30)), 0.25)
    for tau_a, tau_b in [(1, 1), (3, 2), (2, 5), (4, 4)]:
        full = build_snapshots(y, u, tau_a, tau_b)
        trim = build_snapshots(y, u, tau_a, tau_b, boundary="trim")
        k0 = trim_start(tau_a, tau_b)
        assert trim.X.shape[1] == 30 - 1 - k0
        assert np.array_equal(trim.X, full.X[:, k0 - 1 :])
        assert np.array_equal(trim.X_prime, full.X_prime[:, k0 - 1 :])
        assert np.array_equal(trim.Gamma, full.Gamma[:, k0 - 1 :])


def test_trim_windows_are_fully_recorded():
    # No zero-filled entries can appear under trim, so rebuilding any
    # column directly from the records must reproduce it.
    rng = np.random.default_rng(11)
    y = TimeSeries(rng.standard_normal((2, 25)), 0.5)
    u = TimeSeries(rng.standard_normal((3, 25)), 0.5)
    tau_a, tau_b = 3, 5
    s = build_snapshots(y, u, tau_a, tau_b, boundary="trim")
    k0 = trim_start(tau_a, tau_b)
    for c in range(s.X.shape[1]):
        k = k0 + c
        want_x = np.concatenate([y.data[:, k - d] for d in range(tau_a + 1)])
        want_g = np.concatenate([u.data[:, k - d] for d in range(tau_b)])
        assert np.array_equal(s.X[:, c], want_x)
        assert np.array_equal(s.Gamma[:, c], want_g)
        assert np.array_equal(
            s.X_prime[:, c],
            np.concatenate([y.data[:, k + 1 - d] for d in range(tau_a + 1)]),
        )


def test_delay_block_shift_consistency():
    rng = np.random.default_rng(7)
    y = TimeSeries(rng.standard_normal((3, 40)), 0.1)
    u = TimeSeries(rng.standard_normal((2, 40)), 0.1)
    s = build_snapshots(y, u, 4, 3)
    n = 3
    # Rows n.. of X' are rows ..-n of X: the one-delay block of the
    # advanced state is the zero-delay block of the current state.
    assert np.array_equal(s.X_prime[n:], s.X[:-n])
    # Column shift: X' columns all but last equal X columns all but first.
    assert np.array_equal(s.X_prime[:, :-1], s.X[:, 1:])


def test_channel_permutation_commutes():
    rng = np.random.default_rng(9)
    data = rng.standard_normal((3, 20))
    u = TimeSeries(rng.standard_normal((1, 20)), 0.5)
    perm = [2, 0, 1]
    s = build_snapshots(TimeSeries(data, 0.5), u, 2, 1)
    sp = build_snapshots(TimeSeries(data[perm], 0.5), u, 2, 1)
    n = 3
    for d in range(3):
        block = s.X[d * n : (d + 1) * n]
        assert np.array_equal(sp.X[d * n : (d + 1) * n], block[perm])


def test_build_snapshots_validation():
    y = series([1.0, 2.0, 3.0, 4.0])
    u = series([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        build_snapshots(y, u, 0, 1)
    with pytest.raises(ValueError):
        build_snapshots(y, u, 2, 2)  # too short for tau 2
    with pytest.raises(ValueError):
        build_snapshots(y, series([1.0, 2.0, 3.0], dt=0.5), 1, 1)
    with pytest.raises(ValueError):
        build_snapshots(y, series([1.0, 2.0, 3.0, 4.0], dt=0.1), 1, 1)
    with pytest.raises(ValueError):
        build_snapshots(y, u, 1, 1, boundary="mirror")


def test_min_delay_order():
    assert min_delay_order(4.0, 0.0767) == 52
    assert min_delay_order(10.0, 1.0) == 9
    with pytest.raises(ValueError):
        min_delay_order(4.0, 2.0)
    with pytest.raises(ValueError):
        min_delay_order(4.0, 0.0)


def test_max_delay_order_chirp():
    assert max_delay_order_chirp(100, 3900, 4000) == 100
    assert max_delay_order_chirp(500, 3000, 4000) == 500
    assert max_delay_order_chirp(0, 10, 100) == 0
    with pytest.raises(ValueError):
        max_delay_order_chirp(50, 20, 100)


def test_trim_start_arithmetic():
    assert trim_start(1, 1) == 1
    assert trim_start(5, 2) == 5
    assert trim_start(2, 5) == 4
    assert trim_start(3, 4) == 3
