"""Delay embedding of output/input records into snapshot matrices.

The augmented state stacks the current output on top of its ``tau_a``
delayed copies; the augmented input stacks the current input on top of
``tau_b - 1`` delayed copies.  Snapshot matrices pair consecutive augmented
states with the augmented input active over the step between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EmbeddingSpec:
    """Delay orders and channel counts of an embedding.

    ``tau_a`` output delay order, ``tau_b`` input delay order, ``n`` output
    channels, ``m`` input channels.
    """

    tau_a: int
    tau_b: int
    n: int
    m: int

    def __post_init__(self):
        for name in ("tau_a", "tau_b", "n", "m"):
            value = getattr(self, name)
            if int(value) != value or int(value) < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def state_rows(self) -> int:
        """Rows of an augmented state column: n (tau_a + 1)."""
        return self.n * (self.tau_a + 1)

    @property
    def input_rows(self) -> int:
        """Rows of an augmented input column: m tau_b."""
        return self.m * self.tau_b


@dataclass(frozen=True)
class SnapshotSet:
    """Snapshot matrices of one embedded record.

    ``X`` holds consecutive augmented states, ``X_prime`` the same states
    one step ahead, and ``Gamma`` the augmented inputs active over each
    step.  ``K`` is the sample count of the source records.  With
    ``boundary="zero-fill"`` the matrices have K-2 columns starting at the
    second sample, where the augmented input history first reaches back to
    the start of the input record; with ``boundary="trim"`` they hold only
    fully recorded windows.
    """

    X: np.ndarray
    X_prime: np.ndarray
    Gamma: np.ndarray
    spec: EmbeddingSpec
    dt: float
    K: int
    boundary: str = "zero-fill"


def min_delay_order(fs_hz, f_min_hz):
    """Smallest delay order whose embedded window spans the slowest period.

    The augmented state must cover at least one full cycle of the lowest
    frequency of interest, giving tau >= fs / f_min - 1, rounded up.
    """
    if fs_hz <= 0.0 or f_min_hz <= 0.0:
        raise ValueError("fs_hz and f_min_hz must be positive")
    if f_min_hz >= 0.5 * fs_hz:
        raise ValueError(
            f"f_min_hz={f_min_hz} is not below the Nyquist rate of fs={fs_hz}"
        )
    return max(1, math.ceil(fs_hz / f_min_hz - 1.0))


def max_delay_order_chirp(k_min, k_max, n_samples):
    """Upper delay-order bound for swept-sine records.

    ``k_min`` is the sample index at which the sweep reaches the lowest
    frequency of interest and ``k_max`` the index for the highest; the delay
    order must not exceed min(k_min, n_samples - k_max) or some mode is never
    fully inside a delayed window.
    """
    k_min = int(k_min)
    k_max = int(k_max)
    n_samples = int(n_samples)
    if not 0 <= k_min <= k_max < n_samples:
        raise ValueError(
            f"need 0 <= k_min <= k_max < n_samples, got "
            f"({k_min}, {k_max}, {n_samples})"
        )
    return min(k_min, n_samples - k_max)


def trim_start(tau_a, tau_b):
    """First sample index whose embedded column is fully recorded.

    The state window needs tau_a history samples and the input window
    reaches back to sample index k - tau_b + 1, so the first complete
    column sits at max(tau_a, tau_b - 1), never before sample 1.
    """
    return max(int(tau_a), int(tau_b) - 1, 1)


def build_snapshots(outputs, inputs, tau_a, tau_b, boundary="zero-fill"):
    """Assemble delay-embedded snapshot matrices from paired records.

    Column c of ``X`` stacks outputs at samples k, k-1, ..., k-tau_a with
    k = c + 1 under "zero-fill" (k = c + trim_start(tau_a, tau_b) under
    "trim"); the matching column of ``X_prime`` is shifted one sample
    ahead and the matching column of ``Gamma`` stacks inputs at samples
    k, k-1, ..., k-tau_b+1, the lags active over the step to k+1.

    ``boundary`` controls the left edge of the record.  "zero-fill" takes
    samples at negative indices as zeros, which is exact for records that
    begin at rest and is the only choice that keeps an excitation onset at
    the start of the record inside the regression window; the matrices then
    have K-2 columns for K source samples (the transition out of sample 0
    is not used, so the first input column already reaches the first
    recorded input sample).  "trim" keeps fully recorded windows only,
    starting at k = max(tau_a, tau_b - 2).  Zero filling is harmless on
    clean data, but under measurement noise the filled wedge behaves as an
    undamped shift process that a rank-truncated operator must reproduce
    alongside the physics, which biases every damping estimate toward
    zero; trimming removes the wedge and is the right choice for ring-down
    records that can spare the leading window.

    For one channel with y = [1, 2, 3, 4] and tau_a = 1 this gives
    X = [[2, 3], [1, 2]] and X_prime = [[3, 4], [2, 3]] under either
    boundary.
    """
    tau_a = int(tau_a)
    tau_b = int(tau_b)
    if tau_a < 1 or tau_b < 1:
        raise ValueError("tau_a and tau_b must be >= 1")
    if boundary not in ("zero-fill", "trim"):
        raise ValueError(
            f"boundary must be 'zero-fill' or 'trim', got {boundary!r}"
        )
    if abs(outputs.dt - inputs.dt) > 1e-9 * outputs.dt:
        raise ValueError("outputs and inputs must share the sampling interval")
    if outputs.n_samples != inputs.n_samples:
        raise ValueError(
            f"outputs have {outputs.n_samples} samples, inputs "
            f"{inputs.n_samples}; records must be paired"
        )
    K = outputs.n_samples
    if K < max(tau_a, tau_b) + 3:
        raise ValueError(
            f"need more than {max(tau_a, tau_b) + 2} samples for "
            f"tau_a={tau_a}, tau_b={tau_b}, got {K}"
        )
    n = outputs.n_channels
    m = inputs.n_channels
    spec = EmbeddingSpec(tau_a, tau_b, n, m)

    if boundary == "zero-fill":
        yb = np.pad(outputs.data, ((0, 0), (tau_a, 0)))
        ub = np.pad(inputs.data, ((0, 0), (tau_b, 0)))
        cols = K - 2
        ybase = tau_a + 1
        ubase = tau_b + 1
    else:
        yb = outputs.data
        ub = inputs.data
        k0 = trim_start(tau_a, tau_b)
        cols = K - 1 - k0
        ybase = k0
        ubase = k0
    X = np.empty((spec.state_rows, cols))
    X_prime = np.empty((spec.state_rows, cols))
    for d in range(tau_a + 1):
        X[d * n : (d + 1) * n] = yb[:, ybase - d : ybase - d + cols]
        X_prime[d * n : (d + 1) * n] = yb[:, ybase - d + 1 : ybase - d + 1 + cols]
    Gamma = np.empty((spec.input_rows, cols))
    for d in range(tau_b):
        Gamma[d * m : (d + 1) * m] = ub[:, ubase - d : ubase - d + cols]
    return SnapshotSet(X, X_prime, Gamma, spec, outputs.dt, K, boundary)
