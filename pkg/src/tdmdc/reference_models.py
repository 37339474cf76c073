"""Benchmark structural models, exact simulation, and the ARX baseline.

Provides the proportionally damped spring-mass chain used throughout the
test suite, an exact zero-order-hold simulator for second-order systems,
receptance FRFs, and a least-squares ARX estimator whose companion-form
state matrix serves as an independent eigenvalue oracle for the DMDc
identification path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from tdmdc.signals import TimeSeries


@dataclass(frozen=True)
class LtiSecondOrderModel:
    """Second-order structural model M y'' + C y' + K y = u."""

    M: np.ndarray
    C: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        n = M.shape[0]
        for name, mat in (("M", M), ("C", C), ("K", K)):
            if mat.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True)
class ReferenceMode:
    """Analytic mode: undamped natural frequency, damping ratio, shape.

    ``s`` is the underlying continuous-time eigenvalue with positive
    imaginary part, kept for eigenvalue-level comparisons.
    """

    freq_hz: float
    damping: float
    shape: np.ndarray
    s: complex


def build_6dof(stiffness=4.0, mass=1.0, alpha=0.02, beta=1e-4):
    """Six-storey shear chain with Rayleigh damping C = alpha M + beta K.

    Uniform masses and inter-storey stiffnesses; the last storey is free, so
    the stiffness matrix is tridiagonal with 2k on the diagonal except k in
    the final entry, and -k off the diagonal.
    """
    n = 6
    M = mass * np.eye(n)
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = 2.0 * stiffness
        if i + 1 < n:
            K[i, i + 1] = -stiffness
            K[i + 1, i] = -stiffness
    K[n - 1, n - 1] = stiffness
    C = alpha * M + beta * K
    return LtiSecondOrderModel(M, C, K)


def normalize_shape(vec):
    """Scale a mode shape to unit Euclidean norm, largest entry real positive.

    The phase rotation makes shapes comparable across estimators: after
    normalization the entry with the largest magnitude is real and positive.
    """
    v = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero shape")
    v = v / norm
    pivot = v[np.argmax(np.abs(v))]
    return v * (np.conj(pivot) / abs(pivot))


def companion_state_matrices(model):
    """First-order form of the second-order model.

    Returns (A_c, B_c) with state [y; y'], A_c = [[0, I], [-M^-1 K, -M^-1 C]]
    and B_c = [[0], [M^-1]].
    """
    n = model.n
    try:
        Minv = np.linalg.inv(model.M)
    except np.linalg.LinAlgError as exc:
        raise ValueError("mass matrix is singular") from exc
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv @ model.K
    A[n:, n:] = -Minv @ model.C
    B = np.zeros((2 * n, n))
    B[n:, :] = Minv
    return A, B


def analytic_modes(model):
    """Exact modal parameters of the damped model, sorted by frequency.

    Eigenvalues s of the first-order companion matrix give the undamped
    natural frequency as |s| and the damping ratio as -Re(s)/|s|; the
    displacement partition of each eigenvector is the mode shape.  Only the
    positive-imaginary member of each conjugate pair is returned.
    """
    A, _ = companion_state_matrices(model)
    eigvals, eigvecs = sla.eig(A)
    modes = []
    for idx in range(eigvals.size):
        s = eigvals[idx]
        if s.imag <= 0.0:
            continue
        omega = abs(s)
        modes.append(
            ReferenceMode(
                freq_hz=omega / (2.0 * math.pi),
                damping=-s.real / omega,
                shape=normalize_shape(eigvecs[: model.n, idx]),
                s=complex(s),
            )
        )
    modes.sort(key=lambda m: m.freq_hz)
    return modes


def _zoh_matrices(A, B, dt):
    """Exact zero-order-hold discretization via a block matrix exponential."""
    ns, ni = A.shape[0], B.shape[1]
    block = np.zeros((ns + ni, ns + ni))
    block[:ns, :ns] = A
    block[:ns, ns:] = B
    blocke = sla.expm(block * dt)
    return blocke[:ns, :ns], blocke[:ns, ns:]


def simulate(model, excitation, initial_state=None):
    """Exact sampled response of the model to a zero-order-hold excitation.

    The force is held constant over each sampling interval.  Displacements
    at the sample instants are returned, so the response to an impulse at
    sample j first becomes nonzero at sample j+1.

    Parameters
    ----------
    model : LtiSecondOrderModel
    excitation : TimeSeries
        One force channel per degree of freedom.
    initial_state : ndarray, shape (2n,), optional
        Initial displacements and velocities, default zero (at rest).
    """
    n = model.n
    if excitation.n_channels != n:
        raise ValueError(
            f"excitation has {excitation.n_channels} channels, model has {n} DoF"
        )
    A, B = companion_state_matrices(model)
    Ad, Bd = _zoh_matrices(A, B, excitation.dt)
    nsamp = excitation.n_samples
    if initial_state is None:
        x = np.zeros(2 * n)
    else:
        x = np.asarray(initial_state, dtype=float).reshape(2 * n).copy()
    u = excitation.data
    y = np.empty((n, nsamp))
    for j in range(nsamp - 1):
        y[:, j] = x[:n]
        x = Ad @ x + Bd @ u[:, j]
    y[:, nsamp - 1] = x[:n]
    return TimeSeries(y, excitation.dt, excitation.t0)


def analytic_frf(model, omega_rad_s):
    """Receptance FRF matrix H(w) = (K - w^2 M + j w C)^-1.

    Returns an array of shape (len(omega), n, n); entry [w, i, j] is the
    displacement of DoF i per unit harmonic force at DoF j.
    """
    omegas = np.atleast_1d(np.asarray(omega_rad_s, dtype=float))
    n = model.n
    H = np.empty((omegas.size, n, n), dtype=complex)
    eye = np.eye(n)
    for idx, w in enumerate(omegas):
        D = model.K - w**2 * model.M + 1j * w * model.C
        try:
            H[idx] = np.linalg.solve(D, eye)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"dynamic stiffness is singular at omega={w} rad/s"
            ) from exc
    return H


@dataclass(frozen=True)
class ArxModel:
    """Multivariable ARX model y_k + sum a_i y_(k-i) = sum b_i u_(k-i).

    ``a`` has shape (tau_a, n, n) and ``b`` has shape (tau_b, n, m); index i
    of each stack holds the coefficient of lag i+1.
    """

    a: np.ndarray
    b: np.ndarray
    dt: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError(f"a must be (tau_a, n, n), got {a.shape}")
        if b.ndim != 3 or b.shape[1] != a.shape[1]:
            raise ValueError(f"b must be (tau_b, n, m), got {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def tau_a(self) -> int:
        return self.a.shape[0]

    @property
    def tau_b(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return self.b.shape[2]


def arx_fit(outputs, inputs, tau_a, tau_b):
    """Least-squares ARX coefficients from paired output/input records.

    The residual of the one-step difference equation is minimized over all
    samples with a full regression window, i.e. sample indices from
    max(tau_a, tau_b) onward.  The normal problem is solved with a
    rank-revealing SVD solver using a relative singular value cutoff of
    1e-10; a rank-deficient regressor (persistently non-exciting data)
    triggers a warning reporting the effective rank, and the returned
    coefficients are then the minimum-norm solution.
    """
    tau_a = int(tau_a)
    tau_b = int(tau_b)
    if tau_a < 1 or tau_b < 1:
        raise ValueError("tau_a and tau_b must be >= 1")
    if abs(outputs.dt - inputs.dt) > 1e-9 * outputs.dt:
        raise ValueError("outputs and inputs must share the sampling interval")
    y = outputs.data
    u = inputs.data
    if y.shape[1] != u.shape[1]:
        raise ValueError("outputs and inputs must have the same sample count")
    n, nsamp = y.shape
    m = u.shape[0]
    k0 = max(tau_a, tau_b)
    rows = nsamp - k0
    if rows < 1:
        raise ValueError(
            f"need more than {k0} samples for tau_a={tau_a}, tau_b={tau_b}"
        )
    cols = n * tau_a + m * tau_b
    phi = np.empty((rows, cols))
    for i in range(1, tau_a + 1):
        phi[:, (i - 1) * n : i * n] = -y[:, k0 - i : nsamp - i].T
    off = n * tau_a
    for i in range(1, tau_b + 1):
        phi[:, off + (i - 1) * m : off + i * m] = u[:, k0 - i : nsamp - i].T
    target = y[:, k0:].T
    theta_t, _, rank, _ = sla.lstsq(phi, target, cond=1e-10, lapack_driver="gelsd")
    if rank < cols:
        warnings.warn(
            f"ARX regressor rank {rank} < {cols}; data is not persistently "
            "exciting and the coefficients are a minimum-norm solution",
            stacklevel=2,
        )
    theta = theta_t.T
    a = np.stack([theta[:, (i - 1) * n : i * n] for i in range(1, tau_a + 1)])
    b = np.stack(
        [theta[:, off + (i - 1) * m : off + i * m] for i in range(1, tau_b + 1)]
    )
    return ArxModel(a, b, outputs.dt)


def arx_state_matrix(arx):
    """Block-companion state matrix of the ARX output recursion.

    The matrix advances the stacked output history [y_k; ...; y_(k-tau_a)].
    Its top block row is [-a_1, ..., -a_tau_a, 0] and identity blocks sit on
    the sub-diagonal, giving size (tau_a + 1) n.  The trailing zero block
    column contributes n structurally zero eigenvalues; the remaining
    eigenvalues are the roots of the ARX characteristic polynomial.
    """
    n = arx.n
    size = (arx.tau_a + 1) * n
    A = np.zeros((size, size))
    for i in range(arx.tau_a):
        A[:n, i * n : (i + 1) * n] = -arx.a[i]
    for i in range(arx.tau_a):
        A[(i + 1) * n : (i + 2) * n, i * n : (i + 1) * n] = np.eye(n)
    return A


def arx_frf(arx, omega_rad_s):
    """Frequency response of the ARX difference equation.

    Evaluates H(w) = A(q)^-1 B(q) with q = exp(j w dt), A(q) = I + sum a_i
    q^-i and B(q) = sum b_i q^-i.  Grid points where A(q) is numerically
    singular (on top of a pole) are flagged with non-finite entries instead
    of raising.
    """
    omegas = np.atleast_1d(np.asarray(omega_rad_s, dtype=float))
    n, m = arx.n, arx.m
    H = np.empty((omegas.size, n, m), dtype=complex)
    for idx, w in enumerate(omegas):
        q_inv = np.exp(-1j * w * arx.dt)
        Aw = np.eye(n, dtype=complex)
        for i in range(arx.tau_a):
            Aw += arx.a[i] * q_inv ** (i + 1)
        Bw = np.zeros((n, m), dtype=complex)
        for i in range(arx.tau_b):
            Bw = Bw + arx.b[i] * q_inv ** (i + 1)
        try:
            H[idx] = np.linalg.solve(Aw, Bw)
        except np.linalg.LinAlgError:
            H[idx] = np.nan + 1j * np.nan
    return H
