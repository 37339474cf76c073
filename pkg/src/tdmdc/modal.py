"""Modal parameters from identified operators: extraction, MAC, sweeps.

Maps discrete eigenvalues of a fitted model to natural frequencies, damping
ratios, and mode shapes, compares shape sets with the modal assurance
criterion, classifies mode stability across delay-order sweeps, and runs the
Monte-Carlo dispersion studies.

Sweeps do not refactor the data matrices at every delay order.  A single
correlation table of all delayed output/input rows serves the whole sweep:
the snapshot Grams of any delay order are principal submatrices of it, so
each order costs an eigendecomposition of a correlation block instead of a
fresh SVD.  See _CorrelationSweeper.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from tdmdc.dmdc import (
    ENTROPY_THRESHOLD_DEFAULT,
    _SIGMA_RELATIVE_CUTOFF_GRAM,
    _entropy_rank_from_increments,
    DmdcModel,
    RankSelection,
    fit,
)
from tdmdc.embedding import EmbeddingSpec, build_snapshots, trim_start
from tdmdc.reference_models import analytic_modes, normalize_shape, simulate
from tdmdc.signals import TimeSeries, add_noise

# Discrete eigenvalues at or below this modulus are numerically zero and
# carry no mode.
_MU_MODULUS_FLOOR = 1e-12

# Stability flags attached to stabilization diagram entries.
FLAG_NEW = "new"
FLAG_STABLE_FREQ = "stable_freq"
FLAG_STABLE_ALL = "stable_all"
_FLAGS = (FLAG_NEW, FLAG_STABLE_FREQ, FLAG_STABLE_ALL)

# Correlation blocks up to this dimension use a full dense
# eigendecomposition; larger ones switch to subspace iteration for the
# leading eigenpairs (the entropy criterion needs only those plus the
# trace).
_FULL_EIG_DIM = 900

# Leading eigenpair count for the iterative path when ranks are
# auto-selected; explicit ranks raise it as needed.
_TOPK_DEFAULT = 48
_SUBSPACE_ITERS = 8


@dataclass(frozen=True)
class ModeEstimate:
    """One identified vibration mode.

    ``s`` is the continuous-time eigenvalue (rad/s), ``mu`` the discrete
    eigenvalue it was mapped from, ``shape`` the zero-delay block of the
    mode vector (unit norm, largest entry rotated real positive),
    ``delay_order`` the output delay order of the fit, and ``amplitude``
    the least-squares projection of the first snapshot onto the mode
    (diagnostic only).  Negative damping is legal; it marks the mode as a
    likely artifact but keeps it visible.
    """

    freq_hz: float
    damping: float
    s: complex
    mu: complex
    shape: np.ndarray
    delay_order: int
    amplitude: float

    def __post_init__(self):
        if not (np.isfinite(self.freq_hz) and self.freq_hz > 0.0):
            raise ValueError(f"freq_hz must be finite positive, got {self.freq_hz}")
        if not np.isfinite(self.damping):
            raise ValueError("damping must be finite")
        shape = np.asarray(self.shape, dtype=complex)
        if shape.ndim != 1:
            raise ValueError("shape must be a 1-D vector")
        object.__setattr__(self, "shape", shape)

    @property
    def flagged_negative_damping(self) -> bool:
        return self.damping < 0.0


@dataclass(frozen=True)
class ModeSet:
    """An ordered collection of modes from one identification."""

    modes: tuple
    dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, idx):
        return self.modes[idx]

    @property
    def freqs(self) -> np.ndarray:
        return np.array([m.freq_hz for m in self.modes], dtype=float)

    @property
    def dampings(self) -> np.ndarray:
        return np.array([m.damping for m in self.modes], dtype=float)

    def shape_matrix(self) -> np.ndarray:
        """Mode shapes as columns, (n x n_modes)."""
        if not self.modes:
            return np.zeros((0, 0), dtype=complex)
        return np.column_stack([m.shape for m in self.modes])


@dataclass(frozen=True)
class StabilizationDiagram:
    """Modes of a delay-order sweep with per-entry stability flags.

    ``entries`` is a tuple of (delay_order, ModeEstimate, flag) triples
    sorted by (delay_order, freq_hz); ``failed_orders`` lists delay orders
    whose identification failed (gaps, not aborts).
    """

    entries: tuple
    freq_tol: float = 0.01
    damp_tol: float = 0.05
    failed_orders: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "failed_orders", tuple(self.failed_orders))
        previous = None
        for tau, mode, flag in self.entries:
            if flag not in _FLAGS:
                raise ValueError(f"unknown stability flag {flag!r}")
            key = (tau, mode.freq_hz)
            if previous is not None and key < previous:
                raise ValueError("entries must be sorted by (delay_order, freq_hz)")
            previous = key

    @property
    def delay_orders(self) -> list:
        seen = []
        for tau, _, _ in self.entries:
            if not seen or seen[-1] != tau:
                seen.append(tau)
        return seen

    def at_order(self, tau: int) -> list:
        return [(mode, flag) for t, mode, flag in self.entries if t == tau]

    def rows(self):
        """Flat (delay_order, freq_hz, damping, flag) rows for export."""
        for tau, mode, flag in self.entries:
            yield tau, mode.freq_hz, mode.damping, flag


@dataclass(frozen=True)
class SweepStatistics:
    """Per-cluster dispersion summary of a stabilization diagram.

    Arrays are aligned with ``freq_mean`` order (ascending frequency).
    ``ci_freq``/``ci_damp`` are per-cluster 1.96-sigma half-widths;
    ``ci_width_freq``/``ci_width_damp`` are their averages over clusters,
    the form the confidence-interval plots consume.
    """

    freq_mean: np.ndarray
    freq_std: np.ndarray
    freq_median: np.ndarray
    freq_q1: np.ndarray
    freq_q3: np.ndarray
    damp_mean: np.ndarray
    damp_std: np.ndarray
    damp_median: np.ndarray
    damp_q1: np.ndarray
    damp_q3: np.ndarray
    counts: np.ndarray
    ci_freq: np.ndarray
    ci_damp: np.ndarray
    ci_width_freq: float
    ci_width_damp: float


@dataclass(frozen=True)
class NoiseScalingResult:
    """Dispersion of modal estimates versus delay order under noise.

    ``std_freq``/``std_damp``/``mean_freq``/``mean_damp`` have shape
    (len(tau_list), n_reference_modes), columns ordered by ascending
    reference frequency.  ``slope`` is the fitted log-log slope of
    std(damping) of the first mode versus delay order; delay orders in
    ``excluded_orders`` (failure rate above 20%) do not enter the fit.
    """

    tau_list: tuple
    mean_freq: np.ndarray
    mean_damp: np.ndarray
    std_freq: np.ndarray
    std_damp: np.ndarray
    failure_rate: np.ndarray
    slope: float
    excluded_orders: tuple
    trials: int
    sigma: float | None
    snr_db: float | None
    freq_quartiles: np.ndarray | None = None
    damp_quartiles: np.ndarray | None = None

    def quartile(self, which: str, q: int) -> np.ndarray:
        """Quartile surface (q1/median/q3 for q = 1/2/3) of freq or damp."""
        table = self.freq_quartiles if which == "freq" else self.damp_quartiles
        if table is None:
            raise ValueError("quartiles were not recorded for this study")
        return table[{1: 0, 2: 1, 3: 2}[q]]


def to_modes(model: DmdcModel, band_hz=None):
    """Physical modes of a fitted model.

    Discrete eigenvalues map through s = ln(mu)/dt (principal branch) to
    f = |s|/(2 pi) and damping -Re(s)/|s|.  Numerically zero eigenvalues,
    non-oscillatory ones (Im s = 0), and frequencies at or above Nyquist
    are dropped; of each conjugate pair, the positive-imaginary member
    represents the mode.  Shapes are the zero-delay block of the mode
    vectors, unit-normalized with the largest entry rotated real positive.
    ``band_hz = (lo, hi)`` keeps only modes inside the band.  The result is
    sorted by ascending frequency and may be empty.
    """
    if band_hz is not None:
        lo, hi = float(band_hz[0]), float(band_hz[1])
        if not (0.0 <= lo < hi):
            raise ValueError(f"invalid frequency band {band_hz}")
    dt = model.dt
    nyquist = 0.5 / dt
    n = model.spec.n
    out = []
    for i, mu in enumerate(model.eigvals):
        if abs(mu) <= _MU_MODULUS_FLOOR:
            continue
        s = complex(np.log(complex(mu)) / dt)
        if s.imag <= 0.0:
            # Non-oscillatory, or the negative-frequency half of a pair.
            continue
        freq = abs(s) / (2.0 * math.pi)
        if freq >= nyquist:
            continue
        if band_hz is not None and not (lo <= freq <= hi):
            continue
        damping = -s.real / abs(s)
        block = np.asarray(model.modes[:n, i], dtype=complex)
        if np.linalg.norm(block) == 0.0:
            shape = block
        else:
            shape = normalize_shape(block)
        out.append(
            ModeEstimate(
                freq_hz=freq,
                damping=damping,
                s=s,
                mu=complex(mu),
                shape=shape,
                delay_order=model.spec.tau_a,
                amplitude=float(model.amplitudes[i]),
            )
        )
    out.sort(key=lambda mode: mode.freq_hz)
    return out


def _shape_stack(shapes) -> np.ndarray:
    """Shapes as columns of a complex matrix."""
    if isinstance(shapes, np.ndarray) and shapes.ndim == 2:
        mat = shapes.astype(complex, copy=False)
    else:
        cols = [np.asarray(s, dtype=complex).ravel() for s in shapes]
        if not cols:
            raise ValueError("no mode shapes given")
        lengths = {c.size for c in cols}
        if len(lengths) != 1:
            raise ValueError(f"mode shapes have mixed lengths {sorted(lengths)}")
        mat = np.column_stack(cols)
    if mat.size == 0:
        raise ValueError("no mode shapes given")
    return mat


def mac(phi, psi) -> float:
    """Modal assurance criterion of two shapes: |phi^H psi|^2 normalized.

    Invariant under any nonzero complex scaling of either argument; always
    in [0, 1].  Raises on length mismatch or a zero vector.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    psi = np.asarray(psi, dtype=complex).ravel()
    if phi.size != psi.size:
        raise ValueError(f"shape lengths differ: {phi.size} vs {psi.size}")
    pp = np.vdot(phi, phi).real
    ss = np.vdot(psi, psi).real
    if pp == 0.0 or ss == 0.0:
        raise ValueError("mode shape is identically zero")
    value = abs(np.vdot(phi, psi)) ** 2 / (pp * ss)
    return float(min(value, 1.0))


def mac_matrix(estimated, reference) -> np.ndarray:
    """Pairwise MAC values; rows follow ``estimated``, columns ``reference``.

    Arguments are sequences of shape vectors, or 2-D arrays with shapes as
    columns.  The matrix is rectangular when the counts differ.
    """
    E = _shape_stack(estimated)
    R = _shape_stack(reference)
    if E.shape[0] != R.shape[0]:
        raise ValueError(f"shape lengths differ: {E.shape[0]} vs {R.shape[0]}")
    ne = np.sum(np.abs(E) ** 2, axis=0)
    nr = np.sum(np.abs(R) ** 2, axis=0)
    if np.any(ne == 0.0) or np.any(nr == 0.0):
        raise ValueError("mode shape is identically zero")
    cross = np.abs(E.conj().T @ R) ** 2
    return np.minimum(cross / np.outer(ne, nr), 1.0)


def _resolve_rank_policy(rank_policy):
    """Normalize a rank policy to None (auto), "full", or an (r, p) tuple.

    "full" keeps every direction above the deflation cutoff; it is the
    right choice for noiseless broadband records, whose smoothly decaying
    spectra defeat the entropy criterion.
    """
    if rank_policy == "auto" or rank_policy is None:
        return None
    if rank_policy == "full":
        return "full"
    if isinstance(rank_policy, (tuple, list)) and len(rank_policy) == 2:
        r, p = int(rank_policy[0]), int(rank_policy[1])
        if r < 1 or p < 1:
            raise ValueError(f"ranks must be >= 1, got r={r}, p={p}")
        return (r, p)
    raise ValueError(
        f"rank_policy must be 'auto', 'full', or an (r, p) pair, got "
        f"{rank_policy!r}"
    )


def _psd_topk(G, k_needed):
    """Leading eigenpairs of a symmetric PSD correlation block, descending.

    Returns (eigenvalues, eigenvectors, trace).  Small blocks use a full
    dense decomposition (and return the complete spectrum); large ones run
    re-orthogonalized subspace iteration with a deterministic start and a
    Rayleigh-Ritz extraction, returning the leading ``k_needed``-or-more
    pairs.  The squared formulation separates eigenvalues quadratically,
    so a handful of iterations resolves any direction that is not buried
    in the noise floor.
    """
    dim = G.shape[0]
    trace = float(np.trace(G))
    if dim <= _FULL_EIG_DIM or k_needed >= 0.6 * dim:
        w, v = sla.eigh(G)
        order = np.argsort(w)[::-1]
        return np.clip(w[order], 0.0, None), v[:, order], trace
    k = min(dim, k_needed + 16)
    rng = np.random.default_rng(0x5EED)
    Y = G @ rng.standard_normal((dim, k))
    for _ in range(_SUBSPACE_ITERS):
        Y, _ = np.linalg.qr(Y)
        Y = G @ Y
    Q, _ = np.linalg.qr(Y)
    w, V = sla.eigh(Q.T @ G @ Q)
    order = np.argsort(w)[::-1]
    lam = np.clip(w[order], 0.0, None)
    return lam, Q @ V[:, order], trace


def _entropy_rank_from_eigs(lam, trace, threshold):
    """Entropy-increment rank from leading Gram eigenvalues plus trace.

    Shares are lam_i / trace, i.e. energy shares of the data matrix whose
    Gram was decomposed; identical to the squared-value convention of
    singular_entropy_rank given the full spectrum, and exact for any rank
    the criterion can select as long as the leading part covers it.
    """
    if trace <= 0.0:
        raise ValueError("correlation block has non-positive trace")
    shares = np.clip(lam, 0.0, None) / trace
    increments = np.zeros_like(shares)
    nz = shares > 0.0
    increments[nz] = -shares[nz] * np.log(shares[nz])
    return _entropy_rank_from_increments(increments, threshold), increments


class _CorrelationSweeper:
    """Delay-order sweeps on one shared correlation table.

    The master table M = Z Z^T correlates every delayed output row (offsets
    -1 .. tau_a_max) and delayed input row (offsets 0 .. tau_b_max - 1)
    over one shared set of embedding columns.  For a given delay order, the
    Grams of X', of the stacked [X; Gamma], and their cross block are
    principal submatrices of M, so the identification needs only
    eigendecompositions of those blocks; right singular subspaces are never
    formed.  Results match the direct SVD path to roundoff, with
    conditioning squared (irrelevant above the deflation floor).

    ``boundary`` picks the shared column set.  "zero-fill" uses the K-2
    columns of build_snapshots, filling pre-record samples with zeros, and
    matches the direct path at every order.  "trim" keeps fully recorded
    windows for the deepest order of the table, so every order in the sweep
    is evaluated on the same column set; the direct path trims per order
    instead, so only the deepest order matches it exactly.  The uniform
    window is what makes estimates comparable across orders.
    """

    def __init__(
        self,
        outputs: TimeSeries,
        inputs: TimeSeries,
        tau_a_max: int,
        tau_b_max: int,
        boundary: str = "zero-fill",
    ):
        if abs(outputs.dt - inputs.dt) > 1e-9 * outputs.dt:
            raise ValueError(
                f"sample intervals differ: {outputs.dt} vs {inputs.dt}"
            )
        if outputs.n_samples != inputs.n_samples:
            raise ValueError(
                f"sample counts differ: {outputs.n_samples} vs {inputs.n_samples}"
            )
        if boundary not in ("zero-fill", "trim"):
            raise ValueError(
                f"boundary must be 'zero-fill' or 'trim', got {boundary!r}"
            )
        tau_a_max = int(tau_a_max)
        tau_b_max = int(tau_b_max)
        if tau_a_max < 1 or tau_b_max < 1:
            raise ValueError("delay orders must be >= 1")
        K = outputs.n_samples
        if K < max(tau_a_max, tau_b_max) + 3:
            raise ValueError(
                f"record of {K} samples is too short for delay order "
                f"{max(tau_a_max, tau_b_max)}"
            )
        self.n = outputs.n_channels
        self.m = inputs.n_channels
        self.dt = outputs.dt
        self.tau_a_max = tau_a_max
        self.tau_b_max = tau_b_max
        self.boundary = boundary

        n, m = self.n, self.m
        rows = (tau_a_max + 2) * n + tau_b_max * m
        if boundary == "zero-fill":
            yb = np.pad(outputs.data, ((0, 0), (tau_a_max, 0)))
            ub = np.pad(inputs.data, ((0, 0), (tau_b_max, 0)))
            cols = K - 2
            ybase = tau_a_max + 1
            ubase = tau_b_max + 1
            self._x0_head = np.pad(outputs.data[:, :2], ((0, 0), (tau_a_max - 1, 0)))
        else:
            yb = outputs.data
            ub = inputs.data
            k0 = trim_start(tau_a_max, tau_b_max)
            cols = K - 1 - k0
            ybase = k0
            ubase = k0
            self._x0_head = outputs.data[:, : k0 + 1].copy()
        Z = np.empty((rows, cols))
        for block, offset in enumerate(range(-1, tau_a_max + 1)):
            Z[block * n : (block + 1) * n] = yb[:, ybase - offset : ybase - offset + cols]
        base = (tau_a_max + 2) * n
        for d in range(tau_b_max):
            Z[base + d * m : base + (d + 1) * m] = ub[:, ubase - d : ubase - d + cols]
        self.M = Z @ Z.T

    def identify(self, tau_a, tau_b, rank_policy="auto", entropy_threshold=None) -> DmdcModel:
        """Fit the reduced operators at one delay order from the table."""
        tau_a = int(tau_a)
        tau_b = int(tau_b)
        if not 1 <= tau_a <= self.tau_a_max:
            raise ValueError(f"tau_a={tau_a} outside table range 1..{self.tau_a_max}")
        if not 1 <= tau_b <= self.tau_b_max:
            raise ValueError(f"tau_b={tau_b} outside table range 1..{self.tau_b_max}")
        if entropy_threshold is None:
            entropy_threshold = ENTROPY_THRESHOLD_DEFAULT
        fixed = _resolve_rank_policy(rank_policy)

        n, m = self.n, self.m
        dim_x = (tau_a + 1) * n
        dim_u = tau_b * m
        base = (self.tau_a_max + 2) * n
        sl_xp = slice(0, dim_x)
        sl_x = slice(n, dim_x + n)
        sl_u = slice(base, base + dim_u)
        M = self.M

        G_xp = M[sl_xp, sl_xp]
        G_om = np.empty((dim_x + dim_u, dim_x + dim_u))
        G_om[:dim_x, :dim_x] = M[sl_x, sl_x]
        G_om[:dim_x, dim_x:] = M[sl_x, sl_u]
        G_om[dim_x:, :dim_x] = M[sl_u, sl_x]
        G_om[dim_x:, dim_x:] = M[sl_u, sl_u]
        C = np.hstack([M[sl_xp, sl_x], M[sl_xp, sl_u]])

        if fixed is None:
            k_needed = _TOPK_DEFAULT
        elif fixed == "full":
            k_needed = dim_x + dim_u
        else:
            k_needed = max(_TOPK_DEFAULT, *fixed)
        lam_x, Qx, tr_x = _psd_topk(G_xp, k_needed)
        lam_o, Qo, tr_o = _psd_topk(G_om, k_needed)

        r_auto, _ = _entropy_rank_from_eigs(lam_x, tr_x, entropy_threshold)
        p_auto, increments_o = _entropy_rank_from_eigs(lam_o, tr_o, entropy_threshold)
        variation_o = np.abs(np.diff(increments_o, prepend=increments_o[:1]))
        if fixed is None:
            r, p = r_auto, p_auto
        elif fixed == "full":
            r, p = dim_x, dim_x + dim_u
        else:
            r, p = fixed
        r = min(r, lam_x.size, dim_x)
        p = min(p, lam_o.size, dim_x + dim_u)
        if p < r:
            warnings.warn(
                f"regression rank p={p} is below projection rank r={r}; the "
                "reduced operator cannot be fully informed",
                stacklevel=2,
            )

        sigma_o = np.sqrt(lam_o[:p])
        keep = sigma_o >= _SIGMA_RELATIVE_CUTOFF_GRAM * sigma_o[0]
        p_eff = int(np.count_nonzero(keep))
        if p_eff < p:
            warnings.warn(
                f"{p - p_eff} of {p} stacked-data singular values fall below "
                f"the relative cutoff {_SIGMA_RELATIVE_CUTOFF_GRAM} and were "
                "deflated",
                stacklevel=2,
            )
        lam_keep = lam_o[:p][keep]
        Q_keep = Qo[:, :p][:, keep]

        U_hat = Qx[:, :r]
        U1 = Q_keep[:dim_x]
        U2 = Q_keep[dim_x:]
        T1 = C @ (Q_keep / lam_keep)
        UhT1 = U_hat.T @ T1
        G1 = U1.T @ U_hat
        A_tilde = UhT1 @ G1
        B_reduced = UhT1 @ U2.T

        eigvals, W = sla.eig(A_tilde)
        order = np.lexsort((eigvals.imag, eigvals.real))
        eigvals = eigvals[order]
        W = W[:, order]
        modes = T1 @ (G1 @ W)

        # First embedded column of this table's window, for amplitudes.
        x0 = np.zeros(dim_x, dtype=complex)
        head_width = self._x0_head.shape[1]
        for d in range(tau_a + 1):
            x0[d * n : (d + 1) * n] = self._x0_head[:, head_width - 1 - d]
        amp, _, _, _ = np.linalg.lstsq(modes, x0, rcond=None)

        ranks_out = RankSelection(
            r,
            p,
            entropy_increments=increments_o,
            variation=variation_o,
            p_effective=p_eff,
        )
        return DmdcModel(
            A_tilde=A_tilde,
            B_reduced=B_reduced,
            U_hat=U_hat,
            eigvals=eigvals,
            eigvecs=W,
            modes=modes,
            amplitudes=np.abs(amp),
            dt=self.dt,
            spec=EmbeddingSpec(tau_a, tau_b, n, m),
            ranks=ranks_out,
        )


def _classify(pool, modes, freq_tol, damp_tol):
    """Flag modes against cluster representatives from earlier orders.

    ``pool`` holds (freq, damping) of each cluster at the most recent order
    where it appeared.  Matching is nearest relative frequency within
    ``freq_tol``, one-to-one, ties broken toward the smaller damping
    difference; matched entries update their cluster, unmatched ones start
    new clusters.  Returns (flags, updated_pool).
    """
    pairs = []
    for i, mode in enumerate(modes):
        for j, (freq, damping) in enumerate(pool):
            rel_df = abs(mode.freq_hz - freq) / freq
            if rel_df < freq_tol:
                pairs.append((rel_df, abs(mode.damping - damping), i, j))
    pairs.sort()
    flags = [FLAG_NEW] * len(modes)
    new_pool = list(pool)
    used_modes = set()
    used_clusters = set()
    for rel_df, abs_dz, i, j in pairs:
        if i in used_modes or j in used_clusters:
            continue
        used_modes.add(i)
        used_clusters.add(j)
        prev_damping = pool[j][1]
        if prev_damping == 0.0:
            damping_stable = abs_dz == 0.0
        else:
            damping_stable = abs_dz / abs(prev_damping) < damp_tol
        flags[i] = FLAG_STABLE_ALL if damping_stable else FLAG_STABLE_FREQ
        new_pool[j] = (modes[i].freq_hz, modes[i].damping)
    for i, mode in enumerate(modes):
        if i not in used_modes:
            new_pool.append((mode.freq_hz, mode.damping))
    return flags, new_pool


def stabilization_sweep(
    outputs: TimeSeries,
    inputs: TimeSeries,
    tau_range,
    step=1,
    rank_policy="auto",
    *,
    tau_b=None,
    freq_tol=0.01,
    damp_tol=0.05,
    entropy_threshold=None,
    band_hz=None,
    engine="auto",
    boundary="zero-fill",
) -> StabilizationDiagram:
    """Identify modes over a range of output delay orders and flag stability.

    ``tau_range`` is an inclusive (min, max) pair swept with ``step``.
    ``rank_policy`` is "auto" (entropy criterion), "full", or an (r, p)
    pair.  ``tau_b`` fixes the input delay order; None tracks tau_a.  Each
    mode is classified against the nearest-frequency cluster from earlier
    orders: within ``freq_tol`` relative it is stable_freq, within
    ``damp_tol`` relative damping additionally stable_all, otherwise new.
    A failed identification leaves a gap at that order and is recorded, not
    fatal.

    ``boundary`` is the snapshot boundary handling of build_snapshots;
    "trim" is the right choice for noisy ring-down records (see there).
    ``engine`` selects the sweep backend: "correlation" shares one
    correlation table across all orders, "direct" runs the SVD path per
    order, "auto" picks by problem size.  Both backends give the same
    diagram to numerical precision under "zero-fill"; under "trim" the
    correlation backend evaluates every order on the deepest order's
    column window while the direct backend trims per order, which is the
    same estimator on slightly different column sets.
    """
    tau_min, tau_max = int(tau_range[0]), int(tau_range[1])
    step = int(step)
    if tau_min < 1 or tau_min > tau_max:
        raise ValueError(f"invalid delay order range {tau_range}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if tau_b is not None and int(tau_b) < 1:
        raise ValueError(f"tau_b must be >= 1, got {tau_b}")
    _resolve_rank_policy(rank_policy)
    taus = list(range(tau_min, tau_max + 1, step))
    tau_b_max = int(tau_b) if tau_b is not None else tau_max

    if engine == "auto":
        rows = outputs.n_channels * (tau_max + 2) + inputs.n_channels * tau_b_max
        cols = outputs.n_samples - 2
        use_table = rows <= 3200 and rows * cols <= 2.4e8
    elif engine in ("correlation", "direct"):
        use_table = engine == "correlation"
    else:
        raise ValueError(f"unknown engine {engine!r}")

    sweeper = None
    if use_table:
        sweeper = _CorrelationSweeper(outputs, inputs, tau_max, tau_b_max, boundary=boundary)

    entries = []
    failed = []
    pool = []
    deflated_orders = []
    for tau in taus:
        tb = int(tau_b) if tau_b is not None else tau
        try:
            # The fit stage warns per order when trailing singular values
            # deflate; over a long sweep that floods stderr with near
            # duplicates, so collect them here and summarize once.
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                if sweeper is not None:
                    model = sweeper.identify(
                        tau, tb, rank_policy=rank_policy, entropy_threshold=entropy_threshold
                    )
                else:
                    snaps = build_snapshots(outputs, inputs, tau, tb, boundary=boundary)
                    ranks = _resolve_rank_policy(rank_policy)
                    model = fit(snaps, ranks=ranks, entropy_threshold=entropy_threshold)
                modes = to_modes(model, band_hz=band_hz)
            for w in caught:
                if "deflated" in str(w.message):
                    deflated_orders.append(tau)
                else:
                    warnings.warn(w.message, w.category, stacklevel=2)
        except (ValueError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"identification failed at delay order {tau}: {exc}")
            failed.append(tau)
            continue
        flags, pool = _classify(pool, modes, freq_tol, damp_tol)
        for mode, flag in zip(modes, flags):
            entries.append((tau, mode, flag))
    if deflated_orders:
        warnings.warn(
            f"rank deflation at {len(deflated_orders)} of {len(taus)} delay "
            f"orders (first at tau={deflated_orders[0]}); per-order messages "
            "suppressed"
        )
    return StabilizationDiagram(
        entries=tuple(entries),
        freq_tol=freq_tol,
        damp_tol=damp_tol,
        failed_orders=tuple(failed),
    )


def _cluster_by_frequency(freqs, rtol):
    """Assign sorted-order cluster labels by relative frequency proximity.

    Greedy single pass over ascending frequency: a value joins the current
    cluster when it lies within ``rtol`` of the cluster's running mean,
    otherwise it starts a new cluster.  Returns labels aligned with the
    input order.
    """
    order = np.argsort(freqs)
    labels = np.empty(len(freqs), dtype=int)
    current = -1
    mean = None
    count = 0
    for idx in order:
        f = freqs[idx]
        if current < 0 or abs(f - mean) > rtol * mean:
            current += 1
            mean = f
            count = 1
        else:
            count += 1
            mean += (f - mean) / count
        labels[idx] = current
    return labels, current + 1


def sweep_statistics(diagram: StabilizationDiagram, mode_matcher_tol=0.02) -> SweepStatistics:
    """Cluster diagram entries by frequency and summarize their dispersion.

    Entries within ``mode_matcher_tol`` relative frequency agglomerate into
    one cluster; each cluster reports mean, sample standard deviation
    (ddof=1, zero for singletons), median, quartiles (linear
    interpolation), and 1.96-sigma confidence half-widths, for frequency
    and damping.  Raises on an empty diagram.
    """
    if not diagram.entries:
        raise ValueError("stabilization diagram has no entries")
    freqs = np.array([mode.freq_hz for _, mode, _ in diagram.entries])
    damps = np.array([mode.damping for _, mode, _ in diagram.entries])
    labels, n_clusters = _cluster_by_frequency(freqs, mode_matcher_tol)

    def summarize(values):
        mean = np.empty(n_clusters)
        std = np.empty(n_clusters)
        med = np.empty(n_clusters)
        q1 = np.empty(n_clusters)
        q3 = np.empty(n_clusters)
        for c in range(n_clusters):
            vals = values[labels == c]
            mean[c] = vals.mean()
            std[c] = vals.std(ddof=1) if vals.size > 1 else 0.0
            q1[c], med[c], q3[c] = np.percentile(vals, [25.0, 50.0, 75.0])
        return mean, std, med, q1, q3

    freq_mean, freq_std, freq_med, freq_q1, freq_q3 = summarize(freqs)
    damp_mean, damp_std, damp_med, damp_q1, damp_q3 = summarize(damps)
    counts = np.bincount(labels, minlength=n_clusters)

    order = np.argsort(freq_mean)
    ci_freq = 1.96 * freq_std[order]
    ci_damp = 1.96 * damp_std[order]
    return SweepStatistics(
        freq_mean=freq_mean[order],
        freq_std=freq_std[order],
        freq_median=freq_med[order],
        freq_q1=freq_q1[order],
        freq_q3=freq_q3[order],
        damp_mean=damp_mean[order],
        damp_std=damp_std[order],
        damp_median=damp_med[order],
        damp_q1=damp_q1[order],
        damp_q3=damp_q3[order],
        counts=counts[order],
        ci_freq=ci_freq,
        ci_damp=ci_damp,
        ci_width_freq=float(ci_freq.mean()),
        ci_width_damp=float(ci_damp.mean()),
    )


def noise_scaling_study(
    model,
    excitation: TimeSeries,
    sigma,
    tau_list,
    trials: int,
    seed,
    *,
    snr_db=None,
    tau_b=2,
    rank_policy="auto",
    entropy_threshold=None,
    match_rtol=0.2,
    boundary="trim",
) -> NoiseScalingResult:
    """Monte-Carlo dispersion of modal estimates versus delay order.

    Simulates the reference model once, then for each trial corrupts the
    response (absolute noise level ``sigma``, or per-channel calibrated
    ``snr_db`` if given instead) and identifies at every delay order in
    ``tau_list``.  Estimates are matched to the analytic reference modes by
    nearest frequency within ``match_rtol`` relative; a trial that yields
    no match for the first mode counts as a failure at that order.  Orders
    with failure rate above 20% are reported and excluded from the log-log
    slope fit of std(damping, mode 1) versus delay order.

    ``boundary`` defaults to "trim": on noisy records the zero-filled
    boundary wedge of the default embedding biases damping estimates
    toward zero (see build_snapshots), so the study regresses on fully
    recorded windows only.

    Deterministic for a given ``seed``: trial noise streams are spawned
    children, so results do not depend on execution order.
    """
    trials = int(trials)
    if trials < 20:
        raise ValueError(f"need at least 20 trials for stable dispersion, got {trials}")
    tau_list = [int(t) for t in tau_list]
    if not tau_list or any(b <= a for a, b in zip(tau_list, tau_list[1:])):
        raise ValueError("tau_list must be non-empty and strictly ascending")
    if tau_list[0] < 1:
        raise ValueError("delay orders must be >= 1")
    if (sigma is None) == (snr_db is None):
        raise ValueError("give exactly one of sigma and snr_db")
    if sigma is not None and sigma < 0.0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")

    response = simulate(model, excitation)
    reference = analytic_modes(model)
    ref_freqs = np.array([mode.freq_hz for mode in reference])
    n_modes = ref_freqs.size
    n_taus = len(tau_list)
    tau_max = max(tau_list)

    freq_samples = np.full((n_taus, trials, n_modes), np.nan)
    damp_samples = np.full((n_taus, trials, n_modes), np.nan)
    children = np.random.SeedSequence(seed).spawn(trials)
    for trial, child in enumerate(children):
        if snr_db is not None:
            noisy = add_noise(response, snr_db, seed=child)
        elif sigma == 0.0:
            noisy = response
        else:
            rng = np.random.default_rng(child)
            noisy = TimeSeries(
                response.data + sigma * rng.standard_normal(response.data.shape),
                response.dt,
                response.t0,
            )
        sweeper = _CorrelationSweeper(noisy, excitation, tau_max, tau_b, boundary=boundary)
        for ti, tau in enumerate(tau_list):
            try:
                fitted = sweeper.identify(
                    tau, tau_b, rank_policy=rank_policy, entropy_threshold=entropy_threshold
                )
                modes = to_modes(fitted)
            except (ValueError, np.linalg.LinAlgError):
                continue
            if not modes:
                continue
            est_freqs = np.array([mode.freq_hz for mode in modes])
            for k, f_ref in enumerate(ref_freqs):
                nearest = int(np.argmin(np.abs(est_freqs - f_ref)))
                if abs(est_freqs[nearest] - f_ref) <= match_rtol * f_ref:
                    freq_samples[ti, trial, k] = modes[nearest].freq_hz
                    damp_samples[ti, trial, k] = modes[nearest].damping

    with warnings.catch_warnings():
        # All-NaN slices legitimately occur at fully failed orders.
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_freq = np.nanmean(freq_samples, axis=1)
        mean_damp = np.nanmean(damp_samples, axis=1)
        std_freq = np.nanstd(freq_samples, axis=1, ddof=1)
        std_damp = np.nanstd(damp_samples, axis=1, ddof=1)
        freq_quart = np.nanpercentile(freq_samples, [25.0, 50.0, 75.0], axis=1)
        damp_quart = np.nanpercentile(damp_samples, [25.0, 50.0, 75.0], axis=1)
    failure_rate = np.mean(np.isnan(damp_samples[:, :, 0]), axis=1)

    excluded = [tau for ti, tau in enumerate(tau_list) if failure_rate[ti] > 0.2]
    usable = np.array(
        [
            failure_rate[ti] <= 0.2 and np.isfinite(std_damp[ti, 0]) and std_damp[ti, 0] > 0.0
            for ti in range(n_taus)
        ]
    )
    if np.count_nonzero(usable) >= 2:
        x = np.log(np.array(tau_list, dtype=float)[usable])
        y = np.log(std_damp[usable, 0])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = float("nan")

    return NoiseScalingResult(
        tau_list=tuple(tau_list),
        mean_freq=mean_freq,
        mean_damp=mean_damp,
        std_freq=std_freq,
        std_damp=std_damp,
        failure_rate=failure_rate,
        slope=slope,
        excluded_orders=tuple(excluded),
        trials=trials,
        sigma=None if sigma is None else float(sigma),
        snr_db=None if snr_db is None else float(snr_db),
        freq_quartiles=freq_quart,
        damp_quartiles=damp_quart,
    )
