"""Excitation synthesis and signal conditioning for modal identification.

Everything here operates on :class:`TimeSeries`, a uniformly sampled
multichannel record.  Channels are rows, samples are columns, matching the
matrix conventions of the identification stack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled multichannel signal.

    Parameters
    ----------
    data : ndarray, shape (n_channels, n_samples)
        Sample values, stored as float64.
    dt : float
        Sampling interval in seconds, strictly positive and finite.
    t0 : float
        Time of the first sample.
    """

    data: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"data must be 2-D (channels, samples), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"data must hold at least one channel and one sample, got {arr.shape}")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not math.isfinite(self.t0):
            raise ValueError(f"t0 must be finite, got {self.t0}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data contains non-finite samples")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def fs(self) -> float:
        """Sampling rate in Hz."""
        return 1.0 / self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def duration(self) -> float:
        """Time spanned from first to last sample."""
        return self.dt * (self.n_samples - 1)


def impulse(n_channels, active_channel, amplitude, sample_index, n_samples, dt):
    """Single-sample impulse on one channel, zeros elsewhere.

    ``active_channel`` is 1-based (channel 1 is the first row, matching the
    ``ch1..chN`` CSV headers); ``sample_index`` is 0-based.
    """
    n_channels = int(n_channels)
    active_channel = int(active_channel)
    sample_index = int(sample_index)
    n_samples = int(n_samples)
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    if not 1 <= active_channel <= n_channels:
        raise ValueError(
            f"active_channel must be in 1..{n_channels}, got {active_channel}"
        )
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0 <= sample_index < n_samples:
        raise ValueError(
            f"sample_index must be in 0..{n_samples - 1}, got {sample_index}"
        )
    if not math.isfinite(amplitude):
        raise ValueError("amplitude must be finite")
    data = np.zeros((n_channels, n_samples))
    data[active_channel - 1, sample_index] = amplitude
    return TimeSeries(data, dt)


def log_chirp(f0_hz, f1_hz, duration_s, dt, amplitude=1.0):
    """Logarithmic (exponential) sine sweep from ``f0_hz`` to ``f1_hz``.

    The sweep is u(t) = A sin(2 pi f0 T / ln(f1/f0) ((f1/f0)^(t/T) - 1)) with
    instantaneous frequency f(t) = f0 (f1/f0)^(t/T).  Samples run from t = 0
    to t = T inclusive, so the final sample's instantaneous frequency is
    exactly ``f1_hz``.

    Returns
    -------
    series : TimeSeries
        Single-channel sweep record.
    inst_freq_hz : ndarray
        Instantaneous frequency at each sample, for delay-order bound
        computations.
    """
    nyquist = 0.5 / dt
    if not (0.0 < f0_hz < f1_hz):
        raise ValueError(f"need 0 < f0 < f1, got f0={f0_hz}, f1={f1_hz}")
    if f1_hz > nyquist * (1.0 + 1e-12):
        raise ValueError(f"f1={f1_hz} Hz exceeds Nyquist {nyquist} Hz")
    if duration_s <= 0.0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s / dt)) + 1
    if n < 2:
        raise ValueError("duration shorter than one sampling interval")
    t = dt * np.arange(n)
    ratio = f1_hz / f0_hz
    log_ratio = math.log(ratio)
    phase = 2.0 * math.pi * f0_hz * duration_s / log_ratio * (
        np.power(ratio, t / duration_s) - 1.0
    )
    data = amplitude * np.sin(phase)
    inst_freq = f0_hz * np.power(ratio, t / duration_s)
    return TimeSeries(data[np.newaxis, :], dt), inst_freq


def chirp_crossing_time(f0_hz, f1_hz, duration_s, f_target_hz):
    """Time at which a log sweep's instantaneous frequency reaches a target.

    Solves f0 (f1/f0)^(t/T) = f_target for t.  The target must lie inside
    [f0, f1].
    """
    if not f0_hz <= f_target_hz <= f1_hz:
        raise ValueError(
            f"target {f_target_hz} Hz outside sweep band [{f0_hz}, {f1_hz}]"
        )
    return duration_s * math.log(f_target_hz / f0_hz) / math.log(f1_hz / f0_hz)


def add_noise(series, snr_db, seed=None):
    """Add white Gaussian noise at a per-channel signal-to-noise ratio.

    Each channel receives noise with variance P_ch / 10^(snr_db/10) where
    P_ch is that channel's mean squared value.  A channel with zero power
    receives zero noise.  ``snr_db=None`` or infinity returns an exact copy.
    Channel noise streams are spawned independently from ``seed``, so adding
    channels to a record does not perturb the noise on existing ones.
    """
    if snr_db is None or math.isinf(snr_db):
        return TimeSeries(series.data.copy(), series.dt, series.t0)
    power = np.mean(series.data**2, axis=1)
    sigma = np.sqrt(power / (10.0 ** (snr_db / 10.0)))
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    streams = seed.spawn(series.n_channels)
    noisy = series.data.copy()
    for ch, stream in enumerate(streams):
        if sigma[ch] > 0.0:
            rng = np.random.default_rng(stream)
            noisy[ch] += sigma[ch] * rng.standard_normal(series.n_samples)
    return TimeSeries(noisy, series.dt, series.t0)


def zero_pad(outputs, inputs, tau_a, tau_b):
    """Pad records with boundary zeros for delay-embedded identification.

    Prepends and appends ``tau_a`` zero samples to the output record and
    ``tau_b`` zero samples to the input record, shifting each start time
    back accordingly.  Intended for excitations that begin and end at rest
    relative to the record boundaries, where the padding is consistent with
    the underlying dynamics.
    """
    tau_a = int(tau_a)
    tau_b = int(tau_b)
    if tau_a < 0 or tau_b < 0:
        raise ValueError("pad lengths must be non-negative")
    y = np.pad(outputs.data, ((0, 0), (tau_a, tau_a)))
    u = np.pad(inputs.data, ((0, 0), (tau_b, tau_b)))
    padded_outputs = TimeSeries(y, outputs.dt, outputs.t0 - tau_a * outputs.dt)
    padded_inputs = TimeSeries(u, inputs.dt, inputs.t0 - tau_b * inputs.dt)
    return padded_outputs, padded_inputs


def resample(series, target_fs):
    """Band-limited resampling to a new (possibly non-integer ratio) rate.

    When reducing the rate, the record is first low-pass filtered with a
    zero-phase windowed-sinc FIR (Kaiser window, 80 dB stopband, passband
    edge at 0.45*target_fs, stopband edge at the new Nyquist), then the
    band-limited interpolant is evaluated on the new uniform grid spanning
    the original record.  ``target_fs`` equal to the original rate returns
    the series unchanged; a target above the original rate raises.
    """
    fs = series.fs
    if target_fs <= 0.0:
        raise ValueError("target_fs must be positive")
    if target_fs > fs * (1.0 + 1e-12):
        raise ValueError(
            f"target_fs={target_fs} Hz above the original rate {fs} Hz"
        )
    if abs(target_fs - fs) <= 1e-12 * fs:
        return TimeSeries(series.data.copy(), series.dt, series.t0)

    # Anti-alias filter: passband edge 0.45*target, stopband edge 0.5*target.
    width_hz = 0.05 * target_fs
    numtaps, beta = sps.kaiserord(80.0, width_hz / (0.5 * fs))
    numtaps |= 1  # symmetric type I kernel, zero phase when centered
    if numtaps >= series.n_samples:
        raise ValueError(
            f"record too short ({series.n_samples} samples) for the "
            f"anti-alias filter ({numtaps} taps)"
        )
    kernel = sps.firwin(
        numtaps, 0.475 * target_fs, window=("kaiser", beta), fs=fs
    )
    filtered = np.empty_like(series.data)
    for ch in range(series.n_channels):
        filtered[ch] = np.convolve(series.data[ch], kernel, mode="same")

    dt_new = 1.0 / target_fs
    n_new = int(math.floor(series.duration * target_fs)) + 1
    t_new = dt_new * np.arange(n_new)
    t_old = series.dt * np.arange(series.n_samples)
    # Whittaker-Shannon interpolation of the filtered record.
    out = np.empty((series.n_channels, n_new))
    block = max(1, int(2e7) // series.n_samples)
    for start in range(0, n_new, block):
        stop = min(start + block, n_new)
        core = np.sinc((t_new[start:stop, None] - t_old[None, :]) / series.dt)
        out[:, start:stop] = filtered @ core.T
    return TimeSeries(out, dt_new, series.t0)
