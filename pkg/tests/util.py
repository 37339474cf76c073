"""Small helpers shared across the test modules."""

import numpy as np

from tdmdc import TimeSeries


def nearest_mode(modes, freq_hz, rtol=0.05):
    """Return the mode closest in frequency, or None outside ``rtol``."""
    if not modes:
        return None
    best = min(modes, key=lambda m: abs(m.freq_hz - freq_hz))
    if abs(best.freq_hz - freq_hz) > rtol * freq_hz:
        return None
    return best


def single_channel_excitation(sweep, n_channels, active=0):
    """Embed a one-channel signal into an ``n_channels`` record of zeros."""
    data = np.zeros((n_channels, sweep.n_samples))
    data[active] = sweep.data[0]
    return TimeSeries(data, sweep.dt, sweep.t0)


def damping_spread_by_mode(diagram, ref_freqs, rtol=0.05):
    """Across-order sample std of matched damping estimates, per mode.

    At each delay order the nearest-frequency estimate within ``rtol`` of
    the reference is collected; modes matched at fewer than two orders get
    NaN.
    """
    samples = [[] for _ in ref_freqs]
    for tau in diagram.delay_orders:
        entries = diagram.at_order(tau)
        freqs = np.array([m.freq_hz for m, _ in entries])
        damps = np.array([m.damping for m, _ in entries])
        for i, fr in enumerate(ref_freqs):
            if freqs.size == 0:
                continue
            j = int(np.argmin(np.abs(freqs - fr)))
            if abs(freqs[j] - fr) <= rtol * fr:
                samples[i].append(damps[j])
    return np.array(
        [np.std(s, ddof=1) if len(s) > 1 else np.nan for s in samples]
    )
