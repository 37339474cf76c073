"""Run configuration and command orchestration for the CLI.

A run is described by a flat key-value configuration (file and/or flags);
the functions here turn one into datasets, identification results, and
output files.  Heavy lifting stays in the library modules; this layer owns
key validation, dataset preparation (simulate or ingest, corrupt,
resample), output emission, and the provenance block that makes every
output reproducible.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from tdmdc import __version__
from tdmdc.dataio import (
    ConfigError,
    CsvFormatError,
    read_modes_json,
    read_timeseries_csv,
    shapes_from_modes_doc,
    write_diagram_csv,
    write_mac_csv,
    write_modes_json,
    write_table_csv,
    write_timeseries_csv,
)
from tdmdc.embedding import build_snapshots  # noqa: F401  (re-export for tests)
from tdmdc.modal import (
    mac_matrix,
    noise_scaling_study,
    stabilization_sweep,
    sweep_statistics,
    to_modes,
)
from tdmdc.reference_models import LtiSecondOrderModel, analytic_modes, build_6dof, simulate
from tdmdc.signals import TimeSeries, add_noise, impulse, log_chirp, resample, zero_pad


class NumericalError(RuntimeError):
    """Identification failed numerically (rank collapse, no usable orders)."""


# The full configuration vocabulary with defaults.  Every key can appear in
# the config file and as a same-name command line flag (dashes for
# underscores).  None means "not set".
DEFAULTS = {
    "model": "builtin-6dof",
    "excitation": "impulse",
    "excitation_channel": 1,
    "sample_rate_hz": 4.0,
    "duration_s": 1000.0,
    "amplitude": 1.0,
    "impulse_sample": 0,
    "chirp_f0_hz": 0.01,
    "chirp_f1_hz": 2.0,
    "response": None,
    "tau_min": 2,
    "tau_max": None,
    "tau_step": 1,
    "tau_b": None,
    "rank_policy": "auto",
    "rank_r": 0,
    "rank_p": 0,
    "entropy_threshold": None,
    "band": None,
    "snr_db": None,
    "seed": 0,
    "trials": 1,
    "resample_hz": None,
    "boundary": "auto",
    "zero_pad": "auto",
    "freq_tol": 0.01,
    "damp_tol": 0.05,
    "out": ".",
    "format": "json",
    "workers": 1,
}

_CHOICES = {
    "rank_policy": ("auto", "full"),
    "boundary": ("auto", "zero-fill", "trim"),
    "zero_pad": ("auto", "on", "off"),
    "format": ("json", "csv"),
}


def _as_int(key, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        out = int(value) if not isinstance(value, float) else int(round(value))
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    if isinstance(value, float) and abs(value - out) > 1e-9:
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return out


def _as_float(key, value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if not np.isfinite(out):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return out


@dataclass
class RunConfig:
    """Validated run configuration; see DEFAULTS for the key vocabulary."""

    values: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping) -> "RunConfig":
        """Merge a key-value mapping over the defaults and validate."""
        merged = dict(DEFAULTS)
        for key, value in mapping.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = value
        cfg = cls(merged)
        cfg._validate()
        return cfg

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def _validate(self):
        v = self.values
        for key, choices in _CHOICES.items():
            if v[key] not in choices:
                raise ConfigError(
                    f"{key} must be one of {', '.join(choices)}, got {v[key]!r}"
                )
        for key in ("excitation_channel", "impulse_sample", "seed", "trials",
                    "tau_min", "tau_step", "rank_r", "rank_p", "workers"):
            v[key] = _as_int(key, v[key])
        for key in ("sample_rate_hz", "duration_s", "amplitude",
                    "chirp_f0_hz", "chirp_f1_hz", "freq_tol", "damp_tol"):
            v[key] = _as_float(key, v[key])
        if v["tau_max"] is None:
            v["tau_max"] = v["tau_min"]
        v["tau_max"] = _as_int("tau_max", v["tau_max"])
        if v["tau_b"] is not None:
            v["tau_b"] = _as_int("tau_b", v["tau_b"])
        if v["entropy_threshold"] is not None:
            v["entropy_threshold"] = _as_float("entropy_threshold", v["entropy_threshold"])
        if v["resample_hz"] is not None:
            v["resample_hz"] = _as_float("resample_hz", v["resample_hz"])

        if v["tau_min"] < 1:
            raise ConfigError(f"tau_min must be >= 1, got {v['tau_min']}")
        if v["tau_max"] < v["tau_min"]:
            raise ConfigError(
                f"tau_max ({v['tau_max']}) must be >= tau_min ({v['tau_min']})"
            )
        if v["tau_step"] < 1:
            raise ConfigError(f"tau_step must be >= 1, got {v['tau_step']}")
        if v["sample_rate_hz"] <= 0.0:
            raise ConfigError("sample_rate_hz must be positive")
        if v["duration_s"] <= 0.0:
            raise ConfigError("duration_s must be positive")
        if v["workers"] < 1:
            raise ConfigError(f"workers must be >= 1, got {v['workers']}")
        if v["trials"] < 1:
            raise ConfigError(f"trials must be >= 1, got {v['trials']}")
        if (v["rank_r"] > 0) != (v["rank_p"] > 0):
            raise ConfigError("rank_r and rank_p must be given together")
        if v["band"] is not None:
            v["band"] = _parse_band(v["band"])
        if v["snr_db"] is not None:
            v["snr_grid"] = _parse_snr_grid(v["snr_db"])
        else:
            v["snr_grid"] = None
        if v["response"] is not None and v["excitation"] in ("impulse", "chirp"):
            # File mode: the excitation, if any, must be a file as well.
            v["excitation"] = None

    @property
    def file_mode(self) -> bool:
        return self.values["response"] is not None

    @property
    def rank_policy_resolved(self):
        v = self.values
        if v["rank_r"] > 0:
            return (v["rank_r"], v["rank_p"])
        return v["rank_policy"]

    def resolve_boundary(self, command: str) -> str:
        """Snapshot boundary handling for a command, resolving "auto".

        Noise studies and identification of synthetically corrupted
        records use "trim" (fully recorded windows only; the zero-filled
        boundary wedge biases damping under noise, see build_snapshots).
        Noiseless simulation and ingested files default to "zero-fill",
        which keeps the excitation transient inside the window and with it
        the input operator identifiable.
        """
        b = self.values["boundary"]
        if b != "auto":
            return b
        if command == "noise-study":
            return "trim"
        if not self.file_mode and self.values["snr_grid"] is not None:
            return "trim"
        return "zero-fill"

    @property
    def tau_list(self):
        v = self.values
        return list(range(v["tau_min"], v["tau_max"] + 1, v["tau_step"]))

    def flat(self) -> dict:
        """The resolved configuration as written to provenance blocks."""
        out = {}
        for key in DEFAULTS:
            value = self.values[key]
            if key == "band" and value is not None:
                value = f"{value[0]}:{value[1]}"
            out[key] = value
        return out


def _parse_band(value):
    if isinstance(value, (tuple, list)) and len(value) == 2:
        lo, hi = float(value[0]), float(value[1])
    else:
        parts = str(value).split(":")
        if len(parts) != 2:
            raise ConfigError(f"band must be LO:HI, got {value!r}")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"band must be numeric LO:HI, got {value!r}") from None
    if not (0.0 <= lo < hi):
        raise ConfigError(f"band must satisfy 0 <= LO < HI, got {value!r}")
    return (lo, hi)


def _parse_snr_grid(value):
    """A single SNR, a comma list, or an inclusive lo:hi:step range."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    text = str(value)
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0.0 or parts[1] < parts[0]:
                raise ValueError
            lo, hi, step = parts
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + i * step for i in range(count)]
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(
            f"snr_db must be a number, 'a,b,c', or 'lo:hi:step', got {value!r}"
        ) from None


def _load_matrices_model(path) -> LtiSecondOrderModel:
    try:
        with np.load(path) as archive:
            return LtiSecondOrderModel(archive["M"], archive["C"], archive["K"])
    except FileNotFoundError:
        raise
    except KeyError as exc:
        raise ConfigError(f"{path}: matrices file needs arrays M, C, K ({exc})") from None
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{path}: not a loadable matrices file ({exc})") from None


def _build_excitation(cfg: RunConfig, model) -> TimeSeries:
    v = cfg.values
    dt = 1.0 / v["sample_rate_hz"]
    n = model.n
    channel = v["excitation_channel"]
    if not (1 <= channel <= n):
        raise ConfigError(f"excitation_channel {channel} outside 1..{n}")
    if v["excitation"] == "impulse":
        n_samples = int(round(v["duration_s"] * v["sample_rate_hz"]))
        return impulse(n, channel, v["amplitude"], v["impulse_sample"], n_samples, dt)
    if v["excitation"] == "chirp":
        sweep, _ = log_chirp(
            v["chirp_f0_hz"], v["chirp_f1_hz"], v["duration_s"], dt, v["amplitude"]
        )
        data = np.zeros((n, sweep.n_samples))
        data[channel - 1] = sweep.data[0]
        return TimeSeries(data, dt, sweep.t0)
    # A file path.
    series = read_timeseries_csv(v["excitation"])
    if series.n_channels != n:
        raise CsvFormatError(
            v["excitation"],
            f"excitation has {series.n_channels} channels, model has {n}",
        )
    return series


def prepare_dataset(cfg: RunConfig):
    """Response and excitation records for identification.

    Simulation mode synthesizes the excitation, simulates the reference
    model, and optionally corrupts the response with measurement noise;
    file mode ingests both records from CSV.  Either way an optional
    resampling stage runs last, on both records.  Returns
    (response, excitation, model), the model being None in file mode.
    """
    v = cfg.values
    if cfg.file_mode:
        response = read_timeseries_csv(v["response"])
        if v["excitation"] is not None:
            excitation = read_timeseries_csv(v["excitation"])
            if excitation.n_samples != response.n_samples:
                raise CsvFormatError(
                    v["excitation"],
                    f"excitation has {excitation.n_samples} samples, "
                    f"response has {response.n_samples}",
                )
            if not np.isclose(excitation.dt, response.dt, rtol=1e-6):
                raise CsvFormatError(
                    v["excitation"],
                    f"excitation rate {1 / excitation.dt} Hz differs from "
                    f"response rate {1 / response.dt} Hz",
                )
        else:
            excitation = TimeSeries(
                np.zeros((1, response.n_samples)), response.dt, response.t0
            )
        model = None
    else:
        if v["model"] == "builtin-6dof":
            model = build_6dof()
        else:
            model = _load_matrices_model(v["model"])
        excitation = _build_excitation(cfg, model)
        response = simulate(model, excitation)
        if v["snr_grid"] is not None:
            if len(v["snr_grid"]) != 1:
                raise ConfigError(
                    "identification takes a single snr_db; ranges are for noise-study"
                )
            response = add_noise(response, v["snr_grid"][0], seed=v["seed"])
    if v["resample_hz"] is not None:
        response = resample(response, v["resample_hz"])
        excitation = resample(excitation, v["resample_hz"])
    return response, excitation, model


def _maybe_zero_pad(cfg: RunConfig, response, excitation, boundary):
    """Boundary padding for records that start and end at rest.

    "auto" pads only synthesized chirp runs under the zero-fill boundary:
    the swept excitation is quiet relative to the record edges, so padding
    is consistent with the dynamics and buys identification columns.  The
    "trim" boundary discards partially recorded windows instead, which is
    the alternative treatment, so auto never combines the two.
    """
    mode = cfg.values["zero_pad"]
    if mode == "off":
        return response, excitation
    if mode == "auto" and not (
        boundary == "zero-fill"
        and not cfg.file_mode
        and cfg.values["excitation"] == "chirp"
    ):
        return response, excitation
    # Pad both records by the sweep cap so their sample counts stay
    # paired; extra zero input samples beyond tau_b are consistent with
    # any identified operator.
    tau_pad = cfg.values["tau_max"]
    return zero_pad(response, excitation, tau_pad, tau_pad)


@dataclass
class ResultBundle:
    """Everything a command produced, before and after file emission."""

    provenance: dict
    files: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    diagram: object = None
    statistics: object = None
    mac_matrix: object = None
    study_results: list = field(default_factory=list)


def make_provenance(cfg: RunConfig, command: str) -> dict:
    flat = cfg.flat()
    blob = json.dumps(flat, sort_keys=True, default=str)
    return {
        "command": command,
        "config": flat,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "package": f"tdmdc {__version__}",
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _provenance_comments(provenance) -> list:
    return [
        f"{provenance['command']} | {provenance['package']} | "
        f"config sha256 {provenance['config_sha256']}"
    ]


def run_simulate(cfg: RunConfig) -> ResultBundle:
    """Synthesize excitation and response records and write them as CSV."""
    if cfg.file_mode:
        raise ConfigError("simulate needs a simulation spec, not a response file")
    response, excitation, _ = prepare_dataset(cfg)
    out = Path(cfg.values["out"])
    out.mkdir(parents=True, exist_ok=True)
    provenance = make_provenance(cfg, "simulate")
    comments = _provenance_comments(provenance)
    bundle = ResultBundle(provenance=provenance)
    for name, series in (("excitation.csv", excitation), ("response.csv", response)):
        path = out / name
        write_timeseries_csv(path, series, comments)
        bundle.files.append(str(path))
    return bundle


def run_identify(cfg: RunConfig, command="identify", with_statistics=False) -> ResultBundle:
    """Identify modes over the configured delay orders and emit results.

    Writes modes.json (or modes.csv), diagram.csv, and the two diagram
    SVGs; simulation-mode runs also get a MAC table against the analytic
    shapes.  ``with_statistics`` adds the per-cluster dispersion summary
    (the sweep command's extra output).
    """
    from tdmdc import plots

    v = cfg.values
    boundary = cfg.resolve_boundary(command)
    response, excitation, model = prepare_dataset(cfg)
    response, excitation = _maybe_zero_pad(cfg, response, excitation, boundary)

    diagram = stabilization_sweep(
        response,
        excitation,
        (v["tau_min"], v["tau_max"]),
        step=v["tau_step"],
        rank_policy=cfg.rank_policy_resolved,
        tau_b=v["tau_b"],
        freq_tol=v["freq_tol"],
        damp_tol=v["damp_tol"],
        entropy_threshold=v["entropy_threshold"],
        band_hz=v["band"],
        boundary=boundary,
    )
    orders = diagram.delay_orders
    if not orders:
        raise NumericalError(
            "identification failed at every delay order "
            f"(failed orders: {list(diagram.failed_orders)})"
        )
    final_modes = [mode for mode, _ in diagram.at_order(orders[-1])]

    provenance = make_provenance(cfg, command)
    comments = _provenance_comments(provenance)
    out = Path(v["out"])
    out.mkdir(parents=True, exist_ok=True)
    bundle = ResultBundle(
        provenance=provenance, modes=final_modes, diagram=diagram
    )

    ref_freqs = ref_damps = None
    if model is not None:
        reference = analytic_modes(model)
        ref_freqs = [m.freq_hz for m in reference]
        ref_damps = [m.damping for m in reference]
        if final_modes:
            bundle.mac_matrix = mac_matrix(
                [m.shape for m in final_modes], [m.shape for m in reference]
            )

    if v["format"] == "json":
        path = out / "modes.json"
        write_modes_json(
            path,
            final_modes,
            provenance,
            extra={"delay_order": orders[-1], "failed_orders": list(diagram.failed_orders)},
        )
    else:
        path = out / "modes.csv"
        _write_modes_csv(path, final_modes, comments)
    bundle.files.append(str(path))

    path = out / "diagram.csv"
    write_diagram_csv(path, diagram, comments)
    bundle.files.append(str(path))
    for name, plot in (
        ("diagram_freq.svg", lambda p: plots.plot_diagram_freq(diagram, p, ref_freqs)),
        ("diagram_damp.svg", lambda p: plots.plot_diagram_damp(diagram, p, ref_damps)),
    ):
        path = out / name
        plot(path)
        bundle.files.append(str(path))

    if with_statistics and diagram.entries:
        bundle.statistics = sweep_statistics(diagram)
        path = out / "statistics.csv"
        _write_sweep_statistics_csv(path, bundle.statistics, comments)
        bundle.files.append(str(path))

    if bundle.mac_matrix is not None:
        path = out / "mac.csv"
        write_mac_csv(path, bundle.mac_matrix, comments)
        bundle.files.append(str(path))
        path = out / "mac.svg"
        plots.plot_mac(bundle.mac_matrix, path)
        bundle.files.append(str(path))
    return bundle


def _write_modes_csv(path, modes, comments):
    n_ch = modes[0].shape.size if modes else 0
    header = ["mode", "freq_hz", "damping", "amplitude", "delay_order"]
    for k in range(n_ch):
        header += [f"shape{k + 1}_re", f"shape{k + 1}_im"]
    rows = []
    for i, m in enumerate(modes, start=1):
        row = [i, m.freq_hz, m.damping, m.amplitude, m.delay_order]
        for re, im in zip(m.shape.real, m.shape.imag):
            row += [re, im]
        rows.append(row)
    write_table_csv(path, header, rows, comments)


def _write_sweep_statistics_csv(path, stats, comments):
    header = (
        "cluster", "count",
        "freq_mean_hz", "freq_std_hz", "freq_q1_hz", "freq_median_hz", "freq_q3_hz",
        "damp_mean", "damp_std", "damp_q1", "damp_median", "damp_q3",
        "ci_freq_hz", "ci_damp",
    )
    rows = []
    for c in range(stats.freq_mean.size):
        rows.append((
            c + 1, int(stats.counts[c]),
            stats.freq_mean[c], stats.freq_std[c],
            stats.freq_q1[c], stats.freq_median[c], stats.freq_q3[c],
            stats.damp_mean[c], stats.damp_std[c],
            stats.damp_q1[c], stats.damp_median[c], stats.damp_q3[c],
            stats.ci_freq[c], stats.ci_damp[c],
        ))
    write_table_csv(path, header, rows, comments)


def _noise_level_worker(args):
    model, excitation, snr_db, tau_list, trials, seed, tau_b, rank_policy, \
        entropy_threshold, boundary = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return noise_scaling_study(
            model,
            excitation,
            None,
            tau_list,
            trials,
            seed,
            snr_db=snr_db,
            tau_b=tau_b,
            rank_policy=rank_policy,
            entropy_threshold=entropy_threshold,
            boundary=boundary,
        )


def run_noise_study(cfg: RunConfig) -> ResultBundle:
    """Monte-Carlo noise study over the SNR grid and delay orders.

    Each SNR level runs an independent seeded study; levels can run in
    parallel workers, and the coordinator merges and writes results in
    grid order so the output does not depend on scheduling.  Emits
    statistics.csv (per SNR, delay order, and mode) and slopes.csv (the
    per-SNR dispersion slope and averaged confidence-interval widths).
    """
    v = cfg.values
    if cfg.file_mode:
        raise ConfigError("noise-study needs a simulation spec (ground truth)")
    if v["snr_grid"] is None:
        raise ConfigError("noise-study needs snr_db (a value, list, or lo:hi:step)")
    if v["trials"] < 20:
        raise ConfigError(
            f"noise-study needs trials >= 20 for stable dispersion, got {v['trials']}"
        )
    if v["model"] == "builtin-6dof":
        model = build_6dof()
    else:
        model = _load_matrices_model(v["model"])
    excitation = _build_excitation(cfg, model)
    tau_b = v["tau_b"] if v["tau_b"] is not None else 2
    snr_grid = v["snr_grid"]
    boundary = cfg.resolve_boundary("noise-study")

    jobs = []
    for i, snr in enumerate(snr_grid):
        seed = v["seed"] if len(snr_grid) == 1 else (v["seed"], i)
        jobs.append((
            model, excitation, snr, cfg.tau_list, v["trials"], seed,
            tau_b, cfg.rank_policy_resolved, v["entropy_threshold"], boundary,
        ))
    if v["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=v["workers"]) as pool:
            results = list(pool.map(_noise_level_worker, jobs))
    else:
        results = [_noise_level_worker(job) for job in jobs]

    provenance = make_provenance(cfg, "noise-study")
    comments = _provenance_comments(provenance)
    out = Path(v["out"])
    out.mkdir(parents=True, exist_ok=True)
    bundle = ResultBundle(provenance=provenance, study_results=results)

    stat_rows = []
    slope_rows = []
    for snr, res in zip(snr_grid, results):
        for ti, tau in enumerate(res.tau_list):
            for k in range(res.mean_freq.shape[1]):
                stat_rows.append((
                    snr, tau, k + 1,
                    res.mean_freq[ti, k], res.std_freq[ti, k],
                    1.96 * res.std_freq[ti, k],
                    res.freq_quartiles[0, ti, k], res.freq_quartiles[1, ti, k],
                    res.freq_quartiles[2, ti, k],
                    res.mean_damp[ti, k], res.std_damp[ti, k],
                    1.96 * res.std_damp[ti, k],
                    res.damp_quartiles[0, ti, k], res.damp_quartiles[1, ti, k],
                    res.damp_quartiles[2, ti, k],
                    res.failure_rate[ti],
                ))
        finite_f = res.std_freq[np.isfinite(res.std_freq)]
        finite_z = res.std_damp[np.isfinite(res.std_damp)]
        slope_rows.append((
            snr, res.slope,
            1.96 * float(finite_f.mean()) if finite_f.size else float("nan"),
            1.96 * float(finite_z.mean()) if finite_z.size else float("nan"),
            len(res.excluded_orders),
        ))

    path = out / "statistics.csv"
    write_table_csv(
        path,
        (
            "snr_db", "tau", "mode",
            "freq_mean_hz", "freq_std_hz", "freq_ci_hz",
            "freq_q1_hz", "freq_median_hz", "freq_q3_hz",
            "damp_mean", "damp_std", "damp_ci",
            "damp_q1", "damp_median", "damp_q3",
            "failure_rate",
        ),
        stat_rows,
        comments,
    )
    bundle.files.append(str(path))
    path = out / "slopes.csv"
    write_table_csv(
        path,
        ("snr_db", "slope", "ci_width_freq_hz", "ci_width_damp", "excluded_orders"),
        slope_rows,
        comments,
    )
    bundle.files.append(str(path))
    return bundle


def _load_shapes(path_or_keyword):
    if path_or_keyword == "builtin-6dof":
        reference = analytic_modes(build_6dof())
        return np.column_stack([m.shape for m in reference])
    doc = read_modes_json(path_or_keyword)
    return shapes_from_modes_doc(doc)


def run_mac(cfg: RunConfig, estimated_path, reference_path) -> ResultBundle:
    """MAC table between two sets of mode shapes.

    Either argument is a modes.json path; the reference may also be the
    keyword ``builtin-6dof`` for the analytic benchmark shapes.
    """
    est = _load_shapes(estimated_path)
    ref = _load_shapes(reference_path)
    if est.shape[0] != ref.shape[0]:
        raise CsvFormatError(
            estimated_path,
            f"shape length {est.shape[0]} does not match reference {ref.shape[0]}",
        )
    table = mac_matrix(list(est.T), list(ref.T))
    provenance = make_provenance(cfg, "mac")
    comments = _provenance_comments(provenance)
    out = Path(cfg.values["out"])
    out.mkdir(parents=True, exist_ok=True)
    bundle = ResultBundle(provenance=provenance, mac_matrix=table)
    path = out / "mac.csv"
    write_mac_csv(path, table, comments)
    bundle.files.append(str(path))
    from tdmdc import plots

    path = out / "mac.svg"
    plots.plot_mac(table, path)
    bundle.files.append(str(path))
    return bundle
