"""File formats of the command line front end.

Time-series CSV (header ``t,ch1,...,chN``, ``#`` comments, decimals with up
to 17 significant digits so 64-bit floats survive a round trip), modal
results as JSON, stabilization diagrams and statistics as flat CSV, and the
flat key-value run configuration.  Readers stream line by line and report
the offending line number on malformed input.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml

from tdmdc.signals import TimeSeries

# Relative tolerance on the uniformity of the time column.  Exported CSV
# recomputes t = t0 + i*dt in floating point, so exact equality is not
# available even for our own files.
_DT_RTOL = 1e-6


class CsvFormatError(ValueError):
    """Malformed CSV input, pointing at the offending line.

    ``path`` and ``line`` (1-based, None when the problem is file-level)
    are also available as attributes for programmatic use.
    """

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")


class ConfigError(ValueError):
    """Invalid run configuration (file contents or option values)."""


def _format_float(x) -> str:
    # repr of a Python float is the shortest decimal that round-trips,
    # never more than 17 significant digits.
    return repr(float(x))


def write_timeseries_csv(path, series: TimeSeries, comments=()):
    """Write a time series as ``t,ch1,...,chN`` rows.

    ``comments`` lines are emitted first, each prefixed with ``# ``.
    """
    data = series.data
    n_channels, n_samples = data.shape
    header = "t," + ",".join(f"ch{i + 1}" for i in range(n_channels))
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(header + "\n")
        for k in range(n_samples):
            t = series.t0 + k * series.dt
            fields = [_format_float(t)]
            fields += [_format_float(v) for v in data[:, k]]
            fh.write(",".join(fields) + "\n")


def read_timeseries_csv(path) -> TimeSeries:
    """Parse a ``t,ch1,...,chN`` CSV into a TimeSeries.

    Streams the file line by line; comment lines start with ``#`` and blank
    lines are skipped.  Raises CsvFormatError with the line number for a
    row of the wrong width, a non-numeric cell, a non-uniform time column,
    or a file with no data rows.
    """
    path = Path(path)
    times = []
    rows = []
    n_fields = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if n_fields is None:
                if fields[0].strip() != "t":
                    raise CsvFormatError(
                        path, f"header must start with 't', got {fields[0]!r}", lineno
                    )
                if len(fields) < 2:
                    raise CsvFormatError(path, "header names no channels", lineno)
                n_fields = len(fields)
                continue
            if len(fields) != n_fields:
                raise CsvFormatError(
                    path,
                    f"expected {n_fields} fields, got {len(fields)}",
                    lineno,
                )
            try:
                values = [float(f) for f in fields]
            except ValueError:
                bad = next(f for f in fields if not _parses(f))
                raise CsvFormatError(path, f"non-numeric cell {bad!r}", lineno) from None
            times.append((lineno, values[0]))
            rows.append(values[1:])
    if n_fields is None:
        raise CsvFormatError(path, "no header row")
    if not rows:
        raise CsvFormatError(path, "no samples")

    t = np.array([v for _, v in times])
    if len(rows) == 1:
        raise CsvFormatError(path, "need at least two samples to fix the rate")
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not (dt > 0.0 and math.isfinite(dt)):
        raise CsvFormatError(path, f"time column is not increasing (dt = {dt})")
    grid = t[0] + dt * np.arange(len(t))
    off = np.abs(t - grid)
    worst = int(np.argmax(off))
    if off[worst] > _DT_RTOL * dt:
        raise CsvFormatError(
            path,
            f"non-uniform sample time (off grid by {off[worst]:.3e} s)",
            times[worst][0],
        )
    data = np.array(rows).T
    return TimeSeries(np.ascontiguousarray(data), float(dt), t0=float(t[0]))


def _parses(field: str) -> bool:
    try:
        float(field)
        return True
    except ValueError:
        return False


def write_modes_json(path, modes, provenance, extra=None):
    """Write identified modes with their provenance block.

    ``modes`` is a list of ModeEstimate; shapes are split into
    ``shape_re``/``shape_im`` arrays.  ``extra`` merges additional
    top-level keys (rank selection, residuals, ...).  Output is sorted-key
    JSON, reproducible byte for byte.
    """
    doc = {
        "modes": [
            {
                "freq_hz": m.freq_hz,
                "damping": m.damping,
                "amplitude": m.amplitude,
                "delay_order": m.delay_order,
                "shape_re": [float(v) for v in m.shape.real],
                "shape_im": [float(v) for v in m.shape.imag],
            }
            for m in modes
        ],
        "provenance": provenance,
    }
    if extra:
        doc.update(extra)
    _write_json(path, doc)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_modes_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def shapes_from_modes_doc(doc) -> np.ndarray:
    """Shape matrix (channels x modes) from a parsed modes.json document."""
    modes = doc.get("modes", [])
    if not modes:
        raise CsvFormatError("modes document", "no modes present")
    cols = []
    for entry in modes:
        cols.append(np.array(entry["shape_re"]) + 1j * np.array(entry["shape_im"]))
    lengths = {c.size for c in cols}
    if len(lengths) != 1:
        raise CsvFormatError("modes document", f"mixed shape lengths {sorted(lengths)}")
    return np.column_stack(cols)


def write_diagram_csv(path, diagram, comments=()):
    """Flat ``tau,freq_hz,damping,stability`` export of a sweep diagram."""
    rows = [
        (tau, _format_float(f), _format_float(z), flag)
        for tau, f, z, flag in diagram.rows()
    ]
    write_table_csv(path, ("tau", "freq_hz", "damping", "stability"), rows, comments)


def write_table_csv(path, header, rows, comments=()):
    """Write a flat CSV table; floats are formatted losslessly.

    Cells that are already strings pass through unchanged, so callers
    control any non-numeric columns.
    """
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fields = [
                cell if isinstance(cell, str) else
                str(cell) if isinstance(cell, (int, np.integer)) else
                _format_float(cell)
                for cell in row
            ]
            fh.write(",".join(fields) + "\n")


def write_mac_csv(path, mac_matrix, comments=()):
    """MAC matrix as CSV; rows = estimated modes, columns = reference."""
    mac_matrix = np.asarray(mac_matrix)
    header = ("mode",) + tuple(f"ref{j + 1}" for j in range(mac_matrix.shape[1]))
    rows = [
        (i + 1,) + tuple(mac_matrix[i])
        for i in range(mac_matrix.shape[0])
    ]
    write_table_csv(path, header, rows, comments)


def load_config(path) -> dict:
    """Parse the flat key-value run configuration file.

    The document must be a single flat mapping of scalars (strings,
    numbers, booleans, null); nesting is rejected so that every key can be
    overridden by a same-name command line flag.
    """
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not a valid key-value document ({exc})") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected key: value lines, got {type(doc).__name__}")
    for key, value in doc.items():
        if not isinstance(key, str):
            raise ConfigError(f"{path}: key {key!r} is not a string")
        if isinstance(value, (dict, list)):
            raise ConfigError(
                f"{path}: key {key!r} is nested; the configuration is flat"
            )
    return doc
