"""Time-delay dynamic mode decomposition with control (DMDc) for modal analysis.

The package identifies modal parameters (natural frequencies, damping ratios,
mode shapes) of vibrating structures from sampled response and excitation
records.  Measured outputs are delay-embedded into an augmented state, a
DMDc regression recovers the reduced state and input operators, and the
eigenvalues of the reduced operator map to continuous-time modal parameters.

Main entry points:

* :mod:`tdmdc.signals`          excitation synthesis, noise, padding, resampling
* :mod:`tdmdc.reference_models` benchmark structure, exact simulation, ARX baseline
* :mod:`tdmdc.embedding`        delay embedding and snapshot assembly
* :mod:`tdmdc.dmdc`             operator identification and rank selection
* :mod:`tdmdc.modal`            modal extraction, MAC, sweeps, statistics
* :mod:`tdmdc.cli`              the ``tdmdc`` command line front end
"""

from tdmdc.signals import TimeSeries, impulse, log_chirp, add_noise, zero_pad, resample
from tdmdc.reference_models import (
    LtiSecondOrderModel,
    ReferenceMode,
    ArxModel,
    build_6dof,
    analytic_modes,
    simulate,
    analytic_frf,
    arx_fit,
    arx_state_matrix,
    arx_frf,
)
from tdmdc.embedding import (
    EmbeddingSpec,
    SnapshotSet,
    min_delay_order,
    max_delay_order_chirp,
    build_snapshots,
)
from tdmdc.dmdc import RankSelection, DmdcModel, singular_entropy_rank, fit, reconstruct
from tdmdc.modal import (
    ModeEstimate,
    ModeSet,
    StabilizationDiagram,
    SweepStatistics,
    to_modes,
    mac,
    mac_matrix,
    stabilization_sweep,
    sweep_statistics,
    noise_scaling_study,
)

__version__ = "0.1.0"

__all__ = [
    "TimeSeries",
    "impulse",
    "log_chirp",
    "add_noise",
    "zero_pad",
    "resample",
    "LtiSecondOrderModel",
    "ReferenceMode",
    "ArxModel",
    "build_6dof",
    "analytic_modes",
    "simulate",
    "analytic_frf",
    "arx_fit",
    "arx_state_matrix",
    "arx_frf",
    "EmbeddingSpec",
    "SnapshotSet",
    "min_delay_order",
    "max_delay_order_chirp",
    "build_snapshots",
    "RankSelection",
    "DmdcModel",
    "singular_entropy_rank",
    "fit",
    "reconstruct",
    "ModeEstimate",
    "ModeSet",
    "StabilizationDiagram",
    "SweepStatistics",
    "to_modes",
    "mac",
    "mac_matrix",
    "stabilization_sweep",
    "sweep_statistics",
    "noise_scaling_study",
    "__version__",
]
