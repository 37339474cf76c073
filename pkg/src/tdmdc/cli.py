"""The ``tdmdc`` command line front end.

Subcommands: ``simulate`` (synthesize benchmark records), ``identify``
(modes at one or a few delay orders), ``sweep`` (delay-order sweep with
cluster statistics), ``noise-study`` (Monte-Carlo over an SNR grid), and
``mac`` (shape consistency table).  Every configuration key can live in a
flat key-value file (``--config``) and be overridden by the same-name
flag.  Exit codes: 0 success, 2 input/parse error, 3 numerical failure,
4 configuration error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from tdmdc import pipeline
from tdmdc.dataio import ConfigError, CsvFormatError, load_config

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4


class _Parser(argparse.ArgumentParser):
    """argparse with config-error exit semantics (4, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_config_flags(parser):
    group = parser.add_argument_group("configuration overrides")
    group.add_argument("--config", metavar="PATH", help="flat key-value config file")
    for key in pipeline.DEFAULTS:
        flag = "--" + key.replace("_", "-")
        default = pipeline.DEFAULTS[key]
        help_text = f"override config key {key} (default {default!r})"
        group.add_argument(flag, dest=key, default=None, metavar="VALUE", help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tdmdc",
        description="Time-delay DMD with control for experimental modal analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("simulate", "synthesize excitation and response records as CSV"),
        ("identify", "identify modes and write modes, diagram, and plots"),
        ("sweep", "delay-order sweep with per-cluster statistics"),
        ("noise-study", "Monte-Carlo noise study over an SNR grid"),
        ("mac", "MAC table between two mode shape sets"),
    ):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if name == "mac":
            p.add_argument("estimated", help="modes.json of the estimated shapes")
            p.add_argument(
                "reference",
                help="modes.json of the reference shapes, or 'builtin-6dof'",
            )
        _add_config_flags(p)
    return parser


def _merge_config(args) -> pipeline.RunConfig:
    mapping = {}
    if args.config is not None:
        mapping.update(load_config(args.config))
    for key in pipeline.DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return pipeline.RunConfig.from_mapping(mapping)


def _print_bundle(bundle):
    for mode in bundle.modes:
        print(
            f"  f = {mode.freq_hz:.6f} Hz   zeta = {mode.damping:.6f}   "
            f"(tau_a = {mode.delay_order})"
        )
    if bundle.mac_matrix is not None and len(bundle.modes):
        diag = np.diag(np.asarray(bundle.mac_matrix))
        print(f"  MAC diagonal min {diag.min():.4f}")
    for path in bundle.files:
        print(f"wrote {path}")


def _dispatch(args) -> int:
    cfg = _merge_config(args)
    if args.command == "simulate":
        bundle = pipeline.run_simulate(cfg)
    elif args.command == "identify":
        bundle = pipeline.run_identify(cfg)
    elif args.command == "sweep":
        bundle = pipeline.run_identify(cfg, command="sweep", with_statistics=True)
    elif args.command == "noise-study":
        bundle = pipeline.run_noise_study(cfg)
    else:
        bundle = pipeline.run_mac(cfg, args.estimated, args.reference)
    _print_bundle(bundle)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except CsvFormatError as exc:
        print(f"tdmdc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"tdmdc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (pipeline.NumericalError, np.linalg.LinAlgError) as exc:
        print(f"tdmdc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"tdmdc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
