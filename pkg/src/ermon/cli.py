"""Command-line front end for the experiment harness."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional, Sequence

from .harness import (CASES, DETECTION_COLUMNS, ROC_COLUMNS, ExperimentSpec, emit_csv, presets,
                      run_experiment, write_csv)

# subcommand -> (preset name, CSV columns)
COMMANDS = {
    "roc": ("roc", ROC_COLUMNS),
    "pdf-check": ("pdf", ("n_window", "ratio_db", "pairs", "ks_stat", "ks_pvalue", "mean_emp",
                          "mean_theory", "m2_emp", "m2_theory")),
    "cond-pdf": ("cond-pdf", ("hypothesis", "n_window", "pnr_db", "x", "pdf_emp", "pdf_theory", "trials")),
    "pd-sweep": ("pd-sweep", DETECTION_COLUMNS),
    "sync-mse": ("sync-mse", ("channel", "snr_db", "mse_cfo", "mse_sfo", "gross_error_rate", "trials")),
    "ablation": ("ablation", DETECTION_COLUMNS),
    "fading": ("fading", DETECTION_COLUMNS + ("sigma_h_sq",)),
    "latency": ("latency", ("n_window", "n_rx", "spr_db", "pnr_db", "p_fa_target", "detect_rate",
                            "early_rate", "mean_latency_samples", "median_latency_samples",
                            "mean_latency_symbols", "mean_latency_us", "trials")),
}

_FIELD_HELP = """\
--config takes a JSON object whose keys override the preset:
  trials, seed            integers
  n_window, n_rx          lists of window sizes / receive antennas
  p_fa, spr_db, pnr_db,   lists of sweep values
  snr_db, ratio_db
  source                  "tone" (per-tone sample model) or "ofdm" (full chain)
  sync                    "perfect", "genie" or "estimated"
  window                  "NONE" or "HANNING"
  channel                 "AWGN" or "EXP_PDP"
  cases                   ablation cases: {cases}
  pu_present, random_pu_timing   booleans
  cfo_int_method          "coherent" or "differential"
  frame                   object of frame fields (n_subcarriers, n_guard_total, n_pilots,
                          n_reserved, cp_len, sample_rate, delta_r, n_preambles,
                          n_data_symbols, mapper, disabled_tones, oversample)
  impairments             object (snr_db, cfo_hz, sfo_ppm, spr_db, n_rx, cfo_max_hz,
                          nbi: {{center_bin, bandwidth_bins, power_db}})
"""


def _merge(base: ExperimentSpec, override: dict) -> ExperimentSpec:
    d = base.to_dict()
    for key, val in override.items():
        if key in ("frame", "impairments") and isinstance(val, dict):
            d[key] = {**(d[key] or {}), **val}
        else:
            d[key] = val
    return ExperimentSpec.from_dict(d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ermon", description="Energy-ratio spectrum monitoring experiments (CSV output).")
    sub = parser.add_subparsers(dest="command", required=True)
    table = presets()
    for name, (preset, columns) in COMMANDS.items():
        spec = table[preset]
        epilog = (f"scenario: {spec.scenario.value}\ncolumns: {','.join(columns)}\n\n"
                  + _FIELD_HELP.format(cases=", ".join(CASES)))
        p = sub.add_parser(name, help=f"{spec.scenario.value} experiment",
                           formatter_class=argparse.RawDescriptionHelpFormatter, epilog=epilog)
        p.add_argument("--config", help="JSON file overriding the preset fields")
        p.add_argument("--seed", type=int, help="master seed (default: preset value)")
        p.add_argument("--trials", type=int, help="trials per swept point")
        p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
        p.add_argument("--show-spec", action="store_true", help="print the resolved spec as JSON and exit")
    return parser


def resolve_spec(args) -> ExperimentSpec:
    preset, _ = COMMANDS[args.command]
    spec = presets()[preset]
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            override = json.load(fh)
        if not isinstance(override, dict):
            raise ValueError("config must be a JSON object")
        override.pop("scenario", None)
        spec = _merge(spec, override)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.trials is not None:
        spec = dataclasses.replace(spec, trials=args.trials)
    return spec


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_spec(args)
        if args.show_spec:
            print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
            return 0
        table = run_experiment(spec)
        if args.out == "-":
            write_csv(table, sys.stdout)
        else:
            emit_csv(table, args.out)
    except (ValueError, OSError, TypeError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"ermon {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
