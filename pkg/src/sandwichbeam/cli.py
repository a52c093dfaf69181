"""Command-line front end.

Subcommands: derive-params | spectrum | simulate | observability.  Every run
is driven by a YAML config (see `config`); ``--set key=value`` overrides
individual keys, and ``--out`` / ``--seed`` / ``--workers`` are shorthands
for the corresponding config keys.  Exit codes: 0 success, 1 validation
failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import yaml

from .config import apply_overrides, make_draw_rng, parse_config
from .discretization import FD, ORFD, assemble_fd, assemble_orfd, make_grid
from .dynamics import observability_certificate, simulate
from .errors import NumericalError, SandwichBeamError, ValidationError
from .model import large_shear_condition
from .spectral import spectrum_report


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ValidationError (exit 1)."""

    def error(self, message):
        raise ValidationError(f"usage: {self.format_usage().strip()} ({message})")


def _build_parser():
    parser = _Parser(prog="sandwichbeam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("derive-params", "derive B, C, P from layer data"),
        ("spectrum", "eigenvalue clouds and gap diagnostics per (scheme, N, xi)"),
        ("simulate", "time-domain energy/sensor trajectories per (scheme, N, xi)"),
        ("observability", "boundary observability certificates per (scheme, N, draw)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--seed", type=int, help="PRNG seed (overrides seed)")
        p.add_argument("--workers", type=int, help="sweep parallelism (overrides workers)")
        p.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a config key (dotted keys descend, YAML-typed values)",
        )
    return parser


def _load_config(args):
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(f"config {args.config} is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError("config root must be a mapping")
    apply_overrides(data, args.set)
    if args.out is not None:
        data["out_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    if args.workers is not None:
        data["workers"] = args.workers
    return parse_config(data)


def _assemble(scheme, coeffs, grid, xi):
    if scheme == ORFD:
        return assemble_orfd(coeffs, grid, xi=xi)
    assert scheme == FD
    return assemble_fd(coeffs, grid, xi=xi)


def _out_dir(config):
    path = Path(config.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_meshes(config):
    if not config.N_list:
        raise ValidationError(
            "config must set N or a non-empty N_list for this command"
        )


def _run_items(items, fn, workers):
    """Run fn over items, capturing per-item failures; order-deterministic."""
    results, failures = [], []
    if workers <= 1 or len(items) <= 1:
        for item in items:
            try:
                results.append((item, fn(item)))
            except SandwichBeamError as exc:
                failures.append((item, exc))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(item, pool.submit(fn, item)) for item in items]
            for item, fut in futures:
                try:
                    results.append((item, fut.result()))
                except SandwichBeamError as exc:
                    failures.append((item, exc))
    return results, failures


def _failure_exit(failures):
    if any(isinstance(exc, NumericalError) for _, exc in failures):
        return 2
    return 1 if failures else 0


def _report_failures(failures):
    for item, exc in failures:
        print(f"error: {item}: {exc}", file=sys.stderr)


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def cmd_derive_params(config):
    """Resolve coefficients and emit them as JSON (stdout + coefficients.json)."""
    coeffs = config.resolve_coefficients()
    payload = {
        "B": coeffs.B,
        "C": coeffs.C,
        "P": coeffs.P,
        "time_scale": coeffs.time_scale,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    _write_json(_out_dir(config) / "coefficients.json", payload)
    return 0


def cmd_spectrum(config):
    """One eigenvalue CSV per (scheme, N, xi) plus a gap-summary JSON."""
    _require_meshes(config)
    coeffs = config.resolve_coefficients()
    out = _out_dir(config)
    items = [
        (scheme, n, xi)
        for scheme in config.schemes
        for n in config.N_list
        for xi in config.xi_list
    ]

    def run(item):
        scheme, n, xi = item
        bundle = _assemble(scheme, coeffs, make_grid(n), xi)
        report = spectrum_report(bundle)
        name = f"{scheme}-{n}-{xi}.csv"
        report.write_csv(out / name)
        entry = report.to_dict()
        entry["file"] = name
        return entry

    results, failures = _run_items(items, run, config.workers)
    _report_failures(failures)
    summary = {
        "command": "spectrum",
        "seed": config.seed,
        "results": [entry for _, entry in results],
        "failed": [
            {"scheme": s, "N": n, "xi": xi, "error": str(exc)}
            for (s, n, xi), exc in failures
        ],
    }
    _write_json(out / "spectrum-summary.json", summary)
    return _failure_exit(failures)


def cmd_simulate(config):
    """One trajectory CSV per (scheme, N, xi) plus a summary JSON."""
    _require_meshes(config)
    coeffs = config.resolve_coefficients()
    out = _out_dir(config)
    dt = config.resolve_dt()
    items = [
        (scheme, n, xi)
        for scheme in config.schemes
        for n in config.N_list
        for xi in config.xi_list
    ]

    def run(item):
        scheme, n, xi = item
        grid = make_grid(n)
        initial = config.initial.build(grid, rng=make_draw_rng(config.seed, n, 0))
        bundle = _assemble(scheme, coeffs, grid, xi)
        record = simulate(
            bundle, initial, config.T, dt, snapshot_stride=config.snapshot_stride
        )
        stem = f"{scheme}-{n}-{xi}"
        record.write_csv(out / f"{stem}-trajectory.csv")
        entry = record.to_summary_dict()
        entry["file"] = f"{stem}-trajectory.csv"
        if config.snapshot_stride > 0:
            record.write_snapshots_csv(out / f"{stem}-snapshots.csv")
            entry["snapshots_file"] = f"{stem}-snapshots.csv"
        return entry

    results, failures = _run_items(items, run, config.workers)
    _report_failures(failures)
    summary = {
        "command": "simulate",
        "seed": config.seed,
        "T": config.T,
        "dt": dt,
        "results": [entry for _, entry in results],
        "failed": [
            {"scheme": s, "N": n, "xi": xi, "error": str(exc)}
            for (s, n, xi), exc in failures
        ],
    }
    _write_json(out / "simulate-summary.json", summary)
    return _failure_exit(failures)


def cmd_observability(config):
    """One certificate JSON per (scheme, N, draw) plus a summary JSON.

    An unsatisfied certificate is a reported result, not a failure: both
    sides of the inequality and the large-shear margin are printed, and the
    exit code stays 0 unless a computation actually errored.
    """
    _require_meshes(config)
    if any(xi != 0.0 for xi in config.xi_list):
        raise ValidationError("observability requires xi = 0 (open-loop dynamics)")
    if config.T <= 6.0:
        raise ValidationError(
            f"observability requires T > 6 (the bound is (T - 6) E_h(0)); got T = {config.T}"
        )
    coeffs = config.resolve_coefficients()
    out = _out_dir(config)
    dt = config.resolve_dt()
    items = [
        (scheme, n, draw)
        for scheme in config.schemes
        for n in config.N_list
        for draw in range(config.draws)
    ]

    def run(item):
        scheme, n, draw = item
        grid = make_grid(n)
        initial = config.initial.build(grid, rng=make_draw_rng(config.seed, n, draw))
        bundle = _assemble(scheme, coeffs, grid, 0.0)
        cert = observability_certificate(bundle, initial, config.T, dt)
        name = f"certificate-{scheme}-{n}-{draw}.json"
        payload = cert.to_dict()
        payload["scheme"] = scheme
        payload["N"] = n
        payload["draw"] = draw
        payload["seed"] = config.seed
        _write_json(out / name, payload)
        payload = dict(payload)
        payload["file"] = name
        return payload

    results, failures = _run_items(items, run, config.workers)
    _report_failures(failures)
    for (scheme, n, draw), entry in results:
        if not entry["satisfied"]:
            margin = large_shear_condition(coeffs, make_grid(n).h).margin
            print(
                f"UNSATISFIED {scheme} N={n} draw={draw}: "
                f"integral={entry['integral']!r} bound={entry['theorem_bound']!r} "
                f"large-shear margin={margin!r}"
            )
    summary = {
        "command": "observability",
        "seed": config.seed,
        "T": config.T,
        "dt": dt,
        "all_satisfied": bool(results) and all(e["satisfied"] for _, e in results),
        "results": [entry for _, entry in results],
        "failed": [
            {"scheme": s, "N": n, "draw": d, "error": str(exc)}
            for (s, n, d), exc in failures
        ],
    }
    _write_json(out / "observability-summary.json", summary)
    return _failure_exit(failures)


_COMMANDS = {
    "derive-params": cmd_derive_params,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "observability": cmd_observability,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args)
        return _COMMANDS[args.command](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
