"""Command-line front end: config parsing, sweep execution, CSV/report
output and a backend micro-benchmark."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .engine import SCHEMES, SimConfig, SweepResult, active_backend, run_sweep
from .kernels import NUMBA_AVAILABLE

CSV_HEADER = "scheme,snr_db,trials,symbols,errors,ser,ser_stderr"


def _parse_snr_list(raw: str) -> tuple:
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip() != "")
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {raw!r}")
    if not values:
        raise ValueError("SNR list is empty")
    return values


# config key -> (SimConfig field, converter)
CONFIG_KEYS = {
    "scheme": ("scheme", str),
    "m": ("num_antennas", int),
    "spacing": ("spacing", float),
    "q": ("num_beams", int),
    "k": ("k_blocks", int),
    "j": ("j_symbols", int),
    "np": ("num_pilots", int),
    "mode": ("mode", str),
    "paths": ("num_paths", int),
    "carrier_hz": ("carrier_hz", float),
    "speed_mps": ("speed_mps", float),
    "symbol_rate_hz": ("symbol_rate_hz", float),
    "snr_db_list": ("snr_db_list", _parse_snr_list),
    "seed": ("seed", int),
    "max_trials": ("max_trials", int),
    "target_errors": ("target_errors", int),
}

def parse_config(path: str) -> SimConfig:
    """Read a flat ``key = value`` config file into a SimConfig.

    Blank lines and ``#`` comments are ignored.  Unknown keys and malformed
    or out-of-range values are rejected with the offending key named;
    missing keys keep the defaults.
    """
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            field_name, convert = CONFIG_KEYS[key]
            if field_name in values:
                raise ValueError(f"{path}:{lineno}: duplicate config key {key!r}")
            try:
                values[field_name] = convert(raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: key {key!r}: {exc}") from exc
    return _build_config(values)


def _build_config(field_values: dict) -> SimConfig:
    try:
        return SimConfig(**field_values)
    except ValueError as exc:
        message = str(exc)
        for key, (field_name, _) in CONFIG_KEYS.items():
            if message.startswith((f"{key} ", f"{field_name} ")):
                raise ValueError(f"key {key!r}: {message}") from exc
        raise


def _sci(x: float) -> str:
    """Scientific notation with six fractional digits and a bare exponent,
    e.g. 0 -> 0.000000e0 and 1.5e-05 -> 1.500000e-5."""
    mantissa, exponent = f"{x:.6e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def emit_csv(results: list[SweepResult], path: str) -> None:
    """Write sweep results as CSV with a fixed header and trailing newline."""
    lines = [CSV_HEADER]
    for result in results:
        for p in result.points:
            lines.append(f"{p.scheme},{float(p.snr_db)!r},{p.trials},{p.symbols},"
                         f"{p.errors},{_sci(p.ser)},{_sci(p.ser_stderr)}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_report(results: list[SweepResult]) -> str:
    """Human-readable summary: per-scheme tables, fitted diversity orders
    and a scheme comparison at the highest common SNR."""
    out = []
    flagged = False
    for result in results:
        out.append(f"scheme {result.scheme}")
        out.append(f"  {'snr_db':>8} {'trials':>9} {'errors':>8} {'ser':>12} {'stderr':>12}")
        for p in result.points:
            mark = " " if p.target_met else "*"
            flagged = flagged or not p.target_met
            out.append(f"  {p.snr_db:>8.1f} {p.trials:>9} {p.errors:>8}"
                       f" {_sci(p.ser):>12} {_sci(p.ser_stderr):>12}{mark}")
        if result.fit is not None:
            lo, hi = result.fit.window_db
            out.append(f"  diversity order ~ {result.fit.order:.2f}"
                       f" (window {lo:g}-{hi:g} dB, {result.fit.num_points} points)")
        else:
            out.append("  diversity order fit unavailable")
        out.append("")
    if flagged:
        out.append("* error target not met before the trial cap")
    if len(results) > 1:
        common = set.intersection(*(set(p.snr_db for p in r.points) for r in results))
        if common:
            snr = max(common)
            ranked = sorted(
                ((next(p.ser for p in r.points if p.snr_db == snr), r.scheme) for r in results)
            )
            listing = " <= ".join(f"{scheme} ({_sci(ser)})" for ser, scheme in ranked)
            out.append(f"at {snr:g} dB, SER ascending: {listing}")
    return "\n".join(out).rstrip() + "\n"


def _write_manifest(path: str, cfg: SimConfig, schemes: list[str], backend: str) -> None:
    config_keys = {}
    for key, (field_name, _) in CONFIG_KEYS.items():
        value = getattr(cfg, field_name)
        if isinstance(value, tuple):
            value = list(value)
        config_keys[key] = value
    manifest = {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": cfg.seed,
        "schemes": schemes,
        "backend": backend,
        "config": config_keys,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.snr is not None:
        overrides["snr_db_list"] = _parse_snr_list(args.snr)
    if args.scheme is not None and args.scheme != "all":
        first = args.scheme.split(",")[0].strip()
        overrides["scheme"] = first
    if overrides:
        cfg = _build_config({**_field_values(cfg), **overrides})
    if args.scheme is None:
        schemes = [cfg.scheme]
    elif args.scheme == "all":
        schemes = list(SCHEMES)
    else:
        schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown scheme {unknown[0]!r}; choose from {SCHEMES} or 'all'")
    backend = active_backend()
    results = [run_sweep(replace(cfg, scheme=s)) for s in schemes]
    emit_csv(results, args.out)
    _write_manifest(args.out + ".manifest.json", cfg, schemes, backend)
    sys.stdout.write(emit_report(results))
    return 0


def _field_values(cfg: SimConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def _cmd_bench(args: argparse.Namespace) -> int:
    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]
    base = SimConfig(scheme=args.scheme, snr_db_list=(args.snr,),
                     target_errors=10 ** 9)
    print(f"benchmark: {args.scheme}, {args.trials} trials at {args.snr:g} dB")
    per_trial = {}
    for backend in backends:
        warm = replace(base, max_trials=8)
        run_sweep(warm, backend=backend)
        timed = replace(base, max_trials=args.trials)
        start = time.perf_counter()
        run_sweep(timed, backend=backend)
        elapsed = time.perf_counter() - start
        per_trial[backend] = 1e6 * elapsed / args.trials
        print(f"  {backend:<6} {elapsed:8.3f} s  {per_trial[backend]:10.1f} us/trial")
    if len(per_trial) == 2:
        print(f"  speedup (numpy/numba): {per_trial['numpy'] / per_trial['numba']:.1f}x")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="beamdiv",
        description="Monte Carlo link simulator for beamformed high-mobility "
                    "uplinks with Doppler pre-compensation")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run SNR sweeps from a config file")
    sim.add_argument("--config", required=True, help="flat key=value config file")
    sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    sim.add_argument("--out", default="results.csv", help="output CSV path")
    sim.add_argument("--scheme", default=None,
                     help="override scheme: one name, a comma list, or 'all'")
    sim.add_argument("--snr", default=None, help="override SNR grid, comma-separated dB")
    bench = sub.add_parser("bench", help="time the numba and numpy backends")
    bench.add_argument("--trials", type=int, default=2048)
    bench.add_argument("--scheme", default="ssd_dc", choices=SCHEMES)
    bench.add_argument("--snr", type=float, default=15.0)
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_bench(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
