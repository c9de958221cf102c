"""Command-line entry point: ``timedil <command> [options]``.

Commands: constants, lightclock, instability, interferometer, catalog, verify.
Numbers are printed with 6 significant digits in table and csv output and
at full precision in json. The quadrature tolerance can be overridden with
the TIMEDIL_QUAD_RTOL environment variable (default 1e-6).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import catalog as cat
from . import interferometer as itf
from . import lightclock as lc
from . import verify as vf
from .config import load_entry
from .constants import CODATA2018, UNITS
from .errors import TimedilError, Unbounded
from .instability import ProbeDensity, tau_density, tau_two_branch
from .potentials import Body, SuperpositionState

DEFAULT_SEED = 0


@dataclass(frozen=True)
class Sweep:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str | None = None
    output: str = "table"
    seed: int = DEFAULT_SEED
    sweep: Sweep | None = None


class UsageError(Exception):
    pass


def parse_sweep(tokens) -> Sweep:
    if tokens is None:
        return None
    name, rng, kw, k = tokens
    if kw != "steps":
        raise UsageError("--sweep expects: NAME LO..HI steps K")
    try:
        lo_s, hi_s = rng.split("..")
        lo, hi = float(lo_s), float(hi_s)
        steps = int(k)
    except ValueError as exc:
        raise UsageError(f"bad sweep range {rng!r} or step count {k!r}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("sweep range must be finite")
    if not hi > lo:
        raise UsageError(f"empty sweep range {rng}")
    if steps < 2:
        raise UsageError("a sweep needs at least 2 steps")
    return Sweep(name, lo, hi, steps)


# --- formatting --------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, Unbounded):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, Unbounded):
        return str(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def emit(columns: list[tuple[str, str]], rows: list[list], output: str) -> str:
    """``columns`` are (name, unit) pairs; the header names both."""
    header = [f"{n} [{u}]" if u else n for n, u in columns]
    if output == "json":
        recs = [{n: _jsonable(v) for (n, _), v in zip(columns, r)} for r in rows]
        return json.dumps({"columns": [{"name": n, "unit": u} for n, u in columns], "rows": recs},
                          indent=2) + "\n"
    cells = [[_fmt(v) for v in r] for r in rows]
    if output == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(cells)
        return buf.getvalue()
    table = [header] + cells
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# --- commands ------------------------------------------------------------------

def cmd_constants(args, cfg: RunConfig) -> tuple[str, int]:
    rows = [[k, v, UNITS[k]] for k, v in CODATA2018.as_dict().items()]
    return emit([("name", ""), ("value", ""), ("unit", "")], rows, cfg.output), 0


def _sweepable(cfg: RunConfig, allowed: dict[str, Callable], base: dict) -> list[dict]:
    if cfg.sweep is None:
        return [dict(base)]
    if cfg.sweep.name not in allowed:
        raise UsageError(f"unknown sweep parameter {cfg.sweep.name!r}; choose from {sorted(allowed)}")
    conv = allowed[cfg.sweep.name]
    return [dict(base, **{cfg.sweep.name: conv(v)}) for v in cfg.sweep.values()]


def _train_rows(args) -> tuple[list, list]:
    b = 1e-3 * args.length
    pulse = lc.PulseSpec("gaussian", args.bandwidth)
    spec = lc.LightClockSpec(L=args.length, M=args.mass, radius_a=args.ratio * b, radius_b=b, pulse=pulse)
    train = lc.pulse_train_superposed_exact(spec, args.train)
    width = 4.0 / args.bandwidth
    t = np.concatenate([2 * n * train.dtbar + np.linspace(-width, width, args.points)
                        for n in range(1, args.train + 1)])
    field = train.synthesize(t, pulse)
    rows = [[ti, f.real, f.imag, abs(f)] for ti, f in zip(t, field)]
    return [("time", "s"), ("re", ""), ("im", ""), ("modulus", "")], rows


def cmd_lightclock(args, cfg: RunConfig) -> tuple[str, int]:
    if args.train:
        if cfg.sweep is not None:
            raise UsageError("--train does not combine with --sweep")
        cols, rows = _train_rows(args)
        return emit(cols, rows, cfg.output), 0
    base = dict(mass=args.mass, ratio=args.ratio, L=args.length, bandwidth=args.bandwidth,
                dtbar=args.dtbar)
    points = _sweepable(cfg, {k: float for k in base}, base)
    rows = []
    for p in points:
        b = 1e-3 * p["L"]
        spec = lc.LightClockSpec(L=p["L"], M=p["mass"], radius_a=p["ratio"] * b, radius_b=b)
        delay = lc.superposition_delay(spec)
        _, split = lc.clock_times(spec)
        horizon = lc.coherence_horizon(p["bandwidth"], split, p["dtbar"])
        rows.append([p["mass"], p["ratio"], p["L"], delay, split, horizon])
    cols = [("mass", "kg"), ("a_over_b", ""), ("L", "m"), ("round_trip_delay", "s"),
            ("split", "s"), ("coherence_horizon", "s")]
    return emit(cols, rows, cfg.output), 0


def cmd_instability(args, cfg: RunConfig) -> tuple[str, int]:
    if cfg.input_path:
        e = load_entry(cfg.input_path)
        r = cat.compute_entry(e)
        rec = r.to_record()
        rows = [[e.name, rec["formula"], r.tau, rec["denominator_J"], rec["rel_error"], rec["method"],
                 rec["inputs_digest"]]]
        cols = [("name", ""), ("formula", ""), ("tau", "s"), ("denominator", "J"), ("rel_error", ""),
                ("method", ""), ("inputs_digest", "")]
        return emit(cols, rows, cfg.output), 0
    base = dict(mass=args.mass, radius=args.radius, separation=args.separation,
                probe_mass=args.probe_mass, distance=args.distance)
    points = _sweepable(cfg, {k: float for k in base}, base)
    rows = []
    for p in points:
        s = SuperpositionState.displaced(Body.ball(p["mass"], p["radius"]),
                                         [(0, 0, 0), (p["separation"], 0, 0)])
        r = tau_two_branch(p["probe_mass"], s, (-p["distance"], 0, 0))
        rows.append([p["mass"], p["separation"], p["probe_mass"], p["distance"], r.tau])
    cols = [("mass", "kg"), ("separation", "m"), ("probe_mass", "kg"), ("distance", "m"), ("tau", "s")]
    return emit(cols, rows, cfg.output), 0


def cmd_interferometer(args, cfg: RunConfig) -> tuple[str, int]:
    base = dict(gain_db=args.gain_db, theta=args.theta)
    points = _sweepable(cfg, {"gain_db": float, "theta": float}, base)
    rows = []
    for p in points:
        G = 10.0 ** (p["gain_db"] / 10.0)
        vis = itf.visibility(args.bph, args.ba, G)
        row = [p["gain_db"], vis, itf.tau_vs_gain(G, model="asymptotic"), itf.tau_vs_gain(G, model="exact")]
        if args.samples:
            v = itf.variance_phi(itf.AmplifierSpec(G, theta=p["theta"]), n_samples=args.samples, seed=cfg.seed)
            row += [v.monte_carlo, v.mc_error]
        rows.append(row)
    cols = [("gain_dB", "dB"), ("visibility", ""), ("tau", "s"), ("tau_exact", "s")]
    if args.samples:
        cols += [("variance_mc", "J2/kg2"), ("variance_mc_err", "J2/kg2")]
    return emit(cols, rows, cfg.output), 0


def cmd_catalog(args, cfg: RunConfig) -> tuple[str, int]:
    entries = cat.load_catalog(cfg.input_path)
    rows = cat.rank_catalog(entries, include_interferometer=not args.no_interferometer)
    if cfg.output == "csv":
        return cat.report_csv(rows), 0
    if cfg.output == "json":
        return json.dumps(cat.report_records(rows), indent=2) + "\n", 0
    return cat.report_text(rows), 0


def cmd_verify(args, cfg: RunConfig) -> tuple[str, int]:
    checks = vf.run_all(cfg.seed)
    failed = any(not c.passed for c in checks)
    if cfg.output == "table":
        return vf.report(checks), int(failed)
    rows = [[c.name, "PASS" if c.passed else "FAIL", c.discrepancy, c.tolerance] for c in checks]
    cols = [("check", ""), ("status", ""), ("discrepancy", ""), ("tolerance", "")]
    return emit(cols, rows, cfg.output), int(failed)


COMMANDS = {
    "constants": cmd_constants,
    "lightclock": cmd_lightclock,
    "instability": cmd_instability,
    "interferometer": cmd_interferometer,
    "catalog": cmd_catalog,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("table", "csv", "json"), default="table")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--config", metavar="PATH", default=None)
    common.add_argument("--sweep", nargs=4, metavar=("NAME", "LO..HI", "steps", "K"), default=None)

    p = argparse.ArgumentParser(prog="timedil", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="pinned physical constants")

    s = sub.add_parser("lightclock", parents=[common], help="light-clock delay and coherence horizon")
    s.add_argument("--mass", type=float, default=1e-12, help="ball mass, kg")
    s.add_argument("--ratio", type=float, default=0.95, help="radius ratio a/b")
    s.add_argument("--length", type=float, default=1.0, help="mirror separation L, m")
    s.add_argument("--bandwidth", type=float, default=1e12, help="pulse bandwidth, rad/s")
    s.add_argument("--dtbar", type=float, default=1e-13, help="mean traversal time for the horizon, s")
    s.add_argument("--train", type=int, default=0, metavar="N",
                   help="emit the output field of the first N round trips instead (gaussian pulse)")
    s.add_argument("--points", type=int, default=41, help="samples per pulse with --train")

    s = sub.add_parser("instability", parents=[common], help="probe instability time")
    s.add_argument("--mass", type=float, default=1e-15, help="superposed ball mass, kg")
    s.add_argument("--radius", type=float, default=5e-7, help="ball radius, m")
    s.add_argument("--separation", type=float, default=1e-6, help="superposition size, m")
    s.add_argument("--probe-mass", type=float, default=1e-16, help="point probe mass, kg")
    s.add_argument("--distance", type=float, default=1e-5, help="probe distance from the ball, m")

    s = sub.add_parser("interferometer", parents=[common], help="amplified Mach-Zehnder timescale")
    s.add_argument("--gain-db", type=float, default=200.0)
    s.add_argument("--theta", type=float, default=0.0, help="squeeze phase, rad")
    s.add_argument("--bph", type=float, default=2 * np.pi * 1e7, help="photon bandwidth, rad/s")
    s.add_argument("--ba", type=float, default=2 * np.pi * 300, help="amplifier bandwidth, rad/s")
    s.add_argument("--samples", type=int, default=0, help="Monte Carlo samples for the variance (0: skip)")

    s = sub.add_parser("catalog", parents=[common], help="Table regression over the shipped catalog")
    s.add_argument("--no-interferometer", action="store_true")

    sub.add_parser("verify", parents=[common], help="run all oracle checks")
    return p


def run(cfg: RunConfig, args) -> tuple[str, int]:
    return COMMANDS[cfg.command](args, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sweep = parse_sweep(args.sweep)
        if sweep is not None and args.command in ("constants", "catalog", "verify"):
            raise UsageError(f"{args.command} does not take --sweep")
        cfg = RunConfig(args.command, args.config, args.output, args.seed, sweep)
        text, status = run(cfg, args)
    except UsageError as exc:
        parser.error(str(exc))
    except (TimedilError, OSError) as exc:
        print(f"timedil: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
