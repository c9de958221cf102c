"""Batch computation of instability times for a catalog of experiments.

Each entry is a YAML file in ``timedil/data/catalog``. Two-branch entries go
through :func:`~timedil.instability.tau_density`, others through
:func:`~timedil.instability.tau_density_multibranch`. The tunable microwave
interferometer row is computed separately by :func:`interferometer_row`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ExperimentEntry, load_entry
from .errors import Unbounded
from .instability import InstabilityResult, tau_density, tau_density_multibranch
from .interferometer import CoaxSpec, tau_vs_gain
from .quadrature import DEFAULT_RTOL

MZ_NAME = "microwave_mz"
MZ_GAIN_DB = 200.0
MZ_TABLE_TAU = 1e-6


def catalog_dir() -> Path:
    return Path(str(resources.files("timedil") / "data" / "catalog"))


def load_catalog(directory=None) -> list[ExperimentEntry]:
    d = catalog_dir() if directory is None else Path(directory)
    return [load_entry(p) for p in sorted(d.glob("*.yaml"))]


def compute_entry(e: ExperimentEntry, rtol: float = DEFAULT_RTOL) -> InstabilityResult:
    if len(e.superposition) == 2:
        return tau_density(e.probe, e.superposition, rtol=rtol)
    return tau_density_multibranch(e.probe, e.superposition, rtol=rtol)


@dataclass(frozen=True)
class CatalogRow:
    name: str
    tau: float | Unbounded
    table_tau: float | None
    flight_time: float | None
    rel_error: float

    @property
    def ratio(self) -> float | None:
        if self.table_tau is None or isinstance(self.tau, Unbounded):
            return None
        return self.tau / self.table_tau

    @property
    def within_decade(self) -> bool:
        r = self.ratio
        return r is not None and 0.1 <= r <= 10.0

    @property
    def verdict(self) -> str:
        if self.flight_time is None:
            return "n/a"
        if isinstance(self.tau, Unbounded) or self.tau > self.flight_time:
            return "stable during flight"
        return "unstable during flight"


def interferometer_row(gain_db: float = MZ_GAIN_DB, coax: CoaxSpec = CoaxSpec()) -> CatalogRow:
    tau = tau_vs_gain(10.0 ** (gain_db / 10.0), coax)
    return CatalogRow(MZ_NAME, tau, MZ_TABLE_TAU, None, 0.0)


def rank_catalog(entries, rtol: float = DEFAULT_RTOL, include_interferometer: bool = False) -> list[CatalogRow]:
    """Rows sorted by computed tau, longest first."""
    entries = list(entries)
    if not entries:
        raise ValueError("need at least one entry")
    rows = []
    for e in entries:
        r = compute_entry(e, rtol)
        rows.append(CatalogRow(e.name, r.tau, e.table_tau, e.flight_time, r.quadrature_error))
    if include_interferometer:
        rows.append(interferometer_row())
    return sorted(rows, key=lambda r: r.tau, reverse=True)


def ordering_consistent(rows: list[CatalogRow]) -> tuple[bool, list[str]]:
    """Among rows within a decade of their listed value, the computed order
    must equal the listed order (ties in the listed value are unordered)."""
    kept = [r for r in rows if r.within_decade]
    bad = []
    for i, a in enumerate(kept):
        for b in kept[i + 1:]:
            if a.table_tau < b.table_tau:
                bad.append(f"{a.name} above {b.name}")
    return not bad, bad


def _g(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Unbounded):
        return str(x)
    return f"{x:.6g}"


COLUMNS = ("name", "tau_s", "table_tau_s", "ratio", "flight_time_s", "verdict", "rel_error")


def _cells(r: CatalogRow) -> list[str]:
    return [r.name, _g(r.tau), _g(r.table_tau), _g(r.ratio), _g(r.flight_time), r.verdict,
            _g(r.rel_error)]


def report_csv(rows: list[CatalogRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(_cells(r))
    return buf.getvalue()


def report_text(rows: list[CatalogRow]) -> str:
    table = [list(COLUMNS)] + [_cells(r) for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def report_records(rows: list[CatalogRow]) -> list[dict]:
    out = []
    for r in rows:
        out.append({
            "name": r.name,
            "tau_s": str(r.tau) if isinstance(r.tau, Unbounded) else float(r.tau),
            "table_tau_s": r.table_tau,
            "ratio": r.ratio,
            "flight_time_s": r.flight_time,
            "verdict": r.verdict,
            "rel_error": r.rel_error,
        })
    return out


def log_ratio(row: CatalogRow) -> float:
    return float(np.log10(row.ratio)) if row.ratio else float("nan")
