"""YAML description of bodies, superpositions, probes and experiment entries.

Schema (all lengths in m, masses in kg, densities in kg/m^3, times in s)::

    name: buckyball
    table_tau: 2.0e8            # optional
    flight_time: 6.0e-3         # optional
    provenance_notes: "..."
    superposition:              # exactly one of branches / displaced / cube_grid
      displaced:
        body: {shape: ball, mass: 1.2e-24, radius: 3.5e-10}
        positions: [[-5.0e-8, 0, 0], [5.0e-8, 0, 0]]
        weights: [0.5, 0.5]     # optional, default equal
        environment: []         # optional bodies common to every branch
      # branches:
      #   - weight: 0.5
      #     bodies: [{shape: point, mass: 1.0, center: [0, 0, 0]}, ...]
      # cube_grid: {mass: 1.0, edge: 1.0e-6, n: 3, center: [0, 0, 0]}
    probe: {shape: slab, density: 3.0e3, edges: [1.0e-3, 1.0e-3, 1.0e-7]}

Body shapes: ``point`` (mass, center), ``ball`` (+radius), ``box`` (+edge or
edges), ``cylinder`` (+radius, length, axis). Probe shapes: ``point`` (mass,
center), ``slab`` (density, edges, center, axis), ``cylinder`` (density,
radius, length, center, axis), ``ball`` (density, radius, center).

Errors are :class:`~timedil.errors.ConfigError` with the source line and the
dotted field path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, TimedilError
from .instability import ProbeDensity
from .potentials import Body, MassConfiguration, SuperpositionState


class _Map(dict):
    """dict that remembers the source line of itself and of each key."""

    line: int = 0
    key_lines: dict


class _Seq(list):
    line: int = 0


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        out[key] = loader.construct_object(v_node, deep=True)
        out.key_lines[key] = v_node.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = _Seq(loader.construct_object(n, deep=True) for n in node.value)
    out.line = node.start_mark.line + 1
    return out


# YAML 1.1 needs a dot in floats, so "1e-06" would otherwise load as a string
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def _join(path: str, key) -> str:
    if key == _WRAPPED:
        return path
    return f"{path}.{key}" if path else str(key)


_WRAPPED = "\0"


class _Ctx:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, path: str, msg: str, key=None):
        line = getattr(node, "line", 0)
        if key is not None and isinstance(node, _Map):
            line = node.key_lines.get(key, line)
        raise ConfigError(f"{self.source}:{line}: field '{path}': {msg}")

    def mapping(self, node, path, allowed, required=()):
        if not isinstance(node, dict):
            self.fail(node, path, "expected a mapping")
        for k in node:
            if k not in allowed:
                self.fail(node, _join(path, k), "unknown field", key=k)
        for k in required:
            if k not in node:
                self.fail(node, path, f"missing required field '{k}'")
        return node

    def number(self, node, key, path, default=None, positive=False, nonneg=False):
        if key not in node:
            if default is None:
                self.fail(node, path, f"missing required field '{key}'")
            return default
        v = node[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(node, _join(path, key), f"expected a number, got {v!r}", key=key)
        v = float(v)
        if positive and not v > 0:
            self.fail(node, _join(path, key), "must be positive", key=key)
        if nonneg and not v >= 0:
            self.fail(node, _join(path, key), "must be non-negative", key=key)
        return v

    def vector(self, node, key, path, default=(0.0, 0.0, 0.0)):
        if key not in node:
            return tuple(default)
        v = node[key]
        if not isinstance(v, list) or len(v) != 3 or not all(
                isinstance(e, (int, float)) and not isinstance(e, bool) for e in v):
            self.fail(node, _join(path, key), "expected a list of three numbers", key=key)
        return tuple(float(e) for e in v)

    def build(self, node, path, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (TimedilError, ValueError, TypeError) as exc:
            self.fail(node, path, str(exc))


def _wrap(value, line: int) -> _Map:
    m = _Map({_WRAPPED: value})
    m.line = getattr(value, "line", line)
    m.key_lines = {_WRAPPED: m.line}
    return m


_BODY_FIELDS = {"shape", "mass", "center", "radius", "edge", "edges", "length", "axis", "name"}


def _body(ctx: _Ctx, node, path) -> Body:
    ctx.mapping(node, path, _BODY_FIELDS, ("shape", "mass"))
    shape = node["shape"]
    mass = ctx.number(node, "mass", path, nonneg=True)
    center = ctx.vector(node, "center", path)
    name = str(node.get("name", ""))
    if shape == "point":
        return ctx.build(node, path, lambda: Body.point(mass, center, name=name))
    if shape == "ball":
        r = ctx.number(node, "radius", path, positive=True)
        return ctx.build(node, path, lambda: Body.ball(mass, r, center, name=name))
    if shape == "box":
        if "edges" in node:
            edges = ctx.vector(node, "edges", path)
            return ctx.build(node, path, lambda: Body.box(mass, edges=edges, center=center, name=name))
        e = ctx.number(node, "edge", path, positive=True)
        return ctx.build(node, path, lambda: Body.box(mass, e, center=center, name=name))
    if shape == "cylinder":
        r = ctx.number(node, "radius", path, positive=True)
        ln = ctx.number(node, "length", path, positive=True)
        axis = ctx.vector(node, "axis", path, (0.0, 0.0, 1.0))
        return ctx.build(node, path, lambda: Body.cylinder(mass, r, ln, center, axis, name=name))
    ctx.fail(node, _join(path, "shape"), f"unknown body shape {shape!r}", key="shape")


def _bodies(ctx, node, path) -> list[Body]:
    if not isinstance(node, list):
        ctx.fail(node, path, "expected a list of bodies")
    return [_body(ctx, b, f"{path}[{i}]") for i, b in enumerate(node)]


def _superposition(ctx: _Ctx, node, path) -> SuperpositionState:
    ctx.mapping(node, path, {"branches", "displaced", "cube_grid"})
    kinds = [k for k in ("branches", "displaced", "cube_grid") if k in node]
    if len(kinds) != 1:
        ctx.fail(node, path, "exactly one of branches, displaced, cube_grid is required")
    kind = kinds[0]
    sub = node[kind]
    p = _join(path, kind)
    if kind == "branches":
        if not isinstance(sub, list) or not sub:
            ctx.fail(node, p, "expected a non-empty list", key=kind)
        branches = []
        for i, b in enumerate(sub):
            bp = f"{p}[{i}]"
            ctx.mapping(b, bp, {"weight", "bodies"}, ("weight", "bodies"))
            w = ctx.number(b, "weight", bp, nonneg=True)
            bodies = _bodies(ctx, b["bodies"], f"{bp}.bodies")
            branches.append((w, ctx.build(b, bp, lambda bodies=bodies: MassConfiguration(tuple(bodies)))))
        return ctx.build(node, p, lambda: SuperpositionState(tuple(branches)))
    if kind == "displaced":
        ctx.mapping(sub, p, {"body", "positions", "weights", "environment"}, ("body", "positions"))
        body = _body(ctx, sub["body"], f"{p}.body")
        pos = sub["positions"]
        if not isinstance(pos, list) or not pos:
            ctx.fail(sub, f"{p}.positions", "expected a non-empty list of 3-vectors", key="positions")
        positions = [ctx.vector(_wrap(v, pos.line), _WRAPPED, f"{p}.positions[{i}]") for i, v in enumerate(pos)]
        weights = sub.get("weights")
        if weights is not None and (not isinstance(weights, list) or len(weights) != len(positions)):
            ctx.fail(sub, f"{p}.weights", "expected one weight per position", key="weights")
        env = _bodies(ctx, sub.get("environment", _Seq()), f"{p}.environment")
        return ctx.build(sub, p, lambda: SuperpositionState.displaced(
            body, positions, None if weights is None else [float(w) for w in weights], env))
    ctx.mapping(sub, p, {"mass", "edge", "n", "center"}, ("mass", "edge", "n"))
    mass = ctx.number(sub, "mass", p, positive=True)
    edge = ctx.number(sub, "edge", p, positive=True)
    n = sub["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        ctx.fail(sub, f"{p}.n", "expected a positive integer", key="n")
    center = ctx.vector(sub, "center", p)
    return ctx.build(sub, p, lambda: SuperpositionState.cube_grid(mass, edge, n, center))


_PROBE_FIELDS = {"shape", "mass", "density", "center", "edges", "radius", "length", "axis", "name"}


def _probe(ctx: _Ctx, node, path) -> ProbeDensity:
    ctx.mapping(node, path, _PROBE_FIELDS, ("shape",))
    shape = node["shape"]
    center = ctx.vector(node, "center", path)
    axis = ctx.vector(node, "axis", path, (0.0, 0.0, 1.0))
    name = str(node.get("name", ""))
    if shape == "point":
        m = ctx.number(node, "mass", path, positive=True)
        return ctx.build(node, path, lambda: ProbeDensity.point(m, center, name=name))
    rho = ctx.number(node, "density", path, positive=True)
    if shape == "slab":
        edges = ctx.vector(node, "edges", path, (0.0, 0.0, 0.0))
        return ctx.build(node, path, lambda: ProbeDensity.slab(rho, edges, center, axis, name=name))
    if shape == "ball":
        r = ctx.number(node, "radius", path, positive=True)
        return ctx.build(node, path, lambda: ProbeDensity.ball(rho, r, center, name=name))
    if shape == "cylinder":
        r = ctx.number(node, "radius", path, positive=True)
        ln = ctx.number(node, "length", path, positive=True)
        return ctx.build(node, path, lambda: ProbeDensity.cylinder(rho, r, ln, center, axis, name=name))
    ctx.fail(node, _join(path, "shape"), f"unknown probe shape {shape!r}", key="shape")


@dataclass(frozen=True)
class ExperimentEntry:
    name: str
    superposition: SuperpositionState
    probe: ProbeDensity
    flight_time: float | None = None
    table_tau: float | None = None
    provenance_notes: str = ""

    def __post_init__(self):
        if self.table_tau is not None and not self.table_tau > 0:
            raise ValueError("table_tau must be positive")
        if self.flight_time is not None and not self.flight_time > 0:
            raise ValueError("flight_time must be positive")


_ENTRY_FIELDS = {"name", "superposition", "probe", "flight_time", "table_tau", "provenance_notes"}


def _load(text: str, source: str):
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise ConfigError(f"{source}:{line}: {getattr(exc, 'problem', exc)}") from exc


def parse_entry(text: str, source: str = "<string>") -> ExperimentEntry:
    node = _load(text, source)
    ctx = _Ctx(source)
    ctx.mapping(node, "", _ENTRY_FIELDS, ("name", "superposition", "probe", "provenance_notes"))
    notes = node["provenance_notes"]
    if not isinstance(notes, str) or not notes.strip():
        ctx.fail(node, "provenance_notes", "must be non-empty text", key="provenance_notes")
    sup = _superposition(ctx, node["superposition"], "superposition")
    probe = _probe(ctx, node["probe"], "probe")
    ft = ctx.number(node, "flight_time", "", positive=True) if "flight_time" in node else None
    tt = ctx.number(node, "table_tau", "", positive=True) if "table_tau" in node else None
    return ExperimentEntry(str(node["name"]), sup, probe, ft, tt, notes.strip())


def load_entry(path) -> ExperimentEntry:
    p = Path(path)
    return parse_entry(p.read_text(), str(p))


def parse_superposition(text: str, source: str = "<string>") -> SuperpositionState:
    return _superposition(_Ctx(source), _load(text, source), "")


def parse_probe(text: str, source: str = "<string>") -> ProbeDensity:
    return _probe(_Ctx(source), _load(text, source), "")


# --- serialisation -----------------------------------------------------------

def body_to_dict(b: Body) -> dict[str, Any]:
    d: dict[str, Any] = {"shape": b.shape, "mass": b.mass, "center": list(b.center)}
    if b.shape in ("ball", "cylinder"):
        d["radius"] = b.radius
    if b.shape == "box":
        d["edges"] = list(b.edges)
    if b.shape == "cylinder":
        d["length"] = b.length
        d["axis"] = list(b.axis)
    if b.name:
        d["name"] = b.name
    return d


def superposition_to_dict(s: SuperpositionState) -> dict[str, Any]:
    return {"branches": [{"weight": w, "bodies": [body_to_dict(b) for b in c.bodies]}
                         for w, c in s.branches]}


def probe_to_dict(p: ProbeDensity) -> dict[str, Any]:
    d: dict[str, Any] = {"shape": p.shape, "center": list(p.center)}
    if p.shape == "point":
        d["mass"] = p.mass
        return d
    d["density"] = p.density
    if p.shape == "slab":
        d["edges"] = list(p.edges)
    else:
        d["radius"] = p.radius
    if p.shape == "cylinder":
        d["length"] = p.length
    if p.shape in ("slab", "cylinder"):
        d["axis"] = list(p.axis)
    if p.name:
        d["name"] = p.name
    return d


def entry_to_dict(e: ExperimentEntry) -> dict[str, Any]:
    d: dict[str, Any] = {"name": e.name}
    if e.table_tau is not None:
        d["table_tau"] = e.table_tau
    if e.flight_time is not None:
        d["flight_time"] = e.flight_time
    d["provenance_notes"] = e.provenance_notes
    d["superposition"] = superposition_to_dict(e.superposition)
    d["probe"] = probe_to_dict(e.probe)
    return d


def dump_entry(e: ExperimentEntry) -> str:
    return yaml.safe_dump(entry_to_dict(e), sort_keys=False, width=100)
