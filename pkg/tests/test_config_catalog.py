import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timedil.catalog import (
    COLUMNS,
    MZ_NAME,
    compute_entry,
    interferometer_row,
    load_catalog,
    ordering_consistent,
    rank_catalog,
    report_csv,
    report_records,
    report_text,
)
from timedil.config import (
    ExperimentEntry,
    dump_entry,
    entry_to_dict,
    parse_entry,
    parse_probe,
    parse_superposition,
)
from timedil.errors import INFINITE, ConfigError
from timedil.instability import ProbeDensity, tau_two_branch
from timedil.potentials import Body, SuperpositionState

SMALL = """\
name: small
table_tau: 1.0e+3
flight_time: 1.0
provenance_notes: worked example geometry
superposition:
  displaced:
    body: {shape: ball, mass: 1.0e-15, radius: 5.0e-7}
    positions: [[0, 0, 0], [1.0e-6, 0, 0]]
probe: {shape: point, mass: 1.0e-16, center: [-1.0e-5, 0, 0]}
"""


@pytest.fixture(scope="module")
def shipped():
    return load_catalog()


@pytest.fixture(scope="module")
def ranked(shipped):
    return rank_catalog(shipped, include_interferometer=True)


# --- config parsing ------------------------------------------------------------

def test_parse_small_entry():
    e = parse_entry(SMALL)
    assert e.name == "small"
    assert e.table_tau == 1e3 and e.flight_time == 1.0
    assert len(e.superposition) == 2
    s = SuperpositionState.displaced(Body.ball(1e-15, 5e-7), [(0, 0, 0), (1e-6, 0, 0)])
    expect = tau_two_branch(1e-16, s, (-1e-5, 0, 0)).tau
    assert compute_entry(e).tau == pytest.approx(expect, rel=1e-9)


def test_round_trip_small():
    e = parse_entry(SMALL)
    e2 = parse_entry(dump_entry(e))
    assert e2 == e or entry_to_dict(e2) == entry_to_dict(e)
    assert compute_entry(e2).tau == compute_entry(e).tau


@pytest.mark.parametrize("name", ["micromirror", "neutron", "otima"])
def test_round_trip_shipped(shipped, name):
    e = next(x for x in shipped if x.name == name)
    e2 = parse_entry(dump_entry(e))
    assert entry_to_dict(e2) == entry_to_dict(e)
    assert compute_entry(e2).tau == compute_entry(e).tau


def test_round_trip_structure_all(shipped):
    for e in shipped:
        assert entry_to_dict(parse_entry(dump_entry(e))) == entry_to_dict(e)


@settings(max_examples=20)
@given(st.floats(1e-20, 1e-3), st.floats(1e-9, 1e-3), st.floats(1e-3, 1e-1))
def test_round_trip_floats_exact(mass, sep, dist):
    text = f"""\
name: h
provenance_notes: generated
superposition:
  displaced:
    body: {{shape: point, mass: {mass!r}}}
    positions: [[0, 0, 0], [{sep!r}, 0, 0]]
probe: {{shape: point, mass: 1.0, center: [{-dist!r}, 0, 0]}}
"""
    e = parse_entry(text)
    assert entry_to_dict(parse_entry(dump_entry(e))) == entry_to_dict(e)


def _error(text):
    with pytest.raises(ConfigError) as info:
        parse_entry(text, "entry.yaml")
    return str(info.value)


def test_error_unknown_field_has_line_and_path():
    msg = _error(SMALL.replace("radius: 5.0e-7", "radius: 5.0e-7, colour: red"))
    assert msg.startswith("entry.yaml:7:")
    assert "superposition.displaced.body.colour" in msg and "unknown field" in msg


def test_error_bad_number():
    msg = _error(SMALL.replace("mass: 1.0e-16", "mass: heavy"))
    assert "entry.yaml:9:" in msg and "probe.mass" in msg


def test_error_negative_table_tau():
    msg = _error(SMALL.replace("table_tau: 1.0e+3", "table_tau: -1"))
    assert "entry.yaml:2:" in msg and "table_tau" in msg


def test_error_missing_notes():
    msg = _error(SMALL.replace("provenance_notes: worked example geometry\n", ""))
    assert "provenance_notes" in msg


def test_error_bad_vector():
    msg = _error(SMALL.replace("[1.0e-6, 0, 0]", "[1.0e-6, 0]"))
    assert "entry.yaml:8:" in msg and "positions[1]" in msg


def test_error_unknown_shape():
    msg = _error(SMALL.replace("shape: ball", "shape: torus"))
    assert "torus" in msg and "superposition.displaced.body.shape" in msg


def test_error_path_at_top_level():
    with pytest.raises(ConfigError, match="field 'branches'"):
        parse_superposition("branches: []\n")


def test_exponent_without_dot_is_a_number():
    s = parse_superposition("displaced: {body: {shape: point, mass: 1e-15}, positions: [[0, 0, 0], [1e-6, 0, 0]]}\n")
    assert s.branches[1][1].bodies[0].center[0] == 1e-6


def test_error_two_kinds():
    with pytest.raises(ConfigError, match="exactly one"):
        parse_superposition("branches: []\ncube_grid: {mass: 1, edge: 1, n: 2}\n")


def test_error_yaml_syntax():
    with pytest.raises(ConfigError, match=r"entry.yaml:\d+"):
        parse_entry("name: [unclosed\n", "entry.yaml")


def test_parse_branches_and_cube_grid():
    s = parse_superposition("""\
branches:
  - weight: 0.25
    bodies: [{shape: point, mass: 1.0}]
  - weight: 0.75
    bodies: [{shape: point, mass: 1.0, center: [1, 0, 0]}]
""")
    assert [w for w, _ in s.branches] == pytest.approx([0.25, 0.75])
    g = parse_superposition("cube_grid: {mass: 8.0, edge: 1.0, n: 2}\n")
    assert len(g) == 8


def test_parse_probe_shapes():
    p = parse_probe("{shape: slab, density: 2.0, edges: [1, 2, 3]}")
    assert isinstance(p, ProbeDensity)
    assert p.shape == "slab"
    assert parse_probe("{shape: ball, density: 1.0, radius: 2.0}").shape == "ball"


# --- catalog --------------------------------------------------------------------

def test_zero_displacement_is_infinite():
    e = parse_entry(SMALL.replace("[1.0e-6, 0, 0]", "[0, 0, 0]"))
    assert compute_entry(e).tau is INFINITE


def test_entry_invariants():
    e = parse_entry(SMALL)
    with pytest.raises(ValueError):
        ExperimentEntry(e.name, e.superposition, e.probe, table_tau=0.0)


def test_shipped_entries_have_notes(shipped):
    assert len(shipped) == 8
    assert all(e.provenance_notes and e.table_tau for e in shipped)


def test_single_entry_report():
    rows = rank_catalog([parse_entry(SMALL)])
    assert len(rows) == 1
    assert len(report_csv(rows).splitlines()) == 2
    assert len(report_records(rows)) == 1


def test_empty_catalog_rejected():
    with pytest.raises(ValueError):
        rank_catalog([])


def test_sorted_descending(ranked):
    taus = [r.tau for r in ranked]
    assert taus == sorted(taus, reverse=True)
    assert len(ranked) == 9


def test_buckyball_verdict(ranked):
    r = next(r for r in ranked if r.name == "buckyball")
    assert r.flight_time == pytest.approx(6e-3)
    assert r.verdict == "stable during flight"


def test_micromirror_within_decade(ranked):
    r = next(r for r in ranked if r.name == "micromirror")
    assert 0.01 <= r.tau <= 1.0


def test_ordering_matches_table(ranked):
    ok, bad = ordering_consistent(ranked)
    assert ok, bad


def test_ordering_detects_swap():
    a = interferometer_row()
    fake = [type(a)("x", 1.0, 10.0, None, 0.0), type(a)("y", 5.0, 1.0, None, 0.0)]
    ok, bad = ordering_consistent(sorted(fake, key=lambda r: r.tau, reverse=True))
    assert not ok and bad == ["y above x"]


def test_interferometer_row():
    r = interferometer_row()
    assert r.name == MZ_NAME
    assert r.tau == pytest.approx(1.7e-6, rel=0.02)
    assert r.verdict == "n/a"


def test_reports_carry_columns(ranked):
    csv_text = report_csv(ranked)
    assert csv_text.splitlines()[0] == ",".join(COLUMNS)
    assert len(csv_text.splitlines()) == 10
    text = report_text(ranked)
    assert text.splitlines()[0].split() == list(COLUMNS)
    for rec in report_records(ranked):
        if rec["ratio"] is not None:
            assert math.isclose(rec["ratio"], rec["tau_s"] / rec["table_tau_s"])


def test_catalog_deterministic(shipped):
    pick = [e for e in shipped if e.name in ("micromirror", "neutron")]
    assert report_csv(rank_catalog(pick)) == report_csv(rank_catalog(pick))
