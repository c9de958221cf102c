import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from timedil import lightclock as lc
from timedil.constants import CODATA2018
from timedil.errors import NO_HORIZON, GeometryError, OverflowGuardError

G, C = CODATA2018.G, CODATA2018.c


def spec(M=1e-12, a=0.95e-3, b=1e-3, L=1.0, T=0.1):
    return lc.LightClockSpec(L=L, M=M, radius_a=a, radius_b=b, transmissivity_T=T)


def test_spec_invariants():
    with pytest.raises(GeometryError):
        spec(a=2e-3, b=1e-3)
    with pytest.raises(GeometryError):
        spec(b=0.6)
    with pytest.raises(GeometryError):
        spec(T=0.5)
    s = spec(T=0.2)
    assert abs(s.transmissivity_T) ** 2 + s.reflectivity_R ** 2 == pytest.approx(1.0, abs=1e-15)


def test_traversal_time_flat_and_example():
    assert lc.traversal_time(spec(M=0.0), 1e-3) == 1.0 / C
    s = lc.LightClockSpec(L=0.03, M=1e-15, radius_a=1e-6, radius_b=1e-6)
    assert lc.traversal_time(s, 1e-6) == pytest.approx(1e-10, rel=1e-3)
    expected = 2 * G * 1e-15 / C ** 3 * (np.log(0.03 / 2e-6) + 4 / 3)
    assert lc.traversal_excess(s, 1e-6) == pytest.approx(expected, rel=1e-14)
    assert lc.traversal_excess(s, 1e-6) == pytest.approx(5.4e-50, rel=0.01)
    assert lc.traversal_excess(s, 1e-6) > 0
    assert lc.traversal_time(s, 1e-6) >= 0.03 / C


@given(M=st.floats(1e-20, 1e3), L=st.floats(1e-3, 10.0), frac=st.floats(1e-6, 0.49))
def test_excess_matches_potential_line_integral(M, L, frac):
    s = lc.LightClockSpec(L=L, M=M, radius_a=frac * L, radius_b=frac * L)
    assert lc.traversal_excess(s, frac * L) == pytest.approx(lc.excess_from_potential(s, frac * L), rel=1e-12)


def test_superposition_delay_example():
    d = lc.superposition_delay(spec(M=1e-12))
    assert 1e-49 <= d <= 1e-48
    assert d == pytest.approx(5.1e-49, rel=0.01)
    # the gram reading of the mass is a thousand times smaller
    assert lc.superposition_delay(spec(M=1e-15)) == pytest.approx(d / 1000)
    assert lc.superposition_delay(spec(a=1e-3)) == 0.0
    assert lc.superposition_delay(spec(M=2e-12)) == 2 * d


def test_split_convention():
    s = spec()
    dtbar, split = lc.clock_times(s)
    assert lc.superposition_delay(s) == pytest.approx(2 * split, rel=1e-15)
    assert dtbar == pytest.approx(0.5 * (lc.traversal_time(s, s.radius_a) + lc.traversal_time(s, s.radius_b)))


def test_flat_train_matches_recursion():
    s = spec(M=0.0, T=0.25)
    train = lc.pulse_train_flat(s, 30)
    rec = lc.iterate_cavity(s.transmissivity_T, s.reflectivity_R, 2 * train.dtbar, 30)
    for o, (d, a) in zip(train, rec):
        assert o.delays[0] == pytest.approx(d, rel=1e-15)
        assert abs(o.amplitudes[0] - a) <= 1e-12 * abs(a)
        assert abs(a) == pytest.approx(0.25 * s.reflectivity_R ** (o.n - 1), rel=1e-12)
    one = lc.pulse_train_flat(s, 1)
    assert [o.delays[0] for o in one] == [2 * one.dtbar]


def test_degenerate_superposition_equals_flat():
    s = spec(M=0.0, T=0.15)
    flat = lc.pulse_train_flat(s, 25)
    merged = lc.pulse_train_superposed_exact(s, 25).merged()
    assert len(merged) == 25
    for (d, a), o in zip(merged, flat):
        assert d == pytest.approx(o.delays[0], rel=1e-15)
        assert abs(a - o.amplitudes[0]) <= 1e-12 * abs(a)


def test_binomial_weights_match_exact_integers():
    from math import comb
    for n in (1, 5, 30, 200):
        exact = np.array([comb(2 * n, k) / 4 ** n for k in range(2 * n + 1)])
        assert np.allclose(lc.binomial_weights(n), exact, rtol=1e-12, atol=0)


def test_order_one_weights():
    train = lc.pulse_train_superposed_exact(spec(), 3)
    o = train.order(1)
    assert np.allclose(o.binomial, [0.25, 0.5, 0.25], rtol=1e-14)
    assert np.allclose(o.offsets, [train.split, 0.0, -train.split])


@pytest.mark.parametrize("n", [1, 2, 7, 50, 100, 1000, 10000])
def test_binomial_weights_sum_to_one(n):
    assert lc.binomial_weights(n).sum() == pytest.approx(1.0, abs=1e-12)


def test_overflow_guard():
    with pytest.raises(OverflowGuardError):
        lc.pulse_train_superposed_exact(spec(), 10_001)


def test_continuum_envelope_n50():
    n = 50
    k = np.arange(2 * n + 1)
    core = np.abs(k - n) <= 2 * np.sqrt(n)
    rel = np.abs(lc.continuum_weights(n)[core] / lc.binomial_weights(n)[core] - 1)
    assert rel.max() < 0.05


def test_continuum_error_decreases():
    errs = [np.abs(lc.continuum_weights(n) - lc.binomial_weights(n)).max() for n in (10, 20, 50, 100)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


@given(omega=st.floats(1.0, 1e3), da=st.floats(0.0, 1.0), db=st.floats(0.0, 1.0))
def test_traverse_factor_modulus(omega, da, db):
    f = lc.traverse_factor([0.5, 0.5], [da, db], omega)
    assert abs(f) <= 1.0 + 1e-15
    assert lc.traverse_factor([0.5, 0.5], [da, da], omega) == pytest.approx(np.exp(1j * omega * da), abs=1e-15)


@given(n=st.integers(1, 40), omega=st.floats(0.1, 10.0), dtbar=st.floats(0.1, 2.0), split=st.floats(0.0, 0.5))
def test_binomial_expansion_of_factor(n, omega, dtbar, split):
    # (1/2 e^{i w dt_a} + 1/2 e^{i w dt_b})^{2n} equals the sum over sub-pulses
    dt_a, dt_b = dtbar + split / 2, dtbar - split / 2
    lhs = lc.traverse_factor([0.5, 0.5], [dt_a, dt_b], omega) ** (2 * n)
    k = np.arange(2 * n + 1)
    rhs = np.sum(lc.binomial_weights(n) * np.exp(1j * omega * (2 * n * dtbar + (n - k) * split)))
    assert abs(lhs - rhs) < 1e-10


def test_raised_cosine_unit_area_and_centre():
    B = 3.0
    # tails beyond |t| = T contribute 2 / (pi B T) on average
    T = 2000 * np.pi / B
    val, _ = integrate.quad(lambda t: lc.raised_cosine(t, B), -T, T, limit=5000,
                            points=np.linspace(-T, T, 41)[1:-1])
    assert val == pytest.approx(1.0 - 2 / (np.pi * B * T), abs=1e-6)
    assert lc.raised_cosine(0.0, B) == pytest.approx(B / (2 * np.pi), rel=1e-15)
    p = lc.PulseSpec("gaussian", bandwidth=2.0)
    assert p(0.0) == 1.0


def test_asymptotic_height_scaling():
    h1 = lc.pulse_height_asymptotic(1e12, 1e-49, 1e-13, 1e60)
    assert 0.1 < h1 < 10
    assert lc.pulse_height_asymptotic(1e12, 1e-49, 1e-13, 4e60) == pytest.approx(h1 / 2)


# the large-time law needs the sub-pulse spread sqrt(n) * split to exceed the
# pulse width 1 / bw; grid points short of that are left out
PEAK_GRID = [(d, n) for d in (0.01, 0.03, 0.1) for n in (1000, 3000, 10000) if np.sqrt(n) * d >= 1.0]


@pytest.mark.parametrize("dwdt,n", PEAK_GRID)
def test_asymptotic_height_vs_exact_peak(dwdt, n):
    pulse = lc.PulseSpec("gaussian", bandwidth=1.0)
    train = lc.PulseTrain(dtbar=1.0, split=dwdt, transmissivity=0.1, reflectivity=np.sqrt(0.99),
                          n_max=n, superposed=True)
    exact = lc.peak_height(train, n, pulse)
    asym = lc.pulse_height_asymptotic(1.0, dwdt, 1.0, 2 * n * 1.0)
    assert 0.5 <= asym / exact <= 2.0


def test_coherence_horizon():
    t = lc.coherence_horizon(1e12, 1e-49, 1e-13)
    assert t == pytest.approx(2e61, rel=1e-12)
    assert abs(np.log10(t) - 60) <= 1.5
    assert lc.coherence_horizon(1e12, 0.0, 1e-13) is NO_HORIZON
    assert lc.coherence_horizon(4e12, 1e-49, 1e-13) == pytest.approx(t / 16)
