import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from timedil.constants import CODATA2018
from timedil.errors import INFINITE, NO_SOLUTION, NonConvergenceError, SingularityError
from timedil.instability import (
    ProbeDensity,
    norm_decay,
    tau_density,
    tau_density_multibranch,
    tau_entangled,
    tau_min_pointset,
    tau_moving_probe,
    tau_multibranch,
    tau_product,
    tau_self,
    tau_two_branch,
)
from timedil.potentials import Body, MassConfiguration, SuperpositionState, delta_phi
from timedil.verify import curvature_tau

G, HBAR = CODATA2018.G, CODATA2018.hbar


def worked_example():
    return SuperpositionState.displaced(Body.ball(1e-15, 5e-7), [(0, 0, 0), (1e-6, 0, 0)])


def random_state(rng, n, mass=1e-14):
    pos = rng.normal(size=(n, 3)) * 1e-6
    w = rng.dirichlet(np.ones(n))
    w = w / w.sum()
    return SuperpositionState(tuple((float(a), MassConfiguration.of(Body.ball(mass, 2e-7, p)))
                                    for a, p in zip(w, pos)))


def test_worked_example():
    r = tau_two_branch(1e-16, worked_example(), (-1e-5, 0, 0))
    assert 1e3 <= r.tau <= 1e4
    d = G * 1e-15 * (1 / 1e-5 - 1 / 1.1e-5)
    assert r.tau == pytest.approx(np.pi * HBAR / (1e-16 * d), rel=1e-12)
    assert r.formula == "two_branch"


def test_identical_branches_infinite():
    cfg = MassConfiguration.of(Body.ball(1.0, 1.0))
    s = SuperpositionState.equal([cfg, cfg])
    assert tau_two_branch(1.0, s, (5, 0, 0)).tau is INFINITE
    assert tau_density(ProbeDensity.ball(1e3, 0.5, center=(5, 0, 0)), s).tau is INFINITE
    assert tau_multibranch(SuperpositionState.equal([cfg]), 1.0, (5, 0, 0)).tau is INFINITE


@given(m=st.floats(1e-20, 1e-10), k=st.floats(1.5, 100.0))
def test_inverse_probe_mass(m, k):
    s = worked_example()
    x = (-1e-5, 0, 0)
    for fn in (tau_two_branch, lambda m_, s_, x_: tau_multibranch(s_, m_, x_)):
        assert fn(k * m, s, x).tau == pytest.approx(fn(m, s, x).tau / k, rel=1e-13)


def test_density_point_limit():
    s = worked_example()
    x = np.array([-1e-5, 0, 0])
    r = 1e-3 * 1e-5
    ball = ProbeDensity.ball(1e-16 / (4 / 3 * np.pi * r ** 3), r, center=x)
    assert tau_density(ball, s).tau == pytest.approx(tau_two_branch(1e-16, s, x).tau, rel=1e-3)
    assert tau_density(ProbeDensity.point(1e-16, x), s).tau == pytest.approx(tau_two_branch(1e-16, s, x).tau,
                                                                               rel=1e-15)


def test_probe_covering_point_mass_rejected():
    s = SuperpositionState.displaced(Body.point(1.0), [(0, 0, 0), (1, 0, 0)])
    with pytest.raises(SingularityError):
        tau_density(ProbeDensity.slab(1.0, (3, 3, 3)), s)


def test_nonconvergence_reported():
    s = worked_example()
    probe = ProbeDensity.slab(2e3, (2e-5, 1e-5, 4e-6), center=(3e-5, 0, 0))
    with pytest.raises(NonConvergenceError):
        tau_density(probe, s, method="monte_carlo", n_samples=64)


def test_density_translation_invariance():
    s = worked_example()
    probe = ProbeDensity.slab(2e3, (2e-5, 1e-5, 4e-6), center=(3e-5, 1e-6, 0))
    shift = np.array([0.3, -0.2, 0.7])
    a = tau_density(probe, s).tau
    b = tau_density(probe.translated(shift), s.translated(shift)).tau
    assert b == pytest.approx(a, rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_mc_agrees_with_adaptive(seed):
    rng = np.random.default_rng(seed)
    s = SuperpositionState.displaced(Body.ball(1e-15, 3e-7), [(0, 0, 0), tuple(rng.normal(size=3) * 1e-6)])
    shape = ["slab", "ball", "cylinder"][seed % 3]
    c = tuple(rng.normal(size=3) * 3e-6 + np.array([3e-5, 0, 0]))
    probe = {"slab": ProbeDensity.slab(2e3, tuple(rng.uniform(2e-6, 2e-5, 3)), center=c, axis=rng.normal(size=3)),
             "ball": ProbeDensity.ball(2e3, 8e-6, center=c),
             "cylinder": ProbeDensity.cylinder(2e3, 5e-6, 1.5e-5, center=c, axis=rng.normal(size=3))}[shape]
    a = tau_density(probe, s)
    m = tau_density(probe, s, method="monte_carlo", n_samples=1_000_000, seed=seed)
    sigma = np.hypot(a.quadrature_error * a.tau, m.quadrature_error * m.tau)
    assert abs(a.tau - m.tau) <= 3 * sigma


def test_mc_deterministic():
    s = worked_example()
    probe = ProbeDensity.ball(2e3, 8e-6, center=(3e-5, 0, 0))
    r1 = tau_density(probe, s, method="monte_carlo", n_samples=400_000, seed=7)
    r2 = tau_density(probe, s, method="monte_carlo", n_samples=400_000, seed=7)
    r3 = tau_density(probe, s, method="monte_carlo", n_samples=400_000, seed=7, stream=1)
    assert r1.tau == r2.tau
    assert r1.tau != r3.tau


def test_norm_decay_properties():
    rng = np.random.default_rng(3)
    s = random_state(rng, 4)
    x = np.array([3e-5, 1e-5, 0])
    assert norm_decay(s, 1e-16, x, 0.0) == 1.0
    t = rng.uniform(0, 1e6, 10_000)
    assert np.all(norm_decay(s, 1e-16, x, t) <= 1.0)


def test_norm_decay_two_branch_zero_at_tau():
    s = worked_example()
    x = (-1e-5, 0, 0)
    tau = tau_two_branch(1e-16, s, x).tau
    d = abs(delta_phi(s, 0, 1, x))
    t = np.linspace(0, 2 * tau, 17)
    assert np.allclose(norm_decay(s, 1e-16, x, t), np.abs(np.cos(1e-16 * d * t / (2 * HBAR))), atol=1e-12, rtol=0)
    assert norm_decay(s, 1e-16, x, tau) < 1e-8


def test_norm_decay_double_sum():
    rng = np.random.default_rng(11)
    s = random_state(rng, 4)
    x = np.array([2e-5, -1e-5, 1e-5])
    phi, w = s.potentials(x), s.weights
    for t in rng.uniform(0, 1e5, 10):
        direct = np.sqrt(sum(w[i] * w[j] * np.cos(1e-16 * (phi[i] - phi[j]) * t / HBAR)
                             for i in range(4) for j in range(4)))
        assert norm_decay(s, 1e-16, x, t) == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_curvature_matches_multibranch(seed):
    rng = np.random.default_rng(100 + seed)
    s = random_state(rng, int(rng.integers(2, 7)))
    x = rng.normal(size=3) * 1e-5 + 3e-5
    tau = tau_multibranch(s, 1e-16, x).tau
    assert curvature_tau(s, 1e-16, x, tau) == pytest.approx(tau, rel=1e-4)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_multibranch_reduces_to_two_branch(seed):
    rng = np.random.default_rng(seed)
    s = SuperpositionState.displaced(Body.ball(1e-14, 1e-7), rng.normal(size=(2, 3)) * 1e-6)
    x = rng.normal(size=3) * 1e-5 + 3e-5
    assert tau_multibranch(s, 1e-16, x).tau == pytest.approx(tau_two_branch(1e-16, s, x).tau, rel=1e-6)


def test_density_multibranch_two_branch_and_point():
    s = worked_example()
    probe = ProbeDensity.slab(2e3, (2e-5, 1e-5, 4e-6), center=(3e-5, 0, 0))
    assert tau_density_multibranch(probe, s).tau == pytest.approx(tau_density(probe, s).tau, rel=1e-5)
    rng = np.random.default_rng(5)
    s4 = random_state(rng, 4)
    x = (3e-5, 0, 0)
    assert tau_density_multibranch(ProbeDensity.point(1e-16, x), s4).tau == pytest.approx(
        tau_multibranch(s4, 1e-16, x).tau, rel=1e-12)
    cfg = MassConfiguration.of(Body.ball(1.0, 1.0))
    assert tau_density_multibranch(probe, SuperpositionState.equal([cfg])).tau is INFINITE


def _slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def test_cube_scaling_exponents():
    M, m, L = 1e-12, 1e-15, 1e-6
    a = np.geomspace(10 * L, 100 * L, 6)
    direction = np.array([1.0, 0.4, 0.2]) / np.linalg.norm([1.0, 0.4, 0.2])
    s = SuperpositionState.cube_grid(M, L, 4)
    tau_a = [tau_multibranch(s, m, ai * direction).tau for ai in a]
    assert _slope(a, tau_a) == pytest.approx(2.0, abs=0.1)
    Ls = np.geomspace(L / 3, 3 * L, 6)
    tau_L = [tau_multibranch(SuperpositionState.cube_grid(M, Li, 4), m, 20 * L * direction).tau for Li in Ls]
    assert _slope(Ls, tau_L) == pytest.approx(-1.0, abs=0.1)


def test_min_pointset():
    s = worked_example()
    p1 = (1e-16, (-1e-5, 0, 0))
    assert tau_min_pointset([p1], s).tau == tau_two_branch(*p1[:1], s, p1[1]).tau
    p2 = (1e-15, (-3e-5, 2e-5, 0))
    both = tau_min_pointset([p1, p2], s)
    assert both.tau <= tau_min_pointset([p1], s).tau
    assert both.tau == min(tau_two_branch(m, s, x).tau for m, x in (p1, p2))


def test_entangled_vs_product():
    d, m = 3e-13, 1e-16
    te, tp = tau_entangled(m, d, 0, d, 0), tau_product(m, d, 0, d, 0)
    assert te == pytest.approx(np.pi * HBAR / (2 * m * d))
    assert tp / te == pytest.approx(np.sqrt(2), rel=1e-14)
    assert tau_entangled(m, d, 0, -d, 0) is INFINITE
    assert np.isfinite(tau_product(m, d, 0, -d, 0))
    single = np.pi * HBAR / (m * d)
    assert tau_entangled(m, d, 0, 1.0, 1.0) == pytest.approx(single)
    assert tau_product(m, d, 0, 1.0, 1.0) == pytest.approx(single)


def test_self_instability():
    M, R, d = 1e-14, 1e-6, 5e-6
    s = SuperpositionState.displaced(Body.ball(M, R), [(0, 0, 0), (d, 0, 0)])
    r = tau_self(M, s)
    assert r.tau == pytest.approx(np.pi * HBAR / (M * G * M * abs(1.5 / R - 1 / d)), rel=1e-12)
    assert r.detail["delta_phi_x1"] == pytest.approx(r.detail["delta_phi_x2"], rel=1e-12)
    with pytest.raises(SingularityError):
        tau_self(M, SuperpositionState.displaced(Body.point(M), [(0, 0, 0), (d, 0, 0)]))
    s0 = SuperpositionState.displaced(Body.ball(0.0, R), [(0, 0, 0), (d, 0, 0)])
    assert tau_self(0.0, s0).tau is INFINITE


def test_moving_probe():
    m, dphi = 1e-16, 3e-22
    const = tau_moving_probe(m, lambda t: dphi, 1e6)
    assert const == pytest.approx(np.pi * HBAR / (m * dphi), rel=1e-10)
    beta = 1e-20
    exact = np.sqrt(2 * np.pi * HBAR / (m * beta))
    assert tau_moving_probe(m, lambda t: beta * t, 10 * exact) == pytest.approx(exact, rel=1e-8)
    bump = lambda t: 1e-22 if t < 1.0 else 0.0
    assert tau_moving_probe(m, bump, 100.0) is NO_SOLUTION
