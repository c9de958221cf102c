"""Oracle checks: each compares a computed quantity with an independent route.

Every check returns a :class:`Check` with the measured discrepancy and the
tolerance it is held to. Output is deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import interferometer as itf
from . import lightclock as lc
from .constants import CODATA2018
from .instability import (
    ProbeDensity,
    norm_decay,
    tau_density,
    tau_entangled,
    tau_moving_probe,
    tau_multibranch,
    tau_product,
    tau_self,
    tau_two_branch,
)
from .potentials import Body, MassConfiguration, SuperpositionState, delta_phi, line_integral_phi, potential_at

G, HBAR = CODATA2018.G, CODATA2018.hbar


@dataclass(frozen=True)
class Check:
    name: str
    discrepancy: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.discrepancy <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.note}" if self.note else ""
        return f"{status}  {self.name}  discrepancy={self.discrepancy:.6g}  tol={self.tolerance:.6g}{extra}"


def _rel(a, b) -> float:
    return float(abs(a - b) / abs(b))


def check_box_far_field(seed):
    box = Body.box(1.0, 1.0)
    x = np.array([100.0, 0.0, 0.0])
    return Check("box_far_field", _rel(float(np.squeeze(box.potential(x))), -G / 100.0), 1e-4)


def check_line_integral(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        M, L = 10 ** rng.uniform(-3, 3), 10 ** rng.uniform(-1, 1)
        a = L * 10 ** rng.uniform(-6, np.log10(0.45))
        ball = Body.ball(M, a, center=(0.5 * L, 0, 0))
        f = lambda s: float(ball.potential(np.array([s, 0.0, 0.0])))
        pts = [0.5 * L - a, 0.5 * L, 0.5 * L + a]
        q, _ = integrate.quad(f, 0.0, L, points=pts, epsabs=0.0, epsrel=1e-12, limit=200)
        worst = max(worst, _rel(line_integral_phi(Body.ball(M, a), L), q))
    return Check("line_integral_vs_quadrature", worst, 1e-8)


def check_delta_phi(seed):
    s = SuperpositionState.displaced(Body.ball(1e-15, 5e-7), [(0, 0, 0), (1e-6, 0, 0)])
    x = np.array([-1e-5, 0.0, 0.0])
    direct = G * 1e-15 * (1 / 1e-5 - 1 / 1.1e-5)
    return Check("delta_phi_direct", _rel(delta_phi(s, 1, 0, x), direct), 1e-12)


def check_traversal_excess(seed):
    spec = lc.LightClockSpec(L=1.0, M=1e-15, radius_a=0.95e-6, radius_b=1e-6)
    return Check("traversal_excess_vs_potential",
                 _rel(lc.traversal_excess(spec, spec.radius_a), lc.excess_from_potential(spec, spec.radius_a)),
                 1e-12)


def check_pulse_train(seed):
    spec = lc.LightClockSpec(L=1.0, M=0.0, radius_a=1e-3, radius_b=2e-3, transmissivity_T=0.2)
    n = 40
    flat = lc.pulse_train_flat(spec, n)
    sup = lc.pulse_train_superposed_exact(spec, n).merged()
    rec = lc.iterate_cavity(spec.transmissivity_T, spec.reflectivity_R, 2 * flat.dtbar, n)
    worst = 0.0
    for (d1, a1), o, (d3, a3) in zip(sup, flat, rec):
        worst = max(worst, abs(a1 - o.amplitudes[0]) / abs(o.amplitudes[0]),
                    abs(a3 - o.amplitudes[0]) / abs(o.amplitudes[0]),
                    abs(d1 - o.delays[0]) / o.delays[0], abs(d3 - o.delays[0]) / o.delays[0])
    return Check("pulse_train_flat_limit_and_recursion", worst, 1e-12)


def check_binomial_continuum(seed):
    n = 50
    k = np.arange(2 * n + 1)
    core = np.abs(k - n) <= 2 * np.sqrt(n)
    b, c = lc.binomial_weights(n), lc.continuum_weights(n)
    return Check("binomial_vs_continuum_n50", float(np.max(np.abs(c[core] / b[core] - 1))), 0.05)


def _random_state(rng, n_branches):
    pos = rng.normal(size=(n_branches, 3)) * 1e-6
    w = rng.dirichlet(np.ones(n_branches))
    w = w / w.sum()
    return SuperpositionState(tuple(
        (float(wi), MassConfiguration.of(Body.ball(1e-14, 2e-7, p))) for wi, p in zip(w, pos)))


def check_norm_decay(seed):
    rng = np.random.default_rng(seed)
    worst_two, worst_sum = 0.0, 0.0
    for _ in range(5):
        s = SuperpositionState.displaced(Body.ball(1e-14, 2e-7), rng.normal(size=(2, 3)) * 1e-6)
        x = rng.normal(size=3) * 1e-5 + 3e-5
        d = abs(delta_phi(s, 0, 1, x))
        t = rng.uniform(0, 1e4)
        worst_two = max(worst_two, abs(norm_decay(s, 1e-16, x, t) - abs(np.cos(1e-16 * d * t / (2 * HBAR)))))
        s4 = _random_state(rng, 4)
        phi, w = s4.potentials(x), s4.weights
        direct = np.sqrt(sum(w[i] * w[j] * np.cos(1e-16 * (phi[i] - phi[j]) * t / HBAR)
                             for i in range(4) for j in range(4)))
        worst_sum = max(worst_sum, abs(norm_decay(s4, 1e-16, x, t) - direct))
    return [Check("norm_decay_two_branch_closed_form", worst_two, 1e-12),
            Check("norm_decay_double_sum", worst_sum, 1e-12)]


def curvature_tau(state, m_p, x_p, tau_guess):
    """tau from the t = 0 curvature of the norm: N ~ 1 - (pi t / (2 tau))^2 / 2."""
    h = tau_guess / 1e6
    n0, n1, n2 = norm_decay(state, m_p, x_p, np.array([0.0, h, 2 * h]))
    # N is even in t, so use the symmetric stencil N(-h) = N(h)
    curv = 2.0 * (n1 - n0) / h ** 2
    return np.pi / (2.0 * np.sqrt(-curv))


def check_curvature(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        s = _random_state(rng, int(rng.integers(2, 6)))
        x = rng.normal(size=3) * 1e-5 + 3e-5
        t = tau_multibranch(s, 1e-16, x).tau
        worst = max(worst, _rel(curvature_tau(s, 1e-16, x, t), t))
    return Check("norm_curvature_vs_multibranch", worst, 1e-4)


def check_reduction(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        s = SuperpositionState.displaced(Body.ball(10 ** rng.uniform(-16, -12), 1e-7),
                                         rng.normal(size=(2, 3)) * 1e-6)
        x = rng.normal(size=3) * 1e-5 + 3e-5
        m = 10 ** rng.uniform(-18, -14)
        worst = max(worst, _rel(tau_multibranch(s, m, x).tau, tau_two_branch(m, s, x).tau))
    return Check("multibranch_two_equal_branches", worst, 1e-6)


def check_point_density(seed):
    s = SuperpositionState.displaced(Body.ball(1e-15, 5e-7), [(0, 0, 0), (1e-6, 0, 0)])
    x = np.array([-1e-5, 0.0, 0.0])
    m = 1e-16
    r = 1e-3 * 1e-5
    rho = m / (4 / 3 * np.pi * r ** 3)
    ball = tau_density(ProbeDensity.ball(rho, r, center=x), s).tau
    return Check("density_point_limit", _rel(ball, tau_two_branch(m, s, x).tau), 1e-3)


def check_mc_vs_adaptive(seed):
    s = SuperpositionState.displaced(Body.ball(1e-15, 5e-7), [(0, 0, 0), (1e-6, 0, 0)])
    probe = ProbeDensity.slab(2e3, (2e-5, 1e-5, 4e-6), center=(3e-5, 0, 0))
    a = tau_density(probe, s)
    m = tau_density(probe, s, method="monte_carlo", n_samples=200_000, seed=seed)
    sigma = np.hypot(a.quadrature_error * a.tau, m.quadrature_error * m.tau)
    return Check("density_mc_vs_adaptive_sigmas", abs(a.tau - m.tau) / sigma, 3.0)


def check_moving_probe(seed):
    m, beta = 1e-16, 1e-20
    exact = np.sqrt(2 * np.pi * HBAR / (m * beta))
    got = tau_moving_probe(m, lambda t: beta * t, 10 * exact)
    return Check("moving_probe_linear_ramp", _rel(got, exact), 1e-8)


def check_self(seed):
    M, R, d = 1e-14, 1e-6, 5e-6
    s = SuperpositionState.displaced(Body.ball(M, R), [(0, 0, 0), (d, 0, 0)])
    r = tau_self(M, s)
    exact = np.pi * HBAR / (M * G * M * abs(1.5 / R - 1 / d))
    sym = _rel(r.detail["delta_phi_x2"], r.detail["delta_phi_x1"])
    return [Check("self_instability_closed_form", _rel(r.tau, exact), 1e-12),
            Check("self_instability_mirror_symmetry", sym, 1e-12)]


def check_entanglement(seed):
    d = 1e-12
    ratio = tau_product(1e-16, d, 0, d, 0) / tau_entangled(1e-16, d, 0, d, 0)
    return Check("entangled_vs_product_ratio", abs(ratio - np.sqrt(2)), 1e-12)


def check_gaussian_moments(seed):
    worst = 0.0
    for gain in (1.0, 2.0, 10.0, 1e4):
        amp = itf.AmplifierSpec(gain, theta=0.3)
        for p in (0, 2, 4):
            worst = max(worst, _rel(itf.gaussian_moment(p, amp), itf.gaussian_moment_exact(p, gain)))
    return Check("gaussian_moments_vs_closed_form", worst, 1e-6)


def check_overlap_norm(seed):
    amp = itf.AmplifierSpec(4.0, theta=0.5)

    def dens(x):
        aL, aR = x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]
        return np.abs(itf.overlap_amplitude(aL, aR, amp, normalized=True)) ** 2 / np.pi ** 2

    from .quadrature import adaptive_cubature
    res = adaptive_cubature(dens, [-12.0] * 4, [12.0] * 4, rtol=1e-7, order=7, initial_splits=2)
    return Check("overlap_normalized_unit_norm", abs(res.value - 1.0), 1e-6)


def check_variance_mc(seed):
    worst = 0.0
    for gain in (10.0, 100.0, 1000.0):
        r = itf.variance_phi(itf.AmplifierSpec(gain, theta=0.7), n_samples=1_000_000, seed=seed)
        worst = max(worst, abs(r.monte_carlo - r.exact) / r.mc_error)
    return Check("variance_mc_vs_exact_sigmas", worst, 3.0)


def check_flux_network(seed):
    spec = itf.InterferometerSpec(itf.AmplifierSpec(50.0, theta=0.4, bandwidth_Ba=2 * np.pi * 1e8),
                                  photon_bandwidth_Bph=2 * np.pi * 1e7, phase_difference=1.1)
    f1 = lambda t: np.exp(-np.asarray(t) ** 2)
    t = np.linspace(-2, 2, 9)
    f6, _ = itf.port_fluxes(spec, f1, t)
    return Check("f6_formula_vs_mode_network", float(np.max(np.abs(f6 / itf.output_flux_f6(spec, f1, t) - 1))), 1e-12)


def check_squeezer_inverse(seed):
    a = itf.AmplifierSpec(30.0, theta=0.8)
    b = itf.AmplifierSpec(30.0, theta=0.8 + np.pi)
    prod = itf.squeezer_matrix(b) @ itf.squeezer_matrix(a)
    return Check("squeezer_pair_inverse", float(np.max(np.abs(prod - np.eye(2)))), 1e-10)


CHECKS: tuple[Callable, ...] = (
    check_box_far_field,
    check_line_integral,
    check_delta_phi,
    check_traversal_excess,
    check_pulse_train,
    check_binomial_continuum,
    check_norm_decay,
    check_curvature,
    check_reduction,
    check_point_density,
    check_mc_vs_adaptive,
    check_moving_probe,
    check_self,
    check_entanglement,
    check_gaussian_moments,
    check_overlap_norm,
    check_variance_mc,
    check_flux_network,
    check_squeezer_inverse,
)


def run_all(seed: int = 0) -> list[Check]:
    out: list[Check] = []
    for fn in CHECKS:
        r = fn(seed)
        out.extend(r if isinstance(r, list) else [r])
    return out


def report(checks: list[Check]) -> str:
    lines = [c.line() for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} oracle checks passed")
    return "\n".join(lines) + "\n"
