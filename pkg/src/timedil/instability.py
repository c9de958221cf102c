"""Instability timescales of a probe exposed to superposed potentials.

Every timescale has the form ``pi * hbar / D`` where ``D`` (J) is a probe
mass times a measure of the branch spread of the potential. When ``D``
vanishes the result is the :data:`~timedil.errors.INFINITE` sentinel.

The probe energy is its rest energy m c^2, so the phase rate of branch n is
m Phi_n / hbar; only the weights |c_n|^2 enter.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .constants import CODATA2018
from .errors import (
    INFINITE,
    NO_SOLUTION,
    GeometryError,
    NonConvergenceError,
    SingularityError,
    Unbounded,
)
from .potentials import Body, MassConfiguration, SuperpositionState, _vec, potential_at
from .quadrature import DEFAULT_RTOL, adaptive_cubature, stratified_mc

HBAR = CODATA2018.hbar
ACCEPT_REL_ERROR = 1e-3

PROBE_SHAPES = ("point", "slab", "cylinder", "ball")


def _rotation_from_axis(axis) -> np.ndarray:
    """Orthonormal frame whose third column is ``axis``."""
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return np.column_stack([e1, e2, a])


@dataclass(frozen=True)
class ProbeDensity:
    """Uniform-density probe (or a point probe).

    ``slab``: box with ``edges`` (x, y, z) in a frame whose z axis is
    ``axis``; ``cylinder``: ``radius`` and ``length`` along ``axis``;
    ``ball``: ``radius``. ``density`` in kg/m^3; point probes use ``mass``.
    """

    shape: str
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mass: float | None = None
    density: float | None = None
    edges: tuple[float, float, float] | None = None
    radius: float | None = None
    length: float | None = None
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    name: str = ""

    def __post_init__(self):
        if self.shape not in PROBE_SHAPES:
            raise GeometryError(f"unknown probe shape {self.shape!r}")
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "axis", _vec(np.asarray(self.axis) / np.linalg.norm(self.axis)))
        if self.shape == "point":
            if self.mass is None or not (0 < self.mass < np.inf):
                raise GeometryError("point probe needs a finite positive mass")
            return
        if self.density is None or not (0 < self.density < np.inf):
            raise GeometryError("extended probe needs a finite positive density")
        if self.shape == "slab":
            if self.edges is None or len(self.edges) != 3 or min(self.edges) <= 0:
                raise GeometryError("slab needs three positive edges")
            object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        elif self.radius is None or not self.radius > 0:
            raise GeometryError(f"{self.shape} needs radius > 0")
        if self.shape == "cylinder" and (self.length is None or not self.length > 0):
            raise GeometryError("cylinder needs length > 0")

    @classmethod
    def point(cls, mass, position=(0, 0, 0), name=""):
        return cls("point", position, mass=float(mass), name=name)

    @classmethod
    def slab(cls, density, edges, center=(0, 0, 0), axis=(0, 0, 1), name=""):
        return cls("slab", center, density=float(density), edges=tuple(edges), axis=axis, name=name)

    @classmethod
    def cylinder(cls, density, radius, length, center=(0, 0, 0), axis=(0, 0, 1), name=""):
        return cls("cylinder", center, density=float(density), radius=float(radius),
                   length=float(length), axis=axis, name=name)

    @classmethod
    def ball(cls, density, radius, center=(0, 0, 0), name=""):
        return cls("ball", center, density=float(density), radius=float(radius), name=name)

    @property
    def frame(self) -> np.ndarray:
        return _rotation_from_axis(self.axis)

    @property
    def volume(self) -> float:
        if self.shape == "point":
            return 0.0
        if self.shape == "slab":
            return float(np.prod(self.edges))
        if self.shape == "ball":
            return 4.0 / 3.0 * np.pi * self.radius ** 3
        return np.pi * self.radius ** 2 * self.length

    @property
    def total_mass(self) -> float:
        return self.mass if self.shape == "point" else self.density * self.volume

    def translated(self, shift) -> "ProbeDensity":
        from dataclasses import replace
        return replace(self, center=tuple(np.add(self.center, _vec(shift))))

    def contains(self, x) -> np.ndarray:
        d = np.asarray(x, float) - np.asarray(self.center)
        if self.shape == "point":
            return np.all(d == 0.0, axis=-1)
        local = d @ self.frame
        if self.shape == "slab":
            return np.all(np.abs(local) <= 0.5 * np.asarray(self.edges), axis=-1)
        if self.shape == "ball":
            return np.linalg.norm(d, axis=-1) <= self.radius
        return (np.abs(local[..., 2]) <= 0.5 * self.length) & (
            np.hypot(local[..., 0], local[..., 1]) <= self.radius)

    # parametric description used by the integrators
    def _domain(self):
        """(lo, hi, scales, map) with map(u) -> (x, jacobian)."""
        c = np.asarray(self.center)
        R = self.frame
        if self.shape == "slab":
            h = 0.5 * np.asarray(self.edges)
            return -h, h, np.ones(3), lambda u: (c + u @ R.T, np.ones(len(u)))
        if self.shape == "ball":
            a = self.radius

            def ball_map(u):
                r, mu, phi = u[:, 0], u[:, 1], u[:, 2]
                st = np.sqrt(np.clip(1 - mu * mu, 0, None))
                x = np.stack([r * st * np.cos(phi), r * st * np.sin(phi), r * mu], axis=-1)
                return c + x, r * r

            return np.array([0.0, -1.0, 0.0]), np.array([a, 1.0, 2 * np.pi]), np.array([1.0, a, a]), ball_map
        a, half = self.radius, 0.5 * self.length

        def cyl_map(u):
            s, phi, z = u[:, 0], u[:, 1], u[:, 2]
            local = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
            return c + local @ R.T, s

        return np.array([0.0, 0.0, -half]), np.array([a, 2 * np.pi, half]), np.array([1.0, a, 1.0]), cyl_map

    def integrate(self, g: Callable[[np.ndarray], np.ndarray], rtol: float = DEFAULT_RTOL,
                  method: str = "adaptive", n_samples: int = 1_000_000, seed: int = 0,
                  stream: int = 0, features: Sequence = (), feature_scale: float | None = None):
        """Integral of density * g over the probe volume.

        Returns ``(value, relative_error)``. Point probes are exact.
        """
        if self.shape == "point":
            return float(self.mass * np.asarray(g(np.asarray(self.center)[None, :]))[0]), 0.0
        lo, hi, scales, fmap = self._domain()

        def f(u):
            x, jac = fmap(u)
            return self.density * g(x) * jac

        if method == "adaptive":
            fp = None
            if self.shape == "slab" and len(features):
                fp = (np.asarray(features, float) - np.asarray(self.center)) @ self.frame
            res = adaptive_cubature(f, lo, hi, rtol=rtol, scales=scales,
                                    feature_points=fp, feature_scale=feature_scale)
        elif method == "monte_carlo":
            span = hi - lo
            vol = float(np.prod(span))
            res = stratified_mc(lambda u: vol * f(lo + u * span), 3, n_samples, seed=seed,
                                stream=stream, strata_per_dim=4)
        else:
            raise ValueError(f"unknown integration method {method!r}")
        return res.value, (res.rel_error if res.value else 0.0)


@dataclass(frozen=True)
class InstabilityResult:
    tau: float | Unbounded
    denominator: float  # J, the pi*hbar/tau denominator
    formula: str
    quadrature_error: float = 0.0
    method: str = "exact"
    digest: str = ""
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def is_infinite(self) -> bool:
        return isinstance(self.tau, Unbounded)

    def to_record(self) -> dict:
        return {
            "formula": self.formula,
            "tau_s": str(self.tau) if self.is_infinite else float(self.tau),
            "denominator_J": float(self.denominator),
            "rel_error": float(self.quadrature_error),
            "method": self.method,
            "inputs_digest": self.digest,
        }


def _digest(*parts) -> str:
    return hashlib.sha256(repr(parts).encode()).hexdigest()[:12]


def _result(denominator, formula, err=0.0, method="exact", inputs=(), **detail) -> InstabilityResult:
    if err > ACCEPT_REL_ERROR:
        raise NonConvergenceError(f"{formula}: relative error {err:.3g} exceeds {ACCEPT_REL_ERROR}")
    tau = INFINITE if denominator == 0 else np.pi * HBAR / denominator
    if not isinstance(tau, Unbounded) and not np.isfinite(tau):
        tau = INFINITE
    return InstabilityResult(tau if isinstance(tau, Unbounded) else float(tau), float(denominator),
                             formula, float(err), method, _digest(formula, *inputs), detail)


def _varying(state: SuperpositionState) -> SuperpositionState:
    """Drop bodies common to every branch; they cancel in all differences."""
    common = set(state.configs[0].bodies)
    for c in state.configs[1:]:
        common &= set(c.bodies)
    if not common:
        return state
    branches = []
    for w, c in state.branches:
        rest = tuple(b for b in c.bodies if b not in common)
        # keep an explicit zero-mass placeholder so configurations stay non-empty
        branches.append((w, MassConfiguration(rest or (Body.point(0.0),))))
    return SuperpositionState(tuple(branches))


def _check_probe_clear(rho: ProbeDensity, state: SuperpositionState):
    for b in state.point_masses():
        if rho.contains(np.asarray(b.center)):
            raise SingularityError(f"probe volume contains point mass {b.label()}")


def branch_spread(weights, phis) -> np.ndarray:
    """sum_{n,m} w_n w_m (Phi_n - Phi_m)^2 along axis 0, via the weighted
    variance (two-pass, no cancellation)."""
    w = np.asarray(weights, float).reshape((-1,) + (1,) * (np.ndim(phis) - 1))
    total = w.sum(axis=0)
    mean = (w * phis).sum(axis=0) / total
    return 2.0 * total * (w * (phis - mean) ** 2).sum(axis=0)


def tau_two_branch(m_p: float, state: SuperpositionState, x_p) -> InstabilityResult:
    """pi hbar / (m_p |Phi_1(x_p) - Phi_2(x_p)|)."""
    if len(state) != 2:
        raise ValueError("tau_two_branch needs exactly two branches")
    s = _varying(state)
    x = np.asarray(_vec(x_p))
    d = abs(potential_at(s.configs[0], x) - potential_at(s.configs[1], x))
    return _result(m_p * d, "two_branch", inputs=(m_p, state, _vec(x_p)), delta_phi=d)


def _features(state: SuperpositionState):
    centers = np.array([b.center for c in state.configs for b in c.bodies if b.mass > 0])
    if len(centers) < 2:
        return centers, None
    diffs = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    nz = diffs[diffs > 0]
    return centers, (0.25 * nz.min() if nz.size else None)


def tau_density(rho: ProbeDensity, state: SuperpositionState, rtol: float = DEFAULT_RTOL,
                method: str = "adaptive", n_samples: int = 1_000_000, seed: int = 0,
                stream: int = 0) -> InstabilityResult:
    """pi hbar / integral rho_p |Phi_1 - Phi_2| d^3x."""
    if len(state) != 2:
        raise ValueError("tau_density needs exactly two branches")
    _check_probe_clear(rho, state)
    s = _varying(state)
    c1, c2 = s.configs

    def g(x):
        return np.abs(np.asarray(potential_at(c1, x)) - np.asarray(potential_at(c2, x)))

    feats, scale = _features(s)
    val, err = rho.integrate(g, rtol=rtol, method=method, n_samples=n_samples, seed=seed,
                             stream=stream, features=feats, feature_scale=scale)
    return _result(val, "density", err, "exact" if rho.shape == "point" else method,
                   inputs=(rho, state, rtol, method, n_samples, seed, stream))


def norm_decay(state: SuperpositionState, m_p: float, x_p, t) -> np.ndarray | float:
    """sqrt(sum_{n,m} w_n w_m cos(m_p (Phi_n - Phi_m) t / hbar)).

    Evaluated as (sum w)^2 - 2 sum w_n w_m sin^2(x_nm / 2) so the small-t
    deficit is not lost to cancellation.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    w = state.weights
    phi = state.potentials(np.asarray(_vec(x_p)))
    phi = phi - np.dot(w, phi)
    dphi = phi[:, None] - phi[None, :]
    ww = w[:, None] * w[None, :]
    arg = 0.5 * m_p * dphi[..., None] * t.reshape(-1)[None, None, :] / HBAR
    sq = w.sum() ** 2 - 2.0 * np.einsum("nm,nmt->t", ww, np.sin(arg) ** 2)
    out = np.sqrt(np.clip(sq, 0.0, None)).reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def tau_multibranch(state: SuperpositionState, m_p: float, x_p) -> InstabilityResult:
    """pi hbar / (m_p sqrt(2 sum_{n,m} w_n w_m (Phi_n - Phi_m)^2))."""
    s = _varying(state)
    x = np.asarray(_vec(x_p))
    S = float(branch_spread(s.weights, s.potentials(x)))
    return _result(m_p * np.sqrt(2.0 * S), "multibranch", inputs=(state, m_p, _vec(x_p)), spread=S)


def tau_density_multibranch(rho: ProbeDensity, state: SuperpositionState,
                            rtol: float = DEFAULT_RTOL, method: str = "adaptive",
                            n_samples: int = 1_000_000, seed: int = 0,
                            stream: int = 0) -> InstabilityResult:
    """pi hbar / integral rho_p sqrt(2 sum_{n,m} w_n w_m (Phi_n - Phi_m)^2) d^3x."""
    _check_probe_clear(rho, state)
    s = _varying(state)
    w = s.weights

    def g(x):
        return np.sqrt(2.0 * branch_spread(w, s.potentials(x)))

    feats, scale = _features(s)
    val, err = rho.integrate(g, rtol=rtol, method=method, n_samples=n_samples, seed=seed,
                             stream=stream, features=feats, feature_scale=scale)
    return _result(val, "density_multibranch", err, "exact" if rho.shape == "point" else method,
                   inputs=(rho, state, rtol, method, n_samples, seed, stream))


def tau_min_pointset(particles: Sequence[tuple[float, Sequence[float]]],
                     state: SuperpositionState) -> InstabilityResult:
    """Smallest two-branch timescale over a set of point probes (m_i, x_i)."""
    if not particles:
        raise ValueError("need at least one particle")
    results = [tau_two_branch(m, state, x) for m, x in particles]
    best = min(range(len(results)), key=lambda i: results[i].tau)
    r = results[best]
    return InstabilityResult(r.tau, r.denominator, "min_pointset", 0.0, "exact",
                             _digest("min_pointset", tuple(particles), state), {"argmin": best})


def tau_entangled(m_p, phi_a1, phi_a2, phi_b1, phi_b2):
    """Entangled pair (a1 b1 + a2 b2): pi hbar / (m_p |da + db|)."""
    d = abs((phi_a1 - phi_a2) + (phi_b1 - phi_b2))
    return INFINITE if d == 0 else np.pi * HBAR / (m_p * d)


def tau_product(m_p, phi_a1, phi_a2, phi_b1, phi_b2):
    """Product state (a1 + a2)(b1 + b2): pi hbar / (m_p sqrt(da^2 + db^2))."""
    d = np.hypot(phi_a1 - phi_a2, phi_b1 - phi_b2)
    return INFINITE if d == 0 else np.pi * HBAR / (m_p * d)


def _moving_body(state: SuperpositionState) -> tuple[Body, Body]:
    if len(state) != 2:
        raise ValueError("self-instability needs two branches")
    c1, c2 = state.configs
    only1 = [b for b in c1.bodies if b not in c2.bodies]
    only2 = [b for b in c2.bodies if b not in c1.bodies]
    if len(only1) != 1 or len(only2) != 1:
        raise ValueError("branches must differ by exactly one displaced body")
    b1, b2 = only1[0], only2[0]
    if (b1.shape, b1.mass, b1.radius, b1.edges, b1.length) != (b2.shape, b2.mass, b2.radius, b2.edges, b2.length):
        raise ValueError("the displaced body must be the same body in both branches")
    return b1, b2


def tau_self(M: float, state: SuperpositionState) -> InstabilityResult:
    """Body of mass ``M`` as its own probe: pi hbar / (M |Phi_1(x_1) - Phi_2(x_1)|)."""
    b1, b2 = _moving_body(state)
    if b1.shape == "point":
        raise SingularityError("a point mass has a divergent self-potential")
    x1, x2 = np.asarray(b1.center), np.asarray(b2.center)
    s = _varying(state)
    c1, c2 = s.configs
    d1 = abs(potential_at(c1, x1) - potential_at(c2, x1))
    d2 = abs(potential_at(c1, x2) - potential_at(c2, x2))
    return _result(M * d1, "self", inputs=(M, state), delta_phi_x1=d1, delta_phi_x2=d2)


def tau_moving_probe(m_p: float, delta_phi_of_t: Callable[[float], float], t_max: float,
                     rtol: float = 1e-12) -> float | Unbounded:
    """Root of m_p * int_0^tau |dPhi(t)| dt = pi hbar on [0, t_max].

    The left side is non-decreasing, so the root is unique when it exists.
    Returns :data:`NO_SOLUTION` when the integral up to ``t_max`` is short.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    target = np.pi * HBAR / m_p

    def accumulated(tau):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(lambda t: abs(delta_phi_of_t(t)), 0.0, tau,
                                        epsabs=0.0, epsrel=rtol, limit=500)
            except integrate.IntegrationWarning as exc:
                raise NonConvergenceError(f"moving-probe integral failed: {exc}") from exc
        if not np.isfinite(val):
            raise NonConvergenceError("moving-probe integral is not finite")
        return val

    if accumulated(t_max) < target:
        return NO_SOLUTION
    return float(optimize.brentq(lambda tau: accumulated(tau) - target, 0.0, t_max,
                                 xtol=1e-15 * t_max, rtol=4 * np.finfo(float).eps, maxiter=500))
