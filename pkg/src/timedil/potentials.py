"""Weak-field Newtonian potentials of rigid bodies and superposed branches.

SI units throughout. A :class:`MassConfiguration` is one classical branch; a
:class:`SuperpositionState` is a weighted list of branches. Only the weights
``|c_n|^2`` are stored because no formula downstream uses branch phases.

Point masses are singular: evaluating at one raises :class:`SingularityError`.
Box and cylinder potentials are computed by quadrature after doing as many
integrals analytically as possible:

* box: the 1/r kernel is integrated over corner-anchored sub-boxes; each
  corner box splits into three pyramids whose radial and one transverse
  integral are elementary, leaving a smooth 1-D Gauss-Legendre integral;
* cylinder: the axial and radial integrals around the projected field point
  are elementary, leaving a 1-D angular integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .constants import CODATA2018
from .errors import GeometryError, SingularityError
from .quadrature import gauss_legendre, gl_until_converged

G = CODATA2018.G

SHAPES = ("point", "ball", "box", "cylinder")


def _vec(x) -> tuple[float, float, float]:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size != 3:
        raise GeometryError(f"expected a 3-vector, got {x!r}")
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Body:
    """A rigid body of uniform density (or a point mass).

    Use the named constructors; ``edges`` is only meaningful for boxes and
    ``radius``/``length``/``axis`` for balls and cylinders.
    """

    shape: str
    mass: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float | None = None
    edges: tuple[float, float, float] | None = None
    length: float | None = None
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    name: str = ""

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise GeometryError(f"unknown shape {self.shape!r}")
        if not (self.mass >= 0 and np.isfinite(self.mass)):
            raise GeometryError(f"mass must be finite and >= 0, got {self.mass!r}")
        object.__setattr__(self, "center", _vec(self.center))
        if self.shape in ("ball", "cylinder"):
            if self.radius is None or not self.radius > 0:
                raise GeometryError(f"{self.shape} needs radius > 0")
        if self.shape == "cylinder":
            if self.length is None or not self.length > 0:
                raise GeometryError("cylinder needs length > 0")
            ax = np.asarray(self.axis, float)
            n = np.linalg.norm(ax)
            if not n > 0:
                raise GeometryError("cylinder axis must be non-zero")
            object.__setattr__(self, "axis", _vec(ax / n))
        if self.shape == "box":
            if self.edges is None or len(self.edges) != 3 or min(self.edges) <= 0:
                raise GeometryError("box needs three positive edges")
            object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))

    @classmethod
    def point(cls, mass, center=(0, 0, 0), name=""):
        return cls("point", float(mass), center, name=name)

    @classmethod
    def ball(cls, mass, radius, center=(0, 0, 0), name=""):
        return cls("ball", float(mass), center, radius=float(radius), name=name)

    @classmethod
    def box(cls, mass, edge=None, center=(0, 0, 0), edges=None, name=""):
        """Axis-aligned box; ``edge`` gives a cube."""
        if edges is None:
            edges = (edge, edge, edge)
        return cls("box", float(mass), center, edges=tuple(edges), name=name)

    @classmethod
    def cylinder(cls, mass, radius, length, center=(0, 0, 0), axis=(0, 0, 1), name=""):
        return cls("cylinder", float(mass), center, radius=float(radius),
                   length=float(length), axis=axis, name=name)

    @property
    def volume(self) -> float:
        if self.shape == "point":
            return 0.0
        if self.shape == "ball":
            return 4.0 / 3.0 * np.pi * self.radius ** 3
        if self.shape == "box":
            return float(np.prod(self.edges))
        return np.pi * self.radius ** 2 * self.length

    @property
    def extent(self) -> float:
        """Radius of a sphere around ``center`` enclosing the body."""
        if self.shape == "point":
            return 0.0
        if self.shape == "ball":
            return self.radius
        if self.shape == "box":
            return 0.5 * float(np.linalg.norm(self.edges))
        return float(np.hypot(self.radius, 0.5 * self.length))

    def moved(self, center) -> "Body":
        return replace(self, center=_vec(center))

    def translated(self, shift) -> "Body":
        return replace(self, center=tuple(np.add(self.center, _vec(shift))))

    def label(self) -> str:
        return self.name or f"{self.shape}@{self.center}"

    def potential(self, x) -> np.ndarray:
        """Potential (J/kg) at points ``x`` of shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        if self.mass == 0.0:
            return np.zeros(x.shape[:-1])
        d = x - np.asarray(self.center)
        if self.shape == "point":
            r = np.linalg.norm(d, axis=-1)
            if np.any(r == 0.0):
                raise SingularityError(f"potential evaluated at point mass {self.label()}")
            return -G * self.mass / r
        if self.shape == "ball":
            return _ball_potential(self.mass, self.radius, np.linalg.norm(d, axis=-1))
        if self.shape == "box":
            rho = self.mass / self.volume
            return -G * rho * _box_inverse_distance(d, np.asarray(self.edges))
        rho = self.mass / self.volume
        return -G * rho * _cylinder_inverse_distance(d, self.radius, self.length, np.asarray(self.axis))

    def contains(self, x) -> np.ndarray:
        """True where ``x`` lies in the closed body (points: coincidence)."""
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.center)
        if self.shape == "point":
            return np.all(d == 0.0, axis=-1)
        if self.shape == "ball":
            return np.linalg.norm(d, axis=-1) <= self.radius
        if self.shape == "box":
            return np.all(np.abs(d) <= 0.5 * np.asarray(self.edges), axis=-1)
        ax = np.asarray(self.axis)
        z = d @ ax
        rho = np.linalg.norm(d - z[..., None] * ax, axis=-1)
        return (np.abs(z) <= 0.5 * self.length) & (rho <= self.radius)


def _ball_potential(mass, a, r):
    r = np.asarray(r, dtype=float)
    inside = r < a
    rs = np.where(inside, a, r)
    out = -G * mass / rs
    interior = -G * mass * (3 * a * a - r * r) / (2 * a ** 3)
    return np.where(inside, interior, out)


# --- box -----------------------------------------------------------------

def _pyramid(p, q, w):
    """Integral of 1/r over the pyramid of box [0,p]x[0,q]x[0,w] where the
    first coordinate dominates, after the radial and q-direction integrals
    are done analytically: (p w / 2) * int_0^1 asinh(q / sqrt(p^2 + w^2 v^2)) dv.
    """
    p, q, w = np.broadcast_arrays(p, q, w)
    out = np.zeros(p.shape)
    ok = (p > 0) & (q > 0) & (w > 0)
    if not ok.any():
        return out
    pp, qq, ww = p[ok], q[ok], w[ok]
    # panels graded toward v = 0 when the box is thin along p
    ratio = np.clip(pp / ww, 1e-12, 1.0)
    k = np.arange(0, 41)
    edges = np.minimum(1.0, ratio[:, None] * 2.0 ** (k[None, :] - 1))
    edges[:, 0] = 0.0
    edges[:, -1] = 1.0

    def integrand(v):
        return np.arcsinh(qq[:, None, None] / np.sqrt(pp[:, None, None] ** 2 + (ww[:, None, None] * v) ** 2))

    val = gl_until_converged(integrand, edges, rtol=1e-14, n0=8, n_max=64)
    out[ok] = 0.5 * pp * ww * val
    return out


def corner_box_inverse_distance(a, b, c):
    """int over [0,a]x[0,b]x[0,c] of d^3x / |x|, for a, b, c >= 0."""
    return _pyramid(a, b, c) + _pyramid(b, c, a) + _pyramid(c, a, b)


_CHUNK = 2048


def _chunked(kernel):
    """Apply a per-point kernel in fixed-size batches to bound memory."""

    def wrapper(d, *args):
        d = np.atleast_2d(d)
        shape = d.shape[:-1]
        flat = d.reshape(-1, 3)
        out = np.concatenate([kernel(flat[i:i + _CHUNK], *args) for i in range(0, len(flat), _CHUNK)]
                             or [np.empty(0)])
        return out.reshape(shape)

    wrapper.__doc__ = kernel.__doc__
    return wrapper


@_chunked
def _box_inverse_distance(d, edges):
    """int_box d^3y / |x - y| with the box centered at the origin; d = x."""
    d = np.atleast_2d(d)
    shape = d.shape[:-1]
    d = d.reshape(-1, 3)
    half = 0.5 * edges
    dist = np.linalg.norm(np.maximum(np.abs(d) - half, 0.0), axis=1)
    far = dist > 2.0 * np.linalg.norm(half)
    out = np.empty(len(d))
    if far.any():
        out[far] = _box_direct(d[far], half)
    near = ~far
    if near.any():
        dn = d[near]
        total = np.zeros(len(dn))
        lo = -half - dn  # offsets of box faces from the field point
        hi = half - dn
        for ix in (0, 1):
            for iy in (0, 1):
                for iz in (0, 1):
                    ex = hi[:, 0] if ix else lo[:, 0]
                    ey = hi[:, 1] if iy else lo[:, 1]
                    ez = hi[:, 2] if iz else lo[:, 2]
                    sign = (1 if ix else -1) * (1 if iy else -1) * (1 if iz else -1)
                    sign = sign * np.sign(ex) * np.sign(ey) * np.sign(ez)
                    total += sign * corner_box_inverse_distance(np.abs(ex), np.abs(ey), np.abs(ez))
        out[near] = total
    return out.reshape(shape)


def _box_direct(d, half, n0=8):
    """Tensor Gauss-Legendre on a box well separated from the field point."""
    prev = None
    n = n0
    while n <= 64:
        x, w = gauss_legendre(n)
        nodes = [(-h + 2 * h * x) for h in half]
        X, Y, Z = np.meshgrid(*nodes, indexing="ij")
        W = np.einsum("i,j,k->ijk", w, w, w) * np.prod(2 * half)
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        r = np.linalg.norm(d[:, None, :] - pts[None, :, :], axis=-1)
        cur = (1.0 / r) @ W.ravel()
        if prev is not None and np.all(np.abs(cur - prev) <= 1e-13 * np.abs(cur)):
            return cur
        prev = cur
        n *= 2
    return prev


# --- cylinder ------------------------------------------------------------

def _radial_antiderivative(s, h):
    """Antiderivative in s of s * asinh(h / s); finite limit at s = 0."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0, s, 1.0)
    term = np.where(s > 0, 0.5 * s * s * np.arcsinh(h / safe), 0.0)
    return term + 0.5 * h * np.sqrt(s * s + h * h)


def _chord_integral(s1, s2, h0, h1):
    return (_radial_antiderivative(s2, h1) - _radial_antiderivative(s1, h1)
            - _radial_antiderivative(s2, h0) + _radial_antiderivative(s1, h0))


@_chunked
def _cylinder_inverse_distance(d, R, length, axis):
    """int_cyl d^3y / |x - y| for a cylinder centered at the origin."""
    d = np.atleast_2d(d)
    shape = d.shape[:-1]
    d = d.reshape(-1, 3)
    z = d @ axis
    perp = d - z[:, None] * axis
    q = np.linalg.norm(perp, axis=1)
    h0 = -0.5 * length - z
    h1 = 0.5 * length - z
    out = np.empty(len(d))

    inside = q < R
    if inside.any():
        qi, a0, a1 = q[inside], h0[inside], h1[inside]

        # periodic integrand: trapezoid rule converges geometrically
        def val(n):
            phi = 2 * np.pi * np.arange(n) / n
            c = np.cos(phi)[None, :]
            s2 = -qi[:, None] * c + np.sqrt(R * R - (qi[:, None] * np.sin(phi)[None, :]) ** 2)
            return (2 * np.pi / n) * _chord_integral(0.0, s2, a0[:, None], a1[:, None]).sum(axis=1)

        n = 64
        prev = val(n)
        cur = prev
        while n < 1 << 15:
            n *= 2
            cur = val(n)
            if np.all(np.abs(cur - prev) <= 1e-12 * np.abs(cur)):
                break
            prev = cur
        out[inside] = cur

    outside = ~inside
    if outside.any():
        qo, a0, a1 = q[outside], h0[outside], h1[outside]
        delta = np.arcsin(np.minimum(R / qo, 1.0))

        # psi = delta * sin(theta) removes the square-root endpoint behaviour
        def integrand(theta):
            psi = delta[:, None, None] * np.sin(theta)
            jac = delta[:, None, None] * np.cos(theta)
            qq = qo[:, None, None]
            root = np.sqrt(np.maximum(R * R - (qq * np.sin(psi)) ** 2, 0.0))
            s1 = np.maximum(qq * np.cos(psi) - root, 0.0)
            s2 = qq * np.cos(psi) + root
            return jac * _chord_integral(s1, s2, a0[:, None, None], a1[:, None, None])

        edges = np.broadcast_to(np.linspace(-np.pi / 2, np.pi / 2, 5), (len(qo), 5))
        out[outside] = gl_until_converged(integrand, edges, rtol=1e-13, n0=16, n_max=1024)
    return out.reshape(shape)


# --- configurations ------------------------------------------------------

@dataclass(frozen=True)
class MassConfiguration:
    """One classical branch: a non-empty set of bodies."""

    bodies: tuple[Body, ...]

    def __post_init__(self):
        bodies = tuple(self.bodies)
        if not bodies:
            raise GeometryError("a mass configuration needs at least one body")
        object.__setattr__(self, "bodies", bodies)

    @classmethod
    def of(cls, *bodies: Body) -> "MassConfiguration":
        return cls(tuple(bodies))

    @property
    def total_mass(self) -> float:
        return sum(b.mass for b in self.bodies)

    def translated(self, shift) -> "MassConfiguration":
        return MassConfiguration(tuple(b.translated(shift) for b in self.bodies))

    def point_masses(self) -> list[Body]:
        return [b for b in self.bodies if b.shape == "point" and b.mass > 0]


def potential_at(config: MassConfiguration, x) -> np.ndarray | float:
    """Newtonian potential (J/kg) of ``config`` at ``x`` (shape (3,) or (N, 3))."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1])
    for body in config.bodies:
        total = total + body.potential(x)
    return float(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class SuperpositionState:
    """Branches ``(weight, configuration)`` with weights |c_n|^2 summing to 1."""

    branches: tuple[tuple[float, MassConfiguration], ...]
    weight_tol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        br = tuple((float(w), c) for w, c in self.branches)
        if not br:
            raise GeometryError("a superposition needs at least one branch")
        for w, _ in br:
            if not 0.0 <= w <= 1.0:
                raise GeometryError(f"branch weight {w} outside [0, 1]")
        if abs(sum(w for w, _ in br) - 1.0) > self.weight_tol:
            raise GeometryError("branch weights must sum to 1")
        object.__setattr__(self, "branches", br)

    @classmethod
    def equal(cls, configs: Iterable[MassConfiguration]) -> "SuperpositionState":
        configs = list(configs)
        w = 1.0 / len(configs)
        return cls(tuple((w, c) for c in configs))

    @classmethod
    def displaced(cls, body: Body, positions: Sequence, weights=None,
                  environment: Sequence[Body] = ()) -> "SuperpositionState":
        """``body`` superposed over ``positions``; ``environment`` bodies are
        common to every branch."""
        positions = [_vec(p) for p in positions]
        if weights is None:
            weights = [1.0 / len(positions)] * len(positions)
        return cls(tuple(
            (w, MassConfiguration((body.moved(p), *environment)))
            for w, p in zip(weights, positions)
        ))

    @classmethod
    def cube_grid(cls, mass: float, edge: float, n: int, center=(0, 0, 0)) -> "SuperpositionState":
        """Point mass delocalised with equal weights over an n x n x n grid
        filling a cube of edge ``edge`` (cell centres)."""
        if n < 1 or not edge > 0:
            raise GeometryError("need n >= 1 and edge > 0")
        g = (np.arange(n) + 0.5) / n * edge - 0.5 * edge
        c = np.asarray(_vec(center))
        pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3) + c
        return cls.displaced(Body.point(mass), pts)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])

    @property
    def configs(self) -> list[MassConfiguration]:
        return [c for _, c in self.branches]

    def __len__(self):
        return len(self.branches)

    def translated(self, shift) -> "SuperpositionState":
        return SuperpositionState(tuple((w, c.translated(shift)) for w, c in self.branches))

    def potentials(self, x) -> np.ndarray:
        """Array of shape (n_branches, ...) of branch potentials at ``x``."""
        return np.stack([np.asarray(potential_at(c, x)) for c in self.configs])

    def point_masses(self) -> list[Body]:
        return [b for c in self.configs for b in c.point_masses()]


def delta_phi(state: SuperpositionState, n: int, m: int, x) -> np.ndarray | float:
    """Phi_n(x) - Phi_m(x)."""
    for i in (n, m):
        if not 0 <= i < len(state):
            raise IndexError(f"branch index {i} out of range")
    configs = state.configs
    out = np.asarray(potential_at(configs[n], x)) - np.asarray(potential_at(configs[m], x))
    return float(out) if out.ndim == 0 else out


def line_integral_phi(ball: Body, L: float) -> float:
    """Integral of the potential along a segment of length ``L`` whose
    midpoint is the centre of the uniform ``ball``: 2 G M (log(2a/L) - 4/3)."""
    if ball.shape != "ball":
        raise GeometryError("line_integral_phi needs a uniform ball")
    a = ball.radius
    if not a < 0.5 * L:
        raise GeometryError(f"ball radius {a} must be smaller than L/2 = {0.5 * L}")
    return 2.0 * G * ball.mass * (np.log(2.0 * a / L) - 4.0 / 3.0)
