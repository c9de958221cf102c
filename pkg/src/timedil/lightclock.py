"""Light clock crossed by a transparent ball in a superposition of radii.

Conventions used here:

* ``dt(r)`` is the one-way traversal time with a ball of radius ``r``;
* ``dtbar = (dt(a) + dt(b)) / 2`` and ``split = dt(a) - dt(b)``, the
  per-traversal delay difference. One full round trip therefore spreads
  arrival times by ``2 * split = 4GM/c^3 log(b/a)``;
* the mirror reflection phase is zero;
* pulses at round-trip order ``n`` carry the cavity amplitude
  ``T * R**(n - 1)`` from the geometric sum over internal reflections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .constants import CODATA2018
from .errors import NO_HORIZON, GeometryError, OverflowGuardError
from .potentials import Body, line_integral_phi

G, C = CODATA2018.G, CODATA2018.c

MAX_TRANSMISSIVITY = 0.3
MAX_ORDER = 10_000


@dataclass(frozen=True)
class PulseSpec:
    """Input pulse. ``gaussian``: exp(-(bw t)^2); ``raised_cosine``:
    (1 - cos(bw t)) / (pi bw t^2), which integrates to one."""

    shape: str = "gaussian"
    bandwidth: float = 1e12  # rad/s
    center_time: float = 0.0

    def __post_init__(self):
        if self.shape not in ("gaussian", "raised_cosine"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if not self.bandwidth > 0:
            raise ValueError("pulse bandwidth must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float) - self.center_time
        b = self.bandwidth
        if self.shape == "gaussian":
            return np.exp(-(b * t) ** 2)
        return raised_cosine(t, b)


def raised_cosine(t, bandwidth):
    t = np.asarray(t, dtype=float)
    bt = bandwidth * t
    small = np.abs(bt) < 1e-4
    safe = np.where(small, 1.0, t)
    # 1 - cos x = 2 sin^2(x/2) avoids cancellation for moderate x
    val = 2.0 * np.sin(0.5 * bandwidth * safe) ** 2 / (np.pi * bandwidth * safe ** 2)
    series = bandwidth / (2 * np.pi) * (1.0 - bt ** 2 / 12.0)
    return np.where(small, series, val)


@dataclass(frozen=True)
class LightClockSpec:
    L: float
    M: float
    radius_a: float
    radius_b: float
    transmissivity_T: complex = 0.1
    pulse: PulseSpec = field(default_factory=PulseSpec)

    def __post_init__(self):
        if not 0 < self.radius_a <= self.radius_b < 0.5 * self.L:
            raise GeometryError("need 0 < radius_a <= radius_b < L/2")
        if self.M < 0:
            raise GeometryError("mass must be non-negative")
        if not 0 < abs(self.transmissivity_T) <= MAX_TRANSMISSIVITY:
            raise GeometryError(f"|T| must lie in (0, {MAX_TRANSMISSIVITY}]")

    @property
    def reflectivity_R(self) -> float:
        return float(np.sqrt(1.0 - abs(self.transmissivity_T) ** 2))


def traversal_excess(spec: LightClockSpec, radius: float) -> float:
    """Gravitational delay (2GM/c^3)(log(L/2a) + 4/3) on top of L/c.

    Kept separate from :func:`traversal_time` because for laboratory masses
    it is ~40 orders of magnitude below L/c and vanishes in the sum.
    """
    if not 0 < radius < 0.5 * spec.L:
        raise GeometryError(f"radius {radius} must lie in (0, L/2)")
    return 2 * G * spec.M / C ** 3 * (np.log(spec.L / (2 * radius)) + 4.0 / 3.0)


def traversal_time(spec: LightClockSpec, radius: float) -> float:
    """One-way light travel time L/c + (2GM/c^3)(log(L/2a) + 4/3)."""
    return spec.L / C + traversal_excess(spec, radius)


def excess_from_potential(spec: LightClockSpec, radius: float) -> float:
    """The same delay as -(1/c^3) * integral of the potential over the gap."""
    return -line_integral_phi(Body.ball(spec.M, radius), spec.L) / C ** 3


def superposition_delay(spec: LightClockSpec) -> float:
    """Maximal spread of round-trip arrival times, 4GM/c^3 log(b/a)."""
    return 4 * G * spec.M / C ** 3 * np.log(spec.radius_b / spec.radius_a)


def clock_times(spec: LightClockSpec) -> tuple[float, float]:
    """(dtbar, split) with split = dt(a) - dt(b) computed without cancellation."""
    dt_b = traversal_time(spec, spec.radius_b)
    split = 2 * G * spec.M / C ** 3 * np.log(spec.radius_b / spec.radius_a)
    return dt_b + 0.5 * split, split


def traverse_factor(weights, dts, omega) -> complex:
    """Per-traversal field factor sum_n |c_n|^2 exp(i omega dt_n)."""
    weights = np.asarray(weights, dtype=float)
    return complex(np.sum(weights * np.exp(1j * omega * np.asarray(dts, dtype=float))))


def log_binomial_weights(n: int) -> np.ndarray:
    """log(binom(2n, k) / 4^n) for k = 0..2n.

    Accumulates log ratios binom(2n, k+1) / binom(2n, k) = (2n - k) / (k + 1)
    and normalises with logsumexp; gammaln of 2n + 1 would lose ~1e-11 at
    n = 10^4.
    """
    k = np.arange(2 * n)
    lw = np.concatenate([[0.0], np.cumsum(np.log((2 * n - k) / (k + 1.0)))])
    return lw - logsumexp(lw)


def binomial_weights(n: int) -> np.ndarray:
    return np.exp(log_binomial_weights(n))


def continuum_weights(n: int) -> np.ndarray:
    """Large-n Gaussian stand-in exp(-(k-n)^2/n)/sqrt(pi n) on k = 0..2n."""
    k = np.arange(2 * n + 1)
    return np.exp(-((k - n) ** 2) / n) / np.sqrt(np.pi * n)


@dataclass(frozen=True)
class PulseOrder:
    n: int
    delays: np.ndarray  # s, absolute
    offsets: np.ndarray  # s, delay minus 2 n dtbar (kept separately for resolution)
    amplitudes: np.ndarray  # complex
    binomial: np.ndarray  # binomial weights, sum to 1


@dataclass(frozen=True)
class PulseTrain:
    """Pulses grouped by round-trip order; orders are built on demand."""

    dtbar: float
    split: float
    transmissivity: complex
    reflectivity: float
    n_max: int
    superposed: bool

    def cavity_amplitude(self, n: int) -> complex:
        return complex(self.transmissivity * self.reflectivity ** (n - 1))

    def order(self, n: int) -> PulseOrder:
        if not 1 <= n <= self.n_max:
            raise IndexError(f"order {n} outside 1..{self.n_max}")
        cav = self.cavity_amplitude(n)
        if not self.superposed:
            one = np.ones(1)
            return PulseOrder(n, np.array([2 * n * self.dtbar]), np.zeros(1),
                              cav * one.astype(complex), one)
        w = binomial_weights(n)
        k = np.arange(2 * n + 1)
        offsets = (n - k) * self.split
        return PulseOrder(n, 2 * n * self.dtbar + offsets, offsets, cav * w.astype(complex), w)

    def __iter__(self):
        return (self.order(n) for n in range(1, self.n_max + 1))

    def merged(self) -> list[tuple[float, complex]]:
        """(delay, amplitude) with coincident delays summed, sorted by delay."""
        acc: dict[float, complex] = {}
        for o in self:
            for d, a in zip(o.delays, o.amplitudes):
                acc[float(d)] = acc.get(float(d), 0j) + complex(a)
        return sorted(acc.items())

    def synthesize(self, t, pulse: PulseSpec, orders=None) -> np.ndarray:
        """Time-domain field: sum of delayed copies of ``pulse``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        orders = range(1, self.n_max + 1) if orders is None else orders
        for n in orders:
            o = self.order(n)
            out += np.tensordot(o.amplitudes, pulse(t[None, ...] - o.delays.reshape((-1,) + (1,) * t.ndim)), axes=1)
        return out

    def order_envelope(self, tau, n: int, pulse: PulseSpec) -> np.ndarray:
        """Order-``n`` field at times ``tau`` relative to 2 n dtbar, using the
        stored offsets (resolves sub-attosecond splits)."""
        o = self.order(n)
        tau = np.asarray(tau, dtype=float)
        shifted = tau[None, ...] - o.offsets.reshape((-1,) + (1,) * tau.ndim)
        return np.tensordot(o.amplitudes, pulse(shifted + pulse.center_time), axes=1)


def pulse_train_flat(spec: LightClockSpec, n_max: int) -> PulseTrain:
    """Flat-space train: order n at 2 n dt with amplitude T R^(n-1)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    dt = traversal_time(spec, spec.radius_a)
    return PulseTrain(dt, 0.0, spec.transmissivity_T, spec.reflectivity_R, n_max, superposed=False)


def pulse_train_superposed_exact(spec: LightClockSpec, n_max: int) -> PulseTrain:
    """Train for the radius superposition with exact binomial sub-pulses."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > MAX_ORDER:
        raise OverflowGuardError(f"n_max {n_max} exceeds {MAX_ORDER}")
    dtbar, split = clock_times(spec)
    return PulseTrain(dtbar, split, spec.transmissivity_T, spec.reflectivity_R, n_max, superposed=True)


def iterate_cavity(T: complex, R: float, round_trip: float, n_max: int) -> list[tuple[float, complex]]:
    """Track an impulse through the mirror relations a1 = T a0 + R a4,
    a4 = a1 delayed by one round trip, output = a4 before re-reflection."""
    inside = [(0.0, complex(T))]  # a1 contributions: (delay, amplitude)
    out = []
    for _ in range(n_max):
        a4 = [(d + round_trip, a) for d, a in inside]
        out.extend(a4)
        inside = [(d, R * a) for d, a in a4]
    return out


def pulse_height_asymptotic(bandwidth: float, split: float, dtbar: float, t: float) -> float:
    """Large-time pulse height 1 / (bw * split * sqrt(t / (2 dtbar)))."""
    for v in (bandwidth, split, dtbar, t):
        if not v > 0:
            raise ValueError("all arguments must be positive")
    return 1.0 / (bandwidth * split * np.sqrt(t / (2.0 * dtbar)))


def coherence_horizon(bandwidth: float, split: float, dtbar: float, threshold: float = 1.0):
    """Time at which the asymptotic pulse height falls to ``threshold``:
    2 dtbar / (threshold * bw * split)^2. Zero split never dephases."""
    if split == 0:
        return NO_HORIZON
    if split < 0 or not bandwidth > 0 or not dtbar > 0 or not threshold > 0:
        raise ValueError("need split >= 0 and positive bandwidth, dtbar, threshold")
    return 2.0 * dtbar / (threshold * bandwidth * split) ** 2


def peak_height(train: PulseTrain, n: int, pulse: PulseSpec, samples_per_width: int = 8) -> float:
    """Peak modulus of order ``n`` (binomial weights only, cavity factor
    removed), sampled at ``samples_per_width`` points per 1/bandwidth."""
    o = train.order(n)
    # binomial tails beyond ~10 standard deviations are below double precision
    keep = np.abs(np.arange(2 * n + 1) - n) <= 10 * np.sqrt(n) + 5
    offsets, weights = o.offsets[keep], o.binomial[keep]
    spread = np.abs(offsets).max()
    span = spread + 6.0 / pulse.bandwidth
    step = 1.0 / (samples_per_width * pulse.bandwidth)
    tau = np.arange(-span, span + step, step)
    env = np.tensordot(weights, pulse(tau[None, :] - offsets[:, None] + pulse.center_time), axes=1)
    return float(np.abs(env).max())
