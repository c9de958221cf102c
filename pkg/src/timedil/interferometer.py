"""Microwave Mach-Zehnder interferometer with a parametric amplifier per arm.

Field amplitudes are complex analytic signals; physical voltages are their
real parts. Both arms share one :class:`AmplifierSpec`. The idler frequency
differs from the signal frequency, so idler ports only ever carry vacuum.

The instability time of the amplified single photon uses the coherent-state
expansion of the state: the gravitational potential of a coaxial-cable
voltage is proportional to the voltage, and the voltage to the coherent
amplitude. Three variance models are exposed:

``asymptotic``  16 G K^2 hbar w / (2 eps0 eps_r)
``exact``       the same integral evaluated exactly: (16 G - 4) ...
``normalized``  branch weights rescaled to sum to one: (4 G - 1) ...

``asymptotic`` is the large-gain limit of ``exact``; see :func:`variance_phi`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtri

from .constants import CODATA2018, PhysicalConstants
from .errors import NonConvergenceError, RegimeError
from .quadrature import stratified_mc

HBAR = CODATA2018.hbar
C = CODATA2018.c

VARIANCE_MODELS = {"asymptotic": (16.0, 0.0), "exact": (16.0, -4.0), "normalized": (4.0, -1.0)}


@dataclass(frozen=True)
class AmplifierSpec:
    gain: float = 1.0
    theta: float = 0.0  # squeeze phase, rad
    bandwidth_Ba: float = 2 * np.pi * 300.0  # rad/s
    pump_frequency: float = 4 * np.pi * 1e9  # rad/s

    def __post_init__(self):
        if not self.gain >= 1.0:
            raise ValueError(f"gain must be >= 1, got {self.gain}")
        if not self.bandwidth_Ba > 0:
            raise ValueError("amplifier bandwidth must be positive")

    @property
    def squeeze(self) -> float:
        """|s| with gain = cosh^2 |s|."""
        return float(np.arccosh(np.sqrt(self.gain)))

    @property
    def squeeze_factor(self) -> float:
        """tanh |s| = sqrt((G - 1) / G)."""
        return float(np.sqrt((self.gain - 1.0) / self.gain))

    @classmethod
    def from_db(cls, gain_db: float, **kw) -> "AmplifierSpec":
        return cls(gain=10.0 ** (gain_db / 10.0), **kw)


@dataclass(frozen=True)
class HybridSpec:
    transmission: complex = -1 / np.sqrt(2)
    reflection: complex = -1j / np.sqrt(2)

    def __post_init__(self):
        if abs(abs(self.transmission) ** 2 + abs(self.reflection) ** 2 - 1.0) > 1e-12:
            raise ValueError("hybrid must satisfy |T|^2 + |R|^2 = 1")

    @property
    def matrix(self) -> np.ndarray:
        T, R = self.transmission, self.reflection
        return np.array([[T, R], [R, T]], dtype=complex)


@dataclass(frozen=True)
class CoaxSpec:
    radius: float = 1e-3
    length: float = 3.0
    eps_r: float = 20.0
    dielectric_density: float = 1e4
    signal_frequency: float = 2 * np.pi * 1e9  # rad/s

    def __post_init__(self):
        for k in ("radius", "length", "eps_r", "dielectric_density", "signal_frequency"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")

    @property
    def mass(self) -> float:
        return self.dielectric_density * np.pi * self.radius ** 2 * self.length


@dataclass(frozen=True)
class InterferometerSpec:
    amplifier: AmplifierSpec = field(default_factory=AmplifierSpec)
    hybrids: tuple[HybridSpec, HybridSpec] = (HybridSpec(), HybridSpec())
    photon_bandwidth_Bph: float = 2 * np.pi * 1e7
    phase_difference: float = 0.0  # phi_5 - phi_8
    coax: CoaxSpec = field(default_factory=CoaxSpec)

    def __post_init__(self):
        if not self.photon_bandwidth_Bph > 0:
            raise ValueError("photon bandwidth must be positive")


# --- interference ----------------------------------------------------------

def visibility(Bph: float, Ba: float, gain: float) -> float:
    """(Bph + Ba (G - 1)) / (Bph + 3 Ba (G - 1)) for a narrow amplifier."""
    if not (Bph > 0 and Ba > 0 and gain >= 1):
        raise ValueError("need Bph, Ba > 0 and gain >= 1")
    x = Ba * (gain - 1.0)
    return (Bph + x) / (Bph + 3.0 * x)


def output_flux_f6(spec: InterferometerSpec, f1, t) -> np.ndarray:
    """Photon flux at output 6 for an amplifier wider than the photon:
    G (1 - cos dphi) f1(t) / 2 + Ba (G - 1) / (2 pi)."""
    amp = spec.amplifier
    if not amp.bandwidth_Ba > spec.photon_bandwidth_Bph:
        raise RegimeError("amplifier narrower than the photon; use visibility() for that regime")
    G = amp.gain
    signal = 0.5 * G * (1.0 - np.cos(spec.phase_difference)) * np.asarray(f1(t))
    return signal + amp.bandwidth_Ba / (2 * np.pi) * (G - 1.0)


def squeezer_matrix(amp: AmplifierSpec, arm_phase: float = 0.0) -> np.ndarray:
    """Bogoliubov map acting on (signal, conj(idler)) amplitudes."""
    mu = np.cosh(amp.squeeze)
    nu = np.exp(1j * amp.theta) * np.sinh(amp.squeeze)
    ph = np.exp(1j * arm_phase)
    return ph * np.array([[mu, -nu], [-np.conj(nu), mu]], dtype=complex)


def squeezer_io(pair, amp: AmplifierSpec, arm_phase: float = 0.0) -> tuple[complex, complex]:
    """Amplify (signal, idler) c-number amplitudes:
    out = e^{i phi} (cosh|s| a - e^{i theta} sinh|s| conj(partner))."""
    a, b = complex(pair[0]), complex(pair[1])
    mu = np.cosh(amp.squeeze)
    nu = np.exp(1j * amp.theta) * np.sinh(amp.squeeze)
    ph = np.exp(1j * arm_phase)
    return complex(ph * (mu * a - nu * np.conj(b))), complex(ph * (mu * b - nu * np.conj(a)))


def port_fluxes(spec: InterferometerSpec, f1, t, arm_phases=None) -> tuple[np.ndarray, np.ndarray]:
    """Mean photon flux at outputs 6 and 7 from the full mode network.

    Photon flux ``f1`` enters port 1; ports 4 and every idler mode carry
    vacuum, which contributes |v|^2 per unit bandwidth Ba / (2 pi).
    """
    phases = (spec.phase_difference, 0.0) if arm_phases is None else arm_phases
    H1, H2 = spec.hybrids[0].matrix, spec.hybrids[1].matrix
    amp = spec.amplifier
    mu = np.cosh(amp.squeeze)
    nu = np.exp(1j * amp.theta) * np.sinh(amp.squeeze)
    D = np.diag(np.exp(1j * np.asarray(phases)))
    # a_out = U a_in + V a_in_idler^dagger, in = (port 1, port 4)
    U = H2 @ D @ (mu * H1)
    V = H2 @ D @ (-nu * np.conj(H1))
    f1v = np.asarray(f1(t))
    noise = amp.bandwidth_Ba / (2 * np.pi) * np.sum(np.abs(V) ** 2, axis=1)
    signal = np.abs(U[:, 0]) ** 2
    return signal[0] * f1v + noise[0], signal[1] * f1v + noise[1]


# --- gravitational potential of the cable field -----------------------------

def potential_per_volt(eps_r: float, constants: PhysicalConstants = CODATA2018) -> float:
    """K = 4 pi G eps0 eps_r m_e / |q_e|, so Phi = K V."""
    k = constants
    return 4 * np.pi * k.G * k.eps0 * eps_r * k.m_e / k.q_e


def phi_from_voltage(V, eps_r: float):
    return potential_per_volt(eps_r) * V


def voltage_per_photon(omega: float, eps_r: float, constants: PhysicalConstants = CODATA2018) -> float:
    return float(np.sqrt(constants.hbar * omega / (2 * constants.eps0 * eps_r)))


def coherent_voltage(alpha, omega: float, eps_r: float, x, t):
    """sqrt(hbar w / (2 eps0 eps_r)) alpha exp(-i (w t - k x)), k = w sqrt(eps_r) / c."""
    k = omega * np.sqrt(eps_r) / C
    return voltage_per_photon(omega, eps_r) * alpha * np.exp(-1j * (omega * np.asarray(t) - k * np.asarray(x)))


# --- coherent-state expansion ------------------------------------------------

def overlap_amplitude(alpha_L, alpha_R, amp: AmplifierSpec, normalized: bool = False):
    """<alpha_L, alpha_R | psi> for the amplified single photon.

    With ``normalized=False`` this is the bare expression
    (conj(aL) + conj(aR)) / G * exp(-(|aL|^2 + |aR|^2)/2
    - (conj(aL)^2 + conj(aR)^2) e^{i theta} tanh|s| / 2), whose squared
    modulus integrates to 2; ``normalized=True`` includes the 1/sqrt(2) of
    the beam-splitter state so it integrates to 1.
    """
    aL = np.asarray(alpha_L, dtype=complex)
    aR = np.asarray(alpha_R, dtype=complex)
    G = amp.gain
    sq = amp.squeeze_factor * np.exp(1j * amp.theta)
    cl, cr = np.conj(aL), np.conj(aR)
    val = (cl + cr) / G * np.exp(-0.5 * (np.abs(aL) ** 2 + np.abs(aR) ** 2) - 0.5 * (cl ** 2 + cr ** 2) * sq)
    return val / np.sqrt(2.0) if normalized else val


def gaussian_moment(power: int, amp: AmplifierSpec, rtol: float = 1e-10) -> float:
    """(1/pi) int d^2 alpha |alpha|^p exp(-|alpha|^2 - tanh|s| Re(alpha^2 e^{-i theta}))
    by nested adaptive quadrature in polar coordinates.

    The exponent is -r^2 a(phi) with a = 1 + tanh|s| cos(2 phi - theta); the
    radial variable is rescaled by sqrt(a) so each inner integral has unit
    width, and the outer integral gets breakpoints where a is smallest.
    """
    if power not in (0, 2, 4):
        raise ValueError("power must be 0, 2 or 4")
    s = amp.squeeze_factor
    th = amp.theta

    def inner(phi):
        a = 1.0 + s * np.cos(2 * phi - th)
        val, _ = integrate.quad(lambda rho: rho ** (power + 1) * np.exp(-rho * rho), 0.0, np.inf,
                                epsabs=0.0, epsrel=rtol)
        return val * a ** (-(power + 2) / 2.0)

    peaks = sorted({((th + np.pi) / 2.0) % (2 * np.pi), ((th + 3 * np.pi) / 2.0) % (2 * np.pi)})
    width = np.sqrt(max(1.0 - s, 1e-300))
    pts = sorted({p + d for p in peaks for d in (-4 * width, 0.0, 4 * width)
                  if 0.0 < p + d < 2 * np.pi})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            total, _ = integrate.quad(inner, 0.0, 2 * np.pi, points=pts, epsabs=0.0,
                                      epsrel=rtol, limit=2000)
        except integrate.IntegrationWarning as exc:
            raise NonConvergenceError(f"gaussian_moment p={power}: {exc}") from exc
    return total / np.pi


def gaussian_moment_exact(power: int, gain: float) -> float:
    """Closed forms G^(1/2), G^(3/2), (2 + s^2) G^(5/2) with s^2 = (G - 1)/G."""
    s2 = (gain - 1.0) / gain
    return {0: gain ** 0.5, 2: gain ** 1.5, 4: (2.0 + s2) * gain ** 2.5}[power]


def gaussian_moment_asymptotic(power: int, gain: float) -> float:
    """Large-gain forms G^(1/2), G^(3/2), 3 G^(5/2); the first two are exact."""
    return {0: gain ** 0.5, 2: gain ** 1.5, 4: 3.0 * gain ** 2.5}[power]


def variance_prefactor(coax: CoaxSpec, constants: PhysicalConstants = CODATA2018) -> float:
    """K^2 hbar w_s / (2 eps0 eps_r), in (J/kg)^2."""
    return (potential_per_volt(coax.eps_r, constants) ** 2
            * voltage_per_photon(coax.signal_frequency, coax.eps_r, constants) ** 2)


def variance_closed_form(gain: float, coax: CoaxSpec, model: str = "asymptotic",
                         constants: PhysicalConstants = CODATA2018) -> float:
    if model not in VARIANCE_MODELS:
        raise ValueError(f"unknown variance model {model!r}; choose from {sorted(VARIANCE_MODELS)}")
    a, b = VARIANCE_MODELS[model]
    return (a * gain + b) * variance_prefactor(coax, constants)


@dataclass(frozen=True)
class VarianceResult:
    gain: float
    closed_form: float  # 16 G prefactor
    exact: float  # the same integral done exactly: (16 G - 4) prefactor
    normalized: float  # unit-norm weights: (4 G - 1) prefactor
    monte_carlo: float
    mc_error: float
    n_samples: int


def _variance_integrand(amp: AmplifierSpec):
    """Map u in [0,1]^8 to the polynomial part of the double coherent-state
    integral, with the squeezed Gaussian envelope sampled exactly."""
    s = amp.squeeze_factor
    sx = np.sqrt(0.5 / (1.0 + s))
    sy = np.sqrt(0.5 / (1.0 - s)) if s < 1 else np.inf
    rot = np.exp(0.5j * amp.theta)
    eps = np.finfo(float).eps

    def f(u):
        z = ndtri(np.clip(u, eps, 1 - eps))
        alpha = (z[:, 0::2] * sx + 1j * z[:, 1::2] * sy) * rot  # (N, 4): L, R, L', R'
        aL, aR, bL, bR = alpha.T
        return np.abs(aL + aR) ** 2 * np.abs(bL + bR) ** 2 * np.abs(aL - bL) ** 2

    return f


def variance_phi(amp: AmplifierSpec, coax: CoaxSpec = CoaxSpec(), n_samples: int = 1_000_000,
                 seed: int = 0, stream: int = 0, max_rel_error: float = 0.05) -> VarianceResult:
    """sum_{n,m} w_n w_m (Phi_n - Phi_m)^2 for the amplified photon.

    The Monte Carlo evaluates the 8-D double coherent-state integral with the
    bare overlap weights; the Gaussian envelope of each alpha integrates to
    G^(1/2), so the integral is G^2 / G^4 * E[|aL + aR|^2 |bL + bR|^2
    |aL - bL|^2] * prefactor with alphas drawn from the envelope.
    """
    G = amp.gain
    pref = variance_prefactor(coax)
    mc = stratified_mc(_variance_integrand(amp), 8, n_samples, seed=seed, stream=stream,
                       strata_per_dim=2)
    scale = pref / G ** 2
    value, err = mc.value * scale, mc.error * scale
    if not err <= max_rel_error * abs(value):
        raise NonConvergenceError(f"variance Monte Carlo error {err / value:.3g} at budget {n_samples}")
    return VarianceResult(G, variance_closed_form(G, coax, "asymptotic"), variance_closed_form(G, coax, "exact"),
                          variance_closed_form(G, coax, "normalized"), value, err, mc.n_samples)


def tau_vs_gain(gain: float, coax: CoaxSpec = CoaxSpec(), model: str = "asymptotic") -> float:
    """pi hbar / (M_coax sqrt(2 variance)), the cable dielectric as probe."""
    if not gain >= 1:
        raise ValueError("gain must be >= 1")
    return float(np.pi * HBAR / (coax.mass * np.sqrt(2.0 * variance_closed_form(gain, coax, model))))


def critical_gain(target_tau: float, coax: CoaxSpec = CoaxSpec(), model: str = "asymptotic") -> float:
    """Gain in dB (10 log10 G) at which tau_vs_gain equals ``target_tau``."""
    if not target_tau > 0:
        raise ValueError("target_tau must be positive")
    a, b = VARIANCE_MODELS[model]
    var_needed = (np.pi * HBAR / (coax.mass * target_tau)) ** 2 / 2.0
    G = (var_needed / variance_prefactor(coax) - b) / a
    if G <= 0:
        raise ValueError("target timescale not reachable")
    return float(10.0 * np.log10(G))
