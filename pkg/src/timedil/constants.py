"""CODATA-2018 physical constants in SI units.

All modules read constants from :data:`CODATA2018`; nothing else in the
package hard-codes a physical constant.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    G: float  # m^3 kg^-1 s^-2
    c: float  # m s^-1
    hbar: float  # J s
    eps0: float  # F m^-1
    m_e: float  # kg
    q_e: float  # C, magnitude

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"constant {name} must be positive, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


CODATA2018 = PhysicalConstants(
    G=6.67430e-11,
    c=299_792_458.0,
    hbar=1.054571817e-34,
    eps0=8.8541878128e-12,
    m_e=9.1093837015e-31,
    q_e=1.602176634e-19,
)

UNITS = {"G": "m^3 kg^-1 s^-2", "c": "m/s", "hbar": "J s", "eps0": "F/m", "m_e": "kg", "q_e": "C"}

AMU = 1.66053906660e-27  # kg, CODATA-2018
