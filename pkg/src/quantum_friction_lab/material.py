"""Drude response, Doppler-shifted slab permittivities and gain predicates.

All quantities are in reduced units: the plasma frequency, the speed of light and
hbar are 1. Frequencies are in units of omega_p, wavenumbers in k_p = omega_p / c,
velocities in c and lengths in 1 / k_p. The plasma frequency is therefore not a
field of :class:`DrudeParams`.

Time dependence follows the e^{-i omega t} convention, so Im eps > 0 is lossy
for real omega > 0 and a natural mode with Im omega > 0 grows.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError, PoleError

OMEGA_SP = float(np.sqrt(0.5))
"""Surface-plasmon frequency omega_p / sqrt(2), where eps = -1."""

POLE_FLOOR = 1e-12
"""Minimum distance to a Drude pole (omega = 0 or omega = -i gamma)."""


class Side(str, Enum):
    """Slab on either side of the vacuum gap."""

    UPPER = "upper"
    LOWER = "lower"


class ParameterKind(str, Enum):
    """Physical parameter varied by sweeps and critical searches."""

    GAMMA = "gamma"
    VELOCITY = "velocity"
    GAP = "gap"


@dataclass(frozen=True)
class DrudeParams:
    """Drude damping of both slabs (units omega_p)."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and non-negative, got {self.gamma}")


@dataclass(frozen=True)
class ShearConfig:
    """Two Drude half-spaces separated by a vacuum gap, sliding along x.

    The upper slab fills z > z_plus and moves at v_upper, the lower slab fills
    z < z_minus and moves at v_lower.
    """

    drude: DrudeParams
    v_upper: float
    v_lower: float
    z_minus: float
    z_plus: float

    def __post_init__(self):
        if not self.z_plus > self.z_minus:
            raise ValueError(
                f"z_plus must exceed z_minus, got z_minus={self.z_minus}, z_plus={self.z_plus}"
            )
        for name in ("v_upper", "v_lower"):
            value = getattr(self, name)
            if not abs(value) < 1.0:
                raise ValueError(f"|{name}| must be below c = 1, got {value}")

    @classmethod
    def symmetric(cls, gamma: float, v: float, L: float) -> "ShearConfig":
        """Slabs moving at -v/2 (upper) and +v/2 (lower), surfaces at -L/2 and +L/2."""
        return cls(
            drude=DrudeParams(gamma),
            v_upper=-v / 2.0,
            v_lower=v / 2.0,
            z_minus=-L / 2.0,
            z_plus=L / 2.0,
        )

    @classmethod
    def lower_only(cls, gamma: float, v: float, L: float) -> "ShearConfig":
        """Upper slab at rest, lower slab moving at +v, surfaces at -L/2 and +L/2."""
        return cls(
            drude=DrudeParams(gamma),
            v_upper=0.0,
            v_lower=v,
            z_minus=-L / 2.0,
            z_plus=L / 2.0,
        )

    @property
    def gamma(self) -> float:
        return self.drude.gamma

    @property
    def gap(self) -> float:
        return self.z_plus - self.z_minus

    @property
    def relative_velocity(self) -> float:
        """Velocity of the lower slab seen from the upper one."""
        return self.v_lower - self.v_upper

    @property
    def is_symmetric(self) -> bool:
        return self.v_upper == -self.v_lower and self.z_plus == -self.z_minus

    def velocity(self, side: Side) -> float:
        return self.v_upper if side is Side.UPPER else self.v_lower

    def dual(self) -> "ShearConfig":
        """Reciprocal dual: every velocity reversed."""
        return replace(self, v_upper=-self.v_upper, v_lower=-self.v_lower)

    def with_gamma(self, gamma: float) -> "ShearConfig":
        return replace(self, drude=DrudeParams(gamma))

    def with_parameter(self, kind: ParameterKind, value: float) -> "ShearConfig":
        """Copy with one physical parameter replaced.

        Velocity and gap are rescaled about the current geometry: the velocity
        ratio between the slabs and the gap midpoint are preserved.
        """
        kind = ParameterKind(kind)
        if kind is ParameterKind.GAMMA:
            return self.with_gamma(value)
        if kind is ParameterKind.VELOCITY:
            dv = self.relative_velocity
            if dv == 0:
                return replace(self, v_upper=-value / 2.0, v_lower=value / 2.0)
            scale = value / dv
            return replace(self, v_upper=self.v_upper * scale, v_lower=self.v_lower * scale)
        mid = 0.5 * (self.z_plus + self.z_minus)
        return replace(self, z_minus=mid - value / 2.0, z_plus=mid + value / 2.0)


@dataclass(frozen=True)
class SpectralPoint:
    """Evaluation coordinate (omega, kx, ky); omega is complex for root searches."""

    omega: complex
    kx: float
    ky: float = 0.0

    @property
    def k(self) -> float:
        """Transverse wavenumber magnitude |k|."""
        return float(np.hypot(self.kx, self.ky))

    def mirrored(self) -> "SpectralPoint":
        """Same frequency at the opposite in-plane wavevector."""
        return SpectralPoint(self.omega, -self.kx, -self.ky)


def _as_output(value, scalar_input: bool):
    return complex(value) if scalar_input else value


def drude_eps(p: DrudeParams, omega):
    """Drude permittivity 1 - 1/(omega^2 + i omega gamma).

    Accepts a scalar or an array of complex frequencies.

    Args:
        p: Drude damping
        omega: Frequency (units omega_p)

    Returns:
        Permittivity with the same shape as omega

    Raises:
        PoleError: If omega lies within POLE_FLOOR of 0 or -i gamma
    """
    scalar_input = np.ndim(omega) == 0
    w = np.asarray(omega, dtype=complex)
    distance = np.minimum(np.abs(w), np.abs(w + 1j * p.gamma))
    if np.any(distance < POLE_FLOOR):
        raise PoleError(
            f"Drude pole: |omega| or |omega + i gamma| below {POLE_FLOOR:g} "
            f"(gamma={p.gamma}, min distance={float(np.min(distance)):.3e})"
        )
    eps = 1.0 - 1.0 / (w * (w + 1j * p.gamma))
    return _as_output(eps, scalar_input)


def doppler_eps(cfg: ShearConfig, side: Side, omega, kx):
    """Lab-frame permittivity eps_D(omega - kx v_side) of a moving slab (array-friendly)."""
    return drude_eps(cfg.drude, np.asarray(omega) - np.asarray(kx) * cfg.velocity(side))


def slab_eps(cfg: ShearConfig, side: Side, pt: SpectralPoint) -> complex:
    """Doppler-shifted permittivity of one slab at a spectral point."""
    return complex(doppler_eps(cfg, side, pt.omega, pt.kx))


def gain_window_edge(cfg: ShearConfig, side: Side, kx: float) -> float:
    """Upper frequency of the gain window of one slab at kx.

    The slab amplifies (Im eps < 0) for 0 < omega < edge whenever gamma > 0; the
    edge is 0 when the Doppler shift pushes no positive frequency below zero.
    """
    return max(kx * cfg.velocity(side), 0.0)


def is_gain(cfg: ShearConfig, side: Side, pt: SpectralPoint) -> bool:
    """True when the slab amplifies at a real positive frequency.

    Raises:
        DomainError: If the frequency is not real and positive
    """
    omega = complex(pt.omega)
    if omega.imag != 0 or omega.real <= 0:
        raise DomainError(f"is_gain needs a real positive frequency, got {pt.omega}")
    return slab_eps(cfg, side, pt).imag < 0
