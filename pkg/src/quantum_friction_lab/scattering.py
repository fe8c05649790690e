"""Quasi-static surface coefficients, the characteristic equation and analytic estimates."""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, ResonanceError
from .material import OMEGA_SP, ShearConfig, Side, SpectralPoint, doppler_eps

RESONANCE_FLOOR = 1e-12
"""Minimum |1 + eps| accepted by the reflection coefficient."""

SPURIOUS_FLOOR = 1e-8
"""Roots with |omega_a(omega_a + i gamma) omega_b(omega_b + i gamma)| below this are spurious."""


@dataclass(frozen=True)
class SurfaceCoefficients:
    """Reflection (with propagation factor) and transmission coefficients of both surfaces."""

    r_plus: complex
    r_minus: complex
    t_plus: complex
    t_minus: complex


@dataclass(frozen=True)
class QuarticPoly:
    """Cleared-denominator characteristic polynomial, coefficients in ascending powers."""

    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) != 5:
            raise ValueError(f"quartic needs 5 coefficients, got {len(self.coefficients)}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)

    @property
    def scale(self) -> float:
        """max |c_i|, the residual normalisation."""
        return float(np.max(np.abs(self.as_array())))

    def __call__(self, omega):
        return P.polyval(omega, self.as_array())

    def derivative(self, omega):
        return P.polyval(omega, P.polyder(self.as_array()))

    def residual(self, omega) -> np.ndarray:
        """|Q(omega)| / max |c_i|."""
        return np.abs(self(omega)) / self.scale


def bare_reflection(eps):
    """Single-interface quasi-static reflection (1 - eps) / (1 + eps), array-friendly.

    Raises:
        ResonanceError: If |1 + eps| is below RESONANCE_FLOOR
    """
    e = np.asarray(eps, dtype=complex)
    denominator = 1.0 + e
    if np.any(np.abs(denominator) < RESONANCE_FLOOR):
        raise ResonanceError(f"surface resonance: |1 + eps| below {RESONANCE_FLOOR:g}")
    r = (1.0 - e) / denominator
    return complex(r) if np.ndim(eps) == 0 else r


def drude_reflection(gamma: float, omega):
    """Reflection of a Drude half-space at rest in the pole-free form 1 / (2 omega (omega + i gamma) - 1).

    Equal to bare_reflection(drude_eps(omega)) but finite at omega = 0.
    """
    w = np.asarray(omega, dtype=complex)
    r = 1.0 / (2.0 * w * (w + 1j * gamma) - 1.0)
    return complex(r) if np.ndim(omega) == 0 else r


def coupling_factor(cfg: ShearConfig, k):
    """e^{-2|k|L}, the round-trip attenuation across the gap."""
    return np.exp(-2.0 * np.asarray(k) * cfg.gap)


def reflection_pair(cfg: ShearConfig, omega, kx, ky):
    """Reflection coefficients (r_plus, r_minus) including their propagation factors.

    Broadcasts over array arguments; used by the force integrands.
    """
    k = np.hypot(kx, ky)
    r_plus = bare_reflection(doppler_eps(cfg, Side.UPPER, omega, kx)) * np.exp(
        -2.0 * k * cfg.z_plus
    )
    r_minus = bare_reflection(doppler_eps(cfg, Side.LOWER, omega, kx)) * np.exp(
        2.0 * k * cfg.z_minus
    )
    return r_plus, r_minus


def surface_coeffs(cfg: ShearConfig, pt: SpectralPoint) -> SurfaceCoefficients:
    """Reflection and transmission coefficients of both surfaces at one spectral point.

    Raises:
        ResonanceError: If either surface sits exactly on 1 + eps = 0
        PoleError: If a Doppler-shifted frequency hits a Drude pole
    """
    eps_plus = doppler_eps(cfg, Side.UPPER, pt.omega, pt.kx)
    eps_minus = doppler_eps(cfg, Side.LOWER, pt.omega, pt.kx)
    r_plus, r_minus = reflection_pair(cfg, pt.omega, pt.kx, pt.ky)
    return SurfaceCoefficients(
        r_plus=complex(r_plus),
        r_minus=complex(r_minus),
        t_plus=complex(2.0 * eps_plus / (1.0 + eps_plus)),
        t_minus=complex(2.0 * eps_minus / (1.0 + eps_minus)),
    )


def characteristic_value(cfg: ShearConfig, pt: SpectralPoint) -> complex:
    """D(omega, k) = 1 - r_plus r_minus; zeros are the natural modes."""
    coeffs = surface_coeffs(cfg, pt)
    return 1.0 - coeffs.r_plus * coeffs.r_minus


def _slab_factor(gamma: float, shift) -> np.ndarray:
    """Ascending coefficients of 2 w_s (w_s + i gamma) - 1 with w_s = omega - shift."""
    s = np.asarray(shift, dtype=complex)
    return np.stack(
        [2.0 * s * s - 2j * gamma * s - 1.0, 2j * gamma - 4.0 * s, np.full_like(s, 2.0)],
        axis=-1,
    )


def quartic_coefficients(cfg: ShearConfig, kx, ky) -> np.ndarray:
    """Quartic coefficients for one or many wavevectors, shape (..., 5), ascending."""
    kx = np.asarray(kx, dtype=float)
    a = _slab_factor(cfg.gamma, kx * cfg.v_upper)
    b = _slab_factor(cfg.gamma, kx * cfg.v_lower)
    coeffs = np.zeros(kx.shape + (5,), dtype=complex)
    for i in range(3):
        for j in range(3):
            coeffs[..., i + j] += a[..., i] * b[..., j]
    coeffs[..., 0] -= coupling_factor(cfg, np.hypot(kx, ky))
    return coeffs


def quartic_poly(cfg: ShearConfig, kx: float, ky: float = 0.0) -> QuarticPoly:
    """Q(omega) = [2 w_a (w_a + i gamma) - 1][2 w_b (w_b + i gamma) - 1] - e^{-2|k|L}.

    w_a = omega - kx v_upper, w_b = omega - kx v_lower. Q vanishes wherever
    1 - r_plus r_minus does, apart from coincidences with Drude poles.
    """
    return QuarticPoly(tuple(complex(c) for c in quartic_coefficients(cfg, kx, ky)))


def pole_factor(cfg: ShearConfig, kx, omega):
    """(2 u_a - 1)(2 u_b - 1) with u_s = w_s (w_s + i gamma); D = Q / pole_factor."""
    w = np.asarray(omega, dtype=complex)
    wa = w - kx * cfg.v_upper
    wb = w - kx * cfg.v_lower
    g = cfg.gamma
    return (2.0 * wa * (wa + 1j * g) - 1.0) * (2.0 * wb * (wb + 1j * g) - 1.0)


def drude_denominator(cfg: ShearConfig, kx, omega):
    """|w_a (w_a + i gamma) w_b (w_b + i gamma)|, small near spurious quartic roots."""
    w = np.asarray(omega, dtype=complex)
    wa = w - kx * cfg.v_upper
    wb = w - kx * cfg.v_lower
    g = cfg.gamma
    return np.abs(wa * (wa + 1j * g) * wb * (wb + 1j * g))


def lossless_dispersion(v: float, L: float, kx: float, ky: float = 0.0) -> tuple[complex, complex]:
    """Natural frequencies (omega_plus, omega_minus) of the lossless symmetric setup.

    omega_pm^2 = omega_sp^2 + (kx v/2)^2 pm omega_sp^2 sqrt(e^{-2|k|L} + (kx v/omega_sp)^2).
    The principal square root is returned, so an imaginary omega_minus flags the
    lossless instability.
    """
    if v < 0 or L <= 0:
        raise DomainError(f"lossless_dispersion needs v >= 0 and L > 0, got v={v}, L={L}")
    k = float(np.hypot(kx, ky))
    base = OMEGA_SP**2 + (kx * v / 2.0) ** 2
    spread = OMEGA_SP**2 * np.sqrt(np.exp(-2.0 * k * L) + (kx * v / OMEGA_SP) ** 2)
    return complex(np.sqrt(complex(base + spread))), complex(np.sqrt(complex(base - spread)))


def normalized_velocity(v: float, L: float) -> float:
    """v / (omega_sp L)."""
    return v / (OMEGA_SP * L)


def growth_estimate(v: float, L: float) -> float:
    """Gain rate kappa = omega_sp e^{-2 omega_sp L / v}; net growth is (kappa - gamma) / 2."""
    if v <= 0 or L <= 0:
        raise DomainError(f"growth_estimate needs v > 0 and L > 0, got v={v}, L={L}")
    return float(OMEGA_SP * np.exp(-2.0 * OMEGA_SP * L / v))


def critical_gamma_estimate(v: float, L: float) -> float:
    """Damping at which the estimated growth rate vanishes, omega_sp e^{-2 / v_bar}."""
    return growth_estimate(v, L)


def critical_velocity_estimate(gamma: float) -> float:
    """Critical normalised velocity -2 / log(gamma / omega_sp).

    Raises:
        DomainError: Unless 0 < gamma / omega_sp < 1
    """
    gamma_bar = gamma / OMEGA_SP
    if not 0 < gamma_bar < 1:
        raise DomainError(f"normalised damping must lie in (0, 1), got {gamma_bar}")
    return float(-2.0 / np.log(gamma_bar))


def critical_gap_estimate(gamma: float, v: float) -> float:
    """Gap below which the estimate predicts instability, (v / 2 omega_sp) log(omega_sp / gamma)."""
    if v <= 0:
        raise DomainError(f"critical_gap_estimate needs v > 0, got {v}")
    return float(v / (OMEGA_SP * critical_velocity_estimate(gamma)))
