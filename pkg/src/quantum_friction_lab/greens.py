"""Quasi-static scalar and dyadic Green's functions of the two-slab geometry.

The scalar kernel solves d/dz(eps dh/dz) - eps |k|^2 h = -delta(z - z2) in the
layered profile eps_minus | vacuum | eps_plus and is built from the two
homogeneous solutions psi_L (decaying towards -inf) and psi_R (decaying towards
+inf). In every region each solution is A e^{|k|(z - ref)} + B e^{-|k|(z - ref)},
so z-derivatives are taken term by term and never numerically.

The scalar amplitude is g = eps(z2) h and the dyad is -D1 D2^T h with
D1 = (i kx, i ky, d/dz1) and the adjoint source operator D2 = (i kx, i ky, -d/dz2).
Delta prefactors in frequency and wavevector are stripped throughout.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, IdentityViolationError, ResonanceError
from .material import ShearConfig, Side, SpectralPoint, slab_eps
from .scattering import characteristic_value
from .stability import ensure_stable

logger = logging.getLogger(__name__)

P_ROTATION = np.diag([-1.0, -1.0, 1.0])
"""180 degree rotation about z."""

SYSTEM_RESONANCE_FLOOR = 1e-14
IDENTITY_TOL = 1e-10


class Region(str, Enum):
    """Layer of the permittivity profile."""

    UPPER = "upper"
    GAP = "gap"
    LOWER = "lower"


@dataclass(frozen=True)
class GreensEval:
    """Scalar amplitude and 3x3 dyad for one (z1, z2) pair."""

    g: complex
    dyad: np.ndarray
    source_side: Region
    z1: float
    z2: float


def region_of(cfg: ShearConfig, z: float) -> Region:
    """Region containing z; the interfaces belong to the gap."""
    if z > cfg.z_plus:
        return Region.UPPER
    if z < cfg.z_minus:
        return Region.LOWER
    return Region.GAP


def _eps_at(eps_plus: complex, eps_minus: complex, region: Region) -> complex:
    if region is Region.UPPER:
        return eps_plus
    if region is Region.LOWER:
        return eps_minus
    return 1.0 + 0j


@dataclass(frozen=True)
class _Layered:
    """Homogeneous solutions of the layered Poisson problem at one spectral point."""

    cfg: ShearConfig
    k: float
    eps_plus: complex
    eps_minus: complex

    def _left(self, region: Region) -> tuple[complex, complex, float]:
        L = self.cfg.gap
        a = (1 + self.eps_minus) / 2
        b = (1 - self.eps_minus) / 2
        if region is Region.LOWER:
            return 1.0 + 0j, 0j, self.cfg.z_minus
        if region is Region.GAP:
            return a, b, self.cfg.z_minus
        g0 = a * np.exp(self.k * L) + b * np.exp(-self.k * L)
        g1 = a * np.exp(self.k * L) - b * np.exp(-self.k * L)
        return (g0 + g1 / self.eps_plus) / 2, (g0 - g1 / self.eps_plus) / 2, self.cfg.z_plus

    def _right(self, region: Region) -> tuple[complex, complex, float]:
        L = self.cfg.gap
        p = (1 - self.eps_plus) / 2
        q = (1 + self.eps_plus) / 2
        if region is Region.UPPER:
            return 0j, 1.0 + 0j, self.cfg.z_plus
        if region is Region.GAP:
            return p, q, self.cfg.z_plus
        h0 = p * np.exp(-self.k * L) + q * np.exp(self.k * L)
        h1 = p * np.exp(-self.k * L) - q * np.exp(self.k * L)
        return (h0 + h1 / self.eps_minus) / 2, (h0 - h1 / self.eps_minus) / 2, self.cfg.z_minus

    def evaluate(self, which: str, z: float) -> tuple[complex, complex]:
        """(value, dz value) of psi_L ("left") or psi_R ("right") at z."""
        region = region_of(self.cfg, z)
        grow, decay, ref = self._left(region) if which == "left" else self._right(region)
        up = grow * np.exp(self.k * (z - ref))
        down = decay * np.exp(-self.k * (z - ref))
        return complex(up + down), complex(self.k * (up - down))

    @property
    def normalisation(self) -> complex:
        """C = 2 |k| eps_minus n, minus the conserved flux Wronskian."""
        _, n, _ = self._right(Region.LOWER)
        return complex(2 * self.k * self.eps_minus * n)


def _layered(cfg: ShearConfig, pt: SpectralPoint) -> _Layered:
    if pt.k <= 0:
        raise DomainError("Green's functions need |k| > 0")
    if complex(pt.omega).imag == 0:
        ensure_stable(cfg)
    d = characteristic_value(cfg, pt)
    if abs(d) < SYSTEM_RESONANCE_FLOOR:
        raise ResonanceError(f"system resonance: |1 - r+ r-| = {abs(d):.3e} at {pt}")
    return _Layered(cfg, pt.k, slab_eps(cfg, Side.UPPER, pt), slab_eps(cfg, Side.LOWER, pt))


def _factors(layers: _Layered, z1: float, z2: float):
    """Values and derivatives of the z1 and z2 factors of h(z1, z2)."""
    if z1 <= z2:
        return layers.evaluate("left", z1), layers.evaluate("right", z2)
    return layers.evaluate("right", z1), layers.evaluate("left", z2)


def poisson_kernel(cfg: ShearConfig, pt: SpectralPoint, z1: float, z2: float) -> complex:
    """Scalar amplitude g = eps(z2) h(z1, z2) for any pair of positions.

    Evaluations at real omega on unstable configurations raise UnstableRegimeError.
    """
    layers = _layered(cfg, pt)
    (f, _), (q, _) = _factors(layers, z1, z2)
    source_eps = _eps_at(layers.eps_plus, layers.eps_minus, region_of(cfg, z2))
    return complex(source_eps * f * q / layers.normalisation)


def _validate_layout(cfg: ShearConfig, z1: float, z2: float, source_side: Side) -> None:
    if region_of(cfg, z1) is not Region.GAP or z1 in (cfg.z_minus, cfg.z_plus):
        raise DomainError(f"observation point z1={z1} must lie strictly inside the gap")
    expected = Region.UPPER if Side(source_side) is Side.UPPER else Region.LOWER
    if region_of(cfg, z2) is not expected:
        raise DomainError(f"source point z2={z2} must lie in the {expected.value} slab")


def scalar_g(
    cfg: ShearConfig, pt: SpectralPoint, z1: float, z2: float, source_side: Side
) -> complex:
    """Gap-point response to a source inside one slab.

    For an upper source this equals t+ (1 + r- e^{-2|k| z1}) e^{|k|(z1 - z2)} /
    (2 |k| (1 - r+ r-)), and the mirrored expression for a lower source.

    Raises:
        DomainError: If z1 is not in the gap or z2 not in the source slab
        ResonanceError: On |1 - r+ r-| below 1e-14
        UnstableRegimeError: At real omega for an unstable configuration
    """
    _validate_layout(cfg, z1, z2, source_side)
    return poisson_kernel(cfg, pt, z1, z2)


def dyadic_G(
    cfg: ShearConfig,
    pt: SpectralPoint,
    z1: float,
    z2: float,
    source_side: Optional[Side] = None,
) -> GreensEval:
    """Dyadic Green's function -D1 D2^T h applied term by term.

    With source_side set, the layout is validated as in scalar_g; otherwise
    any pair of positions is accepted.
    """
    if source_side is not None:
        _validate_layout(cfg, z1, z2, source_side)
    layers = _layered(cfg, pt)
    (f, df), (q, dq) = _factors(layers, z1, z2)
    d1 = np.array([1j * pt.kx * f, 1j * pt.ky * f, df])
    d2 = np.array([1j * pt.kx * q, 1j * pt.ky * q, -dq])
    dyad = -np.outer(d1, d2) / layers.normalisation
    region = region_of(cfg, z2)
    g = _eps_at(layers.eps_plus, layers.eps_minus, region) * f * q / layers.normalisation
    return GreensEval(g=complex(g), dyad=dyad, source_side=region, z1=z1, z2=z2)


def _relative(difference: np.ndarray, reference: np.ndarray) -> float:
    scale = np.linalg.norm(reference)
    return float(np.linalg.norm(difference) / scale) if scale > 0 else float(np.linalg.norm(difference))


def rotation_residual(cfg: ShearConfig, pt: SpectralPoint, z1: float, z2: float) -> float:
    """|| G_dual(k) - P G(-k) P || / || G_dual(k) ||."""
    dual = dyadic_G(cfg.dual(), pt, z1, z2).dyad
    rotated = P_ROTATION @ dyadic_G(cfg, pt.mirrored(), z1, z2).dyad @ P_ROTATION
    return _relative(dual - rotated, dual)


def worst_rotation_residual(cfg: ShearConfig, samples: int = 16, seed: int = 12345) -> float:
    """Largest rotation residual over gap points sampled off the real axis (Im omega > 0)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        pt = SpectralPoint(
            complex(rng.uniform(0.05, 1.5), rng.uniform(0.05, 0.5)),
            float(rng.uniform(-20, 20)),
            float(rng.uniform(-5, 5)),
        )
        z1, z2 = rng.uniform(cfg.z_minus, cfg.z_plus, size=2)
        worst = max(worst, rotation_residual(cfg, pt, float(z1), float(z2)))
    return worst


def rotation_dual(
    cfg: ShearConfig, samples: int = 16, seed: int = 12345, tol: float = IDENTITY_TOL
) -> ShearConfig:
    """Velocity-reversed dual, verified against the 180 degree rotation identity.

    Sampling stays off the real axis, so the check applies to unstable
    configurations as well.

    Raises:
        IdentityViolationError: If any sampled residual exceeds tol
    """
    worst = worst_rotation_residual(cfg, samples, seed)
    if worst > tol:
        raise IdentityViolationError(f"rotation identity violated: residual {worst:.3e} > {tol:g}")
    logger.debug(f"Rotation identity holds to {worst:.3e} on {samples} samples")
    return cfg.dual()


def reciprocity_residual(cfg: ShearConfig, pt: SpectralPoint, z1: float, z2: float) -> float:
    """|| G(cfg, k; z1, z2) - G(dual, -k; z2, z1)^T || / || G ||."""
    forward = dyadic_G(cfg, pt, z1, z2).dyad
    backward = dyadic_G(cfg.dual(), pt.mirrored(), z2, z1).dyad
    return _relative(forward - backward.T, forward)


def null_friction_residual(cfg: ShearConfig, pt: SpectralPoint, z1: float, z2: float) -> float:
    """|x-z element of G(z1, z2) + G(z2, z1)^T| / max(||G(z1, z2)||, ||G(z2, z1)||)."""
    g12 = dyadic_G(cfg, pt, z1, z2).dyad
    g21 = dyadic_G(cfg, pt, z2, z1).dyad
    scale = max(np.linalg.norm(g12), np.linalg.norm(g21))
    return float(abs((g12 + g21.T)[0, 2]) / scale) if scale > 0 else 0.0


def naive_kernel_sign(
    cfg: ShearConfig,
    pt: SpectralPoint,
    z3: float,
    z1: Optional[float] = None,
    u: Optional[np.ndarray] = None,
) -> float:
    """Im eps(z3) |G(z1, z3)^dagger u|^2, the unmodified fluctuation-dissipation weight.

    Negative inside a gain window, where the passive kernel would assign a
    negative noise power.

    Args:
        cfg: Configuration
        pt: Real-frequency spectral point
        z3: Source position inside a slab
        z1: Gap position, the gap midpoint by default
        u: Unit probe vector, (1, 1, 1) / sqrt(3) by default

    Raises:
        DomainError: If z3 is not inside a slab
    """
    region = region_of(cfg, z3)
    if region is Region.GAP:
        raise DomainError(f"z3={z3} must lie inside a slab")
    z1 = 0.5 * (cfg.z_minus + cfg.z_plus) if z1 is None else z1
    u = np.ones(3) / np.sqrt(3.0) if u is None else np.asarray(u, dtype=float)
    side = Side.UPPER if region is Region.UPPER else Side.LOWER
    dyad = dyadic_G(cfg, pt, z1, z3).dyad
    amplitude = np.conj(dyad).T @ u
    return float(slab_eps(cfg, side, pt).imag * np.vdot(amplitude, amplitude).real)
