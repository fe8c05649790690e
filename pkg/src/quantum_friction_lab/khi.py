"""Kelvin-Helmholtz dispersion and its correspondence with the low-frequency shear problem."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .material import ShearConfig
from .stability import solve_roots

logger = logging.getLogger(__name__)

DEFAULT_DRIFT_GAPS = tuple(np.geomspace(1e-1, 1e-3, 5))
DEFAULT_DRIFT_GAMMAS = tuple(np.geomspace(1e-3, 1e-6, 5))


@dataclass(frozen=True)
class KhiConfig:
    """Two identical inviscid fluids with x-velocities v_plus (z > 0) and v_minus (z < 0)."""

    v_plus: float
    v_minus: float

    @classmethod
    def symmetric(cls, v: float) -> "KhiConfig":
        """Same velocities as ShearConfig.symmetric: -v/2 above, +v/2 below."""
        return cls(v_plus=-v / 2.0, v_minus=v / 2.0)

    @classmethod
    def from_shear(cls, cfg: ShearConfig) -> "KhiConfig":
        return cls(v_plus=cfg.v_upper, v_minus=cfg.v_lower)


@dataclass(frozen=True)
class DriftSample:
    """Low-frequency quartic roots at one (L, gamma) compared with the KHI pair."""

    L: float
    gamma: float
    roots: tuple
    relative_error: float


@dataclass(frozen=True)
class CorrespondenceReport:
    v: float
    kx: float
    khi_roots: tuple
    low_frequency_roots: tuple
    algebraic_residual: float
    drift: tuple


def khi_dispersion(cfg: KhiConfig, kx: float) -> tuple[complex, complex]:
    """omega = kx (v+ + v-)/2 +- i kx (v+ - v-)/2.

    Follows from decaying pressure solutions e^{-+|kx| z} matched by pressure
    continuity and the kinematic condition on both sides of the interface.

    Raises:
        DomainError: If kx = 0
    """
    if kx == 0:
        raise DomainError("khi_dispersion needs kx != 0")
    mean = kx * (cfg.v_plus + cfg.v_minus) / 2.0
    spread = kx * (cfg.v_plus - cfg.v_minus) / 2.0
    return complex(mean, spread), complex(mean, -spread)


def khi_max_growth(cfg: KhiConfig, kx: float) -> float:
    """|kx| |v+ - v-| / 2; positive for any shear."""
    return max(r.imag for r in khi_dispersion(cfg, kx))


def low_frequency_eps(omega, kx: float, velocity: float):
    """Drude permittivity far below the plasma frequency, -1 / (omega - kx v)^2."""
    return -1.0 / (np.asarray(omega) - kx * velocity) ** 2


def low_frequency_roots(cfg: KhiConfig, kx: float) -> np.ndarray:
    """Roots of eps_+ + eps_- = 0 with the low-frequency permittivity.

    Cleared of denominators: 2 omega^2 - 2 kx (v+ + v-) omega + kx^2 (v+^2 + v-^2) = 0.
    """
    return np.roots(
        [2.0, -2.0 * kx * (cfg.v_plus + cfg.v_minus), kx**2 * (cfg.v_plus**2 + cfg.v_minus**2)]
    )


def _matched_error(candidates: Sequence[complex], targets: Sequence[complex]) -> tuple[list, float]:
    candidates = np.asarray(candidates, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    cost = np.abs(targets[:, None] - candidates[None, :])
    rows, cols = linear_sum_assignment(cost)
    matched = candidates[cols]
    scale = np.maximum(np.abs(targets[rows]), np.finfo(float).tiny)
    return list(matched), float(np.max(cost[rows, cols] / scale))


def correspondence_check(
    v: float,
    kx: float,
    gaps: Optional[Sequence[float]] = None,
    gammas: Optional[Sequence[float]] = None,
) -> CorrespondenceReport:
    """Compare the KHI pair with the low-frequency and full shear spectra.

    The algebraic layer matches the roots of eps_+ + eps_- = 0 against
    khi_dispersion. The drift layer solves the full quartic of the symmetric
    setup along a (L, gamma) sequence shrinking towards zero and reports the
    relative distance of its two roots nearest the KHI pair.

    Raises:
        DomainError: If v <= 0 or kx = 0
    """
    if v <= 0:
        raise DomainError(f"correspondence_check needs v > 0, got {v}")
    gaps = DEFAULT_DRIFT_GAPS if gaps is None else tuple(gaps)
    gammas = DEFAULT_DRIFT_GAMMAS if gammas is None else tuple(gammas)
    if len(gaps) != len(gammas):
        raise ValueError(f"drift sequence lengths differ: {len(gaps)} gaps, {len(gammas)} gammas")

    khi_cfg = KhiConfig.symmetric(v)
    khi_roots = khi_dispersion(khi_cfg, kx)
    algebraic, residual = _matched_error(low_frequency_roots(khi_cfg, kx), khi_roots)

    drift = []
    for L, gamma in zip(gaps, gammas):
        roots = solve_roots(ShearConfig.symmetric(float(gamma), v, float(L)), kx).roots
        matched, error = _matched_error(roots, khi_roots)
        drift.append(DriftSample(float(L), float(gamma), tuple(matched), error))
        logger.debug(f"KHI drift L={L:.3g} gamma={gamma:.3g}: relative error {error:.3e}")

    return CorrespondenceReport(
        v=v,
        kx=kx,
        khi_roots=khi_roots,
        low_frequency_roots=tuple(complex(r) for r in algebraic),
        algebraic_residual=residual,
        drift=tuple(drift),
    )
