"""Friction force on the lower slab: spectral density, nested quadrature and limit checks.

The force per unit area is F = int_{omega > 0} int d^2k density(omega, kx, ky).
The density is supported where exactly one slab amplifies, i.e. on
0 < omega < max(kx v_upper, kx v_lower) minus the region where both do; it
is identically zero elsewhere and never evaluated there.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NonConvergenceError, QflError, UnstableRegimeError
from .material import OMEGA_SP, ParameterKind, ShearConfig, Side, doppler_eps
from .quadrature import get_rule, integrate
from .scattering import drude_reflection, reflection_pair
from .stability import ScanSettings, default_k_max, ensure_stable, max_growth

logger = logging.getLogger(__name__)

DENSITY_PREFACTOR = 1.0 / (2.0 * np.pi**3)
CLUSTER_GAMMA = 0.05
NEAR_CRITICAL_RATIO = 1.05


class Regime(str, Enum):
    STABLE = "stable"
    UNSTABLE_REJECTED = "unstable-rejected"
    FAILED = "failed"


class IntegrandForm(str, Enum):
    """Evaluation path of the spectral density."""

    RR = "rr"
    COEFFICIENT = "coefficient"
    ONE_SLAB = "one-slab"


@dataclass(frozen=True)
class ForceResult:
    """Force per unit area in units hbar omega_p k_p^3."""

    value: float
    abs_error_estimate: float
    integrand_evaluations: int
    regime: Regime
    warnings: tuple = ()
    tolerance: float = float("nan")
    inner_unconverged: int = 0


@dataclass
class SpectralDensityGrid:
    """Density on an (omega, kx) grid; values[i, j] belongs to omega_axis[i], kx_axis[j]."""

    omega_axis: np.ndarray
    kx_axis: np.ndarray
    ky: float
    values: np.ndarray
    config: ShearConfig
    form: IntegrandForm
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


@dataclass(frozen=True)
class PlemeljReport:
    """Convergence of int Im r(omega) f(omega) d omega towards its delta-pair limit."""

    gammas: tuple
    values: tuple
    limit: float
    errors: tuple
    ratios: tuple
    order: float
    monotone: bool


def window_edge(cfg: ShearConfig, kx):
    """Upper edge max(kx v_upper, kx v_lower, 0) of the density support."""
    kx = np.asarray(kx, dtype=float)
    return np.maximum(np.maximum(kx * cfg.v_upper, kx * cfg.v_lower), 0.0)


def overlay_lines(cfg: ShearConfig, kx) -> dict[str, np.ndarray]:
    """Window edge and Doppler-shifted surface-plasmon lines omega = kx v_side +- omega_sp."""
    kx = np.asarray(kx, dtype=float)
    lines = {"window": window_edge(cfg, kx)}
    for side in Side:
        shift = kx * cfg.velocity(side)
        lines[f"{side.value}+"] = shift + OMEGA_SP
        lines[f"{side.value}-"] = shift - OMEGA_SP
    return lines


def _support(cfg: ShearConfig, omega, kx, ky):
    omega, kx, ky = (np.asarray(a, dtype=float) for a in np.broadcast_arrays(omega, kx, ky))
    lower = omega < kx * cfg.v_lower
    upper = omega < kx * cfg.v_upper
    mask = (omega > 0) & (lower != upper)
    return omega, kx, ky, lower, mask


def _doppler_reflections(cfg: ShearConfig, omega, kx, ky):
    k = np.hypot(kx, ky)
    r_plus = drude_reflection(cfg.gamma, omega - kx * cfg.v_upper) * np.exp(-2.0 * k * cfg.z_plus)
    r_minus = drude_reflection(cfg.gamma, omega - kx * cfg.v_lower) * np.exp(2.0 * k * cfg.z_minus)
    return r_plus, r_minus


def _rr_density(cfg: ShearConfig, omega, kx, ky=0.0) -> np.ndarray:
    omega, kx, ky, lower, mask = _support(cfg, omega, kx, ky)
    out = np.zeros(omega.shape)
    if mask.any():
        w, x, y = omega[mask], kx[mask], ky[mask]
        r_plus, r_minus = _doppler_reflections(cfg, w, x, y)
        sign = np.where(lower[mask], 1.0, -1.0)
        out[mask] = (
            sign
            * DENSITY_PREFACTOR
            * x
            * r_plus.imag
            * r_minus.imag
            / np.abs(1.0 - r_plus * r_minus) ** 2
        )
    return out


def _coefficient_density(cfg: ShearConfig, omega, kx, ky=0.0) -> np.ndarray:
    omega, kx, ky, lower, mask = _support(cfg, omega, kx, ky)
    out = np.zeros(omega.shape)
    if mask.any():
        w, x, y = omega[mask], kx[mask], ky[mask]
        k = np.hypot(x, y)
        eps_plus = doppler_eps(cfg, Side.UPPER, w, x)
        eps_minus = doppler_eps(cfg, Side.LOWER, w, x)
        r_plus, r_minus = reflection_pair(cfg, w, x, y)
        t_plus = 2.0 * eps_plus / (1.0 + eps_plus)
        t_minus = 2.0 * eps_minus / (1.0 + eps_minus)
        upper_weight = np.abs(t_plus * np.exp(-k * cfg.z_plus) / eps_plus) ** 2 * np.abs(
            eps_plus.imag
        )
        lower_weight = np.abs(t_minus * np.exp(k * cfg.z_minus) / eps_minus) ** 2 * np.abs(
            eps_minus.imag
        )
        lower_gain = lower[mask]
        numerator = np.where(
            lower_gain, x * r_plus.imag * lower_weight, -x * r_minus.imag * upper_weight
        )
        out[mask] = numerator / (4.0 * np.pi**3) / np.abs(1.0 - r_plus * r_minus) ** 2
    return out


def _one_slab_density(cfg: ShearConfig, omega, kx, ky=0.0) -> np.ndarray:
    omega, kx, ky = (np.asarray(a, dtype=float) for a in np.broadcast_arrays(omega, kx, ky))
    v = cfg.v_lower
    mask = (kx > 0) & (omega > 0) & (omega < kx * v)
    out = np.zeros(omega.shape)
    if mask.any():
        w, x, y = omega[mask], kx[mask], ky[mask]
        coupling = np.exp(-2.0 * np.hypot(x, y) * cfg.gap)
        r_rest = drude_reflection(cfg.gamma, w)
        r_moving = drude_reflection(cfg.gamma, w - x * v)
        out[mask] = (
            DENSITY_PREFACTOR
            * x
            * r_rest.imag
            * r_moving.imag
            * coupling
            / np.abs(1.0 - r_rest * r_moving * coupling) ** 2
        )
    return out


_DENSITIES: dict[IntegrandForm, Callable] = {
    IntegrandForm.RR: _rr_density,
    IntegrandForm.COEFFICIENT: _coefficient_density,
    IntegrandForm.ONE_SLAB: _one_slab_density,
}


def _as_output(values: np.ndarray, omega, kx, ky):
    return float(values) if all(np.ndim(a) == 0 for a in (omega, kx, ky)) else values


def integrand_rr_form(cfg: ShearConfig, omega, kx, ky=0.0):
    """Spectral density from the reflection product, +-kx Im r+ Im r- / (2 pi^3 |1 - r+ r-|^2).

    The sign is + where the lower slab amplifies and - where the upper one does.

    Raises:
        UnstableRegimeError: If the configuration has growing natural modes
    """
    ensure_stable(cfg)
    return _as_output(_rr_density(cfg, omega, kx, ky), omega, kx, ky)


def integrand_coeff_form(cfg: ShearConfig, omega, kx, ky=0.0):
    """Spectral density from transmission coefficients and |Im eps| of the amplifying slab.

    Equal to integrand_rr_form through |t e^{-+|k| z}/eps|^2 |Im eps| = 2 |Im r|.

    Raises:
        UnstableRegimeError: If the configuration has growing natural modes
    """
    ensure_stable(cfg)
    return _as_output(_coefficient_density(cfg, omega, kx, ky), omega, kx, ky)


def spectral_density_grid(
    cfg: ShearConfig,
    omega_range: tuple[float, float],
    kx_range: tuple[float, float],
    n_omega: int,
    n_kx: int,
    ky: float = 0.0,
    form: IntegrandForm = IntegrandForm.RR,
) -> SpectralDensityGrid:
    """Density sampled on a uniform (omega, kx) grid."""
    if n_omega < 1 or n_kx < 1:
        raise ValueError(f"grid sizes must be positive, got n_omega={n_omega}, n_kx={n_kx}")
    ensure_stable(cfg)
    form = IntegrandForm(form)
    omega_axis = np.linspace(*omega_range, n_omega)
    kx_axis = np.linspace(*kx_range, n_kx)
    omega, kx = np.meshgrid(omega_axis, kx_axis, indexing="ij")
    values = _DENSITIES[form](cfg, omega, kx, ky)
    logger.debug(f"Density grid {n_omega}x{n_kx}, peak |density|={np.abs(values).max():.3e}")
    return SpectralDensityGrid(omega_axis, kx_axis, ky, values, cfg, form)


@dataclass(frozen=True)
class _ForceProblem:
    cfg: ShearConfig
    form: IntegrandForm
    rule: str
    rel_tol: float
    k_max: float
    max_intervals: int


@dataclass(frozen=True)
class _PanelOutcome:
    value: float
    error: float
    evaluations: int
    converged: bool
    worst_interval: Optional[tuple[float, float]]
    inner_unconverged: int = 0


def _clustered(centres: Sequence[float], width: float) -> list[float]:
    points = list(centres)
    if 0 < width < CLUSTER_GAMMA:
        for c in centres:
            points.extend([c - 4 * width, c - width, c + width, c + 4 * width])
    return points


def _omega_points(cfg: ShearConfig, kx: float) -> list[float]:
    ridges = [kx * cfg.velocity(side) + s * OMEGA_SP for side in Side for s in (-1.0, 1.0)]
    return _clustered(ridges, cfg.gamma)


def _omega_integral(problem: _ForceProblem, kx: float, ky: float) -> tuple[float, float, int, bool]:
    cfg = problem.cfg
    edge = float(window_edge(cfg, kx))
    if edge <= 0:
        return 0.0, 0.0, 0, True
    density = _DENSITIES[problem.form]
    result = integrate(
        lambda w: density(cfg, w, kx, ky),
        0.0,
        edge,
        points=_omega_points(cfg, kx),
        rel_tol=problem.rel_tol / 200,
        rule=get_rule(problem.rule),
        max_intervals=problem.max_intervals,
        raise_on_failure=False,
    )
    return result.value, result.error, result.evaluations, result.converged


def _ky_integral(problem: _ForceProblem, kx: float) -> tuple[float, float, int, int]:
    """ky integral at fixed kx; the last entry counts unconverged omega and ky integrals."""
    evaluations = 0
    unconverged = 0

    def integrand(ky: np.ndarray) -> np.ndarray:
        nonlocal evaluations, unconverged
        out = np.empty((ky.size, 2))
        for i, y in enumerate(ky):
            value, error, n, converged = _omega_integral(problem, kx, float(y))
            out[i] = value, error
            evaluations += n
            unconverged += not converged
        return out

    result = integrate(
        integrand,
        0.0,
        problem.k_max,
        points=(1.0 / problem.cfg.gap,),
        rel_tol=problem.rel_tol / 20,
        rule=get_rule(problem.rule),
        max_intervals=problem.max_intervals,
        raise_on_failure=False,
    )
    unconverged += not result.converged
    # density is even in ky
    error = 2.0 * (result.error + abs(result.extras[0]))
    return 2.0 * result.value, error, evaluations, unconverged


def _kx_panel(problem: _ForceProblem, a: float, b: float) -> _PanelOutcome:
    evaluations = 0
    inner_unconverged = 0

    def integrand(kx: np.ndarray) -> np.ndarray:
        nonlocal evaluations, inner_unconverged
        out = np.empty((kx.size, 2))
        for i, x in enumerate(kx):
            value, error, n, unconverged = _ky_integral(problem, float(x))
            out[i] = value, error
            evaluations += n
            inner_unconverged += unconverged
        return out

    result = integrate(
        integrand,
        a,
        b,
        rel_tol=problem.rel_tol / 2,
        rule=get_rule(problem.rule),
        max_intervals=problem.max_intervals,
        raise_on_failure=False,
    )
    logger.debug(f"kx panel [{a:.4g}, {b:.4g}]: {result.value:.6e} +- {result.error:.2e}")
    return _PanelOutcome(
        value=result.value,
        error=result.error + abs(float(result.extras[0])),
        evaluations=evaluations,
        converged=result.converged,
        worst_interval=result.worst_interval,
        inner_unconverged=inner_unconverged,
    )


def _kx_breakpoints(cfg: ShearConfig, k_max: float, argmax_kx: float) -> list[float]:
    dv = abs(cfg.relative_velocity)
    resonance = 2.0 * OMEGA_SP / dv
    points = [OMEGA_SP / dv, argmax_kx]
    points += _clustered([resonance], cfg.gamma / dv) if cfg.gamma > 0 else [resonance]
    return sorted({p for p in points if 0 < p < k_max})


def total_force(
    cfg: ShearConfig,
    rel_tol: float = 1e-3,
    *,
    form: IntegrandForm = IntegrandForm.RR,
    rule: str = "gk15",
    use_mirror: bool = True,
    workers: int = 1,
    settings: Optional[ScanSettings] = None,
    max_intervals: int = 400,
) -> ForceResult:
    """Friction force per unit area by nested adaptive quadrature (omega, then ky, then kx).

    The kx axis is split into panels at the Doppler resonance and the growth
    maximiser; panels run concurrently when workers > 1 and are summed in
    panel order. Symmetric configurations integrate kx > 0 only and double.
    Within 5% of the critical damping the tolerance is relaxed tenfold and a
    warning is attached.

    Args:
        cfg: Configuration, must be stable
        rel_tol: Requested relative tolerance
        form: Integrand evaluation path
        rule: Quadrature rule name ("gk15" or "gl10-20")
        use_mirror: Use the kx mirror symmetry when the setup is symmetric
        workers: Process count for kx panels
        settings: Wavenumber scan settings for the stability check
        max_intervals: Subdivision budget per one-dimensional integral

    Returns:
        ForceResult with the value and the composed error estimate

    Raises:
        UnstableRegimeError: If the configuration is not stable
        NonConvergenceError: If an outer panel exhausts its budget or the composed
            error exceeds tolerance x |F|
    """
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    form = IntegrandForm(form)
    report = ensure_stable(cfg, settings)
    warnings = []
    tolerance = rel_tol
    near_critical = cfg.with_gamma(cfg.gamma / NEAR_CRITICAL_RATIO)
    if cfg.gamma > 0 and not max_growth(near_critical, settings).stable:
        tolerance = 10 * rel_tol
        message = (
            f"gamma={cfg.gamma} is within {100 * (NEAR_CRITICAL_RATIO - 1):.0f}% of the critical "
            f"damping; tolerance relaxed to {tolerance:g}"
        )
        warnings.append(message)
        logger.warning(message)

    if form is IntegrandForm.ONE_SLAB and (cfg.v_upper != 0 or cfg.v_lower <= 0):
        raise DomainError("the one-slab integrand needs v_upper = 0 and v_lower > 0")
    if cfg.relative_velocity == 0:
        return ForceResult(0.0, 0.0, 0, Regime.STABLE, tuple(warnings), tolerance)

    k_max = (settings.k_max if settings and settings.k_max else None) or default_k_max(cfg)
    problem = _ForceProblem(cfg, form, rule, tolerance, k_max, max_intervals)
    positive = _kx_breakpoints(cfg, k_max, report.argmax_kx)
    mirror = use_mirror and cfg.is_symmetric

    panels = []
    if max(cfg.v_upper, cfg.v_lower) > 0:
        edges = [0.0, *positive, k_max]
        panels += list(zip(edges[:-1], edges[1:]))
    if not mirror and min(cfg.v_upper, cfg.v_lower) < 0:
        edges = [-k_max, *(-p for p in reversed(positive)), 0.0]
        panels += list(zip(edges[:-1], edges[1:]))

    logger.info(
        f"Force: gamma={cfg.gamma} v=({cfg.v_upper}, {cfg.v_lower}) L={cfg.gap} "
        f"form={form.value} rule={rule} panels={len(panels)} tol={tolerance:g}"
    )
    if workers > 1 and len(panels) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outcomes = list(
                executor.map(
                    _kx_panel,
                    [problem] * len(panels),
                    [a for a, _ in panels],
                    [b for _, b in panels],
                )
            )
    else:
        outcomes = [_kx_panel(problem, a, b) for a, b in panels]

    factor = 2.0 if mirror else 1.0
    value = factor * sum(o.value for o in outcomes)
    error = factor * sum(o.error for o in outcomes)
    evaluations = sum(o.evaluations for o in outcomes)
    inner_unconverged = sum(o.inner_unconverged for o in outcomes)
    if inner_unconverged:
        message = f"{inner_unconverged} inner omega/ky integrals exhausted their budget"
        warnings.append(message)
        logger.warning(message)

    failed = [o for o in outcomes if not o.converged]
    if failed or error > tolerance * abs(value):
        worst = max(failed or outcomes, key=lambda o: o.error)
        raise NonConvergenceError(
            f"force quadrature did not converge (estimate {value:.6e} +- {error:.2e}, "
            f"tolerance {tolerance:g} x |F|, {inner_unconverged} unconverged inner integrals); "
            f"worst kx subinterval [{worst.worst_interval[0]:.6g}, {worst.worst_interval[1]:.6g}]",
            worst_interval=worst.worst_interval,
        )
    logger.info(f"Force F={value:.6e} +- {error:.2e} ({evaluations} integrand evaluations)")
    return ForceResult(
        value, error, evaluations, Regime.STABLE, tuple(warnings), tolerance, inner_unconverged
    )


def force_sweep(
    cfg_template: ShearConfig,
    parameter: ParameterKind,
    values: Sequence[float],
    rel_tol: float = 1e-3,
    **kwargs,
) -> list[ForceResult]:
    """total_force along one parameter; unstable or failed points are reported in-band."""
    kind = ParameterKind(parameter)
    results = []
    for value in values:
        cfg = cfg_template.with_parameter(kind, value)
        try:
            result = total_force(cfg, rel_tol, **kwargs)
        except UnstableRegimeError as e:
            result = ForceResult(float("nan"), float("nan"), 0, Regime.UNSTABLE_REJECTED, (str(e),))
        except QflError as e:
            result = ForceResult(float("nan"), float("nan"), 0, Regime.FAILED, (str(e),))
        logger.info(f"Sweep {kind.value}={value:g}: F={result.value:.6e} [{result.regime.value}]")
        results.append(result)
    return results


def force_lower_only(
    gamma: float, v: float, L: float, rel_tol: float = 1e-3, **kwargs
) -> ForceResult:
    """Force with the upper slab at rest and the lower slab moving at v.

    Integrates kx Im r(omega) Im r(omega - kx v) e^{-2|k|L} / (2 pi^3 |1 - r r e^{-2|k|L}|^2)
    over kx > 0, 0 < omega < kx v.
    """
    cfg = ShearConfig.lower_only(gamma, v, L)
    form = IntegrandForm.ONE_SLAB if v > 0 else IntegrandForm.RR
    return total_force(cfg, rel_tol, form=form, use_mirror=False, **kwargs)


def force_lossless_weak(v: float, L: float) -> float:
    """Lossless weak-coupling force -(omega_sp^3 / 4 pi v^2) int e^{-2 L sqrt(K^2 + ky^2)} dky.

    K = 2 omega_sp / v; the even ky integrand is truncated where the exponent reaches 40.
    """
    if v <= 0 or L <= 0:
        raise DomainError(f"force_lossless_weak needs v > 0 and L > 0, got v={v}, L={L}")
    K = 2.0 * OMEGA_SP / v
    limit = 20.0 / L
    ky_max = np.sqrt(limit**2 - K**2) if limit > K else 1.0 / L
    integral, _ = quad(
        lambda ky: np.exp(-2.0 * L * np.sqrt(K**2 + ky**2)),
        0.0,
        ky_max,
        epsabs=0.0,
        epsrel=1e-10,
        limit=200,
    )
    return float(-(OMEGA_SP**3) / (4.0 * np.pi * v**2) * 2.0 * integral)


def plemelj_check(
    gamma_sequence: Sequence[float],
    test_function: Callable[[np.ndarray], np.ndarray],
    omega_cutoff: float = 200.0,
) -> PlemeljReport:
    """Compare int Im r(omega) f(omega) d omega with (pi omega_sp / 2)(f(-omega_sp) - f(omega_sp)).

    r(omega) = 1 / (2 omega (omega + i gamma) - 1) is the bare reflection; the
    integral runs over [-omega_cutoff, omega_cutoff].
    """
    gammas = [float(g) for g in gamma_sequence]
    if len(gammas) < 2 or any(g <= 0 for g in gammas):
        raise ValueError("plemelj_check needs at least two positive damping values")
    edges = test_function(np.array([-OMEGA_SP, OMEGA_SP]))
    limit = float(np.pi * OMEGA_SP / 2.0 * (edges[0] - edges[1]))
    values = []
    for gamma in gammas:
        centres = [-OMEGA_SP, OMEGA_SP]
        points = [0.0, *centres]
        for c in centres:
            points += [c - 4 * gamma, c - gamma, c + gamma, c + 4 * gamma]
        result = integrate(
            lambda w: drude_reflection(gamma, w).imag * test_function(w),
            -omega_cutoff,
            omega_cutoff,
            points=points,
            rel_tol=1e-10,
            abs_tol=1e-13,
            max_intervals=5000,
        )
        values.append(result.value)
    errors = np.abs(np.array(values) - limit)
    ratios = errors[1:] / errors[:-1]
    order = float(np.polyfit(np.log(gammas), np.log(np.maximum(errors, 1e-300)), 1)[0])
    return PlemeljReport(
        gammas=tuple(gammas),
        values=tuple(float(x) for x in values),
        limit=limit,
        errors=tuple(float(e) for e in errors),
        ratios=tuple(float(r) for r in ratios),
        order=order,
        monotone=bool(np.all(np.diff(errors) < 0)),
    )
