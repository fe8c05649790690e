"""Natural-mode roots, root loci, the growth functional M and critical-parameter searches."""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import bisect, linear_sum_assignment, minimize_scalar

from .errors import (
    BoundaryError,
    ConvergenceError,
    DomainError,
    NoSignChangeError,
    QflError,
    UnstableRegimeError,
)
from .material import OMEGA_SP, ParameterKind, ShearConfig
from .scattering import (
    SPURIOUS_FLOOR,
    coupling_factor,
    critical_gamma_estimate,
    critical_gap_estimate,
    critical_velocity_estimate,
    drude_denominator,
    pole_factor,
    quartic_coefficients,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
"""Largest accepted normalised quartic residual |Q(root)| / max |c_i|."""

GROWTH_TIE_TOL = 1e-10

DEFAULT_BRACKETS = {
    ParameterKind.GAMMA: (1e-4, 1.0),
    ParameterKind.VELOCITY: (1e-3, 0.99),
    ParameterKind.GAP: (1e-3, 50.0),
}

# Sign of dM/dparameter, checked by the pre-scan
_GROWTH_DIRECTION = {
    ParameterKind.GAMMA: -1,
    ParameterKind.VELOCITY: +1,
    ParameterKind.GAP: -1,
}


@dataclass(frozen=True)
class ScanSettings:
    """Wavenumber scan used by max_growth.

    k_max=None selects default_k_max(cfg).
    """

    k_min: float = 1e-3
    n_points: int = 400
    xatol: float = 1e-6
    k_max: Optional[float] = None
    spurious_floor: float = SPURIOUS_FLOOR
    newton_steps: int = 3

    def __post_init__(self):
        if self.k_min <= 0:
            raise ValueError(f"k_min must be positive, got {self.k_min}")
        if self.n_points < 3:
            raise ValueError(f"n_points must be at least 3, got {self.n_points}")
        if self.k_max is not None and self.k_max <= self.k_min:
            raise ValueError(f"k_max must exceed k_min, got {self.k_max} <= {self.k_min}")


@dataclass(frozen=True)
class RootSet:
    """The four quartic roots at one wavevector.

    Roots are sorted by real then imaginary part; branch_ids[i] names the
    locus branch of roots[i] (identity order outside root_locus).
    """

    roots: tuple
    residuals: tuple
    spurious: tuple
    kx: float
    ky: float = 0.0
    branch_ids: tuple = (0, 1, 2, 3)

    @property
    def max_imag(self) -> float:
        """Largest Im omega over non-spurious roots."""
        values = [r.imag for r, s in zip(self.roots, self.spurious) if not s]
        return max(values) if values else float("-inf")

    def by_branch(self) -> list[complex]:
        """Roots reordered so that index i holds branch i."""
        ordered = [0j] * len(self.roots)
        for root, branch in zip(self.roots, self.branch_ids):
            ordered[branch] = root
        return ordered


@dataclass(frozen=True)
class StabilityReport:
    """Result of max_growth: M = max over kx of the largest Im omega."""

    max_growth: float
    argmax_kx: float
    stable: bool
    scan_resolution: float
    k_max: float
    extended: bool = False


@dataclass(frozen=True)
class CriticalValue:
    """Parameter value where M changes sign."""

    parameter: ParameterKind
    value: float
    bracket: tuple[float, float]
    iterations: int
    estimate: Optional[float] = None


@dataclass
class StabilityDiagram:
    """Critical damping on a (gap, velocity) grid, rows indexed by gap."""

    velocities: np.ndarray
    gaps: np.ndarray
    gamma_cr: np.ndarray
    estimate: np.ndarray
    status: list = field(default_factory=list)


def default_k_max(cfg: ShearConfig) -> float:
    """max(12 / L, 8 omega_sp / |dv|): coupling is negligible past 12 / L and the
    Doppler resonance sits near kx = 2 omega_sp / |dv|."""
    dv = abs(cfg.relative_velocity)
    k_max = 12.0 / cfg.gap
    if dv > 0:
        k_max = max(k_max, 8.0 * OMEGA_SP / dv)
    return k_max


def _horner(coeffs: np.ndarray, w: np.ndarray) -> np.ndarray:
    value = np.broadcast_to(coeffs[:, -1:], w.shape).astype(complex)
    for i in range(coeffs.shape[1] - 2, -1, -1):
        value = value * w + coeffs[:, i : i + 1]
    return value


def _horner_derivative(coeffs: np.ndarray, w: np.ndarray) -> np.ndarray:
    powers = np.arange(1, coeffs.shape[1])
    return _horner(coeffs[:, 1:] * powers, w)


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    n, size = coeffs.shape
    degree = size - 1
    monic = coeffs[:, :-1] / coeffs[:, -1:]
    companion = np.zeros((n, degree, degree), dtype=complex)
    companion[:, np.arange(1, degree), np.arange(degree - 1)] = 1.0
    companion[:, :, -1] = -monic
    return np.linalg.eigvals(companion)


def _polish(cfg: ShearConfig, kx: np.ndarray, ky: float, coeffs, roots, steps: int):
    """Newton steps on D = Q / P, each accepted only if |Q| drops.

    With D = Q / P and Q' = P', the Newton step is Q P / (Q' e^{-2|k|L}); the
    plain polynomial step Q / Q' is used where the coupling factor underflows.
    """
    kx_col = kx[:, None]
    coupling = np.broadcast_to(coupling_factor(cfg, np.hypot(kx, ky))[:, None], roots.shape)
    value = _horner(coeffs, roots)
    for _ in range(steps):
        derivative = _horner_derivative(coeffs, roots)
        with np.errstate(divide="ignore", invalid="ignore"):
            rational = value * pole_factor(cfg, kx_col, roots) / (derivative * coupling)
            plain = value / derivative
        step = np.where(coupling > 1e-300, rational, plain)
        candidate = roots - step
        candidate_value = _horner(coeffs, candidate)
        better = np.isfinite(candidate) & (np.abs(candidate_value) < np.abs(value))
        roots = np.where(better, candidate, roots)
        value = np.where(better, candidate_value, value)
    scale = np.max(np.abs(coeffs), axis=1, keepdims=True)
    return roots, np.abs(value) / scale


def batch_roots(cfg: ShearConfig, kx, ky: float = 0.0, newton_steps: int = 3):
    """Polished quartic roots for many kx at once.

    Returns:
        (roots, residuals), both of shape (len(kx), 4), in eigenvalue order
    """
    kx = np.atleast_1d(np.asarray(kx, dtype=float))
    coeffs = quartic_coefficients(cfg, kx, ky)
    roots = _companion_roots(coeffs)
    return _polish(cfg, kx, ky, coeffs, roots, newton_steps)


def _sorted_order(roots: np.ndarray) -> np.ndarray:
    return np.lexsort((roots.imag, np.round(roots.real, 12)))


def _root_set(cfg, kx, ky, roots, residuals, spurious_floor, branch_ids=(0, 1, 2, 3)):
    worst = float(np.max(residuals))
    if worst > RESIDUAL_TOL:
        raise ConvergenceError(
            f"quartic root residual {worst:.3e} above {RESIDUAL_TOL:g} at kx={kx}, ky={ky}"
        )
    spurious = drude_denominator(cfg, kx, roots) < spurious_floor
    return RootSet(
        roots=tuple(complex(r) for r in roots),
        residuals=tuple(float(r) for r in residuals),
        spurious=tuple(bool(s) for s in spurious),
        kx=float(kx),
        ky=float(ky),
        branch_ids=tuple(int(b) for b in branch_ids),
    )


def solve_roots(
    cfg: ShearConfig, kx: float, ky: float = 0.0, settings: Optional[ScanSettings] = None
) -> RootSet:
    """All four roots of the characteristic quartic at (kx, ky).

    Raises:
        ConvergenceError: If a residual stays above RESIDUAL_TOL after polishing
    """
    settings = settings or ScanSettings()
    roots, residuals = batch_roots(cfg, [kx], ky, settings.newton_steps)
    order = _sorted_order(roots[0])
    return _root_set(
        cfg, kx, ky, roots[0][order], residuals[0][order], settings.spurious_floor
    )


def root_locus(
    cfg: ShearConfig,
    kx_range: tuple[float, float],
    steps: int,
    ky: float = 0.0,
    settings: Optional[ScanSettings] = None,
) -> list[RootSet]:
    """Root sets along a uniform kx grid with branch continuity.

    Consecutive root sets are matched by minimum total distance to a linear
    extrapolation of each branch.

    Raises:
        ValueError: If the range is empty or not strictly positive
    """
    settings = settings or ScanSettings()
    kx_min, kx_max = kx_range
    if not 0 < kx_min < kx_max:
        raise ValueError(f"kx range must satisfy 0 < kx_min < kx_max, got {kx_range}")
    if steps < 2:
        raise ValueError(f"root_locus needs at least 2 steps, got {steps}")
    kx = np.linspace(kx_min, kx_max, steps)
    roots, residuals = batch_roots(cfg, kx, ky, settings.newton_steps)

    locus = []
    history: list[np.ndarray] = []
    for i in range(steps):
        order = _sorted_order(roots[i])
        current = roots[i][order]
        if not history:
            branch_ids = np.arange(4)
            by_branch = current.copy()
        else:
            predicted = history[-1] if len(history) == 1 else 2 * history[-1] - history[-2]
            cost = np.abs(predicted[:, None] - current[None, :])
            branches, positions = linear_sum_assignment(cost)
            branch_ids = np.empty(4, dtype=int)
            branch_ids[positions] = branches
            by_branch = current[positions]
        history.append(by_branch)
        locus.append(
            _root_set(
                cfg,
                kx[i],
                ky,
                current,
                residuals[i][order],
                settings.spurious_floor,
                branch_ids,
            )
        )
    return locus


def _growth(cfg: ShearConfig, kx: np.ndarray, settings: ScanSettings) -> np.ndarray:
    roots, _ = batch_roots(cfg, kx, 0.0, settings.newton_steps)
    spurious = drude_denominator(cfg, np.asarray(kx)[:, None], roots) < settings.spurious_floor
    return np.where(spurious, -np.inf, roots.imag).max(axis=1)


def max_growth(cfg: ShearConfig, settings: Optional[ScanSettings] = None) -> StabilityReport:
    """Stability functional M = max over kx > 0 of the largest Im omega at ky = 0.

    Coarse geometric scan over [k_min, k_max] followed by bounded scalar
    refinement around the best grid point, using ``minimize_scalar`` with
    ``method="bounded"`` (Brent's method, which takes golden-section steps
    when parabolic interpolation does not apply). The kx -> -kx mirror makes
    kx > 0 sufficient. A maximiser on the upper scan edge extends k_max
    fourfold once.

    At v = 0 the antisymmetric branch is overdamped, and lies above -gamma/2,
    wherever omega_sp^2 (1 - exp(-kx L)) < gamma^2 / 4. M therefore equals
    -gamma/2 only when k_min * L >= -ln(1 - gamma^2 / (4 omega_sp^2)); with
    the default k_min = 1e-3 and gamma = 0.2 that needs L >= 20.2. Smaller
    gaps give M between -gamma/2 and 0.

    Raises:
        BoundaryError: If the maximiser still sits on the upper edge after extension
    """
    settings = settings or ScanSettings()
    k_max = settings.k_max or default_k_max(cfg)
    extended = False
    while True:
        kx = np.geomspace(settings.k_min, k_max, settings.n_points)
        growth = _growth(cfg, kx, settings)
        best = float(growth.max())
        interior_best = float(growth[:-1].max())
        if growth[-1] - interior_best <= GROWTH_TIE_TOL:
            break
        if extended:
            raise BoundaryError(
                f"growth maximiser at the scan edge kx={k_max:.4g} after extension "
                f"(gamma={cfg.gamma}, dv={cfg.relative_velocity}, L={cfg.gap})"
            )
        logger.debug(f"Maximiser on scan edge, extending k_max {k_max:.4g} -> {4 * k_max:.4g}")
        k_max *= 4.0
        extended = True

    index = int(np.flatnonzero(growth >= best - GROWTH_TIE_TOL)[0])
    argmax_kx, m_value = float(kx[index]), best
    lo = kx[max(index - 1, 0)]
    hi = kx[min(index + 1, len(kx) - 1)]
    refined = minimize_scalar(
        lambda k: -_growth(cfg, np.array([k]), settings)[0],
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": settings.xatol},
    )
    if refined.success and -refined.fun > m_value:
        argmax_kx, m_value = float(refined.x), float(-refined.fun)

    return StabilityReport(
        max_growth=m_value,
        argmax_kx=argmax_kx,
        stable=m_value < 0,
        scan_resolution=settings.xatol,
        k_max=k_max,
        extended=extended,
    )


@lru_cache(maxsize=1024)
def ensure_stable(cfg: ShearConfig, settings: Optional[ScanSettings] = None) -> StabilityReport:
    """Return the stability report, refusing unstable configurations.

    Raises:
        UnstableRegimeError: If M >= 0; no steady state exists beyond threshold
    """
    report = max_growth(cfg, settings)
    if not report.stable:
        raise UnstableRegimeError(
            f"configuration is unstable (M={report.max_growth:.4g} >= 0 at "
            f"kx={report.argmax_kx:.4g}): natural modes grow and no steady state is reached"
        )
    return report


def _critical_search(
    kind: ParameterKind,
    template: ShearConfig,
    bracket: tuple[float, float],
    xtol: float,
    settings: Optional[ScanSettings],
    prescan_points: int = 8,
) -> tuple[float, tuple[float, float], int]:
    def functional(value: float) -> float:
        return max_growth(template.with_parameter(kind, value), settings).max_growth

    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    grid = np.geomspace(lo, hi, prescan_points)
    growth = np.array([functional(p) for p in grid])
    unstable = growth >= 0
    changes = np.flatnonzero(np.diff(unstable.astype(int)))
    if changes.size == 0:
        state = "unstable" if unstable[0] else "stable"
        raise NoSignChangeError(
            f"M keeps one sign over {kind.value} in [{lo:g}, {hi:g}]: system {state} throughout"
        )
    if changes.size > 1:
        raise ConvergenceError(
            f"M changes sign {changes.size} times over {kind.value} in [{lo:g}, {hi:g}]"
        )
    i = int(changes[0])
    direction = 1 if growth[i + 1] > growth[i] else -1
    if direction != _GROWTH_DIRECTION[kind]:
        raise ConvergenceError(
            f"M moves the wrong way across the {kind.value} threshold "
            f"({growth[i]:.3g} -> {growth[i + 1]:.3g})"
        )
    a, b = float(grid[i]), float(grid[i + 1])
    value, result = bisect(functional, a, b, xtol=xtol, full_output=True)
    logger.debug(
        f"Critical {kind.value}={value:.6g} in [{a:.4g}, {b:.4g}] after {result.iterations} steps"
    )
    return float(value), (a, b), int(result.iterations)


def critical_gamma(
    v: float,
    L: float,
    settings: Optional[ScanSettings] = None,
    bracket: tuple[float, float] = DEFAULT_BRACKETS[ParameterKind.GAMMA],
    xtol: float = 1e-4,
    config: Optional[ShearConfig] = None,
) -> CriticalValue:
    """Damping where M(gamma) = 0 for the symmetric setup (or a given config).

    Raises:
        NoSignChangeError: If the system is stable (or unstable) for the whole bracket
        ConvergenceError: If the pre-scan finds more than one sign change
    """
    template = config or ShearConfig.symmetric(bracket[1], v, L)
    value, sub_bracket, iterations = _critical_search(
        ParameterKind.GAMMA, template, bracket, xtol, settings
    )
    estimate = None
    dv = abs(template.relative_velocity)
    if dv > 0:
        estimate = critical_gamma_estimate(dv, template.gap)
    return CriticalValue(ParameterKind.GAMMA, value, sub_bracket, iterations, estimate)


def critical_velocity(
    gamma: float,
    L: float,
    settings: Optional[ScanSettings] = None,
    bracket: tuple[float, float] = DEFAULT_BRACKETS[ParameterKind.VELOCITY],
    xtol: float = 1e-4,
    config: Optional[ShearConfig] = None,
) -> CriticalValue:
    """Relative velocity where M(v) = 0."""
    template = config or ShearConfig.symmetric(gamma, bracket[1], L)
    value, sub_bracket, iterations = _critical_search(
        ParameterKind.VELOCITY, template, bracket, xtol, settings
    )
    try:
        estimate = critical_velocity_estimate(template.gamma) * OMEGA_SP * template.gap
    except DomainError:
        estimate = None
    return CriticalValue(ParameterKind.VELOCITY, value, sub_bracket, iterations, estimate)


def critical_gap(
    gamma: float,
    v: float,
    settings: Optional[ScanSettings] = None,
    bracket: tuple[float, float] = DEFAULT_BRACKETS[ParameterKind.GAP],
    xtol: float = 1e-4,
    config: Optional[ShearConfig] = None,
) -> CriticalValue:
    """Gap where M(L) = 0."""
    template = config or ShearConfig.symmetric(gamma, v, 1.0)
    value, sub_bracket, iterations = _critical_search(
        ParameterKind.GAP, template, bracket, xtol, settings
    )
    try:
        estimate = critical_gap_estimate(template.gamma, abs(template.relative_velocity))
    except DomainError:
        estimate = None
    return CriticalValue(ParameterKind.GAP, value, sub_bracket, iterations, estimate)


def _diagram_cell(args) -> tuple[int, int, float, str]:
    i, j, v, L, settings = args
    try:
        value = critical_gamma(v, L, settings).value
        return i, j, value, "ok"
    except NoSignChangeError:
        return i, j, 0.0, "no-sign-change"
    except QflError as e:
        return i, j, float("nan"), f"error: {type(e).__name__}"


def stability_diagram(
    velocities: Iterable[float],
    gaps: Iterable[float],
    settings: Optional[ScanSettings] = None,
    workers: int = 1,
    completed: Optional[dict] = None,
    on_cell: Optional[Callable[[int, int, float, str], None]] = None,
) -> StabilityDiagram:
    """Critical damping over a gap x velocity grid with the analytic estimate overlay.

    Cells without a sign change are recorded as 0 and other failures as nan,
    both with a status string; no cell aborts the sweep. Results are assembled
    in row-major (gap, velocity) order whatever the completion order.

    Args:
        velocities: Relative velocities (columns)
        gaps: Gap widths (rows)
        settings: Wavenumber scan settings
        workers: Process count; 1 evaluates in-process
        completed: Cells already known, {(i, j): (value, status)}, skipped
        on_cell: Callback invoked once per newly computed cell

    Returns:
        StabilityDiagram with gamma_cr and estimate of shape (len(gaps), len(velocities))
    """
    velocities = np.asarray(list(velocities), dtype=float)
    gaps = np.asarray(list(gaps), dtype=float)
    if velocities.size == 0 or gaps.size == 0:
        raise ValueError("stability diagram needs at least one velocity and one gap")
    if np.any(velocities <= 0) or np.any(gaps <= 0):
        raise ValueError("diagram velocities and gaps must be positive")
    completed = dict(completed or {})

    gamma_cr = np.full((gaps.size, velocities.size), np.nan)
    status = [["" for _ in velocities] for _ in gaps]
    for (i, j), (value, cell_status) in completed.items():
        gamma_cr[i, j] = value
        status[i][j] = cell_status

    pending = [
        (i, j, float(v), float(L), settings)
        for i, L in enumerate(gaps)
        for j, v in enumerate(velocities)
        if (i, j) not in completed
    ]
    logger.info(
        f"Stability diagram: {gaps.size}x{velocities.size} cells, "
        f"{len(pending)} to compute, workers={workers}"
    )

    def record(cell):
        i, j, value, cell_status = cell
        gamma_cr[i, j] = value
        status[i][j] = cell_status
        logger.debug(f"Cell ({i}, {j}) v={velocities[j]:.4g} L={gaps[i]:.4g}: {value:.6g} {cell_status}")
        if on_cell is not None:
            on_cell(i, j, value, cell_status)

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_diagram_cell, args) for args in pending]
            for future in as_completed(futures):
                record(future.result())
    else:
        for args in pending:
            record(_diagram_cell(args))

    estimate = np.array(
        [[critical_gamma_estimate(v, L) for v in velocities] for L in gaps], dtype=float
    )
    return StabilityDiagram(velocities, gaps, gamma_cr, estimate, status)
