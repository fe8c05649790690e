"""Adaptive one-dimensional quadrature with embedded error estimates.

Every pass evaluates all active subintervals in one vectorised call, so the
integrand must accept a 1-D array of abscissae. It may return either shape
(n,) or (n, m); in the second case only column 0 drives the error control and
the remaining columns are integrated alongside (used to carry inner error
estimates through nested integrals).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureRule:
    """Embedded pair on [-1, 1]: a common node set with high- and low-order weights."""

    name: str
    nodes: np.ndarray = field(repr=False)
    high_weights: np.ndarray = field(repr=False)
    low_weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.nodes.size)


def _gauss_kronrod_15() -> QuadratureRule:
    # QUADPACK qk15 abscissae and weights
    xgk = np.array(
        [
            0.991455371120812639206854697526329,
            0.949107912342758524526189684047851,
            0.864864423359769072789712788640926,
            0.741531185599394439863864773280788,
            0.586087235467691130294144845693013,
            0.405845151377397166906606412076961,
            0.207784955007898467600689403773245,
            0.000000000000000000000000000000000,
        ]
    )
    wgk = np.array(
        [
            0.022935322010529224963732008058970,
            0.063092092629978553290700663189204,
            0.104790010322250183839876322541518,
            0.140653259715525918745189590510238,
            0.169004726639267902826583426598550,
            0.190350578064785409913256402421014,
            0.204432940075298892414161999234649,
            0.209482141084727828012999174891714,
        ]
    )
    wg = np.zeros(8)
    wg[[1, 3, 5, 7]] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
    nodes = np.concatenate([-xgk[:-1], xgk[::-1]])
    high = np.concatenate([wgk[:-1], wgk[::-1]])
    low = np.concatenate([wg[:-1], wg[::-1]])
    return QuadratureRule("gauss-kronrod-15", nodes, high, low)


def _gauss_legendre_pair(low_order: int, high_order: int) -> QuadratureRule:
    x_low, w_low = np.polynomial.legendre.leggauss(low_order)
    x_high, w_high = np.polynomial.legendre.leggauss(high_order)
    nodes = np.concatenate([x_high, x_low])
    order = np.argsort(nodes)
    high = np.concatenate([w_high, np.zeros(low_order)])
    low = np.concatenate([np.zeros(high_order), w_low])
    return QuadratureRule(
        f"gauss-legendre-{low_order}-{high_order}", nodes[order], high[order], low[order]
    )


GK15 = _gauss_kronrod_15()
GL10_20 = _gauss_legendre_pair(10, 20)

RULES = {"gk15": GK15, "gl10-20": GL10_20}


def get_rule(name: str) -> QuadratureRule:
    """Look a rule up by its short name ("gk15" or "gl10-20")."""
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"Unknown quadrature rule '{name}', expected one of {sorted(RULES)}")


@dataclass
class QuadratureResult:
    """Outcome of an adaptive integration."""

    value: float
    error: float
    evaluations: int
    intervals: int
    converged: bool
    worst_interval: Optional[tuple[float, float]] = None
    extras: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _apply_rule(func, rule: QuadratureRule, lo: np.ndarray, hi: np.ndarray):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * rule.nodes[None, :]
    y = np.asarray(func(x.ravel()), dtype=float)
    y = y.reshape(x.shape + y.shape[1:])
    if y.ndim == 2:
        y = y[..., None]
    high = np.einsum("inm,n->im", y, rule.high_weights) * half[:, None]
    low = np.einsum("inm,n->im", y, rule.low_weights) * half[:, None]
    return high, np.abs(high[:, 0] - low[:, 0]), x.size


def integrate(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    points: Sequence[float] = (),
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    max_intervals: int = 2000,
    rule: QuadratureRule = GK15,
    raise_on_failure: bool = True,
) -> QuadratureResult:
    """Integrate func over [a, b] by adaptive bisection.

    Breakpoints inside (a, b) seed the initial partition. A pass splits every
    subinterval whose error estimate exceeds its share of the remaining
    tolerance; convergence means the summed error is below
    max(abs_tol, rel_tol * |value|).

    Args:
        func: Vectorised integrand
        a: Lower limit
        b: Upper limit
        points: Known difficult locations (ridges, kinks)
        rel_tol: Relative tolerance
        abs_tol: Absolute tolerance
        max_intervals: Subdivision budget
        rule: Embedded rule pair
        raise_on_failure: Raise instead of returning an unconverged result

    Returns:
        QuadratureResult with the value, the summed error estimate and diagnostics

    Raises:
        NonConvergenceError: If the budget is exhausted and raise_on_failure is set
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, 0, True)
    if b < a:
        result = integrate(
            func,
            b,
            a,
            points=points,
            rel_tol=rel_tol,
            abs_tol=abs_tol,
            max_intervals=max_intervals,
            rule=rule,
            raise_on_failure=raise_on_failure,
        )
        result.value = -result.value
        result.extras = -result.extras
        return result

    inner = sorted({float(p) for p in points if a < p < b})
    edges = np.array([a, *inner, b], dtype=float)
    lo, hi = edges[:-1], edges[1:]
    values, errors, evaluations = _apply_rule(func, rule, lo, hi)
    min_width = 64 * np.finfo(float).eps * max(abs(a), abs(b), 1.0)

    while True:
        total = values[:, 0].sum()
        total_error = float(errors.sum())
        tolerance = max(abs_tol, rel_tol * abs(total))
        if total_error <= tolerance:
            converged = True
            break
        splittable = (hi - lo) > min_width
        share = tolerance / len(lo)
        to_split = (errors > share) & splittable
        if not to_split.any() and splittable.any():
            to_split[np.argmax(np.where(splittable, errors, -1.0))] = True
        if not to_split.any() or len(lo) + int(to_split.sum()) > max_intervals:
            converged = False
            break
        mids = 0.5 * (lo[to_split] + hi[to_split])
        new_lo = np.concatenate([lo[to_split], mids])
        new_hi = np.concatenate([mids, hi[to_split]])
        new_values, new_errors, n = _apply_rule(func, rule, new_lo, new_hi)
        evaluations += n
        keep = ~to_split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        values = np.concatenate([values[keep], new_values])
        errors = np.concatenate([errors[keep], new_errors])

    worst = int(np.argmax(errors))
    result = QuadratureResult(
        value=float(values[:, 0].sum()),
        error=total_error,
        evaluations=evaluations,
        intervals=len(lo),
        converged=converged,
        worst_interval=(float(lo[worst]), float(hi[worst])),
        extras=values[:, 1:].sum(axis=0),
    )
    if not converged:
        message = (
            f"quadrature on [{a:g}, {b:g}] did not converge within {max_intervals} intervals: "
            f"error {total_error:.3e} above tolerance {tolerance:.3e}, worst subinterval "
            f"[{result.worst_interval[0]:.6g}, {result.worst_interval[1]:.6g}]"
        )
        if raise_on_failure:
            raise NonConvergenceError(message, worst_interval=result.worst_interval)
        logger.debug(message)
    return result
