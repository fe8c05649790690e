"""Tests for quadrature module."""

import numpy as np
import pytest

from quantum_friction_lab.errors import NonConvergenceError
from quantum_friction_lab.quadrature import GK15, GL10_20, get_rule, integrate


def test_rule_weights_integrate_constants():
    """Test that both weight sets of each rule sum to the interval length."""
    for rule in (GK15, GL10_20):
        assert rule.high_weights.sum() == pytest.approx(2.0, rel=1e-14)
        assert rule.low_weights.sum() == pytest.approx(2.0, rel=1e-14)
    assert GK15.size == 15
    assert GL10_20.size == 30


def test_get_rule():
    """Test rule lookup by short name."""
    assert get_rule("gk15") is GK15
    assert get_rule("gl10-20") is GL10_20
    with pytest.raises(ValueError, match="Unknown quadrature rule"):
        get_rule("simpson")


def test_integrate_smooth_function():
    """Test a smooth integral with both rules."""
    for rule in (GK15, GL10_20):
        result = integrate(np.sin, 0.0, np.pi, rel_tol=1e-12, rule=rule)
        assert result.converged
        assert result.value == pytest.approx(2.0, rel=1e-12)
        assert result.evaluations > 0


def test_integrate_kink_with_breakpoint():
    """Test that a breakpoint at a kink makes the integral exact on the first pass."""
    result = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, points=[0.3], rel_tol=1e-12)
    assert result.value == pytest.approx(0.29, rel=1e-12)
    assert result.intervals == 2


def test_integrate_peaked_function():
    """Test adaptive refinement on a narrow Lorentzian."""
    width = 1e-3
    result = integrate(
        lambda x: width / ((x - 0.4) ** 2 + width**2), -1.0, 1.0, rel_tol=1e-8, max_intervals=5000
    )
    expected = np.arctan(0.6 / width) + np.arctan(1.4 / width)
    assert result.value == pytest.approx(expected, rel=1e-8)


def test_integrate_reversed_limits():
    """Test that swapping the limits flips the sign."""
    forward = integrate(np.exp, 0.0, 1.0)
    backward = integrate(np.exp, 1.0, 0.0)
    assert backward.value == pytest.approx(-forward.value)
    assert forward.value == pytest.approx(np.e - 1.0, rel=1e-12)


def test_integrate_empty_interval():
    """Test a zero-width interval."""
    result = integrate(np.exp, 1.0, 1.0)
    assert result.value == 0.0
    assert result.converged


def test_integrate_extra_columns():
    """Test that extra integrand columns are integrated alongside."""

    def func(x):
        return np.column_stack([x**2, x, np.ones_like(x)])

    result = integrate(func, 0.0, 1.0, rel_tol=1e-12)
    assert result.value == pytest.approx(1.0 / 3.0)
    np.testing.assert_allclose(result.extras, [0.5, 1.0], rtol=1e-12)


def test_integrate_non_convergence():
    """Test that an exhausted budget raises with the worst subinterval."""
    with pytest.raises(NonConvergenceError, match="did not converge") as excinfo:
        integrate(lambda x: np.sign(x - 0.3123), 0.0, 1.0, rel_tol=1e-14, max_intervals=4)
    lo, hi = excinfo.value.worst_interval
    assert lo <= 0.3123 <= hi


def test_integrate_non_convergence_without_raising():
    """Test raise_on_failure=False returns an unconverged result."""
    result = integrate(
        lambda x: np.sign(x - 0.3123),
        0.0,
        1.0,
        rel_tol=1e-14,
        max_intervals=4,
        raise_on_failure=False,
    )
    assert not result.converged
    assert result.error > 0
