"""Tests for stability module."""

import numpy as np
import pytest

from quantum_friction_lab.errors import NoSignChangeError, UnstableRegimeError
from quantum_friction_lab.material import OMEGA_SP, ParameterKind, ShearConfig
from quantum_friction_lab.scattering import critical_gamma_estimate
from quantum_friction_lab.stability import (
    ScanSettings,
    batch_roots,
    critical_gamma,
    critical_gap,
    critical_velocity,
    default_k_max,
    ensure_stable,
    max_growth,
    root_locus,
    solve_roots,
    stability_diagram,
)


def test_scan_settings_validation():
    """Test ScanSettings validation."""
    with pytest.raises(ValueError, match="k_min"):
        ScanSettings(k_min=0.0)
    with pytest.raises(ValueError, match="n_points"):
        ScanSettings(n_points=2)
    with pytest.raises(ValueError, match="k_max"):
        ScanSettings(k_min=1.0, k_max=0.5)


def test_default_k_max():
    """Test that the scan covers the Doppler resonance."""
    cfg = ShearConfig.symmetric(0.2, 0.1, 0.1)
    assert default_k_max(cfg) == pytest.approx(max(120.0, 8 * OMEGA_SP / 0.1))
    assert default_k_max(ShearConfig.symmetric(0.2, 0.0, 0.5)) == pytest.approx(24.0)


def test_solve_roots_at_rest():
    """Test the v = 0 roots: Im omega = -gamma/2 when underdamped."""
    cfg = ShearConfig.symmetric(0.2, 0.0, 0.5)
    root_set = solve_roots(cfg, 2.0)
    assert len(root_set.roots) == 4
    for root in root_set.roots:
        assert root.imag == pytest.approx(-0.1, abs=1e-9)
    assert max(root_set.residuals) < 1e-10
    assert not any(root_set.spurious)
    assert root_set.max_imag == pytest.approx(-0.1, abs=1e-9)


def test_solve_roots_sorted():
    """Test that roots are sorted by real part."""
    root_set = solve_roots(ShearConfig.symmetric(0.18, 0.1, 0.1), 5.0)
    reals = [round(r.real, 12) for r in root_set.roots]
    assert reals == sorted(reals)


def test_batch_roots_matches_solve_roots():
    """Test batched roots against the single-point solver."""
    cfg = ShearConfig.symmetric(0.18, 0.1, 0.1)
    kx = np.array([1.0, 5.0, 12.0])
    roots, residuals = batch_roots(cfg, kx)
    assert roots.shape == (3, 4)
    assert np.all(residuals < 1e-10)
    for i, x in enumerate(kx):
        expected = sorted(solve_roots(cfg, x).roots, key=lambda r: (r.real, r.imag))
        actual = sorted(roots[i], key=lambda r: (r.real, r.imag))
        np.testing.assert_allclose(actual, expected, atol=1e-12)


def test_root_locus_branches():
    """Test branch bookkeeping along a locus."""
    cfg = ShearConfig.symmetric(0.18, 0.1, 0.1)
    locus = root_locus(cfg, (0.1, 30.0), 100)
    assert len(locus) == 100
    for root_set in locus:
        assert sorted(root_set.branch_ids) == [0, 1, 2, 3]
        assert sorted(root_set.by_branch(), key=lambda r: (r.real, r.imag)) == sorted(
            root_set.roots, key=lambda r: (r.real, r.imag)
        )


def test_root_locus_empty_range():
    """Test that an empty kx range is a usage error."""
    cfg = ShearConfig.symmetric(0.18, 0.1, 0.1)
    with pytest.raises(ValueError, match="kx range"):
        root_locus(cfg, (5.0, 1.0), 10)
    with pytest.raises(ValueError, match="at least 2 steps"):
        root_locus(cfg, (1.0, 5.0), 1)


def test_max_growth_at_rest():
    """Test M = -gamma/2 at v = 0 when every scanned wavenumber is underdamped."""
    for gamma in (0.05, 0.2):
        report = max_growth(ShearConfig.symmetric(gamma, 0.0, 50.0))
        assert report.max_growth == pytest.approx(-gamma / 2, abs=1e-9)
        assert report.stable


def test_max_growth_at_rest_gap_condition():
    """Test the k_min * L condition for M = -gamma/2 at v = 0 and gamma = 0.2."""
    threshold = -np.log(1 - 0.2**2 / (4 * OMEGA_SP**2)) / ScanSettings().k_min
    assert threshold == pytest.approx(20.2, abs=0.01)
    above = max_growth(ShearConfig.symmetric(0.2, 0.0, 25.0))
    below = max_growth(ShearConfig.symmetric(0.2, 0.0, 15.0))
    assert above.max_growth == pytest.approx(-0.1, abs=1e-9)
    expected = -0.1 + np.sqrt(0.01 - OMEGA_SP**2 * (1 - np.exp(-1e-3 * 15.0)))
    assert below.max_growth == pytest.approx(expected, rel=1e-6)


def test_max_growth_relaxation_branch():
    """Test that overdamped small-k modes keep M between -gamma/2 and 0."""
    report = max_growth(ShearConfig.symmetric(0.5, 0.0, 0.5))
    assert -0.25 < report.max_growth < 0


def test_max_growth_regimes():
    """Test stable, near-critical and unstable damping at v = 0.1, L = 0.1."""
    stable = max_growth(ShearConfig.symmetric(0.30, 0.1, 0.1))
    unstable = max_growth(ShearConfig.symmetric(0.10, 0.1, 0.1))
    assert stable.stable
    assert not unstable.stable
    assert unstable.max_growth > 0
    assert 0 < unstable.argmax_kx < unstable.k_max


def test_ensure_stable():
    """Test that steady-state requests on unstable configurations are refused."""
    report = ensure_stable(ShearConfig.symmetric(0.30, 0.1, 0.1))
    assert report.max_growth < 0
    with pytest.raises(UnstableRegimeError, match="unstable"):
        ensure_stable(ShearConfig.symmetric(0.10, 0.1, 0.1))


def test_critical_gamma():
    """Test the critical damping at v = 0.1, L = 0.1 and its estimate."""
    result = critical_gamma(0.1, 0.1)
    assert result.parameter is ParameterKind.GAMMA
    assert result.value == pytest.approx(0.18, abs=0.01)
    assert result.bracket[0] <= result.value <= result.bracket[1]
    assert result.estimate == pytest.approx(critical_gamma_estimate(0.1, 0.1))
    assert abs(result.value - result.estimate) / result.value < 0.10


def test_critical_velocity_and_gap():
    """Test the critical velocity and gap at gamma = 0.18."""
    assert critical_velocity(0.18, 0.1).value == pytest.approx(0.10, abs=0.01)
    assert critical_gap(0.18, 0.1).value == pytest.approx(0.10, abs=0.01)


def test_critical_gamma_no_sign_change():
    """Test a bracket that is stable throughout."""
    with pytest.raises(NoSignChangeError, match="stable throughout"):
        critical_gamma(0.1, 0.1, bracket=(0.5, 1.0))


def test_critical_gamma_bad_bracket():
    """Test bracket validation."""
    with pytest.raises(ValueError, match="bracket"):
        critical_gamma(0.1, 0.1, bracket=(0.5, 0.2))


def test_stability_diagram():
    """Test a small diagram with a stable-throughout cell and resumption."""
    seen = []
    diagram = stability_diagram(
        [0.1],
        [0.1, 5.0],
        completed={(0, 0): (0.1805, "ok")},
        on_cell=lambda i, j, value, status: seen.append((i, j, status)),
    )
    assert diagram.gamma_cr.shape == (2, 1)
    assert diagram.gamma_cr[0, 0] == 0.1805
    assert diagram.gamma_cr[1, 0] == 0.0
    assert diagram.status[1][0] == "no-sign-change"
    assert seen == [(1, 0, "no-sign-change")]
    assert diagram.estimate[0, 0] == pytest.approx(critical_gamma_estimate(0.1, 0.1))


def test_stability_diagram_validation():
    """Test that empty or non-positive axes are rejected."""
    with pytest.raises(ValueError, match="at least one"):
        stability_diagram([], [0.1])
    with pytest.raises(ValueError, match="positive"):
        stability_diagram([0.1], [-0.1])


@pytest.mark.slow
def test_critical_gamma_estimate_sweep():
    """Test the analytic estimate across weak-coupling velocities and wide gaps."""
    cases = [(v, 0.1) for v in (0.06, 0.07, 0.08, 0.09, 0.1)]
    cases += [(1.0, L) for L in (1.0, 1.1, 1.2, 1.3, 1.4)]
    for v, L in cases:
        result = critical_gamma(v, L)
        assert abs(result.value - result.estimate) / result.value < 0.20, (v, L)
