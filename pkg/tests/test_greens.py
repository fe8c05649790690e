"""Tests for greens module."""

import numpy as np
import pytest

from quantum_friction_lab.errors import DomainError, UnstableRegimeError
from quantum_friction_lab.greens import (
    P_ROTATION,
    Region,
    dyadic_G,
    naive_kernel_sign,
    null_friction_residual,
    poisson_kernel,
    reciprocity_residual,
    region_of,
    rotation_dual,
    rotation_residual,
    scalar_g,
    worst_rotation_residual,
)
from quantum_friction_lab.material import ShearConfig, Side, SpectralPoint
from quantum_friction_lab.scattering import surface_coeffs

STABLE = ShearConfig.symmetric(0.3, 0.1, 0.4)
UNSTABLE = ShearConfig.symmetric(0.1, 0.1, 0.1)


def test_region_of():
    """Test that the interfaces belong to the gap."""
    assert region_of(STABLE, 0.5) is Region.UPPER
    assert region_of(STABLE, -0.5) is Region.LOWER
    assert region_of(STABLE, 0.2) is Region.GAP
    assert region_of(STABLE, -0.2) is Region.GAP


def test_scalar_g_upper_source_closed_form():
    """Test the upper-source response against the reflection/transmission formula."""
    pt = SpectralPoint(0.6, 2.0, 1.0)
    z1, z2 = 0.05, 0.35
    c = surface_coeffs(STABLE, pt)
    k = pt.k
    expected = (
        c.t_plus
        * (1 + c.r_minus * np.exp(-2 * k * z1))
        * np.exp(k * (z1 - z2))
        / (2 * k * (1 - c.r_plus * c.r_minus))
    )
    assert scalar_g(STABLE, pt, z1, z2, Side.UPPER) == pytest.approx(expected, rel=1e-10)


def test_scalar_g_lower_source_closed_form():
    """Test the lower-source response against the mirrored formula."""
    pt = SpectralPoint(0.6, -3.0, 0.5)
    z1, z2 = 0.1, -0.3
    c = surface_coeffs(STABLE, pt)
    k = pt.k
    expected = (
        c.t_minus
        * (1 + c.r_plus * np.exp(2 * k * z1))
        * np.exp(k * (z2 - z1))
        / (2 * k * (1 - c.r_plus * c.r_minus))
    )
    assert scalar_g(STABLE, pt, z1, z2, Side.LOWER) == pytest.approx(expected, rel=1e-10)


def test_scalar_g_layout_validation():
    """Test that observation and source points are checked."""
    pt = SpectralPoint(0.6, 2.0)
    with pytest.raises(DomainError, match="inside the gap"):
        scalar_g(STABLE, pt, 0.5, 0.6, Side.UPPER)
    with pytest.raises(DomainError, match="upper slab"):
        scalar_g(STABLE, pt, 0.0, -0.6, Side.UPPER)
    with pytest.raises(DomainError, match="inside the gap"):
        scalar_g(STABLE, pt, 0.2, 0.6, Side.UPPER)


def test_zero_wavevector_rejected():
    """Test that |k| = 0 is outside the model."""
    with pytest.raises(DomainError, match=r"\|k\| > 0"):
        poisson_kernel(STABLE, SpectralPoint(0.6, 0.0, 0.0), 0.0, 0.1)


def test_real_frequency_on_unstable_configuration():
    """Test that real-frequency evaluation refuses unstable configurations."""
    with pytest.raises(UnstableRegimeError):
        scalar_g(UNSTABLE, SpectralPoint(0.6, 2.0), 0.0, 0.2, Side.UPPER)
    # complex frequencies stay available for spectral analysis
    value = poisson_kernel(UNSTABLE, SpectralPoint(0.6 + 0.2j, 2.0), 0.0, 0.2)
    assert np.isfinite(value)


def test_kernel_symmetric_at_rest():
    """Test g(z1, z2) = g(z2, z1) for gap points of a system at rest."""
    cfg = ShearConfig.symmetric(0.3, 0.0, 0.4)
    pt = SpectralPoint(0.5, 1.5, -0.7)
    assert poisson_kernel(cfg, pt, -0.1, 0.15) == pytest.approx(
        poisson_kernel(cfg, pt, 0.15, -0.1), rel=1e-12
    )


def test_dyad_scalar_consistency():
    """Test that the scalar amplitude travels with the dyad."""
    pt = SpectralPoint(0.6, 2.0, 1.0)
    result = dyadic_G(STABLE, pt, 0.05, 0.35, Side.UPPER)
    assert result.g == pytest.approx(scalar_g(STABLE, pt, 0.05, 0.35, Side.UPPER))
    assert result.dyad.shape == (3, 3)
    assert result.source_side is Region.UPPER


def test_null_friction_identity():
    """Test that the x-z element of G(z1, z2) + G(z2, z1)^T vanishes."""
    rng = np.random.default_rng(7)
    for _ in range(50):
        pt = SpectralPoint(
            float(rng.uniform(0.05, 2.0)), float(rng.uniform(-10, 10)), float(rng.uniform(-3, 3))
        )
        z1, z2 = rng.uniform(-0.4, 0.4, size=2)
        assert null_friction_residual(STABLE, pt, float(z1), float(z2)) < 1e-10


def test_reciprocity_identity():
    """Test G(cfg, k; z1, z2) = G(dual, -k; z2, z1)^T."""
    rng = np.random.default_rng(11)
    cfg = ShearConfig.lower_only(0.4, 0.1, 0.3)
    for _ in range(50):
        pt = SpectralPoint(
            float(rng.uniform(0.05, 2.0)), float(rng.uniform(-10, 10)), float(rng.uniform(-3, 3))
        )
        z1, z2 = rng.uniform(-0.4, 0.4, size=2)
        assert reciprocity_residual(cfg, pt, float(z1), float(z2)) < 1e-10


def test_rotation_identity():
    """Test the rotation identity on an unstable configuration."""
    dual = rotation_dual(UNSTABLE, samples=8, seed=3)
    assert dual == UNSTABLE.dual()
    pt = SpectralPoint(0.4 + 0.3j, 5.0, 1.0)
    assert rotation_residual(UNSTABLE, pt, 0.01, -0.02) < 1e-10
    assert np.array_equal(P_ROTATION @ P_ROTATION, np.eye(3))
    assert worst_rotation_residual(UNSTABLE, samples=8, seed=3) < 1e-10


def test_naive_kernel_sign():
    """Test that the unmodified weight turns negative in a gain window only."""
    cfg = ShearConfig.symmetric(0.3, 0.2, 0.4)
    pt = SpectralPoint(0.5, 10.0)
    assert naive_kernel_sign(cfg, pt, -0.3) < 0
    assert naive_kernel_sign(cfg, pt, 0.3) > 0
    with pytest.raises(DomainError, match="inside a slab"):
        naive_kernel_sign(cfg, pt, 0.0)
