"""Tests for the quantum_friction_lab package."""
