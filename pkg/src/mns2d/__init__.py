"""Pseudo-spectral 2D three-component fluid-electromagnetic simulation toolkit."""

__version__ = "0.1.0"
