"""Scattering resonances, scattering determinants and wave decay for
compactly supported complex potentials on R^d, d = 1, 2, 3."""

__version__ = "0.1.0"
