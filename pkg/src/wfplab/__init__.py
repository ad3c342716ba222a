"""Numerical lab for the linear Wigner-Fokker-Planck equation with a harmonic confinement."""

__version__ = "0.1.0"
