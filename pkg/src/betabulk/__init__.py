"""Tridiagonal beta-Laguerre and beta-Hermite ensembles, phase-function
eigenvalue counting and Sine_beta simulation."""

__version__ = "0.1.0"
