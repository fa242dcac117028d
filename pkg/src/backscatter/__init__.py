"""Truncated backscattering transforms for Schrodinger potentials in three dimensions."""

__version__ = "0.1.0"
