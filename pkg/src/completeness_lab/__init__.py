"""Numerical laboratory for eigenstate completeness of radial Hamiltonians
with local plus non-local potentials bearing a Coulomb tail."""

__version__ = "0.1.0"
