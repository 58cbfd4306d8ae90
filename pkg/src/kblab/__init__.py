"""Numerical laboratory for the Boltzmann equation near a global Maxwellian."""
__version__ = "0.1.0"
