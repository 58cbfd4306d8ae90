"""Velocity-space collision machinery for hard potentials with angular cutoff."""
from .grids import KernelParams, SphereQuadrature, VelocityGrid, abs_cos
from .tables import (CollisionTables, collision_frequency, apply_field, apply_L, build_tables, gamma_bilinear,
                     gamma_field, invariant_projector)

__all__ = ["VelocityGrid", "SphereQuadrature", "KernelParams", "abs_cos", "CollisionTables",
           "build_tables", "collision_frequency", "apply_L", "gamma_bilinear", "apply_field", "gamma_field",
           "invariant_projector"]
