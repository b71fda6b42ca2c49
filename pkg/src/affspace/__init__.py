"""Convex geometry of affine spacetimes on grids.

Legendre-Fenchel duality, affine spheres from a Monge-Ampere solve, cosmological
time on cone-convex domains, and affine deformations of cone-preserving groups.
"""
__version__ = "0.1.0"
