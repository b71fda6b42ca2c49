"""
Affine sphere gauge on a disk and a diamond
===========================================

Solve det Hess w = (-w)^-4 with zero boundary values, compare with the closed form on the
disk, then look at the conjugate and the radial profile.
"""

# %%
import numpy as np

from affspace.affine_sphere import radial_profile, solve_affine_sphere
from affspace.convex_core import GridDomain, legendre_transform

# %%
# On the unit disk the solution is -sqrt(1 - |y|^2).
disk = GridDomain("disk", 101)
om = solve_affine_sphere(disk)
inner = disk.boundary_distance >= 2 * disk.h
err = np.abs(om.omega.values + np.sqrt(1 - (disk.nodes ** 2).sum(1)))[inner].max()
print("disk: newton steps", om.info["iterations"], "max error", err, "axioms", om.report["pass"])

# %%
# Its conjugate is the hyperboloid height sqrt(1 + |x|^2).
g = legendre_transform(om.omega, 2.0, 81)
x = g.domain.nodes
print("conjugate error on [-2,2]^2:", np.abs(g.values - np.sqrt(1 + (x * x).sum(1))).max())

# %%
# Radial profile: height of the sphere over the section, -sqrt(1 - |x|^2) here.
for p in ([0, 0], [0.6, 0], [0.3, -0.5]):
    print(p, radial_profile(om, p), -np.sqrt(1 - np.dot(p, p)))

# %%
# A square cone: its polar section is the diamond |y1| + |y2| < 1. No closed form, but the
# gauge axioms (negative, strictly convex, zero trace, steep at the boundary) are checked.
dia = solve_affine_sphere(GridDomain("diamond", 65))
print("diamond: w(0) =", dia.value([[0, 0]])[0], "axioms", {k: v["pass"] for k, v in dia.report.items() if k != "pass"})
