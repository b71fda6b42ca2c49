"""
Bending a genus-2 surface group
===============================

The octagon group acts on the Minkowski cone. Bending along the separating curve abAB gives
a translation cocycle; its orbit hulls converge to the boundary function g, whose convex and
concave envelopes bound the two maximal invariant domains.
"""

# %%
import numpy as np

from affspace import deformations as dfm
from affspace.affine_sphere import minkowski_gauge
from affspace.cone_model import ConeSpec
from affspace.fixtures import octagon_group, octagon_splitting

rep = octagon_group()
split = octagon_splitting(rep, 0.2)
print("relator defect:", rep.validate()["relators"])
c = dfm.bend_translation(rep, split)
print("tau on the separating curve:", dfm.extend_cocycle(c, "abAB"))

# %%
# Boundary function estimates and their gap to one letter fewer.
cone = ConeSpec.minkowski(65)
om = minkowski_gauge(cone.omega_star)
for L in (3, 4, 5):
    est = dfm.boundary_function(cone, rep, c, [0, 0, 1], L)
    md = dfm.maximal_domain(est.values, cone)
    _, mats = rep.letter_matrices()
    trs = c.letter_translations()
    res = max(dfm.equivariance_residual(md.s_minus, mats[j], trs[j], om) for j in range(8))
    print(f"L={L}: gap to L-1 {est.gap:.3e}, s_plus - s_minus in [{md.gap().min():.2e}, {md.gap().max():.2e}],"
          f" equivariance residual {res:.3e}")

# %%
# A coboundary instead: the domains collapse to a translated cone.
V = np.array([0.1, -0.2, 0.4])
cb = dfm.coboundary(rep, V)
md = dfm.maximal_domain(dfm.boundary_function(cone, rep, cb, V, 3).values, cone)
print("coboundary: max |s_minus - V.(y,-1)| =",
      np.abs(md.s_minus.s.values - (cone.omega_star.nodes @ V[:2] - V[2])).max())
