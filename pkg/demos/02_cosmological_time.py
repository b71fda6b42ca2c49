"""
Cosmological time of a domain over the Minkowski cone
======================================================

K is the future of a few points plus the light cone. T(X) is the largest Finsler length of
a causal curve in K ending at X; the chart returns T, the foot point P and the normal y.
"""

# %%
import numpy as np

from affspace.affine_sphere import minkowski_gauge
from affspace.cone_model import ConeSpec, support_from_points
from affspace.convex_core import conjugate_at
from affspace.cosmology import causal_distance, cosmological_chart, foliation_height

cone = ConeSpec.minkowski(65)
om = minkowski_gauge(cone.omega_star)
rng = np.random.default_rng(0)
pts = np.c_[rng.uniform(-0.5, 0.5, (6, 2)), rng.uniform(-0.3, 0.3, 6)]
s = support_from_points(cone, pts)

# %%
# A point above the boundary graph lambda = s*(x).
x = np.array([0.2, -0.1])
X = np.r_[x, conjugate_at(s.s, x[None])[0] + 1.0]
c = cosmological_chart(s, om, X)
print("T =", c.T, "P =", c.P, "y =", c.y)
print("Finsler length of P -> X:", causal_distance(om, c.P, X))
# the foot point sits between the source points, so it beats every one of them
past = [p for p in pts if X[2] - p[2] >= np.linalg.norm(X[:2] - p[:2])]
print("best source point:", max(causal_distance(om, p, X) for p in past))

# %%
# Level sets T = t are graphs of (s + t w)*; they move up as t grows.
for t in (0.25, 0.5, 1, 2, 4):
    print(t, foliation_height(s, om, x, t)[0])
