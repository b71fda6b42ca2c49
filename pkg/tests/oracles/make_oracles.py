"""Independent brute-force oracles. Uses only numpy/scipy, never the package.

Run: python3 tests/oracles/make_oracles.py
The printed values are frozen into the test modules.
"""
import numpy as np
from scipy.optimize import minimize

rng = np.random.default_rng(12345)


def disk_samples(m_r=400, m_t=800, r=1.0):
    rr = np.linspace(0, r, m_r)
    th = np.linspace(0, 2 * np.pi, m_t, endpoint=False)
    R, TH = np.meshgrid(rr, th)
    return np.c_[(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()]


def conj_affine_disk():
    # f(y) = y.x0 - lam0 on the unit disk, x0 = (1, 0), lam0 = 0: sup_y x.y - f(y)
    Y = disk_samples()
    x0 = np.array([1.0, 0.0])
    q = np.array([[0.0, 0.0], [1.0, 1.0], [-0.5, 0.3], [1.5, -0.5]])
    return (q @ Y.T - (Y @ x0)[None]).max(1), q


def conj_zero_disk():
    # sup over the unit disk of x.y (the support function of the polar disk)
    Y = disk_samples()
    q = np.array([[0.3, 0.4], [-1.2, 0.5], [0.0, 2.0]])
    return (q @ Y.T).max(1), q


def biconj_neg_abs():
    # lower convex envelope of -|y| on the unit disk at interior points, by LP over samples
    from scipy.optimize import linprog
    Y = disk_samples(60, 240)
    f = -np.linalg.norm(Y, axis=1)
    out = []
    q = np.array([[0.0, 0.0], [0.3, -0.2], [0.5, 0.5]])
    for p in q:
        # min sum l_i f_i  s.t. sum l_i Y_i = p, sum l_i = 1, l >= 0
        A = np.vstack([Y.T, np.ones(len(Y))])
        r = linprog(f, A_eq=A, b_eq=np.r_[p, 1.0], bounds=(0, None), method="highs")
        out.append(r.fun)
    return np.array(out), q


def random_minorant(points, g, y, trials=4000):
    # sup over affine a(y) = c + p.y with a <= g on the samples: random slopes, tight c, then a local refine
    def val(p):
        c = (g - points @ p).min()
        return c + p @ y
    P = rng.normal(scale=2.0, size=(trials, 2))
    best = max(val(p) for p in P)
    p0 = P[np.argmax([val(p) for p in P])]
    r = minimize(lambda p: -val(p), p0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    return max(best, -r.fun, val(np.zeros(2)))


def envelope_abs_circle():
    th = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    b = np.c_[np.cos(th), np.sin(th)]
    g = np.abs(b[:, 0])
    q = np.array([[0.0, 0.0], [0.5, 0.0], [0.2, 0.6]])
    return np.array([random_minorant(b, g, y) for y in q]), q


def subdiff_abs_scan():
    # f(y) = |y1| on the unit disk, x = (0, 0.2): Fenchel-equality scan over a fine dual grid
    Y = disk_samples(100, 200)
    f = np.abs(Y[:, 0])
    x = np.array([0.0, 0.2])
    fx = 0.0
    z = np.stack(np.meshgrid(np.linspace(-2, 2, 81), np.linspace(-2, 2, 81)), -1).reshape(-1, 2)
    fs = np.concatenate([(zb @ Y.T - f[None]).max(1) for zb in np.array_split(z, 40)])
    gap = fx + fs - z @ x
    sel = z[gap <= 1e-9]
    return sel[:, 0].min(), sel[:, 0].max(), np.abs(sel[:, 1]).max()


def polar_square():
    # polar of the square with vertices (+-1, +-1): vertices are edge normals / offsets
    V = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], float)
    E = np.roll(V, -1, 0) - V
    n = np.c_[E[:, 1], -E[:, 0]]
    off = (n * V).sum(1)
    return n / off[:, None]


def gradient_cosmo():
    # T = sqrt(lam^2 - |x|^2): central differences at (0.5, 0, 1.25)
    T = lambda X: np.sqrt(X[2] ** 2 - X[0] ** 2 - X[1] ** 2)
    X = np.array([0.5, 0.0, 1.25])
    e = 1e-6
    return np.array([(T(X + e * u) - T(X - e * u)) / (2 * e) for u in np.eye(3)])


def boost_coboundary():
    c, s = np.cosh(0.7), np.sinh(0.7)
    g = np.array([[c, 0, s], [0, 1, 0], [s, 0, c]])
    V = np.array([0.0, 0.0, 1.0])
    return V - g @ V


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    v, q = conj_affine_disk(); print("conj_affine_disk", q.tolist(), repr(v))
    v, q = conj_zero_disk(); print("conj_zero_disk", q.tolist(), repr(v))
    v, q = biconj_neg_abs(); print("biconj_neg_abs", q.tolist(), repr(v))
    v, q = envelope_abs_circle(); print("envelope_abs_circle", q.tolist(), repr(v))
    print("subdiff_abs_scan", subdiff_abs_scan())
    print("polar_square", repr(polar_square()))
    print("gradient_cosmo", repr(gradient_cosmo()))
    print("boost_coboundary(0.7)", repr(boost_coboundary()))
