"""Independent reference values for the frozen constants in the Rust tests.

    python3 oracle.py green      # Bessel integrals and midpoint decay -> green_oracle.json
    python3 oracle.py admissible # brute-force admissible pair counts
    python3 oracle.py spread     # N = 1 embeddings violating the k = 1 bound

Needs numpy and scipy.
"""

import itertools
import json
import sys

import numpy as np


def g_bessel(x, d=3, T=0.0):
    """int_T^inf prod_i e^{-t/d} I_{x_i}(t/d) dt: nearest-neighbour walk, rate 1."""
    from scipy.integrate import quad
    from scipy.special import ive

    x = [abs(int(v)) for v in x]
    f = lambda t: np.prod([ive(xi, t / d) for xi in x])
    pts = [T, T + 10, T + 100, T + 1000, T + 1e4]
    s = sum(quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(pts[:-1], pts[1:]))
    return s + quad(f, pts[-1], np.inf, limit=400, epsabs=1e-14, epsrel=1e-13)[0]


def abs_patterns(d, R):
    out = {}
    for z in itertools.product(range(-R, R + 1), repeat=d):
        if 0 < sum(map(abs, z)) <= R:
            k = tuple(abs(v) for v in z)
            out[k] = out.get(k, 0) + 1
    return out


def octant(d, R, n):
    h = 2 * np.pi / n
    th = (-np.pi + (np.arange(n) + 0.5) * h)[n // 2 :]
    pats = abs_patterns(d, R)
    phi = np.zeros((n // 2,) * d)
    for k, m in pats.items():
        t = np.ones((n // 2,) * d)
        for i, ki in enumerate(k):
            sh = [1] * d
            sh[i] = n // 2
            t = t * np.cos(th * ki).reshape(sh)
        phi += m * t
    phi /= sum(pats.values())
    return th, 1.0 / (1.0 - phi)


def gval(th, w, x):
    t = w
    for i, xi in enumerate(x):
        sh = [1] * w.ndim
        sh[i] = len(th)
        t = t * np.cos(th * xi).reshape(sh)
    return t.mean()


def richardson(d, R, xs, n):
    p = d - 2
    a, b = octant(d, R, n), octant(d, R, n // 2)
    return [(2**p * gval(*a, x) - gval(*b, x)) / (2**p - 1) for x in xs]


def green():
    res = {}
    xs = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0), (1, 1, 0), (1, 1, 1), (4, 0, 0), (8, 0, 0), (16, 0, 0)]
    res["bessel_R1"] = {str(x): g_bessel(x) for x in xs}
    for T in [1.0, 4.0, 16.0, 64.0]:
        res["bessel_tail_T%g_x0" % T] = g_bessel((0, 0, 0), T=T)
    res["bessel_tail_T1_e1"] = g_bessel((1, 0, 0), T=1.0)
    orbits = [o for o in itertools.combinations_with_replacement(range(9), 3) if max(o) > 0]
    dec = {}
    for R in [1, 2, 4, 8]:
        vals = richardson(3, R, [(0, 0, 0)] + orbits, 512)
        g0 = vals[0]
        best = max(((v / g0) * max(o), o) for v, o in zip(vals[1:], orbits))
        dec[R] = {"g00": g0, "sup": best[0], "argmax": best[1]}
    res["decay"] = dec
    with open("green_oracle.json", "w") as f:
        json.dump(res, f, indent=1)
    print(json.dumps(res, indent=1))


def per_leaf(L, d=3):
    """Single sites plus unordered star-adjacent pairs inside B(0, 2L)."""
    r = 2 * L
    ball = list(itertools.product(range(-r, r + 1), repeat=d))
    inside = set(ball)
    pairs = 0
    for p in ball:
        for q in itertools.product(*[(c - 1, c, c + 1) for c in p]):
            if q != p and q in inside:
                pairs += 1
    return len(ball) + pairs // 2


def admissible():
    # Leaf balls of a proper embedding are disjoint here, so the choices
    # multiply over the 2^N leaves.
    for L in [1, 2]:
        k = per_leaf(L)
        for N in [0, 1]:
            print(f"N={N} L={L} count={k ** (2 ** N)}")


def sphere(r, d=3):
    return [p for p in itertools.product(range(-r, r + 1), repeat=d) if max(map(abs, p)) == r]


def spread():
    # N = 1, L = 1, ell = 6: leaves at c1 in S(6), c2 in S(12). The k = 1
    # bound allows only the leaf itself within ell L / 2 = 3 of its ball,
    # so it fails iff the ball distance |c1 - c2| - 4 is at most 3.
    s6, s12 = np.array(sphere(6)), np.array(sphere(12))
    dist = np.abs(s6[:, None, :] - s12[None, :, :]).max(axis=2)
    print(f"embeddings={len(s6) * len(s12)} violating={(dist - 4 <= 3).sum()} overlapping={(dist <= 4).sum()}")


if __name__ == "__main__":
    {"green": green, "admissible": admissible, "spread": spread}[sys.argv[1]]()
