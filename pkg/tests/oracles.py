"""Independent symbolic reference computations (sympy) for polynomial frames."""

import numpy as np
import sympy as sp

X_, Y_, U1_, U2_ = sp.symbols("x y u1 u2")
CHART = (X_, Y_, U1_, U2_)
LABELS = ("x", "y", "2", "3")


def poly_expr(poly):
    """sympy expression of an ``engelcr.models.Poly``."""
    out = 0
    for m, c in poly.terms.items():
        term = sp.nsimplify(c, rational=True)
        for v, k in zip(CHART, m):
            term *= v ** k
        out += term
    return sp.expand(out)


def bracket(a, b):
    return [sp.expand(sum(a[j] * sp.diff(b[i], CHART[j]) - b[j] * sp.diff(a[i], CHART[j])
                          for j in range(4))) for i in range(4)]


def apply(v, f):
    return sum(v[j] * sp.diff(f, CHART[j]) for j in range(4))


def adapted(X, Y):
    T2 = bracket(X, Y)
    T3 = bracket(X, T2)
    return {"x": X, "y": Y, "2": T2, "3": T3}


def phi_at(frame, point):
    """Numeric ``phi^a_{bc}`` at a point from exact polynomial brackets."""
    sub = dict(zip(CHART, point))
    M = np.array([[float(sp.sympify(frame[l][i]).subs(sub)) for l in LABELS] for i in range(4)])
    out = {}
    for bi, b in enumerate(LABELS):
        for c in LABELS[bi + 1:]:
            br = bracket(frame[b], frame[c])
            v = np.array([float(sp.sympify(e).subs(sub)) for e in br])
            comps = np.linalg.solve(M, v)
            for a, val in zip(LABELS, comps):
                out[(a, b, c)] = val
    return out


def ode_invariants(B, point):
    """Connection coefficients and essential invariants of the normal-coordinate
    pair ``X = d_x + p d_y + q d_p + B d_q``, ``Y = d_q`` (already scale-normalized).

    The frame matrix is polynomial with unit determinant, so every structure
    function is a polynomial and the formulas are evaluated exactly.
    """
    x, y, p, q = CHART
    X = [1, p, q, B]
    Y = [0, 0, 0, 1]
    fr = adapted(X, Y)
    M = sp.Matrix([[fr[l][i] for l in LABELS] for i in range(4)])
    Minv = sp.simplify(M.inv())

    def phi(a, b, c):
        br = sp.Matrix(bracket(fr[b], fr[c]))
        return sp.expand((Minv * br)[LABELS.index(a)])

    s = phi("3", "x", "3")
    Tx = lambda f: sp.expand(apply(X, f))
    Ty = lambda f: sp.expand(apply(Y, f))
    alphas = {
        "x0": -s / 6, "y0": 0, "22": 1, "2x": 0, "2y": -s / 6, "20": Ty(s) / 6,
        "33": 1, "32": -s / 2, "3x": -Ty(s) / 6, "3y": s ** 2 / 18 - Tx(s) / 6,
        "30": Tx(Ty(s)) / 3 - Ty(Tx(s)) / 6 - s * Ty(s) / 18,
    }
    inv = {
        "Rx_y2": phi("x", "y", "2"),
        "Ry_y2": phi("y", "y", "2") - Ty(s) / 3,
        "R2_x3": phi("2", "x", "3") + sp.Rational(11, 36) * s ** 2 - sp.Rational(2, 3) * Tx(s),
        "Ry_x3": (phi("y", "x", "3") + s * Tx(s) / 12 - Tx(Tx(s)) / 6
                  + sp.Rational(5, 216) * s ** 3 + s * phi("2", "x", "3") / 6),
    }
    sub = dict(zip(CHART, point))
    ev = lambda e: float(sp.sympify(e).subs(sub))
    return {k: ev(v) for k, v in alphas.items()}, {k: ev(v) for k, v in inv.items()}
