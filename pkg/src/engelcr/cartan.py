"""Canonical Cartan connection of an Engel CR structure, evaluated at a point.

Everything on the Cartan bundle depends on the fibre coordinate ``t`` through
a single power ``t^w``; such quantities are carried as :class:`Weighted`
pairs ``(jet on M, w)`` and only multiplied out when a number is requested.

The lifted frame is written ``Vhat_j = t^{|j|} (W_j + alpha_j0 * t d/dt)``
with horizontal parts

    W_x = T_x,  W_y = T_y,  W_2 = T_2 + alpha_2y T_y,
    W_3 = T_3 + alpha_32 T_2 + alpha_3x T_x + alpha_3y T_y,

where the ``alpha`` are the connection coefficients at ``t = 1``.  Curvature
is available two ways: from the closed-form listings in terms of the four
essential invariants (``method="formula"``) and straight from the bracket
defect ``Phihat^a([Vhat_b, Vhat_c]) - c^a_bc`` (``method="bracket"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .engel import EngelStructure, normalize_scale
from .errors import InsufficientOrder, OrderExhausted
from .fields import FRAME_LABELS, LABEL_INDEX, PAIRS, FieldJet, coframe_from_jets, combine
from .jets import DEFAULT_ORDER, NVARS, Jet, n_coefficients, _rank

WEIGHT = {"0": 0, "x": 1, "y": 1, "2": 2, "3": 3}
TARGETS = ("0", "x", "y", "2", "3")
ESSENTIAL = ("Rx_y2", "Ry_y2", "R2_x3", "Ry_x3")
ESSENTIAL_WEIGHTS = {"Rx_y2": 2, "Ry_y2": 2, "R2_x3": 2, "Ry_x3": 3}
# structure constants of g_-: [V_x, V_y] = V_2, [V_x, V_2] = V_3
STRUCTURE_CONSTANTS = {("2", "x", "y"): 1.0, ("3", "x", "2"): 1.0}

VANISHING_THRESHOLD = 1e-7
CLOSEDNESS_THRESHOLD = 1e-8
# lowest jet order of (X, Y) able to produce each homogeneity of the table
MIN_ORDER = {-1: 5, 0: 5, 1: 5, 2: 5, 3: 5, 4: 6, 5: 7}


def homogeneity(a: str, b: str, c: str) -> int:
    return WEIGHT[b] + WEIGHT[c] - WEIGHT[a]


# ---------------------------------------------------------------------------
# order-tolerant jet helpers


def _lo(*js):
    n = min(j.order for j in js if isinstance(j, Jet))
    return [j.truncate(n) if isinstance(j, Jet) else j for j in js]


def _sum(*terms) -> Jet:
    terms = _lo(*terms)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def _mul(*factors) -> Jet:
    fs = _lo(*factors)
    out = fs[0]
    for f in fs[1:]:
        out = out * f
    return out


@dataclass(frozen=True)
class Weighted:
    """Fibre-dependent function ``t^weight * jet`` on the Cartan bundle."""

    jet: Jet
    weight: int

    def at(self, t: float = 1.0) -> float:
        return float(t) ** self.weight * self.jet.value

    def scaled(self, t: float) -> Jet:
        return self.jet * float(t) ** self.weight

    def __add__(self, other: "Weighted") -> "Weighted":
        if other.weight != self.weight:
            raise ValueError(f"adding weights {self.weight} and {other.weight}")
        return Weighted(_sum(self.jet, other.jet), self.weight)

    def __sub__(self, other: "Weighted") -> "Weighted":
        return self + other * -1.0

    def __mul__(self, other) -> "Weighted":
        if isinstance(other, Weighted):
            return Weighted(_mul(self.jet, other.jet), self.weight + other.weight)
        return Weighted(self.jet * float(other), self.weight)

    __rmul__ = __mul__


def wsum(weight: int, point, *terms) -> Weighted:
    """Sum of weighted terms; an empty sum is the zero of the given weight."""
    terms = [t for t in terms if t is not None]
    if not terms:
        return Weighted(Jet.zero(point, 0), weight)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


# ---------------------------------------------------------------------------
# the per-point computation


class LocalConnection:
    """All connection data at one point from jets of a normalized pair.

    ``X`` and ``Y`` enter at ``order``; derived quantities lose orders as
    they go: structure functions have order ``order - 3``, ``alpha_30``
    has ``order - 5``.
    """

    def __init__(self, X: FieldJet, Y: FieldJet):
        self.order = N = X.order
        if N < 3:
            raise InsufficientOrder(f"jet order {N} is too low for structure functions")
        self.point = X.point
        self.X, self.Y = X, Y
        self.T2 = X.bracket(Y)
        self.T3 = X.truncate(N - 1).bracket(self.T2)
        frame = [X.truncate(N - 2), Y.truncate(N - 2), self.T2.truncate(N - 2), self.T3]
        self.coframe = coframe_from_jets(frame, self.point)
        self.frame = {"x": X, "y": Y, "2": self.T2, "3": self.T3}
        self.phi = self._structure_functions()

    # -- structure functions ---------------------------------------------
    def _structure_functions(self) -> dict:
        one = Jet.constant(1.0, self.point, self.order - 2)
        zero = Jet.zero(self.point, self.order - 2)
        table = {}
        for b, c in PAIRS:
            if (b, c) in (("x", "y"), ("x", "2")):
                # T_2 and T_3 are defined as these brackets
                target = "2" if c == "y" else "3"
                for a in FRAME_LABELS:
                    table[(a, b, c)] = one if a == target else zero
                continue
            fb, fc = self.frame[b], self.frame[c]
            n = min(fb.order, fc.order)
            br = fb.truncate(n).bracket(fc.truncate(n))
            for a, v in zip(FRAME_LABELS, self.coframe.components(br)):
                table[(a, b, c)] = v
        return table

    def phi_of(self, a: str, b: str, c: str):
        if b == c:
            return Jet.zero(self.point, self.order - 2)
        if (a, b, c) in self.phi:
            return self.phi[(a, b, c)]
        return -self.phi[(a, c, b)]

    # -- directional derivatives -----------------------------------------
    def Tx(self, f: Jet) -> Jet:
        return self.X.apply(f)

    def Ty(self, f: Jet) -> Jet:
        return self.Y.apply(f)

    # -- connection coefficients at t = 1 -------------------------------
    @property
    def s(self) -> Jet:
        """``phi^3_{x3}``, the input of every coefficient formula."""
        return self.phi[("3", "x", "3")]

    def alphas(self) -> dict:
        if not hasattr(self, "_alphas"):
            s = self.s
            Txs, Tys = self.Tx(s), self.Ty(s)
            zero = Jet.zero(self.point, s.order)
            one = Jet.constant(1.0, self.point, s.order)
            self._alphas = {
                "x0": s * (-1.0 / 6.0),
                "y0": zero,
                "22": one,
                "2x": zero,
                "2y": s * (-1.0 / 6.0),
                "20": Tys / 6.0,
                "33": one,
                "32": s * -0.5,
                "3x": Tys * (-1.0 / 6.0),
                "3y": _sum(_mul(s, s) / 18.0, Txs * (-1.0 / 6.0)),
                "30": _sum(self.Tx(Tys) / 3.0, self.Ty(Txs) * (-1.0 / 6.0),
                           _mul(s, Tys) * (-1.0 / 18.0)),
            }
        return self._alphas

    def vertical(self, j: str) -> Jet:
        return self.alphas()[j + "0"]

    # -- horizontal parts of the lifted frame ----------------------------
    def W(self, j: str) -> FieldJet:
        if not hasattr(self, "_W"):
            al = self.alphas()
            X, Y, T2, T3 = self.X, self.Y, self.T2, self.T3
            self._W = {
                "x": X,
                "y": Y,
                "2": combine([1.0, al["2y"]], [T2, Y]),
                "3": combine([1.0, al["32"], al["3x"], al["3y"]], [T3, T2, X, Y]),
            }
        return self._W[j]

    def W_components(self, v: FieldJet) -> dict:
        """Components of a field on M in the basis ``(W_x, W_y, W_2, W_3)``."""
        al = self.alphas()
        n = min(v.order, self.coframe.order)
        tc = dict(zip(FRAME_LABELS, self.coframe.components(v.truncate(n))))
        h3 = tc["3"]
        h2 = _sum(tc["2"], -_mul(al["32"], h3))
        hy = _sum(tc["y"], -_mul(al["2y"], h2), -_mul(al["3y"], h3))
        hx = _sum(tc["x"], -_mul(al["3x"], h3))
        return {"x": hx, "y": hy, "2": h2, "3": h3}

    # -- V-hat derivatives ------------------------------------------------
    def vhat(self, j: str, F: Weighted) -> Weighted:
        """``Vhat_j F`` for ``F = t^w f``: ``t^{w+|j|} (W_j f + w alpha_j0 f)``."""
        d = self.W(j).apply(F.jet)
        if F.weight:
            d = _sum(d, _mul(self.vertical(j), F.jet) * F.weight)
        return Weighted(d, F.weight + WEIGHT[j])

    def vhats(self, word: str, F: Weighted) -> Weighted:
        """Iterated derivative; ``word="xy"`` means ``Vhat_x Vhat_y F``."""
        for j in reversed(word):
            F = self.vhat(j, F)
        return F

    # -- essential invariants ---------------------------------------------
    def essential(self) -> dict:
        if not hasattr(self, "_essential"):
            s = self.s
            Txs, Tys = self.Tx(s), self.Ty(s)
            p = self.phi_of
            self._essential = {
                "Rx_y2": Weighted(p("x", "y", "2"), 2),
                "Ry_y2": Weighted(_sum(p("y", "y", "2"), Tys * (-1.0 / 3.0)), 2),
                "R2_x3": Weighted(_sum(p("2", "x", "3"), _mul(s, s) * (11.0 / 36.0),
                                       Txs * (-2.0 / 3.0)), 2),
                "Ry_x3": Weighted(_sum(p("y", "x", "3"), _mul(s, Txs) / 12.0,
                                       self.Tx(Txs) * (-1.0 / 6.0),
                                       _mul(s, s, s) * (5.0 / 216.0),
                                       _mul(s, p("2", "x", "3")) / 6.0), 3),
            }
        return self._essential

    # -- curvature straight from brackets of the lifted frame -------------
    def bracket_curvature(self, b: str, c: str) -> dict:
        """``k^a_{bc}`` for all targets ``a`` from ``[Vhat_b, Vhat_c]``.

        With ``Vhat_j = t^{|j|}(W_j + alpha_j E)``, ``E = t d/dt``:

            [Vhat_b, Vhat_c] = t^{|b|+|c|} ( [W_b, W_c] + |c| alpha_b W_c - |b| alpha_c W_b
                               + (W_b alpha_c - W_c alpha_b + (|c|-|b|) alpha_b alpha_c) E ).
        """
        wb, wc = WEIGHT[b], WEIGHT[c]
        Wb, Wc = self.W(b), self.W(c)
        ab, ac = self.vertical(b), self.vertical(c)
        n = min(Wb.order, Wc.order)
        H = Wb.truncate(n).bracket(Wc.truncate(n))
        H = combine([1.0, ab * wc, ac * -wb], [H, Wc, Wb])
        v = _sum(Wb.apply(ac), -Wc.apply(ab), _mul(ab, ac) * (wc - wb))
        h = self.W_components(H)
        out = {}
        vertical = v
        for a in FRAME_LABELS:
            val = h[a]
            const = STRUCTURE_CONSTANTS.get((a, b, c), 0.0)
            if const:
                val = val - const
            out[a] = Weighted(val, wb + wc - WEIGHT[a])
            vertical = _sum(vertical, -_mul(h[a], self.vertical(a)))
        out["0"] = Weighted(vertical, wb + wc)
        return out


@lru_cache(maxsize=64)
def _local_cached(E: EngelStructure, p: tuple, order: int) -> LocalConnection:
    X, Y = E.pair_jets(p, order)
    return LocalConnection(X, Y)


def local_connection(E: EngelStructure, p, order: int = DEFAULT_ORDER) -> LocalConnection:
    """Per-point connection data; ``E`` is normalized first if needed."""
    if not E.normalized:
        E = normalize_scale(E)
    return _local_cached(E, tuple(float(v) for v in p), int(order))


# ---------------------------------------------------------------------------
# public operations


@dataclass
class ConnectionCoefficients:
    """Coefficients ``a_jk(m, t) = t^{|j|} alpha_jk(m)`` of the lifted frame."""

    point: tuple
    t: float
    alphas: dict  # name -> Weighted (the alpha jet with weight |j|)

    def __getitem__(self, name: str) -> float:
        return self.alphas[name].at(self.t)

    def jet(self, name: str) -> Jet:
        return self.alphas[name].scaled(self.t)

    def dual(self) -> dict:
        """Coefficients ``b_jk`` of the dual coframe (values at the point).

        Obtained by inverting the 5x5 matrix of the lifted frame written in
        the basis ``(t d/dt, T_x, T_y, T_2, T_3)``.
        """
        names = ["0", "x", "y", "2", "3"]
        t = self.t
        a = {k: self[k] for k in self.alphas}
        m = np.zeros((5, 5))
        m[0, 0] = 1.0
        m[0, 1], m[1, 1] = a["x0"], t
        m[0, 2], m[2, 2] = a["y0"], t
        m[0, 3], m[1, 3], m[2, 3], m[3, 3] = a["20"], a["2x"], a["2y"], a["22"]
        m[0, 4], m[1, 4], m[2, 4], m[3, 4], m[4, 4] = a["30"], a["3x"], a["3y"], a["32"], a["33"]
        inv = np.linalg.inv(m)
        return {f"{names[r]}{names[c]}": inv[r, c] for r in range(5) for c in range(5)
                if inv[r, c] != 0.0 or r == c}


_ALPHA_WEIGHTS = {"x0": 1, "y0": 1, "22": 2, "2x": 2, "2y": 2, "20": 2,
                  "33": 3, "32": 3, "3x": 3, "3y": 3, "30": 3}


def _require(order: int, needed: int, what: str) -> None:
    if order < needed:
        raise InsufficientOrder(f"{what} needs jet order >= {needed}, got {order}")


def connection_coefficients(E: EngelStructure, p, t: float = 1.0,
                            order: int = DEFAULT_ORDER) -> ConnectionCoefficients:
    _require(order, 5, "connection coefficients")
    lc = local_connection(E, p, order)
    al = {k: Weighted(v, _ALPHA_WEIGHTS[k]) for k, v in lc.alphas().items()}
    return ConnectionCoefficients(lc.point, float(t), al)


@dataclass
class Invariant:
    name: str
    value: float
    weight: int
    jet: Jet

    def at(self, t: float) -> float:
        return float(t) ** self.weight * self.jet.value


def essential_curvatures(E: EngelStructure, p, t: float = 1.0,
                         order: int = DEFAULT_ORDER) -> dict[str, Invariant]:
    """The invariants ``R^x_{y2}, R^y_{y2}, R^2_{x3}`` (weight 2) and ``R^y_{x3}`` (weight 3)."""
    _require(order, 5, "essential curvatures")
    lc = local_connection(E, p, order)
    out = {}
    for name, w in lc.essential().items():
        out[name] = Invariant(name, w.at(t), w.weight, w.scaled(t))
    return out


def formula_curvature(lc: LocalConnection, max_homogeneity: int = 4) -> dict:
    """Curvature table from the listings in terms of the essential invariants."""
    R = lc.essential()
    Rx, Ry, R2, R3 = (R[k] for k in ESSENTIAL)
    v = lc.vhats
    pt = lc.point
    z = lambda w: Weighted(Jet.zero(pt, 0), w)  # noqa: E731
    tab = {}
    for a in TARGETS:
        for b, c in PAIRS:
            if homogeneity(a, b, c) <= 1:
                tab[(a, b, c)] = z(homogeneity(a, b, c))
    if max_homogeneity >= 2:
        tab.update({
            ("0", "x", "y"): z(2), ("x", "x", "2"): z(2), ("y", "x", "2"): z(2),
            ("x", "y", "2"): Rx, ("y", "y", "2"): Ry, ("2", "x", "3"): R2,
            ("2", "y", "3"): Ry, ("3", "2", "3"): Ry,
        })
    if max_homogeneity >= 3:
        tab.update({
            ("0", "x", "2"): z(3),
            ("0", "y", "2"): v("x", Rx) * 0.25 + v("y", Ry) * 0.25,
            ("x", "x", "3"): v("x", Ry) * -1.5 + v("y", R2) * 0.5,
            ("y", "x", "3"): R3,
            ("x", "y", "3"): v("x", Rx) * 0.75 + v("y", Ry) * -0.25,
            ("y", "y", "3"): v("x", Ry),
            ("2", "2", "3"): v("x", Ry) * 0.5 + v("y", R2) * -0.5,
        })
    if max_homogeneity >= 4:
        tab.update({
            ("0", "x", "3"): wsum(4, pt, v("xx", Ry) * -0.5, v("yx", R2) * (-1.0 / 3.0),
                                  v("xy", R2) * 0.5, v("y", R3) * (1.0 / 3.0)),
            ("0", "y", "3"): v("xx", Rx) * 0.25 + v("xy", Ry) * 0.25,
            ("x", "2", "3"): wsum(4, pt, v("xy", Ry) * -0.5, v("xx", Rx) * 0.5,
                                  v("yx", Ry) * 1.5, v("yy", R2) * -0.5, Rx * R2 * -1.0),
            ("y", "2", "3"): wsum(4, pt, v("xx", Ry) * 0.5, v("yx", R2) * (-1.0 / 3.0),
                                  v("xy", R2) * 0.5, v("y", R3) * (-2.0 / 3.0), Ry * R2 * -1.0),
        })
    if max_homogeneity >= 5:
        tab[("0", "2", "3")] = wsum(
            5, pt,
            v("xxx", Rx) * 0.5, v("xyx", Ry) * 3.0, v("yxx", Ry) * -1.5, v("yxy", R2) * 0.5,
            v("xyy", R2) * -1.0, v("xxy", Ry) * -0.5,
            Rx * v("x", R2) * -1.0, R2 * v("x", Rx) * -1.0, Ry * v("y", R2) * 0.5,
            Ry * v("x", Ry) * -1.5, Rx * R3)
    return {k: w for k, w in tab.items() if homogeneity(*k) <= max_homogeneity}


def bracket_curvature_table(lc: LocalConnection, max_homogeneity: int = 4) -> dict:
    """Curvature table from the bracket defect of the lifted frame."""
    tab = {}
    for b, c in PAIRS:
        if min(homogeneity(a, b, c) for a in TARGETS) > max_homogeneity:
            continue
        try:
            ks = lc.bracket_curvature(b, c)
        except OrderExhausted as exc:
            raise InsufficientOrder(str(exc)) from exc
        for a, val in ks.items():
            if homogeneity(a, b, c) <= max_homogeneity:
                tab[(a, b, c)] = val
    return tab


def curvature_table(E: EngelStructure, p, t: float = 1.0, max_homogeneity: int = 4,
                    order: int = DEFAULT_ORDER, method: str = "formula") -> dict:
    """Every ``k^a_{bc}`` of homogeneity ``<= max_homogeneity``, as values at ``t``.

    Keys are ``(a, b, c)`` with ``b < c`` in the order ``x, y, 2, 3``;
    values are :class:`Weighted` with the jet already multiplied by
    ``t^weight`` folded into :meth:`Weighted.at`.
    """
    if not -1 <= max_homogeneity <= 5:
        raise ValueError("max_homogeneity must lie in -1..5")
    _require(order, MIN_ORDER[max_homogeneity], f"homogeneity {max_homogeneity}")
    lc = local_connection(E, p, order)
    try:
        if method == "formula":
            return formula_curvature(lc, max_homogeneity)
        if method == "bracket":
            return bracket_curvature_table(lc, max_homogeneity)
    except OrderExhausted as exc:
        raise InsufficientOrder(str(exc)) from exc
    raise ValueError(f"unknown method {method!r}")


def curvature_cochain(table: dict, t: float = 1.0) -> dict:
    """Flatten a curvature table into ``{(a, b, c): value}`` for the cochain classifier."""
    return {key: w.at(t) for key, w in table.items()}


def _apply(lc: LocalConnection, label: str, f: Jet) -> Jet:
    F = lc.frame[label]
    return F.truncate(min(F.order, f.order)).apply(f.truncate(min(F.order, f.order)))


def jacobi_residuals(lc: LocalConnection) -> dict:
    """``max_d |sum_cyclic [T_a, [T_b, T_c]]^d|`` at the point, per triple ``abc``.

    ``[T_a, phi^e_bc T_e] = (T_a phi^e_bc) T_e + phi^e_bc phi^d_ae T_d``.
    """
    out = {}
    for a, b, c in combinations(FRAME_LABELS, 3):
        terms = {d: [] for d in FRAME_LABELS}
        for P, Q, R in ((a, b, c), (b, c, a), (c, a, b)):
            for e in FRAME_LABELS:
                f = lc.phi_of(e, Q, R)
                terms[e].append(_apply(lc, P, f))
                for d in FRAME_LABELS:
                    terms[d].append(_mul(f, lc.phi_of(d, P, e)))
        out[a + b + c] = max(abs(_sum(*v).value) for v in terms.values())
    return out


def bracket_table_residuals(lc: LocalConnection) -> dict:
    """Defects of the expansions of ``[T_y,T_2]``, ``[T_y,T_3]``, ``[T_2,T_3]``
    forced by the scale normalization and the Jacobi identity."""
    p, Tx, Ty = lc.phi_of, lc.Tx, lc.Ty
    x2, y2 = p("x", "y", "2"), p("y", "y", "2")
    c = {a: p(a, "x", "3") for a in FRAME_LABELS}
    expected = {
        ("2", "y", "2"): 0.0, ("3", "y", "2"): 0.0,
        ("x", "y", "3"): Tx(x2), ("y", "y", "3"): Tx(y2), ("2", "y", "3"): y2,
        ("3", "y", "3"): 0.0,
        ("x", "2", "3"): _sum(-Ty(c["x"]), Tx(Tx(x2)), -_mul(x2, c["2"]), -_mul(c["3"], Tx(x2))),
        ("y", "2", "3"): _sum(-Ty(c["y"]), Tx(Tx(y2)), -_mul(y2, c["2"]), -_mul(c["3"], Tx(y2))),
        ("2", "2", "3"): _sum(c["x"], Tx(y2) * 2.0, -Ty(c["2"]), -_mul(c["3"], y2)),
        ("3", "2", "3"): _sum(y2, -Ty(c["3"])),
    }
    out = {}
    for (a, b, cc), e in expected.items():
        got = p(a, b, cc).value
        out[f"{a}_{b}{cc}"] = abs(got - (e.value if isinstance(e, Jet) else e))
    return out


def homogeneity2_expressions(lc: LocalConnection) -> dict:
    """The homogeneity-2 components written with the coefficients kept explicit.

    Each entry is ``(exact part, non-exact part)`` at ``t = 1``; with the
    coefficients chosen by the construction the exact parts vanish.
    """
    s = lc.s
    Txs, Tys = lc.Tx(s), lc.Ty(s)
    a = lc.alphas()
    p = lc.phi_of
    Ry = _sum(Tys * (-1.0 / 3.0), p("y", "y", "2"))
    return {
        ("0", "x", "y"): (_sum(Tys / 6.0, -a["20"]), None),
        ("x", "x", "2"): (_sum(-a["20"], -a["3x"]), None),
        ("y", "x", "2"): (_sum(_mul(s, s) / 18.0, Txs * (-1.0 / 6.0), -a["3y"]), None),
        ("x", "y", "2"): (None, p("x", "y", "2")),
        ("y", "y", "2"): (_sum(Tys / 6.0, -a["20"]), Ry),
        ("2", "x", "3"): (_sum(a["3y"], Txs / 6.0, _mul(s, s) * (-1.0 / 18.0)),
                          _sum(_mul(s, s) * (11.0 / 36.0), Txs * (-2.0 / 3.0), p("2", "x", "3"))),
        ("2", "y", "3"): (_sum(-a["3x"], Tys * (-1.0 / 6.0)), Ry),
        ("3", "2", "3"): (_sum(a["20"] * 3.0, -a["3x"], Tys * (-2.0 / 3.0)), Ry),
    }


def exact_part_b3(lc: LocalConnection) -> Jet:
    """The homogeneity-3 exact coefficient ``B_3`` (vanishes for the chosen ``alpha_30``)."""
    s = lc.s
    Txs, Tys = lc.Tx(s), lc.Ty(s)
    return _sum(-lc.alphas()["30"], lc.Tx(Tys) / 3.0, lc.Ty(Txs) * (-1.0 / 6.0),
                _mul(s, Tys) * (-1.0 / 18.0))


# ---------------------------------------------------------------------------
# connection form


@dataclass
class ConnectionForm:
    """``Phihat^0 = dt/t + varpi`` with ``varpi`` a 1-form on M."""

    point: tuple
    frame_components: dict     # varpi(T_j) as jets, j in x, y, 2, 3
    chart_components: list     # varpi in dx, dy, du1, du2
    d_varpi: dict              # (i, k) chart pairs -> jet of d varpi(d_i, d_k)
    residual: float

    @property
    def closed(self) -> bool:
        return self.residual < CLOSEDNESS_THRESHOLD

    def d_varpi_frame(self, lc: LocalConnection) -> dict:
        """``d varpi(T_b, T_c)`` at the point."""
        out = {}
        for b, c in PAIRS:
            fb, fc = lc.frame[b].values(), lc.frame[c].values()
            val = 0.0
            for (i, k), jet in self.d_varpi.items():
                val += jet.value * (fb[i] * fc[k] - fb[k] * fc[i])
            out[(b, c)] = val
        return out


def connection_form(E: EngelStructure, p, order: int = DEFAULT_ORDER) -> ConnectionForm:
    _require(order, 6, "d varpi")
    lc = local_connection(E, p, order)
    s = lc.s
    Txs, Tys = lc.Tx(s), lc.Ty(s)
    comps = {
        "x": s / 6.0,
        "y": Jet.zero(lc.point, s.order),
        "2": Tys * (-1.0 / 6.0),
        "3": _sum(lc.Tx(Tys) * (-2.0 / 6.0), lc.Ty(Txs) / 6.0),
    }
    n = min(j.order for j in comps.values())
    cof = lc.coframe.rows
    chart = []
    for i in range(NVARS):
        chart.append(_sum(*[_mul(comps[lab], cof[LABEL_INDEX[lab]][i]) for lab in FRAME_LABELS]))
    chart = [c.truncate(n) for c in chart]
    d = {}
    for i, k in combinations(range(NVARS), 2):
        d[(i, k)] = chart[k].partial(i) - chart[i].partial(k)
    residual = max(j.max_abs() for j in d.values())
    return ConnectionForm(lc.point, comps, chart, d, residual)


def _homotopy_primitive(chart: list) -> Jet:
    """``psi(h) = int_0^1 sum_i varpi_i(s h) h_i ds`` for a closed 1-form given by jets."""
    n = chart[0].order
    pt = chart[0].point
    out = np.zeros(n_coefficients(n + 1))
    rank = _rank(n + 1)
    from .jets import multi_indices
    for i, w in enumerate(chart):
        for m, coef in zip(multi_indices(n), w.coeffs):
            if coef == 0.0:
                continue
            mm = list(m)
            mm[i] += 1
            out[rank[tuple(mm)]] += coef / (sum(m) + 1)
    return Jet(out, n + 1, pt)


@dataclass
class GlobalScaleResult:
    closed: bool
    residual: float
    log_f: Jet | None = None   # log f with f(p) = 1, as a jet at p
    Ty_residual: float | None = None
    Tx_residual: float | None = None

    @property
    def f(self) -> Jet | None:
        from .jets import exp
        return None if self.log_f is None else exp(self.log_f)

    @property
    def flattening_multiplier(self) -> Jet | None:
        """``f^(-1/2)``: multiplying ``(T_x, T_y)`` by it gives ``varpi = 0``."""
        from .jets import exp
        return None if self.log_f is None else exp(self.log_f * -0.5)


def global_scale_test(E: EngelStructure, p, order: int = DEFAULT_ORDER + 2) -> GlobalScaleResult:
    """Solve ``X(log f) = phi^3_{x3}/3, T_y f = 0`` when ``d varpi = 0``.

    ``f = exp(2 psi)`` with ``d psi = varpi``; ``f`` is normalized to 1 at
    ``p`` (it is only determined up to a constant factor).
    """
    form = connection_form(E, p, order)
    if not form.closed:
        return GlobalScaleResult(False, form.residual)
    lc = local_connection(E, p, order)
    psi = _homotopy_primitive(form.chart_components)
    log_f = psi * 2.0
    ty = lc.Ty(log_f)
    tx = _sum(lc.Tx(log_f), lc.s * (-1.0 / 3.0))
    return GlobalScaleResult(True, form.residual, log_f, ty.max_abs(), tx.max_abs())


# ---------------------------------------------------------------------------
# verdicts, frames on M, integrability


@dataclass
class FlatnessResult:
    flat: bool
    max_residual: float
    threshold: float
    per_point: list = field(default_factory=list)

    def __bool__(self):
        return self.flat


def flatness_test(E: EngelStructure, points, order: int = DEFAULT_ORDER,
                  threshold: float = VANISHING_THRESHOLD) -> FlatnessResult:
    """Flat iff all four invariants vanish (at ``t = 1``) at every point."""
    worst, rows = 0.0, []
    for p in points:
        inv = essential_curvatures(E, p, 1.0, order)
        m = max(abs(v.value) for v in inv.values())
        rows.append((tuple(float(c) for c in p), {k: v.value for k, v in inv.items()}))
        worst = max(worst, m)
    return FlatnessResult(worst < threshold, worst, threshold, rows)


def umbilicity_test(E: EngelStructure, p, order: int = DEFAULT_ORDER,
                    threshold: float = VANISHING_THRESHOLD) -> bool:
    return flatness_test(E, [p], order, threshold).flat


def distinguished_frame_at(E: EngelStructure, p, t: float = 1.0,
                           order: int = DEFAULT_ORDER) -> dict[str, np.ndarray]:
    """Projected lifted frame ``t^{|j|} W_j(p)`` as chart vectors."""
    _require(order, 4, "distinguished frame")
    lc = local_connection(E, p, order)
    return {j: float(t) ** WEIGHT[j] * lc.W(j).values() for j in FRAME_LABELS}


_PLANES = {"y2": ("y", "2"), "x3": ("x", "3"), "y3": ("y", "3")}


def integrability_check(E: EngelStructure, p, which: str,
                        order: int = DEFAULT_ORDER,
                        threshold: float = VANISHING_THRESHOLD) -> tuple[bool, float]:
    """Frobenius test for the plane field spanned by two distinguished fields."""
    b, c = _PLANES[which]
    lc = local_connection(E, p, order)
    Wb, Wc = lc.W(b), lc.W(c)
    n = min(Wb.order, Wc.order)
    comps = lc.W_components(Wb.truncate(n).bracket(Wc.truncate(n)))
    residual = max(abs(comps[a].value) for a in FRAME_LABELS if a not in (b, c))
    return residual < threshold, residual


# ---------------------------------------------------------------------------
# report


@dataclass
class CurvatureReport:
    point: tuple
    t: float
    essential: dict            # name -> (value, weight)
    full_table: dict           # (a, b, c, homogeneity) -> value at t
    varpi: dict                # frame components x, 2, 3 at the point
    d_varpi_zero: bool
    d_varpi_residual: float


def curvature_report(E: EngelStructure, p, t: float = 1.0, order: int = DEFAULT_ORDER,
                     max_homogeneity: int = 4) -> CurvatureReport:
    inv = essential_curvatures(E, p, t, order)
    table = curvature_table(E, p, t, max_homogeneity, order)
    form = connection_form(E, p, order)
    return CurvatureReport(
        point=tuple(float(v) for v in p), t=float(t),
        essential={k: (v.value, v.weight) for k, v in inv.items()},
        full_table={(a, b, c, homogeneity(a, b, c)): w.at(t) for (a, b, c), w in table.items()},
        varpi={k: form.frame_components[k].value for k in ("x", "2", "3")},
        d_varpi_zero=form.closed, d_varpi_residual=form.residual)
