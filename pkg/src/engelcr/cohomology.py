"""Exact Chevalley-Eilenberg complex of ``g_-`` with values in ``g``.

``g = g_-3 + g_-2 + g_-1 + g_0`` has basis ``V_0, V_x, V_y, V_2, V_3`` with

    [V_x, V_y] = V_2,  [V_x, V_2] = V_3,  [V_0, V_j] = -|j| V_j,

and ``g_- = span(V_x, V_y, V_2, V_3)``.  A ``k``-cochain is stored by its
values on increasing index tuples of ``g_-``; all linear algebra is over the
rationals.

Differential (values acted on by the full bracket of ``g``)::

    (d psi)(X, Y)    = [X, psi(Y)] - [Y, psi(X)] - psi([X, Y])
    (d phi)(X, Y, Z) = sum_cyclic [X, phi(Y, Z)] - phi([X, Y], Z)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Mapping

import numpy as np

G = ("0", "x", "y", "2", "3")
G_MINUS = ("x", "y", "2", "3")
WEIGHT = {"0": 0, "x": 1, "y": 1, "2": 2, "3": 3}
DEGREE = {k: -w for k, w in WEIGHT.items()}


def bracket(a: str, b: str) -> dict[str, Fraction]:
    """``[V_a, V_b]`` as a sparse combination of basis labels."""
    if a == b:
        return {}
    table = {("x", "y"): {"2": Fraction(1)}, ("x", "2"): {"3": Fraction(1)}}
    if (a, b) in table:
        return dict(table[(a, b)])
    if (b, a) in table:
        return {k: -v for k, v in table[(b, a)].items()}
    if a == "0":
        return {b: Fraction(-WEIGHT[b])}
    if b == "0":
        return {a: Fraction(WEIGHT[a])}
    return {}


def _bracket_vec(a: str, vec: Mapping[str, Fraction]) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for b, cb in vec.items():
        for c, cc in bracket(a, b).items():
            out[c] = out.get(c, Fraction(0)) + cb * cc
    return out


def jacobi_holds() -> bool:
    for a, b, c in combinations(G, 3):
        tot: dict[str, Fraction] = {}
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            for k, v in _bracket_vec(x, bracket(y, z)).items():
                tot[k] = tot.get(k, Fraction(0)) + v
        if any(v != 0 for v in tot.values()):
            return False
    return True


def grading_respected() -> bool:
    for a in G:
        for b in G:
            for c in bracket(a, b):
                if DEGREE[c] != DEGREE[a] + DEGREE[b]:
                    return False
    return True


# ---------------------------------------------------------------------------
# cochain spaces


@lru_cache(maxsize=None)
def cochain_basis(k: int) -> tuple:
    """Coordinates ``(target, args)`` with ``args`` increasing in ``g_-``."""
    return tuple((a, args) for a in G for args in combinations(G_MINUS, k))


@lru_cache(maxsize=None)
def _cochain_index(k: int) -> dict:
    return {c: i for i, c in enumerate(cochain_basis(k))}


def coordinate_homogeneity(coord) -> int:
    a, args = coord
    return sum(WEIGHT[x] for x in args) - WEIGHT[a]


def _sorted_args(args):
    """Sort a tuple of distinct labels, returning (sign, sorted tuple)."""
    order = {lab: i for i, lab in enumerate(G_MINUS)}
    args = list(args)
    sign = 1
    for i in range(len(args)):
        for j in range(len(args) - 1 - i):
            if order[args[j]] > order[args[j + 1]]:
                args[j], args[j + 1] = args[j + 1], args[j]
                sign = -sign
    return sign, tuple(args)


def _evaluate(vec, k, args) -> dict[str, Fraction]:
    """Value of a k-cochain on an argument tuple, as a vector in g."""
    if len(set(args)) < len(args):
        return {}
    sign, key = _sorted_args(args)
    idx = _cochain_index(k)
    out = {}
    for a in G:
        v = vec[idx[(a, key)]]
        if v:
            out[a] = sign * v
    return out


def _evaluate_linear(vec, k, args_combo) -> dict[str, Fraction]:
    """Cochain evaluated with one argument a combination ``{label: coeff}``."""
    out: dict[str, Fraction] = {}
    pos = next(i for i, x in enumerate(args_combo) if isinstance(x, dict))
    for lab, coef in args_combo[pos].items():
        args = list(args_combo)
        args[pos] = lab
        for a, v in _evaluate(vec, k, args).items():
            out[a] = out.get(a, Fraction(0)) + coef * v
    return out


def coboundary_vector(vec, k: int) -> list[Fraction]:
    """``d`` applied to a k-cochain given as a coordinate vector (k = 1 or 2)."""
    out = [Fraction(0)] * len(cochain_basis(k + 1))
    for j, (a, args) in enumerate(cochain_basis(k + 1)):
        val: dict[str, Fraction] = {}

        def acc(d, sign=1):
            for lab, v in d.items():
                val[lab] = val.get(lab, Fraction(0)) + sign * v

        if k == 1:
            X, Y = args
            acc(_bracket_vec(X, _evaluate(vec, 1, (Y,))))
            acc(_bracket_vec(Y, _evaluate(vec, 1, (X,))), -1)
            xy = bracket(X, Y)
            if xy:
                acc(_evaluate_linear(vec, 1, (xy,)), -1)
        elif k == 2:
            X, Y, Z = args
            for P, Q, R in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
                acc(_bracket_vec(P, _evaluate(vec, 2, (Q, R))))
                pq = bracket(P, Q)
                if pq:
                    acc(_evaluate_linear(vec, 2, (pq, R)), -1)
        else:
            raise ValueError("coboundary implemented for 1- and 2-cochains")
        out[j] = val.get(a, Fraction(0))
    return out


@lru_cache(maxsize=None)
def coboundary_matrix(k: int) -> tuple:
    """Matrix of ``d: C^k -> C^{k+1}`` (rows: C^{k+1} coordinates)."""
    n = len(cochain_basis(k))
    cols = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        cols.append(coboundary_vector(e, k))
    rows = len(cochain_basis(k + 1))
    return tuple(tuple(cols[c][r] for c in range(n)) for r in range(rows))


def coboundary(cochain: "Cochain") -> "Cochain":
    """``d`` of a 1- or 2-cochain."""
    return Cochain(cochain.degree + 1, coboundary_vector(cochain.vector(), cochain.degree))


# ---------------------------------------------------------------------------
# exact linear algebra


def rref(rows):
    """Reduced row echelon form over the rationals; returns ``(matrix, pivot columns)``."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows, ncols: int) -> list[list[Fraction]]:
    """Basis of ``{v : rows v = 0}``."""
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(m, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def column_space(rows) -> list[list[Fraction]]:
    """Basis of the span of the columns."""
    if not rows:
        return []
    cols = [list(c) for c in zip(*rows)]
    m, _ = rref(cols)
    return m


# ---------------------------------------------------------------------------
# cochains


@dataclass
class Cochain:
    """A ``degree``-cochain on ``g_-`` with values in ``g``, by coordinates."""

    degree: int
    coords: dict = field(default_factory=dict)

    def __init__(self, degree: int, values=None):
        self.degree = degree
        self.coords = {}
        basis = cochain_basis(degree)
        if values is None:
            return
        if isinstance(values, Mapping):
            for key, v in values.items():
                a, args = key[0], tuple(key[1:]) if len(key) > 2 else tuple(key[1])
                sign, args = _sorted_args(args)
                self.coords[(a, args)] = self.coords.get((a, args), 0) + sign * v
        else:
            for c, v in zip(basis, values):
                if v != 0:
                    self.coords[c] = v

    def vector(self) -> list:
        return [self.coords.get(c, Fraction(0)) for c in cochain_basis(self.degree)]

    def homogeneity_part(self, h: int) -> "Cochain":
        return Cochain(self.degree, {(a, *args): v for (a, args), v in self.coords.items()
                                     if coordinate_homogeneity((a, args)) == h})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.coords.values())

    def max_abs(self) -> float:
        return max((abs(float(v)) for v in self.coords.values()), default=0.0)

    def __getitem__(self, key):
        a, args = key[0], tuple(key[1:]) if len(key) > 2 else tuple(key[1])
        sign, args = _sorted_args(args)
        return sign * self.coords.get((a, args), 0)

    def __repr__(self):
        items = ", ".join(f"{a}_{''.join(args)}: {v}" for (a, args), v in self.coords.items())
        return f"Cochain{self.degree}({items})"


def Cochain2(values=None) -> Cochain:
    return Cochain(2, values)


def _hom_indices(k: int, h: int | None):
    return [i for i, c in enumerate(cochain_basis(k)) if h is None or coordinate_homogeneity(c) == h]


def _restrict_rows(matrix, rows_idx, cols_idx):
    return [[matrix[r][c] for c in cols_idx] for r in rows_idx]


def homogeneities(k: int = 2) -> list[int]:
    return sorted({coordinate_homogeneity(c) for c in cochain_basis(k)})


@dataclass
class SubspaceBasis:
    homogeneity: int | None
    dimension: int
    basis: list  # list of Cochain


def cocycle_space(homogeneity: int | None = None) -> SubspaceBasis:
    """Exact basis of ``Z^2 = ker(d: C^2 -> C^3)``, optionally in one homogeneity."""
    d2 = coboundary_matrix(2)
    cols = _hom_indices(2, homogeneity)
    sub = _restrict_rows(d2, range(len(d2)), cols)
    ker = nullspace(sub, len(cols))
    basis = []
    for v in ker:
        full = [Fraction(0)] * len(cochain_basis(2))
        for c, x in zip(cols, v):
            full[c] = x
        basis.append(Cochain(2, full))
    return SubspaceBasis(homogeneity, len(basis), basis)


def coboundary_space(homogeneity: int | None = None) -> SubspaceBasis:
    """Exact basis of ``B^2 = d(C^1)``, optionally in one homogeneity."""
    d1 = coboundary_matrix(1)
    rows = _hom_indices(2, homogeneity)
    cols = _hom_indices(1, homogeneity)
    sub = _restrict_rows(d1, rows, cols)
    img = column_space(sub)
    basis = []
    for v in img:
        full = [Fraction(0)] * len(cochain_basis(2))
        for r, x in zip(rows, v):
            full[r] = x
        basis.append(Cochain(2, full))
    return SubspaceBasis(homogeneity, len(basis), basis)


# Closedness and exactness conditions as linear functionals {(a, b, c): coefficient}.
CLOSED_CONDITIONS = (
    {("x", "x", "y"): 1, ("2", "y", "2"): -1, ("3", "y", "3"): 1},
    {("x", "x", "2"): 1, ("y", "y", "2"): 1, ("0", "x", "y"): 5, ("3", "2", "3"): -1},
    {("2", "y", "3"): 1, ("0", "x", "y"): 3, ("3", "2", "3"): -1},
    {("y", "y", "3"): 1, ("x", "x", "3"): -1},
    {("0", "y", "2"): 1},
    {("x", "y", "3"): 1},
    {("2", "2", "3"): 1, ("x", "x", "3"): -2},
    {("0", "x", "2"): 1, ("x", "x", "3"): 1},
    {("0", "y", "3"): 1},
    {("x", "2", "3"): 1},
    {("0", "x", "3"): 1},
    {("y", "2", "3"): 1},
    {("0", "2", "3"): 1},
)
EXACT_CONDITIONS = (
    {("x", "y", "2"): 1},
    {("y", "x", "2"): 1, ("2", "x", "3"): 1},
    {("y", "y", "2"): 1, ("0", "x", "y"): 1},
    {("y", "x", "3"): 1},
)
# The same condition with the opposite relative sign, as it is sometimes quoted.
# It is not satisfied by d(C^1) for this algebra; the report records its defect.
EXACT_CONDITION_OPPOSITE_SIGN = {("y", "y", "2"): 1, ("0", "x", "y"): -1}


def _functional(cond) -> list[Fraction]:
    idx = _cochain_index(2)
    v = [Fraction(0)] * len(cochain_basis(2))
    for (a, b, c), x in cond.items():
        sign, args = _sorted_args((b, c))
        v[idx[(a, args)]] += sign * Fraction(x)
    return v


def _apply(functional, vec) -> Fraction:
    return sum((f * x for f, x in zip(functional, vec)), Fraction(0))


# cohomology representatives: homogeneity -> list of cochain coordinate dicts
H2_REPRESENTATIVES = {
    2: (
        {("x", "y", "2"): 1},
        {("2", "x", "3"): 1},
        {("y", "y", "2"): 1, ("2", "y", "3"): 1, ("3", "2", "3"): 1},
    ),
    3: ({("y", "x", "3"): 1},),
}


def representatives(h: int) -> list[Cochain]:
    return [Cochain(2, {k: Fraction(v) for k, v in rep.items()})
            for rep in H2_REPRESENTATIVES.get(h, ())]


@dataclass
class CohomologyReport:
    dim_cochains: dict        # degree -> dimension
    by_homogeneity: dict      # h -> {"C": , "Z": , "B": , "H": }
    dim_Z: int
    dim_B: int
    dim_H: int
    d_squared_zero: bool
    jacobi: bool
    closed_conditions_hold: bool
    exact_conditions_hold: bool
    representatives_independent: bool
    injective_homogeneities: list
    opposite_sign_defect: int = 0
    convention: str = ("(d phi)(X,Y,Z) = sum_cyclic [X, phi(Y,Z)] - phi([X,Y], Z); "
                       "(d psi)(X,Y) = [X, psi(Y)] - [Y, psi(X)] - psi([X,Y])")

    @property
    def histogram(self) -> dict:
        return {h: row["H"] for h, row in self.by_homogeneity.items() if row["H"]}

    def as_dict(self) -> dict:
        return {
            "dim_C1": self.dim_cochains[1], "dim_C2": self.dim_cochains[2],
            "dim_C3": self.dim_cochains[3],
            "dim_Z2": self.dim_Z, "dim_B2": self.dim_B, "dim_H2": self.dim_H,
            "by_homogeneity": {str(h): row for h, row in self.by_homogeneity.items()},
            "H2_histogram": {str(h): n for h, n in self.histogram.items()},
            "d_squared_zero": self.d_squared_zero,
            "jacobi": self.jacobi,
            "closed_conditions_hold": self.closed_conditions_hold,
            "exact_conditions_hold": self.exact_conditions_hold,
            "representatives_independent": self.representatives_independent,
            "d_injective_on_homogeneities": self.injective_homogeneities,
            "exact_condition_yy2_minus_0xy_rank_defect": self.opposite_sign_defect,
            "convention": self.convention,
            "representatives": {
                str(h): [{f"{a}_{''.join(args)}": str(v) for (a, args), v in r.coords.items()}
                         for r in representatives(h)]
                for h in H2_REPRESENTATIVES
            },
        }


def d_squared_zero() -> bool:
    d1, d2 = coboundary_matrix(1), coboundary_matrix(2)
    for r in range(len(d2)):
        for c in range(len(d1[0])):
            if sum((d2[r][k] * d1[k][c] for k in range(len(d1))), Fraction(0)) != 0:
                return False
    return True


@lru_cache(maxsize=1)
def cohomology_report() -> CohomologyReport:
    by_h = {}
    for h in homogeneities(2):
        n_c = len(_hom_indices(2, h))
        z = cocycle_space(h).dimension
        b = coboundary_space(h).dimension
        by_h[h] = {"C": n_c, "Z": z, "B": b, "H": z - b}
    Z = cocycle_space()
    B = coboundary_space()
    closed_ok = all(_apply(_functional(cond), v.vector()) == 0
                    for cond in CLOSED_CONDITIONS for v in Z.basis)
    closed_ok = closed_ok and rank([_functional(c) for c in CLOSED_CONDITIONS]) == 30 - Z.dimension
    exact_ok = all(_apply(_functional(cond), v.vector()) == 0
                   for cond in CLOSED_CONDITIONS + EXACT_CONDITIONS for v in B.basis)
    exact_ok = exact_ok and rank([_functional(c) for c in CLOSED_CONDITIONS + EXACT_CONDITIONS]) \
        == 30 - B.dimension
    reps_ok = True
    for h in H2_REPRESENTATIVES:
        reps = [r.vector() for r in representatives(h)]
        closed = all(_apply(_functional(c), r) == 0 for c in CLOSED_CONDITIONS for r in reps)
        bh = [v.vector() for v in coboundary_space(h).basis]
        reps_ok = reps_ok and closed and rank(bh + reps) == len(bh) + len(reps) \
            == cocycle_space(h).dimension
    injective = [h for h in (4, 5) if by_h[h]["Z"] == 0]
    opp = _functional(EXACT_CONDITION_OPPOSITE_SIGN)
    opposite = sum(1 for v in B.basis if _apply(opp, v.vector()) != 0)
    return CohomologyReport(
        dim_cochains={k: len(cochain_basis(k)) for k in (1, 2, 3)},
        by_homogeneity=by_h, dim_Z=Z.dimension, dim_B=B.dimension,
        dim_H=Z.dimension - B.dimension, d_squared_zero=d_squared_zero(),
        jacobi=jacobi_holds() and grading_respected(),
        closed_conditions_hold=closed_ok, exact_conditions_hold=exact_ok,
        representatives_independent=reps_ok, injective_homogeneities=injective,
        opposite_sign_defect=opposite)


# ---------------------------------------------------------------------------
# splitting a cochain into exact, closed non-exact and non-closed parts


def _greedy_columns(base: list[list[Fraction]], candidates: list[int], n_target: int, size: int):
    """Add unit vectors e_c (c from candidates, in order) while they enlarge the span."""
    chosen = []
    current = [list(v) for v in base]
    r = rank(current) if current else 0
    for c in candidates:
        if r == n_target:
            break
        e = [Fraction(0)] * size
        e[c] = Fraction(1)
        r2 = rank(current + [e])
        if r2 > r:
            chosen.append(c)
            current.append(e)
            r = r2
    return chosen


def _pivot_coordinates(basis: list[list[Fraction]], coords: list[int]) -> list[int]:
    """Coordinates (in order) on which the given basis restricts to an isomorphism."""
    chosen = []
    for c in coords:
        trial = chosen + [c]
        if rank([[v[i] for i in trial] for v in basis]) == len(trial):
            chosen = trial
        if len(chosen) == len(basis):
            break
    return chosen


@lru_cache(maxsize=None)
def splitting(h: int):
    """Fixed bases ``(B, H, N)`` of ``C^2`` in homogeneity ``h``.

    ``B`` spans the coboundaries, ``H`` the chosen cohomology
    representatives, ``N`` a complement of the cocycles made of coordinate
    vectors.  The coordinates carrying the exact part are excluded from
    ``N`` so that the exact part of a cochain is read off those coordinates.
    """
    idx = _hom_indices(2, h)
    size = len(cochain_basis(2))
    B = [v.vector() for v in coboundary_space(h).basis]
    H = [r.vector() for r in representatives(h)]
    Z = [v.vector() for v in cocycle_space(h).basis]
    pivots = _pivot_coordinates(B, idx) if B else []
    rest = [c for c in idx if c not in pivots]
    N_cols = _greedy_columns(Z, rest, len(idx), size)
    N = []
    for c in N_cols:
        e = [Fraction(0)] * size
        e[c] = Fraction(1)
        N.append(e)
    return B, H, N, pivots


@dataclass
class Classification:
    homogeneity: int
    exact: Cochain
    closed: Cochain
    non_closed: Cochain
    exact_coordinates: tuple


def classify_curvature_cochain(c, homogeneity: int) -> Classification:
    """Split the homogeneity-``h`` part of ``c`` into exact + closed non-exact + non-closed.

    ``c`` is a :class:`Cochain` or a mapping ``{(a, b, c): value}``; values
    may be floats.  Projections use the exact bases of :func:`splitting`.
    """
    if not isinstance(c, Cochain):
        c = Cochain(2, dict(c))
    B, H, N, pivots = splitting(homogeneity)
    idx = _hom_indices(2, homogeneity)
    cols = B + H + N
    mat = np.array([[float(v[i]) for v in cols] for i in idx])
    vec = np.array([float(c.vector()[i]) for i in idx])
    coef = np.linalg.solve(mat, vec) if len(idx) else np.zeros(0)
    size = len(cochain_basis(2))

    def part(vectors, coefs):
        out = [0.0] * size
        for v, k in zip(vectors, coefs):
            for i in idx:
                out[i] += float(v[i]) * k
        return Cochain(2, out)

    nb, nh = len(B), len(H)
    basis = cochain_basis(2)
    return Classification(homogeneity, part(B, coef[:nb]), part(H, coef[nb:nb + nh]),
                          part(N, coef[nb + nh:]), tuple(basis[i] for i in pivots))
