"""Engel CR structures: validation, the D0 line and the scale of Y.

An :class:`EngelStructure` is a pair ``(X, Y)`` of vector fields spanning
the CR distribution ``D`` with ``X = JY`` and ``Y`` a section of the line
``D0`` that annihilates the second Levi-Tanaka bracket.  Structures built
from other data (graphs, rescalings) obtain their fields lazily through a
pair source that evaluates ``X`` and ``Y`` together at a point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import jets as J
from .errors import EngelDegenerate, NormalizationFailed, NotD0Aligned
from .fields import (DEGENERACY_THRESHOLD, FieldJet, JetSourceField, VectorField,
                     adapted_frame, coframe_from_jets, combine)
from .jets import DEFAULT_ORDER, NVARS, Jet

D0_THRESHOLD = 1e-8
FAST_PATH_THRESHOLD = 1e-10
NORMALIZATION_TOLERANCE = 1e-6


def _pt(p) -> tuple:
    return tuple(float(v) for v in p)


@dataclass(frozen=True)
class EngelStructure:
    """Frame generators ``X = JY`` and ``Y`` (a section of D0) on a chart.

    ``source``, when present, evaluates both fields at once; it is used by
    derived structures to avoid recomputing shared work.
    """

    X: VectorField
    Y: VectorField
    name: str = ""
    coordinates: tuple = ("x", "y", "u1", "u2")
    normalized: bool = False
    source: Callable | None = field(default=None, repr=False, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    def pair_jets(self, p, order: int) -> tuple[FieldJet, FieldJet]:
        p = _pt(p)
        if self.source is not None:
            return self.source(p, order)
        return self.X.jet(p, order), self.Y.jet(p, order)

    def frame(self):
        return adapted_frame(self.X, self.Y, normalized=self.normalized)


def structure_from_source(source: Callable, name: str = "", normalized: bool = False,
                          **metadata) -> EngelStructure:
    cached = lru_cache(maxsize=128)(source)
    X = JetSourceField(lambda p, n: cached(p, n)[0], name="X")
    Y = JetSourceField(lambda p, n: cached(p, n)[1], name="Y")
    return EngelStructure(X, Y, name=name, normalized=normalized, source=cached,
                          metadata=dict(metadata))


# ---------------------------------------------------------------------------
# determinants and the D0 line


def det4(cols) -> Jet:
    """Determinant of four field jets (columns), by cofactor expansion."""
    n = min(c.order for c in cols)
    m = [[c[i].truncate(n) for c in cols] for i in range(NVARS)]

    def det3(rows, cs):
        a, b, c = cs
        r0, r1, r2 = rows
        return (m[r0][a] * (m[r1][b] * m[r2][c] - m[r1][c] * m[r2][b])
                - m[r0][b] * (m[r1][a] * m[r2][c] - m[r1][c] * m[r2][a])
                + m[r0][c] * (m[r1][a] * m[r2][b] - m[r1][b] * m[r2][a]))

    total = None
    for j in range(NVARS):
        rest = [k for k in range(NVARS) if k != j]
        term = m[0][j] * det3((1, 2, 3), rest)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    return total


def d0_coefficients(U: FieldJet, V: FieldJet) -> tuple[Jet, Jet]:
    """Unnormalized ``(alpha, beta)`` with ``alpha U + beta V`` spanning D0.

    ``[alpha U + beta V, W] = alpha [U, W] + beta [V, W]`` modulo D' with
    ``W = [U, V]``; the TM/D' class is read off with the 3-form
    ``det(U, V, W, .)``.  Output order is two less than the input order.
    """
    W = U.bracket(V)
    n = W.order - 1
    Uw, Vw = U.truncate(n + 1).bracket(W), V.truncate(n + 1).bracket(W)
    base = [U.truncate(n), V.truncate(n), W.truncate(n)]
    cu = det4(base + [Uw])
    cv = det4(base + [Vw])
    return cv, -cu


def find_D0(U: VectorField, V: VectorField, p, order: int = 0) -> tuple[Jet, Jet]:
    """Direction ``(alpha, beta)`` of D0 in the basis ``(U, V)`` of D at ``p``.

    The pair is scaled so that the component with the larger constant term
    equals one.  Inputs are sampled at ``order + 2``.
    """
    p = _pt(p)
    u, v = U.jet(p, order + 2), V.jet(p, order + 2)
    return _normalize_direction(*d0_coefficients(u, v), p)


def _normalize_direction(a: Jet, b: Jet, p) -> tuple[Jet, Jet]:
    big = a if abs(a.value) >= abs(b.value) else b
    if abs(big.value) <= DEGENERACY_THRESHOLD:
        raise EngelDegenerate(p, "no D0 direction (second bracket vanishes)")
    inv = big.invert()
    return a * inv, b * inv


def align_to_D0(U: VectorField, V: VectorField, scale: float = 1.0, name: str = "",
                **metadata) -> EngelStructure:
    """Engel structure from a basis ``(U, V)`` of D with ``JU = V``.

    ``Y = scale * (alpha U + beta V)`` spans D0 and ``X = JY``.
    """

    def source(p, n):
        u, v = U.jet(p, n + 2), V.jet(p, n + 2)
        a, b = _normalize_direction(*d0_coefficients(u, v), p)
        u, v = u.truncate(n), v.truncate(n)
        Y = combine([a * scale, b * scale], [u, v])
        X = combine([a * scale, b * (-scale)], [v, u])
        return X, Y

    return structure_from_source(source, name=name, aligned_from="(U, V), JU = V",
                                 d0_scale=scale, **metadata)


# ---------------------------------------------------------------------------
# validation


@dataclass
class PointDiagnostics:
    point: tuple
    frame_determinant: float
    d0_residual: float
    engel: bool
    d0_aligned: bool

    @property
    def passed(self) -> bool:
        return self.engel and self.d0_aligned


def _diagnose(X: FieldJet, Y: FieldJet, p) -> PointDiagnostics:
    W = X.bracket(Y)
    X1, Y1 = X.truncate(W.order), Y.truncate(W.order)
    Zx, Zy = X1.bracket(W), Y1.bracket(W)
    base = [X.truncate(0), Y.truncate(0), W.truncate(0)]
    dx = det4(base + [Zx.truncate(0)]).value
    dy = det4(base + [Zy.truncate(0)]).value
    if abs(dx) > DEGENERACY_THRESHOLD:
        res = abs(dy / dx)
        return PointDiagnostics(p, dx, res, True, res < D0_THRESHOLD)
    # X, Y do not form an Engel frame; the distribution may still be Engel with Y misplaced
    return PointDiagnostics(p, dx, float("inf") if abs(dy) > DEGENERACY_THRESHOLD else float("nan"),
                            False, False)


def validate(E: EngelStructure, points, raise_on_failure: bool = True) -> list[PointDiagnostics]:
    """Check the Engel condition and D0 alignment of ``Y`` at each point.

    With ``raise_on_failure`` the first failing point raises
    :class:`EngelDegenerate` or :class:`NotD0Aligned`.
    """
    out = []
    for p in points:
        p = _pt(p)
        X, Y = E.pair_jets(p, 2)
        d = _diagnose(X, Y, p)
        out.append(d)
        if raise_on_failure and not d.passed:
            if d.engel or np.isinf(d.d0_residual):
                raise NotD0Aligned(p, d.d0_residual)
            raise EngelDegenerate(p, f"frame determinant {d.frame_determinant:.3e}")
    return out


# ---------------------------------------------------------------------------
# scale normalization


def scale_defect(X: FieldJet, Y: FieldJet) -> Jet:
    """``phi^2([T_y, T_2])``, the obstruction to ``[T_y, T_2]`` lying in D."""
    T2 = X.bracket(Y)
    T3 = X.truncate(T2.order).bracket(T2)
    YT2 = Y.truncate(T2.order).bracket(T2)
    n = T3.order
    cof = coframe_from_jets([X.truncate(n), Y.truncate(n), T2.truncate(n), T3], X.point)
    return cof.components(YT2)[2]


def solve_transport(Y: FieldJet, rhs: Jet) -> Jet:
    """Jet ``g`` of order ``rhs.order + 1`` with ``Y(g) = rhs`` and ``g = 0`` on a transversal.

    The transversal is the coordinate hyperplane through the base point
    orthogonal to the largest component of ``Y``; the equation is solved by
    Picard iteration, which fixes one more power of that coordinate per
    sweep and is exact after ``order + 2`` sweeps.
    """
    n = rhs.order
    k = int(np.argmax(np.abs(Y.values())))
    if abs(Y[k].value) <= DEGENERACY_THRESHOLD:
        raise NormalizationFailed(f"Y vanishes at {Y.point}")
    Yn = Y.truncate(n)
    inv_k = Yn[k].invert()
    g = Jet.zero(Y.point, n + 1)
    for _ in range(n + 2):
        acc = rhs
        for j in range(NVARS):
            if j != k:
                acc = acc - Yn[j] * g.partial(j)
        g = (acc * inv_k).integrate(k)
    return g


def normalize_pair(X: FieldJet, Y: FieldJet, order: int) -> tuple[FieldJet, FieldJet, Jet]:
    """Rescale ``(X, Y)`` by ``tau`` with ``tau(p) = 1`` so that ``[T_y, T_2]`` lies in D.

    Inputs must have order ``order + 2``.  Returns the rescaled pair and
    ``log tau`` at ``order``.
    """
    h = scale_defect(X, Y)
    if h.max_abs() < FAST_PATH_THRESHOLD:
        return X.truncate(order), Y.truncate(order), Jet.zero(X.point, order)
    # [tau Y, [tau X, tau Y]] = tau^3 [Y, T2] + 3 tau^2 (Y tau) T2  mod D
    g = solve_transport(Y.truncate(order), h.truncate(order - 1) * (-1.0 / 3.0))
    residual = Y.truncate(order).apply(g) + h.truncate(order - 1) / 3.0
    if not np.isfinite(residual.max_abs()) or residual.max_abs() > NORMALIZATION_TOLERANCE:
        raise NormalizationFailed(f"transport residual {residual.max_abs():.3e} at {X.point}")
    tau = J.exp(g)
    return X.truncate(order).scale(tau), Y.truncate(order).scale(tau), g


def normalize_scale(E: EngelStructure, p=None, order: int = DEFAULT_ORDER) -> EngelStructure:
    """Structure ``(tau X, tau Y)`` whose bracket ``[T_y, T_2]`` lies in D.

    ``tau`` is pinned by ``tau = 1`` on a transversal through each evaluation
    point, so in particular ``tau(p) = 1`` wherever the structure is queried.
    If ``p`` is given and the defect already vanishes there to all computed
    orders, ``E`` is returned unchanged.
    """
    if E.normalized:
        return E
    if p is not None:
        X, Y = E.pair_jets(p, order + 2)
        if scale_defect(X, Y).max_abs() < FAST_PATH_THRESHOLD:
            return replace(E, normalized=True)

    def source(q, n):
        X, Y = E.pair_jets(q, n + 2)
        Xn, Yn, _ = normalize_pair(X, Y, n)
        return Xn, Yn

    return structure_from_source(source, name=E.name, normalized=True,
                                 gauge="tau = 1 on the coordinate hyperplane through each "
                                       "evaluation point transversal to Y",
                                 **E.metadata)


def log_tau(E: EngelStructure, p, order: int = DEFAULT_ORDER) -> Jet:
    """``log tau`` at ``p`` used by :func:`normalize_scale` (zero on the fast path)."""
    X, Y = E.pair_jets(p, order + 2)
    return normalize_pair(X, Y, order)[2]


# ---------------------------------------------------------------------------
# Levi-Tanaka data


@dataclass
class LeviTanakaData:
    """Brackets in the quotient bases ``[T_2] of D'/D`` and ``[T_3] of TM/D'``.

    ``bracket1`` is L1(X, Y); ``bracket2_x`` and ``bracket2_y`` are
    L2(X, [T_2]) and L2(Y, [T_2]).
    """

    point: tuple
    bracket1: float
    bracket2_x: float
    bracket2_y: float
    frame_values: np.ndarray

    @property
    def model_isomorphic(self) -> bool:
        return (abs(self.bracket1) > DEGENERACY_THRESHOLD
                and abs(self.bracket2_x) > DEGENERACY_THRESHOLD
                and abs(self.bracket2_y) < D0_THRESHOLD)


def levi_tanaka_at(E: EngelStructure, p) -> LeviTanakaData:
    p = _pt(p)
    X, Y = E.pair_jets(p, 2)
    T2 = X.bracket(Y)
    T3 = X.truncate(1).bracket(T2)
    YT2 = Y.truncate(1).bracket(T2)
    frame0 = [X.truncate(0), Y.truncate(0), T2.truncate(0), T3]
    cof = coframe_from_jets(frame0, p)
    l1 = cof.components(T2.truncate(0))[2].value
    l2x = cof.components(T3)[3].value
    l2y = cof.components(YT2)[3].value
    vals = np.array([f.values() for f in frame0])
    return LeviTanakaData(p, l1, l2x, l2y, vals)
