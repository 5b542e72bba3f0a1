"""Built-in Engel CR structures.

* :func:`cubic` -- the flat model ``v1 = |z|^2, v2 = Re z |z|^2``.
* :func:`graph_to_engel` -- rigid graphs ``v1 = F1(x, y), v2 = F2(x, y)``.
* :func:`normal_form_model` -- truncated normal forms with coefficients
  ``A1, A2, B1..B8``.
* :func:`ode_normal_coordinates` -- ``X = d/dx + p d/dy + q d/dp + B d/dq``,
  ``Y = d/dq`` on the chart ``(x, y, p, q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import jets as J
from .engel import EngelStructure, align_to_D0, normalize_scale, validate
from .errors import EngelDegenerate
from .fields import CombinationField, ExpressionField, ExpressionScalar, ScalarField, scalar_field
from .jets import NVARS, Jet

ORIGIN = (0.0, 0.0, 0.0, 0.0)


class Poly:
    """Real polynomial in the four chart variables, ``{exponents: coefficient}``."""

    def __init__(self, terms: Mapping | None = None):
        self.terms = {}
        for m, c in (terms or {}).items():
            m = tuple(int(k) for k in m) + (0,) * (NVARS - len(m))
            if len(m) != NVARS or any(k < 0 for k in m):
                raise ValueError(f"bad exponent tuple {m}")
            if c != 0:
                self.terms[m] = self.terms.get(m, 0.0) + float(c)

    def __call__(self, *coords):
        """Evaluate on jets (or floats)."""
        if not self.terms:
            return 0.0 * coords[0]
        top = [max(m[i] for m in self.terms) for i in range(NVARS)]
        powers = []
        for i in range(NVARS):
            row = [1.0]
            for _ in range(top[i]):
                row.append(row[-1] * coords[i])
            powers.append(row)
        out = 0.0
        for m, c in self.terms.items():
            term = c
            for i in range(NVARS):
                if m[i]:
                    term = powers[i][m[i]] * term
            out = term + out
        return out

    def diff(self, axis: int) -> "Poly":
        out = {}
        for m, c in self.terms.items():
            if m[axis]:
                mm = list(m)
                mm[axis] -= 1
                out[tuple(mm)] = out.get(tuple(mm), 0.0) + c * m[axis]
        return Poly(out)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Poly(out)

    def __mul__(self, s: float) -> "Poly":
        return Poly({m: c * s for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Poly":
        return self * -1.0

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def __repr__(self):
        return f"Poly({self.terms})"


def _zz_bar(a: int, b: int) -> tuple[Poly, Poly]:
    """Real and imaginary parts of ``z^a zbar^b`` with ``z = x + iy``."""
    # expand with exact Gaussian integers: coefficient of x^i y^j
    coef = {(0, 0): (1, 0)}
    for factor in [(1, 1)] * a + [(1, -1)] * b:  # (x-coef, y-coef as multiple of i)
        new = {}
        for (i, j), (re, im) in coef.items():
            # times x
            r, s = new.get((i + 1, j), (0, 0))
            new[(i + 1, j)] = (r + re, s + im)
            # times (+-) i y
            sign = factor[1]
            r, s = new.get((i, j + 1), (0, 0))
            new[(i, j + 1)] = (r - sign * im, s + sign * re)
        coef = new
    re = Poly({(i, j): r for (i, j), (r, s) in coef.items()})
    im = Poly({(i, j): s for (i, j), (r, s) in coef.items()})
    return re, im


# monomials of the normal form, as (function, part, a, b)
_NORMAL_FORM_TERMS = {
    "A1": ("F1", "Re", 2, 3), "A2": ("F1", "Im", 2, 3),
    "B1": ("F2", "Re", 4, 1), "B2": ("F2", "Re", 2, 3), "B3": ("F2", "Im", 2, 3),
    "B4": ("F2", "Re", 5, 1), "B5": ("F2", "Im", 5, 1), "B6": ("F2", "Re", 4, 2),
    "B7": ("F2", "Im", 4, 2), "B8": ("F2", "Re", 3, 3),
}
_EXPANSIONS = {name: _zz_bar(a, b)[0 if part == "Re" else 1]
               for name, (_, part, a, b) in _NORMAL_FORM_TERMS.items()}
_BASE_F1 = _zz_bar(1, 1)[0]          # |z|^2
_BASE_F2 = _zz_bar(2, 1)[0]          # Re z^2 zbar = x (x^2 + y^2)


@dataclass(frozen=True)
class NormalFormCoefficients:
    A1: float = 0.0
    A2: float = 0.0
    B1: float = 0.0
    B2: float = 0.0
    B3: float = 0.0
    B4: float = 0.0
    B5: float = 0.0
    B6: float = 0.0
    B7: float = 0.0
    B8: float = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in _NORMAL_FORM_TERMS}


@dataclass
class GraphSpec:
    """Rigid graph ``v1 = F1(x, y), v2 = F2(x, y)`` over the chart ``(x, y, u1, u2)``."""

    F1: Poly
    F2: Poly
    truncation_degree: int = 6
    name: str = "graph"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for F in (self.F1, self.F2):
            if any(m[2] or m[3] for m in F.terms):
                raise ValueError("rigid graphs may not depend on u1, u2")


def _V_x():
    return ExpressionField([0.5, 0.0, lambda x, y, u1, u2: y, lambda x, y, u1, u2: x * y],
                           name="V_x")


def _V_y():
    return ExpressionField([0.0, -0.5, lambda x, y, u1, u2: x,
                            lambda x, y, u1, u2: (3.0 * x * x + y * y) * 0.5], name="V_y")


def model_fields() -> dict:
    """``V_x, V_y, V_2, V_3`` of the cubic as exact polynomial fields."""
    return {
        "x": _V_x(),
        "y": _V_y(),
        "2": ExpressionField([0.0, 0.0, 1.0, lambda x, y, u1, u2: 2.0 * x], name="V_2"),
        "3": ExpressionField([0.0, 0.0, 0.0, 1.0], name="V_3"),
    }


def cubic() -> EngelStructure:
    """The flat model with ``(X, Y) = (V_x, V_y)``; already scale-normalized."""
    return EngelStructure(_V_x(), _V_y(), name="cubic", normalized=True)


def graph_fields(G: GraphSpec) -> tuple[ExpressionField, ExpressionField]:
    """``U = d_x + F1_y d_u1 + F2_y d_u2`` and ``V = d_y - F1_x d_u1 - F2_x d_u2`` (``JU = V``)."""
    F1x, F1y = G.F1.diff(0), G.F1.diff(1)
    F2x, F2y = G.F2.diff(0), G.F2.diff(1)
    U = ExpressionField([1.0, 0.0, F1y, F2y], name="U")
    V = ExpressionField([0.0, 1.0, -F1x, -F2x], name="V")
    return U, V


def graph_to_engel(G: GraphSpec, check_point=ORIGIN) -> EngelStructure:
    """Engel structure of a rigid graph, with Y on D0 and scale-normalized.

    ``Y = -1/2 (alpha U + beta V)`` so that the cubic graph reproduces
    ``(V_x, V_y)`` exactly.
    """
    U, V = graph_fields(G)
    aligned = align_to_D0(U, V, scale=-0.5, name=G.name, **G.metadata)
    try:
        validate(aligned, [check_point])
    except EngelDegenerate:
        raise
    return normalize_scale(aligned)


def cubic_graph() -> GraphSpec:
    return GraphSpec(_BASE_F1, _BASE_F2, truncation_degree=3, name="cubic graph")


def normal_form_graph(c: NormalFormCoefficients | Mapping) -> GraphSpec:
    if not isinstance(c, NormalFormCoefficients):
        c = NormalFormCoefficients(**dict(c))
    F1, F2 = _BASE_F1, _BASE_F2
    for name, value in c.as_dict().items():
        if value:
            term = _EXPANSIONS[name] * value
            if _NORMAL_FORM_TERMS[name][0] == "F1":
                F1 = F1 + term
            else:
                F2 = F2 + term
    return GraphSpec(F1, F2, truncation_degree=6, name="normal form",
                     metadata={"coefficients": c.as_dict()})


def normal_form_model(c: NormalFormCoefficients | Mapping) -> EngelStructure:
    """Truncated normal form: only the listed monomials, higher terms set to zero."""
    return graph_to_engel(normal_form_graph(c))


def ode_normal_coordinates(B: Callable | Poly | float = 0.0,
                           scale: ScalarField | Callable | float = 1.0) -> EngelStructure:
    """``Y = scale * d/dq`` and ``X = scale * (d/dx + p d/dy + q d/dp + B d/dq)``.

    Chart order is ``(x, y, p, q)``.
    """
    X0 = ExpressionField([1.0, lambda x, y, p, q: p, lambda x, y, p, q: q, B], name="X")
    Y0 = ExpressionField([0.0, 0.0, 0.0, 1.0], name="Y")
    sc = scalar_field(scale)
    if isinstance(sc, ExpressionScalar) and not callable(sc.fn) and float(sc.fn) == 1.0:
        X, Y = X0, Y0
    else:
        X, Y = CombinationField([sc], [X0]), CombinationField([sc], [Y0])
    return EngelStructure(X, Y, name="ode normal coordinates", coordinates=("x", "y", "p", "q"))


def rescaled(E: EngelStructure, factor: Callable | ScalarField) -> EngelStructure:
    """``(f X, f Y)`` for a positive scalar ``f``; the result is not normalized."""
    f = scalar_field(factor)
    return EngelStructure(CombinationField([f], [E.X]), CombinationField([f], [E.Y]),
                          name=f"rescaled {E.name}", coordinates=E.coordinates)
