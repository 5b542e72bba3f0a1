"""Vector fields on a 4-dimensional chart, evaluated as jets.

Two layers live here.  :class:`ScalarField` and :class:`VectorField` are
lazy evaluators: ask them for a jet at a point and an order.  Once jets are
in hand, :class:`FieldJet` does the pointwise algebra (brackets, directional
derivatives, linear combinations) without re-evaluating anything; the heavy
pipelines in :mod:`engelcr.cartan` work at that level.

Frame labels are ``"x", "y", "2", "3"`` for ``(T_x, T_y, T_2, T_3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import EngelDegenerate, StructuralError
from .jets import NVARS, Jet, coordinate_jets

FRAME_LABELS = ("x", "y", "2", "3")
LABEL_INDEX = {lab: i for i, lab in enumerate(FRAME_LABELS)}
PAIRS = tuple(combinations(FRAME_LABELS, 2))  # xy, x2, x3, y2, y3, 23

DEGENERACY_THRESHOLD = 1e-8


def _to_jet(value, point, order) -> Jet:
    if isinstance(value, Jet):
        if value.order < order:
            raise StructuralError(f"evaluator returned order {value.order}, need {order}")
        return value.truncate(order)
    return Jet.constant(float(value), point, order)


# ---------------------------------------------------------------------------
# pointwise algebra


class FieldJet:
    """Components of a vector field, as jets at one base point."""

    __slots__ = ("comps",)

    def __init__(self, comps: Sequence[Jet]):
        comps = tuple(comps)
        if len(comps) != NVARS:
            raise StructuralError(f"vector field needs {NVARS} components")
        order, point = comps[0].order, comps[0].point
        for c in comps[1:]:
            if c.order != order or c.point != point:
                raise StructuralError("field components disagree in order or base point")
        self.comps = comps

    @classmethod
    def zero(cls, point, order):
        return cls([Jet.zero(point, order)] * NVARS)

    @property
    def order(self) -> int:
        return self.comps[0].order

    @property
    def point(self):
        return self.comps[0].point

    def __getitem__(self, i) -> Jet:
        return self.comps[i]

    def __iter__(self):
        return iter(self.comps)

    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.comps])

    def truncate(self, order: int) -> "FieldJet":
        if order == self.order:
            return self
        return FieldJet([c.truncate(order) for c in self.comps])

    def apply(self, f: Jet) -> Jet:
        """Directional derivative ``sum_j A_j d_j f``."""
        n = min(self.order, f.order - 1)
        partials = [f.partial(j).truncate(n) for j in range(NVARS)]
        out = self.comps[0].truncate(n) * partials[0]
        for j in range(1, NVARS):
            out = out + self.comps[j].truncate(n) * partials[j]
        return out

    def bracket(self, other: "FieldJet") -> "FieldJet":
        """Lie bracket; the result has one order less than the shorter input."""
        return FieldJet([self.apply(b) - other.apply(a) for a, b in zip(self.comps, other.comps)])

    def __add__(self, other: "FieldJet") -> "FieldJet":
        n = min(self.order, other.order)
        return FieldJet([a.truncate(n) + b.truncate(n) for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other: "FieldJet") -> "FieldJet":
        return self + other.scale(-1.0)

    def scale(self, s) -> "FieldJet":
        if isinstance(s, Jet):
            n = min(self.order, s.order)
            s = s.truncate(n)
            return FieldJet([c.truncate(n) * s for c in self.comps])
        return FieldJet([c * float(s) for c in self.comps])

    def max_abs(self) -> float:
        return max(c.max_abs() for c in self.comps)


def combine(coeffs: Sequence, fields: Sequence[FieldJet]) -> FieldJet:
    """``sum_k coeffs[k] * fields[k]``; coefficients may be jets or numbers."""
    out = None
    for c, f in zip(coeffs, fields):
        term = f.scale(c)
        out = term if out is None else out + term
    return out


def invert_jet_matrix(m: Sequence[Sequence[Jet]], point=None) -> list[list[Jet]]:
    """Inverse of a square jet matrix by Gauss-Jordan elimination.

    Pivots are chosen by the magnitude of constant terms.  Raises
    :class:`EngelDegenerate` when the constant-term determinant is below
    ``DEGENERACY_THRESHOLD`` in absolute value.
    """
    n = len(m)
    a = [list(row) for row in m]
    order, pt = a[0][0].order, a[0][0].point
    const = np.array([[e.value for e in row] for row in a])
    det = float(np.linalg.det(const))
    if abs(det) <= DEGENERACY_THRESHOLD:
        raise EngelDegenerate(point if point is not None else pt, f"frame determinant {det:.3e}")
    inv = [[Jet.constant(1.0 if i == j else 0.0, pt, order) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col].value))
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        r = a[col][col].invert()
        a[col] = [e * r for e in a[col]]
        inv[col] = [e * r for e in inv[col]]
        for row in range(n):
            if row == col:
                continue
            f = a[row][col]
            if not f.coeffs.any():
                continue
            a[row] = [x - f * y for x, y in zip(a[row], a[col])]
            inv[row] = [x - f * y for x, y in zip(inv[row], inv[col])]
    return inv


def frame_matrix(fields: Sequence[FieldJet]) -> list[list[Jet]]:
    """Chart components as a matrix whose columns are the fields."""
    return [[f[i] for f in fields] for i in range(NVARS)]


def pair(covector: Sequence[Jet], v: FieldJet) -> Jet:
    n = min(covector[0].order, v.order)
    out = covector[0].truncate(n) * v[0].truncate(n)
    for i in range(1, NVARS):
        out = out + covector[i].truncate(n) * v[i].truncate(n)
    return out


# ---------------------------------------------------------------------------
# lazy evaluators


class ScalarField:
    """A function on the chart, evaluated on demand as a jet."""

    def jet(self, point, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, point) -> float:
        return self.jet(point, 0).value


class ExpressionScalar(ScalarField):
    """Scalar field given by a callable of the four coordinate jets.

    Any callable built from jet arithmetic and the analytic functions in
    :mod:`engelcr.jets` works; plain numbers are promoted to constants.
    """

    def __init__(self, fn: Callable | float, name: str = ""):
        self.fn = fn
        self.name = name

    def jet(self, point, order):
        if not callable(self.fn):
            return Jet.constant(float(self.fn), point, order)
        return _to_jet(self.fn(*coordinate_jets(point, order)), point, order)

    def on(self, coords: Sequence[Jet]) -> Jet:
        """Evaluate on arbitrary argument jets (composition with a chart map)."""
        c0 = coords[0]
        if not callable(self.fn):
            return Jet.constant(float(self.fn), c0.point, c0.order)
        return _to_jet(self.fn(*coords), c0.point, c0.order)


def scalar_field(fn) -> ScalarField:
    return fn if isinstance(fn, ScalarField) else ExpressionScalar(fn)


class VectorField:
    """A vector field ``sum_i A_i d/dx_i`` on the chart ``(x, y, u1, u2)``."""

    name: str = ""

    def jet(self, point, order: int) -> FieldJet:
        raise NotImplementedError

    def at(self, point) -> np.ndarray:
        return self.jet(point, 0).values()

    def __add__(self, other: "VectorField") -> "VectorField":
        return CombinationField([1.0, 1.0], [self, other])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return CombinationField([1.0, -1.0], [self, other])

    def __rmul__(self, s) -> "VectorField":
        return CombinationField([s], [self])

    def __neg__(self) -> "VectorField":
        return CombinationField([-1.0], [self])

    def __repr__(self):
        return f"{type(self).__name__}({self.name})" if self.name else type(self).__name__ + "()"


class ExpressionField(VectorField):
    """Components given as four scalar expressions (callables or numbers)."""

    def __init__(self, components: Sequence, name: str = ""):
        if len(components) != NVARS:
            raise StructuralError(f"vector field needs {NVARS} components")
        self.components = [scalar_field(c) for c in components]
        self.name = name

    def jet(self, point, order):
        coords = coordinate_jets(point, order)
        return FieldJet([self._eval(c, coords) for c in self.components])

    @staticmethod
    def _eval(c, coords):
        if isinstance(c, ExpressionScalar):
            return c.on(coords)
        return c.jet(coords[0].point, coords[0].order)

    def on(self, coords: Sequence[Jet]) -> FieldJet:
        return FieldJet([self._eval(c, coords) for c in self.components])


def coordinate_field(axis: int) -> ExpressionField:
    comps = [0.0] * NVARS
    comps[axis] = 1.0
    return ExpressionField(comps, name=f"d{axis}")


class BracketField(VectorField):
    def __init__(self, a: VectorField, b: VectorField):
        self.a, self.b = a, b
        self.name = f"[{a.name or 'A'},{b.name or 'B'}]"

    def jet(self, point, order):
        return self.a.jet(point, order + 1).bracket(self.b.jet(point, order + 1))


class CombinationField(VectorField):
    """``sum_k c_k V_k`` with constant or scalar-field coefficients."""

    def __init__(self, coeffs: Sequence, fields: Sequence[VectorField]):
        self.coeffs = [c if isinstance(c, ScalarField) else float(c) for c in coeffs]
        self.fields = list(fields)

    def jet(self, point, order):
        cs = [c.jet(point, order) if isinstance(c, ScalarField) else c for c in self.coeffs]
        return combine(cs, [f.jet(point, order) for f in self.fields])


class JetSourceField(VectorField):
    """View of one field out of an object that computes several at once."""

    def __init__(self, source: Callable[[tuple, int], FieldJet], name: str = ""):
        self.source = source
        self.name = name

    def jet(self, point, order):
        return self.source(tuple(float(v) for v in point), order)


class PushforwardField(VectorField):
    """Image of a field under a chart change ``new = forward(old)``.

    ``inverse`` maps new-coordinate jets to old-coordinate jets and
    ``jacobian`` maps old-coordinate jets to the 4x4 Jacobian of
    ``forward``.  The wrapped field must be an :class:`ExpressionField` (its
    components are composed with the inverse map).
    """

    def __init__(self, field: ExpressionField, inverse: Callable, jacobian: Callable):
        self.field, self.inverse, self.jacobian = field, inverse, jacobian
        self.name = f"push({field.name})"

    def jet(self, point, order):
        old = [_to_jet(c, point, order) for c in self.inverse(*coordinate_jets(point, order))]
        v = self.field.on(old)
        jac = self.jacobian(*old)
        return FieldJet([
            sum((_to_jet(jac[i][j], point, order) * v[j] for j in range(1, NVARS)),
                _to_jet(jac[i][0], point, order) * v[0])
            for i in range(NVARS)
        ])


def pushforward(field: ExpressionField, inverse: Callable, jacobian: Callable) -> VectorField:
    return PushforwardField(field, inverse, jacobian)


def lie_bracket(a: VectorField, b: VectorField) -> VectorField:
    """Lie bracket of two fields; evaluating at order n samples the inputs at n + 1."""
    return BracketField(a, b)


# ---------------------------------------------------------------------------
# frames


@dataclass
class Frame:
    """Ordered frame ``(T_x, T_y, T_2, T_3)`` on the chart."""

    Tx: VectorField
    Ty: VectorField
    T2: VectorField
    T3: VectorField
    normalized: bool = False
    adapted: bool = dc_field(default=False, repr=False)

    def fields(self):
        return (self.Tx, self.Ty, self.T2, self.T3)

    def jets(self, point, order) -> list[FieldJet]:
        if self.adapted:
            x = self.Tx.jet(point, order + 2)
            y = self.Ty.jet(point, order + 2)
            t2 = x.bracket(y)
            t3 = x.truncate(order + 1).bracket(t2)
            return [x.truncate(order), y.truncate(order), t2.truncate(order), t3]
        return [f.jet(point, order) for f in self.fields()]


def adapted_frame(X: VectorField, Y: VectorField, normalized: bool = False) -> Frame:
    """Frame ``T_x = X, T_y = Y, T_2 = [X, Y], T_3 = [X, T_2]``."""
    t2 = lie_bracket(X, Y)
    t3 = lie_bracket(X, t2)
    return Frame(X, Y, t2, t3, normalized=normalized, adapted=True)


@dataclass
class Coframe:
    """Rows are the dual 1-forms ``phi^x, phi^y, phi^2, phi^3`` in ``dx, dy, du1, du2``."""

    rows: list[list[Jet]]
    point: tuple
    order: int

    def form(self, label: str) -> list[Jet]:
        return self.rows[LABEL_INDEX[label]]

    def components(self, v: FieldJet) -> list[Jet]:
        """Frame components ``phi^alpha(v)`` of a field."""
        return [pair(row, v) for row in self.rows]

    def duality_residual(self, frame: Sequence[FieldJet]) -> float:
        worst = 0.0
        for a, row in enumerate(self.rows):
            for b, f in enumerate(frame):
                r = pair(row, f) - (1.0 if a == b else 0.0)
                worst = max(worst, r.max_abs())
        return worst


def coframe_from_jets(frame: Sequence[FieldJet], point=None) -> Coframe:
    n = min(f.order for f in frame)
    frame = [f.truncate(n) for f in frame]
    inv = invert_jet_matrix(frame_matrix(frame), point)
    return Coframe(inv, frame[0].point, n)


def dual_coframe(F: Frame, p, order: int) -> Coframe:
    """Jet-valued inverse of the frame matrix at ``p``."""
    return coframe_from_jets(F.jets(p, order), p)


def structure_functions(F: Frame, p, order: int) -> dict:
    """All ``phi^a_{bc} = phi^a([T_b, T_c])`` with ``b < c`` as jets of the given order.

    For an adapted frame the inputs ``X, Y`` are sampled at ``order + 3``.
    Use :func:`phi_lookup` for antisymmetric access.
    """
    jets = F.jets(p, order + 1)
    cof = coframe_from_jets([j.truncate(order) for j in jets], p)
    table = {}
    for b, c in PAIRS:
        br = jets[LABEL_INDEX[b]].bracket(jets[LABEL_INDEX[c]])
        comps = cof.components(br)
        for a, val in zip(FRAME_LABELS, comps):
            table[(a, b, c)] = val
    return table


def phi_lookup(table: dict, a: str, b: str, c: str):
    """Antisymmetric access ``phi^a_{bc} = -phi^a_{cb}``."""
    if b == c:
        return 0.0
    if (a, b, c) in table:
        return table[(a, b, c)]
    return -table[(a, c, b)]
