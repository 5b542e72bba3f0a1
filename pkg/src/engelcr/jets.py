"""Truncated Taylor expansions in four variables.

A :class:`Jet` stores the Taylor coefficients of a scalar function about a
base point ``p`` of the chart, for every monomial ``h^alpha`` of total degree
at most ``order``.  Coefficients live in a dense array indexed by a graded
ranking of multi-indices: all degree-0 monomials first, then degree 1, and so
on.  Because the ranking is graded, truncating to a lower order is a slice.

Arithmetic is exact polynomial arithmetic followed by truncation, so
evaluating a polynomial vector field on coordinate jets yields its exact
Taylor expansion.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

from .errors import DomainError, OrderExhausted, SingularJet, StructuralError

NVARS = 4
DEFAULT_ORDER = 6


def n_coefficients(order: int) -> int:
    """Number of monomials of total degree <= order in four variables."""
    return math.comb(order + NVARS, NVARS)


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int, int], ...]:
    out = []
    for deg in range(order + 1):
        degree_block = [m for m in _iproduct(range(deg + 1), repeat=NVARS) if sum(m) == deg]
        degree_block.sort(reverse=True)
        out.extend(degree_block)
    return tuple(out)


@lru_cache(maxsize=None)
def _rank(order: int) -> dict:
    return {m: i for i, m in enumerate(multi_indices(order))}


@lru_cache(maxsize=None)
def _mul_table(order: int):
    idx = multi_indices(order)
    rank = _rank(order)
    ii, jj, kk = [], [], []
    for i, a in enumerate(idx):
        da = sum(a)
        for j, b in enumerate(idx):
            if da + sum(b) > order:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(rank[tuple(x + y for x, y in zip(a, b))])
    return (np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp),
            np.array(kk, dtype=np.intp))


@lru_cache(maxsize=None)
def _diff_table(order: int, axis: int):
    """Source positions (order n), target positions (order n-1), factors."""
    target = _rank(order - 1)
    src, dst, fac = [], [], []
    for i, a in enumerate(multi_indices(order)):
        if a[axis] == 0:
            continue
        b = list(a)
        b[axis] -= 1
        src.append(i)
        dst.append(target[tuple(b)])
        fac.append(float(a[axis]))
    return np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), np.array(fac)


@lru_cache(maxsize=None)
def _int_table(order: int, axis: int):
    """Antiderivative along ``axis``: positions in order-1 basis -> order basis."""
    target = _rank(order)
    src, dst, fac = [], [], []
    for i, a in enumerate(multi_indices(order - 1)):
        b = list(a)
        b[axis] += 1
        src.append(i)
        dst.append(target[tuple(b)])
        fac.append(1.0 / b[axis])
    return np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), np.array(fac)


@lru_cache(maxsize=None)
def _exponents(order: int) -> np.ndarray:
    return np.array(multi_indices(order), dtype=np.int64).reshape(-1, NVARS)


@lru_cache(maxsize=None)
def _factorials(order: int) -> np.ndarray:
    return np.array([math.prod(math.factorial(k) for k in m) for m in multi_indices(order)],
                    dtype=float)


def _as_point(p) -> tuple[float, float, float, float]:
    pt = tuple(float(v) for v in p)
    if len(pt) != NVARS:
        raise StructuralError(f"base point must have {NVARS} coordinates, got {len(pt)}")
    return pt


class Jet:
    """Truncated Taylor expansion of a scalar function at a chart point.

    Jets are treated as immutable values; every operation returns a new jet.
    """

    __slots__ = ("coeffs", "order", "point")
    __array_priority__ = 100  # so that numpy scalars defer to Jet.__r*__

    def __init__(self, coeffs, order: int, point):
        coeffs = np.asarray(coeffs, dtype=float)
        if order < 0:
            raise StructuralError("jet order must be non-negative")
        if coeffs.shape != (n_coefficients(order),):
            raise StructuralError(
                f"order {order} needs {n_coefficients(order)} coefficients, got {coeffs.shape}")
        self.coeffs = coeffs
        self.order = order
        self.point = _as_point(point)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float, point, order: int = DEFAULT_ORDER) -> "Jet":
        coeffs = np.zeros(n_coefficients(order))
        coeffs[0] = c
        return cls(coeffs, order, point)

    @classmethod
    def zero(cls, point, order: int = DEFAULT_ORDER) -> "Jet":
        return cls(np.zeros(n_coefficients(order)), order, point)

    @classmethod
    def variable(cls, axis: int, point, order: int = DEFAULT_ORDER) -> "Jet":
        """Jet of the coordinate function ``x_axis`` at ``point``."""
        pt = _as_point(point)
        coeffs = np.zeros(n_coefficients(order))
        coeffs[0] = pt[axis]
        if order >= 1:
            e = [0] * NVARS
            e[axis] = 1
            coeffs[_rank(order)[tuple(e)]] = 1.0
        return cls(coeffs, order, pt)

    @classmethod
    def from_monomials(cls, terms: dict, point, order: int = DEFAULT_ORDER) -> "Jet":
        """Build from ``{multi_index: coefficient}`` in the displacement ``h``."""
        coeffs = np.zeros(n_coefficients(order))
        rank = _rank(order)
        for m, c in terms.items():
            m = tuple(m)
            if sum(m) <= order:
                coeffs[rank[m]] += c
        return cls(coeffs, order, point)

    # -- inspection -------------------------------------------------------
    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, multi_index) -> float:
        m = tuple(multi_index)
        if sum(m) > self.order:
            raise OrderExhausted(f"monomial {m} exceeds order {self.order}")
        return float(self.coeffs[_rank(self.order)[m]])

    def derivative(self, multi_index) -> float:
        """Partial derivative ``d^alpha f(p)`` (coefficient times alpha!)."""
        m = tuple(multi_index)
        return self.coefficient(m) * math.prod(math.factorial(k) for k in m)

    def derivatives(self) -> np.ndarray:
        return self.coeffs * _factorials(self.order)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, h) -> float:
        """Evaluate the truncated polynomial at displacement ``h`` from the base point."""
        h = np.asarray(h, dtype=float)
        mons = np.prod(h[None, :] ** _exponents(self.order), axis=1)
        return float(mons @ self.coeffs)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, point={self.point}, value={self.value:.6g})"

    # -- structure --------------------------------------------------------
    def _check(self, other: "Jet") -> None:
        if other.order != self.order:
            raise StructuralError(f"jet orders differ: {self.order} vs {other.order}")
        if other.point != self.point:
            raise StructuralError(f"base points differ: {self.point} vs {other.point}")

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderExhausted(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[:n_coefficients(order)], order, self.point)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(float(other), self.point, self.order)

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.coeffs + other.coeffs, self.order, self.point)
        out = self.coeffs.copy()
        out[0] += float(other)
        return Jet(out, self.order, self.point)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order, self.point)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            i, j, k = _mul_table(self.order)
            out = np.bincount(k, weights=self.coeffs[i] * other.coeffs[j],
                              minlength=len(self.coeffs))
            return Jet(out, self.order, self.point)
        return Jet(self.coeffs * float(other), self.order, self.point)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.invert()
        return Jet(self.coeffs / float(other), self.order, self.point)

    def __rtruediv__(self, other):
        return self.invert() * float(other)

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            result = Jet.constant(1.0, self.point, self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if isinstance(n, (int, np.integer)):
            return self.invert() ** (-n)
        return power(self, float(n))

    def invert(self) -> "Jet":
        a0 = self.coeffs[0]
        if a0 == 0.0:
            raise SingularJet(f"constant term vanishes at {self.point}")
        return _series(self, [(-1.0) ** k / a0 ** (k + 1) for k in range(self.order + 1)])

    # -- calculus ---------------------------------------------------------
    def partial(self, axis: int) -> "Jet":
        """Partial derivative along a chart axis; the result has order ``order - 1``."""
        if self.order == 0:
            raise OrderExhausted(f"cannot differentiate an order-0 jet at {self.point}")
        src, dst, fac = _diff_table(self.order, axis)
        out = np.zeros(n_coefficients(self.order - 1))
        out[dst] = self.coeffs[src] * fac
        return Jet(out, self.order - 1, self.point)

    def integrate(self, axis: int) -> "Jet":
        """Antiderivative along ``axis`` vanishing on the hyperplane ``h_axis = 0``."""
        src, dst, fac = _int_table(self.order + 1, axis)
        out = np.zeros(n_coefficients(self.order + 1))
        out[dst] = self.coeffs[src] * fac
        return Jet(out, self.order + 1, self.point)

    def degree_slice(self, axis: int, power: int) -> "Jet":
        """Keep only monomials whose exponent along ``axis`` equals ``power``."""
        mask = _exponents(self.order)[:, axis] == power
        return Jet(np.where(mask, self.coeffs, 0.0), self.order, self.point)


def _series(a: Jet, c) -> Jet:
    """``sum_k c[k] * (a - a0)^k`` truncated to ``a.order`` (Horner scheme)."""
    nil = a.coeffs.copy()
    nil[0] = 0.0
    nil = Jet(nil, a.order, a.point)
    result = Jet.constant(c[-1], a.point, a.order)
    for ck in reversed(c[:-1]):
        result = result * nil + ck
    return result


def power(a: Jet, r: float) -> Jet:
    a0 = a.coeffs[0]
    if a0 <= 0.0:
        raise DomainError(f"real power {r} needs a positive constant term, got {a0}")
    c, binom = [], 1.0
    for k in range(a.order + 1):
        c.append(binom * a0 ** (r - k))
        binom *= (r - k) / (k + 1)
    return _series(a, c)


def exp(a: Jet) -> Jet:
    e0 = math.exp(a.coeffs[0])
    return _series(a, [e0 / math.factorial(k) for k in range(a.order + 1)])


def log(a: Jet) -> Jet:
    a0 = a.coeffs[0]
    if a0 <= 0.0:
        raise DomainError(f"log needs a positive constant term, got {a0}")
    c = [math.log(a0)] + [(-1.0) ** (k + 1) / (k * a0 ** k) for k in range(1, a.order + 1)]
    return _series(a, c)


def sqrt(a: Jet) -> Jet:
    return power(a, 0.5)


def sin(a: Jet) -> Jet:
    s, co = math.sin(a.coeffs[0]), math.cos(a.coeffs[0])
    cycle = (s, co, -s, -co)
    return _series(a, [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    s, co = math.sin(a.coeffs[0]), math.cos(a.coeffs[0])
    cycle = (co, -s, -co, s)
    return _series(a, [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)])


_ANALYTIC = {"exp": exp, "log": log, "sqrt": sqrt, "sin": sin, "cos": cos}


# Functional spellings of the operations.

def jet_add(a: Jet, b) -> Jet:
    return a + b


def jet_mul(a: Jet, b) -> Jet:
    return a * b


def jet_scale(a: Jet, s: float) -> Jet:
    return a * float(s)


def jet_invert(a: Jet) -> Jet:
    return a.invert()


def jet_partial(a: Jet, axis: int) -> Jet:
    return a.partial(axis)


def jet_compose_analytic(f: str, a: Jet) -> Jet:
    try:
        fn = _ANALYTIC[f]
    except KeyError:
        raise DomainError(f"unknown analytic function {f!r}; expected one of {sorted(_ANALYTIC)}")
    return fn(a)


def coordinate_jets(point, order: int = DEFAULT_ORDER) -> tuple[Jet, Jet, Jet, Jet]:
    """The four coordinate functions as jets at ``point``."""
    pt = _as_point(point)
    return tuple(Jet.variable(i, pt, order) for i in range(NVARS))


def common_order(*jets: Jet) -> int:
    return min(j.order for j in jets)


def truncate_all(jets, order: int):
    return [j.truncate(order) for j in jets]
