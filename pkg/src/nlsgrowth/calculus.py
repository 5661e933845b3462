"""Exact symbolic calculus for polynomial expressions in u, conj(u) and their
spatial derivatives, with time derivatives eliminated through the equation

    u_t = i Lap u - i u^{n+1} conj(u)^n,     p = 2n + 1.

A factor is a tuple ``(conj, order, alpha)`` where ``alpha`` is the spatial
multi-index and ``order == sum(alpha)``; tuples therefore sort in the
canonical order (conj flag, total order, multi-index).  A monomial is a sorted
tuple of factors and an expression maps monomials to exact Gaussian-rational
coefficients.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Mapping

import numpy as np

from .spectral import SpectralField, derivative_symbol

__all__ = [
    "QQi",
    "SymExpr",
    "CapExceededError",
    "var",
    "const",
    "nonlinearity_expr",
    "time_derivative",
    "dt_power",
    "ibp_normal_form",
    "dt_of_functional",
    "evaluate",
    "integrate",
    "max_factor_order",
    "pretty",
    "DEFAULT_MAX_ORDER",
]

DEFAULT_MAX_ORDER = 10
DEFAULT_MAX_K = 3
_AXES = "xyz"


class CapExceededError(ValueError):
    """A derivative order or time-derivative count exceeded its configured cap."""


class QQi:
    """Gaussian rational ``re + i*im`` with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def coerce(cls, x) -> "QQi":
        if isinstance(x, QQi):
            return x
        if not isinstance(x, (int, Fraction, float, complex)):
            raise TypeError(f"cannot use {type(x).__name__} as a Gaussian rational")
        if isinstance(x, complex):
            return cls(Fraction(x.real).limit_denominator(10**12), Fraction(x.imag).limit_denominator(10**12))
        return cls(x)

    def __add__(self, o):
        if not isinstance(o, (QQi, int, Fraction, float, complex)):
            return NotImplemented
        o = QQi.coerce(o)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        if not isinstance(o, (QQi, int, Fraction, float, complex)):
            return NotImplemented
        o = QQi.coerce(o)
        return QQi(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __mul__(self, o):
        if not isinstance(o, (QQi, int, Fraction, float, complex)):
            return NotImplemented
        o = QQi.coerce(o)
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> "QQi":
        return QQi(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        try:
            o = QQi.coerce(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return {1: "i", -1: "-i"}.get(self.im, f"{self.im}i")
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


I = QQi(0, 1)
ONE = QQi(1)


def _add_into(acc: dict, key, c: QQi):
    old = acc.get(key)
    if old is None:
        acc[key] = c
    else:
        s = QQi(old.re + c.re, old.im + c.im)
        if s:
            acc[key] = s
        else:
            del acc[key]


class SymExpr:
    """Normalized finite sum of monomials with exact coefficients."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[tuple, QQi] | None = None):
        self.dim = dim
        if terms is None:
            self.terms = {}
        else:
            self.terms = {k: QQi.coerce(c) for k, c in terms.items() if c}

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "SymExpr":
        e = cls.__new__(cls)
        e.dim = dim
        e.terms = terms
        return e

    # -- algebra ---------------------------------------------------------
    def _same(self, o: "SymExpr"):
        if o.dim != self.dim:
            raise ValueError("expressions have different dimensions")

    def __add__(self, o):
        if not isinstance(o, SymExpr):
            o = const(self.dim, o)
        self._same(o)
        acc = dict(self.terms)
        for k, c in o.terms.items():
            _add_into(acc, k, c)
        return SymExpr._raw(self.dim, acc)

    __radd__ = __add__

    def __neg__(self):
        return SymExpr._raw(self.dim, {k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        if not isinstance(o, SymExpr):
            o = const(self.dim, o)
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, SymExpr):
            c = QQi.coerce(o)
            if not c:
                return SymExpr(self.dim)
            return SymExpr._raw(self.dim, {k: v * c for k, v in self.terms.items()})
        self._same(o)
        acc: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in o.terms.items():
                _add_into(acc, tuple(sorted(k1 + k2)), c1 * c2)
        return SymExpr._raw(self.dim, acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        return reduce(lambda a, b: a * b, [self] * n, const(self.dim, 1))

    def conj(self) -> "SymExpr":
        out = {}
        for k, c in self.terms.items():
            key = tuple(sorted((1 - f[0], f[1], f[2]) for f in k))
            out[key] = c.conjugate()
        return SymExpr._raw(self.dim, out)

    def d(self, axis: int) -> "SymExpr":
        """Spatial derivative along ``axis`` (Leibniz rule)."""
        acc: dict = {}
        for k, c in self.terms.items():
            for key, mult in _d_monomial(k, axis):
                _add_into(acc, key, c * mult)
        return SymExpr._raw(self.dim, acc)

    def lap(self) -> "SymExpr":
        out = SymExpr(self.dim)
        for ax in range(self.dim):
            out = out + self.d(ax).d(ax)
        return out

    def grad(self) -> list["SymExpr"]:
        return [self.d(ax) for ax in range(self.dim)]

    # -- inspection ------------------------------------------------------
    def __eq__(self, o):
        if isinstance(o, SymExpr):
            return self.dim == o.dim and self.terms == o.terms
        if o == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> list[tuple]:
        return sorted(self.terms, key=_mono_sort_key)

    def coeff(self, monomial: Iterable) -> QQi:
        return self.terms.get(tuple(sorted(monomial)), QQi(0))

    def __repr__(self):
        return f"SymExpr(dim={self.dim}, {len(self.terms)} terms)"

    def __str__(self):
        return pretty(self)


def _mono_sort_key(m: tuple):
    return (len(m), sum(f[1] for f in m), m)


def _factor_name(f: tuple) -> str:
    conj, order, alpha = f
    name = "ubar" if conj else "u"
    if order:
        name += "_" + "".join(_AXES[ax] * a for ax, a in enumerate(alpha))
    return name


def pretty(e: SymExpr) -> str:
    """Deterministic text form, one monomial per term."""
    if not e.terms:
        return "0"
    parts = []
    for m in e.monomials():
        c = e.terms[m]
        body = "*".join(_factor_name(f) for f in m) or "1"
        parts.append(f"{c}*{body}" if c != 1 else body)
    return " + ".join(parts)


def var(dim: int, conj: bool = False, alpha: Iterable[int] | None = None) -> SymExpr:
    """The expression ``d^alpha u`` (or its conjugate)."""
    a = tuple(alpha) if alpha is not None else (0,) * dim
    if len(a) != dim or any(x < 0 for x in a):
        raise ValueError(f"bad multi-index {a} for dim={dim}")
    return SymExpr._raw(dim, {((int(conj), sum(a), a),): ONE})


def const(dim: int, c) -> SymExpr:
    return SymExpr(dim, {(): QQi.coerce(c)})


def _bump(f: tuple, axis: int, by: int = 1) -> tuple:
    a = list(f[2])
    a[axis] += by
    return (f[0], f[1] + by, tuple(a))


@lru_cache(maxsize=None)
def _d_monomial(m: tuple, axis: int) -> tuple:
    acc: dict = {}
    for i, f in enumerate(m):
        if i and m[i - 1] == f:
            continue
        mult = m.count(f)
        key = tuple(sorted(m[:i] + (_bump(f, axis),) + m[i + 1 :]))
        acc[key] = acc.get(key, 0) + mult
    return tuple((k, QQi(v)) for k, v in acc.items())


def _check_p(p) -> int:
    if isinstance(p, float) and p.is_integer():
        p = int(p)
    if not isinstance(p, (int, np.integer)) or p < 3 or p % 2 == 0:
        raise ValueError(f"symbolic calculus needs an odd integer p >= 3, got {p}")
    return int(p)


def nonlinearity_expr(p: int, dim: int) -> SymExpr:
    """``|u|^{p-1} u = u^{n+1} conj(u)^n`` for ``p = 2n + 1``."""
    n = (_check_p(p) - 1) // 2
    zero = (0,) * dim
    key = ((0, 0, zero),) * (n + 1) + ((1, 0, zero),) * n
    return SymExpr._raw(dim, {key: ONE})


@lru_cache(maxsize=None)
def _d_alpha_nonlinearity(p: int, dim: int, alpha: tuple) -> SymExpr:
    if not any(alpha):
        return nonlinearity_expr(p, dim)
    ax = next(i for i, a in enumerate(alpha) if a)
    lower = list(alpha)
    lower[ax] -= 1
    return _d_alpha_nonlinearity(p, dim, tuple(lower)).d(ax)


@lru_cache(maxsize=None)
def _dt_factor(f: tuple, p: int, dim: int) -> SymExpr:
    """Time derivative of one factor, with u_t replaced through the equation."""
    conj, _, alpha = f
    acc: dict = {}
    for ax in range(dim):
        _add_into(acc, (_bump((0, f[1], alpha), ax, 2),), I)
    out = SymExpr._raw(dim, acc) - _d_alpha_nonlinearity(p, dim, alpha) * I
    return out.conj() if conj else out


def _check_cap(e: SymExpr, max_order: int | None):
    if max_order is None:
        return
    for m in e.terms:
        for f in m:
            if f[1] > max_order:
                raise CapExceededError(f"factor {_factor_name(f)} exceeds derivative-order cap {max_order}")


def time_derivative(e: SymExpr, p: int, max_order: int | None = DEFAULT_MAX_ORDER) -> SymExpr:
    """Exact ``d/dt`` of ``e`` along solutions, expanded by the Leibniz rule."""
    p = _check_p(p)
    dim = e.dim
    acc: dict = {}
    for m, c in e.terms.items():
        for i, f in enumerate(m):
            if i and m[i - 1] == f:
                continue
            cm = c * m.count(f)
            rest = m[:i] + m[i + 1 :]
            for k2, c2 in _dt_factor(f, p, dim).terms.items():
                _add_into(acc, tuple(sorted(rest + k2)), cm * c2)
    out = SymExpr._raw(dim, acc)
    _check_cap(out, max_order)
    return out


@lru_cache(maxsize=None)
def _dt_power_cached(k: int, p: int, dim: int, max_order: int | None) -> SymExpr:
    if k == 0:
        return var(dim)
    return time_derivative(_dt_power_cached(k - 1, p, dim, max_order), p, max_order)


def dt_power(k: int, p: int, dim: int, max_k: int = DEFAULT_MAX_K, max_order: int | None = None) -> SymExpr:
    """``d_t^k u`` as a polynomial in u, conj(u) and spatial derivatives.

    The derivative-order cap defaults to ``2k + 4``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > max_k:
        raise CapExceededError(f"k={k} exceeds the configured cap {max_k}")
    p = _check_p(p)
    if max_order is None:
        max_order = 2 * k + 4
    return _dt_power_cached(k, p, dim, max_order)


# -- integration by parts ----------------------------------------------------
#
# A monomial integrated over the torus is the multilinear form with symbol
# prod_i (i k_i)^{alpha_i} restricted to sum_i k_i = 0.  The canonical form
# symmetrizes that symbol over permutations of same-type factors and removes
# every derivative from one factor of the pivot type.  The symmetrization
# only matters through which pivot-type factor lands in the eliminated slot,
# so it reduces to averaging "integrate every derivative off factor q" over
# the pivot-type factors q.


@lru_cache(maxsize=200_000)
def _d_multi(m: tuple, alpha: tuple) -> tuple:
    """``d^alpha`` of a single monomial, as (monomial, coefficient) pairs."""
    if not any(alpha):
        return ((m, ONE),)
    ax = next(i for i, a in enumerate(alpha) if a)
    lower = list(alpha)
    lower[ax] -= 1
    acc: dict = {}
    for k1, c1 in _d_multi(m, tuple(lower)):
        for k2, c2 in _d_monomial(k1, ax):
            _add_into(acc, k2, c1 * c2)
    return tuple(acc.items())


@lru_cache(maxsize=200_000)
def _canon_monomial(m: tuple) -> tuple:
    if not m:
        return ((m, ONE),)
    ptype = 1 if any(f[0] for f in m) else 0
    pivots = Counter(f for f in m if f[0] == ptype)
    r = sum(pivots.values())
    dim = len(m[0][2])
    base = (ptype, 0, (0,) * dim)
    acc: dict = {}
    for f, cnt in pivots.items():
        w = QQi(Fraction(cnt, r) * (-1) ** f[1])
        i = m.index(f)
        rest = m[:i] + m[i + 1 :]
        for key, c in _d_multi(rest, f[2]):
            _add_into(acc, tuple(sorted(key + (base,))), w * c)
    return tuple(acc.items())


@lru_cache(maxsize=200_000)
def _balance_monomial(m: tuple) -> tuple:
    """Move derivatives off a factor whose order exceeds every other by >= 2."""
    if not m:
        return ((m, ONE),)
    if len(m) == 1:
        return () if m[0][1] else ((m, ONE),)
    top = max(f[1] for f in m)
    i = max(j for j, f in enumerate(m) if f[1] == top)
    second = max(f[1] for j, f in enumerate(m) if j != i)
    if top - second < 2:
        return ((m, ONE),)
    f = m[i]
    ax = next(j for j, a in enumerate(f[2]) if a)
    lowered = _bump(f, ax, -1)
    rest = m[:i] + m[i + 1 :]
    acc: dict = {}
    for key, c in _d_monomial(rest, ax):
        for key2, c2 in _balance_monomial(tuple(sorted(key + (lowered,)))):
            _add_into(acc, key2, -(c * c2))
    return tuple(acc.items())


def _apply_linear(e: SymExpr, fn) -> SymExpr:
    acc: dict = {}
    for m, c in e.terms.items():
        for key, c2 in fn(m):
            _add_into(acc, key, c * c2)
    return SymExpr._raw(e.dim, acc)


def ibp_normal_form(e: SymExpr) -> SymExpr:
    """Canonical representative of the integrand ``e`` modulo exact divergences.

    Integrands with equal integrals for every field share one normal form, and
    the map is idempotent.  The returned representative is balanced: within
    each monomial the highest derivative order exceeds the next by at most one.
    """
    pre = _apply_linear(e, _balance_monomial)
    canon = _apply_linear(pre, _canon_monomial)
    return _apply_linear(canon, _balance_monomial)


def dt_of_functional(integrand: SymExpr, p: int, max_order: int | None = DEFAULT_MAX_ORDER) -> SymExpr:
    """Normal-form integrand of ``d/dt`` of ``integral(integrand)``."""
    return ibp_normal_form(time_derivative(integrand, p, max_order))


def max_factor_order(e: SymExpr) -> int:
    return max((f[1] for m in e.terms for f in m), default=0)


# -- numerical realization ---------------------------------------------------


class _FactorCache:
    def __init__(self, u: SpectralField, dealias: bool):
        self.u = u
        g = u.grid
        self.base = np.where(g.dealias_mask, u.coeffs, 0) if dealias else u.coeffs
        self.cache: dict = {}

    def __call__(self, f: tuple) -> np.ndarray:
        key = (f[0], f[2])
        x = self.cache.get(key)
        if x is None:
            if f[0]:
                x = np.conj(self((0, f[1], f[2])))
            else:
                g = self.u.grid
                c = self.base if not f[1] else self.base * derivative_symbol(g, f[2])
                x = np.fft.ifftn(c) * g.size
            self.cache[key] = x
        return x


def _physical_sum(e: SymExpr, u: SpectralField, dealias: bool) -> np.ndarray:
    if e.dim != u.grid.dim:
        raise ValueError(f"expression dimension {e.dim} does not match grid dimension {u.grid.dim}")
    fc = _FactorCache(u, dealias)
    total = np.zeros(u.grid.shape, dtype=np.complex128)
    for m in e.monomials():
        c = complex(e.terms[m])
        if not m:
            total += c
            continue
        prod = fc(m[0])
        for f in m[1:]:
            prod = prod * fc(f)
        total += c * prod
    return total


def evaluate(e: SymExpr, u: SpectralField, dealias: bool = True) -> SpectralField:
    """Realize ``e`` on the grid of ``u`` (2/3-rule truncation around products)."""
    g = u.grid
    out = np.fft.fftn(_physical_sum(e, u, dealias)) / g.size
    if dealias:
        out = np.where(g.dealias_mask, out, 0)
    return SpectralField(g, out)


def integrate(e: SymExpr, u: SpectralField, dealias: bool = True) -> complex:
    """``integral(evaluate(e, u))`` computed directly as a grid mean."""
    return complex(np.mean(_physical_sum(e, u, dealias)))
