"""Sparse polynomials in the four spacetime coordinates with exact complex-rational
coefficients.

Coefficients are pairs ``(re, im)`` of :class:`gmpy2.mpq`, so every operation in the
symbolic layer is exact: an identity check passes only if the residual collapses to the
empty polynomial, never "zero up to tolerance".

The coordinate order is (t, x, y, z) = axes (0, 1, 2, 3) throughout the package.
"""

from __future__ import annotations

from typing import Dict, Iterable, Tuple

from gmpy2 import mpq

Exps = Tuple[int, int, int, int]
Coef = Tuple[mpq, mpq]

QZERO: Coef = (mpq(0), mpq(0))
QONE: Coef = (mpq(1), mpq(0))
QI: Coef = (mpq(0), mpq(1))


def qc(re=0, im=0) -> Coef:
    """Build an exact complex-rational coefficient."""
    return (mpq(re), mpq(im))


def qc_add(a: Coef, b: Coef) -> Coef:
    return (a[0] + b[0], a[1] + b[1])


def qc_mul(a: Coef, b: Coef) -> Coef:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def qc_neg(a: Coef) -> Coef:
    return (-a[0], -a[1])


def qc_conj(a: Coef) -> Coef:
    return (a[0], -a[1])


def qc_is_zero(a: Coef) -> bool:
    return not a[0] and not a[1]


_ZEXP: Exps = (0, 0, 0, 0)


class Poly:
    """Sparse 4-variable polynomial: map from exponent tuples to complex rationals."""

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Exps, Coef] | None = None):
        self.terms = terms if terms is not None else {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def const(cls, re=0, im=0) -> "Poly":
        c = qc(re, im)
        return cls({} if qc_is_zero(c) else {_ZEXP: c})

    @classmethod
    def monomial(cls, exps: Iterable[int], re=1, im=0) -> "Poly":
        c = qc(re, im)
        if qc_is_zero(c):
            return cls()
        e = tuple(exps)
        if len(e) != 4 or any(k < 0 for k in e):
            raise ValueError("need four non-negative exponents, got %r" % (e,))
        return cls({e: c})

    @classmethod
    def coordinate(cls, axis: int) -> "Poly":
        e = [0, 0, 0, 0]
        e[axis] = 1
        return cls({tuple(e): QONE})

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            cur = out.get(e)
            if cur is None:
                out[e] = c
            else:
                s = qc_add(cur, c)
                if qc_is_zero(s):
                    del out[e]
                else:
                    out[e] = s
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({e: qc_neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(_as_coef(other))
        out: Dict[Exps, Coef] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                e = (ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3])
                p = qc_mul(ca, cb)
                cur = out.get(e)
                if cur is None:
                    out[e] = p
                else:
                    s = qc_add(cur, p)
                    if qc_is_zero(s):
                        del out[e]
                    else:
                        out[e] = s
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c: Coef) -> "Poly":
        if qc_is_zero(c):
            return Poly()
        return Poly({e: qc_mul(a, c) for e, a in self.terms.items()})

    def deriv(self, axis: int) -> "Poly":
        out: Dict[Exps, Coef] = {}
        for e, c in self.terms.items():
            k = e[axis]
            if k == 0:
                continue
            en = list(e)
            en[axis] = k - 1
            en = tuple(en)
            p = (c[0] * k, c[1] * k)
            cur = out.get(en)
            out[en] = p if cur is None else qc_add(cur, p)
        return Poly({e: c for e, c in out.items() if not qc_is_zero(c)})

    def conj(self) -> "Poly":
        return Poly({e: qc_conj(c) for e, c in self.terms.items()})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        names = ("t", "x", "y", "z")
        bits = []
        for e in sorted(self.terms, key=lambda e: (sum(e), e)):
            re, im = self.terms[e]
            mono = "*".join(
                names[i] if k == 1 else "%s^%d" % (names[i], k)
                for i, k in enumerate(e) if k
            )
            if im == 0:
                cs = str(re)
            elif re == 0:
                cs = "%s*i" % im
            else:
                cs = "(%s%s%s*i)" % (re, "+" if im > 0 else "-", abs(im))
            bits.append(cs if not mono else "%s*%s" % (cs, mono))
        return " + ".join(bits)


def _as_coef(x) -> Coef:
    if isinstance(x, tuple) and len(x) == 2:
        return (mpq(x[0]), mpq(x[1]))
    return (mpq(x), mpq(0))


ZERO_POLY = Poly()
ONE_POLY = Poly.const(1)
