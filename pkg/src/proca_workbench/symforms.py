"""Exact differential-forms calculus on 4d Minkowski space.

Forms carry :class:`~proca_workbench.exactpoly.Poly` coefficients on strictly
increasing index tuples, so the whole calculus (wedge, duality, exterior derivative,
codifferential, minimal coupling) is exact rational arithmetic.  Identity checks in
:mod:`proca_workbench.exact_checks` require residuals to be *identically* zero.

Conventions: signature (+,-,-,-), coordinates (t,x,y,z), volume form dt^dx^dy^dz.
The dual map is fixed by  omega ^ dual(eta) = (1/p!) <omega, eta> vol  and every sign
is taken from the tables derived in :mod:`proca_workbench.formindex`.
The codifferential is (-1)^deg dual^-1 d dual, the wave operator -(d delta + delta d),
and minimal coupling replaces d by d + i q A ^ . for a real background potential A.
"""

from __future__ import annotations

from typing import Dict, Tuple

from gmpy2 import mpq

from .exactpoly import Poly, qc, qc_is_zero
from .formindex import (
    DIM,
    DOUBLE_DUAL_SIGN,
    DUAL_TABLE,
    METRIC_DIAG,
    basis_indices,
    insert_index,
    shuffle_splits_cached,
)

Idx = Tuple[int, ...]


class Form:
    """A differential form with exact polynomial components.

    comps maps strictly increasing index tuples to nonzero Poly coefficients;
    missing keys are zero.  Degrees outside [0, 4] are allowed and simply have an
    empty basis (they show up transiently in compositions and are always zero).
    """

    __slots__ = ("degree", "comps")

    def __init__(self, degree: int, comps: Dict[Idx, Poly] | None = None):
        self.degree = degree
        self.comps = {}
        if comps:
            for I, p in comps.items():
                if not p.is_zero():
                    self.comps[I] = p

    def component(self, I: Idx) -> Poly:
        return self.comps.get(tuple(I), Poly())

    def __add__(self, other: "Form") -> "Form":
        if self.degree != other.degree:
            raise ValueError("degree mismatch: %d vs %d" % (self.degree, other.degree))
        out = dict(self.comps)
        for I, p in other.comps.items():
            s = out.get(I)
            out[I] = p if s is None else s + p
        return Form(self.degree, out)

    def __neg__(self) -> "Form":
        return Form(self.degree, {I: -p for I, p in self.comps.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        """Multiply by an exact constant (int, mpq, or (re, im) pair)."""
        return Form(self.degree, {I: p * c for I, p in self.comps.items()})

    def smul(self, s: Poly) -> "Form":
        """Multiply by a scalar polynomial field."""
        return Form(self.degree, {I: s * p for I, p in self.comps.items()})

    def conj(self) -> "Form":
        return Form(self.degree, {I: p.conj() for I, p in self.comps.items()})

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Form)
            and self.degree == other.degree
            and self.comps == other.comps
        )

    def __repr__(self) -> str:
        if not self.comps:
            return "Form(%d, 0)" % self.degree
        from .formindex import AXES

        bits = []
        for I in sorted(self.comps):
            base = "^".join("d" + AXES[a] for a in I) or "1"
            bits.append("(%r) %s" % (self.comps[I], base))
        return "Form(%d, %s)" % (self.degree, " + ".join(bits))


def zero_form(degree: int) -> Form:
    return Form(degree)


def scalar_form(p: Poly) -> Form:
    return Form(0, {(): p})


def covector(components) -> Form:
    """1-form from four components (Poly or coercible constants), order (t,x,y,z)."""
    comps = {}
    for a, c in enumerate(components):
        p = c if isinstance(c, Poly) else Poly.const(c)
        comps[(a,)] = p
    return Form(1, comps)


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def wedge(a: Form, b: Form) -> Form:
    """Antisymmetrized product, normalized so e_J ^ e_K has component +1 on J+K sorted.

    Equivalent to the (p+q)!/(p!q!)-weighted alternation of the tensor product;
    implemented as a shuffle sum over each output index.
    """
    deg = a.degree + b.degree
    out: Dict[Idx, Poly] = {}
    if not a.comps or not b.comps:
        return Form(deg)
    for I in basis_indices(deg):
        acc = Poly()
        for sign, J, K in shuffle_splits_cached(I, a.degree):
            pa = a.comps.get(J)
            if pa is None:
                continue
            pb = b.comps.get(K)
            if pb is None:
                continue
            term = pa * pb
            acc = acc + (term if sign == 1 else -term)
        if not acc.is_zero():
            out[I] = acc
    return Form(deg, out)


def dual(w: Form) -> Form:
    """The duality map fixed by  omega ^ dual(eta) = (1/p!) <omega, eta> vol."""
    p = w.degree
    if p < 0 or p > DIM:
        return Form(DIM - p)
    table = DUAL_TABLE[p]
    out: Dict[Idx, Poly] = {}
    for I, poly in w.comps.items():
        Ic, sign = table[I]
        out[Ic] = poly if sign == 1 else -poly
    return Form(DIM - p, out)


def dual_inv(w: Form) -> Form:
    """Inverse duality: dual_inv(dual(v)) = v, using the derived double-dual sign."""
    p = DIM - w.degree
    if p < 0 or p > DIM:
        return Form(p)
    v = dual(w)
    sigma = DOUBLE_DUAL_SIGN[p]
    return v if sigma == 1 else -v


def ext_d(w: Form) -> Form:
    """Exterior derivative."""
    out: Dict[Idx, Poly] = {}
    for J, poly in w.comps.items():
        for mu in range(DIM):
            ins = insert_index(mu, J)
            if ins is None:
                continue
            sign, I = ins
            dp = poly.deriv(mu)
            if dp.is_zero():
                continue
            if sign != 1:
                dp = -dp
            cur = out.get(I)
            out[I] = dp if cur is None else cur + dp
    return Form(w.degree + 1, out)


def codiff(w: Form) -> Form:
    """Codifferential via the duality route: (-1)^deg dual^-1 d dual."""
    r = dual_inv(ext_d(dual(w)))
    return r if w.degree % 2 == 0 else -r


def codiff_coord(w: Form) -> Form:
    """Codifferential in components: (delta w)_J = -sum_mu g^{mumu} d_mu w_{mu J}.

    Independent route used to cross-check the duality route.
    """
    out: Dict[Idx, Poly] = {}
    for J in basis_indices(w.degree - 1):
        acc = Poly()
        for mu in range(DIM):
            ins = insert_index(mu, J)
            if ins is None:
                continue
            sign, I = ins
            poly = w.comps.get(I)
            if poly is None:
                continue
            term = poly.deriv(mu)
            if METRIC_DIAG[mu] * sign == 1:
                acc = acc - term
            else:
                acc = acc + term
        if not acc.is_zero():
            out[J] = acc
    return Form(w.degree - 1, out)


def interior(v: Form, w: Form) -> Form:
    """Contraction with the index-raised 1-form v:  (v . w)_J = g^{mumu} v_mu w_{mu J}."""
    if v.degree != 1:
        raise ValueError("interior expects a 1-form in the first slot")
    out: Dict[Idx, Poly] = {}
    for J in basis_indices(w.degree - 1):
        acc = Poly()
        for mu in range(DIM):
            ins = insert_index(mu, J)
            if ins is None:
                continue
            sign, I = ins
            poly = w.comps.get(I)
            if poly is None:
                continue
            vmu = v.comps.get((mu,))
            if vmu is None:
                continue
            term = vmu * poly
            if METRIC_DIAG[mu] * sign == 1:
                acc = acc + term
            else:
                acc = acc - term
        if not acc.is_zero():
            out[J] = acc
    return Form(w.degree - 1, out)


def pairing(a: Form, b: Form) -> Poly:
    """Pointwise inverse-metric pairing (1/p!) a_{alpha...} b^{alpha...} of equal-degree forms."""
    if a.degree != b.degree:
        raise ValueError("pairing needs equal degrees")
    acc = Poly()
    for I, pa in a.comps.items():
        pb = b.comps.get(I)
        if pb is None:
            continue
        g = 1
        for ax in I:
            g *= METRIC_DIAG[ax]
        term = pa * pb
        acc = acc + (term if g == 1 else -term)
    return acc


def mixed_dot(F: Form, W: Form) -> Form:
    """One-index contraction of a 2-form into a 1-form: (F . W)_a = F_{ab} g^{bb} W_b."""
    if F.degree != 2 or W.degree != 1:
        raise ValueError("mixed_dot expects a 2-form and a 1-form")
    out: Dict[Idx, Poly] = {}
    for a in range(DIM):
        acc = Poly()
        for b in range(DIM):
            if b == a:
                continue
            Fab = F.comps.get((a, b)) if a < b else F.comps.get((b, a))
            if Fab is None:
                continue
            sgn = 1 if a < b else -1
            Wb = W.comps.get((b,))
            if Wb is None:
                continue
            term = Fab * Wb
            if sgn * METRIC_DIAG[b] == 1:
                acc = acc + term
            else:
                acc = acc - term
        if not acc.is_zero():
            out[(a,)] = acc
    return Form(1, out)


def double_dot(F: Form, w: Form) -> Form:
    """Full contraction of a 2-form: dual^-1(F ^ dual(w)); on 2-forms this is
    (1/2) F^{mn} w_{mn}."""
    return dual_inv(wedge(F, dual(w)))


def double_dot_components(F: Form, H: Form) -> Poly:
    """(1/2) F^{mn} H_{mn} summed in components; cross-check for double_dot on 2-forms."""
    if F.degree != 2 or H.degree != 2:
        raise ValueError("component contraction defined for two 2-forms")
    return pairing(F, H)


def box(w: Form) -> Form:
    """Wave operator -(d delta + delta d)."""
    return -(ext_d(codiff(w)) + codiff(ext_d(w)))


def kg_op(w: Form, m2) -> Form:
    """Klein-Gordon operator: wave operator plus mass-squared."""
    return box(w) + w.scale(m2)


# ---------------------------------------------------------------------------
# minimal coupling to a background potential
# ---------------------------------------------------------------------------

class GaugeBackground:
    """Real background potential A with charge q; curvature and current are derived.

    F = dA and the current is -delta F, so the Bianchi-type relations that the
    coupled identities rely on hold exactly by construction.
    """

    def __init__(self, q, A: Form):
        if A.degree != 1:
            raise ValueError("background potential must be a 1-form")
        self.q = mpq(q)
        self.iq = qc(0, self.q)
        self.A = A
        self.F = ext_d(A)
        self.current = -codiff(self.F)

    def d(self, w: Form) -> Form:
        """Coupled exterior derivative d + i q A ^ ."""
        return ext_d(w) + wedge(self.A, w).scale(self.iq)

    def codiff(self, w: Form) -> Form:
        """Coupled codifferential (-1)^deg dual^-1 (d + iq A^) dual."""
        r = dual_inv(self.d(dual(w)))
        return r if w.degree % 2 == 0 else -r

    def codiff_coord(self, w: Form) -> Form:
        """Coupled codifferential in components: -(g^{bb} d_b + iq A^b) w_{b ...}."""
        return codiff_coord(w) - interior(self.A, w).scale(self.iq)

    def box(self, w: Form) -> Form:
        return -(self.d(self.codiff(w)) + self.codiff(self.d(w)))

    def kg(self, w: Form, m2) -> Form:
        return self.box(w) + w.scale(m2)

    def curv_wedge(self, w: Form) -> Form:
        return wedge(self.F, w)

    def curv_dot(self, W: Form) -> Form:
        return mixed_dot(self.F, W)

    def curv_ddot(self, w: Form) -> Form:
        return double_dot(self.F, w)

    def current_dot(self, W: Form) -> Form:
        """Contraction of the derived current with a 1-form (a scalar)."""
        return interior(self.current, W)

    def field_op(self, W: Form, m2, kappa) -> Form:
        """The coupled vector field operator: -delta_A d_A + m^2 + i q kappa F-contraction."""
        r = -self.codiff(self.d(W)) + W.scale(m2)
        return r + self.curv_dot(W).scale((mpq(0), self.q * mpq(kappa)))


def hermiticity_boundary_residual(Z: Form, W: Form, bg: GaugeBackground) -> Form:
    """Integrand identity behind formal self-adjointness of the coupled pair (d, -delta).

    For deg Z = deg W - 1 the combination
        conj(d_A Z) ^ dual(W) - conj(Z) ^ dual(delta_A W) - d( conj(Z) ^ dual(W) )
    is identically zero, exhibiting the pairing defect as an exact form.
    Returns the residual (a form of degree 4), which must vanish.
    """
    if Z.degree != W.degree - 1:
        raise ValueError("need deg Z = deg W - 1")
    t1 = wedge(bg.d(Z).conj(), dual(W))
    t2 = wedge(Z.conj(), dual(bg.codiff(W)))
    t3 = ext_d(wedge(Z.conj(), dual(W)))
    return t1 - t2 - t3
