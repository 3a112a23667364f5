"""Block-system builders for the auxiliary-field constructions.

Each builder packages one field system as a :class:`BlockSystem`: the field operator
together with the prolongation into an enlarged multi-slot space, the projection back,
the constraint map, and the enlarged evolution and constraint-propagation operators.
The defining relations between these maps,

    project . prolong = id
    prolong . project + embed_aux . constraint = id
    constraint . prolong = 0
    project . extended_op . prolong = field_op
    constraint . extended_op = constraint_op . constraint

are what the exact test-suite checks; the Green-operator assembly in
:mod:`proca_workbench.blockops` relies on them.

Sections of direct sums are plain tuples; a multiplet slot is itself a tuple of forms.
Builders are backend-agnostic: they only use the small calculus interface documented
on :class:`SymCalculus` (the exact polynomial backend defined here), which the lattice
backend mirrors.  Scalar *constants* are backend scalars (exact complex rationals or
complex floats); scalar *fields* are degree-0 elements of the backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Tuple

from gmpy2 import mpq

from . import symforms
from .exactpoly import qc, qc_mul, qc_neg
from .symforms import Form, GaugeBackground

Section = Tuple[Any, ...]


@dataclass(frozen=True)
class BlockSystem:
    """One auxiliary-field construction, with every map as a tuple-to-tuple callable.

    slot descriptors are ("form", degree) or ("multiplet", degree, k); full_slots
    describes the enlarged space in the order the maps use, b_slots the original
    field content, aux_slots the added content.
    """

    name: str
    b_slots: tuple
    aux_slots: tuple
    full_slots: tuple
    field_op: Callable[[Section], Section]
    prolong: Callable[[Section], Section]
    project: Callable[[Section], Section]
    embed_aux: Callable[[Section], Section]
    constraint: Callable[[Section], Section]
    extended_op: Callable[[Section], Section]
    constraint_op: Callable[[Section], Section]


class SymCalculus:
    """Exact differential-forms backend used by the builders.

    The methods below are the whole interface a builder may touch; the lattice
    backend provides the same names over grid fields.
    """

    # -- scalar constants -------------------------------------------------
    def num(self, x) -> tuple:
        """Backend scalar from an int/Fraction/mpq (floats are rejected:
        the symbolic layer admits no inexact constants)."""
        if isinstance(x, tuple):
            return x
        if isinstance(x, float):
            raise TypeError("exact backend cannot absorb a float constant")
        return qc(mpq(x), 0)

    def times_i(self, c: tuple) -> tuple:
        return qc_mul(c, qc(0, 1))

    def mul_const(self, a: tuple, b: tuple) -> tuple:
        return qc_mul(a, b)

    def add_const(self, a: tuple, b: tuple) -> tuple:
        return (a[0] + b[0], a[1] + b[1])

    def neg_const(self, c: tuple) -> tuple:
        return qc_neg(c)

    def inv_const(self, c: tuple) -> tuple:
        re, im = c
        n = re * re + im * im
        if n == 0:
            raise ZeroDivisionError("inverting zero scalar")
        return qc(re / n, -im / n)

    # -- field algebra -----------------------------------------------------
    def zero(self, degree: int) -> Form:
        return symforms.zero_form(degree)

    def add(self, a: Form, b: Form) -> Form:
        return a + b

    def sub(self, a: Form, b: Form) -> Form:
        return a - b

    def scale(self, c: tuple, w: Form) -> Form:
        return w.scale(c)

    def smul(self, s: Form, w: Form) -> Form:
        """Multiply by a scalar field (degree-0 element)."""
        return w.smul(s.component(()))

    # -- uncoupled calculus --------------------------------------------------
    def d(self, w: Form) -> Form:
        return symforms.ext_d(w)

    def codiff(self, w: Form) -> Form:
        return symforms.codiff(w)

    def kg(self, m2: tuple, w: Form) -> Form:
        return symforms.box(w) + w.scale(m2)

    def wedge_cov(self, v: Form, w: Form) -> Form:
        """v ^ w for a 1-form coupling covector v."""
        return symforms.wedge(v, w)

    def dot_cov(self, v: Form, w: Form) -> Form:
        """Index-raised contraction of a 1-form v into w."""
        return symforms.interior(v, w)

    # -- minimally coupled calculus -----------------------------------------
    def bind_background(self, q, A: Form) -> "SymGauge":
        return SymGauge(GaugeBackground(q, A))


class SymGauge:
    """Gauge-coupled half of the symbolic backend (fixed charge and potential)."""

    def __init__(self, bg: GaugeBackground):
        self.bg = bg
        self.q = bg.q
        self.iq_const = qc(0, bg.q)

    def d(self, w: Form) -> Form:
        return self.bg.d(w)

    def codiff(self, w: Form) -> Form:
        return self.bg.codiff(w)

    def kg(self, m2: tuple, w: Form) -> Form:
        return self.bg.box(w) + w.scale(m2)

    def curv_wedge(self, w: Form) -> Form:
        return self.bg.curv_wedge(w)

    def curv_dot(self, W: Form) -> Form:
        return self.bg.curv_dot(W)

    def curv_ddot(self, w: Form) -> Form:
        return self.bg.curv_ddot(w)

    def current_dot(self, W: Form) -> Form:
        return self.bg.current_dot(W)


# ---------------------------------------------------------------------------
# neutral vector field, scalar auxiliary slot
# ---------------------------------------------------------------------------

def neutral_system(calc, m2) -> BlockSystem:
    """Massive vector field -delta d + m^2 on 1-forms; auxiliary slot carries its
    divergence.  Enlarged slot order: (divergence scalar, vector field)."""
    m2 = calc.num(m2)

    def field_op(w):
        (W,) = w
        return (calc.add(calc.scale(calc.neg_const(calc.num(1)), calc.codiff(calc.d(W))),
                         calc.scale(m2, W)),)

    def prolong(w):
        (W,) = w
        return (calc.codiff(W), W)

    def project(u):
        return (u[1],)

    def embed_aux(a):
        (phi,) = a
        return (phi, calc.zero(1))

    def constraint(u):
        phi, W = u
        return (calc.sub(phi, calc.codiff(W)),)

    def extended_op(u):
        phi, W = u
        return (calc.scale(m2, phi),
                calc.add(calc.d(phi), calc.kg(m2, W)))

    def constraint_op(a):
        (phi,) = a
        return (calc.kg(m2, phi),)

    return BlockSystem(
        name="neutral",
        b_slots=(("form", 1),),
        aux_slots=(("form", 0),),
        full_slots=(("form", 0), ("form", 1)),
        field_op=field_op, prolong=prolong, project=project,
        embed_aux=embed_aux, constraint=constraint,
        extended_op=extended_op, constraint_op=constraint_op,
    )


# ---------------------------------------------------------------------------
# neutral p-form field, higher-degree auxiliary slot
# ---------------------------------------------------------------------------

def neutral_alt_system(calc, m2, p: int = 1) -> BlockSystem:
    """Same field operator on p-forms, but the auxiliary slot carries the exterior
    derivative instead of the divergence.  Slot order: (field, derivative)."""
    m2 = calc.num(m2)

    def field_op(w):
        (W,) = w
        return (calc.add(calc.scale(calc.neg_const(calc.num(1)), calc.codiff(calc.d(W))),
                         calc.scale(m2, W)),)

    def prolong(w):
        (W,) = w
        return (W, calc.d(W))

    def project(u):
        return (u[0],)

    def embed_aux(a):
        (H,) = a
        return (calc.zero(p), H)

    def constraint(u):
        W, H = u
        return (calc.sub(H, calc.d(W)),)

    def extended_op(u):
        W, H = u
        return (calc.sub(calc.scale(m2, W), calc.codiff(H)),
                calc.kg(m2, H))

    def constraint_op(a):
        (H,) = a
        # -delta d + m^2 on the auxiliary (p+1)-form
        return (calc.add(calc.scale(calc.neg_const(calc.num(1)), calc.codiff(calc.d(H))),
                         calc.scale(m2, H)),)

    return BlockSystem(
        name="neutral-alt",
        b_slots=(("form", p),),
        aux_slots=(("form", p + 1),),
        full_slots=(("form", p), ("form", p + 1)),
        field_op=field_op, prolong=prolong, project=project,
        embed_aux=embed_aux, constraint=constraint,
        extended_op=extended_op, constraint_op=constraint_op,
    )


# ---------------------------------------------------------------------------
# multiplet with position-dependent mass matrix
# ---------------------------------------------------------------------------

def _mat_apply(calc, rho, vec):
    """(rho . vec)^i = sum_j rho[i][j] * vec[j] with scalar-field entries."""
    k = len(vec)
    out = []
    for i in range(k):
        acc = None
        for j in range(k):
            term = calc.smul(rho[i][j], vec[j])
            acc = term if acc is None else calc.add(acc, term)
        out.append(acc)
    return tuple(out)


def multiplet_system(calc, rho, k: int) -> BlockSystem:
    """k coupled vector fields with a (possibly position-dependent) mass-square
    matrix rho, given as a k-by-k matrix of scalar fields.  The auxiliary slot is
    the k-vector of divergences; the mass matrix's gradient feeds the constraint
    row.  Slot order: (divergence k-vector, field k-vector)."""
    drho = tuple(tuple(calc.d(rho[i][j]) for j in range(k)) for i in range(k))

    def _drho_dot(vec):
        out = []
        for i in range(k):
            acc = None
            for j in range(k):
                term = calc.dot_cov(drho[i][j], vec[j])
                acc = term if acc is None else calc.add(acc, term)
            out.append(acc)
        return tuple(out)

    def _box_plus_rho(vec):
        zero_mass = calc.num(0)
        waved = tuple(calc.kg(zero_mass, comp) for comp in vec)
        massed = _mat_apply(calc, rho, vec)
        return tuple(calc.add(a, b) for a, b in zip(waved, massed))

    def field_op(w):
        (W,) = w
        stiff = tuple(calc.scale(calc.neg_const(calc.num(1)),
                                 calc.codiff(calc.d(comp))) for comp in W)
        massed = _mat_apply(calc, rho, W)
        return (tuple(calc.add(a, b) for a, b in zip(stiff, massed)),)

    def prolong(w):
        (W,) = w
        return (tuple(calc.codiff(comp) for comp in W), W)

    def project(u):
        return (u[1],)

    def embed_aux(a):
        (phi,) = a
        return (phi, tuple(calc.zero(1) for _ in range(k)))

    def constraint(u):
        phi, W = u
        return (tuple(calc.sub(p_, calc.codiff(w_)) for p_, w_ in zip(phi, W)),)

    def extended_op(u):
        phi, W = u
        top = tuple(calc.sub(a, b)
                    for a, b in zip(_mat_apply(calc, rho, phi), _drho_dot(W)))
        bottom = tuple(calc.add(calc.d(p_), kw)
                       for p_, kw in zip(phi, _box_plus_rho(W)))
        return (top, bottom)

    def constraint_op(a):
        (phi,) = a
        return (_box_plus_rho(phi),)

    return BlockSystem(
        name="multiplet",
        b_slots=(("multiplet", 1, k),),
        aux_slots=(("multiplet", 0, k),),
        full_slots=(("multiplet", 0, k), ("multiplet", 1, k)),
        field_op=field_op, prolong=prolong, project=project,
        embed_aux=embed_aux, constraint=constraint,
        extended_op=extended_op, constraint_op=constraint_op,
    )


# ---------------------------------------------------------------------------
# charged vector field in a background potential, general moment parameter
# ---------------------------------------------------------------------------

def charged_system(calc, gauge, m2, kappa) -> BlockSystem:
    """Charged vector field with arbitrary moment parameter kappa.

    Slots: (divergence scalar, vector field, field-strength 2-form).  The charge
    enters through the bound gauge backend; kappa is a backend scalar.
    """
    m2 = calc.num(m2)
    kappa = calc.num(kappa)
    iq = gauge.iq_const
    iqk = calc.mul_const(iq, kappa)
    iq_1mk = calc.mul_const(iq, calc.add_const(calc.num(1), calc.neg_const(kappa)))

    def field_op(w):
        (W,) = w
        r = calc.sub(calc.scale(m2, W), gauge.codiff(gauge.d(W)))
        return (calc.add(r, calc.scale(iqk, gauge.curv_dot(W))),)

    def prolong(w):
        (W,) = w
        return (gauge.codiff(W), W, gauge.d(W))

    def project(u):
        return (u[1],)

    def embed_aux(a):
        phi, H = a
        return (phi, calc.zero(1), H)

    def constraint(u):
        phi, W, H = u
        return (calc.sub(phi, gauge.codiff(W)),
                calc.sub(H, gauge.d(W)))

    def extended_op(u):
        phi, W, H = u
        row0 = calc.scale(m2, phi)
        row0 = calc.sub(row0, calc.scale(iqk, gauge.current_dot(W)))
        row0 = calc.add(row0, calc.scale(iq_1mk, gauge.curv_ddot(H)))
        row1 = calc.add(gauge.d(phi), gauge.kg(m2, W))
        row1 = calc.add(row1, calc.scale(iqk, gauge.curv_dot(W)))
        row2 = calc.add(gauge.kg(m2, H),
                        calc.scale(iq, gauge.codiff(gauge.curv_wedge(W))))
        row2 = calc.add(row2, calc.scale(iqk, gauge.d(gauge.curv_dot(W))))
        return (row0, row1, row2)

    def constraint_op(a):
        phi, H = a
        top = calc.add(gauge.kg(m2, phi), calc.scale(iq_1mk, gauge.curv_ddot(H)))
        bottom = calc.sub(gauge.kg(m2, H),
                          calc.scale(iq, gauge.curv_wedge(phi)))
        return (top, bottom)

    return BlockSystem(
        name="charged",
        b_slots=(("form", 1),),
        aux_slots=(("form", 0), ("form", 2)),
        full_slots=(("form", 0), ("form", 1), ("form", 2)),
        field_op=field_op, prolong=prolong, project=project,
        embed_aux=embed_aux, constraint=constraint,
        extended_op=extended_op, constraint_op=constraint_op,
    )


# ---------------------------------------------------------------------------
# vector field linearly coupled to a scalar field
# ---------------------------------------------------------------------------

def vector_scalar_system(calc, m2, mu2, v: Any) -> BlockSystem:
    """Vector field of mass^2 m2 linearly coupled to a scalar of mass^2 mu2 through
    a (compactly supported) coupling covector v.

    Original slots: (vector field W, scalar field phi).  Auxiliary slots carry the
    divergence of W and the gradient of phi; enlarged slot order is
    (div W, grad phi, W, phi).
    """
    m2 = calc.num(m2)
    mu2 = calc.num(mu2)
    minus_one = calc.neg_const(calc.num(1))
    delta_v = calc.codiff(v)

    def field_op(w):
        W, phi = w
        top = calc.add(calc.scale(minus_one, calc.codiff(calc.d(W))),
                       calc.scale(m2, W))
        top = calc.add(top, calc.wedge_cov(v, phi))
        bottom = calc.sub(calc.kg(mu2, phi), calc.dot_cov(v, W))
        return (top, bottom)

    def prolong(w):
        W, phi = w
        return (calc.codiff(W), calc.d(phi), W, phi)

    def project(u):
        return (u[2], u[3])

    def embed_aux(a):
        psi, V = a
        return (psi, V, calc.zero(1), calc.zero(0))

    def constraint(u):
        psi, V, W, phi = u
        return (calc.sub(psi, calc.codiff(W)),
                calc.sub(V, calc.d(phi)))

    def extended_op(u):
        psi, V, W, phi = u
        row0 = calc.sub(calc.scale(m2, psi), calc.dot_cov(v, V))
        row0 = calc.add(row0, calc.smul(delta_v, phi))
        row1 = calc.sub(calc.kg(mu2, V), calc.d(calc.dot_cov(v, W)))
        row2 = calc.add(calc.d(psi), calc.kg(m2, W))
        row2 = calc.add(row2, calc.wedge_cov(v, phi))
        row3 = calc.sub(calc.kg(mu2, phi), calc.dot_cov(v, W))
        return (row0, row1, row2, row3)

    def constraint_op(a):
        psi, V = a
        return (calc.sub(calc.kg(m2, psi), calc.dot_cov(v, V)),
                calc.kg(mu2, V))

    return BlockSystem(
        name="vector-scalar",
        b_slots=(("form", 1), ("form", 0)),
        aux_slots=(("form", 0), ("form", 1)),
        full_slots=(("form", 0), ("form", 1), ("form", 1), ("form", 0)),
        field_op=field_op, prolong=prolong, project=project,
        embed_aux=embed_aux, constraint=constraint,
        extended_op=extended_op, constraint_op=constraint_op,
    )
