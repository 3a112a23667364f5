"""Backend-generic block-operator algebra for Green-operator construction.

Sections of direct-sum field spaces are plain (possibly nested) tuples whose leaves
support ``+`` and ``-`` — exact polynomial forms or lattice fields.  A
:class:`LinearMap` wraps one tuple-to-tuple operator with slot signatures; a
:class:`GreenPair` holds the retarded/advanced inverses of the operator that governs
them.  Two constructions do the real work:

* :func:`lu_green` — the Green pair of a 2x2 upper-left-invertible block operator,
  assembled from the exact inverse of the corner block and a Green pair for its
  Schur complement;
* :func:`assemble_green` — push a Green pair through a projection/prolongation pair,
  yielding the Green pair of the reduced operator.

The residual harnesses at the bottom (:func:`verify_green`,
:func:`verify_constraint`, :func:`verify_intertwine`) report per-source norms and
pass/fail flags; the backend supplies the norm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

Section = Tuple

RETARDED = "retarded"
ADVANCED = "advanced"
ORIENTATIONS = (RETARDED, ADVANCED)


class NotInvertible(ValueError):
    """The corner block has no exact inverse attached."""


class StructureViolation(AssertionError):
    """A structural precondition identity failed on a probe section."""


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

def sec_add(a, b):
    if isinstance(a, tuple):
        return tuple(sec_add(x, y) for x, y in zip(a, b))
    return a + b


def sec_sub(a, b):
    if isinstance(a, tuple):
        return tuple(sec_sub(x, y) for x, y in zip(a, b))
    return a - b


def sec_neg(a):
    if isinstance(a, tuple):
        return tuple(sec_neg(x) for x in a)
    return -a


# ---------------------------------------------------------------------------
# maps and Green pairs
# ---------------------------------------------------------------------------

@dataclass
class LinearMap:
    """A linear operator between tuple-shaped field spaces.

    support_action declares how the causal support of the output relates to the
    input: "local" (differential/multiplication operators), "future-directed"
    (retarded inverses), or "past-directed" (advanced inverses).  inverse, when
    present, must be exact and support-preserving.
    """

    name: str
    domain: tuple
    codomain: tuple
    apply: Callable[[Section], Section]
    support_action: str = "local"
    inverse: Optional[Callable[[Section], Section]] = None

    def __call__(self, u: Section) -> Section:
        return self.apply(u)


def identity_map(slots: tuple, name: str = "id") -> LinearMap:
    return LinearMap(name, slots, slots, lambda u: u)


def compose(name: str, *maps: LinearMap) -> LinearMap:
    """Composition maps[0] after maps[1] after ... (rightmost acts first)."""
    if not maps:
        raise ValueError("compose needs at least one map")
    seq = tuple(maps)

    def apply(u):
        for m in reversed(seq):
            u = m.apply(u)
        return u

    action = "local"
    for m in seq:
        if m.support_action != "local":
            action = m.support_action
    return LinearMap(name, seq[-1].domain, seq[0].codomain, apply, action)


@dataclass
class GreenPair:
    """Retarded/advanced inverses of the operator that governs them."""

    governed_by: LinearMap
    retarded: LinearMap
    advanced: LinearMap

    def pick(self, orientation: str) -> LinearMap:
        if orientation == RETARDED:
            return self.retarded
        if orientation == ADVANCED:
            return self.advanced
        raise ValueError("orientation must be %r or %r" % ORIENTATIONS)

    def causal(self) -> LinearMap:
        """The difference advanced - retarded (the propagator of the exact sequence)."""
        ret, adv = self.retarded, self.advanced
        return LinearMap("causal(%s)" % self.governed_by.name,
                         ret.domain, ret.codomain,
                         lambda u: sec_sub(adv.apply(u), ret.apply(u)))


# ---------------------------------------------------------------------------
# the two constructions
# ---------------------------------------------------------------------------

def schur_complement(P_blk: LinearMap, R: LinearMap, S: LinearMap,
                     T: LinearMap) -> LinearMap:
    """The lower-right block after eliminating the invertible corner:
    W = T - S P^-1 R."""
    if P_blk.inverse is None:
        raise NotInvertible("corner block %r carries no inverse" % P_blk.name)
    P_inv = P_blk.inverse

    def apply(u):
        return sec_sub(T.apply(u), S.apply(P_inv(R.apply(u))))

    return LinearMap("schur[%s]" % T.name, T.domain, T.codomain, apply)


def lu_green(P_blk: LinearMap, R: LinearMap, S: LinearMap, T: LinearMap,
             E_W: GreenPair) -> GreenPair:
    """Green pair of the block operator Q = [[P, R], [S, T]] with invertible corner.

    Requires the exact inverse of P (attached to P_blk) and a Green pair for the
    Schur complement W = T - S P^-1 R.  The returned maps realize

        E_Q = [[P^-1, -P^-1 R E_W], [0, E_W]] . [[id, 0], [-S P^-1, id]],

    i.e. u = (a, b)  ->  (P^-1 a - P^-1 R w, w)  with  w = E_W(b - S P^-1 a);
    the bottom row is E_W . (-S P^-1, id).  Orientation is inherited from E_W.
    """
    if P_blk.inverse is None:
        raise NotInvertible("corner block %r carries no inverse" % P_blk.name)
    split = len(P_blk.domain)
    P_inv = P_blk.inverse

    def q_apply(u):
        a, b = u[:split], u[split:]
        top = sec_add(P_blk.apply(a), R.apply(b))
        bottom = sec_add(S.apply(a), T.apply(b))
        return top + bottom

    full_domain = P_blk.domain + T.domain
    Q = LinearMap("[[%s,%s],[%s,%s]]" % (P_blk.name, R.name, S.name, T.name),
                  full_domain, full_domain, q_apply)

    def make(orientation):
        EW = E_W.pick(orientation).apply

        def apply(u):
            a, b = u[:split], u[split:]
            Pa = P_inv(a)
            w = EW(sec_sub(b, S.apply(Pa)))
            top = sec_sub(Pa, P_inv(R.apply(w)))
            return top + w

        action = "future-directed" if orientation == RETARDED else "past-directed"
        return LinearMap("E_%s[%s]" % (orientation, Q.name),
                         full_domain, full_domain, apply, action)

    return GreenPair(Q, make(RETARDED), make(ADVANCED))


def assemble_green(pi: LinearMap, D: LinearMap, E_Q: GreenPair,
                   governed_by: Optional[LinearMap] = None,
                   probes: Sequence[Section] = (),
                   norm: Optional[Callable[[Section], float]] = None,
                   tolerance: float = 0.0) -> GreenPair:
    """Green pair of the reduced operator: retarded/advanced = pi . E_Q^± . D.

    The structural identities (pi D = id, the partition of the identity, the
    reduction of the extended operator, and constraint propagation) must hold for
    the construction to be valid; they are verified exactly by the symbolic suite.
    If probe sections and a norm are supplied, pi . D = id is spot-checked here and
    a violation raises StructureViolation.
    """
    for j, probe in enumerate(probes):
        r = sec_sub(pi.apply(D.apply(probe)), probe)
        v = norm(r) if norm is not None else (0.0 if _sec_is_zero(r) else 1.0)
        if v > tolerance:
            raise StructureViolation(
                "pi . D != id on probe %d (residual %.3e)" % (j, v))

    if governed_by is None:
        governed_by = LinearMap("reduced(%s)" % E_Q.governed_by.name,
                                pi.codomain, pi.codomain,
                                lambda u: pi.apply(E_Q.governed_by.apply(D.apply(u))))

    def make(orientation):
        EQ = E_Q.pick(orientation)
        return LinearMap("E_%s[%s]" % (orientation, governed_by.name),
                         pi.codomain, pi.codomain,
                         lambda u: pi.apply(EQ.apply(D.apply(u))),
                         EQ.support_action)

    return GreenPair(governed_by, make(RETARDED), make(ADVANCED))


def _sec_is_zero(x) -> bool:
    if isinstance(x, tuple):
        return all(_sec_is_zero(c) for c in x)
    return x.is_zero()


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualEntry:
    label: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.value <= self.tolerance


@dataclass
class ResidualReport:
    name: str
    entries: List[ResidualEntry] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst(self) -> float:
        return max((e.value for e in self.entries), default=0.0)

    def add(self, label: str, value: float, tolerance: float) -> None:
        self.entries.append(ResidualEntry(label, float(value), float(tolerance)))

    def to_jsonable(self) -> Dict:
        return {
            "name": self.name,
            "all_passed": self.all_passed,
            "entries": [
                {"label": e.label, "value": e.value,
                 "tolerance": e.tolerance, "passed": e.passed}
                for e in self.entries
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_jsonable(), indent=indent, sort_keys=True)


def _rel(norm, residual, reference: float) -> float:
    return norm(residual) / reference if reference > 0.0 else norm(residual)


def verify_green(E: GreenPair, sources: Sequence[Section],
                 norm: Callable[[Section], float], tolerance: float,
                 g3_measure: Optional[Callable[[Section, Section, str], float]] = None,
                 g3_tolerance: Optional[float] = None) -> ResidualReport:
    """Check the Green-operator axioms on a batch of compactly supported sources.

    For each source f and orientation: the residual of applying the governing
    operator after the Green map (axiom one), of applying the Green map after the
    operator (axiom two), and optionally a causal-support violation measure
    (axiom three) computed by the backend from (Green output, source, orientation).
    Values are relative to the source norm.
    """
    rep = ResidualReport("green-axioms[%s]" % E.governed_by.name)
    P = E.governed_by
    for j, f in enumerate(sources):
        ref = norm(f)
        for orientation in ORIENTATIONS:
            G = E.pick(orientation)
            u = G.apply(f)
            rep.add("G1[%s][src%d]" % (orientation, j),
                    _rel(norm, sec_sub(P.apply(u), f), ref), tolerance)
            rep.add("G2[%s][src%d]" % (orientation, j),
                    _rel(norm, sec_sub(G.apply(P.apply(f)), f), ref), tolerance)
            if g3_measure is not None:
                rep.add("G3[%s][src%d]" % (orientation, j),
                        g3_measure(u, f, orientation),
                        tolerance if g3_tolerance is None else g3_tolerance)
    return rep


def verify_constraint(C: LinearMap, E_Q: GreenPair, D: LinearMap,
                      sources: Sequence[Section],
                      norm: Callable[[Section], float],
                      tolerance: float) -> ResidualReport:
    """Per-source norm of C . E_Q^± . D applied to each source (must vanish)."""
    rep = ResidualReport("constraint[%s]" % C.name)
    for j, J in enumerate(sources):
        DJ = D.apply(J)
        ref = norm(DJ)
        for orientation in ORIENTATIONS:
            r = C.apply(E_Q.pick(orientation).apply(DJ))
            rep.add("C.E_Q.D[%s][src%d]" % (orientation, j),
                    _rel(norm, r, ref), tolerance)
    return rep


def verify_intertwine(D: LinearMap, C: LinearMap, E_P: GreenPair, E_Q: GreenPair,
                      sources: Sequence[Section],
                      norm: Callable[[Section], float], tolerance: float,
                      E_N: Optional[GreenPair] = None) -> ResidualReport:
    """Commutation of the prolongation/constraint squares with the Green maps.

    Reports ||D E_P^± J - E_Q^± D J|| per source, and when a Green pair for the
    constraint-propagation operator is supplied, ||C E_Q^± F - E_N^± C F|| as well.
    """
    rep = ResidualReport("intertwine[%s;%s]" % (D.name, C.name))
    for j, J in enumerate(sources):
        ref = norm(D.apply(J))
        for orientation in ORIENTATIONS:
            lhs = D.apply(E_P.pick(orientation).apply(J))
            rhs = E_Q.pick(orientation).apply(D.apply(J))
            rep.add("D.E_P-E_Q.D[%s][src%d]" % (orientation, j),
                    _rel(norm, sec_sub(lhs, rhs), ref), tolerance)
            if E_N is not None:
                lhs2 = C.apply(E_Q.pick(orientation).apply(D.apply(J)))
                rhs2 = E_N.pick(orientation).apply(C.apply(D.apply(J)))
                rep.add("C.E_Q-E_N.C[%s][src%d]" % (orientation, j),
                        _rel(norm, sec_sub(lhs2, rhs2), ref), tolerance)
    return rep
