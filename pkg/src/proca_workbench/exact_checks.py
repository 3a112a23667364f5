"""Seeded exact verification suites for the forms calculus and the block systems.

Every check here is an identity of exact rational arithmetic: the residual must be
the *identically zero* form, not merely small.  Random sections are multivariate
polynomials of bounded degree with small rational coefficients, drawn from a seeded
PRNG so failures are reproducible; a failing trial records its seed and a witness
printout of the nonzero residual.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List

from gmpy2 import mpq

from . import symforms
from .exactpoly import Poly, qc
from .formindex import basis_indices
from .symforms import (
    Form,
    GaugeBackground,
    codiff,
    codiff_coord,
    double_dot,
    double_dot_components,
    dual,
    dual_inv,
    ext_d,
    hermiticity_boundary_residual,
    wedge,
)
from .systems import (
    BlockSystem,
    SymCalculus,
    charged_system,
    multiplet_system,
    neutral_alt_system,
    neutral_system,
    vector_scalar_system,
)

SYSTEM_TAGS = ("neutral", "neutral-alt", "multiplet", "charged", "vector-scalar")


# ---------------------------------------------------------------------------
# random data
# ---------------------------------------------------------------------------

def rand_rational(rng: random.Random, allow_zero: bool = True) -> mpq:
    num = rng.randint(-3, 3)
    if not allow_zero:
        while num == 0:
            num = rng.randint(-3, 3)
    return mpq(num, rng.choice((1, 2)))


def rand_coef(rng: random.Random, real_only: bool = False):
    re = rand_rational(rng)
    im = mpq(0) if real_only else rand_rational(rng)
    if re == 0 and im == 0:
        re = mpq(1)
    return qc(re, im)


def rand_poly(rng: random.Random, max_degree: int = 3, terms: int = 3,
              real_only: bool = False) -> Poly:
    p = Poly()
    for _ in range(terms):
        total = rng.randint(0, max_degree)
        exps = [0, 0, 0, 0]
        for _ in range(total):
            exps[rng.randrange(4)] += 1
        p = p + Poly({tuple(exps): rand_coef(rng, real_only)})
    return p


def rand_form(rng: random.Random, degree: int, max_degree: int = 3,
              real_only: bool = False) -> Form:
    comps = {}
    for I in basis_indices(degree):
        if rng.random() < 0.85:
            comps[I] = rand_poly(rng, max_degree, real_only=real_only)
    if not comps:
        comps[basis_indices(degree)[0]] = rand_poly(rng, max_degree,
                                                    real_only=real_only)
    return Form(degree, comps)


def rand_background(rng: random.Random) -> GaugeBackground:
    q = rand_rational(rng, allow_zero=False)
    # real potential of modest degree keeps the longest identity chains quick
    A = rand_form(rng, 1, max_degree=2, real_only=True)
    return GaugeBackground(q, A)


def _rand_pos_fraction(rng: random.Random) -> Fraction:
    n = rng.randint(1, 3)
    return Fraction(n * n, rng.choice((1, 2)))


def _rand_any_fraction(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-3, 3), rng.choice((1, 2)))


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

@dataclass
class IdentityResult:
    identity_name: str
    trials: int
    failures: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class IdentityReport:
    suite: str
    seed: int
    results: List[IdentityResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_jsonable(self) -> Dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "all_passed": self.all_passed,
            "results": [
                {
                    "identity_name": r.identity_name,
                    "trials": r.trials,
                    "failures": r.failures,
                }
                for r in self.results
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_jsonable(), indent=indent, sort_keys=True)


def _is_zero_section(x) -> bool:
    if isinstance(x, Form):
        return x.is_zero()
    return all(_is_zero_section(c) for c in x)


def _witness(x) -> str:
    text = repr(x)
    return text if len(text) <= 400 else text[:400] + "..."


def _stable_seed(base: int, name: str) -> int:
    return base * 0x9E3779B1 + zlib.crc32(name.encode("utf-8"))


def _run_trials(name: str, trials: int, seed: int,
                residual: Callable[[random.Random], object],
                results: List[IdentityResult]) -> None:
    res = IdentityResult(name, trials)
    base = _stable_seed(seed, name)
    for t in range(trials):
        trial_seed = base + t
        rng = random.Random(trial_seed)
        r = residual(rng)
        if not _is_zero_section(r):
            res.failures.append({"seed": trial_seed, "witness": _witness(r)})
    results.append(res)


# ---------------------------------------------------------------------------
# calculus identity suite
# ---------------------------------------------------------------------------

def check_identity_suite(seed: int = 0, trials: int = 50) -> IdentityReport:
    """Verify the coupled-calculus identities on random polynomial data.

    Covers the squares of the coupled derivative and codifferential, the
    curvature/current contraction identity, the wave-operator commutators, the
    coupled Klein-Gordon commutator on 1-forms, the boundary-exactness residual
    behind formal self-adjointness, the divergence identity of the charged field
    operator, and the agreement of independent computation routes.  All residuals
    must vanish identically.
    """
    results: List[IdentityResult] = []

    def run(name, fn):
        _run_trials(name, trials, seed, fn, results)

    def d_square(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((0, 1, 2)))
        return bg.d(bg.d(w)) - bg.curv_wedge(w).scale(bg.iq)
    run("coupled-derivative-square-is-curvature", d_square)

    def codiff_square(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((2, 3)))
        return bg.codiff(bg.codiff(w)) + dual_inv(wedge(bg.F, dual(w))).scale(bg.iq)
    run("coupled-codifferential-square-is-curvature", codiff_square)

    def curv_contraction(rng):
        bg = rand_background(rng)
        W = rand_form(rng, 1)
        return (bg.codiff(bg.curv_dot(W)) + bg.current_dot(W)
                + bg.curv_ddot(bg.d(W)))
    run("codifferential-of-curvature-contraction", curv_contraction)

    def d_wave_commutator(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((0, 1)))
        lhs = bg.d(bg.box(w)) - bg.box(bg.d(w))
        rhs = (bg.codiff(bg.curv_wedge(w))
               - bg.curv_wedge(bg.codiff(w))).scale(bg.iq)
        return lhs - rhs
    run("coupled-derivative-wave-commutator", d_wave_commutator)

    def codiff_wave_commutator(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((1, 2)))
        lhs = bg.codiff(bg.box(w)) - bg.box(bg.codiff(w))
        rhs = (dual_inv(wedge(bg.F, dual(bg.d(w))))
               - bg.d(dual_inv(wedge(bg.F, dual(w))))).scale(bg.iq)
        return lhs - rhs
    run("coupled-codifferential-wave-commutator", codiff_wave_commutator)

    def codiff_kg_one_form(rng):
        bg = rand_background(rng)
        m2 = rand_rational(rng, allow_zero=False) ** 2
        w = rand_form(rng, 1)
        lhs = bg.codiff(bg.kg(w, m2)) - bg.kg(bg.codiff(w), m2)
        return lhs - bg.curv_ddot(bg.d(w)).scale(bg.iq)
    run("coupled-codifferential-kg-commutator-one-form", codiff_kg_one_form)

    def boundary_exactness(rng):
        bg = rand_background(rng)
        degW = rng.choice((1, 2))
        Z = rand_form(rng, degW - 1)
        W = rand_form(rng, degW)
        return hermiticity_boundary_residual(Z, W, bg)
    run("pairing-boundary-exactness", boundary_exactness)

    def charged_divergence(rng):
        bg = rand_background(rng)
        m2 = rand_rational(rng, allow_zero=False) ** 2
        kappa = rand_rational(rng)
        W = rand_form(rng, 1)
        J = bg.field_op(W, m2, kappa)
        lhs = bg.codiff(J) - bg.codiff(W).scale(m2)
        corr = (bg.curv_ddot(bg.d(W)).scale(qc(0, bg.q * (kappa - 1)))
                + bg.current_dot(W).scale(qc(0, bg.q * kappa)))
        return lhs + corr
    run("divergence-of-charged-field-operator", charged_divergence)

    def codiff_routes(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((1, 2, 3)))
        return ((bg.codiff(w) - bg.codiff_coord(w))
                + (codiff(w) - codiff_coord(w)))
    run("codifferential-route-agreement", codiff_routes)

    def full_contraction_routes(rng):
        bg = rand_background(rng)
        H = rand_form(rng, 2)
        return double_dot(bg.F, H) - symforms.scalar_form(
            double_dot_components(bg.F, H))
    run("full-contraction-route-agreement", full_contraction_routes)

    def plain_squares(rng):
        w = rand_form(rng, rng.choice((0, 1, 2)))
        u = rand_form(rng, rng.choice((2, 3)))
        return (ext_d(ext_d(w)), codiff(codiff(u)))
    run("uncoupled-squares-vanish", plain_squares)

    return IdentityReport("identities", seed, results)


# ---------------------------------------------------------------------------
# block-structure suite
# ---------------------------------------------------------------------------

def _rand_slot(rng, slot):
    if slot[0] == "form":
        return rand_form(rng, slot[1])
    _, degree, k = slot
    return tuple(rand_form(rng, degree) for _ in range(k))


def _rand_section(rng, slots):
    return tuple(_rand_slot(rng, s) for s in slots)


def _add_section(a, b):
    if isinstance(a, Form):
        return a + b
    return tuple(_add_section(x, y) for x, y in zip(a, b))


def _sub_section(a, b):
    if isinstance(a, Form):
        return a - b
    return tuple(_sub_section(x, y) for x, y in zip(a, b))


def _build_system(tag: str, rng: random.Random) -> BlockSystem:
    """Fresh system with random parameters, so relations hold as operator identities."""
    calc = SymCalculus()
    m2 = _rand_pos_fraction(rng)
    if tag == "neutral":
        return neutral_system(calc, m2)
    if tag == "neutral-alt":
        return neutral_alt_system(calc, m2, p=rng.choice((1, 2)))
    if tag == "multiplet":
        k = rng.choice((2, 3))
        rho = [[None] * k for _ in range(k)]
        for i in range(k):
            rho[i][i] = symforms.scalar_form(rand_poly(rng, 2, real_only=True))
            for j in range(i + 1, k):
                entry = rand_poly(rng, 2)
                rho[i][j] = symforms.scalar_form(entry)
                rho[j][i] = symforms.scalar_form(entry.conj())
        return multiplet_system(calc, tuple(tuple(r) for r in rho), k)
    if tag == "charged":
        gauge = calc.bind_background(
            rand_rational(rng, allow_zero=False),
            rand_form(rng, 1, max_degree=2, real_only=True))
        return charged_system(calc, gauge, m2, _rand_any_fraction(rng))
    if tag == "vector-scalar":
        v = rand_form(rng, 1, max_degree=2, real_only=True)
        return vector_scalar_system(calc, m2, _rand_pos_fraction(rng), v)
    raise ValueError("unknown system tag %r" % (tag,))


def check_structure_suite(system: str, seed: int = 0,
                          trials: int = 50) -> IdentityReport:
    """Verify the defining relations of one block system on random sections.

    Fresh random parameters (masses, charge, moment parameter, mass matrix,
    coupling covector, background potential) are drawn per trial along with the
    sections.
    """
    if system not in SYSTEM_TAGS:
        raise ValueError("system must be one of %s" % (SYSTEM_TAGS,))
    results: List[IdentityResult] = []

    def run(name, fn):
        _run_trials("%s:%s" % (system, name), trials, seed, fn, results)

    def project_prolong(rng):
        sys_ = _build_system(system, rng)
        w = _rand_section(rng, sys_.b_slots)
        return _sub_section(sys_.project(sys_.prolong(w)), w)
    run("project-prolong-identity", project_prolong)

    def partition(rng):
        sys_ = _build_system(system, rng)
        u = _rand_section(rng, sys_.full_slots)
        lhs = _add_section(sys_.prolong(sys_.project(u)),
                           sys_.embed_aux(sys_.constraint(u)))
        return _sub_section(lhs, u)
    run("prolong-project-plus-constraint-partition", partition)

    def constraint_kills(rng):
        sys_ = _build_system(system, rng)
        w = _rand_section(rng, sys_.b_slots)
        return sys_.constraint(sys_.prolong(w))
    run("constraint-annihilates-prolongation", constraint_kills)

    def reduction(rng):
        sys_ = _build_system(system, rng)
        w = _rand_section(rng, sys_.b_slots)
        return _sub_section(sys_.project(sys_.extended_op(sys_.prolong(w))),
                            sys_.field_op(w))
    run("projected-extended-op-reduction", reduction)

    def intertwine(rng):
        sys_ = _build_system(system, rng)
        u = _rand_section(rng, sys_.full_slots)
        return _sub_section(sys_.constraint(sys_.extended_op(u)),
                            sys_.constraint_op(sys_.constraint(u)))
    run("constraint-intertwines-extended-op", intertwine)

    def aux_invisible(rng):
        sys_ = _build_system(system, rng)
        a = _rand_section(rng, sys_.aux_slots)
        return sys_.project(sys_.embed_aux(a))
    run("project-kills-auxiliary", aux_invisible)

    return IdentityReport("structure:%s" % system, seed, results)


def run_all_suites(seed: int = 0, trials: int = 50) -> List[IdentityReport]:
    reports = [check_identity_suite(seed, trials)]
    for tag in SYSTEM_TAGS:
        reports.append(check_structure_suite(tag, seed, trials))
    return reports
