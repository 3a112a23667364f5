"""Block-elimination machinery checked against plain dense linear algebra.

Sections here are tuples of numpy vectors and every inverse is a dense solve,
so numpy.linalg is the oracle for the triangular factorization and for the
Schur complement; the structural verifiers are then exercised on systems whose
identities hold (or are deliberately broken) by construction.
"""

import numpy as np
import pytest

from proca_workbench.blockops import (ADVANCED, RETARDED, GreenPair,
                                      LinearMap, NotInvertible,
                                      ResidualReport, StructureViolation,
                                      assemble_green, compose, identity_map,
                                      lu_green, schur_complement, sec_add,
                                      sec_neg, sec_sub, verify_constraint,
                                      verify_green, verify_intertwine)

N1, N2 = 4, 3


def _norm(sec):
    return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c in sec)))


def _mat_map(name, M, invertible=False):
    dom = (("vec", M.shape[1]),)
    cod = (("vec", M.shape[0]),)
    inv = None
    if invertible:
        Minv = np.linalg.inv(M)
        inv = lambda u: (Minv @ u[0],)
    return LinearMap(name, dom, cod, lambda u: (M @ u[0],), inverse=inv)


def _inverse_pair(name, M):
    gov = _mat_map(name, M)
    Minv = np.linalg.inv(M)
    ret = LinearMap("ret", gov.domain, gov.domain,
                    lambda u: (Minv @ u[0],), "future-directed")
    adv = LinearMap("adv", gov.domain, gov.domain,
                    lambda u: (Minv @ u[0],), "past-directed")
    return GreenPair(gov, ret, adv)


@pytest.fixture(scope="module")
def blocks():
    gen = np.random.default_rng(20260815)
    P = gen.normal(size=(N1, N1)) + 4.0 * np.eye(N1)
    R = gen.normal(size=(N1, N2))
    S = gen.normal(size=(N2, N1))
    T = gen.normal(size=(N2, N2)) + 3.0 * np.eye(N2)
    return P, R, S, T, gen


def test_section_arithmetic():
    a = (np.array([1.0, 2.0]), np.array([3.0]))
    b = (np.array([0.5, -1.0]), np.array([2.0]))
    s = sec_add(a, b)
    d = sec_sub(a, b)
    n = sec_neg(a)
    assert np.allclose(s[0], [1.5, 1.0]) and np.allclose(s[1], [5.0])
    assert np.allclose(d[0], [0.5, 3.0]) and np.allclose(d[1], [1.0])
    assert np.allclose(n[0], [-1.0, -2.0])


def test_compose_and_identity(blocks):
    P, R, S, T, gen = blocks
    A = _mat_map("A", S)           # N1 -> N2
    B = _mat_map("B", P)           # N1 -> N1
    AB = compose("AB", A, B)
    v = (gen.normal(size=N1),)
    assert np.allclose(AB.apply(v)[0], S @ (P @ v[0]))
    ident = identity_map(A.domain)
    assert ident.apply(v) is v
    ret = LinearMap("r", A.domain, A.domain, lambda u: u, "future-directed")
    assert compose("c", A, ret).support_action == "future-directed"


def test_schur_complement_matches_dense(blocks):
    P, R, S, T, gen = blocks
    W = schur_complement(_mat_map("P", P, invertible=True),
                         _mat_map("R", R), _mat_map("S", S), _mat_map("T", T))
    dense = T - S @ np.linalg.inv(P) @ R
    for _ in range(5):
        b = gen.normal(size=N2)
        assert np.allclose(W.apply((b,))[0], dense @ b, atol=1e-12)


def test_schur_requires_attached_inverse(blocks):
    P, R, S, T, _ = blocks
    with pytest.raises(NotInvertible):
        schur_complement(_mat_map("P", P), _mat_map("R", R),
                         _mat_map("S", S), _mat_map("T", T))
    with pytest.raises(NotInvertible):
        lu_green(_mat_map("P", P), _mat_map("R", R), _mat_map("S", S),
                 _mat_map("T", T), _inverse_pair("W", T))


def test_lu_green_matches_dense_solve(blocks):
    P, R, S, T, gen = blocks
    dense_W = T - S @ np.linalg.inv(P) @ R
    E_Q = lu_green(_mat_map("P", P, invertible=True), _mat_map("R", R),
                   _mat_map("S", S), _mat_map("T", T),
                   _inverse_pair("W", dense_W))
    Q_full = np.block([[P, R], [S, T]])
    for orientation in (RETARDED, ADVANCED):
        for _ in range(5):
            b = (gen.normal(size=N1), gen.normal(size=N2))
            u = E_Q.pick(orientation).apply(b)
            oracle = np.linalg.solve(Q_full, np.concatenate(b))
            assert np.allclose(np.concatenate(u), oracle, atol=1e-10)
    # and the stored governing operator is the block matrix itself
    b = (gen.normal(size=N1), gen.normal(size=N2))
    assert np.allclose(np.concatenate(E_Q.governed_by.apply(b)),
                       Q_full @ np.concatenate(b), atol=1e-12)


def test_verify_green_report(blocks):
    P, R, S, T, gen = blocks
    dense_W = T - S @ np.linalg.inv(P) @ R
    E_Q = lu_green(_mat_map("P", P, invertible=True), _mat_map("R", R),
                   _mat_map("S", S), _mat_map("T", T),
                   _inverse_pair("W", dense_W))
    sources = [(gen.normal(size=N1), gen.normal(size=N2)) for _ in range(3)]
    rep = verify_green(E_Q, sources, _norm, 1e-10)
    assert rep.all_passed and len(rep.entries) == 12
    assert rep.worst < 1e-10
    blob = rep.to_jsonable()
    assert blob["all_passed"] and len(blob["entries"]) == 12


def test_verify_green_flags_wrong_inverse(blocks):
    P, R, S, T, gen = blocks
    wrong = _inverse_pair("P", P + 0.1)   # inverse of a perturbed operator
    pair = GreenPair(_mat_map("P", P), wrong.retarded, wrong.advanced)
    rep = verify_green(pair, [(gen.normal(size=N1),)], _norm, 1e-10)
    assert not rep.all_passed
    assert rep.worst > 1e-3


def _embedding_system(P, T):
    """Block-diagonal extension with D = (0, id), pi = second block."""
    z1 = np.zeros((N1, N2))
    z2 = np.zeros((N2, N1))
    E_Q = lu_green(_mat_map("P", P, invertible=True), _mat_map("R", z1),
                   _mat_map("S", z2), _mat_map("T", T),
                   _inverse_pair("W", T))
    slots2 = (("vec", N2),)
    full = E_Q.governed_by.domain
    D = LinearMap("D", slots2, full,
                  lambda u: (np.zeros(N1), u[0]))
    pi = LinearMap("pi", full, slots2, lambda u: (u[1],))
    return E_Q, D, pi, slots2, full


def test_assemble_green_reduces(blocks):
    P, R, S, T, gen = blocks
    E_Q, D, pi, slots2, _ = _embedding_system(P, T)
    probes = [(gen.normal(size=N2),) for _ in range(2)]
    E_P = assemble_green(pi, D, E_Q, probes=probes, norm=_norm,
                         tolerance=1e-14)
    rep = verify_green(E_P, probes, _norm, 1e-10)
    assert rep.all_passed
    # reduced governing operator is exactly T
    b = probes[0]
    assert np.allclose(E_P.governed_by.apply(b)[0], T @ b[0], atol=1e-12)


def test_assemble_green_rejects_broken_projection(blocks):
    P, R, S, T, gen = blocks
    E_Q, D, pi, slots2, full = _embedding_system(P, T)
    leaky = LinearMap("leaky-pi", full, slots2,
                      lambda u: (u[1] + 0.01 * (S @ u[0]),))
    bad_D = LinearMap("bad-D", slots2, full,
                      lambda u: (np.linalg.solve(P, R @ u[0]), u[0]))
    with pytest.raises(StructureViolation):
        assemble_green(leaky, bad_D, E_Q,
                       probes=[(gen.normal(size=N2),)], norm=_norm,
                       tolerance=1e-12)


def test_verify_constraint_and_intertwine(blocks):
    P, R, S, T, gen = blocks
    E_Q, D, pi, slots2, full = _embedding_system(P, T)
    E_P = assemble_green(pi, D, E_Q, norm=_norm)
    # constraint C picks the auxiliary block; on the block-diagonal system
    # C . E_Q . D vanishes identically and C intertwines with N = P
    C = LinearMap("C", full, (("vec", N1),), lambda u: (u[0],))
    sources = [(gen.normal(size=N2),) for _ in range(2)]
    rep_c = verify_constraint(C, E_Q, D, sources, _norm, 1e-14)
    assert rep_c.all_passed
    E_N = _inverse_pair("N", P)
    rep_i = verify_intertwine(D, C, E_P, E_Q, sources, _norm, 1e-12,
                              E_N=E_N)
    assert rep_i.all_passed and len(rep_i.entries) == 8


def test_green_pair_pick_and_causal(blocks):
    P, R, S, T, gen = blocks
    pair = _inverse_pair("P", P)
    with pytest.raises(ValueError):
        pair.pick("sideways")
    two = _mat_map("two", 2.0 * np.eye(N1))
    half = _mat_map("half", 0.5 * np.eye(N1))
    diff = GreenPair(_mat_map("g", np.eye(N1)), two, half).causal()
    v = (gen.normal(size=N1),)
    assert np.allclose(diff.apply(v)[0], -1.5 * v[0])


def test_residual_report_bookkeeping():
    rep = ResidualReport("demo")
    rep.add("ok", 1e-12, 1e-10)
    assert rep.all_passed and rep.worst == 1e-12
    rep.add("bad", 2e-3, 1e-10)
    assert not rep.all_passed and rep.worst == 2e-3
    text = rep.to_json()
    assert '"all_passed": false' in text
