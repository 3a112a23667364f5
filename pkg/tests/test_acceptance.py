"""Acceptance suite: one test per top-level claim, pinned tolerances.

Each test prints a single PASS/FAIL line (visible with -v via the assert
message on failure, or with -s) and asserts the stated bound.  Geometries are
frozen; every numeric tolerance below is the contract, not a measurement.
"""

import time

import numpy as np
import pytest

from proca_workbench.blockops import (ADVANCED, RETARDED, GreenPair, LinearMap,
                                      sec_sub)
from proca_workbench.detector import (DetectorConfig, DetectorPipeline,
                                      ModeProfile, PolarizationQubit,
                                      beam_axis_direction, build_state,
                                      displaced_form_factor, malus_sweep,
                                      scalar_comparison)
from proca_workbench.exact_checks import run_all_suites
from proca_workbench.fock import (ModeGrid, ModeState, expectation_quadratic,
                                  fock_oracle)
from proca_workbench.lattice import (Grid, GridCalculus, GridGauge,
                                     band_limited_source, born_pair,
                                     bump_source, charged_green_pair,
                                     g3_violation, interior_fields,
                                     kg_green_pair, proca_green,
                                     proca_green_pair, section_norm,
                                     wedge_fields)

from oracles import loglog_slope


def _line(name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print("[%s] %s: %s" % (status, name, detail))
    assert ok, "%s: %s" % (name, detail)


# ---------------------------------------------------------------------------
# 1. symbolic identity suites, exact zero, >= 50 trials, < 2 min
# ---------------------------------------------------------------------------

def test_criterion_1_symbolic_suites():
    t0 = time.perf_counter()
    suites = run_all_suites(seed=0, trials=50)
    wall = time.perf_counter() - t0
    bad = [r.identity_name for rep in suites for r in rep.results
           if not r.passed]
    n = sum(len(rep.results) for rep in suites)
    _line("criterion 1", not bad and wall < 120.0,
          "%d identities exact over 50 seeded sections each in %.1fs%s"
          % (n, wall, "" if not bad else "; FAILED: %s" % ", ".join(bad)))


# ---------------------------------------------------------------------------
# 2. neutral vector Green operators on the N=16, Nt=400 grid
# ---------------------------------------------------------------------------

def test_criterion_2_neutral_green_axioms():
    t0 = time.perf_counter()
    grid = Grid(L=10.0, N=16, T=8.0, Nt=400)
    calc = GridCalculus(grid)
    m = 1.0
    J = band_limited_source(grid, 1, (2.4, 4.8), 3, seed=2)
    pair = proca_green_pair(grid, m)
    ref = J.norm_l2()
    worst_g12 = 0.0
    worst_constraint = 0.0
    worst_g3 = 0.0
    dJ = calc.codiff(J)
    for orientation in (RETARDED, ADVANCED):
        W = proca_green(grid, m, orientation, J)
        g1 = (pair.governed_by.apply((W,))[0] - J).norm_l2() / ref
        g2 = (pair.pick(orientation).apply(
            pair.governed_by.apply((J,)))[0] - J).norm_l2() / ref
        worst_g12 = max(worst_g12, g1, g2)
        worst_constraint = max(worst_constraint,
                               (calc.codiff(W).scale(m * m) - dJ).norm_l2()
                               / dJ.norm_l2())
        worst_g3 = max(worst_g3, g3_violation(W, J, orientation))

    # refinement slope under time-step halving (same source, Nt -> 200)
    coarse = Grid(L=10.0, N=16, T=8.0, Nt=200)
    Jc = band_limited_source(coarse, 1, (2.4, 4.8), 3, seed=2)
    pc = proca_green_pair(coarse, m)
    Wc = proca_green(coarse, m, ADVANCED, Jc)
    g1c = (pc.governed_by.apply((Wc,))[0] - Jc).norm_l2() / Jc.norm_l2()
    g1f = (pair.governed_by.apply(
        (proca_green(grid, m, ADVANCED, J),))[0] - J).norm_l2() / ref
    slope = np.log2(g1c / g1f) / np.log2((coarse.dt / grid.dt))
    wall = time.perf_counter() - t0
    ok = (worst_g12 < 1e-6 and worst_constraint < 1e-6 and worst_g3 < 1e-10
          and slope >= 3.5 and wall < 300.0)
    _line("criterion 2", ok,
          "G1/G2 %.2e (<1e-6), constraint %.2e (<1e-6), leakage %.2e "
          "(<1e-10), halving slope %.2f (>=3.5), %.0fs (<300)"
          % (worst_g12, worst_constraint, worst_g3, slope, wall))


# ---------------------------------------------------------------------------
# 3. Born-series order: coupling-strength slopes equal order+1
# ---------------------------------------------------------------------------

def _vector_scalar_slope(order):
    grid = Grid(L=10.0, N=12, T=8.0, Nt=240)
    v = bump_source(grid, 1, (2.0, 5.0), (5.0, 5.0, 5.0), 2.6)
    src = (band_limited_source(grid, 1, (2.4, 4.6), 3, seed=11),
           band_limited_source(grid, 0, (2.4, 4.6), 3, seed=12))
    ref = section_norm(src)
    pair_w = proca_green_pair(grid, 1.0)
    pair_p = kg_green_pair(grid, 0.7, 0)
    slots = (("form", 1), ("form", 0))
    gov = LinearMap("free", slots, slots, lambda u: (
        pair_w.governed_by.apply((u[0],))[0],
        pair_p.governed_by.apply((u[1],))[0]))

    def emap(orient):
        return LinearMap("E0[%s]" % orient, slots, slots, lambda u: (
            pair_w.pick(orient).apply((u[0],))[0],
            pair_p.pick(orient).apply((u[1],))[0]),
            "future-directed" if orient == RETARDED else "past-directed")

    E0 = GreenPair(gov, emap(RETARDED), emap(ADVANCED))
    lams = np.geomspace(0.08, 0.4, 4)
    res = []
    for lam in lams:
        V = LinearMap("coupling", slots, slots, lambda u, s=lam: (
            wedge_fields(v, u[1]).scale(s),
            interior_fields(v, u[0]).scale(s)))
        E = born_pair(E0, V, order)
        u = E.pick(ADVANCED).apply(src)
        res.append(section_norm(sec_sub(E.governed_by.apply(u), src)) / ref)
    return loglog_slope(lams, res)


def test_criterion_3_vector_scalar_coupling_slopes():
    slopes = {order: _vector_scalar_slope(order) for order in (1, 2)}
    ok = all(abs(slopes[o] - (o + 1)) <= 0.2 for o in slopes)
    _line("criterion 3 (vector-scalar)", ok,
          "residual slope in coupling: order1 %.3f (2+-0.2), order2 %.3f "
          "(3+-0.2)" % (slopes[1], slopes[2]))


@pytest.mark.parametrize("kappa", [0.0, 1.0, 2.22])
def test_criterion_3_charged_charge_slopes(kappa):
    grid = Grid(L=10.0, N=12, T=8.0, Nt=200)
    calc = GridCalculus(grid)
    # the background stays inside the resolved mode band so that every product
    # in the Born recursion is represented exactly (no aliasing floor)
    A = band_limited_source(grid, 1, (2.0, 5.0), 1, seed=7).scale(0.12)
    J = band_limited_source(grid, 1, (2.4, 4.6), 1, seed=13,
                            complex_valued=True)
    ref = section_norm((J,))
    qs = np.geomspace(0.02, 0.1, 4)
    slopes = {}
    for order in (1, 2):
        res = []
        for q in qs:
            E_P, _ = charged_green_pair(grid, GridGauge(calc, q, A), 1.0,
                                        kappa, order)
            u = E_P.pick(ADVANCED).apply((J,))
            res.append(section_norm(
                sec_sub(E_P.governed_by.apply(u), (J,))) / ref)
        slopes[order] = loglog_slope(qs, res)
    ok = all(abs(slopes[o] - (o + 1)) <= 0.2 for o in slopes)
    _line("criterion 3 (charged, kappa=%g)" % kappa, ok,
          "residual slope in charge: order1 %.3f (2+-0.2), order2 %.3f "
          "(3+-0.2)" % (slopes[1], slopes[2]))


# ---------------------------------------------------------------------------
# 4. closed-form quadratic expectation == truncated-Fock brute force
# ---------------------------------------------------------------------------

def test_criterion_4_fock_oracle_equivalence():
    grid = Grid(L=6.0, N=4, T=4.0, Nt=48, pad_cells=4)
    modes = ModeGrid(grid)
    gen = np.random.default_rng(4)
    pts = [(i, j, k) for i in range(4) for j in range(4) for k in range(4)]

    def rand_state(points):
        vals = np.zeros((4, 4, 4, 4), dtype=complex)
        for pt in points:
            for comp in (1, 2, 3):
                vals[(comp,) + pt] = complex(gen.normal(), gen.normal())
        return ModeState(modes, vals, 1.0)

    worst = 0.0
    cases = 0
    for n in range(4):            # photon numbers 0..3
        for nmodes in (1, 2, 3):  # populated-mode counts
            for _ in range(3):
                sel = gen.choice(len(pts), size=nmodes, replace=False)
                points = [pts[int(i)] for i in sel]
                S = rand_state(points)
                h = rand_state(points)
                worst = max(worst, abs(expectation_quadratic(S, n, h)
                                       - fock_oracle(S, n, h)))
                cases += 1
    _line("criterion 4", worst < 1e-10,
          "%d instances (n<=3, modes<=3), worst |closed-brute| %.2e (<1e-10)"
          % (cases, worst))


# ---------------------------------------------------------------------------
# 5. the polarization law: cos^2 fit, recovered axis, circular flatness
# ---------------------------------------------------------------------------

_MALUS_GRID = Grid(L=10.0, N=16, T=8.0, Nt=320)


def _malus_config():
    return DetectorConfig(grid=_MALUS_GRID, mass_vector=1.0, mass_probe=0.6,
                          coupling=0.1, photons=1, born_order=2)


def _malus_profile(alpha_max=0.1, halfwidth=0.5):
    return ModeProfile(carrier=_MALUS_GRID.axis_modes[4], alpha_max=alpha_max,
                       radial_halfwidth=halfwidth)


def test_criterion_5_malus_law():
    t0 = time.perf_counter()
    cfg = _malus_config()
    prof = _malus_profile()
    worst_res = 0.0
    worst_deta = 0.0
    for eta in (0.0, np.pi / 6, np.pi / 3):
        rep = malus_sweep(cfg, PolarizationQubit.linear(eta), prof, 16)
        worst_res = max(worst_res, rep.fit_residual)
        worst_deta = max(worst_deta, abs(rep.fit_eta - eta))
    circ = malus_sweep(cfg, PolarizationQubit.circular(), prof, 16)
    spread_bound = np.tan(prof.alpha_max) ** 2
    wall = time.perf_counter() - t0
    ok = (worst_res < 0.01 and worst_deta < 0.01
          and circ.response_spread <= spread_bound and wall < 600.0)
    _line("criterion 5", ok,
          "fit residual %.2e (<1e-2), |eta_hat - eta| %.2e (<0.01 rad), "
          "circular spread %.2e (<= tan^2 alpha = %.2e), %.0fs (<600)"
          % (worst_res, worst_deta, circ.response_spread, spread_bound, wall))


# ---------------------------------------------------------------------------
# 6. collimation bound for the beam normalization
# ---------------------------------------------------------------------------

def test_criterion_6_collimation_bound():
    modes = ModeGrid(_MALUS_GRID)
    gen = np.random.default_rng(6)
    worst_low = np.inf
    worst_high = np.inf
    for alpha_max in (0.05, 0.1, 0.3):
        prof = _malus_profile(alpha_max=alpha_max, halfwidth=1.2)
        for _ in range(20):
            z = gen.normal(size=4)
            sigma = PolarizationQubit(complex(z[0], z[1]), complex(z[2], z[3]))
            _, _, collim = build_state(prof, sigma, modes, 1.0)
            worst_low = min(worst_low, collim - 1.0)
            worst_high = min(worst_high,
                             1.0 / np.cos(alpha_max) ** 2 - collim)
    ok = worst_low >= -1e-10 and worst_high >= -1e-10
    _line("criterion 6", ok,
          "60 random states: min(collim - 1) = %.2e, min(sec^2 - collim) = "
          "%.2e (both >= -1e-10)" % (worst_low, worst_high))


# ---------------------------------------------------------------------------
# 7. coupling-order of the full response against its leading term
# ---------------------------------------------------------------------------

def test_criterion_7_response_coupling_order():
    grid = Grid(L=10.0, N=12, T=8.0, Nt=240)
    cfg = DetectorConfig(grid=grid, mass_vector=1.0, mass_probe=0.6,
                         coupling=0.1, photons=1, born_order=2)
    pipe = DetectorPipeline(cfg)
    sigma = PolarizationQubit.linear(np.pi / 6)
    prof = ModeProfile(carrier=grid.axis_modes[3], alpha_max=0.1,
                       radial_halfwidth=0.5)
    lams = np.geomspace(1e-3, 1e-2, 5)
    diffs = []
    for lam in lams:
        rep = pipe.report(sigma, prof, theta=0.4, coupling=lam)
        diffs.append(abs(rep.response - rep.leading_response))
    slope = loglog_slope(lams, diffs)
    _line("criterion 7", abs(slope - 4.0) <= 0.2,
          "log-log slope of |R - R_leading| over coupling in [1e-3, 1e-2]: "
          "%.3f (4 +- 0.2)" % slope)


# ---------------------------------------------------------------------------
# 8. displaced-window overlap asymptotics
# ---------------------------------------------------------------------------

_DISP_GRID = Grid(L=10.0, N=16, T=8.0, Nt=320)
_DISP_MASS = _DISP_GRID.axis_modes[6]  # resonant: carrier == both masses


def _disp_config():
    return DetectorConfig(grid=_DISP_GRID, mass_vector=_DISP_MASS,
                          mass_probe=_DISP_MASS, coupling=0.1,
                          rho_radius=2.4, f_radius=2.4)


def test_criterion_8_displacement_asymptotics():
    cfg = _disp_config()
    along_prof = ModeProfile(carrier=_DISP_MASS, alpha_max=0.5,
                             radial_halfwidth=2.5, radial_sigma=1.6,
                             angular_sigma=0.25)
    e_beam = beam_axis_direction(cfg, along_prof)
    rep_a = displaced_form_factor(cfg, along_prof, e_beam,
                                  np.geomspace(25.0, 250.0, 7), refine=190)
    slope = rep_a.slope

    trans_prof = ModeProfile(carrier=_DISP_MASS, alpha_max=0.6,
                             radial_halfwidth=2.9, radial_sigma=0.8,
                             angular_sigma=0.15)
    deltas = np.array([3.0, 6.0, 12.0, 24.0, 30.0])
    rep_t = displaced_form_factor(cfg, trans_prof,
                                  np.array([0.0, 1.0, 0.0, 0.0]), deltas,
                                  refine=128)
    weighted = np.abs(np.asarray(rep_t.values)) * deltas ** 4
    monotone = bool(np.all(np.diff(weighted) < 0.0))
    ok = abs(slope + 1.5) <= 0.15 and monotone
    _line("criterion 8", ok,
          "along-beam slope %.3f (-1.5 +- 0.15) over delta in [25, 250]; "
          "transverse delta^4|A| %s over [3, 30]"
          % (slope, "strictly decreasing" if monotone else
             "NOT monotone: %s" % weighted.tolist()))


# ---------------------------------------------------------------------------
# 9. leading-order factorization against the independent scalar pipeline
# ---------------------------------------------------------------------------

def test_criterion_9_scalar_comparison():
    cfg = DetectorConfig(grid=_MALUS_GRID, mass_vector=1.0, mass_probe=0.6,
                         coupling=0.1, photons=1, theta=0.7, born_order=1)
    prof = _malus_profile(alpha_max=0.9, halfwidth=1.2)
    lhs_formula, scalar_full = scalar_comparison(cfg, prof)
    pipe = DetectorPipeline(cfg)
    sigma = PolarizationQubit.linear(np.pi / 5)
    rep = pipe.report(sigma, prof)
    modulation = sigma.modulation(cfg.theta)
    lhs_response = rep.response * rep.collimation_sq / modulation
    rel_resp = abs(lhs_response - scalar_full) / abs(scalar_full)
    rel_form = abs(lhs_formula - scalar_full) / abs(scalar_full)
    ok = rel_resp < 1e-4 and rel_form < 1e-4
    _line("criterion 9", ok,
          "response/(n |sigma.theta|^2 ||s eps||^-2) vs scalar pipeline: "
          "rel %.2e; closed form vs scalar: rel %.2e (both < 1e-4; "
          "single-quantum bookkeeping)" % (rel_resp, rel_form))
