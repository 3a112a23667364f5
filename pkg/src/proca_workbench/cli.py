"""Configuration-driven command-line runner for the workbench.

Subcommands
    identities   exact symbolic identity and block-structure suites
    green        lattice Green-operator axioms for the wave-type systems
    malus        polarization-response sweep with the cosine-squared fit
    displace     displaced-overlap decay table
    oracle       quadratic-observable closed form vs. brute-force Fock check

Each command reads an optional config file (INI-style sections or a JSON
object of sections), applies command-line overrides, validates, runs, writes
CSV/JSON artifacts into the output directory, and exits with
    0   all checks passed
    1   usage or configuration error
    2   a verification check failed
    3   internal error
Identical configuration and seed produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import json
import os
import sys
import traceback
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import reports
from .blockops import ADVANCED, ORIENTATIONS, ResidualReport
from .detector import (DetectorConfig, MalusReport, ModeProfile,
                       PolarizationQubit, beam_axis_direction,
                       displaced_form_factor, malus_sweep)
from .exact_checks import (IdentityReport, IdentityResult, _run_trials,
                           rand_background, rand_form, run_all_suites)
from .fock import ModeGrid, ModeState, expectation_quadratic, fock_oracle
from .lattice import (Grid, GridCalculus, band_limited_source, g3_violation,
                      kg_green_pair, probe_sources, proca_green_pair,
                      section_norm)


class ConfigError(ValueError):
    """Unusable configuration or command line (exit code 1)."""


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

def _parse_floats(text: str, count: int) -> Tuple[float, ...]:
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if len(parts) != count:
        raise ConfigError("expected %d comma-separated numbers, got %r"
                          % (count, text))
    return tuple(float(p) for p in parts)


def _opt_float(text) -> Optional[float]:
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


_SCHEMA: Dict[str, Dict[str, Callable]] = {
    "grid": {"L": float, "N": int, "T": float, "Nt": int},
    "system": {"tag": str},
    "physics": {"mass_vector": float, "mass_probe": float, "coupling": float,
                "theta": float, "photons": int},
    "beam": {"carrier": float, "alpha_max": float, "radial_halfwidth": float,
             "radial_sigma": _opt_float, "angular_sigma": _opt_float,
             "sigma": str},
    "scatterer": {"center": lambda s: _parse_floats(s, 3), "radius": float,
                  "t0": float, "t1": float},
    "probe": {"center": lambda s: _parse_floats(s, 3), "radius": float,
              "t0": float, "t1": float, "amplitude": float},
    "run": {"suite": str, "seed": int, "out": str, "trials": int,
            "sources": int, "source_kind": str, "max_mode": int,
            "tolerance": _opt_float, "g3_tolerance": float,
            "born_order": int, "theta_samples": int, "workers": int},
    "displace": {"direction": str, "delta_min": float, "delta_max": float,
                 "delta_count": int, "refine": int},
    "oracle": {"photon_max": int, "mode_budget": int, "instances": int},
}

_DEFAULTS: Dict[str, Dict[str, object]] = {
    "grid": {"L": 10.0, "N": 12, "T": 8.0, "Nt": 400},
    "system": {"tag": "neutral"},
    "physics": {"mass_vector": 1.0, "mass_probe": 0.6, "coupling": 0.1,
                "theta": 0.0, "photons": 1},
    # carrier defaults to the third axis mode of the default box (2*pi*3/L)
    "beam": {"carrier": 1.8849555921538759, "alpha_max": 0.1,
             "radial_halfwidth": 0.5, "radial_sigma": None,
             "angular_sigma": None, "sigma": "linear:0"},
    "scatterer": {"center": (5.0, 5.0, 5.0), "radius": 2.8,
                  "t0": 1.2, "t1": 4.0},
    "probe": {"center": (5.0, 5.0, 5.0), "radius": 2.8,
              "t0": 4.4, "t1": 6.8, "amplitude": 1.0},
    "run": {"suite": "", "seed": 0, "out": "", "trials": 50, "sources": 3,
            "source_kind": "band", "max_mode": 3,
            "tolerance": None, "g3_tolerance": 1e-10, "born_order": 1,
            "theta_samples": 16, "workers": 1},
    "displace": {"direction": "beam", "delta_min": 0.5, "delta_max": 2.0,
                 "delta_count": 4, "refine": 1},
    "oracle": {"photon_max": 3, "mode_budget": 3, "instances": 2},
}


class RunConfig:
    """Resolved configuration: defaults, then file values, then flag overrides."""

    def __init__(self, values: Dict[str, Dict[str, object]]):
        self.values = values

    def __getitem__(self, section: str) -> Dict[str, object]:
        return self.values[section]

    def echo(self) -> Dict[str, object]:
        """Flat 'section.key' mapping for embedding into every artifact."""
        flat: Dict[str, object] = {}
        for sect in sorted(self.values):
            for key in sorted(self.values[sect]):
                flat["%s.%s" % (sect, key)] = reports.jsonable(
                    self.values[sect][key])
        return flat


def _coerce(section: str, key: str, raw) -> object:
    try:
        conv = _SCHEMA[section][key]
    except KeyError:
        raise ConfigError("unknown config key [%s] %s" % (section, key))
    if conv in (float, int) and not isinstance(raw, str):
        return conv(raw)
    try:
        return conv(raw) if isinstance(raw, str) else conv(str(raw))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad value for [%s] %s: %s" % (section, key, exc))


def load_config(path: Optional[str]) -> RunConfig:
    values = copy.deepcopy(_DEFAULTS)
    if path is None:
        return RunConfig(values)
    if not os.path.exists(path):
        raise ConfigError("config file not found: %s" % path)
    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            if not isinstance(doc, dict):
                raise ConfigError("JSON config must be an object of sections")
            items = [(s, k, v) for s, block in doc.items()
                     for k, v in dict(block).items()]
        else:
            parser = configparser.ConfigParser(interpolation=None)
            parser.read(path, encoding="utf-8")
            items = [(s, k, parser.get(s, k)) for s in parser.sections()
                     for k in parser[s]]
    except (configparser.Error, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError("cannot parse config %s: %s" % (path, exc))
    for section, key, raw in items:
        if section not in values:
            raise ConfigError("unknown config section [%s]" % section)
        values[section][key] = _coerce(section, key, raw)
    return RunConfig(values)


# ---------------------------------------------------------------------------
# typed builders
# ---------------------------------------------------------------------------

def _build_grid(cfg: RunConfig) -> Grid:
    g = cfg["grid"]
    try:
        return Grid(L=g["L"], N=g["N"], T=g["T"], Nt=g["Nt"])
    except ValueError as exc:
        raise ConfigError("bad grid: %s" % exc)


def _build_detector_config(cfg: RunConfig, born_order: Optional[int] = None
                           ) -> DetectorConfig:
    p, sc, pr = cfg["physics"], cfg["scatterer"], cfg["probe"]
    try:
        return DetectorConfig(
            grid=_build_grid(cfg),
            mass_vector=p["mass_vector"], mass_probe=p["mass_probe"],
            coupling=p["coupling"], theta=p["theta"], photons=p["photons"],
            born_order=born_order if born_order is not None
            else cfg["run"]["born_order"],
            rho_center=tuple(sc["center"]), rho_radius=sc["radius"],
            rho_span=(sc["t0"], sc["t1"]),
            f_center=tuple(pr["center"]), f_radius=pr["radius"],
            f_span=(pr["t0"], pr["t1"]), f_amplitude=pr["amplitude"])
    except ValueError as exc:
        raise ConfigError("bad detector configuration: %s" % exc)


def _build_profile(cfg: RunConfig) -> ModeProfile:
    b = cfg["beam"]
    try:
        return ModeProfile(carrier=b["carrier"], alpha_max=b["alpha_max"],
                           radial_halfwidth=b["radial_halfwidth"],
                           radial_sigma=b["radial_sigma"],
                           angular_sigma=b["angular_sigma"])
    except ValueError as exc:
        raise ConfigError("bad beam profile: %s" % exc)


def _build_sigma(spec: str) -> PolarizationQubit:
    text = str(spec).strip().lower()
    try:
        if text.startswith("linear"):
            _, _, arg = text.partition(":")
            return PolarizationQubit.linear(float(arg) if arg else 0.0)
        if text.startswith("circular"):
            _, _, arg = text.partition(":")
            return PolarizationQubit.circular(int(arg) if arg else +1)
        sx_re, sx_im, sy_re, sy_im = _parse_floats(text, 4)
        return PolarizationQubit(complex(sx_re, sx_im), complex(sy_re, sy_im))
    except (ValueError, ConfigError) as exc:
        raise ConfigError(
            "bad polarization %r (use linear:<angle>, circular:<+1|-1>, or "
            "sx_re,sx_im,sy_re,sy_im): %s" % (spec, exc))


def _suite_tolerance(cfg: RunConfig, default: float) -> float:
    tol = cfg["run"]["tolerance"]
    return default if tol is None else float(tol)


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def _injected_defect_report(seed: int, trials: int) -> IdentityReport:
    """Deliberately sign-flipped square-of-the-derivative residual.

    Used as a harness self-test: the runner must detect and name the failing
    identity and exit with the verification-failure code.
    """
    results: List[IdentityResult] = []

    def flipped(rng):
        bg = rand_background(rng)
        w = rand_form(rng, rng.choice((0, 1, 2)))
        # wrong relative sign between the square and the curvature term
        return bg.d(bg.d(w)) + bg.curv_wedge(w).scale(bg.iq)

    _run_trials("injected-sign-defect(coupled-derivative-square-is-curvature)",
                trials, seed, flipped, results)
    return IdentityReport("injected-defect", seed, results)


def cmd_identities(cfg: RunConfig, out_dir: str, inject_defect: bool) -> int:
    trials = cfg["run"]["trials"]
    if trials < 1:
        raise ConfigError("run.trials must be >= 1, got %d" % trials)
    seed = cfg["run"]["seed"]
    suites = run_all_suites(seed=seed, trials=trials)
    if inject_defect:
        suites.append(_injected_defect_report(seed, min(trials, 5)))
    payload = {
        "schema_version": reports.SCHEMA_VERSION,
        "config": cfg.echo(),
        "suites": [rep.to_jsonable() for rep in suites],
        "all_passed": all(rep.all_passed for rep in suites),
    }
    reports.write_json(os.path.join(out_dir, "identities.json"), payload)
    failed: List[str] = []
    for rep in suites:
        for res in rep.results:
            mark = "exact" if res.passed else "FAILED"
            print("identities[%s] %-58s %s" % (rep.suite, res.identity_name, mark))
            if not res.passed:
                failed.append(res.identity_name)
    if failed:
        print("FAILED identities: %s" % ", ".join(failed))
        return 2
    print("identities: all suites exact over %d trials (seed %d)"
          % (trials, seed))
    return 0


# ---------------------------------------------------------------------------
# green
# ---------------------------------------------------------------------------

def cmd_green(cfg: RunConfig, out_dir: str) -> int:
    count = cfg["run"]["sources"]
    if count < 1:
        raise ConfigError("run.sources must be >= 1, got %d" % count)
    tag = cfg["system"]["tag"]
    if tag not in ("neutral", "scalar"):
        raise ConfigError("system.tag must be 'neutral' or 'scalar' for the "
                          "green suite, got %r" % tag)
    grid = _build_grid(cfg)
    seed = cfg["run"]["seed"]
    tol = _suite_tolerance(cfg, 1e-6)
    g3_tol = cfg["run"]["g3_tolerance"]
    mass = cfg["physics"]["mass_vector"]
    degree = 1 if tag == "neutral" else 0
    pair = (proca_green_pair(grid, mass) if tag == "neutral"
            else kg_green_pair(grid, mass, degree))
    kind = cfg["run"]["source_kind"]
    if kind == "band":
        # spatially band-limited probes isolate the time-quadrature error; the
        # causal-support check then constrains the time side of the cone
        span = (0.3 * grid.T, 0.6 * grid.T)
        sources = [(band_limited_source(grid, degree, span,
                                        cfg["run"]["max_mode"], seed=seed + j),)
                   for j in range(count)]
    elif kind == "bump":
        # compactly supported bumps: residuals include the spatial spectral
        # tail of non-band-limited data, so expect coarser figures
        sources = [(f,) for f in probe_sources(grid, degree, count, seed=seed)]
    else:
        raise ConfigError("run.source_kind must be 'band' or 'bump', got %r"
                          % kind)

    def g3_measure(u_sec, f_sec, orientation):
        return g3_violation(u_sec[0], f_sec[0], orientation)

    report = ResidualReport("green-axioms[%s]" % tag)
    calc = GridCalculus(grid)
    for j, src in enumerate(sources):
        ref = section_norm(src)
        for orientation in ORIENTATIONS:
            u = pair.pick(orientation).apply(src)
            report.add("G1[%s][src%d]" % (orientation, j),
                       section_norm(_sec_sub(pair.governed_by.apply(u), src)) / ref,
                       tol)
            report.add("G2[%s][src%d]" % (orientation, j),
                       section_norm(_sec_sub(
                           pair.pick(orientation).apply(
                               pair.governed_by.apply(src)), src)) / ref,
                       tol)
            report.add("G3[%s][src%d]" % (orientation, j),
                       g3_measure(u, src, orientation), g3_tol)
            if tag == "neutral":
                dJ = calc.codiff(src[0])
                r = calc.codiff(u[0]).scale(mass * mass) - dJ
                report.add("constraint[%s][src%d]" % (orientation, j),
                           r.norm_l2() / dJ.norm_l2(), tol)
    rows = [(e.label, e.value, e.tolerance, e.passed) for e in report.entries]
    reports.write_csv(os.path.join(out_dir, "green.csv"),
                      ("check", "residual", "tolerance", "passed"),
                      rows, preamble=cfg.echo())
    payload = {
        "schema_version": reports.SCHEMA_VERSION,
        "config": cfg.echo(),
        "report": report.to_jsonable(),
    }
    reports.write_json(os.path.join(out_dir, "green.json"), payload)
    for entry in report.entries:
        print("green %-28s %.3e (tol %.1e) %s"
              % (entry.label, entry.value, entry.tolerance,
                 "ok" if entry.passed else "FAILED"))
    if not report.all_passed:
        print("green: worst residual %.3e" % report.worst)
        return 2
    print("green: all %d checks passed, worst residual %.3e"
          % (len(report.entries), report.worst))
    return 0


def _sec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# malus
# ---------------------------------------------------------------------------

def _malus_payload(cfg: RunConfig, rep: MalusReport, flat_curve: bool) -> Dict:
    return {
        "schema_version": reports.SCHEMA_VERSION,
        "config": cfg.echo(),
        "report": {
            "response": rep.response,
            "floor": rep.floor,
            "form_factor": reports.jsonable(rep.form_factor),
            "collimation_sq": rep.collimation_sq,
            "leading_response": rep.leading_response,
            "theta": rep.theta,
            "coupling": rep.coupling,
            "photons": rep.photons,
            "born_order": rep.born_order,
            "thetas": reports.jsonable(rep.thetas),
            "responses": reports.jsonable(rep.responses),
            "leading_responses": reports.jsonable(rep.leading_responses),
            "fit_amplitude": rep.fit_amplitude,
            "fit_eta": rep.fit_eta,
            "fit_floor": rep.fit_floor,
            "fit_residual": rep.fit_residual,
            "response_spread": rep.response_spread,
            "flat_curve": flat_curve,
        },
    }


def cmd_malus(cfg: RunConfig, out_dir: str) -> int:
    dcfg = _build_detector_config(cfg)
    profile = _build_profile(cfg)
    sigma = _build_sigma(cfg["beam"]["sigma"])
    samples = cfg["run"]["theta_samples"]
    if samples < 8:
        raise ConfigError("run.theta_samples must be >= 8, got %d" % samples)
    tol = _suite_tolerance(cfg, 1e-2)
    try:
        rep = malus_sweep(dcfg, sigma, profile, samples)
    except ValueError as exc:
        raise ConfigError(str(exc))
    flat_curve = rep.fit_eta is None
    rows = [(th, r, rep.fit_residual)
            for th, r in zip(rep.thetas, rep.responses)]
    reports.write_csv(os.path.join(out_dir, "malus.csv"),
                      ("theta", "response", "fit_residual"),
                      rows, preamble=cfg.echo())
    reports.write_json(os.path.join(out_dir, "malus.json"),
                       _malus_payload(cfg, rep, flat_curve))
    if flat_curve:
        bound = np.tan(profile.alpha_max) ** 2
        print("malus: flat curve (no modulation direction); relative spread "
              "%.3e, collimation bound %.3e" % (rep.response_spread, bound))
        if rep.response_spread > bound + 1e-12:
            return 2
        return 0
    print("malus: fit eta %.6f rad, relative residual %.3e (tol %.1e), "
          "collimation %.6f"
          % (rep.fit_eta, rep.fit_residual, tol, rep.collimation_sq))
    if rep.fit_residual >= tol:
        return 2
    return 0


# ---------------------------------------------------------------------------
# displace
# ---------------------------------------------------------------------------

def _build_direction(cfg: RunConfig, dcfg: DetectorConfig,
                     profile: ModeProfile) -> np.ndarray:
    spec = str(cfg["displace"]["direction"]).strip().lower()
    if spec.startswith("beam"):
        _, _, arg = spec.partition(":")
        sign = int(arg) if arg else +1
        if sign not in (+1, -1):
            raise ConfigError("beam direction sign must be +1 or -1")
        return beam_axis_direction(dcfg, profile, sign=sign)
    return np.asarray(_parse_floats(spec, 4), dtype=float)


def cmd_displace(cfg: RunConfig, out_dir: str) -> int:
    dcfg = _build_detector_config(cfg)
    profile = _build_profile(cfg)
    d = cfg["displace"]
    if d["delta_min"] <= 0.0 or d["delta_max"] < d["delta_min"]:
        raise ConfigError("need 0 < delta_min <= delta_max")
    if d["delta_count"] < 2:
        raise ConfigError("displace.delta_count must be >= 2")
    deltas = np.concatenate([[0.0], np.geomspace(d["delta_min"], d["delta_max"],
                                                 d["delta_count"])])
    direction = _build_direction(cfg, dcfg, profile)
    try:
        rep = displaced_form_factor(dcfg, profile, direction, deltas,
                                    refine=d["refine"])
    except ValueError as exc:
        # covers PhaseAliasing and geometry mismatches: the configuration asks
        # for more than the requested quadrature resolves
        raise ConfigError(str(exc))
    rows = list(zip(rep.deltas, np.abs(np.asarray(rep.values))))
    reports.write_csv(os.path.join(out_dir, "displacement.csv"),
                      ("delta", "abs_overlap"), rows, preamble=cfg.echo())
    payload = {
        "schema_version": reports.SCHEMA_VERSION,
        "config": cfg.echo(),
        "report": {
            "deltas": reports.jsonable(rep.deltas),
            "values": reports.jsonable(rep.values),
            "direction": reports.jsonable(rep.direction),
            "causal_square": rep.causal_square,
            "refine": rep.refine,
            "loglog_slope": rep.slope,
        },
    }
    reports.write_json(os.path.join(out_dir, "displacement.json"), payload)
    slope = rep.slope
    print("displace: %d offsets, causal square %+.3f, log-log slope %s"
          % (len(rep.deltas), rep.causal_square,
             "n/a" if slope is None else "%.4f" % slope))
    return 0


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def _random_mode_state(rng: np.random.Generator, modes: ModeGrid,
                       points: Sequence[Tuple[int, int, int]],
                       mass: float) -> ModeState:
    vals = np.zeros((4,) + modes.kvecs.shape[1:], dtype=np.complex128)
    for pt in points:
        for comp in (1, 2, 3):  # spatial components only: positive norm
            vals[(comp,) + pt] = complex(rng.normal(), rng.normal())
    return ModeState(modes, vals, mass)


def cmd_oracle(cfg: RunConfig, out_dir: str) -> int:
    o = cfg["oracle"]
    if not 0 <= o["photon_max"] <= 3:
        raise ConfigError("oracle.photon_max must be in [0, 3]")
    if not 1 <= o["mode_budget"] <= 3:
        raise ConfigError("oracle.mode_budget must be in [1, 3]")
    if o["instances"] < 1:
        raise ConfigError("oracle.instances must be >= 1")
    tol = _suite_tolerance(cfg, 1e-10)
    seed = cfg["run"]["seed"]
    grid = Grid(L=6.0, N=4, T=4.0, Nt=48, pad_cells=4)
    modes = ModeGrid(grid)
    mass = cfg["physics"]["mass_vector"]
    rng = np.random.default_rng(seed)
    all_points = [(i, j, k) for i in range(grid.N) for j in range(grid.N)
                  for k in range(grid.N)]
    rows = []
    worst = 0.0
    instance = 0
    for rep_idx in range(o["instances"]):
        for n in range(o["photon_max"] + 1):
            for nmodes in range(1, o["mode_budget"] + 1):
                pick = rng.choice(len(all_points), size=nmodes, replace=False)
                points = [all_points[int(i)] for i in pick]
                S = _random_mode_state(rng, modes, points, mass)
                h = _random_mode_state(rng, modes, points, mass)
                closed = expectation_quadratic(S, n, h)
                brute = fock_oracle(S, n, h)
                diff = abs(closed - brute)
                worst = max(worst, diff)
                rows.append((instance, n, nmodes, closed, brute, diff))
                instance += 1
    reports.write_csv(os.path.join(out_dir, "oracle.csv"),
                      ("instance", "photons", "modes", "closed_form",
                       "brute_force", "abs_diff"),
                      rows, preamble=cfg.echo())
    payload = {
        "schema_version": reports.SCHEMA_VERSION,
        "config": cfg.echo(),
        "report": {"instances": instance, "worst_abs_diff": worst,
                   "tolerance": tol, "passed": bool(worst < tol)},
    }
    reports.write_json(os.path.join(out_dir, "oracle.json"), payload)
    print("oracle: %d instances, worst |closed - brute| = %.3e (tol %.1e)"
          % (instance, worst, tol))
    return 0 if worst < tol else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are exit-code-1 config errors
        raise ConfigError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH",
                     help="INI-style or JSON config file")
    sub.add_argument("--seed", type=int, metavar="INT",
                     help="override run.seed")
    sub.add_argument("--out", metavar="DIR",
                     help="output directory (fallback: $PROCA_WORKBENCH_OUT, "
                          "then run.out, then ./runs)")
    sub.add_argument("--workers", type=int, metavar="INT",
                     help="worker-count hint recorded in the config echo and "
                          "delegated to the numeric backend")
    sub.add_argument("--tolerance", type=float, metavar="FLOAT",
                     help="override the suite's pass/fail tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proca-workbench",
                     description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command")
    sub_identities = subs.add_parser(
        "identities", help="run the exact symbolic suites")
    sub_identities.add_argument(
        "--inject-sign-defect", action="store_true",
        help="append a deliberately sign-flipped identity (harness self-test; "
             "forces a verification failure)")
    for name, helptext in (
            ("green", "verify the lattice Green-operator axioms"),
            ("malus", "run the polarization-response sweep and fit"),
            ("displace", "tabulate the displaced-overlap decay"),
            ("oracle", "closed form vs. brute-force Fock expectation")):
        subs.add_parser(name, help=helptext)
    for sub in subs.choices.values():
        _add_common(sub)
    return parser


def _resolve(args: argparse.Namespace) -> Tuple[RunConfig, str]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["run"]["seed"] = int(args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg["run"]["workers"] = int(args.workers)
    if args.tolerance is not None:
        if args.tolerance <= 0.0:
            raise ConfigError("--tolerance must be positive")
        cfg["run"]["tolerance"] = float(args.tolerance)
    out_dir = (args.out or os.environ.get("PROCA_WORKBENCH_OUT")
               or cfg["run"]["out"] or "runs")
    cfg["run"]["out"] = out_dir
    return cfg, out_dir


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("a subcommand is required "
                              "(identities|green|malus|displace|oracle)")
        cfg, out_dir = _resolve(args)
        if args.command == "identities":
            return cmd_identities(cfg, out_dir, args.inject_sign_defect)
        if args.command == "green":
            return cmd_green(cfg, out_dir)
        if args.command == "malus":
            return cmd_malus(cfg, out_dir)
        if args.command == "displace":
            return cmd_displace(cfg, out_dir)
        if args.command == "oracle":
            return cmd_oracle(cfg, out_dir)
        raise ConfigError("unknown command %r" % args.command)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and explicit exits pass through
        code = exc.code
        return 0 if code is None else int(code)
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
