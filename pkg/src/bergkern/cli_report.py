"""Batch driver: ``bergkern run <config> [--out DIR] [--format csv|text]``.

A config is a JSON document ``{"kind": ..., "seed": ..., "params": {...}}``.
Every parameter has a default which is materialised into the echoed config,
so a report always states exactly what was run.  Reports contain no
timing information and are byte-identical across reruns; wall-clock time
goes to the log only.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bergman, newton_diagram, oscillation, radius_metric, schrodinger, weight_eval
from .errors import BergkernError, ConfigInvalid, IoFailure
from .grid import Grid

log = logging.getLogger("bergkern")

SMALL_GAMMA = [[2, 0], [1, 1], [0, 2]]

# Defaults per kind.  ``None`` marks a required parameter.
DEFAULTS: dict[str, dict[str, Any]] = {
    "profile": {"gamma": None, "expect": {}},
    "hessian-check": {
        "gamma": None, "samples": 100, "t_max": 1000.0, "fd_samples": 100, "fd_radius": 3.0,
        "fd_rtol": 1e-6,
    },
    "rho": {
        "gamma": SMALL_GAMMA, "potential": "laplacian", "lower": [0.0, 0.0], "upper": [2.0, 2.0],
        "h": 0.05, "ball_sup": "monotone", "rtol": 1e-6,
    },
    "dist": {
        "rho": None, "lower": [0.0], "upper": [21.0], "h": 0.01, "source": [0.0], "targets": None,
        "wide_stencil": False, "expect": [], "rtol": 0.02,
    },
    "moments": {"gamma": None, "cutoff": 10, "rtol": 1e-10, "expect": [], "expect_rtol": 1e-10},
    "kernel": {
        "gamma": None, "cutoff": 40, "pairs": 100, "max_modulus": 1.5, "gram_size": 6,
        "tail_rtol": 1e-8, "gaussian_rtol": 1e-6,
    },
    "bound-fit": {
        "gamma": SMALL_GAMMA, "cutoff": 60, "extent": 2.0, "h": 0.02, "pairs": 40, "box": 1.6,
        "smin": 0.05, "smax": 2.0, "c": 1.0, "pin": None, "pin_rtol": 1e-6,
    },
    "spectrum": {
        "weight": None, "potential": None, "dim": 1, "lower": None, "upper": None, "h": 0.1,
        "factor": None, "k": 1, "expect": None, "expect_rtol": 0.05, "budget": 2_000_000,
    },
    "coercivity": {
        "gamma": SMALL_GAMMA, "family_size": 128, "box": [[-2.0] * 4, [2.0] * 4], "points": 20,
        "stability": 0.2, "pin": None, "pin_rtol": 1e-6,
    },
    "equivalence": {
        "gamma": SMALL_GAMMA, "forms": 3, "box": [[-1.5] * 4, [1.5] * 4], "points": 24,
        "tolerance": 1e-4,
    },
    "discreteness": {
        "entries": None, "dim": 1, "side": 1.0, "centers": None, "normalize": False, "expect": [],
        "expect_rtol": 0.02,
    },
    "oscillation": {
        "partitions": [], "random": 0, "m_max": 3, "starts": 16, "tolerance": 1e-10,
        "max_iter": 500, "oracle_tol": 1e-3, "expect": [], "expect_tol": 1e-6,
    },
    "muckenhoupt": {
        "entries": None, "dim": 1, "cubes": None, "delta": 0.001, "c": 0.1, "alpha": 0.5,
        "beta": 0.05, "cells": 64, "subsets": 200, "a2": True, "expect": {},
    },
    "classify-cube": {"entries": None, "dim": 1, "cube": None, "max_depth": 10, "expect": None},
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    params: dict

    def as_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "params": self.params}


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    config: dict
    tables: dict[str, Table] = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.assertions.append(Assertion(name, bool(passed), detail))


# --- config -------------------------------------------------------------------------


def validate_config(raw: Any) -> ExperimentConfig:
    """Check the top-level shape and materialise defaults."""
    if not isinstance(raw, dict) or not raw:
        raise ConfigInvalid("$", "config must be a non-empty object")
    unknown = set(raw) - {"kind", "seed", "params"}
    if unknown:
        raise ConfigInvalid(f"$.{sorted(unknown)[0]}", "unknown top-level key")
    kind = raw.get("kind")
    if kind not in DEFAULTS:
        raise ConfigInvalid("$.kind", f"expected one of {', '.join(DEFAULTS)}")
    seed = raw.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigInvalid("$.seed", "seed must be a non-negative integer")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigInvalid("$.params", "params must be an object")
    defaults = DEFAULTS[kind]
    for key in params:
        if key not in defaults:
            raise ConfigInvalid(f"$.params.{key}", f"unknown parameter for kind {kind}")
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(params))
    return ExperimentConfig(kind, seed, merged)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(str(path), f"cannot read config: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return validate_config(raw)


def _require(params: dict, key: str):
    if params.get(key) is None:
        raise ConfigInvalid(f"$.params.{key}", "required parameter missing")
    return params[key]


def _gamma(params: dict, key: str = "gamma") -> newton_diagram.MonomialSet:
    value = _require(params, key)
    try:
        return newton_diagram.MonomialSet([tuple(p) for p in value])
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"$.params.{key}", str(exc)) from exc


def _number(params: dict, key: str, positive: bool = False) -> float:
    value = _require(params, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigInvalid(f"$.params.{key}", "expected a finite number")
    if positive and value <= 0:
        raise ConfigInvalid(f"$.params.{key}", "expected a positive number")
    return float(value)


def _count(params: dict, key: str, minimum: int = 1) -> int:
    value = _require(params, key)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigInvalid(f"$.params.{key}", f"expected an integer >= {minimum}")
    return value


def _complex(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigInvalid(path, "expected a number, [re, im] or a complex literal")


def _matrix_potential(params: dict) -> schrodinger.MatrixPotential:
    entries = _require(params, "entries")
    try:
        return schrodinger.MatrixPotential(entries, dim=_count(params, "dim"))
    except (TypeError, ValueError, SyntaxError) as exc:
        raise ConfigInvalid("$.params.entries", str(exc)) from exc
    except Exception as exc:  # sympy raises its own parse errors
        raise ConfigInvalid("$.params.entries", f"cannot parse entries: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


# --- experiments -----------------------------------------------------------------------


def _run_profile(cfg: ExperimentConfig, rep: RunReport) -> None:
    gamma = _gamma(cfg.params)
    prof = newton_diagram.derive_profile(gamma)
    sigma, tau = prof.original_sigma_tau()
    src = prof.swapped
    c1, c2 = (prof.corner2, prof.corner1) if src else (prof.corner1, prof.corner2)
    if src and c1 is not None:
        c1, c2 = c1[::-1], c2[::-1]

    def corner(c):
        return "" if c is None else f"({c[0]},{c[1]})"
    values = {
        "m": prof.ndeg if src else prof.mdeg,
        "n": prof.mdeg if src else prof.ndeg,
        "sigma": sigma,
        "tau": tau,
        "corner_sigma": corner(c1),
        "corner_tau": corner(c2),
        "nu": prof.nu,
        "decoupled": prof.decoupled,
        "swapped": prof.swapped,
    }
    rep.tables["profile"] = Table(["quantity", "value"], [(k, v) for k, v in values.items()])
    rep.check("cone invariants", newton_diagram.cone_invariants_hold(prof))
    for key, expected in sorted(cfg.params["expect"].items()):
        if key not in values:
            raise ConfigInvalid(f"$.params.expect.{key}", "unknown profile quantity")
        got = values[key]
        if isinstance(got, Fraction):
            ok = got == Fraction(str(expected))
        else:
            ok = _fmt(got) == str(expected)
        rep.check(f"{key} == {expected}", ok, f"got {_fmt(got)}")


def _run_hessian_check(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    gamma = _gamma(p)
    pts = weight_eval.log_uniform_points(_count(p, "samples"), _number(p, "t_max", True), cfg.seed)
    report = weight_eval.hessian_consistency_check(gamma, pts, check=False)
    K = report.K
    rows = [("K", K), ("samples", report.samples)]
    for name, rng in (("det_ratio", report.det_ratio), ("trace_ratio", report.trace_ratio),
                      ("trace_poly_ratio", report.trace_poly_ratio)):
        if rng is not None:
            rows += [(f"{name}_min", rng[0]), (f"{name}_max", rng[1])]
    for tag, (lo, hi, n) in report.lambda_ratio.items():
        rows += [(f"lambda_ratio_{tag}_min", lo), (f"lambda_ratio_{tag}_max", hi), (f"lambda_ratio_{tag}_count", n)]
    if report.det_ratio:
        rep.check("det / phi_1 in [1, K]", 1 - 1e-9 <= report.det_ratio[0] and report.det_ratio[1] <= K * (1 + 1e-9))
    if report.trace_ratio:
        rep.check("tr / phi_2 in [1, K]", 1 - 1e-9 <= report.trace_ratio[0] and report.trace_ratio[1] <= K * (1 + 1e-9))
    rep.check("trace equals its polynomial", abs(report.trace_poly_ratio[0] - 1) < 1e-9 and abs(report.trace_poly_ratio[1] - 1) < 1e-9)
    if report.lambda_bounds:
        lo, hi = report.lambda_bounds
        rows += [("lambda_bound_lo", lo), ("lambda_bound_hi", hi)]
        ok = all(lo * (1 - 1e-9) <= a and b <= hi * (1 + 1e-9) for a, b, _ in report.lambda_ratio.values())
        rep.check("lambda / region monomial within guaranteed range", ok)
    weight = weight_eval.PolyWeight.model(gamma)
    fd_pts = weight_eval.log_uniform_points(_count(p, "fd_samples"), _number(p, "fd_radius", True), cfg.seed + 1, t_min=0.1)
    worst = 0.0
    for q in fd_pts:
        exact = weight_eval.hessian(gamma, q).entries
        r = max(abs(q.z), abs(q.w), 1.0)
        approx = weight_eval.finite_difference_hessian(lambda v: weight_eval.eval_weight(gamma, v), q, step=1e-3 * r / 4)
        worst = max(worst, float(np.abs(approx - exact).max() / max(np.abs(exact).max(), 1e-300)))
    rows.append(("fd_max_relative_error", worst))
    rep.check("finite-difference Hessian agreement", worst <= _number(p, "fd_rtol", True), f"{worst:.3g}")
    rep.tables["hessian"] = Table(["quantity", "value"], rows)


def _run_rho(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    grid = Grid(tuple(_require(p, "lower")), tuple(_require(p, "upper")), _number(p, "h", True))
    kind = p["potential"]
    if kind == "laplacian":
        gamma = _gamma(p)

        def potential(x):
            return 4 * weight_eval.det_trace(gamma, x[:, 0], x[:, 1])[1]
    elif isinstance(kind, (int, float)) and not isinstance(kind, bool) and kind > 0:
        const = float(kind)

        def potential(x):
            return np.full(len(x), const)
    else:
        raise ConfigInvalid("$.params.potential", "expected 'laplacian' or a positive constant")
    mode = p["ball_sup"]
    sups = {"monotone": radius_metric.MonotoneBallSup, "box": radius_metric.BoxBallSup}
    if mode == "sampled":
        sup = None
    elif mode in sups:
        if grid.dim > 2:
            raise ConfigInvalid("$.params.ball_sup", "exact ball sups need dimension <= 2")
        sup = sups[mode](potential)
    else:
        raise ConfigInvalid("$.params.ball_sup", "expected monotone, box or sampled")
    field = radius_metric.rho_from_potential(potential, grid, ball_sup=sup, rtol=_number(p, "rtol", True))
    cols = [f"x{i}" for i in range(grid.dim)] + ["rho"]
    rep.tables["rho"] = Table(cols, field.rows())
    rep.tables["rho_summary"] = Table(["quantity", "value"], [
        ("comparability", field.comparability), ("rho_min", float(field.values.min())),
        ("rho_max", float(field.values.max())),
    ])
    rep.check("rho positive and finite", bool(np.all(field.values > 0)))
    rep.check("comparability finite", math.isfinite(field.comparability))
    if sup is not None:
        sw = radius_metric.sandwich_check(field, sup)
        rep.check("sandwich upper bound", sw.upper_ok, f"max ratio {sw.max_upper_ratio:.6g}")
        rep.check("sandwich lower bound", sw.lower_ok, f"doubling {sw.doubling:.6g}")


def _explicit_rho(expr: str, dim: int):
    import sympy

    names = schrodinger.default_variables(dim)
    syms = sympy.symbols(names, real=True)
    syms = syms if isinstance(syms, tuple) else (syms,)
    try:
        e = sympy.sympify(expr, locals=dict(zip(names, syms)))
    except Exception as exc:
        raise ConfigInvalid("$.params.rho", f"cannot parse: {exc}") from exc
    if e.free_symbols - set(syms):
        raise ConfigInvalid("$.params.rho", "unknown variables")
    fn = sympy.lambdify(syms, e, "numpy")

    def rho(points):
        pts = np.atleast_2d(points)
        return np.broadcast_to(np.asarray(fn(*[pts[:, i] for i in range(dim)]), dtype=float), (len(pts),))

    return rho


def _run_dist(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    grid = Grid(tuple(_require(p, "lower")), tuple(_require(p, "upper")), _number(p, "h", True))
    rho = _explicit_rho(str(_require(p, "rho")), grid.dim)
    field = radius_metric.explicit_field(grid, rho)
    graph = radius_metric.build_metric_graph(field, wide_stencil=bool(p["wide_stencil"]))
    targets = p["targets"] if p["targets"] is not None else [list(grid.upper)]
    d = radius_metric.agmon_distance(graph, np.array(p["source"], dtype=float), [np.array(t, dtype=float) for t in targets])
    cols = [f"t{i}" for i in range(grid.dim)] + ["distance"]
    rep.tables["distance"] = Table(cols, [tuple(t) + (float(v),) for t, v in zip(targets, d)])
    rep.check("distances finite and non-negative", bool(np.all(np.isfinite(d)) and np.all(d >= 0)))
    for i, want in enumerate(p["expect"]):
        got = float(d[i])
        rep.check(f"distance[{i}] ~ {want}", abs(got - want) <= p["rtol"] * abs(want), f"got {got:.10g}")


def _run_moments(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    gamma = _gamma(p)
    table = bergman.compute_moments(gamma, _count(p, "cutoff", 0), rtol=_number(p, "rtol", True))
    rows = sorted(table.moments.items())
    rep.tables["moments"] = Table(["a", "b", "c_ab"], [(a, b, v) for (a, b), v in rows])
    rep.check("moments positive", all(v > 0 for _, v in rows))
    mom = table.moments
    lc = all(
        mom[(a, b)] ** 2 <= mom[(a - 1, b)] * mom[(a + 1, b)] * (1 + 1e-9)
        for (a, b) in mom if (a - 1, b) in mom and (a + 1, b) in mom
    )
    rep.check("moments log-convex in a", lc)
    if gamma.points == ((0, 1), (1, 0)):
        worst = max(
            abs(v / (math.pi**2 * math.factorial(a) * math.factorial(b) / 2 ** (a + b + 2)) - 1)
            for (a, b), v in rows
        )
        rep.check("Gaussian closed form", worst <= p["expect_rtol"], f"max rel err {worst:.3g}")
    for item in p["expect"]:
        a, b, want = item["a"], item["b"], float(item["value"])
        got = table.moment(a, b)
        rep.check(f"c_{a}{b} ~ {want}", abs(got / want - 1) <= p["expect_rtol"], f"got {got:.17g}")


def _run_kernel(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    gamma = _gamma(p)
    table = bergman.compute_moments(gamma, _count(p, "cutoff", 0))
    rng = np.random.default_rng(cfg.seed)
    R = _number(p, "max_modulus", True)

    def point():
        mods = R * np.sqrt(rng.random(2))
        ph = np.exp(2j * math.pi * rng.random(2))
        return tuple(complex(v) for v in mods * ph)

    rows, sym_err, tail_ok = [], 0.0, True
    gaussian = gamma.points == ((0, 1), (1, 0))
    g_err = 0.0
    for _ in range(_count(p, "pairs")):
        zp, zq = point(), point()
        B = bergman.kernel_eval(table, zp, zq)
        Bt = bergman.kernel_eval(table, zq, zp)
        sym_err = max(sym_err, abs(B.value - np.conj(Bt.value)) / abs(B.value))
        tail_ok &= B.tail_bound <= p["tail_rtol"] * B.abs_sum
        if gaussian:
            g_err = max(g_err, abs(B.value / bergman.gaussian_kernel(zp, zq) - 1))
        rows.append((zp[0].real, zp[0].imag, zp[1].real, zp[1].imag, zq[0].real, zq[0].imag,
                     zq[1].real, zq[1].imag, B.value.real, B.value.imag, B.tail_bound))
    rep.tables["kernel"] = Table(
        ["re_zp", "im_zp", "re_wp", "im_wp", "re_zq", "im_zq", "re_wq", "im_wq", "re_B", "im_B", "tail"], rows
    )
    rep.check("conjugate symmetry", sym_err <= 1e-10, f"{sym_err:.3g}")
    rep.check("tail certified", tail_ok)
    pts = [point() for _ in range(_count(p, "gram_size"))]
    G = np.array([[bergman.kernel_eval(table, a, b).value for b in pts] for a in pts])
    eig = np.linalg.eigvalsh((G + G.conj().T) / 2)
    rep.check("Gram matrix positive semidefinite", eig[0] >= -1e-8 * abs(eig).max(), f"min eig {eig[0]:.3g}")
    if gaussian:
        rep.check("Gaussian closed form", g_err <= p["gaussian_rtol"], f"max rel err {g_err:.3g}")


def _run_bound_fit(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    fit = bergman.decay_fit(
        _gamma(p), cutoff=_count(p, "cutoff", 1), extent=_number(p, "extent", True), h=_number(p, "h", True),
        count=_count(p, "pairs", 2), box=_number(p, "box", True), smin=_number(p, "smin", True),
        smax=_number(p, "smax", True), seed=cfg.seed, c=_number(p, "c", True),
    )
    rep.tables["bound_fit"] = Table(["epsilon", "logC", "worst_pair_index"], [(fit.epsilon, fit.logC, fit.worst_pair_index)])
    rep.tables["bound_fit_pairs"] = Table(
        ["index", "distance", "L_plus_eps_d"], [(i, d, r) for i, (d, r) in enumerate(zip(fit.distances, fit.residuals))]
    )
    rep.check("epsilon strictly positive", fit.epsilon > 0, f"{fit.epsilon:.10g}")
    rep.check("bound holds with finite C on every pair", math.isfinite(fit.logC) and bool(np.all(fit.residuals <= fit.logC + 1e-12)))
    rep.check("kernel tails negligible", fit.tail_max <= 1e-6, f"{fit.tail_max:.3g}")
    if p["pin"] is not None:
        eps, logC = p["pin"]
        ok = math.isclose(fit.epsilon, eps, rel_tol=p["pin_rtol"]) and math.isclose(fit.logC, logC, rel_tol=p["pin_rtol"])
        rep.check("fit matches pinned values", ok)


def _run_spectrum(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    h = _number(p, "h", True)
    if p["weight"] is not None:
        w = p["weight"]
        try:
            weight = weight_eval.PolyWeight(w["exponents"], w.get("coeffs"), dim=w.get("dim"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid("$.params.weight", str(exc)) from exc
        d = 2 * weight.dim
        grid = Grid(tuple(p["lower"] or [-6.0] * d), tuple(p["upper"] or [6.0] * d), h)
        factor = 0.25 if p["factor"] is None else float(p["factor"])
        op = schrodinger.weight_operator(weight, grid, factor, budget=p["budget"])
    elif p["potential"] is not None:
        pot = _matrix_potential({"entries": p["potential"], "dim": p["dim"]})
        d = pot.dim
        grid = Grid(tuple(p["lower"] or [-8.0] * d), tuple(p["upper"] or [8.0] * d), h)
        factor = 1.0 if p["factor"] is None else float(p["factor"])
        op = schrodinger.assemble_operator(pot, None, grid, factor, budget=p["budget"])
    else:
        raise ConfigInvalid("$.params.weight", "give either weight or potential")
    spec = schrodinger.extremal_eigenvalues(op, k=_count(p, "k"), seed=cfg.seed)
    rep.tables["spectrum"] = Table(
        ["index", "eigenvalue", "residual"], [(i, v, r) for i, (v, r) in enumerate(zip(spec.eigenvalues, spec.residuals))]
    )
    rep.check("eigenvalues ascending", bool(np.all(np.diff(spec.eigenvalues) >= -1e-12)))
    rep.check("residuals certified", bool(np.all(spec.residuals <= 1e-8 * np.maximum(1, np.abs(spec.eigenvalues)))))
    if p["expect"] is not None:
        got = float(spec.eigenvalues[0])
        rep.check(f"lowest eigenvalue ~ {p['expect']}", abs(got - p["expect"]) <= p["expect_rtol"] * abs(p["expect"]), f"got {got:.10g}")


def _run_coercivity(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    prof = newton_diagram.derive_profile(_gamma(p))
    scan = schrodinger.coercivity_scan(prof, _count(p, "family_size", 2), p["box"], seed=cfg.seed, points=_count(p, "points", 4))
    rep.tables["coercivity"] = Table(
        ["min_ratio", "half_min_ratio", "relative_change", "argmin"],
        [(scan.min_ratio, scan.half_min_ratio, scan.relative_change, scan.argmin)],
    )
    rep.tables["coercivity_forms"] = Table(["index", "ratio"], list(enumerate(scan.ratios.tolist())))
    rep.check("coercivity ratio positive", scan.min_ratio > 0)
    rep.check("stable under family doubling", scan.relative_change < p["stability"], f"{scan.relative_change:.3g}")
    if p["pin"] is not None:
        rep.check("minimum matches pinned value", math.isclose(scan.min_ratio, p["pin"], rel_tol=p["pin_rtol"]))


def _run_equivalence(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    weight = weight_eval.PolyWeight.model(_gamma(p))
    forms = schrodinger.random_forms(2, _count(p, "forms"), p["box"], cfg.seed)
    rows = []
    for i, f in enumerate(forms):
        r = schrodinger.equivalence_check(weight, f, p["box"], points=_count(p, "points", 4))
        rows.append((i, r.mkh, r.schrodinger, r.discrepancy))
    rep.tables["equivalence"] = Table(["index", "mkh", "schrodinger", "discrepancy"], rows)
    worst = max(r[3] for r in rows)
    rep.check("MKH equals quarter Schroedinger energy", worst < p["tolerance"], f"{worst:.3g}")


def _run_discreteness(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    pot = _matrix_potential(p)
    centers = _require(p, "centers")
    rows_out = schrodinger.discreteness_profile(pot, p["side"], centers, normalize=bool(p["normalize"]))
    cols = [f"x{i}" for i in range(pot.dim)] + ["lambda", "lambda_exact", "ratio"]
    rep.tables["discreteness"] = Table(cols, [r.center + (r.lam, r.lam_exact, r.ratio) for r in rows_out])
    rep.check("cube integrals non-negative", all(r.lam >= -1e-12 for r in rows_out))
    for item in p["expect"]:
        idx = item["index"]
        row = rows_out[idx]
        if "exact" in item:
            ok = str(row.lam_exact) == str(item["exact"])
            rep.check(f"lambda[{idx}] == {item['exact']}", ok, f"got {row.lam_exact}")
        if "ratio" in item:
            want = float(Fraction(str(item["ratio"])))
            ok = row.ratio is not None and abs(row.ratio - want) <= p["expect_rtol"] * want
            rep.check(f"ratio[{idx}] ~ {item['ratio']}", ok, f"got {_fmt(row.ratio)}")
        if "min_ratio" in item:
            want = float(Fraction(str(item["min_ratio"])))
            rep.check(f"ratio[{idx}] >= {item['min_ratio']}", row.ratio is not None and row.ratio >= want)


def _partition_from(spec: dict, path: str) -> oscillation.SubspacePartition:
    try:
        # each span is a list of spanning vectors; the partition wants columns
        spans = [np.array([[_complex(v, f"{path}.spans") for v in vec] for vec in s]).T for s in spec["spans"]]
        return oscillation.SubspacePartition.from_spans(spec["weights"], spans)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(path, str(exc)) from exc


def _run_oscillation(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    parts = [_partition_from(s, f"$.params.partitions[{i}]") for i, s in enumerate(p["partitions"])]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(int(p["random"])):
        parts.append(oscillation.random_partition(rng, int(rng.integers(1, p["m_max"] + 1))))
    if not parts:
        raise ConfigInvalid("$.params.partitions", "no partitions given")
    rows, gaps_ok, bound_ok = [], True, True
    for i, part in enumerate(parts):
        res = oscillation.oscillation(part, starts=p["starts"], seed=cfg.seed, tol=p["tolerance"], max_iter=p["max_iter"])
        oracle = oscillation.oscillation_oracle(part) if part.m <= 3 else None
        delta, eta, bound = oscillation.lower_bound_delta_eta(part)
        gap = None if oracle is None else abs(res.omega - oracle)
        gaps_ok &= gap is None or gap <= p["oracle_tol"]
        bound_ok &= res.omega >= bound - 1e-12
        rows.append((i, part.m, len(part), res.omega, oracle, gap, delta, eta, bound))
    rep.tables["oscillation"] = Table(
        ["index", "m", "pieces", "omega", "oracle_omega", "gap", "delta", "eta", "lower_bound"], rows
    )
    rep.check("omega in [0, 1]", all(0 <= r[3] <= 1 for r in rows))
    rep.check("solver matches oracle", gaps_ok)
    rep.check("omega >= sqrt(delta eta)", bound_ok)
    for item in p["expect"]:
        idx, want = item["index"], float(item["omega"])
        got = rows[idx][3]
        rep.check(f"omega[{idx}] ~ {want}", abs(got - want) <= p["expect_tol"], f"got {got:.17g}")


def _cube(spec, path: str) -> oscillation.Cube:
    try:
        return oscillation.Cube(tuple(spec["center"]), float(spec["side"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(path, str(exc)) from exc


def _run_muckenhoupt(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    pot = _matrix_potential(p)
    cubes = [_cube(c, f"$.params.cubes[{i}]") for i, c in enumerate(_require(p, "cubes"))]
    report = oscillation.muckenhoupt_diagnostics(
        pot, cubes, p["delta"], p["c"], p["alpha"], p["beta"], cells=p["cells"], subsets=p["subsets"],
        seed=cfg.seed, include_a2=False,
    )
    rows = [r.cube.center + (r.cube.side, r.def1_fraction, r.def1_pass, r.def2_worst_margin, r.def2_pass) for r in report.rows]
    cols = [f"c{i}" for i in range(pot.dim)] + ["side", "def1_fraction", "def1_pass", "def2_margin", "def2_pass"]
    rep.tables["muckenhoupt"] = Table(cols, rows)
    a2_value: Any = None
    if p["a2"]:
        try:
            a2_value = max(oscillation.a2_constant(pot, q) for q in cubes)
        except oscillation.SingularInverse:
            a2_value = "singular"
    rep.tables["muckenhoupt_summary"] = Table(
        ["def1", "def2", "a2"], [(report.def1_pass, report.def2_pass, a2_value)]
    )
    implied = True
    if report.def1_pass:
        implied = oscillation.muckenhoupt_diagnostics(
            pot, cubes, p["delta"], p["c"], 1 - p["c"] / 2, p["c"] * p["delta"] / 2, cells=p["cells"],
            subsets=p["subsets"], seed=cfg.seed, include_a2=False,
        ).def2_pass
    rep.check("first definition implies the second", implied)
    for key, want in sorted(p["expect"].items()):
        got = {"def1": report.def1_pass, "def2": report.def2_pass}.get(key)
        if got is None:
            raise ConfigInvalid(f"$.params.expect.{key}", "expected def1 or def2")
        rep.check(f"{key} is {want}", got == bool(want))


def _run_classify(cfg: ExperimentConfig, rep: RunReport) -> None:
    p = cfg.params
    pot = _matrix_potential(p)
    cube = _cube(_require(p, "cube"), "$.params.cube")
    res = oscillation.classify_cube(pot, cube, max_depth=_count(p, "max_depth", 0))
    w = res.witness
    rep.tables["classification"] = Table(
        ["tag", "witness_center", "witness_side", "isotropic", "depth"],
        [(res.tag.value, " ".join(_fmt(c) for c in w.center) if w else "", w.side if w else None,
          res.isotropic, res.depth)],
    )
    if res.tag is oscillation.CubeClass.GOOD and w is not None:
        axes = [np.linspace(lo, lo + w.side, 9) for lo in w.lower]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
        V = pot(pts)
        lam = np.linalg.eigvalsh(V)
        rep.check("mu <= 8 lambda on witness", bool(np.all(lam[:, -1] <= 8 * lam[:, 0] * (1 + 1e-9))))
    elif res.tag is oscillation.CubeClass.BAD:
        rep.check("sup trace <= 2 inf trace on witness", res.trace_spread is not None and res.trace_spread <= 2)
    if p["expect"] is not None:
        rep.check(f"tag is {p['expect']}", res.tag.value == p["expect"], f"got {res.tag.value}")


RUNNERS: dict[str, Callable[[ExperimentConfig, RunReport], None]] = {
    "profile": _run_profile,
    "hessian-check": _run_hessian_check,
    "rho": _run_rho,
    "dist": _run_dist,
    "moments": _run_moments,
    "kernel": _run_kernel,
    "bound-fit": _run_bound_fit,
    "spectrum": _run_spectrum,
    "coercivity": _run_coercivity,
    "equivalence": _run_equivalence,
    "discreteness": _run_discreteness,
    "oscillation": _run_oscillation,
    "muckenhoupt": _run_muckenhoupt,
    "classify-cube": _run_classify,
}


def run_config(config: ExperimentConfig | dict) -> RunReport:
    """Run one experiment; module errors become a failed assertion with context."""
    cfg = config if isinstance(config, ExperimentConfig) else validate_config(config)
    rep = RunReport(cfg.as_dict())
    start = time.perf_counter()
    try:
        RUNNERS[cfg.kind](cfg, rep)
    except ConfigInvalid:
        raise
    except BergkernError as exc:
        rep.check(f"{cfg.kind} completed", False, f"{type(exc).__name__}: {exc}")
    rep.wall_clock = time.perf_counter() - start
    log.info("%s finished in %.3f s", cfg.kind, rep.wall_clock)
    return rep


# --- output ------------------------------------------------------------------------------


def _csv_text(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_text(report: RunReport) -> str:
    out = [f"kind: {report.config['kind']}", f"seed: {report.config['seed']}", ""]
    for name, table in report.tables.items():
        out.append(f"[{name}]")
        if len(table.rows) > 20:
            out.append(f"{len(table.rows)} rows; first 20 shown")
        widths = [len(c) for c in table.columns]
        cells = [[_fmt(v) for v in row] for row in table.rows[:20]]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        out.append("  ".join(c.ljust(w) for c, w in zip(table.columns, widths)).rstrip())
        for row in cells:
            out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        out.append("")
    out.append("[assertions]")
    for a in report.assertions:
        out.append(f"{'PASS' if a.passed else 'FAIL'}  {a.name}" + (f"  ({a.detail})" if a.detail else ""))
    out.append("")
    out.append("RESULT: " + ("PASS" if report.passed else "FAIL"))
    return "\n".join(out) + "\n"


def emit_report(report: RunReport, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write the report; returns the written paths."""
    if fmt not in ("csv", "text"):
        raise ValueError("format must be csv or text")
    out = Path(out_dir)
    kind = report.config["kind"]
    files: dict[str, str] = {}
    files["config.json"] = json.dumps(report.config, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        for name, table in report.tables.items():
            files[f"{kind}_{name}.csv"] = _csv_text(table)
        files["assertions.csv"] = _csv_text(
            Table(["assertion", "passed", "detail"], [(a.name, a.passed, a.detail) for a in report.assertions])
        )
    else:
        files["report.txt"] = render_text(report)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            path.write_text(text)
            written.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc.strerror}") from exc
    return written


# --- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergkern", description="Weighted Bergman kernel and Schroedinger experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a JSON config")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--format", choices=("csv", "text"), default="csv")
    run.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        report = run_config(cfg)
        emit_report(report, args.out, args.format)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IoFailure as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 2
    for a in report.assertions:
        if not a.passed:
            print(f"FAIL {a.name} {a.detail}".rstrip(), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
