"""Command-line experiment runner.

Usage::

    katolab <subcommand> [--param value ...] [--config FILE.toml]
            [--seed N] [--out FILE] [--format json|csv]
            [--sweep key=v1,v2,...] [--workers N]

Subcommands are ``perturb``, ``temple``, ``projections``, ``adiabatic``,
``resum`` and ``models``.  Each has a parameter schema; the same keys are
accepted as ``--flags`` (dashes or underscores) and as top-level keys in a
flat TOML config.  Precedence, lowest first: schema defaults, config file,
``KATOLAB_SEED`` (seed only), command-line flags.

Exit status is 0 when every target passes, 2 when a target misses and 1 on
any error.  JSON output is key-sorted and deterministic apart from the
``wall_time`` field.  CSV tables keep a fixed column order per experiment
and print floats with 17 significant digits; a PNG plot of the table is
written next to a CSV output file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import KatolabError

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRecord",
    "Target",
    "SCHEMAS",
    "load_config",
    "run",
    "sweep",
    "main",
]

DEFAULT_SEED = 20240101


class ConfigError(KatolabError):
    """Malformed configuration; the message names the offending field."""


# parameter schemas


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, str, bool, floats, ints, pair
    default: Any
    help: str = ""
    choices: tuple | None = None


def _parse_value(kind: str, raw: Any, where: str, choices=None) -> Any:
    try:
        if raw is None:
            return None
        if kind == "int":
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError
            val = int(raw)
        elif kind == "float":
            if isinstance(raw, bool):
                raise ValueError
            val = float(raw)
        elif kind == "str":
            if not isinstance(raw, (str, int, float)) or isinstance(raw, bool):
                raise ValueError
            val = str(raw)
        elif kind == "bool":
            if isinstance(raw, bool):
                val = raw
            elif str(raw).lower() in ("1", "true", "yes", "on"):
                val = True
            elif str(raw).lower() in ("0", "false", "no", "off"):
                val = False
            else:
                raise ValueError
        elif kind in ("floats", "ints"):
            conv = float if kind == "floats" else int
            if isinstance(raw, (list, tuple)):
                items = list(raw)
            else:
                items = [x for x in str(raw).split(",") if x.strip()]
            val = [conv(x) for x in items]
        elif kind == "pair":
            items = list(raw) if isinstance(raw, (list, tuple)) else str(raw).split(",")
            if len(items) != 2:
                raise ValueError
            val = [int(items[0]), int(items[1])]
        else:  # pragma: no cover
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {kind}, got {raw!r}") from None
    if choices is not None and val not in choices:
        raise ConfigError(f"{where}: {val!r} not one of {list(choices)}")
    return val


SCHEMAS: dict[str, dict[str, Param]] = {
    "perturb": {
        "case": Param("str", "random", "random, two-level or oscillator", ("random", "two-level", "oscillator")),
        "dim": Param("int", 6, "matrix size for the random case"),
        "N": Param("int", 6, "highest perturbation order"),
        "index": Param("int", 0, "eigenvalue index of H0"),
        "beta": Param("float", 1e-2, "coupling for the eigensolve comparison"),
    },
    "temple": {
        "dim": Param("int", 8, "matrix size"),
        "trials": Param("int", 50, "number of random enclosure trials"),
        "beta_min": Param("float", 1e-4, "smallest coupling in the slope fit"),
        "beta_max": Param("float", 1e-2, "largest coupling in the slope fit"),
    },
    "projections": {
        "dim": Param("int", 8, "space dimension"),
        "trials": Param("int", 100, "number of random pairs"),
        "pair_file": Param("str", "", "JSON file with matrices P and Q"),
    },
    "adiabatic": {
        "path": Param("str", "two-level", "built-in path", ("two-level", "bloch-loop", "three-level")),
        "T": Param("floats", [25.0, 50.0, 100.0, 200.0], "slow time scales"),
        "steps": Param("int", 2000, "integration steps on [0, 1]"),
        "theta": Param("float", math.pi / 3, "colatitude of the Bloch loop"),
        "gap": Param("float", 1.0, "gap of the three-level path"),
    },
    "resum": {
        "series": Param("str", "quartic", "zero, euler, geometric, alternating, exp, quartic or a JSON file"),
        "terms": Param("int", 20, "number of coefficients beyond a_0"),
        "pade": Param("pair", None, "Padé degrees N,M (denominator, numerator)"),
        "z": Param("float", 0.1, "evaluation point"),
        "borel": Param("bool", False, "also compute the Borel sum"),
        "order_m": Param("int", 1, "Borel order"),
        "continuation": Param("str", "pade", "Borel continuation", ("pade", "taylor")),
        "table": Param("bool", False, "emit the diagonal Padé table rows (N, value)"),
        "trotter": Param("ints", [], "Lie–Trotter step counts n; emits rows (n, error)"),
        "t": Param("float", 1.0, "time in the Trotter comparison"),
        "alternating": Param("float", None, "angle of a line pair; emits rows (n, distance) for (PQ)^n"),
    },
    "models": {
        "name": Param(
            "str",
            None,
            "model name",
            ("helium", "bender-wu", "wvn", "cusp", "hardy", "rellich", "rank-one", "half-pi"),
        ),
        "mass_ratio": Param("float", 7294.29954, "nuclear to electron mass ratio (helium)"),
        "n": Param("int", None, "order (bender-wu) or grid points"),
        "Z": Param("float", 1.0, "nuclear charge (cusp)"),
        "h": Param("float", 5e-3, "grid spacing (cusp)"),
        "nu": Param("int", None, "dimension (hardy, rellich)"),
        "R": Param("float", None, "outer radius; log grids use (1/R, R)"),
        "psi_kind": Param("str", "inv_sqrt", "rank-one trial function", ("inv_sqrt", "inv", "log_case")),
        "beta": Param("float", None, "single coupling for rank-one (omit to fit)"),
        "k_min": Param("float", 1e-10, "momentum window lower end (half-pi)"),
        "k_max": Param("float", 1e10, "momentum window upper end (half-pi)"),
        "grid": Param("int", 2000, "momentum grid points (half-pi)"),
    },
}

RESERVED = {"seed", "out", "format", "sweep", "subcommand", "workers"}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict[str, Any]
    seed: int = DEFAULT_SEED
    out: str | None = None
    format: str = "json"
    sweep: tuple[str, list] | None = None
    workers: int = 1


@dataclass(frozen=True)
class Target:
    name: str
    value: Any
    target: Any
    tolerance: float
    citation: str
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": _jsonable(self.value),
            "target": _jsonable(self.target),
            "tolerance": self.tolerance,
            "citation": self.citation,
            "passed": bool(self.passed),
        }


@dataclass
class ResultRecord:
    experiment: str
    subcommand: str
    inputs: dict[str, Any]
    outputs: dict[str, Any]
    targets: list[Target] = field(default_factory=list)
    table: tuple[list[str], list[list[float]]] | None = None
    plot: dict | None = None
    seed: int = DEFAULT_SEED
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.targets)

    def as_dict(self, include_time: bool = True) -> dict:
        d = {
            "experiment": self.experiment,
            "subcommand": self.subcommand,
            "inputs": _jsonable(self.inputs),
            "outputs": _jsonable(self.outputs),
            "targets": [t.as_dict() for t in self.targets],
            "passed": self.passed,
            "seed": self.seed,
            "version": self.version,
        }
        if self.table is not None:
            d["table"] = {"columns": list(self.table[0]), "rows": _jsonable(self.table[1])}
        if include_time:
            d["wall_time"] = self.wall_time
        return d


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _jsonable(float(np.real(x))), "im": _jsonable(float(np.imag(x)))}
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return x


def _check(name: str, value: float, target: float, tol: float, citation: str, relative: bool = False) -> Target:
    err = abs(value - target)
    if relative:
        err = err / abs(target)
    return Target(name, value, target, tol, citation, bool(err <= tol))


def _slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# experiment runners: each returns (outputs, targets, table, plot)


def _run_perturb(p: dict, rng: np.random.Generator):
    from .asymptotics import oscillator_matrices
    from .operators import eig, random_hermitian
    from .perturbation import rs_low_order, rs_series

    N, idx, beta = p["N"], p["index"], p["beta"]
    if p["case"] == "two-level":
        H0, B = np.diag([0.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])
    elif p["case"] == "oscillator":
        H0, B = oscillator_matrices(4 * (N + 1) + 8)
    else:
        H0, B = random_hermitian(p["dim"], rng).entries, random_hermitian(p["dim"], rng).entries
    rep = rs_series(H0, B, idx, N + 1)
    low = rs_low_order(H0, B, idx)
    exact = float(eig(H0 + beta * B).eigenvalues[idx])
    partial = rep.partial_sum(beta, N)
    remainder = abs(exact - partial)
    bound = 10 * abs(rep.E[N + 1]) * beta ** (N + 1) + 1e-12 * max(1.0, abs(exact))
    outputs = {
        "E": rep.E[: N + 1],
        "exact": exact,
        "partial_sum": partial,
        "remainder": remainder,
        "psi1_overlap": abs(np.vdot(rep.phi0, rep.psi1)),
    }
    targets = [
        _check("low_order_agreement", float(np.max(np.abs(rep.E[:4] - low.E))) if N >= 3 else 0.0, 0.0, 1e-10,
               "closed-form second and third order energy coefficients"),
        Target("remainder_bound", remainder, bound, 0.0, "Rayleigh–Schrödinger remainder against a direct eigensolve",
               bool(remainder <= bound)),
    ]
    if p["case"] == "oscillator":
        targets.append(_check("E1", float(rep.E[1]), 0.75, 1e-10, "first-order quartic shift <0|x^4|0> = 3/4"))
    rows = [[k, float(e)] for k, e in enumerate(rep.E[: N + 1])]
    return outputs, targets, (["order", "E"], rows), {"x": "order", "y": "E"}


def _run_temple(p: dict, rng: np.random.Generator):
    from .operators import random_hermitian
    from .temple import containment_trials, rayleigh_remainder_slope

    summ = containment_trials(p["trials"], p["dim"], rng)
    H0 = random_hermitian(p["dim"], rng)
    B = random_hermitian(p["dim"], rng)
    betas = np.logspace(math.log10(p["beta_min"]), math.log10(p["beta_max"]), 9)
    slope, rem = rayleigh_remainder_slope(H0, B, betas)
    outputs = {"failures": summ.failures, "max_width": summ.max_width, "slope": slope}
    targets = [
        Target("containment_failures", summ.failures, 0, 0.0, "Temple–Kato two-sided enclosure", summ.failures == 0),
        _check("remainder_slope", slope, 2.0, 0.1, "second-order accuracy of the Rayleigh quotient"),
    ]
    rows = [[float(b), float(r)] for b, r in zip(betas, rem)]
    return outputs, targets, (["beta", "remainder"], rows), {"x": "beta", "y": "remainder", "logx": True, "logy": True}


def _run_projections(p: dict, rng: np.random.Generator):
    from . import projections as pj

    if p["pair_file"]:
        with open(p["pair_file"], encoding="utf-8") as fh:
            data = json.load(fh)
        try:
            P = np.asarray(data["P"], dtype=complex)
            Q = np.asarray(data["Q"], dtype=complex)
        except KeyError as exc:
            raise ConfigError(f"pair_file: missing matrix {exc.args[0]!r}") from None
        pr = pj.pair(P, Q)
        res = pj.identity_residuals(P, Q)
        outputs = dict(res)
        outputs.update(
            normPQ=pr.normPQ,
            trace_index=pj.trace_index(pr),
            corner_dims=list(pj.corner_subspaces(pr)),
            spectral_symmetry=[list(x) for x in pj.spectral_symmetry(pr)],
        )
        worst = max(res["pythagoras"], res["anticommutator"])
        targets = [_check("pair_identities", worst, 0.0, 1e-10, "anticommuting Pythagorean identities for P - Q and 1 - P - Q")]
        return outputs, targets, None, None
    a = pj.audit_pairs(p["trials"], p["dim"], rng)
    outputs = {k: getattr(a, k) for k in a.__dataclass_fields__}
    cite = "pairs of projections"
    targets = [
        _check("identities", a.identities, 0.0, 1e-10, f"{cite}: A^2 + B^2 = 1 and AB + BA = 0"),
        _check("commutator_square", a.commutator_square, 0.0, 1e-9, f"{cite}: (PQ - QP)^2 = A^4 - A^2"),
        _check("w_product", a.w_product, 0.0, 1e-9, f"{cite}: W W~ = 1 - A^2"),
        _check("kato_conjugation", a.kato_conjugation, 0.0, 1e-9, f"{cite}: U P U* = Q for norm-close pairs"),
        _check("sgn_conjugation", a.sgn_conjugation, 0.0, 1e-9, f"{cite}: sgn(B) swaps P and Q"),
        _check("trace_integrality", a.trace_integrality, 0.0, 1e-8, f"{cite}: Tr(P - Q) is an integer"),
        _check("halmos_reconstruction", a.halmos_reconstruction, 0.0, 1e-8, f"{cite}: two-projection normal form"),
        _check("oblique_equality", a.oblique_equality, 0.0, 1e-9, "oblique idempotent: ||Pi|| = ||1 - Pi||"),
        _check("ljance_agreement", a.ljance_agreement, 0.0, 1e-8, "Ljance norm formula for oblique idempotents"),
    ]
    return outputs, targets, None, None


def _run_adiabatic(p: dict, rng: np.random.Generator):
    from . import adiabatic as ad

    path = ad.builtin_path(p["path"], theta=p["theta"], gap=p["gap"])
    steps = p["steps"]
    Ts = p["T"]
    if any(T <= 0 for T in Ts):
        raise ConfigError("adiabatic.T: values must be positive")
    defects = [ad.adiabatic_defect(path, T, steps) for T in Ts]
    tr = ad.kato_transport(path, steps)
    outputs: dict[str, Any] = {"T": Ts, "defect": defects, "intertwining_defect": tr.defect}
    targets = [_check("intertwining_defect", tr.defect, 0.0, 1e-8, "Kato transport intertwines P(0) with P(s)")]
    if len(Ts) >= 2:
        slope = _slope(Ts, defects)
        outputs["slope"] = slope
        targets.append(_check("defect_slope", slope, -1.0, 0.15, "adiabatic theorem: leakage is O(1/T)"))
    if path.is_closed():
        g1 = ad.berry_phase(path, steps)
        g2 = ad.berry_phase(path, 2 * steps)
        outputs.update(berry_phase=g1, berry_phase_fine=g2)
        targets.append(_check("berry_resolution", g1, g2, 1e-6, "holonomy of Kato transport on a closed loop"))
    rows = [[float(T), float(d)] for T, d in zip(Ts, defects)]
    return outputs, targets, (["T", "defect"], rows), {"x": "T", "y": "defect", "logx": True, "logy": True}


def _load_series(name: str, terms: int):
    from .asymptotics import PowerSeries, named_series

    if name.endswith(".json"):
        with open(name, encoding="utf-8") as fh:
            return PowerSeries(np.asarray(json.load(fh), dtype=float))
    return named_series(name, terms)


def _quartic_oracle(beta: float) -> float:
    from .operators import Grid1D, discretize_1d, richardson

    L = 8.0
    e = [discretize_1d(Grid1D(-L, L, n), lambda x: x**2 + beta * x**4).eigvalsh(1)[0] for n in (2000, 4001)]
    return richardson(float(e[0]), float(e[1]))


def _run_resum(p: dict, rng: np.random.Generator):
    from .asymptotics import borel_sum, lie_trotter_error, pade

    s = _load_series(p["series"], p["terms"])
    z = p["z"]
    outputs: dict[str, Any] = {"coefficients": s.coeffs}
    targets: list[Target] = []
    table = None
    plot = None
    if p["pade"] is not None:
        N, M = p["pade"]
        ra = pade(s, N, M)
        val = float(np.real(ra(z)))
        outputs.update(pade_P=ra.P_coeffs, pade_Q=ra.Q_coeffs, pade_value=val)
        if s.is_zero():
            targets.append(Target("zero_approximant", float(np.max(np.abs(ra.P_coeffs))), 0.0, 0.0,
                                  "Padé approximant of the zero series", bool(not np.any(ra.P_coeffs))))
        if p["series"] == "quartic" and (N, M) == (8, 8) and z == 0.1:
            targets.append(_check("pade_vs_operator", val, _quartic_oracle(z), 1e-3,
                                  "diagonal Padé convergence for a Stieltjes series"))
    if p["borel"]:
        b = borel_sum(s, z, p["order_m"], p["continuation"])
        outputs.update(borel_value=b.value, borel_error=b.error)
        if p["series"] == "euler" and z == 1.0 and p["order_m"] == 1:
            targets.append(_check("euler_borel", float(b), 0.596347, 1e-5, "Borel sum of the Euler series"))
        if p["series"] == "geometric" and z == 0.5:
            targets.append(_check("geometric_borel", float(b), 2.0, 1e-8, "Borel sum of a convergent geometric series"))
        if p["series"] == "zero":
            targets.append(_check("zero_borel", float(b), 0.0, 0.0, "Borel sum of the zero series"))
    if p["table"]:
        rows = []
        for N in range(1, s.N // 2 + 1):
            try:
                rows.append([N, float(np.real(pade(s, N, N)(z)))])
            except KatolabError:
                rows.append([N, float("nan")])
        table = (["N", "pade_value"], rows)
        plot = {"x": "N", "y": "pade_value"}
    if p["trotter"]:
        from .operators import random_hermitian

        A = random_hermitian(4, rng).entries
        B = random_hermitian(4, rng).entries
        ns = p["trotter"]
        errs = [lie_trotter_error(A, B, p["t"], n) for n in ns]
        outputs.update(trotter_n=ns, trotter_error=errs)
        if len(ns) >= 2:
            sl = _slope(ns, errs)
            outputs["trotter_slope"] = sl
            targets.append(_check("trotter_slope", sl, -1.0, 0.1, "Lie product formula: first-order splitting error"))
        table = (["n", "error"], [[int(n), float(e)] for n, e in zip(ns, errs)])
        plot = {"x": "n", "y": "error", "logx": True, "logy": True}
    if p["alternating"] is not None:
        from .asymptotics import alternating_projection_limit
        from .projections import line_pair

        P, Q = line_pair(p["alternating"])
        ns = list(range(1, 201))
        dists = [alternating_projection_limit(P, Q, n)[1] for n in ns]
        mono = bool(all(b <= a + 1e-15 for a, b in zip(dists, dists[1:])))
        outputs.update(alternating_final=dists[-1], alternating_monotone=mono)
        targets.append(Target("alternating_limit", dists[-1], 0.0, 1e-6,
                              "von Neumann alternating projections converge to the intersection projection",
                              bool(mono and dists[-1] <= 1e-6)))
        table = (["n", "distance"], [[n, float(d)] for n, d in zip(ns, dists)])
        plot = {"x": "n", "y": "distance", "logy": True}
    return outputs, targets, table, plot


def _run_models(p: dict, rng: np.random.Generator):
    from . import asymptotics as asy
    from . import models as md

    name = p["name"]
    if name is None:
        raise ConfigError("models.name: required")
    targets: list[Target] = []
    if name == "helium":
        r = md.helium_shells(p["mass_ratio"])
        outputs = {"k_max": r.k_max, "count": r.count, "alpha": r.alpha}
        if p["mass_ratio"] == 7294.29954:
            targets.append(Target("count", r.count, 25585, 0.0, "helium: hydrogenic shells below the ionization threshold",
                                  r.count == 25585 and r.k_max == 42))
        return outputs, targets, None, None
    if name == "bender-wu":
        n = p["n"] or 25
        s = asy.bender_wu(max(n, 2))
        ratio = asy.bender_wu_ratio(n, s)
        outputs = {"n": n, "a_n": float(s.coeffs[n]), "ratio": ratio, "a1": float(s.coeffs[1]), "a2": float(s.coeffs[2])}
        targets = [
            _check("ratio", ratio, 1.0, 0.10, "Bender–Wu large-order formula"),
            _check("a1", float(s.coeffs[1]), 0.75, 1e-10, "first-order quartic shift 3/4"),
            _check("a2", float(s.coeffs[2]), -21 / 16, 1e-10, "second-order quartic shift -21/16"),
        ]
        rows = [[k, float(abs(c))] for k, c in enumerate(s.coeffs) if k >= 1]
        return outputs, targets, (["n", "abs_a_n"], rows), {"x": "n", "y": "abs_a_n", "logy": True}
    if name == "wvn":
        r = np.linspace(1e-3, 100.0, 200_001)
        res = float(np.max(np.abs(md.wvn_residual(r))))
        tail_r = np.linspace(10.0, 100.0, 9001)
        tail = np.abs(md.wvn_potential(tail_r) + 8 * np.sin(2 * tail_r) / tail_r) * tail_r**2
        outputs = {"residual": res, "tail_constant": float(tail.max())}
        targets = [_check("residual", res, 0.0, 1e-6, "embedded eigenvalue at energy 1")]
        return outputs, targets, None, None
    if name == "cusp":
        Z, h = p["Z"], p["h"]
        R = p["R"] or 80.0 / Z
        n = int(round(R / h)) - 1
        c = md.hydrogen_cusp(R, n, Z)
        outputs = {"ratio": c.ratio, "h": c.h, "E": c.E, "reference_error": c.reference_error}
        targets = [_check("cusp_ratio", c.ratio, -Z / 2, 5 * c.h, "Kato cusp condition psi'(0) = -(Z/2) psi(0)")]
        return outputs, targets, None, None
    if name in ("hardy", "rellich"):
        R = p["R"] or 1e20
        n = p["n"] or 4000
        if name == "hardy":
            nu = p["nu"] or 3
            val, target, tol, cite = md.hardy_constant(nu, R, n), (nu - 2) ** 2 / 4, 0.02, "Hardy constant (nu-2)^2/4"
        else:
            nu = p["nu"] or 5
            val, target, tol, cite = md.rellich_constant(nu, R, n), nu * (nu - 4) / 4, 0.05, "Rellich constant nu(nu-4)/4"
        outputs = {"nu": nu, "value": val, "target": target}
        return outputs, [_check("constant", val, target, tol, cite, relative=True)], None, None
    if name == "rank-one":
        if p["beta"] is not None:
            E = md.rank_one_eigenvalue(p["beta"], p["psi_kind"])
            return {"beta": p["beta"], "E": E}, [], None, None
        f = md.rank_one_fit(p["psi_kind"])
        outputs = {"coefficients": f.coefficients}
        if p["psi_kind"] == "inv_sqrt":
            targets.append(_check("sqrt_coefficient", f.coefficients["sqrt"], 1.0, 1e-2, "rank-one model: beta^(1/2) onset"))
        elif p["psi_kind"] == "inv":
            targets.append(_check("linear_coefficient", f.coefficients["linear"], 1.0, 1e-2, "rank-one model: linear onset"))
        rows = [[float(b), float(e + 1)] for b, e in zip(f.betas, f.energies)]
        return outputs, targets, (["beta", "E_plus_1"], rows), {"x": "beta", "y": "E_plus_1", "logx": True, "logy": True}
    if name == "half-pi":
        r = md.kato_half_pi(p["k_min"], p["k_max"], p["grid"])
        outputs = {"top_eigenvalue": r.top_eigenvalue, "a9_integral": r.a9_integral, "odd_sum": r.odd_sum}
        targets = [
            _check("top_eigenvalue", r.top_eigenvalue, math.pi / 2, 0.01, "Kato |x|^-1 inequality constant pi/2", relative=True),
            _check("a9_integral", r.a9_integral, math.pi**2 / 4, 1e-6, "integral of log((1+x)/(1-x))/x = pi^2/4"),
            _check("odd_sum", r.odd_sum, math.pi**2 / 8, 1e-8, "Euler sum over odd squares = pi^2/8"),
        ]
        return outputs, targets, None, None
    raise ConfigError(f"models.name: unknown model {name!r}")  # pragma: no cover


RUNNERS: dict[str, Callable] = {
    "perturb": _run_perturb,
    "temple": _run_temple,
    "projections": _run_projections,
    "adiabatic": _run_adiabatic,
    "resum": _run_resum,
    "models": _run_models,
}


# configuration


def _validate_params(sub: str, raw: dict, where: str) -> dict:
    schema = SCHEMAS[sub]
    out = {}
    for k, v in raw.items():
        if k not in schema:
            raise ConfigError(f"{where}.{k}: unknown key for {sub}")
        prm = schema[k]
        out[k] = _parse_value(prm.kind, v, f"{where}.{k}", prm.choices)
    return out


def _parse_sweep(sub: str, axis: str | list | None, where: str) -> tuple[str, list] | None:
    if axis is None:
        return None
    if isinstance(axis, list):
        if len(axis) > 1:
            raise ConfigError("one sweep axis only")
        if not axis:
            return None
        axis = axis[0]
    if "=" not in axis:
        raise ConfigError(f"{where}: expected key=v1,v2,...")
    key, _, vals = axis.partition("=")
    key = key.strip().replace("-", "_")
    if key not in SCHEMAS[sub]:
        raise ConfigError(f"{where}.{key}: unknown key for {sub}")
    prm = SCHEMAS[sub][key]
    items = [v.strip() for v in vals.split(";" if prm.kind in ("floats", "ints", "pair") else ",") if v.strip()]
    return key, [_parse_value(prm.kind, v, f"{where}.{key}", prm.choices) for v in items]


def load_config(path: str) -> dict:
    """Read a flat TOML file into a plain dict."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: {exc}") from None


def build_config(sub: str, file_cfg: dict | None = None, cli: dict | None = None, env: dict | None = None) -> ExperimentConfig:
    """Merge defaults, config file, environment and command-line values."""
    if sub not in SCHEMAS:
        raise ConfigError(f"subcommand: unknown {sub!r}")
    file_cfg = dict(file_cfg or {})
    cli = dict(cli or {})
    env = os.environ if env is None else env
    if "subcommand" in file_cfg and file_cfg.pop("subcommand") != sub:
        raise ConfigError("config.subcommand: does not match the command line")
    params = {k: prm.default for k, prm in SCHEMAS[sub].items()}
    reserved_file = {k: file_cfg.pop(k) for k in list(file_cfg) if k in RESERVED}
    params.update(_validate_params(sub, file_cfg, "config"))
    reserved_cli = {k: cli.pop(k) for k in list(cli) if k in RESERVED}
    params.update(_validate_params(sub, {k: v for k, v in cli.items() if v is not None}, "args"))

    seed = DEFAULT_SEED
    if "seed" in reserved_file:
        seed = _parse_value("int", reserved_file["seed"], "config.seed")
    if env.get("KATOLAB_SEED"):
        seed = _parse_value("int", env["KATOLAB_SEED"], "env.KATOLAB_SEED")
    if reserved_cli.get("seed") is not None:
        seed = _parse_value("int", reserved_cli["seed"], "args.seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")

    fmt = reserved_cli.get("format") or reserved_file.get("format")
    out = reserved_cli.get("out") or reserved_file.get("out")
    if fmt is None:
        fmt = "csv" if out and str(out).endswith(".csv") else "json"
    if fmt not in ("json", "csv"):
        raise ConfigError(f"format: {fmt!r} not one of ['json', 'csv']")
    sweep_cli = reserved_cli.get("sweep")
    sweep_file = reserved_file.get("sweep")
    sweep_axis = sweep_cli if sweep_cli else sweep_file
    sw = _parse_sweep(sub, sweep_axis, "sweep")
    workers = int(reserved_cli.get("workers") or reserved_file.get("workers") or 1)
    return ExperimentConfig(sub, params, seed, out, fmt, sw, max(1, workers))


# running


def _experiment_id(sub: str, params: dict, seed: int) -> str:
    blob = json.dumps({"sub": sub, "params": _jsonable(params), "seed": seed}, sort_keys=True)
    return f"{sub}-{hashlib.sha256(blob.encode()).hexdigest()[:12]}"


def run(config: ExperimentConfig) -> ResultRecord:
    """Run one experiment and return its record (nothing is written)."""
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    outputs, targets, table, plot = RUNNERS[config.subcommand](dict(config.params), rng)
    wall = time.perf_counter() - t0
    return ResultRecord(
        experiment=_experiment_id(config.subcommand, config.params, config.seed),
        subcommand=config.subcommand,
        inputs=dict(config.params),
        outputs=outputs,
        targets=targets,
        table=table,
        plot=plot,
        seed=config.seed,
        wall_time=wall,
    )


def sweep(config: ExperimentConfig) -> list[ResultRecord]:
    """Run ``config`` once per value of its single sweep axis, in range order.

    Points share nothing, so they run on a thread pool of ``config.workers``.
    """
    if config.sweep is None:
        raise ConfigError("sweep: no sweep axis given")
    key, values = config.sweep
    configs = []
    for v in values:
        params = dict(config.params)
        params[key] = v
        configs.append(ExperimentConfig(config.subcommand, params, config.seed, None, config.format, None, 1))
    if config.workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(run, configs))
    return [run(c) for c in configs]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_fmt(x) for x in v)
    if isinstance(v, dict):
        return ";".join(f"{k}={_fmt(x)}" for k, x in sorted(v.items()))
    return str(v)


def _csv_text(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _scalar_items(outputs: dict) -> list[tuple[str, Any]]:
    return [(k, v) for k, v in sorted(outputs.items()) if not isinstance(v, (list, tuple, np.ndarray, dict))]


def render(records: ResultRecord | list[ResultRecord], fmt: str, sweep_key: str | None = None) -> str:
    """Serialize a record or a sweep of records as JSON or CSV text."""
    if fmt == "json":
        if isinstance(records, list):
            payload = {"sweep": sweep_key, "records": [r.as_dict() for r in records]}
        else:
            payload = records.as_dict()
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if isinstance(records, list):
        if not records:
            return _csv_text([sweep_key or "value"], [])
        keys = [k for k, _ in _scalar_items(records[0].outputs) if k != sweep_key]
        cols = [sweep_key] + keys + ["passed"]
        rows = [[r.inputs[sweep_key]] + [r.outputs.get(k) for k in keys] + [r.passed] for r in records]
        return _csv_text(cols, rows)
    if records.table is not None:
        return _csv_text(*records.table)
    items = _scalar_items(records.outputs)
    return _csv_text([k for k, _ in items] + ["passed"], [[v for _, v in items] + [records.passed]])


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".katolab-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _figure_for(records, sweep_key: str | None, out: str) -> str | None:
    from .plotting import plot_table

    png = os.path.splitext(out)[0] + ".png"
    if isinstance(records, list):
        if not records:
            return None
        keys = [
            k
            for k, v in _scalar_items(records[0].outputs)
            if k != sweep_key and isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
        ]
        if not keys or not all(isinstance(r.inputs[sweep_key], (int, float)) for r in records):
            return None
        y = keys[0]
        rows = [[float(r.inputs[sweep_key]), float(r.outputs[y])] for r in records]
        return plot_table(png, [sweep_key, y], rows, sweep_key, y, title=f"{records[0].subcommand}: {y} vs {sweep_key}")
    if records.table is None or records.plot is None:
        return None
    cols, rows = records.table
    pl = records.plot
    return plot_table(png, cols, rows, pl["x"], pl["y"], pl.get("logx", False), pl.get("logy", False),
                      title=records.subcommand)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="katolab", description="Numerical spectral-perturbation laboratory.")
    ap.add_argument("--version", action="version", version=f"katolab {__version__}")
    subs = ap.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    for sub, schema in SCHEMAS.items():
        sp = subs.add_parser(sub, help=f"run the {sub} experiment")
        if sub == "models":
            sp.add_argument("model", nargs="?", choices=schema["name"].choices, help="model name (same as --name)")
        for key, prm in schema.items():
            flags = {f"--{key}", f"--{key.replace('_', '-')}"}
            if key.lower() not in schema:
                flags.add(f"--{key.lower()}")
            sp.add_argument(*sorted(flags), dest=key, default=None, help=prm.help)
        sp.add_argument("--config", help="flat TOML file with parameter values")
        sp.add_argument("--seed", help="random seed (overrides config and KATOLAB_SEED)")
        sp.add_argument("--out", help="output file; stdout when omitted")
        sp.add_argument("--format", choices=("json", "csv"), help="output format (default from --out suffix)")
        sp.add_argument("--sweep", action="append", help="key=v1,v2,... (one axis; list values separated by ';')")
        sp.add_argument("--workers", type=int, help="threads for sweeps")
    return ap


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit status."""
    ap = _build_parser()
    args = vars(ap.parse_args(argv))
    sub = args.pop("subcommand")
    model = args.pop("model", None)
    cfg_path = args.pop("config", None)
    if model is not None:
        if args.get("name") not in (None, model):
            print("katolab: error: args.name: conflicts with the positional model name", file=sys.stderr)
            return 1
        args["name"] = model
    try:
        file_cfg = load_config(cfg_path) if cfg_path else {}
        config = build_config(sub, file_cfg, args)
        if config.sweep is not None:
            records = sweep(config)
            text = render(records, config.format, config.sweep[0])
            passed = all(r.passed for r in records)
        else:
            records = run(config)
            text = render(records, config.format)
            passed = records.passed
        if config.out:
            _atomic_write(config.out, text)
            if config.format == "csv":
                _figure_for(records, config.sweep[0] if config.sweep else None, config.out)
        else:
            sys.stdout.write(text)
    except KatolabError as exc:
        print(f"katolab: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"katolab: error: {exc}", file=sys.stderr)
        return 1
    return 0 if passed else 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
