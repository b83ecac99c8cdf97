"""Execute a scenario and assemble the run report."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from darboux import __version__
from darboux.expr import ExprError
from darboux.geom import GeometryError, sample_curve
from darboux.rectify import classify_darboux_rectifying, decompose_position
from darboux.scenario import CheckSpec, Scenario, ScenarioError
from darboux.surfmap import MapError, classify_map
from darboux.theorems import (
    CHECKERS,
    PreconditionError,
    check_frames,
    check_metric_identities,
    check_partials,
    prepare,
)

REPORT_SCHEMA = "darboux-report/1"
CSV_COLUMNS = ("t", "s", "u", "v", "x", "y", "z", "kappa", "kappa_g", "kappa_n", "tau_g", "alpha", "lambda", "mu", "nu")
DRAWN = ("T3.2", "T4.2")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (ScenarioError, PreconditionError, GeometryError, MapError, ExprError)


class ConfigurationError(ValueError):
    pass


def _plain(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"


class _Context:
    """Per-run caches; samples and classifications are computed once."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self._samples, self._maps, self._mapped = {}, {}, {}

    def samples(self, curve: str):
        if curve not in self._samples:
            patch = self.sc.surfaces[self.sc.curve_surface[curve]]
            self._samples[curve] = sample_curve(patch, self.sc.curves[curve])
        return self._samples[curve]

    def classification(self, name: str):
        if name not in self._maps:
            self._maps[name] = classify_map(self.sc.maps[name])
        return self._maps[name]

    def mapped(self, map_name: str, curve: str):
        key = (map_name, curve)
        if key not in self._mapped:
            self._mapped[key] = prepare(self.sc.maps[map_name], self.sc.curves[curve], self.classification(map_name))
        return self._mapped[key]


def _rectifying_summary(samples) -> dict:
    verdict = classify_darboux_rectifying(decompose_position(samples))
    return {
        "classification": verdict.label,
        "max_abs_nu": verdict.max_abs_nu,
        "witness_index": verdict.witness_index,
        "witness_t": samples[verdict.witness_index].t,
        "witness_nu": verdict.witness_nu,
        "tolerance": verdict.tolerance,
    }


def _map_summary(cl) -> dict:
    return {"kind": cl.kind, "c2": cl.c2, "residuals": cl.residuals, "tolerance": cl.tolerance}


def _run_check(ctx: _Context, spec: CheckSpec, tol: float | None, seed: int) -> dict:
    sc = ctx.sc
    tol = spec.tol if spec.tol is not None else tol
    kw = {} if tol is None else {"tol": tol}
    if spec.check == "frames":
        patch = sc.surfaces[sc.curve_surface[spec.curve]]
        return check_frames(patch, sc.curves[spec.curve], ctx.samples(spec.curve)).summary()
    if spec.check == "metric-identities":
        patch = sc.surfaces[spec.surface]
        (u0, u1), (v0, v1) = patch.u_range, patch.v_range
        grid = [(float(u), float(v)) for u in np.linspace(u0, u1, 9) for v in np.linspace(v0, v1, 9)]
        return check_metric_identities(patch, grid, **kw).summary()
    if spec.check == "rectifying":
        out = _rectifying_summary(ctx.samples(spec.curve))
        expect = spec.expect or "rectifying"
        out.update(expect=expect, verdict="pass" if out["classification"] == expect else "fail")
        return out
    if spec.check == "map":
        out = _map_summary(ctx.classification(spec.map))
        ok = spec.expect is None or out["kind"] == spec.expect
        out.update(expect=spec.expect, verdict="pass" if ok else "fail")
        return out
    if spec.check == "conformal-partials":
        corr = sc.maps[spec.map]
        return check_partials(corr, classification=ctx.classification(spec.map), **kw).summary()
    # theorem checkers
    mc = ctx.mapped(spec.map, spec.curve)
    if spec.check in DRAWN:
        kw["rng"] = np.random.default_rng([seed, spec.index])
        kw["tangents"] = spec.tangents
        if spec.draws is not None:
            kw["draws"] = spec.draws
    fn = CHECKERS[spec.check]
    return fn(sc.maps[spec.map], sc.curves[spec.curve], mapped=mc, **kw).summary()


@dataclass
class RunOutcome:
    report: dict
    exit_code: int

    @property
    def text(self) -> str:
        return dumps(self.report)


def run_scenario(sc: Scenario, *, tol: float | None = None, seed: int | None = None) -> RunOutcome:
    """Run every check once.  Configuration problems raise ConfigurationError."""
    started = time.perf_counter()
    seed = sc.seed if seed is None else seed
    ctx = _Context(sc)
    try:
        classifications = {
            "curves": {name: _rectifying_summary(ctx.samples(name)) for name in sorted(sc.curves)},
            "maps": {name: _map_summary(ctx.classification(name)) for name in sorted(sc.maps)},
        }
    except CONFIG_ERRORS as exc:
        raise ConfigurationError(f"{type(exc).__name__}: {exc}") from exc
    checks = []
    for spec in sc.checks:
        try:
            result = _run_check(ctx, spec, tol, seed)
        except CONFIG_ERRORS as exc:
            raise ConfigurationError(f"{spec.label}: {type(exc).__name__}: {exc}") from exc
        except ArithmeticError as exc:  # route disagreement: a failed verdict, not bad input
            result = {"verdict": "fail", "error": f"{type(exc).__name__}: {exc}"}
        checks.append({"index": spec.index, "check": spec.check, "label": spec.label, **result})
    passed = all(c["verdict"] == "pass" for c in checks)
    report = {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "scenario": {"name": sc.name, "digest": sc.digest},
        "seed": seed,
        "checks": checks,
        "classifications": classifications,
        "passed": passed,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    return RunOutcome(report, EXIT_PASS if passed else EXIT_FAIL)


def strip_clock(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "wall_clock_seconds"}


# -- sample tables --------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def curve_rows(samples) -> list[list[str]]:
    dec = decompose_position(samples)
    rows = []
    for fs, lam, mu, nu in zip(samples, dec.lam, dec.mu, dec.nu):
        values = (fs.t, fs.s, fs.u, fs.v, *fs.point, fs.kappa, fs.kappa_g, fs.kappa_n, fs.tau_g, fs.alpha, lam, mu, nu)
        rows.append([_fmt(x) for x in values])
    return rows


def write_table(samples, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(curve_rows(samples))
    return path


def export_curve(sc: Scenario, curve: str, path: str | Path) -> Path:
    if curve not in sc.curves:
        raise ScenarioError(f"unknown curve {curve!r} (have: {', '.join(sorted(sc.curves)) or 'none'})")
    patch = sc.surfaces[sc.curve_surface[curve]]
    return write_table(sample_curve(patch, sc.curves[curve]), path)


def write_tables(sc: Scenario, csv_dir: str | Path) -> list[Path]:
    ctx = _Context(sc)
    return [write_table(ctx.samples(name), Path(csv_dir) / f"{name}.csv") for name in sorted(sc.curves)]
