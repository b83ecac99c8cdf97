"""Finite-difference cross-check of the jet pipeline.

Everything here is rebuilt from plain float evaluations of the embedding and
the curve coordinates.  First derivatives use central differences with step
``h``; second derivatives (and partials of the metric, which differentiate
an already differenced quantity) use ``10 h`` to stay above the rounding
floor.  Deviation is ``|fd - jet| / max(1, |jet|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from darboux.geom import CurveDerivatives, CurveOnSurface, FirstForm, SurfacePatch, sample_curve
from darboux.theorems import compute_A

STEP_RANGE = (1e-7, 1e-3)
DEFAULT_STEP = 1e-5
DEFAULT_TOL = 1e-5
SWEEP_STEPS = (1e-3, 1e-4, 1e-5)
PLATEAU_RATIO = 10.0
QUANTITIES = ("E", "F", "G", "E_u", "E_v", "F_u", "F_v", "G_u", "G_v", "kappa", "kappa_n", "A")


class OracleError(ValueError):
    """Unusable step: outside the allowed range or below the noise floor."""


def _metric(patch: SurfacePatch, u: float, v: float, h: float):
    eu = (patch.point(u + h, v) - patch.point(u - h, v)) / (2 * h)
    ev = (patch.point(u, v + h) - patch.point(u, v - h)) / (2 * h)
    return eu, ev, float(eu @ eu), float(eu @ ev), float(ev @ ev)


def fd_first_form(patch: SurfacePatch, u: float, v: float, h: float) -> FirstForm:
    H = 10 * h
    _, _, E, F, G = _metric(patch, u, v, h)
    up, um = _metric(patch, u + H, v, h)[2:], _metric(patch, u - H, v, h)[2:]
    vp, vm = _metric(patch, u, v + H, h)[2:], _metric(patch, u, v - H, h)[2:]
    du = [(a - b) / (2 * H) for a, b in zip(up, um)]
    dv = [(a - b) / (2 * H) for a, b in zip(vp, vm)]
    return FirstForm(E, F, G, du[0], dv[0], du[1], dv[1], du[2], dv[2])


def fd_sample(patch: SurfacePatch, curve: CurveOnSurface, t: float, h: float) -> dict:
    H = 10 * h
    u, v = curve.uv(t)
    I = fd_first_form(patch, u, v, h)
    eu, ev, *_ = _metric(patch, u, v, h)
    n = np.cross(eu, ev)
    U = n / np.linalg.norm(n)

    def gamma(x):
        return patch.point(*curve.uv(x))

    g_t = (gamma(t + h) - gamma(t - h)) / (2 * h)
    g_tt = (gamma(t + H) - 2 * gamma(t) + gamma(t - H)) / (H * H)
    sigma = float(np.linalg.norm(g_t))
    kappa = float(np.linalg.norm(np.cross(g_t, g_tt))) / sigma**3
    kappa_n = float(g_tt @ U) / sigma**2

    (up_, vp_), (um_, vm_) = curve.uv(t + h), curve.uv(t - h)
    (uP, vP), (uM, vM) = curve.uv(t + H), curve.uv(t - H)
    u_t, v_t = (up_ - um_) / (2 * h), (vp_ - vm_) / (2 * h)
    u_tt, v_tt = (uP - 2 * u + uM) / (H * H), (vP - 2 * v + vM) / (H * H)
    sigma_t = float(g_t @ g_tt) / sigma
    s3 = sigma**3
    d = CurveDerivatives(
        t, u, v, u_t, u_tt, v_t, v_tt, sigma, sigma_t,
        u_t / sigma, (u_tt * sigma - u_t * sigma_t) / s3,
        v_t / sigma, (v_tt * sigma - v_t * sigma_t) / s3,
    )
    out = {q: getattr(I, q) for q in QUANTITIES[:9]}
    out.update(kappa=kappa, kappa_n=kappa_n, A=compute_A(I, d))
    return out


def jet_values(fs) -> dict:
    out = {q: getattr(fs.first, q) for q in QUANTITIES[:9]}
    out.update(kappa=fs.kappa, kappa_n=fs.kappa_n, A=compute_A(fs.first, fs.derivs))
    return out


def deviation(fd: float, jet: float) -> float:
    return abs(fd - jet) / max(1.0, abs(jet))


@dataclass
class CurveComparison:
    curve: str
    step: float
    worst: dict
    worst_t: dict

    @property
    def max(self) -> float:
        return max(self.worst.values())


def compare_curve(patch: SurfacePatch, curve: CurveOnSurface, h: float, samples=None) -> CurveComparison:
    samples = samples if samples is not None else sample_curve(patch, curve)
    worst = dict.fromkeys(QUANTITIES, 0.0)
    where = dict.fromkeys(QUANTITIES, samples[0].t)
    for fs in samples:
        exact = jet_values(fs)
        approx = fd_sample(patch, curve, fs.t, h)
        for q in QUANTITIES:
            dev = deviation(approx[q], exact[q])
            if dev > worst[q]:
                worst[q], where[q] = dev, fs.t
    return CurveComparison(curve.name, h, worst, where)


@dataclass
class OracleReport:
    step: float
    tolerance: float
    curves: list
    coarse: list = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max((c.max for c in self.curves), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance

    def summary(self) -> dict:
        return {
            "step": self.step,
            "tolerance": self.tolerance,
            "worst_deviation": self.worst,
            "passed": self.passed,
            "curves": {
                c.curve: {"worst": c.worst, "worst_t": c.worst_t, "max": c.max} for c in self.curves
            },
        }


def _check_step(h: float):
    lo, hi = STEP_RANGE
    if not (lo <= h <= hi) or not math.isfinite(h):
        raise OracleError(f"fd step {h!r} outside [{lo:g}, {hi:g}]")


def run_oracle(scenario, h: float = DEFAULT_STEP, tol: float = DEFAULT_TOL) -> OracleReport:
    """Compare every scenario curve against finite differences at step ``h``.

    The step is also rerun at ``10 h``; if the finer step is worse and out of
    tolerance the deviation is noise-dominated and :class:`OracleError` is
    raised instead of a verdict.
    """
    _check_step(h)
    fine, coarse = [], []
    for name in sorted(scenario.curves):
        patch = scenario.surfaces[scenario.curve_surface[name]]
        curve = scenario.curves[name]
        samples = sample_curve(patch, curve)
        f = compare_curve(patch, curve, h, samples)
        c = compare_curve(patch, curve, 10 * h, samples)
        if f.max > c.max and f.max > tol:
            raise OracleError(
                f"curve {name!r}: deviation {f.max:.3g} at step {h:g} exceeds {c.max:.3g} at step {10 * h:g}; "
                "step is below the rounding floor"
            )
        fine.append(f)
        coarse.append(c)
    return OracleReport(h, tol, fine, coarse)


def sweep(scenario, steps=SWEEP_STEPS) -> dict:
    """Worst deviation per step with plateau flags (reduction under 10x)."""
    for h in steps:
        _check_step(h)
    rows = []
    for name in sorted(scenario.curves):
        patch = scenario.surfaces[scenario.curve_surface[name]]
        curve = scenario.curves[name]
        samples = sample_curve(patch, curve)
        devs = [compare_curve(patch, curve, h, samples).max for h in steps]
        flags = [False] + [prev < PLATEAU_RATIO * cur for prev, cur in zip(devs, devs[1:])]
        rows.append({"curve": name, "steps": list(steps), "worst": devs, "plateau": flags})
    return {"curves": rows, "plateau": any(any(r["plateau"]) for r in rows)}
