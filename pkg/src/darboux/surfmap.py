"""Correspondences between two patches over a shared ``(u, v)`` chart.

The map is identity in parameters: ``eta(u, v) -> eta_bar(u, v)``, so the
pushforward sends ``eta_u`` to ``eta_bar_u`` and ``eta_v`` to ``eta_bar_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from darboux import jets
from darboux.expr import Expr, evaluate, parse
from darboux.geom import (
    CurveOnSurface,
    FirstForm,
    FrameSample,
    PatchJet,
    SurfacePatch,
    first_form,
    samples_at,
)
from darboux.rectify import PositionDecomposition

ISOMETRY = "isometry"
HOMOTHETY = "homothety"
CONFORMAL = "conformal"
GENERAL = "general"
# most specific first
KINDS = (ISOMETRY, HOMOTHETY, CONFORMAL, GENERAL)


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceCorrespondence:
    source: SurfacePatch
    target: SurfacePatch
    rho: Optional[Expr] = None
    name: str = ""

    @classmethod
    def build(cls, source, target, rho: str | None = None, name: str = ""):
        return cls(source, target, parse(rho, ("u", "v")) if rho is not None else None, name)

    def domain(self) -> tuple[tuple[float, float], tuple[float, float]]:
        (a0, a1), (b0, b1) = self.source.u_range, self.source.v_range
        (c0, c1), (d0, d1) = self.target.u_range, self.target.v_range
        u = (max(a0, c0), min(a1, c1))
        v = (max(b0, d0), min(b1, d1))
        if not (u[0] < u[1] and v[0] < v[1]):
            raise MapError(f"map {self.name or '?'}: source and target domains do not overlap")
        if not all(map(math.isfinite, u + v)):
            raise MapError(f"map {self.name or '?'}: sample grid needs a bounded domain")
        return u, v

    def rho_jet(self, u: float, v: float) -> jets.Jet2:
        """Order-1 jet ``(rho, rho_u, rho_v)``: declared if given, else ``sqrt(Ebar/E)``."""
        if self.rho is not None:
            r = evaluate(self.rho, {"u": jets.seed("u", u, 1), "v": jets.seed("v", v, 1)})
            if not isinstance(r, jets.Jet):
                r = jets.Jet2((r, 0.0, 0.0))
            if not r.value > 0:
                raise MapError(f"dilation of map {self.name or '?'} is not positive at ({u:.6g}, {v:.6g})")
            return r
        return estimated_rho_jet(first_form(self.source, u, v), first_form(self.target, u, v))


def estimated_rho_jet(I: FirstForm, Ibar: FirstForm) -> jets.Jet2:
    return jets.sqrt(Ibar.jet("E") / I.jet("E"))


def sample_grid(corr: SurfaceCorrespondence, n: int = 9) -> list[tuple[float, float]]:
    (u0, u1), (v0, v1) = corr.domain()
    return [(float(u), float(v)) for u in np.linspace(u0, u1, n) for v in np.linspace(v0, v1, n)]


@dataclass(frozen=True)
class MapClassification:
    kind: str
    rho2: np.ndarray
    residuals: dict
    tolerance: float
    c2: Optional[float] = None

    def at_least(self, kind: str) -> bool:
        """True if the map is ``kind`` or a more specific class."""
        return KINDS.index(self.kind) <= KINDS.index(kind)


def classify_map(
    corr: SurfaceCorrespondence,
    grid: Sequence[tuple[float, float]] | None = None,
    tol: float = 1e-9,
) -> MapClassification:
    """Most specific of isometry / homothety / conformal / general.

    ``rho2 = Ebar/E`` per sample; ``F`` and ``G`` are residual witnesses,
    normalized by ``1 + Ebar + Gbar``.
    """
    grid = sample_grid(corr) if grid is None else grid
    rho2, res_f, res_g, res_decl = [], [], [], []
    for u, v in grid:
        I = first_form(corr.source, u, v)
        J = first_form(corr.target, u, v)
        r2 = J.E / I.E
        scale = 1.0 + J.E + J.G
        rho2.append(r2)
        res_f.append(abs(J.F - r2 * I.F) / scale)
        res_g.append(abs(J.G - r2 * I.G) / scale)
        if corr.rho is not None:
            res_decl.append(abs(corr.rho_jet(u, v).value ** 2 - r2))
    rho2 = np.array(rho2)
    mean = float(rho2.mean())
    residuals = {
        "F": max(res_f),
        "G": max(res_g),
        "spread": float(rho2.max() - rho2.min()) / mean,
        "isometry": float(np.abs(rho2 - 1.0).max()),
    }
    if res_decl:
        residuals["declared_rho2"] = max(res_decl)
    if max(residuals["F"], residuals["G"]) > tol:
        kind = GENERAL
    elif residuals["spread"] > tol:
        kind = CONFORMAL
    elif residuals["isometry"] > tol:
        kind = HOMOTHETY
    else:
        kind = ISOMETRY
    c2 = mean if kind in (ISOMETRY, HOMOTHETY) else None
    return MapClassification(kind, rho2, residuals, tol, c2)


# the six partial-transfer identities: barred partial = 2 rho rho_x C + rho^2 C_x
_PARTIALS = [(c, x) for c in "EFG" for x in "uv"]


def conformal_partial_check(
    corr: SurfaceCorrespondence,
    grid: Sequence[tuple[float, float]] | None = None,
    classification: MapClassification | None = None,
) -> dict:
    """Residuals of ``Cbar_x = 2 rho rho_x C + rho^2 C_x`` for C in E, F, G.

    Residuals are normalized by ``1 + |lhs| + |rhs|``.  Returns per-identity
    maxima and the per-sample maxima.
    """
    if corr.rho is None:
        classification = classification or classify_map(corr, grid)
        if classification.kind == GENERAL:
            raise MapError(
                f"map {corr.name or '?'} is not conformal and declares no dilation"
            )
    grid = sample_grid(corr) if grid is None else grid
    per_identity = {f"{c}bar_{x}": 0.0 for c, x in _PARTIALS}
    per_sample = []
    for u, v in grid:
        I = first_form(corr.source, u, v)
        J = first_form(corr.target, u, v)
        r = corr.rho_jet(u, v)
        worst = 0.0
        for c, x in _PARTIALS:
            rx = r.d_u if x == "u" else r.d_v
            lhs = getattr(J, f"{c}_{x}")
            rhs = 2 * r.value * rx * getattr(I, c) + r.value**2 * getattr(I, f"{c}_{x}")
            res = abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
            key = f"{c}bar_{x}"
            per_identity[key] = max(per_identity[key], res)
            worst = max(worst, res)
        per_sample.append(worst)
    return {"identities": per_identity, "per_sample": per_sample, "max": max(per_sample)}


# -- pushforward --------------------------------------------------------------


def push_vector(w: np.ndarray, src: PatchJet, I: FirstForm, tgt: PatchJet) -> np.ndarray:
    """``f_* w`` for an ambient vector ``w`` tangent to the source at this point."""
    a, b = np.linalg.solve(I.matrix, [float(w @ src.eu), float(w @ src.ev)])
    return a * tgt.eu + b * tgt.ev


@dataclass(frozen=True)
class PushedSample:
    """Source sample, barred sample at the same parameter, and pushed vectors.

    ``pushed`` is ``f_*(lam T + mu P)``; ``V`` is ``pushed / rho_hat`` with
    ``rho_hat = sqrt(Ebar/E)``, which equals ``lam Tbar + mu Pbar`` whenever
    the map is conformal with that factor.
    """

    source: FrameSample
    bar: FrameSample
    lam: float
    mu: float
    rho_hat: float
    push_T: np.ndarray
    push_P: np.ndarray
    pushed: np.ndarray
    V: np.ndarray

    @property
    def gamma_tan(self) -> np.ndarray:
        return self.lam * self.source.T + self.mu * self.source.P

    @property
    def gamma_pos(self) -> np.ndarray:
        return self.bar.point


@dataclass(frozen=True)
class PushedCurve:
    samples: list[PushedSample]
    length: float
    length_bar: float
    notes: list = field(default_factory=list)


def pushforward_curve(
    corr: SurfaceCorrespondence,
    curve: CurveOnSurface,
    samples: Sequence[FrameSample],
    decomposition: PositionDecomposition,
) -> PushedCurve:
    """Barred frames of ``eta_bar(u(t), v(t))`` (own arc length) and pushed vectors."""
    ts = [fs.t for fs in samples]
    bars = samples_at(corr.target, curve, ts)
    out = []
    for fs, fb, lam, mu in zip(samples, bars, decomposition.lam, decomposition.mu):
        I = fs.first
        rho_hat = math.sqrt(fb.first.E / I.E)
        push_T = push_vector(fs.T, fs.jet, I, fb.jet)
        push_P = push_vector(fs.P, fs.jet, I, fb.jet)
        pushed = lam * push_T + mu * push_P
        out.append(
            PushedSample(fs, fb, float(lam), float(mu), rho_hat, push_T, push_P, pushed, pushed / rho_hat)
        )
    return PushedCurve(
        out,
        length=samples[-1].s - samples[0].s,
        length_bar=bars[-1].s - bars[0].s,
    )
