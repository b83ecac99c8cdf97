"""Fundamental forms, Frenet and Darboux frames of curves on parametric patches.

A :class:`SurfacePatch` is three DSL expressions in ``(u, v)``; a
:class:`CurveOnSurface` is two DSL expressions in ``t``.  All derivatives are
propagated with jets.  Conventions:

* ``U = (eta_u x eta_v) / |eta_u x eta_v|`` with the patch's own ``(u, v)``
  order; no reorientation.
* ``P = U x T``, ``B = T x N``.
* ``kappa_g = T'.P``, ``kappa_n = T'.U``, ``tau_g = P'.U`` (primes are arc
  length derivatives).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from darboux import jets
from darboux.expr import Expr, evaluate, parse

REGULARITY_TOL = 1e-12
SPEED_TOL = 1e-10
KAPPA_TOL = 1e-8
UNIT_SPEED_TOL = 1e-6

REPARAMETRIZE = "reparametrize"
ASSERT_UNIT_SPEED = "assert-unit-speed"


class GeometryError(ValueError):
    """Base class for geometric failures at a specific location."""


class RegularityError(GeometryError):
    def __init__(self, u: float, v: float, det: float, patch: str = ""):
        self.u, self.v, self.det = u, v, det
        where = f" of {patch!r}" if patch else ""
        super().__init__(
            f"patch{where} is degenerate at (u, v) = ({u:.6g}, {v:.6g}): "
            f"EG - F^2 = {det:.3g}"
        )


class StationaryPointError(GeometryError):
    pass


class UnitSpeedError(GeometryError):
    pass


class DomainError(GeometryError):
    pass


class ConsistencyError(ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""


def _vec(x, y, z) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


# -- patches and curves -----------------------------------------------------


@dataclass(frozen=True)
class PatchJet:
    """Position and partials of a patch at one ``(u, v)``."""

    u: float
    v: float
    pos: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    euu: np.ndarray
    euv: np.ndarray
    evv: np.ndarray


@dataclass(frozen=True)
class SurfacePatch:
    x: Expr
    y: Expr
    z: Expr
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    name: str = ""

    @classmethod
    def from_strings(
        cls,
        x: str,
        y: str,
        z: str,
        u_range=(-math.inf, math.inf),
        v_range=(-math.inf, math.inf),
        name: str = "",
    ) -> "SurfacePatch":
        uv = ("u", "v")
        return cls(
            parse(x, uv),
            parse(y, uv),
            parse(z, uv),
            (float(u_range[0]), float(u_range[1])),
            (float(v_range[0]), float(v_range[1])),
            name,
        )

    @property
    def components(self) -> tuple[Expr, Expr, Expr]:
        return self.x, self.y, self.z

    def contains(self, u: float, v: float, slack: float = 1e-12) -> bool:
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        return u0 - slack <= u <= u1 + slack and v0 - slack <= v <= v1 + slack

    def point(self, u: float, v: float) -> np.ndarray:
        env = {"u": float(u), "v": float(v)}
        return _vec(*(float(evaluate(c, env)) for c in self.components))

    def jets(self, u: float, v: float) -> PatchJet:
        env = {"u": jets.seed("u", u), "v": jets.seed("v", v)}
        cs = []
        for c in self.components:
            j = evaluate(c, env)
            if not isinstance(j, jets.Jet):  # constant component
                j = env["u"].constant(j)
            cs.append(j.c)
        a = np.array(cs)  # rows x, y, z; columns value, u, v, uu, uv, vv
        return PatchJet(u, v, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5])

    def eval_along(self, u, v):
        """Evaluate the components with ``u`` and ``v`` bound to arbitrary jets."""
        env = {"u": u, "v": v}
        out = []
        for c in self.components:
            j = evaluate(c, env)
            if not isinstance(j, jets.Jet):
                j = u.constant(j) if isinstance(u, jets.Jet) else j
            out.append(j)
        return out


@dataclass(frozen=True)
class CurveOnSurface:
    u: Expr
    v: Expr
    t0: float
    t1: float
    mode: str = REPARAMETRIZE
    samples: int = 16
    name: str = ""

    @classmethod
    def from_strings(
        cls, u: str, v: str, t0: float, t1: float, mode: str = REPARAMETRIZE,
        samples: int = 16, name: str = "",
    ) -> "CurveOnSurface":
        if mode not in (REPARAMETRIZE, ASSERT_UNIT_SPEED):
            raise ValueError(f"unknown parametrization mode {mode!r}")
        return cls(parse(u, ("t",)), parse(v, ("t",)), float(t0), float(t1), mode, samples, name)

    def coords(self, t: float, order: int = 3) -> tuple[jets.Jet1, jets.Jet1]:
        tj = jets.seed("t", t, order)
        out = []
        for e in (self.u, self.v):
            j = evaluate(e, {"t": tj})
            if not isinstance(j, jets.Jet):
                j = tj.constant(j)
            out.append(j)
        return out[0], out[1]

    def uv(self, t: float) -> tuple[float, float]:
        env = {"t": float(t)}
        return float(evaluate(self.u, env)), float(evaluate(self.v, env))


# -- fundamental forms --------------------------------------------------------


@dataclass(frozen=True)
class FirstForm:
    E: float
    F: float
    G: float
    E_u: float
    E_v: float
    F_u: float
    F_v: float
    G_u: float
    G_v: float

    @property
    def det(self) -> float:
        return self.E * self.G - self.F * self.F

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.E, self.F], [self.F, self.G]])

    def jet(self, name: str) -> jets.Jet2:
        """Order-1 jet of ``E``, ``F`` or ``G``."""
        return jets.Jet2(
            (getattr(self, name), getattr(self, name + "_u"), getattr(self, name + "_v"))
        )


@dataclass(frozen=True)
class SecondForm:
    L: float
    M: float
    N2: float

    def contract(self, up: float, vp: float) -> float:
        return self.L * up * up + 2 * self.M * up * vp + self.N2 * vp * vp


def _check_regular(d: PatchJet, E: float, F: float, G: float, name: str):
    det = E * G - F * F
    if not (E > 0 and G > 0 and det > REGULARITY_TOL):
        raise RegularityError(d.u, d.v, det, name)


def first_form_from_jet(d: PatchJet, patch: SurfacePatch | None = None) -> FirstForm:
    # eta_u and eta_v as order-1 jets in (u, v)
    ju = [jets.Jet2((d.eu[i], d.euu[i], d.euv[i])) for i in range(3)]
    jv = [jets.Jet2((d.ev[i], d.euv[i], d.evv[i])) for i in range(3)]
    E = ju[0] * ju[0] + ju[1] * ju[1] + ju[2] * ju[2]
    F = ju[0] * jv[0] + ju[1] * jv[1] + ju[2] * jv[2]
    G = jv[0] * jv[0] + jv[1] * jv[1] + jv[2] * jv[2]
    _check_regular(d, E.value, F.value, G.value, patch.name if patch else "")
    E_u2 = 2.0 * float(d.euu @ d.eu)
    if abs(E.d_u - E_u2) > 1e-10 * (1.0 + abs(E_u2)):
        raise ConsistencyError(f"E_u routes disagree: {E.d_u!r} vs {E_u2!r}")
    return FirstForm(E.value, F.value, G.value, E.d_u, E.d_v, F.d_u, F.d_v, G.d_u, G.d_v)


def first_form(patch: SurfacePatch, u: float, v: float) -> FirstForm:
    return first_form_from_jet(patch.jets(u, v), patch)


def normal_from_jet(d: PatchJet) -> np.ndarray:
    n = np.cross(d.eu, d.ev)
    return n / np.linalg.norm(n)


def unit_normal(patch: SurfacePatch, u: float, v: float) -> np.ndarray:
    d = patch.jets(u, v)
    first_form_from_jet(d, patch)
    return normal_from_jet(d)


def second_form_from_jet(d: PatchJet) -> SecondForm:
    U = normal_from_jet(d)
    return SecondForm(float(d.euu @ U), float(d.euv @ U), float(d.evv @ U))


def second_form(patch: SurfacePatch, u: float, v: float) -> SecondForm:
    d = patch.jets(u, v)
    first_form_from_jet(d, patch)
    return second_form_from_jet(d)


def metric_identities(patch: SurfacePatch, u: float, v: float) -> dict[str, float]:
    """Residuals of the six dot-product identities for metric partials."""
    d = patch.jets(u, v)
    I = first_form_from_jet(d, patch)
    return {
        "euu.eu=E_u/2": abs(d.euu @ d.eu - I.E_u / 2),
        "euv.eu=E_v/2": abs(d.euv @ d.eu - I.E_v / 2),
        "euv.ev=G_u/2": abs(d.euv @ d.ev - I.G_u / 2),
        "evv.ev=G_v/2": abs(d.evv @ d.ev - I.G_v / 2),
        "euu.ev=F_u-E_v/2": abs(d.euu @ d.ev - (I.F_u - I.E_v / 2)),
        "evv.eu=F_v-G_u/2": abs(d.evv @ d.eu - (I.F_v - I.G_u / 2)),
    }


# -- curve derivatives ------------------------------------------------------


@dataclass(frozen=True)
class CurveDerivatives:
    """Parameter and arc-length derivatives of ``(u(t), v(t))`` at one ``t``."""

    t: float
    u: float
    v: float
    u_t: float
    u_tt: float
    v_t: float
    v_tt: float
    sigma: float
    sigma_t: float
    up: float
    upp: float
    vp: float
    vpp: float


def _curve_derivs(
    patch: SurfacePatch, curve: CurveOnSurface, t: float, d: PatchJet | None = None
) -> tuple[CurveDerivatives, PatchJet]:
    uj, vj = curve.coords(t)
    u, v = uj.value, vj.value
    if not patch.contains(u, v):
        raise DomainError(
            f"curve {curve.name or '?'} leaves the domain of patch {patch.name or '?'} "
            f"at t = {t:.6g}: (u, v) = ({u:.6g}, {v:.6g})"
        )
    if d is None:
        d = patch.jets(u, v)
    u_t, u_tt = uj.c[1], uj.c[2]
    v_t, v_tt = vj.c[1], vj.c[2]
    g_t = d.eu * u_t + d.ev * v_t
    g_tt = d.euu * u_t**2 + 2 * d.euv * u_t * v_t + d.evv * v_t**2 + d.eu * u_tt + d.ev * v_tt
    sigma = float(np.linalg.norm(g_t))
    if sigma <= SPEED_TOL:
        raise StationaryPointError(
            f"curve {curve.name or '?'} is stationary at t = {t:.6g} (speed {sigma:.3g})"
        )
    if curve.mode == ASSERT_UNIT_SPEED and abs(sigma - 1.0) > UNIT_SPEED_TOL:
        raise UnitSpeedError(
            f"curve {curve.name or '?'} declared unit speed but |dgamma/dt| = "
            f"{sigma:.12g} at t = {t:.6g}"
        )
    sigma_t = float(g_t @ g_tt) / sigma
    s3 = sigma**3
    return (
        CurveDerivatives(
            t, u, v, u_t, u_tt, v_t, v_tt, sigma, sigma_t,
            u_t / sigma, (u_tt * sigma - u_t * sigma_t) / s3,
            v_t / sigma, (v_tt * sigma - v_t * sigma_t) / s3,
        ),
        d,
    )


def curve_s_derivatives(patch: SurfacePatch, curve: CurveOnSurface, t: float) -> CurveDerivatives:
    """Speed and arc-length derivatives ``u', u'', v', v''`` at parameter ``t``."""
    sd, d = _curve_derivs(patch, curve, t)
    first_form_from_jet(d, patch)
    return sd


def speed(patch: SurfacePatch, curve: CurveOnSurface, t: float) -> float:
    """``|d gamma / dt|`` via order-1 jets through the composite map."""
    tj = jets.seed("t", t, 1)
    uj = evaluate(curve.u, {"t": tj})
    vj = evaluate(curve.v, {"t": tj})
    uj = uj if isinstance(uj, jets.Jet) else tj.constant(uj)
    vj = vj if isinstance(vj, jets.Jet) else tj.constant(vj)
    g = patch.eval_along(uj, vj)
    return math.sqrt(sum(c.c[1] ** 2 for c in g))


# -- frames ---------------------------------------------------------------


@dataclass(frozen=True)
class FrameSample:
    t: float
    s: float
    point: np.ndarray
    T: np.ndarray
    P: np.ndarray
    U: np.ndarray
    N: Optional[np.ndarray]
    B: Optional[np.ndarray]
    kappa: float
    kappa_g: float
    kappa_n: float
    tau_g: float
    alpha: Optional[float]
    derivs: CurveDerivatives
    first: FirstForm
    second: SecondForm
    dT: np.ndarray
    jet: PatchJet = field(repr=False)
    routes: dict = field(default_factory=dict, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.N is None

    @property
    def u(self) -> float:
        return self.derivs.u

    @property
    def v(self) -> float:
        return self.derivs.v


def frame_sample(
    patch: SurfacePatch, curve: CurveOnSurface, t: float, s: float | None = None
) -> FrameSample:
    """Frenet and Darboux frames plus curvature scalars at parameter ``t``."""
    sd, d = _curve_derivs(patch, curve, t)
    I = first_form_from_jet(d, patch)
    II = second_form_from_jet(d)
    up, vp, upp, vpp = sd.up, sd.vp, sd.upp, sd.vpp

    n = np.cross(d.eu, d.ev)
    W = float(np.linalg.norm(n))
    U = n / W
    T = d.eu * up + d.ev * vp
    dT = d.eu * upp + d.ev * vpp + up * up * d.euu + 2 * up * vp * d.euv + vp * vp * d.evv
    P = np.cross(U, T)
    # closed form for P in the coordinate basis
    P_coord = (I.E * up * d.ev + I.F * (vp * d.ev - up * d.eu) - I.G * vp * d.eu) / math.sqrt(I.det)

    kappa = float(np.linalg.norm(dT))
    kappa_g = float(dT @ P)
    kappa_n = float(dT @ U)
    kappa_n_form = II.contract(up, vp)

    # U' = U_u u' + U_v v', with U_x = (n_x - U (U.n_x)) / |n|
    n_u = np.cross(d.euu, d.ev) + np.cross(d.eu, d.euv)
    n_v = np.cross(d.euv, d.ev) + np.cross(d.eu, d.evv)
    U_u = (n_u - U * (U @ n_u)) / W
    U_v = (n_v - U * (U @ n_v)) / W
    dU = U_u * up + U_v * vp
    tau_g = -float(P @ dU)

    routes = {
        "P": float(np.linalg.norm(P - P_coord)),
        "kappa_n": abs(kappa_n - kappa_n_form),
    }
    N = B = alpha = None
    if kappa >= KAPPA_TOL:
        N = dT / kappa
        B = np.cross(T, N)
        B_expanded = (
            (up * vpp - vp * upp) * n
            + up**3 * np.cross(d.eu, d.euu)
            + 2 * up * up * vp * np.cross(d.eu, d.euv)
            + up * vp * vp * np.cross(d.eu, d.evv)
            + up * up * vp * np.cross(d.ev, d.euu)
            + 2 * up * vp * vp * np.cross(d.ev, d.euv)
            + vp**3 * np.cross(d.ev, d.evv)
        ) / kappa
        routes["B"] = float(np.linalg.norm(B - B_expanded))
        alpha = math.atan2(float(P @ B), float(P @ N))

    if s is None:
        s = arc_length(patch, curve, curve.t0, t)
    return FrameSample(
        t=t, s=s, point=d.pos, T=T, P=P, U=U, N=N, B=B,
        kappa=kappa, kappa_g=kappa_g, kappa_n=kappa_n, tau_g=tau_g, alpha=alpha,
        derivs=sd, first=I, second=II, dT=dT, jet=d, routes=routes,
    )


def frame_residuals(fs: FrameSample) -> dict[str, float]:
    """Invariant residuals of one sample (see module docstring conventions)."""
    D = np.stack([fs.T, fs.P, fs.U])
    out = {
        "darboux_orthonormality": float(np.abs(D @ D.T - np.eye(3)).max()),
        "P=UxT": float(np.linalg.norm(fs.P - np.cross(fs.U, fs.T))),
        "kappa_n_routes": fs.routes["kappa_n"],
        "P_routes": fs.routes["P"],
    }
    if fs.degenerate:
        return out
    F = np.stack([fs.T, fs.N, fs.B])
    out["frenet_orthonormality"] = float(np.abs(F @ F.T - np.eye(3)).max())
    k2 = fs.kappa**2
    out["pythagoras_rel"] = abs(k2 - fs.kappa_g**2 - fs.kappa_n**2) / k2
    ca, sa = math.cos(fs.alpha), math.sin(fs.alpha)
    out["rotation"] = max(
        float(np.linalg.norm(ca * fs.N + sa * fs.B - fs.P)),
        float(np.linalg.norm(-sa * fs.N + ca * fs.B - fs.U)),
    )
    out["B_routes"] = fs.routes["B"]
    return out


# -- arc length -------------------------------------------------------------


def _simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return _simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + _simpson(
        f, m, b, fm, frm, fb, right, tol / 2, depth - 1
    )


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]`` to absolute ``tol``."""
    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    return _simpson(f, a, b, fa, fm, fb, whole, tol, max_depth)


def arc_length(patch: SurfacePatch, curve: CurveOnSurface, a: float, b: float, tol: float = 1e-10) -> float:
    return adaptive_simpson(lambda t: _positive_speed(patch, curve, t), a, b, tol)


def _positive_speed(patch, curve, t):
    sigma = speed(patch, curve, t)
    if sigma <= SPEED_TOL:
        raise StationaryPointError(
            f"arc length is not strictly monotone: speed {sigma:.3g} at t = {t:.6g}"
        )
    return sigma


class ArcLengthTable:
    """Cumulative arc length ``s(t)`` on ``[t0, t1]`` and its inverse ``t(s)``.

    Built once, then read-only.
    """

    def __init__(self, patch: SurfacePatch, curve: CurveOnSurface, nodes: int = 32, tol: float = 1e-10):
        self.patch, self.curve, self.tol = patch, curve, tol
        self.t_nodes = np.linspace(curve.t0, curve.t1, nodes + 1)
        seg_tol = tol / nodes
        cum = [0.0]
        for a, b in zip(self.t_nodes[:-1], self.t_nodes[1:]):
            cum.append(cum[-1] + adaptive_simpson(self._speed, a, b, seg_tol))
        self.s_nodes = np.array(cum)

    def _speed(self, t: float) -> float:
        return _positive_speed(self.patch, self.curve, t)

    @property
    def length(self) -> float:
        return float(self.s_nodes[-1])

    def _segment(self, i: int, t: float) -> float:
        return float(self.s_nodes[i]) + adaptive_simpson(
            self._speed, float(self.t_nodes[i]), t, self.tol / len(self.t_nodes)
        )

    def s_of_t(self, t: float) -> float:
        i = min(max(bisect_right(self.t_nodes, t) - 1, 0), len(self.t_nodes) - 2)
        return self._segment(i, t)

    def t_of_s(self, s: float) -> float:
        """Invert ``s(t)`` by safeguarded Newton (bisection fallback)."""
        if s <= 0.0:
            return float(self.t_nodes[0])
        if s >= self.length:
            return float(self.t_nodes[-1])
        i = min(max(bisect_right(self.s_nodes, s) - 1, 0), len(self.s_nodes) - 2)
        lo, hi = float(self.t_nodes[i]), float(self.t_nodes[i + 1])
        s_lo, s_hi = float(self.s_nodes[i]), float(self.s_nodes[i + 1])
        t = lo + (hi - lo) * (s - s_lo) / (s_hi - s_lo)
        for _ in range(60):
            r = self._segment(i, t) - s
            if abs(r) <= 1e-13 * (1.0 + self.length):
                return t
            if r > 0:
                hi = t
            else:
                lo = t
            step = t - r / self._speed(t)
            t = step if lo < step < hi else 0.5 * (lo + hi)
            if hi - lo <= 1e-15 * (1.0 + abs(t)):
                return t
        return t


def reparametrize_arclength(patch: SurfacePatch, curve: CurveOnSurface, n: int) -> list[tuple[float, float]]:
    """``n`` samples ``(s, t)`` equally spaced in arc length."""
    table = ArcLengthTable(patch, curve)
    L = table.length
    return [(L * k / (n - 1), table.t_of_s(L * k / (n - 1))) for k in range(n)]


def sample_curve(patch: SurfacePatch, curve: CurveOnSurface, n: int | None = None) -> list[FrameSample]:
    """Frame samples along the curve.

    ``reparametrize`` mode spaces samples evenly in arc length; in
    ``assert-unit-speed`` mode they are evenly spaced in ``t`` and ``s = t - t0``.
    """
    n = n or curve.samples
    if n < 2:
        raise ValueError("need at least two samples")
    if curve.mode == ASSERT_UNIT_SPEED:
        ts = np.linspace(curve.t0, curve.t1, n)
        return [frame_sample(patch, curve, float(t), float(t - curve.t0)) for t in ts]
    return [frame_sample(patch, curve, t, s) for s, t in reparametrize_arclength(patch, curve, n)]


def samples_at(patch: SurfacePatch, curve: CurveOnSurface, ts) -> list[FrameSample]:
    """Frame samples at given parameters with arc length measured on ``patch``."""
    table = ArcLengthTable(patch, curve)
    return [frame_sample(patch, curve, float(t), table.s_of_t(float(t))) for t in ts]
