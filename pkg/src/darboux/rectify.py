"""Position-vector decomposition in the Darboux frame and rectifying classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from darboux.geom import ConsistencyError, FrameSample

RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class PositionDecomposition:
    """``gamma = lam*T + mu*P + nu*U`` at every sample (origin-anchored)."""

    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    positions: np.ndarray

    @property
    def max_abs_nu(self) -> float:
        return float(np.abs(self.nu).max())

    @property
    def mean_abs_nu(self) -> float:
        return float(np.abs(self.nu).mean())

    def __len__(self) -> int:
        return len(self.lam)


@dataclass(frozen=True)
class RectifyingVerdict:
    rectifying: bool
    max_abs_nu: float
    witness_index: int
    witness_nu: float
    tolerance: float

    @property
    def label(self) -> str:
        return "rectifying" if self.rectifying else "not-rectifying"


def decompose_position(samples: Sequence[FrameSample]) -> PositionDecomposition:
    lam, mu, nu, pos = [], [], [], []
    for fs in samples:
        g = fs.point
        a, b, c = float(g @ fs.T), float(g @ fs.P), float(g @ fs.U)
        err = float(np.linalg.norm(a * fs.T + b * fs.P + c * fs.U - g))
        if err > RECONSTRUCTION_TOL * (1.0 + float(np.linalg.norm(g))):
            raise ConsistencyError(
                f"position reconstruction off by {err:.3g} at t = {fs.t:.6g}"
            )
        lam.append(a)
        mu.append(b)
        nu.append(c)
        pos.append(g)
    return PositionDecomposition(np.array(lam), np.array(mu), np.array(nu), np.array(pos))


def default_tolerance(dec: PositionDecomposition) -> float:
    return 1e-8 * (1.0 + float(np.linalg.norm(dec.positions, axis=1).max()))


def classify_darboux_rectifying(
    dec: PositionDecomposition, tol: float | None = None
) -> RectifyingVerdict:
    """Rectifying iff the normal component ``nu`` vanishes at every sample."""
    if len(dec) < 2:
        raise ValueError("classification needs at least two samples")
    if tol is None:
        tol = default_tolerance(dec)
    i = int(np.argmax(np.abs(dec.nu)))
    return RectifyingVerdict(
        rectifying=dec.max_abs_nu <= tol,
        max_abs_nu=dec.max_abs_nu,
        witness_index=i,
        witness_nu=float(dec.nu[i]),
        tolerance=tol,
    )
