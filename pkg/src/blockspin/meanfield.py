"""Mean-field predictions: Curie-Weiss roots, phase classification, LDP rate function.

The large-deviation variable ``x`` is half the block magnetization
(``x = m / 2``, so ``x`` lives in ``[-1/2, 1/2]^2``): with

    F(x) = (beta x1^2 + beta x2^2 + 2 lam x1 x2) / 2
    J(x) = I(2 x1) / 2 + I(2 x2) / 2,   I(y) = ((1+y) log(1+y) + (1-y) log(1-y)) / 2

one has ``n F(m/2) = -H_complete(m)``. Everything returned to callers
(limit points, minimizers) is expressed in ``m = 2x``.

Stationary points of ``F - J`` satisfy ``m1 = tanh((beta m1 + lam m2) / 2)``
and the same with the blocks swapped.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def cw_fixed_point(b: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    """Largest ``z >= 0`` with ``z = tanh(b z)``; zero when ``b <= 1``.

    Newton's method started at ``z = 1``: ``z - tanh(bz)`` is convex on
    ``z > 0`` and positive at 1, so the iterates decrease monotonically onto
    the largest root.
    """
    b = float(b)
    if not np.isfinite(b):
        raise ValueError("b must be finite")
    if b <= 1.0:
        return 0.0
    z = 1.0
    for _ in range(max_iter):
        t = np.tanh(b * z)
        g = z - t
        dg = 1.0 - b * (1.0 - t * t)
        step = g / dg
        z_new = z - step
        if z_new <= 0:
            z_new = z / 2
        if abs(z_new - z) <= tol * max(z, 1e-300):
            z = z_new
            break
        z = z_new
    return float(z)


class Phase(str, enum.Enum):
    PARAMAGNETIC = "Paramagnetic"
    FOUR_POINT = "FourPoint"
    ALIGNED_TWO_POINT = "AlignedTwoPoint"
    ANTI_ALIGNED_TWO_POINT = "AntiAlignedTwoPoint"


@dataclass(frozen=True)
class PhaseDiagnosis:
    phase: Phase
    limit_points: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]
    z_star: float

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "z_star": self.z_star,
            "limit_points": [[m1, m2, w] for (m1, m2), w in zip(self.limit_points, self.weights)],
        }


def classify_phase(beta: float, alpha_a: float) -> PhaseDiagnosis:
    """Limit law of ``m`` for within coupling ``beta`` and effective between coupling ``alpha a``.

    On the boundary ``beta + |alpha a| = 2`` the phase is paramagnetic. In
    the anti-aligned phase the root is ``z*((beta + |alpha a|) / 2)``: negating
    one block maps ``alpha a`` to ``-alpha a`` and ``m2`` to ``-m2``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    lam = float(alpha_a)
    if beta + abs(lam) <= 2:
        return PhaseDiagnosis(Phase.PARAMAGNETIC, ((0.0, 0.0),), (1.0,), 0.0)
    if lam == 0:
        z = cw_fixed_point(beta / 2)
        pts = tuple((s1 * z, s2 * z) for s1 in (1.0, -1.0) for s2 in (1.0, -1.0))
        return PhaseDiagnosis(Phase.FOUR_POINT, pts, (0.25,) * 4, z)
    z = cw_fixed_point((beta + abs(lam)) / 2)
    if lam > 0:
        return PhaseDiagnosis(Phase.ALIGNED_TWO_POINT, ((z, z), (-z, -z)), (0.5, 0.5), z)
    return PhaseDiagnosis(Phase.ANTI_ALIGNED_TWO_POINT, ((z, -z), (-z, z)), (0.5, 0.5), z)


def entropy_rate(y):
    """``I(y) = ((1+y) log(1+y) + (1-y) log(1-y)) / 2`` with ``0 log 0 = 0``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(y > -1, (1 + y) * np.log1p(y), 0.0)
        b = np.where(y < 1, (1 - y) * np.log1p(-y), 0.0)
    return 0.5 * (a + b)


def objective(x, beta: float, lam: float):
    """``F(x) - J(x)`` for ``x`` of shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    f = 0.5 * (beta * x1 ** 2 + beta * x2 ** 2 + 2 * lam * x1 * x2)
    return f - 0.5 * entropy_rate(2 * x1) - 0.5 * entropy_rate(2 * x2)


def _gradient(x, beta, lam):
    x1, x2 = x
    return np.array([beta * x1 + lam * x2 - np.arctanh(2 * x1),
                     beta * x2 + lam * x1 - np.arctanh(2 * x2)])


def _hessian(x, beta, lam):
    x1, x2 = x
    return np.array([[beta - 2.0 / (1 - 4 * x1 * x1), lam],
                     [lam, beta - 2.0 / (1 - 4 * x2 * x2)]])


def _ascend(x0, beta, lam, grad_tol=1e-13, max_iter=500):
    """Local maximiser of the objective from ``x0``.

    Damped fixed-point iteration ``2x <- tanh(beta x + lam x_other)`` brings
    the point into the basin, then Newton steps with backtracking polish it.
    """
    x = np.clip(np.asarray(x0, dtype=float), -0.5 + 1e-12, 0.5 - 1e-12)
    for _ in range(200):
        target = 0.5 * np.tanh(np.array([beta * x[0] + lam * x[1], beta * x[1] + lam * x[0]]))
        x_new = 0.5 * x + 0.5 * target
        if np.max(np.abs(x_new - x)) < 1e-10:
            x = x_new
            break
        x = x_new
    for _ in range(max_iter):
        g = _gradient(x, beta, lam)
        if np.max(np.abs(g)) < grad_tol:
            break
        h = _hessian(x, beta, lam)
        try:
            step = -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = 1e-3 * g
        if np.dot(step, g) <= 0:
            step = 1e-3 * g
        f0 = objective(x, beta, lam)
        t = 1.0
        while t > 1e-12:
            cand = x + t * step
            if np.all(np.abs(cand) < 0.5) and objective(cand, beta, lam) >= f0 - 1e-15:
                break
            t *= 0.5
        x = x + t * step
    return x


@lru_cache(maxsize=256)
def _maximizers(beta: float, lam: float, grid: int = 401) -> tuple[tuple[tuple[float, float], ...], float]:
    xs = np.linspace(-0.5, 0.5, grid)
    xx = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
    vals = objective(xx, beta, lam)
    padded = np.pad(vals, 1, constant_values=-np.inf)
    is_peak = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                shifted = padded[1 + di:1 + di + grid, 1 + dj:1 + dj + grid]
                is_peak &= vals >= shifted
    starts = xx[is_peak]
    found = []
    for x0 in starts:
        x = _ascend(x0, beta, lam)
        if not any(np.max(np.abs(x - y)) < 1e-7 for y in found):
            found.append(x)
    vals_found = np.array([objective(x, beta, lam) for x in found])
    best = float(vals_found.max())
    tol = 1e-12 * max(1.0, abs(best))
    winners = [found[k] for k in np.argsort(-vals_found) if vals_found[k] >= best - tol]
    winners.sort(key=lambda x: (-x[0], -x[1]))
    return tuple((float(x[0]), float(x[1])) for x in winners), best


def rate_minimizers(beta: float, lam: float) -> list[tuple[float, float]]:
    """Zeros of the rate function, in block-magnetization coordinates ``m = 2x``."""
    pts, _ = _maximizers(float(beta), float(lam))
    return [(2 * x1, 2 * x2) for x1, x2 in pts]


def rate_function(x, beta: float, lam: float):
    """Rate function ``sup(F - J) - (F(x) - J(x))`` at ``x`` (half-magnetizations)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("x must have a trailing dimension of size 2")
    if np.any(np.abs(2 * x) > 1):
        raise ValueError("rate function is defined for |2 x_i| <= 1")
    _, best = _maximizers(float(beta), float(lam))
    val = best - objective(x, beta, lam)
    return val if np.ndim(val) else float(val)


def free_energy_variational(beta: float, lam: float) -> float:
    """Limit of ``log(Z_complete) / n``: ``log 2 + sup(F - J)``."""
    _, best = _maximizers(float(beta), float(lam))
    return float(np.log(2.0) + best)
