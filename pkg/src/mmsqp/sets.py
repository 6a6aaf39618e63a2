"""Simple convex sets with closed-form Euclidean projections.

Stationarity over a set is always measured through the projection fixed
point ``||x - P(x - v)||``, which vanishes exactly when ``-v`` lies in the
normal cone at ``x``; normal cones are never materialized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SimpleSet:
    """Base class; subclasses implement an exact Euclidean projection."""

    def project(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x))) <= tol

    def describe(self) -> str:
        return type(self).__name__


@dataclass
class WholeSpace(SimpleSet):
    def project(self, z):
        return np.asarray(z, dtype=float).copy()

    def describe(self):
        return "WholeSpace"


@dataclass
class Box(SimpleSet):
    """Axis-aligned box; infinite bounds mark unconstrained coordinates."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds must have equal shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")

    def project(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != self.lower.shape:
            raise ValueError("dimension mismatch")
        return np.clip(z, self.lower, self.upper)

    def describe(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


@dataclass
class EuclideanBall(SimpleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def project(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != self.center.shape:
            raise ValueError("dimension mismatch")
        d = z - self.center
        nrm = float(np.linalg.norm(d))
        if nrm <= self.radius:
            return z.copy()
        return self.center + d * (self.radius / nrm)

    def describe(self):
        return f"EuclideanBall({self.center.tolist()}, {self.radius})"


def _project_scaled_simplex(z: np.ndarray, scale: float) -> np.ndarray:
    """Projection onto {u >= 0, sum u = scale} by the sorted threshold rule."""
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - scale
    idx = np.arange(1, z.size + 1)
    rho = int(np.nonzero(u - css / idx > 0)[0][-1])
    tau = css[rho] / (rho + 1.0)
    return np.maximum(z - tau, 0.0)


@dataclass
class Simplex(SimpleSet):
    """The scaled simplex {u >= 0, sum u = scale}."""

    scale: float = 1.0

    def __post_init__(self):
        self.scale = float(self.scale)
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def project(self, z):
        z = np.asarray(z, dtype=float)
        return _project_scaled_simplex(z, self.scale)

    def describe(self):
        return f"Simplex({self.scale})"


@dataclass
class SimplexCap(SimpleSet):
    """The capped simplex {u >= 0, sum u <= scale}."""

    scale: float

    def __post_init__(self):
        self.scale = float(self.scale)
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def project(self, z):
        z = np.asarray(z, dtype=float)
        p = np.maximum(z, 0.0)
        if p.sum() <= self.scale:
            return p
        return _project_scaled_simplex(z, self.scale)

    def describe(self):
        return f"SimplexCap({self.scale})"


@dataclass
class NonnegOrthant(SimpleSet):
    def project(self, z):
        return np.maximum(np.asarray(z, dtype=float), 0.0)

    def describe(self):
        return "NonnegOrthant"


def project(q: SimpleSet, z) -> np.ndarray:
    """Euclidean projection of z onto q."""
    return q.project(np.asarray(z, dtype=float))


def _rows_simplex(z: np.ndarray, scale: float) -> np.ndarray:
    u = np.sort(z, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - scale
    idx = np.arange(1, z.shape[1] + 1)
    cond = u - css / idx > 0
    rho = z.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(z.shape[0]), rho] / (rho + 1.0)
    return np.maximum(z - tau[:, None], 0.0)


def project_rows(q: SimpleSet, pts: np.ndarray) -> np.ndarray:
    """Project every row of an (N, n) array onto q; vectorized per variant."""
    pts = np.asarray(pts, dtype=float)
    if isinstance(q, WholeSpace):
        return pts
    if isinstance(q, Box):
        return np.clip(pts, q.lower, q.upper)
    if isinstance(q, EuclideanBall):
        d = pts - q.center
        nrm = np.linalg.norm(d, axis=1)
        scale = np.minimum(1.0, q.radius / np.maximum(nrm, 1e-300))
        return q.center + d * scale[:, None]
    if isinstance(q, NonnegOrthant):
        return np.maximum(pts, 0.0)
    if isinstance(q, Simplex):
        return _rows_simplex(pts, q.scale)
    if isinstance(q, SimplexCap):
        pos = np.maximum(pts, 0.0)
        over = pos.sum(axis=1) > q.scale
        out = pos
        if np.any(over):
            out = pos.copy()
            out[over] = _rows_simplex(pts[over], q.scale)
        return out
    return np.array([q.project(p) for p in pts])


def contains(q: SimpleSet, x, tol: float = 0.0) -> bool:
    """True iff dist(x, q) <= tol, measured through the projection."""
    return q.contains(x, tol)


def stationarity_residual(q: SimpleSet, x, v) -> float:
    """Fixed-point residual ``||x - P_q(x - v)||`` for a point x in q.

    Zero exactly when ``-v`` lies in the normal cone to q at x.  Raises if x
    is farther than 1e-9 from q.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not q.contains(x, 1e-9):
        raise ValueError("x is not a member of the set (within 1e-9)")
    return float(np.linalg.norm(x - q.project(x - v)))
