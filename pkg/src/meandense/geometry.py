"""Dimension-generic geometric primitives for d in {1, 2, 3}.

All sets use closed semantics: balls, boxes and segments include their
boundaries, and ties (distance exactly equal to the radius) count as hits.
Every value here is immutable after construction and every operation is a
pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

SUPPORTED_DIMS = (1, 2, 3)

_BALL_VOLUMES = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k, k in {1, 2, 3}."""
    try:
        return _BALL_VOLUMES[k]
    except KeyError:
        raise ConfigurationError(f"ball_volume: unsupported dimension {k}; must be in {SUPPORTED_DIMS}")


def as_point(p, dim: int | None = None) -> np.ndarray:
    """Coerce to a float coordinate array, checking finiteness and dimension."""
    a = np.asarray(p, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise ConfigurationError(f"point must be 1-dimensional, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ConfigurationError(f"dimension mismatch: expected {dim}, got {a.shape[0]}")
    if a.shape[0] not in SUPPORTED_DIMS:
        raise ConfigurationError(f"unsupported dimension {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"non-finite point coordinates: {a}")
    return a


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned closed box with lo[k] <= hi[k] on every axis."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi, dim=self.lo.shape[0]))
        if np.any(self.lo > self.hi):
            raise ConfigurationError(f"box with lo > hi: {self.lo} / {self.hi}")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def dilate(self, margin: float) -> "Box":
        if margin < 0:
            raise ConfigurationError("dilation margin must be nonnegative")
        return Box(self.lo - margin, self.hi + margin)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Closed membership; pts of shape (d,) or (m, d)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def contains_box(self, other: "Box") -> bool:
        return bool(np.all(other.lo >= self.lo) and np.all(other.hi <= self.hi))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))

    def corners(self) -> np.ndarray:
        grids = np.meshgrid(*[(self.lo[k], self.hi[k]) for k in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball: |x - center| <= radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius < 0:
            raise ConfigurationError("ball radius must be nonnegative")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius

    def bounding_box(self) -> Box:
        return Box(self.center - self.radius, self.center + self.radius)


@dataclass(frozen=True, eq=False)
class SegmentShape:
    """Closed segment with endpoints a, b (a == b is a degenerate segment)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b, dim=self.a.shape[0]))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


def dist_point_segment(x, s: SegmentShape) -> float:
    """Euclidean distance from x to the closed segment s."""
    x = as_point(x)
    if x.shape[0] != s.dim:
        raise ConfigurationError(f"dimension mismatch: point is {x.shape[0]}-d, segment is {s.dim}-d")
    return float(segment_distances(x, s.a[None, :], s.b[None, :])[0])


def segment_distances(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from point x (shape (d,)) to m segments given by endpoint
    arrays a, b of shape (m, d)."""
    ab = b - a
    ax = x - a
    denom = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(denom > 0.0, denom, 1.0)
    t = np.clip(np.einsum("ij,ij->i", ax, ab) / safe, 0.0, 1.0)
    t = np.where(denom > 0.0, t, 0.0)
    diff = ax - t[:, None] * ab
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def points_segment_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from m points (shape (m, d)) to one segment (a, b)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ab = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    diff = pts - a - t[:, None] * ab
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def clip_segment_box(s: SegmentShape, box: Box) -> SegmentShape | None:
    """Sub-segment s ∩ box (possibly degenerate), or None if empty."""
    if s.dim != box.dim:
        raise ConfigurationError("dimension mismatch between segment and box")
    t0, t1 = _clip_params(s.a, s.b, box)
    if t0 is None:
        return None
    d = s.b - s.a
    return SegmentShape(s.a + t0 * d, s.a + t1 * d)


def _clip_params(a: np.ndarray, b: np.ndarray, box: Box):
    """Liang-Barsky parameter interval [t0, t1] of the segment inside box."""
    d = b - a
    t0, t1 = 0.0, 1.0
    for k in range(box.dim):
        if d[k] == 0.0:
            if a[k] < box.lo[k] or a[k] > box.hi[k]:
                return None, None
            continue
        ta = (box.lo[k] - a[k]) / d[k]
        tb = (box.hi[k] - a[k]) / d[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None, None
    return t0, t1


def clipped_lengths(a: np.ndarray, b: np.ndarray, box: Box) -> np.ndarray:
    """Lengths of the clipped sub-segments of m segments (a, b) inside box;
    vectorized Liang-Barsky."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d = b - a
    m = a.shape[0]
    t0 = np.zeros(m)
    t1 = np.ones(m)
    inside = np.ones(m, dtype=bool)
    for k in range(box.dim):
        dk = d[:, k]
        par = dk == 0.0
        inside &= ~par | ((a[:, k] >= box.lo[k]) & (a[:, k] <= box.hi[k]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (box.lo[k] - a[:, k]) / dk
            tb = (box.hi[k] - a[:, k]) / dk
        lo_t = np.minimum(ta, tb)
        hi_t = np.maximum(ta, tb)
        t0 = np.where(par, t0, np.maximum(t0, lo_t))
        t1 = np.where(par, t1, np.minimum(t1, hi_t))
    span = np.clip(t1 - t0, 0.0, None)
    span = np.where(inside & (t1 >= t0), span, 0.0)
    return span * np.linalg.norm(d, axis=1)
