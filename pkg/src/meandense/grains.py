"""Grain families, mark distributions and the regularity certificate.

A grain is a compact set anchored at the origin: a single point (n = 0), a
segment from the origin (n = 1), or a polyline whose first vertex is the
origin (n = 1).  Mark distributions describe the law Q of the typical
grain; laws with unbounded length support are truncated so that an almost
sure diameter bound is always available for guard zones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigurationError, NumericError
from .geometry import as_point, points_segment_distances, segment_distances

DEFAULT_QUADRATURE_ORDER = 8

# truncation quantile used when a length law has unbounded support and no
# explicit cap is given
DEFAULT_TRUNCATION_QUANTILE = 0.9999


# ---------------------------------------------------------------------------
# grain shapes


@dataclass(frozen=True, eq=False)
class PointGrain:
    """Singleton {0} in R^dim; H^0 counting measure."""

    dim: int = 2

    n = 0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigurationError(f"unsupported dimension {self.dim}")

    @property
    def diameter(self) -> float:
        return 0.0

    def segment_arrays(self):
        return np.zeros((0, self.dim)), np.zeros((0, self.dim))


@dataclass(frozen=True, eq=False)
class SegmentGrain:
    """Segment from the origin to `vec`."""

    vec: np.ndarray

    n = 1

    def __post_init__(self):
        object.__setattr__(self, "vec", as_point(self.vec))

    @classmethod
    def from_angle(cls, length: float, angle: float) -> "SegmentGrain":
        """Planar segment of given length and orientation angle."""
        return cls(length * np.array([math.cos(angle), math.sin(angle)]))

    @classmethod
    def from_direction(cls, length: float, direction) -> "SegmentGrain":
        direction = as_point(direction)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ConfigurationError("segment direction must be nonzero")
        return cls(length * direction / norm)

    @property
    def dim(self) -> int:
        return self.vec.shape[0]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.vec))

    @property
    def diameter(self) -> float:
        return self.length

    def segment_arrays(self):
        return np.zeros((1, self.dim)), self.vec[None, :]


@dataclass(frozen=True, eq=False)
class PolylineGrain:
    """Ordered vertex chain anchored at the origin (first vertex must be 0)."""

    vertices: np.ndarray

    n = 1

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ConfigurationError("polyline needs a (k, d) vertex array with k >= 2")
        if v.shape[1] not in (1, 2, 3):
            raise ConfigurationError(f"unsupported dimension {v.shape[1]}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("non-finite polyline vertices")
        if np.linalg.norm(v[0]) != 0.0:
            raise ConfigurationError("polyline must be anchored at the origin")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def diameter(self) -> float:
        v = self.vertices
        diffs = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(-1)).max())

    def segment_arrays(self):
        return self.vertices[:-1], self.vertices[1:]


Grain = PointGrain | SegmentGrain | PolylineGrain


def hn_measure(g: Grain) -> float:
    """H^n measure of the grain: 1 for a point, total length otherwise."""
    if isinstance(g, PointGrain):
        return 1.0
    a, b = g.segment_arrays()
    return float(np.linalg.norm(b - a, axis=1).sum())


def grain_distance(g: Grain, x) -> float:
    """Euclidean distance from x to the grain (anchored at the origin)."""
    x = as_point(x, dim=g.dim)
    if isinstance(g, PointGrain):
        return float(np.linalg.norm(x))
    a, b = g.segment_arrays()
    return float(segment_distances(x, a, b).min())


def grain_distances(g: Grain, pts: np.ndarray) -> np.ndarray:
    """Vectorized grain_distance over points of shape (m, d)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if isinstance(g, PointGrain):
        return np.linalg.norm(pts, axis=1)
    a, b = g.segment_arrays()
    dists = np.stack([points_segment_distances(pts, ai, bi) for ai, bi in zip(a, b)])
    return dists.min(axis=0)


def _eval_field(h, pts: np.ndarray) -> np.ndarray:
    """Evaluate a scalar field at pts of shape (m, d); accepts either an
    object with a vectorized .values method or a plain callable."""
    if hasattr(h, "values"):
        vals = np.asarray(h.values(pts), dtype=float)
    else:
        vals = np.array([float(h(p)) for p in pts])
    return vals


def integrate_along(g: Grain, h, order: int = DEFAULT_QUADRATURE_ORDER) -> float:
    """Line integral of h over the grain with respect to H^n.

    Fixed-order Gauss-Legendre per segment (exact for polynomials of degree
    <= 2*order - 1); for a point grain this is h(0).
    """
    if isinstance(g, PointGrain):
        val = float(_eval_field(h, np.zeros((1, g.dim)))[0])
        if not math.isfinite(val):
            raise NumericError("non-finite field value", point=np.zeros(g.dim))
        return val
    if order < 1:
        raise ConfigurationError("quadrature order must be positive")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, b = g.segment_arrays()
    lengths = np.linalg.norm(b - a, axis=1)
    # map nodes from [-1, 1] to each segment
    t = (nodes + 1.0) / 2.0
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    flat = pts.reshape(-1, g.dim)
    vals = _eval_field(h, flat)
    if not np.all(np.isfinite(vals)):
        bad = flat[~np.isfinite(vals)][0]
        raise NumericError("non-finite field value", point=bad)
    vals = vals.reshape(len(lengths), order)
    per_seg = (vals * weights[None, :]).sum(axis=1) * lengths / 2.0
    return float(per_seg.sum())


# ---------------------------------------------------------------------------
# length and orientation laws


@dataclass(frozen=True)
class LengthLaw:
    """Law of the segment length L; kind in {fixed, uniform, trunc_exp}.

    trunc_exp is an exponential(rate) law truncated at l_max (default: its
    0.9999 quantile), so diameters are almost surely bounded.
    """

    kind: str
    value: float = 0.0        # fixed
    lo: float = 0.0           # uniform
    hi: float = 0.0           # uniform
    rate: float = 0.0         # trunc_exp
    cap: float | None = None  # trunc_exp truncation point

    def __post_init__(self):
        if self.kind == "fixed":
            if self.value < 0:
                raise ConfigurationError("fixed length must be nonnegative")
        elif self.kind == "uniform":
            if not (0 <= self.lo <= self.hi):
                raise ConfigurationError("uniform length law needs 0 <= lo <= hi")
        elif self.kind == "trunc_exp":
            if self.rate <= 0:
                raise ConfigurationError("trunc_exp length law needs rate > 0")
            if self.cap is None:
                object.__setattr__(
                    self, "cap", -math.log(1.0 - DEFAULT_TRUNCATION_QUANTILE) / self.rate
                )
            elif self.cap <= 0:
                raise ConfigurationError("trunc_exp cap must be positive")
        else:
            raise ConfigurationError(f"unknown length law {self.kind!r}")

    @property
    def l_max(self) -> float:
        return {"fixed": self.value, "uniform": self.hi, "trunc_exp": self.cap}[self.kind]

    def moment(self, k: int) -> float:
        """E[L^k] under the (truncated) law."""
        if self.kind == "fixed":
            return self.value ** k
        if self.kind == "uniform":
            if self.hi == self.lo:
                return self.lo ** k
            return (self.hi ** (k + 1) - self.lo ** (k + 1)) / ((k + 1) * (self.hi - self.lo))
        # truncated exponential: E[L^k] = (k!/rate^k) P(k+1, rate*cap) / P(1, rate*cap)
        z = self.rate * self.cap
        num = math.factorial(k) / self.rate ** k * special.gammainc(k + 1, z)
        return num / special.gammainc(1, z)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(count, self.value)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=count)
        # inversion restricted to [0, F(cap)]
        u = rng.random(count) * (1.0 - math.exp(-self.rate * self.cap))
        return -np.log1p(-u) / self.rate


@dataclass(frozen=True)
class OrientationLaw:
    """Law of the segment direction; kind in {fixed, uniform}.

    Angles: d=1 uses the sign of cos(angle); d=2 a planar angle; d=3 a
    (polar, azimuth) pair.  uniform draws the direction uniformly (a random
    sign for d=1, uniform angle for d=2, uniform on the sphere for d=3).
    """

    kind: str
    dim: int = 2
    angle: float = 0.0
    polar: float = 0.0
    azimuth: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform"):
            raise ConfigurationError(f"unknown orientation law {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ConfigurationError(f"unsupported dimension {self.dim}")

    def fixed_direction(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([1.0 if math.cos(self.angle) >= 0 else -1.0])
        if self.dim == 2:
            return np.array([math.cos(self.angle), math.sin(self.angle)])
        st = math.sin(self.polar)
        return np.array(
            [st * math.cos(self.azimuth), st * math.sin(self.azimuth), math.cos(self.polar)]
        )

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.tile(self.fixed_direction(), (count, 1))
        if self.dim == 1:
            return np.where(rng.random(count) < 0.5, 1.0, -1.0)[:, None]
        if self.dim == 2:
            ang = rng.uniform(0.0, 2.0 * math.pi, size=count)
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)
        z = rng.uniform(-1.0, 1.0, size=count)
        phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
        s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


# ---------------------------------------------------------------------------
# mark distribution


@dataclass(frozen=True, eq=False)
class MarkDistribution:
    """Law Q of the typical grain.

    kind "deterministic": always returns `grain`.
    kind "segment": random segment with independent length and orientation.
    """

    kind: str
    grain: Grain | None = None
    length: LengthLaw | None = None
    orientation: OrientationLaw | None = None

    def __post_init__(self):
        if self.kind == "deterministic":
            if self.grain is None:
                raise ConfigurationError("deterministic mark law needs a grain")
        elif self.kind == "segment":
            if self.length is None or self.orientation is None:
                raise ConfigurationError("segment mark law needs length and orientation laws")
            if self.orientation.dim not in (1, 2, 3):
                raise ConfigurationError("bad orientation dimension")
        else:
            raise ConfigurationError(f"unknown mark distribution {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.grain.dim if self.kind == "deterministic" else self.orientation.dim

    @property
    def n(self) -> int:
        return self.grain.n if self.kind == "deterministic" else 1

    @property
    def l_max(self) -> float:
        """Almost sure diameter bound for sampled grains."""
        if self.kind == "deterministic":
            return self.grain.diameter
        return self.length.l_max

    @property
    def is_deterministic(self) -> bool:
        if self.kind == "deterministic":
            return True
        return self.length.kind == "fixed" and self.orientation.kind == "fixed"

    def mean_hn(self) -> float:
        """E_Q[H^n(Z_0)] (exact for all built-in laws)."""
        if self.kind == "deterministic":
            return hn_measure(self.grain)
        return self.length.moment(1)

    def length_moment(self, k: int) -> float:
        if self.kind == "deterministic":
            return hn_measure(self.grain) ** k if self.grain.n == 1 else 0.0
        return self.length.moment(k)


def sample_mark(q: MarkDistribution, rng: np.random.Generator) -> Grain:
    """One grain distributed per Q; deterministic given the stream state."""
    return sample_marks(q, 1, rng)[0]


def sample_marks(q: MarkDistribution, count: int, rng: np.random.Generator) -> list[Grain]:
    """Bulk sampler; a single pair of vectorized draws for segment laws."""
    if q.kind == "deterministic":
        return [q.grain] * count
    lengths = q.length.sample(rng, count)
    dirs = q.orientation.sample(rng, count)
    vecs = lengths[:, None] * dirs
    return [SegmentGrain(v) for v in vecs]


# ---------------------------------------------------------------------------
# regularity certificate


@dataclass(frozen=True)
class RegularityCertificate:
    """Witness for the lower density bound H^n(Z~_0 ∩ B_r(x)) >= gamma r^n.

    The enlarged grain Z~_0 extends grains of total length below
    `min_length` along their last segment so the bound holds with gamma = 1
    down to arbitrarily small grains.  Point grains satisfy the bound
    trivially (H^0 of the singleton is 1 >= r^0 gamma for gamma <= 1).
    """

    gamma: float = 1.0
    min_length: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigurationError("gamma must be positive")

    def extend(self, g: Grain) -> Grain:
        """The enlarged grain Z~_0 containing g."""
        if isinstance(g, PointGrain):
            return g
        total = hn_measure(g)
        if total >= self.min_length:
            return g
        if isinstance(g, SegmentGrain):
            if total == 0.0:
                raise ConfigurationError("cannot extend a zero-length segment")
            return SegmentGrain(g.vec * (self.min_length / total))
        v = g.vertices
        d = v[-1] - v[-2]
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise ConfigurationError("cannot extend a degenerate last segment")
        extra = (self.min_length - total) / norm
        return PolylineGrain(np.vstack([v, v[-1] + extra * d]))

    def normalized_gamma(self, g: Grain) -> float:
        """gamma after normalizing eta = H^n restricted to Z~_0 to a
        probability measure (divide by the total mass of eta)."""
        if isinstance(g, PointGrain):
            return self.gamma  # eta is already a unit point mass
        return self.gamma / hn_measure(self.extend(g))

    def check_sampled(self, q: MarkDistribution, rng: np.random.Generator, trials: int = 1000) -> bool:
        """Sampled verification of the certificate: for random (grain,
        x in grain, r in (0,1)), H^n(Z~_0 ∩ B_r(x)) >= gamma r^n exactly
        (ball/segment intersection lengths are computed in closed form)."""
        for _ in range(trials):
            g = sample_mark(q, rng)
            if isinstance(g, PointGrain):
                continue  # trivially satisfied
            x = _random_point_on(g, rng)
            r = rng.uniform(1e-6, 1.0 - 1e-6)
            ext = self.extend(g)
            inter = _ball_intersection_length(ext, x, r)
            if inter < self.gamma * r - 1e-9:
                return False
        return True


def _random_point_on(g: Grain, rng: np.random.Generator) -> np.ndarray:
    a, b = g.segment_arrays()
    lengths = np.linalg.norm(b - a, axis=1)
    total = lengths.sum()
    if total == 0.0:
        return a[0].copy()
    i = rng.choice(len(lengths), p=lengths / total)
    t = rng.random()
    return a[i] + t * (b[i] - a[i])


def _ball_intersection_length(g: Grain, x: np.ndarray, r: float) -> float:
    """Exact H^1 of (grain ∩ B_r(x)) for segment/polyline grains."""
    a, b = g.segment_arrays()
    total = 0.0
    for ai, bi in zip(a, b):
        d = bi - ai
        dd = float(d @ d)
        if dd == 0.0:
            continue
        # |ai + t d - x|^2 <= r^2, t in [0, 1]
        w = ai - x
        c2 = dd
        c1 = 2.0 * float(w @ d)
        c0 = float(w @ w) - r * r
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc <= 0.0:
            continue
        sq = math.sqrt(disc)
        t0 = max((-c1 - sq) / (2.0 * c2), 0.0)
        t1 = min((-c1 + sq) / (2.0 * c2), 1.0)
        if t1 > t0:
            total += (t1 - t0) * math.sqrt(dd)
    return total
