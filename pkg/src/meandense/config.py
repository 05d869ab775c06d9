"""Scenario configuration: a flat key-value format with dotted sections.

One `key = value` pair per line, `#` starts a comment; scalar lists are
comma-separated and point lists use `;` between points.  Parsing validates
the whole file and reports every violation, not just the first.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .estimate import BandwidthSchedule
from .geometry import Box
from .grains import (
    LengthLaw,
    MarkDistribution,
    OrientationLaw,
    PointGrain,
    PolylineGrain,
    SegmentGrain,
)
from .poisson import IntensityField

_KNOWN_KEYS = {
    "d", "n", "seed", "N", "N_grid", "replications", "r", "r_grid", "r_max",
    "mc_points", "mark_draws", "output",
    "intensity.kind", "intensity.c", "intensity.a", "intensity.b",
    "intensity.pieces",
    "marks.kind", "marks.grain.kind", "marks.grain.length", "marks.grain.angle",
    "marks.grain.polar", "marks.grain.azimuth", "marks.grain.vertices",
    "marks.length.kind", "marks.length.value", "marks.length.lo",
    "marks.length.hi", "marks.length.rate", "marks.length.cap",
    "marks.orientation.kind", "marks.orientation.angle",
    "marks.orientation.polar", "marks.orientation.azimuth",
    "window.lo", "window.hi",
    "region.lo", "region.hi",
    "x_grid.kind", "x_grid.lo", "x_grid.hi", "x_grid.shape", "x_grid.points",
    "bandwidth.c0", "bandwidth.beta",
}

# intensity.pieceK.{lo,hi,value} are matched dynamically
_PIECE_PREFIX = "intensity.piece"


@dataclass(eq=False)
class ScenarioConfig:
    """Full experiment description parsed from a config file."""

    d: int
    n: int
    intensity: IntensityField
    marks: MarkDistribution
    window: Box
    seed: int = 0
    n_samples: int | None = None
    n_grid: list[int] | None = None
    bandwidth: BandwidthSchedule | None = None
    fixed_r: float | None = None
    r_grid: list[float] | None = None
    r_max: float | None = None
    x_grid: np.ndarray | None = None
    region: Box | None = None
    replications: int = 3
    mc_points: int = 1_000_000
    mark_draws: int = 2000
    output: str = "out"
    raw_text: str = ""

    @property
    def scenario_id(self) -> str:
        canon = "\n".join(
            sorted(
                line.split("#", 1)[0].strip()
                for line in self.raw_text.splitlines()
                if line.split("#", 1)[0].strip()
            )
        )
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def grid_points(self) -> np.ndarray:
        if self.x_grid is not None:
            return self.x_grid
        center = (self.window.lo + self.window.hi) / 2.0
        return center[None, :]

    def query_radius(self) -> float:
        if self.fixed_r is not None:
            return self.fixed_r
        if self.bandwidth is not None and self.n_samples is not None:
            return self.bandwidth.radius(self.n_samples)
        raise ConfigurationError("config needs either r or bandwidth.{c0,beta} with N")


def _parse_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_list(text: str) -> list:
    return [_parse_value(t) for t in text.split(",") if t.strip()]


def _parse_points(text: str) -> np.ndarray:
    rows = [t for t in text.split(";") if t.strip()]
    return np.array([[float(v) for v in row.split(",")] for row in rows])


def _tokenize(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, val = stripped.split("=", 1)
        pairs[key.strip()] = val.strip()
    if errors:
        raise ConfigurationError("\n".join(errors))
    return pairs


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate; raises ConfigurationError listing every
    violation with the offending key and its admissible range."""
    pairs = _tokenize(text)
    errors: list[str] = []

    for key in pairs:
        if key in _KNOWN_KEYS:
            continue
        if key.startswith(_PIECE_PREFIX) and key.rsplit(".", 1)[-1] in ("lo", "hi", "value"):
            continue
        errors.append(f"unknown key {key!r}")

    def get(key, default=None, cast=None):
        if key not in pairs:
            return default
        val = _parse_value(pairs[key])
        if cast is not None:
            try:
                return cast(val)
            except (TypeError, ValueError):
                errors.append(f"{key}: cannot interpret {pairs[key]!r}")
                return default
        return val

    d = get("d", cast=int)
    n = get("n", cast=int)
    if d is None or d not in (1, 2, 3):
        errors.append("d: required, must be in {1, 2, 3}")
        d = 2
    if n is None or not (0 <= n < d):
        errors.append(f"n: required, must satisfy 0 <= n < d (d={d}); "
                      "the n = d case is out of estimator scope")
        n = max(0, d - 1)

    intensity = _build_intensity(pairs, d, errors)
    marks = _build_marks(pairs, d, errors)

    if marks is not None and marks.n != n:
        errors.append(f"marks: grain family has Hausdorff dimension {marks.n}, config says n = {n}")

    window = _build_box(pairs, "window", d, errors, required=True)
    region = _build_box(pairs, "region", d, errors, required=False)

    seed = get("seed", 0, cast=int)
    if seed is not None and seed < 0:
        errors.append("seed: must be a nonnegative 64-bit integer")

    n_samples = get("N", cast=int)
    if n_samples is not None and n_samples <= 0:
        errors.append("N: must be positive")
    n_grid = None
    if "N_grid" in pairs:
        n_grid = [int(v) for v in _parse_list(pairs["N_grid"])]
        if any(v <= 0 for v in n_grid) or sorted(n_grid) != n_grid:
            errors.append("N_grid: must be increasing positive integers")

    bandwidth = None
    if "bandwidth.c0" in pairs or "bandwidth.beta" in pairs:
        c0 = get("bandwidth.c0", 1.0, cast=float)
        beta = get("bandwidth.beta", cast=float)
        if beta is None:
            errors.append("bandwidth.beta: required when a schedule is given")
        else:
            try:
                bandwidth = BandwidthSchedule(c0, beta, d, n)
            except ConfigurationError as exc:
                errors.append(f"bandwidth.beta: {exc}")

    fixed_r = get("r", cast=float)
    if fixed_r is not None and not (0.0 < fixed_r < 2.0):
        errors.append("r: must lie in (0, 2)")
    r_grid = None
    if "r_grid" in pairs:
        r_grid = [float(v) for v in _parse_list(pairs["r_grid"])]
        if any(not (0.0 < v < 2.0) for v in r_grid):
            errors.append("r_grid: all radii must lie in (0, 2)")
    r_max = get("r_max", cast=float)
    if r_max is not None and not (0.0 <= r_max < 2.0):
        errors.append("r_max: must lie in [0, 2)")

    x_grid = _build_x_grid(pairs, d, errors)

    replications = get("replications", 3, cast=int)
    if replications is not None and replications < 1:
        errors.append("replications: must be positive")
    mc_points = get("mc_points", 1_000_000, cast=int)
    if mc_points is not None and mc_points < 2:
        errors.append("mc_points: must be at least 2")
    mark_draws = get("mark_draws", 2000, cast=int)
    if mark_draws is not None and mark_draws < 2:
        errors.append("mark_draws: must be at least 2")
    output = pairs.get("output", "out")

    # moment conditions on the mark law
    if marks is not None:
        if not math.isfinite(marks.l_max):
            errors.append("marks: the law needs a finite diameter bound L_max")
        elif not math.isfinite(marks.mean_hn()):
            errors.append("marks: E_Q[H^n(Z_0)] must be finite")
        elif intensity is not None and intensity.kind == "quadratic" and marks.n == 1:
            if not math.isfinite(marks.length_moment(3)):
                errors.append("marks: quadratic intensity needs E[L^3] < infinity")

    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))

    return ScenarioConfig(
        d=d, n=n, intensity=intensity, marks=marks, window=window, seed=seed,
        n_samples=n_samples, n_grid=n_grid, bandwidth=bandwidth, fixed_r=fixed_r,
        r_grid=r_grid, r_max=r_max, x_grid=x_grid, region=region,
        replications=replications, mc_points=mc_points, mark_draws=mark_draws,
        output=output, raw_text=text,
    )


def _build_intensity(pairs, d, errors) -> IntensityField | None:
    kind = pairs.get("intensity.kind")
    if kind is None:
        errors.append("intensity.kind: required")
        return None
    try:
        if kind == "constant":
            return IntensityField("constant", c=float(_parse_value(pairs.get("intensity.c", "0"))))
        if kind == "quadratic":
            return IntensityField("quadratic")
        if kind == "affine":
            a = float(_parse_value(pairs.get("intensity.a", "0")))
            b = _parse_list(pairs.get("intensity.b", ""))
            if len(b) != d:
                errors.append(f"intensity.b: needs {d} components")
                return None
            return IntensityField("affine", a=a, b=np.array(b, dtype=float))
        if kind == "piecewise":
            count = int(_parse_value(pairs.get("intensity.pieces", "0")))
            pieces = []
            for k in range(1, count + 1):
                lo = _parse_list(pairs.get(f"{_PIECE_PREFIX}{k}.lo", ""))
                hi = _parse_list(pairs.get(f"{_PIECE_PREFIX}{k}.hi", ""))
                val = float(_parse_value(pairs.get(f"{_PIECE_PREFIX}{k}.value", "0")))
                if len(lo) != d or len(hi) != d:
                    errors.append(f"intensity.piece{k}: lo/hi need {d} components")
                    return None
                pieces.append((Box(np.array(lo, float), np.array(hi, float)), val))
            return IntensityField("piecewise", pieces=tuple(pieces))
        errors.append(f"intensity.kind: unknown kind {kind!r}")
    except ConfigurationError as exc:
        errors.append(f"intensity: {exc}")
    return None


def _build_marks(pairs, d, errors) -> MarkDistribution | None:
    kind = pairs.get("marks.kind")
    if kind is None:
        errors.append("marks.kind: required")
        return None
    try:
        if kind == "deterministic":
            return MarkDistribution("deterministic", grain=_build_grain(pairs, d, errors))
        if kind == "segment_law":
            length = _build_length(pairs, errors)
            orientation = _build_orientation(pairs, d, errors)
            if length is None or orientation is None:
                return None
            return MarkDistribution("segment", length=length, orientation=orientation)
        errors.append(f"marks.kind: unknown kind {kind!r}; use deterministic or segment_law")
    except ConfigurationError as exc:
        errors.append(f"marks: {exc}")
    return None


def _build_grain(pairs, d, errors):
    gkind = pairs.get("marks.grain.kind")
    if gkind == "point":
        return PointGrain(dim=d)
    if gkind == "segment":
        length = float(_parse_value(pairs.get("marks.grain.length", "1")))
        if d == 2:
            return SegmentGrain.from_angle(length, float(_parse_value(pairs.get("marks.grain.angle", "0"))))
        law = OrientationLaw(
            "fixed", dim=d,
            angle=float(_parse_value(pairs.get("marks.grain.angle", "0"))),
            polar=float(_parse_value(pairs.get("marks.grain.polar", "0"))),
            azimuth=float(_parse_value(pairs.get("marks.grain.azimuth", "0"))),
        )
        return SegmentGrain(length * law.fixed_direction())
    if gkind == "polyline":
        pts = _parse_points(pairs.get("marks.grain.vertices", ""))
        if pts.size == 0 or pts.shape[1] != d:
            errors.append(f"marks.grain.vertices: needs {d}-d points separated by ';'")
            return PointGrain(dim=d)
        return PolylineGrain(pts)
    errors.append("marks.grain.kind: required for deterministic marks (point|segment|polyline)")
    return PointGrain(dim=d)


def _build_length(pairs, errors) -> LengthLaw | None:
    kind = pairs.get("marks.length.kind")
    try:
        if kind == "fixed":
            return LengthLaw("fixed", value=float(_parse_value(pairs.get("marks.length.value", "1"))))
        if kind == "uniform":
            return LengthLaw(
                "uniform",
                lo=float(_parse_value(pairs.get("marks.length.lo", "0"))),
                hi=float(_parse_value(pairs.get("marks.length.hi", "1"))),
            )
        if kind == "trunc_exp":
            cap = pairs.get("marks.length.cap")
            return LengthLaw(
                "trunc_exp",
                rate=float(_parse_value(pairs.get("marks.length.rate", "1"))),
                cap=float(_parse_value(cap)) if cap is not None else None,
            )
        errors.append("marks.length.kind: required (fixed|uniform|trunc_exp)")
    except ConfigurationError as exc:
        errors.append(f"marks.length: {exc}")
    return None


def _build_orientation(pairs, d, errors) -> OrientationLaw | None:
    kind = pairs.get("marks.orientation.kind")
    try:
        if kind in ("fixed", "uniform"):
            return OrientationLaw(
                kind, dim=d,
                angle=float(_parse_value(pairs.get("marks.orientation.angle", "0"))),
                polar=float(_parse_value(pairs.get("marks.orientation.polar", "0"))),
                azimuth=float(_parse_value(pairs.get("marks.orientation.azimuth", "0"))),
            )
        errors.append("marks.orientation.kind: required (fixed|uniform)")
    except ConfigurationError as exc:
        errors.append(f"marks.orientation: {exc}")
    return None


def _build_box(pairs, prefix, d, errors, required) -> Box | None:
    lo_key, hi_key = f"{prefix}.lo", f"{prefix}.hi"
    if lo_key not in pairs and hi_key not in pairs:
        if required:
            errors.append(f"{prefix}.lo / {prefix}.hi: required")
        return None
    lo = _parse_list(pairs.get(lo_key, ""))
    hi = _parse_list(pairs.get(hi_key, ""))
    if len(lo) != d or len(hi) != d:
        errors.append(f"{prefix}: lo and hi need {d} components each")
        return None
    try:
        return Box(np.array(lo, float), np.array(hi, float))
    except ConfigurationError as exc:
        errors.append(f"{prefix}: {exc}")
        return None


def _build_x_grid(pairs, d, errors) -> np.ndarray | None:
    kind = pairs.get("x_grid.kind")
    if kind is None:
        return None
    if kind == "list":
        try:
            pts = _parse_points(pairs.get("x_grid.points", ""))
        except ValueError:
            errors.append("x_grid.points: malformed point list")
            return None
        if pts.size == 0 or pts.shape[1] != d:
            errors.append(f"x_grid.points: needs {d}-d points separated by ';'")
            return None
        return pts
    if kind == "lattice":
        lo = _parse_list(pairs.get("x_grid.lo", ""))
        hi = _parse_list(pairs.get("x_grid.hi", ""))
        shape = [int(v) for v in _parse_list(pairs.get("x_grid.shape", ""))]
        if len(lo) != d or len(hi) != d or len(shape) != d:
            errors.append(f"x_grid: lo, hi and shape need {d} components each")
            return None
        if any(s < 1 for s in shape):
            errors.append("x_grid.shape: all counts must be >= 1")
            return None
        axes = [np.linspace(lo[k], hi[k], shape[k]) for k in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)
    errors.append("x_grid.kind: must be lattice or list")
    return None


def lattice_points(box: Box, counts) -> np.ndarray:
    """Cell-centered lattice over a box (used for region-level checks)."""
    counts = np.atleast_1d(np.asarray(counts, dtype=int))
    axes = []
    for k in range(box.dim):
        edges = np.linspace(box.lo[k], box.hi[k], counts[k] + 1)
        axes.append((edges[:-1] + edges[1:]) / 2.0)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
