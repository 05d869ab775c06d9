"""Intensity fields and the thinned marked Poisson sampler."""

import math

import numpy as np
import pytest

from meandense import (
    CallableField,
    ConfigurationError,
    IntensityField,
    LengthLaw,
    MarkDistribution,
    OrientationLaw,
    PointGrain,
    SegmentGrain,
    check_finiteness,
    intensity_bound,
    sample_germs,
)
from meandense.geometry import Box
from meandense.streams import derive_stream

UNIT_SEGMENT = MarkDistribution("deterministic", grain=SegmentGrain(np.array([1.0, 0.0])))
RANDOM_SEGMENTS = MarkDistribution(
    "segment",
    length=LengthLaw("uniform", lo=0.5, hi=1.5),
    orientation=OrientationLaw("uniform", dim=2),
)


# ---------------------------------------------------------------------------
# intensity fields


def test_constant_field():
    f = IntensityField("constant", c=2.5)
    assert np.all(f.values(np.zeros((4, 2))) == 2.5)
    assert f([1.0, 1.0]) == 2.5
    with pytest.raises(ConfigurationError):
        IntensityField("constant", c=-1.0)


def test_quadratic_field():
    f = IntensityField("quadratic")
    assert f([3.0, 4.0]) == pytest.approx(25.0)
    vals = f.values(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert np.allclose(vals, [1.0, 4.0])
    assert f.discontinuity_description == "empty"


def test_affine_field_clips_at_zero():
    f = IntensityField("affine", a=1.0, b=np.array([-1.0, 0.0]))
    assert f([0.0, 0.0]) == pytest.approx(1.0)
    assert f([2.0, 0.0]) == 0.0  # 1 - 2 clipped
    with pytest.raises(ConfigurationError):
        IntensityField("affine", a=1.0)


def test_piecewise_field():
    f = IntensityField(
        "piecewise",
        pieces=(
            (Box([0.0, 0.0], [1.0, 1.0]), 2.0),
            (Box([1.0, 0.0], [2.0, 1.0]), 5.0),
        ),
    )
    assert f([0.5, 0.5]) == 2.0
    assert f([1.5, 0.5]) == 5.0
    assert f([3.0, 3.0]) == 0.0
    assert "faces" in f.discontinuity_description
    with pytest.raises(ConfigurationError):
        IntensityField("piecewise", pieces=((Box([0, 0], [1, 1]), -1.0),))
    with pytest.raises(ConfigurationError):
        IntensityField("gaussian")


@pytest.mark.parametrize(
    "f",
    [
        IntensityField("constant", c=3.0),
        IntensityField("quadratic"),
        IntensityField("affine", a=0.5, b=np.array([1.0, -2.0])),
        IntensityField(
            "piecewise",
            pieces=((Box([-1.0, -1.0], [0.5, 0.5]), 4.0), (Box([0.5, 0.5], [2.0, 2.0]), 1.0)),
        ),
    ],
)
def test_intensity_bound_dominates_samples(f):
    box = Box([-1.0, -1.0], [2.0, 2.0])
    bound = intensity_bound(f, box)
    samples = box.sample(np.random.default_rng(0), 5000)
    assert float(f.values(samples).max()) <= bound + 1e-12


def test_callable_field_needs_bound():
    f = CallableField(lambda pts: np.ones(np.atleast_2d(pts).shape[0]))
    with pytest.raises(ConfigurationError):
        intensity_bound(f, Box([0.0, 0.0], [1.0, 1.0]))
    bounded = CallableField(f.fn, bound_fn=lambda box: 1.0)
    assert intensity_bound(bounded, Box([0.0, 0.0], [1.0, 1.0])) == 1.0
    # scalar callables are adapted row by row
    scalar = CallableField(lambda p: float(np.sum(p)))
    assert np.allclose(scalar.values(np.array([[1.0, 2.0], [0.0, 1.0]])), [3.0, 1.0])


# ---------------------------------------------------------------------------
# germ sampling


def test_sample_germs_deterministic_and_in_box():
    f = IntensityField("quadratic")
    box = Box([-1.0, -1.0], [1.0, 1.0])
    s1 = sample_germs(f, UNIT_SEGMENT, box, derive_stream(3, 0))
    s2 = sample_germs(f, UNIT_SEGMENT, box, derive_stream(3, 0))
    assert np.array_equal(s1.points, s2.points)
    assert len(s1.grains) == len(s1)
    assert box.contains(s1.points).all() or len(s1) == 0
    assert s1.proposed >= len(s1)


def test_sample_germs_zero_intensity():
    f = IntensityField("constant", c=0.0)
    s = sample_germs(f, UNIT_SEGMENT, Box([0.0, 0.0], [1.0, 1.0]), derive_stream(0, 0))
    assert len(s) == 0 and s.proposed == 0


def test_sample_germs_count_matches_intensity_integral():
    # N_accept ~ Poisson(∫ f); compare the mean over many replicates
    f = IntensityField("quadratic")
    box = Box([-1.0, -1.0], [1.0, 1.0])
    target = 8.0 / 3.0  # ∫∫ (x² + y²) over [-1,1]²
    counts = [
        len(sample_germs(f, UNIT_SEGMENT, box, derive_stream(11, i))) for i in range(3000)
    ]
    counts = np.asarray(counts, dtype=float)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - target) < 4 * se


def test_sample_germs_acceptance_ratio():
    # accepted/proposed -> (∫ f)/(M vol) within 3 standard errors
    f = IntensityField("quadratic")
    box = Box([-1.0, -1.0], [1.0, 1.0])
    accepted = proposed = 0
    for i in range(2000):
        s = sample_germs(f, UNIT_SEGMENT, box, derive_stream(23, i))
        accepted += len(s)
        proposed += s.proposed
    m_bound = intensity_bound(f, box)
    p = (8.0 / 3.0) / (m_bound * box.volume)
    se = math.sqrt(p * (1.0 - p) / proposed)
    assert abs(accepted / proposed - p) < 3 * se


def test_sample_germs_spatial_density_follows_f():
    # under f = |y|² on [-1,1]², germs concentrate away from the center:
    # P(|y|_inf <= 0.5) = ∫_inner f / ∫ f = (1/6)/(8/3) = 1/16
    f = IntensityField("quadratic")
    box = Box([-1.0, -1.0], [1.0, 1.0])
    pts = np.vstack(
        [sample_germs(f, UNIT_SEGMENT, box, derive_stream(5, i)).points for i in range(4000)]
    )
    inner = np.all(np.abs(pts) <= 0.5, axis=1).mean()
    se = math.sqrt((1 / 16) * (15 / 16) / pts.shape[0])
    assert abs(inner - 1.0 / 16.0) < 4 * se


# ---------------------------------------------------------------------------
# finiteness diagnostic


def test_check_finiteness_matches_stadium_area():
    # constant f = 1, deterministic unit segment: the sausage integral is
    # the stadium area 2 l r + π r²
    f = IntensityField("constant", c=1.0)
    finite, est = check_finiteness(
        f, UNIT_SEGMENT, 1.0, derive_stream(0, 0), mark_draws=2000, points_per_mark=64
    )
    assert finite
    assert est == pytest.approx(2.0 + math.pi, rel=0.02)


def test_check_finiteness_point_grain():
    f = IntensityField("constant", c=2.0)
    q = MarkDistribution("deterministic", grain=PointGrain(dim=2))
    finite, est = check_finiteness(f, q, 0.5, derive_stream(1, 0), mark_draws=500)
    assert finite
    assert est == pytest.approx(2.0 * math.pi * 0.25, rel=0.05)


def test_check_finiteness_random_marks():
    f = IntensityField("constant", c=1.0)
    finite, est = check_finiteness(f, RANDOM_SEGMENTS, 0.1, derive_stream(2, 0), mark_draws=4000)
    # E[2 L r + π r²] with E[L] = 1
    assert finite
    assert est == pytest.approx(0.2 + math.pi * 0.01, rel=0.05)
