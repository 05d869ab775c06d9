"""meandense: simulation and mean-density estimation for inhomogeneous
Boolean models with lower-dimensional typical grains.

Three cross-checkable routes to the mean density of the germ-grain union:
exact quadrature of the density formula, Monte Carlo estimation from the
empirical capacity functional of simulated realizations, and the weighted
Minkowski-content limit of sausage integrals.
"""

__version__ = "0.1.0"

from .boolean import BooleanRealization, simulate
from .config import ScenarioConfig, parse_config
from .errors import ConfigurationError, NumericError, QueryError
from .estimate import (
    BandwidthSchedule,
    EstimateReport,
    contact_derivative,
    convergence_study,
    count_estimate,
    density_estimate,
    empirical_capacity,
    histogram_reduction,
    simulate_density_estimate,
)
from .exact import (
    DensityField,
    analytic_segment_density,
    capacity_probability,
    density_grid,
    deterministic_density,
    exact_density,
)
from .geometry import Ball, Box, SegmentShape, ball_volume, clip_segment_box, dist_point_segment
from .grains import (
    LengthLaw,
    MarkDistribution,
    OrientationLaw,
    PointGrain,
    PolylineGrain,
    RegularityCertificate,
    SegmentGrain,
    grain_distance,
    hn_measure,
    integrate_along,
    sample_mark,
)
from .minkowski import MinkowskiRun, bound_check, content_limit, sausage_integral
from .poisson import (
    CallableField,
    IntensityField,
    MarkedGermSample,
    check_finiteness,
    intensity_bound,
    sample_germs,
)
from .streams import derive_stream
