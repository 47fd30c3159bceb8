"""Scattering moments of compound Poisson point processes and self-similar
processes: simulators, estimators, theoretical oracles and experiment
presets."""

from .filters import BUMP, GaborFilter, WindowFunction, bump_window, sample_frequency, scale_ladder, window_pnorm
from .fitting import SlopeFit, TooFewPointsError, fit_loglog, fit_slope
from .pointprocess import (
    ChargeDistribution,
    IntensityModel,
    PointPattern,
    attach_charges,
    expected_count,
    sgn_transform,
    simulate_homogeneous,
    simulate_inhomogeneous,
    superpose,
)
from .scattering import (
    MomentEstimate,
    conv_at,
    conv_at_path,
    first_order_invariant,
    first_order_invariant_path,
    first_order_pointwise,
    pointwise_window_mc,
    second_order_invariant,
)
from .selfsimilar import FBM, AlphaStable, SamplePath, simulate_alpha_stable, simulate_fbm
from .theory import (
    Prediction,
    m_lambda,
    poisson_tail_moment,
    predict_first_order,
    predict_second_order_K,
    predict_selfsim,
    taylor_error_decay,
    taylor_expansion,
    two_point_sides,
)

__version__ = "0.1.0"
