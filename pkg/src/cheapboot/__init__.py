"""Cheap bootstrap: confidence intervals from very few resamples.

The core constructors take a :class:`ResampleSummary` (original estimate plus
``B`` resample estimates) and return an :class:`Interval`; see
:mod:`cheapboot.cheap`. Nested (noisy computation) intervals live in
:mod:`cheapboot.nested`, subsampling variants in :mod:`cheapboot.subsampling`
and the experiment harness in :mod:`cheapboot.harness`.
"""

from .baselines import basic_bootstrap_interval, percentile_bootstrap_interval, se_bootstrap_interval
from .cheap import (
    EllipsoidRegion,
    Interval,
    ResampleSummary,
    cheap_interval,
    cheap_one_sided,
    cheap_region,
    cheap_se_interval,
    region_contains,
    run_cheap_bootstrap,
)
from .errors import (
    CheapBootError,
    ConfigError,
    DomainError,
    EstimatorError,
    InsufficientResamples,
    SingularScatter,
    StatisticalError,
)
from .nested import NestedEstimate, ThetaGrid, interval_centered_mean, interval_centered_original, q_M, solve_qO
from .rng import RandomStream, WeightedSample
from .subsampling import SubsamplePlan, cheap_blb, cheap_m_out_of_n, cheap_sdb

__version__ = "0.1.0"
