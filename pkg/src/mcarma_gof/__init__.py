"""Spectral goodness-of-fit tests for sampled multivariate CARMA processes."""

__version__ = "0.1.0"

from .errors import MCARMAError, NumericalError, ValidationError  # noqa: E402
from .model import (StateSpaceModel, DiscretizedModel, discretize, validate_model,  # noqa: E402
                    spectral_density, fourth_moment_matrix)
from .simulate import LevyDriver, NigParams, exact_gaussian_sample, euler_maruyama  # noqa: E402
from .spectral import periodogram, empirical_spectral_process, TrajectoryEngine  # noqa: E402
from .weights import WeightFunction, indicator_identity, self_normalized  # noqa: E402
from .limit import LimitSampler, LimitSamplerConfig, analytic_limit_covariance  # noqa: E402
from .gof import (TestResult, run_test, gr_statistic, cvm_statistic,  # noqa: E402
                  sn_gr_statistic, sn_cvm_statistic)
from . import catalog  # noqa: E402
