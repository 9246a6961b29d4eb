"""Two-block VAR(1) estimation, spectral analysis and block Granger-causality tests.

The x block evolves on its own and drives the z block through a cross
transition matrix:

    x_t = A x_{t-1} + u_t
    z_t = B x_{t-1} + C z_{t-1} + v_t
"""

from .errors import (BlockVARError, ConvergenceFailure, DegenerateInput, InvalidArgument,
                     NumericalBreakdown, RankDeficiency, TuningFailure)
from .estimate import (EstimationConfig, FitResult, build_design_response, combine_fits,
                       estimate_block1, estimate_block2, forecast_one_step, penalized_objective,
                       rank_of)
from .evaluation import (ExperimentReport, MetricReport, TestDesign, TuningGrid, bic_select,
                         global_clustering_coefficient, rolling_windows, run_experiment,
                         run_test_design, stability_selection, support_metrics)
from .granger import (PartialCovariances, TestReport, chi2_upper_quantile, granger_test,
                      higher_criticism_test, partial_covariances, rank_test,
                      std_normal_upper_tail, subsample_calibration)
from .simulate import (GAUSSIAN, PRESETS, ExperimentSpec, ModelParams, NoiseSpec,
                       generate_params, simulate_system)
from .solvers import (DEFAULT_CONTROL, SolverControl, fista_nuclear, graphical_lasso,
                      multivariate_weighted_lasso, soft_threshold, svt)
from .spectra import SpectralSummary, mu_extremes, spectral_density_W, spectrum_bounds_check

__version__ = "0.1.0"
