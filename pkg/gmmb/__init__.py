__version__ = "0.1.0"

from .data import (
    BoundKind,
    BoundsSpec,
    Dataset,
    ValidationReport,
    VariableBounds,
    load_csv,
    nudge_boundary,
    parse_bounds_spec,
    validate,
    write_csv,
)
from .transform import (
    TransformParams,
    derivative,
    estimate_marginal_lambda,
    forward,
    inverse,
    log_derivative,
    log_jacobian,
    log_jacobian_rows,
    transform_data,
)
from .mixture import (
    CovarianceFactors,
    MixtureParams,
    ModelCode,
    component_log_densities,
    count_free_parameters,
    decompose_covariance,
    log_component_density,
    log_density_original,
    log_mixture_density,
    log_mixture_density_transformed,
)
from .ecm import (
    FitConfig,
    FitFailure,
    FitResult,
    Responsibilities,
    cm_step_lambda,
    cm_step_theta,
    e_step,
    fit,
    initialize,
    try_fit,
)
from .diagnostics import CriterionReport, adjusted_rand, bic, criteria, entropy_measures, icl, map_classify
from .sweep import SweepResult, sweep
from .simulate import mixture_from_covariances, simulate
from .bundle import ResultBundle, load_fit_bundle, write_fit_bundle

__all__ = [
    '__version__',
    'BoundKind',
    'BoundsSpec',
    'Dataset',
    'ValidationReport',
    'VariableBounds',
    'load_csv',
    'nudge_boundary',
    'parse_bounds_spec',
    'validate',
    'write_csv',
    'TransformParams',
    'derivative',
    'estimate_marginal_lambda',
    'forward',
    'inverse',
    'log_derivative',
    'log_jacobian',
    'log_jacobian_rows',
    'transform_data',
    'CovarianceFactors',
    'MixtureParams',
    'ModelCode',
    'component_log_densities',
    'count_free_parameters',
    'decompose_covariance',
    'log_component_density',
    'log_density_original',
    'log_mixture_density',
    'log_mixture_density_transformed',
    'FitConfig',
    'FitFailure',
    'FitResult',
    'Responsibilities',
    'cm_step_lambda',
    'cm_step_theta',
    'e_step',
    'fit',
    'initialize',
    'try_fit',
    'CriterionReport',
    'adjusted_rand',
    'bic',
    'criteria',
    'entropy_measures',
    'icl',
    'map_classify',
    'SweepResult',
    'sweep',
    'mixture_from_covariances',
    'simulate',
    'ResultBundle',
    'load_fit_bundle',
    'write_fit_bundle',
]
