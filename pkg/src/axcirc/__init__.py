"""axcirc: mixtures of copula-linked circular-axial distributions.

The package models bivariate angular data where one coordinate is
circular (period 2pi) and the other axial (period pi). A periodic
copula density couples arbitrary marginals from the von Mises and
wrapped Cauchy families; finite mixtures of such joints, with
covariate-dependent mixing weights through a multinomial-logistic
link, are estimated by EM. Parametric-bootstrap equal-tail intervals,
a simulation harness, and a command-line interface round things out.
"""

from ._backend import backend_name
from ._errors import (
    AxcircError,
    DataError,
    DegenerateInputError,
    DomainError,
    FitFailureError,
    NumericalError,
    UsageError,
)
from .directional import (
    Family,
    MarginalSpec,
    axial_angle,
    cdf,
    circular_angle,
    inv_cdf,
    log_pdf,
    pdf,
    sample,
    weighted_mle,
)
from .circula import (
    ComponentParams,
    bwc_density,
    circula_density,
    conditional_wc,
    joint_density,
    sample_pair,
    weighted_rho_mle,
)
from .mixture import (
    Dataset,
    FitConfig,
    FitResult,
    MixtureModel,
    e_step,
    fit,
    log_likelihood,
    m_step_beta,
    m_step_theta,
    mixing_weights,
    mixture_density,
    select_model,
)
from .bootstrap import (
    BootstrapResult,
    align_labels,
    et_interval,
    parametric_bootstrap,
    permute_model,
)
from .simstudy import (
    RecoveryReport,
    Scenario,
    builtin_scenario,
    run_recovery_study,
    simulate_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "AxcircError",
    "BootstrapResult",
    "ComponentParams",
    "DataError",
    "Dataset",
    "DegenerateInputError",
    "DomainError",
    "Family",
    "FitConfig",
    "FitFailureError",
    "FitResult",
    "MarginalSpec",
    "MixtureModel",
    "NumericalError",
    "RecoveryReport",
    "Scenario",
    "UsageError",
    "align_labels",
    "axial_angle",
    "backend_name",
    "builtin_scenario",
    "bwc_density",
    "cdf",
    "circula_density",
    "circular_angle",
    "conditional_wc",
    "e_step",
    "et_interval",
    "fit",
    "inv_cdf",
    "joint_density",
    "log_likelihood",
    "log_pdf",
    "m_step_beta",
    "m_step_theta",
    "mixing_weights",
    "mixture_density",
    "parametric_bootstrap",
    "pdf",
    "permute_model",
    "run_recovery_study",
    "sample",
    "sample_pair",
    "select_model",
    "simulate_dataset",
    "weighted_mle",
    "weighted_rho_mle",
    "__version__",
]
