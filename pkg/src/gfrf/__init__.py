"""Regularized frequency-domain estimation of Volterra models.

The package covers two connected jobs:

* estimating the frequency-domain coefficients (generalized frequency
  response functions) of a polynomial nonlinear model from one period of a
  multisine experiment, with a Gaussian smoothness/decay prior carried from
  the time domain into the frequency domain; and
* decomposing the windowed output spectrum of a second-order system exactly
  into its steady-state part and three transient terms, including the
  special identities available for diagonal (static-nonlinearity) kernels.

See the README for the conventions (forward transform without 1/N) and the
CLI entry points.
"""

from .covariance import (
    DcHyperparameters,
    OrderHyper,
    TimePrior,
    build_time_prior,
    dc_matrix,
    to_frequency_domain,
)
from .errors import (
    DimensionError,
    GfrfError,
    NumericalError,
    ResourceError,
    SpecError,
)
from .estimator import (
    EstimationProblem,
    GfrfEstimate,
    OrderBasis,
    TuningResult,
    build_order_basis,
    build_problem,
    build_regressor,
    kernel_gfrf_on_grid,
    map_estimate,
    map_estimate_time_domain,
    negative_log_marginal_likelihood,
    output_covariance,
    relative_gfrf_error,
    sigma_tot,
    tune_hyperparameters,
)
from .mdft import (
    FourierMatrix,
    SymmetryReduction,
    apply_mdft,
    build_symmetry_reduction,
    expand_unique,
    fourier_matrix,
    reduced_fourier,
)
from .signals import (
    FrequencyGrid,
    MultisineSpec,
    Spectrum,
    TimeSignal,
    dft,
    excited_output_indices,
    frequency_grid,
    generate_multisine,
    idft,
)
from .transient import (
    HammersteinTerms,
    T1T2Report,
    TransientDecomposition,
    difference_signal,
    hammerstein_terms,
    linear_transient,
    steady_state_spectrum,
    transient_terms,
    verify_t1_equals_t2,
)
from .volterra import (
    BlockSystem,
    VolterraKernel,
    kernel_from_blocks,
    simulate_steady_state,
    simulate_with_history,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "GfrfError",
    "SpecError",
    "DimensionError",
    "ResourceError",
    "NumericalError",
    # signals
    "MultisineSpec",
    "TimeSignal",
    "Spectrum",
    "FrequencyGrid",
    "generate_multisine",
    "dft",
    "idft",
    "excited_output_indices",
    "frequency_grid",
    # kernels and simulation
    "VolterraKernel",
    "BlockSystem",
    "kernel_from_blocks",
    "symmetrize",
    "simulate_steady_state",
    "simulate_with_history",
    # multidimensional transform machinery
    "FourierMatrix",
    "fourier_matrix",
    "apply_mdft",
    "SymmetryReduction",
    "build_symmetry_reduction",
    "reduced_fourier",
    "expand_unique",
    # priors
    "OrderHyper",
    "DcHyperparameters",
    "TimePrior",
    "dc_matrix",
    "build_time_prior",
    "to_frequency_domain",
    # estimation
    "OrderBasis",
    "EstimationProblem",
    "GfrfEstimate",
    "TuningResult",
    "build_order_basis",
    "build_regressor",
    "build_problem",
    "map_estimate",
    "map_estimate_time_domain",
    "negative_log_marginal_likelihood",
    "output_covariance",
    "sigma_tot",
    "tune_hyperparameters",
    "kernel_gfrf_on_grid",
    "relative_gfrf_error",
    # transient decomposition
    "TransientDecomposition",
    "T1T2Report",
    "HammersteinTerms",
    "difference_signal",
    "linear_transient",
    "steady_state_spectrum",
    "transient_terms",
    "verify_t1_equals_t2",
    "hammerstein_terms",
]
