"""Online LQ control of continuous-time stochastic linear systems."""

from ._ctlqr import (
    ConvergenceError,
    DimensionError,
    EmptyMarginError,
    Error,
    InstabilityError,
    IoError,
    RiccatiSolution,
    ValueError,
    __version__,
    care_solve,
    epsilon0,
    format_config,
    lyapunov_solve,
    matrix_exp,
    noise_gramian,
    riccati_residual,
    run_experiment,
    run_replicate,
    spectral_abscissa,
    stability_margin,
    x29a_preset,
)

__all__ = [
    "ConvergenceError",
    "DimensionError",
    "EmptyMarginError",
    "Error",
    "InstabilityError",
    "IoError",
    "RiccatiSolution",
    "ValueError",
    "__version__",
    "care_solve",
    "epsilon0",
    "format_config",
    "lyapunov_solve",
    "matrix_exp",
    "noise_gramian",
    "riccati_residual",
    "run_experiment",
    "run_replicate",
    "spectral_abscissa",
    "stability_margin",
    "x29a_preset",
]
