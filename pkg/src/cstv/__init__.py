"""Compressive-sensing reconstruction with total-variation priors.

Matrix-free snapshot sensing operators (permuted Hadamard, shifting-mask
coded apertures), an iterative-clipping TV denoiser, and three
reconstruction estimators with a scikit-learn style ``fit(operator, y)``
interface, plus a PSNR benchmark harness and a CLI (``cstv``).
"""

from .datasets import moving_rectangle_video, spectral_blob_cube
from .harness import (
    BenchmarkRow,
    BenchmarkSpec,
    compression_ratio,
    psnr,
    run_benchmark,
    simulate_snapshot,
)
from .operators import (
    CodedAperture,
    FiniteDifference,
    MaskStack,
    PermutedHadamard,
    SensingOperator,
    SingularGramError,
    cacti_shifts,
    cassi_shifts,
    fwht,
    make_coded_aperture,
    make_permuted_hadamard,
    random_mask_stack,
)
from .solvers import (
    AccGapTV,
    AdmmTV,
    GapTV,
    ReconstructionResult,
    SolverConfig,
    admm_x_update,
    euclidean_projection,
    make_solver,
    reconstruct,
)
from .tvdenoise import TVDenoiser, clip, tv_denoise

__version__ = "0.1.0"

__all__ = [
    "AccGapTV",
    "AdmmTV",
    "BenchmarkRow",
    "BenchmarkSpec",
    "CodedAperture",
    "FiniteDifference",
    "GapTV",
    "MaskStack",
    "PermutedHadamard",
    "ReconstructionResult",
    "SensingOperator",
    "SingularGramError",
    "SolverConfig",
    "TVDenoiser",
    "admm_x_update",
    "cacti_shifts",
    "cassi_shifts",
    "clip",
    "compression_ratio",
    "euclidean_projection",
    "fwht",
    "make_coded_aperture",
    "make_permuted_hadamard",
    "make_solver",
    "moving_rectangle_video",
    "psnr",
    "random_mask_stack",
    "reconstruct",
    "run_benchmark",
    "simulate_snapshot",
    "spectral_blob_cube",
    "tv_denoise",
]
