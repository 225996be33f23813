"""Elliptic determinantal point processes on circles and intervals.

Seven families of biorthogonal theta systems, their correlation kernels and
degeneration limits, and the equivalent noncolliding-bridge descriptions,
with a verification harness covering every identity the library relies on.
"""

__version__ = "0.1.0"

from .biortho import BiorthoFamily, gram, gram_converged, norm_const
from .bridges import (RMatrix, boundary_of, bridge_density, ck_residual,
                      matrix_identity_residual, r_matrix, transition,
                      transition_images)
from .dpp_kernels import (ChainConfig, InfiniteKernelSpec, KernelSpec,
                          corr_det, corr_oracle, density, empirical_density,
                          infinite_kernel, kernel, kernel_matrix, mcmc_sample,
                          sine_kernel, trig_kernel)
from .macdonald import (AlcoveConfiguration, denominator_residual,
                        selberg_check, weyl_w)
from .root_systems import FAMILIES, DerivedFamily, FamilySpec, derive, validate
from .theta_core import AccuracyError, eta_and_q, theta, theta_parts, theta_series
from .verification import CheckResult, run_suites

__all__ = [
    "AccuracyError",
    "AlcoveConfiguration",
    "BiorthoFamily",
    "ChainConfig",
    "CheckResult",
    "DerivedFamily",
    "FAMILIES",
    "FamilySpec",
    "InfiniteKernelSpec",
    "KernelSpec",
    "RMatrix",
    "__version__",
    "boundary_of",
    "bridge_density",
    "ck_residual",
    "corr_det",
    "corr_oracle",
    "denominator_residual",
    "density",
    "derive",
    "empirical_density",
    "eta_and_q",
    "gram",
    "gram_converged",
    "infinite_kernel",
    "kernel",
    "kernel_matrix",
    "matrix_identity_residual",
    "mcmc_sample",
    "norm_const",
    "r_matrix",
    "run_suites",
    "selberg_check",
    "sine_kernel",
    "theta",
    "theta_parts",
    "theta_series",
    "transition",
    "transition_images",
    "trig_kernel",
    "validate",
    "weyl_w",
]
