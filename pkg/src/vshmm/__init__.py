"""Multirate time integration with variable step sizes for multiscale systems.

The package integrates ODE/PDE systems whose right-hand side splits into
components acting on separated temporal scales.  Each truncated sub-system is
stepped with its own kernel-modulated step size, so the cost per unit time
grows linearly with the number of scales while the sampled solution tracks
the hidden slow variables.  Direct simulation, averaged-equation and
brute-force effective-force oracles are included for validation, plus a
sparse Fourier spectral backend for periodic PDE benchmarks.
"""

from vshmm.kernels import (
    StepKernel,
    cosine_kernel,
    polynomial_kernel,
    constant_kernel,
    kernel_by_name,
    eval_kernel,
    theta,
    theta_inverse,
    verify_kernel,
)
from vshmm.systems import MultiscaleSystem, rhs_at_level, relax_scales
from vshmm.steppers import (
    Trajectory,
    BlowUpError,
    euler_step,
    rk4_step,
    dns_integrate,
)
from vshmm.multirate import (
    VshmmConfig,
    VshmmSchedule,
    build_schedule,
    macro_step,
    vshmm_integrate,
    torus_sampling_diagnostic,
)

__version__ = "0.1.0"
