"""Generalized nonlinear Fourier transform with higher-multiplicity eigenvalues.

Direct and inverse transforms, exact spectral-domain evolution/equalization,
a stochastic NLSE channel simulator, and soliton-communication experiments.
"""

__version__ = "0.1.0"

from .channel import SsfmConfig, awgn_slice, propagate, propagate_batch
from .direct import (
    DiscreteMode,
    GnftSpectrum,
    NearDegenerateError,
    SearchConfig,
    SpectralSingularityError,
    continuous_spectrum,
    find_modes,
    gnft,
    norming_double,
    norming_general,
    norming_simple,
)
from .envelope import (
    NORMALIZED,
    PHYSICAL,
    Containment,
    PhysicalParams,
    SampledEnvelope,
    centered_grid,
    containment,
    denormalize,
    energy,
    nmse,
    normalize,
)
from .flow import (
    JordanLambda,
    apply_transform,
    dilate,
    equalize,
    evolve,
    evolve_spectrum,
    freq_shift,
    lambda_matrix,
    phase_shift,
    time_shift,
    trace_constant,
)
from .inverse import (
    GlmeConfig,
    KSolitonSpec,
    center_time,
    double_soliton,
    glme_solve,
    ksoliton,
    omega,
    predicted_center,
)
from .scattering import KernelConfig, ScatteringJet, kernel, scatter, scatter_fb, scatter_many
