"""Identification of control-affine dynamics ``x' = f(x) + g(x) u`` from
controlled trajectories with control occupation kernels (SCLDMD)."""

from .data import Dataset, SampledTrajectory, load_dataset, save_dataset
from .decomposition import Decomposition, PinvFactors, compute_modes, decompose, pseudo_svd
from .errors import (
    ConfigError,
    DegenerateDataError,
    DivergenceError,
    FormatError,
    KernelDomainError,
    NumericalError,
    ScldmdError,
)
from .gram import GramSystem, assemble, difference_gram, endpoint_matrix, occupation_gram
from .kernels import KernelConfig, kernel_quadratic_form, scalar_kernel, weighted_kernel_row
from .model import IdentifiedModel, identify, load_model, occupation_kernel, predict, save_model
from .quadrature import QuadratureRule, integrate_sampled, simpson_weights
from .signals import SampledSignal, SumOfSinusoids, VectorSignal

__version__ = "0.1.0"
