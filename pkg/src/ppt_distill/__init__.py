"""Fidelity of p.p.t. entanglement distillation: SDPs, symmetry-reduced LPs and bounds."""

__version__ = "0.1.0"

from .operators import (DensityMatrix, HermitianOperator, TensorShape, isotropic_state, max_correlated_state,
                        max_entangled, partial_trace, partial_transpose, tensor, trace_norm, werner_state)
from .fidelity import FidelityResult, dual_bound, fidelity_ppt

__all__ = [
    "DensityMatrix", "HermitianOperator", "TensorShape", "isotropic_state", "max_correlated_state",
    "max_entangled", "partial_trace", "partial_transpose", "tensor", "trace_norm", "werner_state",
    "FidelityResult", "dual_bound", "fidelity_ppt",
]
