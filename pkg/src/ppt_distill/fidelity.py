"""Fidelity of p.p.t. distillation, F_Γ(ρ;K).

Primal:  max Tr(Fρ)  over Hermitian F with 0 ≤ F ≤ 1 and -1/K ≤ F^Γ ≤ 1/K.
Dual:    min Tr(ρ-D)_+ + (1/K) Tr|D^Γ|  over Hermitian D.

K may be any positive real; the program is affine in 1/K.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import operators as op
from .operators import DensityMatrix, HermitianOperator
from .solver import (SdpBlock, SdpProblem, SolveReport, SolverError, hermitian_basis,
                     require_optimal, solve_sdp)

logger = logging.getLogger(__name__)

GAP_TOL = 1e-6
SANDWICH_TOL = 1e-6


@dataclass
class FidelityResult:
    value: float
    primal_F: HermitianOperator
    dual_D: HermitianOperator
    gap: float
    dual_value: float = float("nan")
    K: float = float("nan")
    report: SolveReport | None = field(default=None, repr=False)


@lru_cache(maxsize=16)
def _pt_permutation(dims: tuple[int, ...], systems: tuple[int, ...]) -> np.ndarray:
    # vec(A^Γ)[k] = vec(A)[perm[k]] (column-major vec)
    n = int(np.prod(dims))
    idx = np.arange(n * n).reshape((n, n), order="F")
    return op._pt_matrix(idx, dims, systems).reshape(-1, order="F")


def build_fidelity_sdp(rho: HermitianOperator, K: float, real: bool | None = None) -> tuple[SdpProblem, sp.csc_matrix]:
    """The four-block primal program; returns the problem and the F basis.

    For a real ρ the optimum can be taken real (average any optimal F with
    its complex conjugate), so F is parameterized as real symmetric.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    n = rho.dim
    real = rho.is_real if real is None else real
    basis = hermitian_basis(n, real)
    perm = _pt_permutation(tuple(rho.shape.dims), rho.shape.side_b)
    basis_pt = basis[perm, :].tocsc()
    m = rho.matrix.real if real else rho.matrix
    c = np.real(basis.T @ m.T.reshape(-1, order="F"))
    eye = np.eye(n)
    blocks = [
        SdpBlock(np.zeros((n, n)), basis),          # F ⪰ 0
        SdpBlock(eye, -basis),                      # 1 - F ⪰ 0
        SdpBlock(eye / K, -basis_pt),               # 1/K - F^Γ ⪰ 0
        SdpBlock(eye / K, basis_pt),                # 1/K + F^Γ ⪰ 0
    ]
    return SdpProblem(c, blocks), basis


def dual_bound(rho: HermitianOperator, K: float, D: HermitianOperator) -> float:
    """Tr(ρ-D)_+ + (1/K) Tr|D^Γ|, an upper bound on F_Γ(ρ;K) for every D."""
    if D.dim != rho.dim or tuple(D.shape.dims) != tuple(rho.shape.dims):
        raise op.ShapeError("D and rho have different shapes")
    if K <= 0:
        raise ValueError("K must be positive")
    diff = HermitianOperator(rho.matrix - D.matrix, rho.shape)
    return op.positive_trace(diff) + op.trace_norm(op.partial_transpose(D)) / K


def sandwich(rho: HermitianOperator, K: float) -> tuple[float, float]:
    """min(1,1/K) ≤ F_Γ(ρ;K) ≤ min(1, Tr|ρ^Γ|/K)."""
    neg = op.trace_norm(op.partial_transpose(rho))
    return min(1.0, 1.0 / K), min(1.0, neg / K)


def fidelity_ppt(rho: DensityMatrix, K: float, tol: float = GAP_TOL) -> FidelityResult:
    """Solve the primal/dual pair for F_Γ(ρ;K); ``tol`` bounds the certified gap."""
    if not rho.shape.is_bipartite:
        raise op.ShapeError("fidelity needs a bipartite state")
    K = float(K)
    problem, basis = build_fidelity_sdp(rho, K)
    report = require_optimal(solve_sdp(problem, tol=tol), f"F_Gamma(rho; K={K:g})")
    n = rho.dim
    F = (basis @ report.x).reshape((n, n), order="F")
    w, v = np.linalg.eigh((F + F.conj().T) / 2)
    F = (v * np.clip(w, 0.0, None)) @ v.conj().T
    _, _, B, C = report.duals
    D = op.partial_transpose(HermitianOperator(B - C, rho.shape))
    value = float(report.value)
    lo, hi = sandwich(rho, K)
    if value < lo:
        # F = min(1, 1/K)·1 is always feasible; keep the better primal point
        value, F = lo, lo * np.eye(n)
    gap = abs(report.dual_value - value)
    result = FidelityResult(value, HermitianOperator(F, rho.shape), D, gap, report.dual_value, K, report)

    if not lo - SANDWICH_TOL <= value <= hi + SANDWICH_TOL:
        raise SolverError(f"F_Gamma={value:.9g} outside [{lo:.9g}, {hi:.9g}]", report)
    db = dual_bound(rho, K, D)
    if db > value + 1e-5:
        logger.warning("reconstructed dual D gives %.9g > value %.9g", db, value)
    return result


# closed forms ----------------------------------------------------------

def fidelity_maxent_closed(d: int, K: float) -> float:
    return min(1.0, d / K)


def fidelity_werner1_closed(d: int, K: float) -> float:
    """F_Γ(W_d(1);K)."""
    return min(1.0, (d + 2) / (d * K))


def fidelity_isotropic_closed(d: int, f: float, K: float) -> float:
    """F_Γ(I_d(f);K), three branches; clipped at 1 for K < 1."""
    if d < 2 or not 0.0 <= f <= 1.0 or K <= 0:
        raise ValueError("need d >= 2, 0 <= f <= 1, K > 0")
    if f <= 1.0 / d:
        val = 1.0 / K
    elif K <= d:
        val = 1.0 / K + (f * d - 1) / (d - 1) * (1 - 1.0 / K)
    else:
        val = f * d / K
    return min(1.0, val)


# transformation checks -------------------------------------------------

@dataclass
class MonotoneTable:
    K: list[float]
    F: list[float]
    KF: list[float]
    ratio: list[float]
    KF_nondecreasing: bool
    ratio_nonincreasing: bool


def k_monotone_checks(rho: DensityMatrix, K_grid: Sequence[float], tol: float = 1e-6,
                      values: Sequence[float] | None = None) -> MonotoneTable:
    """K·F_Γ(ρ;K) should not decrease, and (K·F_Γ - 1)/(K - 1) should not increase."""
    Ks = [float(k) for k in K_grid]
    if any(b < a for a, b in zip(Ks, Ks[1:])):
        raise ValueError("K_grid must be sorted ascending")
    Fs = list(values) if values is not None else [fidelity_ppt(rho, k).value for k in Ks]
    KF = [k * f for k, f in zip(Ks, Fs)]
    ratio = [(kf - 1) / (k - 1) if k > 1 else float("nan") for k, kf in zip(Ks, KF)]
    inc = all(b >= a - tol for a, b in zip(KF, KF[1:]))
    defined = [r for r in ratio if not np.isnan(r)]
    dec = all(b <= a + tol for a, b in zip(defined, defined[1:]))
    return MonotoneTable(Ks, Fs, KF, ratio, inc, dec)


def tensor_bounds(rho1: DensityMatrix, rho2: DensityMatrix, K: float, Kprime: float) -> tuple[float, float]:
    """F_Γ(ρ₁;K')F_Γ(ρ₂;K/K') ≤ F_Γ(ρ₁⊗ρ₂;K) ≤ F_Γ(ρ₁;K/Tr|ρ₂^Γ|)."""
    lower = fidelity_ppt(rho1, Kprime).value * fidelity_ppt(rho2, K / Kprime).value
    neg2 = op.trace_norm(op.partial_transpose(rho2))
    upper = fidelity_ppt(rho1, K / neg2).value
    return lower, upper
