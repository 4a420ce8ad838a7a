"""Symmetry-reduced fidelity programs for isotropic and Werner tensor powers.

An operator on (C^d ⊗ C^d)^{⊗n} that commutes with S_n and with U⊗Ū on
every factor is fixed by n+1 numbers, one per irreducible block.  Writing
these as the coefficients of a degree-n homogeneous polynomial turns the
fidelity SDP into an LP over n+1 variables.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

from . import operators as op
from .operators import HermitianOperator
from .solver import DEFAULT_TOL, LpProblem, SolveReport, require_optimal, solve_lp

logger = logging.getLogger(__name__)

COEFF_TOL = 1e-9


@dataclass(frozen=True)
class HomogeneousPoly:
    """Σ_λ coeffs[λ] x^(n-λ) y^λ."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in np.asarray(coeffs, dtype=float).ravel()))
        if not self.coeffs:
            raise ValueError("a homogeneous polynomial needs at least one coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs)

    @classmethod
    def linear_power(cls, a: float, b: float, n: int) -> "HomogeneousPoly":
        """(a x + b y)^n."""
        return cls([comb(n, k) * a ** (n - k) * b ** k for k in range(n + 1)])

    def __call__(self, x: float, y: float) -> float:
        n = self.degree
        return float(sum(c * x ** (n - k) * y ** k for k, c in enumerate(self.coeffs)))

    def __add__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        self._check(other)
        return HomogeneousPoly(self.array + other.array)

    def __sub__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        self._check(other)
        return HomogeneousPoly(self.array - other.array)

    def __mul__(self, scalar: float) -> "HomogeneousPoly":
        return HomogeneousPoly(self.array * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if other.degree != self.degree:
            raise ValueError("degree mismatch")

    def nonneg(self, tol: float = COEFF_TOL) -> bool:
        """self ⪰ 0."""
        return bool(self.array.min() >= -tol)


def preceq(a: HomogeneousPoly, b: HomogeneousPoly, tol: float = COEFF_TOL) -> bool:
    """a ⪯ b: every coefficient of b - a is ≥ -tol."""
    return (b - a).nonneg(tol)


def substitution_matrix(n: int, m11: float, m12: float, m21: float, m22: float) -> np.ndarray:
    """Matrix of B ↦ B(m11 x + m12 y, m21 x + m22 y) on coefficient vectors."""
    u = np.array([m11, m12])   # in powers of y with x = 1
    v = np.array([m21, m22])
    out = np.zeros((n + 1, n + 1))
    for lam in range(n + 1):
        col = P.polymul(P.polypow(u, n - lam), P.polypow(v, lam))
        out[: len(col), lam] = col[: n + 1]
    return out


def poly_substitute(B: HomogeneousPoly, m11: float, m12: float, m21: float, m22: float) -> HomogeneousPoly:
    return HomogeneousPoly(substitution_matrix(B.degree, m11, m12, m21, m22) @ B.array)


def isotropic_transform(d: int, n: int) -> np.ndarray:
    """B ↦ S for isotropic powers: S(x,y) = B(((d+1)x-(d-1)y)/2, (x+y)/2)."""
    return substitution_matrix(n, (d + 1) / 2, -(d - 1) / 2, 0.5, 0.5)


def werner_transform(d: int, n: int) -> np.ndarray:
    """B ↦ S for Werner powers; inverse of B = S(((d+1)x-(d-1)y)/2, (x+y)/2)."""
    return substitution_matrix(n, 1 / d, (d - 1) / d, -1 / d, (d + 1) / d)


# LP assembly -----------------------------------------------------------

@dataclass
class PowerLpResult:
    value: float
    B: HomogeneousPoly
    S: HomogeneousPoly
    report: SolveReport | None = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.value, self.B, self.S))


def _power_lp(objective: np.ndarray, B_cap: np.ndarray, S_cap: np.ndarray, M: np.ndarray, tol: float) -> PowerLpResult:
    # Solve for the block fractions b = B / B_cap ∈ [0, 1] and divide each S
    # row by its bound; B_cap grows like (d²)^n, so raw B is badly scaled.
    n1 = len(objective)
    eye = np.eye(n1)
    MS = M * B_cap[None, :] / S_cap[:, None]
    G = np.vstack([-eye, eye, MS, -MS])
    h = np.concatenate([np.zeros(n1), np.ones(n1), np.ones(n1), np.ones(n1)])
    problem = LpProblem(objective * B_cap, G, h)
    report = require_optimal(solve_lp(problem, tol=tol), "symmetry-reduced LP")
    B = np.clip(report.x, 0.0, 1.0) * B_cap
    return PowerLpResult(float(report.value), HomogeneousPoly(B), HomogeneousPoly(M @ B), report)


def _check_args(d, t, n, K, name):
    if d < 2 or n < 1 or K <= 0 or not 0.0 <= t <= 1.0:
        raise ValueError(f"need d >= 2, n >= 1, K > 0 and {name} in [0, 1]")


def isotropic_power_lp(d: int, f: float, n: int, K: float, tol: float = DEFAULT_TOL) -> PowerLpResult:
    """F_Γ(I_d(f)^⊗n; K) as an LP over the block values B_λ = d_λ F_λ."""
    _check_args(d, f, n, K, "f")
    y = (1 - f) / (d * d - 1)
    obj = np.array([f ** (n - k) * y ** k for k in range(n + 1)])
    B_cap = HomogeneousPoly.linear_power(1.0, d * d - 1, n).array
    S_cap = HomogeneousPoly.linear_power((d * d + d) / 2, (d * d - d) / 2, n).array / K
    return _power_lp(obj, B_cap, S_cap, isotropic_transform(d, n), tol)


def werner_power_lp(d: int, p: float, n: int, K: float, tol: float = DEFAULT_TOL) -> PowerLpResult:
    """F_Γ(W_d(p)^⊗n; K) as an LP; B is indexed by symmetric/antisymmetric blocks."""
    _check_args(d, p, n, K, "p")
    x, y = 2 * (1 - p) / (d * d + d), 2 * p / (d * d - d)
    obj = np.array([x ** (n - k) * y ** k for k in range(n + 1)])
    B_cap = HomogeneousPoly.linear_power((d * d + d) / 2, (d * d - d) / 2, n).array
    S_cap = HomogeneousPoly.linear_power(1.0, d * d - 1, n).array / K
    return _power_lp(obj, B_cap, S_cap, werner_transform(d, n), tol)


def werner1_certificate(d: int) -> tuple[HomogeneousPoly, HomogeneousPoly]:
    """Degree-1 (B, S) pair showing F_Γ(W_d(1); (d+2)/d) ≥ 1."""
    B = HomogeneousPoly([(d * d + d) / 2 * (d - 2) / (d + 2), (d * d - d) / 2])
    S = HomogeneousPoly([-d / (d + 2), d / (d + 2) * (d * d - 1)])
    return B, S


def certificate_feasible(B: HomogeneousPoly, S: HomogeneousPoly, d: int, K: float, family: str,
                         tol: float = COEFF_TOL) -> bool:
    """Check a (B, S) pair against the isotropic or Werner LP constraints.

    Each coefficient is compared relative to its cap, which for large n
    spans many orders of magnitude.
    """
    n = B.degree
    iso_cap = HomogeneousPoly.linear_power(1.0, d * d - 1, n).array
    wer_cap = HomogeneousPoly.linear_power((d * d + d) / 2, (d * d - d) / 2, n).array
    if family == "isotropic":
        B_cap, S_cap, M = iso_cap, wer_cap / K, isotropic_transform(d, n)
    elif family == "werner":
        B_cap, S_cap, M = wer_cap, iso_cap / K, werner_transform(d, n)
    else:
        raise ValueError(f"unknown family {family!r}")
    b, s = B.array / B_cap, S.array / S_cap
    linked = np.abs((M @ B.array - S.array) / S_cap).max() <= tol
    return bool(linked and b.min() >= -tol and b.max() <= 1 + tol and np.abs(s).max() <= 1 + tol)


# Werner relative-entropy bound -----------------------------------------

def werner_pt_trace_norm(d: int, p: float) -> float:
    """Tr|W_d(p)^Γ|."""
    return 1.0 if p <= 0.5 else 1.0 + 2 * (2 * p - 1) / d


def werner_rains_objective(d: int, p: float, pp: float) -> float:
    """ℬ(W_d(p), W_d(p')) = S(W_d(p)||W_d(p')) + log₂Tr|W_d(p')^Γ|."""
    def term(a, b):
        if a == 0:
            return 0.0
        if b == 0:
            return float("inf")
        return a * np.log2(a / b)
    return term(p, pp) + term(1 - p, 1 - pp) + float(np.log2(werner_pt_trace_norm(d, pp)))


def werner_optimal_sigma(d: int, p: float) -> float:
    """Minimizing p' for ℬ(W_d(p), W_d(p'))."""
    if p <= 0.5:
        return p
    if p <= 0.5 + 1 / d:
        return 0.5
    return p * (d - 2) / (d + 2 - 4 * p)


def werner_rains_bound(d: int, p: float) -> float:
    """min_σ ℬ(W_d(p), σ), piecewise in p.

    Stated for d > 2.  For d = 2 the third piece is empty and the first two
    are returned (the second is the exact minimum there too; see tests).
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p outside [0, 1]")
    if d == 2:
        logger.warning("Werner bound for d=2 uses only the first two pieces")
    if p <= 0.5:
        return 0.0
    if p <= 0.5 + 1 / d:
        h = sum(t * np.log2(t) for t in (p, 1 - p) if t > 0)
        return float(1 + h)
    if d == 2:
        raise ValueError("third piece undefined for d = 2")
    return float(np.log2((d - 2) / d) + p * np.log2((d + 2) / (d - 2)))


# invariant block decomposition -----------------------------------------

def isotropic_block_projectors(d: int, n: int) -> list[HermitianOperator]:
    """Π_λ: sum over placements of λ copies of 1-Φ(d) among n copies of Φ(d)."""
    phi = op.max_entangled(d)
    rest = op.identity(phi.shape) - phi
    out = []
    for lam in range(n + 1):
        total = None
        for idx in itertools.combinations(range(n), lam):
            factors = [rest if k in idx else phi for k in range(n)]
            term = op.tensor(*factors)
            total = term if total is None else total + term
        out.append(HermitianOperator(total.matrix, total.shape))
    return out


def block_dims_isotropic(d: int, n: int) -> np.ndarray:
    return np.array([comb(n, k) * (d * d - 1) ** k for k in range(n + 1)], dtype=float)


def invariant_block_decompose_isotropic(A: HermitianOperator, d: int, n: int, tol: float = 1e-8) -> np.ndarray:
    """Block values F_λ of an S_n- and U⊗Ū-invariant operator A = Σ F_λ Π_λ."""
    if A.dim != d ** (2 * n):
        raise op.ShapeError(f"operator dimension {A.dim} is not d^(2n) = {d ** (2 * n)}")
    projs = isotropic_block_projectors(d, n)
    dl = block_dims_isotropic(d, n)
    F = np.array([A.expect(pr) for pr in projs]) / dl
    recon = sum(f * pr.matrix for f, pr in zip(F, projs))
    err = np.abs(A.matrix - recon).max()
    if err > tol * max(1.0, np.abs(A.matrix).max()):
        raise ValueError(f"operator is not invariant (residual {err:.2e})")
    return F
