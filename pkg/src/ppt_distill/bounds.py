"""Upper and lower bounds on p.p.t. distillable entanglement (bits)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Any, Callable, Sequence

import numpy as np

from . import operators as op
from .operators import DensityMatrix, HermitianOperator

HASHING_DIM_LIMIT = 4096
R_ZERO = 1e-12


@dataclass
class BoundReport:
    name: str
    value: float
    kind: str  # "upper" | "lower"
    provenance: str
    certificate: Any = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise ValueError(f"bound kind must be 'upper' or 'lower', not {self.kind!r}")


def check_ordering(reports: Sequence[BoundReport], tol: float = 1e-6) -> bool:
    """Every lower bound ≤ every upper bound + tol."""
    lows = [r.value for r in reports if r.kind == "lower"]
    ups = [r.value for r in reports if r.kind == "upper"]
    if not lows or not ups:
        return True
    return max(lows) <= min(ups) + tol


# relative-entropy bound ------------------------------------------------

def rains_bound(rho: HermitianOperator, sigma: HermitianOperator) -> float:
    """ℬ(ρ,σ) = S(ρ||σ) + log₂Tr|σ^Γ|; +inf when supp ρ ⊄ supp σ."""
    rel = op.relative_entropy(rho, sigma)
    if np.isinf(rel):
        return float("inf")
    return rel + float(np.log2(op.trace_norm(op.partial_transpose(sigma))))


@dataclass
class PropertyCheck:
    twirl: tuple[float, float] | None
    convexity: tuple[float, float]
    additivity: tuple[float, float]
    tol: float

    @property
    def twirl_ok(self) -> bool:
        return self.twirl is None or self.twirl[0] <= self.twirl[1] + self.tol

    @property
    def convexity_ok(self) -> bool:
        return self.convexity[0] <= self.convexity[1] + self.tol

    @property
    def additivity_ok(self) -> bool:
        a, b = self.additivity
        return (np.isinf(a) and np.isinf(b)) or abs(a - b) <= self.tol

    @property
    def ok(self) -> bool:
        return self.twirl_ok and self.convexity_ok and self.additivity_ok


def rains_bound_properties_check(rho, sigma, rho2, p: float, tol: float = 1e-8) -> PropertyCheck:
    """Twirl monotonicity, convexity in ρ, and additivity ℬ(ρ⊗ρ₂, σ⊗σ) = ℬ(ρ,σ) + ℬ(ρ₂,σ).

    Each entry is (lhs, rhs) of the inequality or identity.
    """
    base = rains_bound(rho, sigma)
    tw = None
    if rho.shape.dim_a == rho.shape.dim_b and rho.shape.is_bipartite:
        trho, tsig = op.twirl(rho), op.twirl(sigma)
        tw = (rains_bound(trho, tsig), base)
    mix = DensityMatrix(p * rho.matrix + (1 - p) * rho2.matrix, rho.shape)
    conv = (rains_bound(mix, sigma), p * base + (1 - p) * rains_bound(rho2, sigma))
    add = (rains_bound(op.tensor(rho, rho2), op.tensor(sigma, sigma)), base + rains_bound(rho2, sigma))
    return PropertyCheck(tw, conv, add, tol)


# hashing ---------------------------------------------------------------

def hashing_rate(d: int, f: float) -> float:
    """max(log₂d + f log₂f + (1-f) log₂((1-f)/(d+1)), 0), for 1/2 ≤ f ≤ 1."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 0.5 <= f <= 1.0:
        raise ValueError("hashing bound needs 1/2 <= f <= 1")
    val = np.log2(d)
    if f > 0:
        val += f * np.log2(f)
    if f < 1:
        val += (1 - f) * np.log2((1 - f) / (d + 1))
    return float(max(val, 0.0))


def hashing_fidelity(n: int, w: int, f: float) -> float:
    """Σ_{i≤w} C(n,i) f^(n-i) (1-f)^i."""
    return float(sum(comb(n, i) * f ** (n - i) * (1 - f) ** i for i in range(w + 1)))


def hashing_negativity_bound(d: int, n: int, w: int) -> float:
    """d^(-n) Σ_{i≤w} C(n,i) (d+1)^i."""
    return float(sum(comb(n, i) * (d + 1) ** i for i in range(w + 1)) / d ** n)


@dataclass
class HashingCertificate:
    F: HermitianOperator
    fidelity: Callable[[float], float]
    negativity_bound: float
    pt_operator_norm: float       # largest eigenvalue of |F^Γ|
    pt_trace_norm: float          # Tr|F^Γ|
    summand_chain_ok: bool        # |F^Γ| ≤ Σ|P^Γ| ≤ bound·1 as operators
    terms: int = 0

    def __iter__(self):
        return iter((self.F, self.fidelity, self.negativity_bound))


def hashing_projector(d: int, n: int, w: int) -> HashingCertificate:
    """F_n(w): sum of products of Φ(d) and 1-Φ(d) with at most w factors 1-Φ(d)."""
    if d < 2 or n < 1 or not 0 <= w <= n:
        raise ValueError("need d >= 2, n >= 1, 0 <= w <= n")
    if d ** (2 * n) > HASHING_DIM_LIMIT:
        raise ValueError(f"d^(2n) = {d ** (2 * n)} exceeds the {HASHING_DIM_LIMIT} dimension guard")
    phi = op.max_entangled(d)
    rest = op.identity(phi.shape) - phi
    F = None
    abs_sum = None
    count = 0
    for k in range(w + 1):
        for idx in itertools.combinations(range(n), k):
            P = op.tensor(*[rest if i in idx else phi for i in range(n)])
            absP = op.abs_part(op.partial_transpose(P))
            F = P if F is None else F + P
            abs_sum = absP if abs_sum is None else abs_sum + absP
            count += 1
    F = HermitianOperator(F.matrix, F.shape)
    absF = op.abs_part(op.partial_transpose(F))
    bound = hashing_negativity_bound(d, n, w)
    eps = 1e-10
    chain = (np.linalg.eigvalsh(abs_sum.matrix - absF.matrix).min() >= -eps
             and np.linalg.eigvalsh(abs_sum.matrix).max() <= bound + eps)
    return HashingCertificate(
        F=F,
        fidelity=lambda f: hashing_fidelity(n, w, f),
        negativity_bound=bound,
        pt_operator_norm=float(np.linalg.eigvalsh(absF.matrix).max()),
        pt_trace_norm=float(absF.trace()),
        summand_chain_ok=bool(chain),
        terms=count,
    )


# maximally correlated states -------------------------------------------

def _check_alpha(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=complex)
    DensityMatrix(a)
    return a


def max_correlated_rate(alpha) -> float:
    """H(α_11, α_22, ...) - S(α)."""
    a = _check_alpha(alpha)
    diag = np.clip(np.real(np.diag(a)), 0.0, None)
    return op.shannon_entropy(diag) - op.von_neumann_entropy(HermitianOperator(a))


def max_correlated_pt_eigs(beta) -> np.ndarray:
    """Spectrum of ρ_β^Γ: {β_ii} ∪ {±|β_ij| : i<j}, sorted ascending."""
    b = np.asarray(beta, dtype=complex)
    if np.abs(b - b.conj().T).max() > 1e-12 * max(1.0, np.abs(b).max()):
        raise ValueError("beta is not Hermitian")
    if np.linalg.eigvalsh((b + b.conj().T) / 2).min() < -op.EIG_TOL:
        raise ValueError("beta is not positive semidefinite")
    k = b.shape[0]
    iu, ju = np.triu_indices(k, 1)
    off = np.abs(b[iu, ju])
    return np.sort(np.concatenate([np.real(np.diag(b)), off, -off]))


def max_correlated_operator(beta) -> HermitianOperator:
    """ρ_β = Σ β_ij |ii⟩⟨jj| for any PSD β (trace not fixed)."""
    b = np.asarray(beta, dtype=complex)
    k = b.shape[0]
    m = np.zeros((k * k, k * k), dtype=complex)
    diag = np.arange(k) * (k + 1)
    m[np.ix_(diag, diag)] = b
    return HermitianOperator(m, op.TensorShape.bipartite(k, k))


# partition of the identity ---------------------------------------------

@dataclass
class PartitionOfIdentity:
    projectors: list[HermitianOperator]
    tol: float = 1e-9

    def __post_init__(self):
        if not self.projectors:
            raise ValueError("empty partition")
        dim = self.projectors[0].dim
        total = np.zeros((dim, dim), dtype=complex)
        for i, p in enumerate(self.projectors):
            m = p.matrix
            if p.dim != dim:
                raise op.ShapeError("projectors have different dimensions")
            if np.abs(m @ m - m).max() > self.tol:
                raise ValueError(f"P_{i} is not idempotent")
            for q in self.projectors[i + 1:]:
                if np.abs(m @ q.matrix).max() > self.tol:
                    raise ValueError("projectors are not mutually orthogonal")
            total += m
        if np.abs(total - np.eye(dim)).max() > self.tol:
            raise ValueError("projectors do not sum to the identity")

    @classmethod
    def maxent_split(cls, d: int) -> "PartitionOfIdentity":
        phi = op.max_entangled(d)
        return cls([HermitianOperator(phi.matrix, phi.shape), op.identity(phi.shape) - phi])


def partition_terms(rho: HermitianOperator, partition: PartitionOfIdentity) -> tuple[np.ndarray, np.ndarray]:
    """r_i = Tr(P_i ρ) and s_i = largest eigenvalue of |P_i^Γ|."""
    if partition.projectors[0].dim != rho.dim:
        raise op.ShapeError("partition and state dimensions differ")
    r, s = [], []
    for p in partition.projectors:
        q = HermitianOperator(p.matrix, rho.shape)
        r.append(rho.expect(q))
        s.append(float(np.abs(op.partial_transpose(q).eigvalsh()).max()))
    return np.array(r), np.array(s)


def partition_lower_bound(rho: HermitianOperator, partition: PartitionOfIdentity) -> float:
    """Σ r_i (log₂ r_i - log₂ s_i), skipping r_i = 0."""
    r, s = partition_terms(rho, partition)
    total = 0.0
    for ri, si in zip(r, s):
        if ri < R_ZERO:
            continue
        total += ri * (np.log2(ri) - np.log2(si))
    return float(total)


# aggregation -----------------------------------------------------------

def state_bounds(rho: DensityMatrix, family: str | None = None, params: dict | None = None) -> list[BoundReport]:
    """Every bound applicable to ρ, with provenance labels."""
    params = params or {}
    out = [BoundReport("log-negativity", op.log_negativity(rho), "upper",
                       "relative-entropy bound with sigma = rho: log2 Tr|rho^Gamma|")]
    d_a, d_b = rho.shape.dim_a, rho.shape.dim_b
    if family == "werner":
        d, p = params["d"], params["p"]
        if d > 2 or p <= 0.5 + 1 / d:
            from .symmetry import werner_optimal_sigma, werner_rains_bound
            out.append(BoundReport("werner-relative-entropy", werner_rains_bound(d, p), "upper",
                                   "min over Werner sigma of S(rho||sigma) + log2 Tr|sigma^Gamma|",
                                   {"p_sigma": werner_optimal_sigma(d, p)}))
    if family == "isotropic" and params.get("f", 0) >= 0.5:
        out.append(BoundReport("hashing", hashing_rate(params["d"], params["f"]), "lower",
                               "generalized hashing bound for isotropic states"))
    if family == "max-correlated":
        rate = max_correlated_rate(params["alpha"])
        out.append(BoundReport("max-correlated", rate, "lower",
                               "maximally correlated states: H(diag alpha) - S(alpha)"))
        out.append(BoundReport("max-correlated", rate, "upper",
                               "maximally correlated states: H(diag alpha) - S(alpha)"))
    if d_a == d_b and rho.shape.is_bipartite and len(rho.shape.dims) == 2:
        part = PartitionOfIdentity.maxent_split(d_a)
        out.append(BoundReport("partition", partition_lower_bound(rho, part), "lower",
                               "partition-of-identity bound with {Phi(d), 1 - Phi(d)}"))
    return out
