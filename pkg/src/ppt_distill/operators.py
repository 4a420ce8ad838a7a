"""Dense Hermitian operators on bipartite tensor-product spaces.

Operators carry a :class:`TensorShape`: an ordered list of subsystem
dimensions where the first ``n_a`` subsystems form side A and the rest
form side B.  Tensor products regroup factors so that side A always
comes first, which keeps every operator a plain ``A ⊗ B`` matrix; in
particular ``Φ(2) ⊗ Φ(2)`` is literally ``Φ(4)``.

All entropies are in bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

EIG_TOL = 1e-10
HERMITIAN_TOL = 1e-12


class ShapeError(ValueError):
    """Raised when operator dimensions and tensor shapes disagree."""


@dataclass(frozen=True)
class TensorShape:
    dims: tuple[int, ...]
    n_a: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"invalid subsystem dimensions {dims}")
        if not 0 <= self.n_a <= len(dims):
            raise ShapeError(f"side A size {self.n_a} out of range for {dims}")

    @classmethod
    def bipartite(cls, d_a: int, d_b: int) -> "TensorShape":
        return cls((d_a, d_b), 1)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def dim_a(self) -> int:
        return int(np.prod(self.dims[: self.n_a]))

    @property
    def dim_b(self) -> int:
        return int(np.prod(self.dims[self.n_a:]))

    @property
    def side_a(self) -> tuple[int, ...]:
        return tuple(range(self.n_a))

    @property
    def side_b(self) -> tuple[int, ...]:
        return tuple(range(self.n_a, len(self.dims)))

    @property
    def is_bipartite(self) -> bool:
        return 0 < self.n_a < len(self.dims)

    def resolve(self, side) -> tuple[int, ...]:
        """Turn ``'A'``, ``'B'`` or an iterable of indices into subsystem indices."""
        if side is None or side == "B":
            return self.side_b
        if side == "A":
            return self.side_a
        idx = tuple(sorted({int(i) for i in side}))
        if any(i < 0 or i >= len(self.dims) for i in idx):
            raise ShapeError(f"subsystems {idx} not in shape {self.dims}")
        return idx


class HermitianOperator:
    """Dense complex Hermitian matrix tagged with a tensor shape.

    Small anti-Hermitian drift (below 1e-12 relative to the largest entry)
    is removed by symmetrizing; anything larger is rejected.
    """

    def __init__(self, matrix, shape: TensorShape | Sequence[int] | None = None):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {m.shape}")
        if shape is None:
            shape = TensorShape((m.shape[0],), 1)
        elif not isinstance(shape, TensorShape):
            dims = tuple(shape)
            shape = TensorShape(dims, max(1, len(dims) // 2))
        if shape.dim != m.shape[0]:
            raise ShapeError(f"shape {shape.dims} does not match matrix size {m.shape[0]}")
        scale = max(np.abs(m).max(), 1.0) if m.size else 1.0
        drift = np.abs(m - m.conj().T).max() if m.size else 0.0
        if drift > HERMITIAN_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (drift {drift:.3e})")
        self.matrix = (m + m.conj().T) / 2
        self.shape = shape
        self.matrix.setflags(write=False)

    # basic algebra -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def is_real(self) -> bool:
        return bool(np.abs(self.matrix.imag).max(initial=0.0) <= HERMITIAN_TOL)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def expect(self, other) -> float:
        """Tr(self · other)."""
        other = other.matrix if isinstance(other, HermitianOperator) else np.asarray(other)
        return float(np.einsum("ij,ji->", self.matrix, other).real)

    def with_matrix(self, matrix) -> "HermitianOperator":
        return HermitianOperator(matrix, self.shape)

    def _check_same(self, other):
        if not isinstance(other, HermitianOperator):
            return other
        if other.dim != self.dim:
            raise ShapeError(f"dimension mismatch {self.dim} vs {other.dim}")
        return other.matrix

    def __add__(self, other):
        return HermitianOperator(self.matrix + self._check_same(other), self.shape)

    def __sub__(self, other):
        return HermitianOperator(self.matrix - self._check_same(other), self.shape)

    def __mul__(self, scalar):
        return HermitianOperator(self.matrix * float(scalar), self.shape)

    __rmul__ = __mul__

    def __neg__(self):
        return HermitianOperator(-self.matrix, self.shape)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.shape.dims}, n_a={self.shape.n_a})"


class DensityMatrix(HermitianOperator):
    """Positive semidefinite Hermitian operator of unit trace."""

    def __init__(self, matrix, shape=None):
        super().__init__(matrix, shape)
        tr = self.trace()
        if abs(tr - 1.0) > EIG_TOL:
            raise ValueError(f"state has trace {tr}, expected 1")
        lo = self.eigvalsh().min()
        if lo < -EIG_TOL:
            raise ValueError(f"state is not positive semidefinite (min eigenvalue {lo:.3e})")

    @classmethod
    def from_operator(cls, op: HermitianOperator) -> "DensityMatrix":
        return cls(op.matrix, op.shape)


def identity(shape: TensorShape) -> HermitianOperator:
    return HermitianOperator(np.eye(shape.dim), shape)


def _as_matrix(a) -> np.ndarray:
    return a.matrix if isinstance(a, HermitianOperator) else np.asarray(a)


# canonical states -------------------------------------------------------

def max_entangled(K: int) -> DensityMatrix:
    """Φ(K) = (1/K) Σ_ij |ii⟩⟨jj| on C^K ⊗ C^K."""
    K = int(K)
    if K < 1:
        raise ValueError("K must be a positive integer")
    v = np.zeros(K * K)
    v[:: K + 1] = 1.0
    return DensityMatrix(np.outer(v, v) / K, TensorShape.bipartite(K, K))


def swap_operator(d: int) -> HermitianOperator:
    """T(21), the swap of the two factors of C^d ⊗ C^d."""
    t = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            t[i * d + j, j * d + i] = 1.0
    return HermitianOperator(t, TensorShape.bipartite(d, d))


def isotropic_state(d: int, f: float) -> DensityMatrix:
    if d < 2:
        raise ValueError("isotropic states need d >= 2")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    phi = max_entangled(d).matrix
    rest = np.eye(d * d) - phi
    return DensityMatrix(f * phi + (1 - f) / (d * d - 1) * rest, TensorShape.bipartite(d, d))


def werner_state(d: int, p: float) -> DensityMatrix:
    """W_d(p): weight p on the antisymmetric subspace, 1-p on the symmetric one."""
    if d < 2:
        raise ValueError("Werner states need d >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"antisymmetric weight {p} outside [0, 1]")
    one = np.eye(d * d)
    t = swap_operator(d).matrix
    m = (1 - p) / (d * d + d) * (one + t) + p / (d * d - d) * (one - t)
    return DensityMatrix(m, TensorShape.bipartite(d, d))


def max_correlated_state(alpha) -> DensityMatrix:
    """ρ_α = Σ_ij α_ij |ii⟩⟨jj|; α must be a k×k state."""
    a = np.asarray(alpha, dtype=complex)
    DensityMatrix(a)  # validates PSD and unit trace
    k = a.shape[0]
    m = np.zeros((k * k, k * k), dtype=complex)
    diag = np.arange(k) * (k + 1)
    m[np.ix_(diag, diag)] = a
    return DensityMatrix(m, TensorShape.bipartite(k, k))


# structural maps --------------------------------------------------------

def _pt_matrix(m: np.ndarray, dims: Sequence[int], systems: Iterable[int]) -> np.ndarray:
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    axes = list(range(2 * n))
    for s in systems:
        axes[s], axes[s + n] = axes[s + n], axes[s]
    return t.transpose(axes).reshape(m.shape)


def partial_transpose(a: HermitianOperator, side=None) -> HermitianOperator:
    """Transpose the selected subsystems (default: side B)."""
    systems = a.shape.resolve(side)
    return HermitianOperator(_pt_matrix(a.matrix, a.shape.dims, systems), a.shape)


def partial_trace(a: HermitianOperator, side) -> HermitianOperator:
    """Trace out the selected subsystems ('A', 'B' or indices)."""
    shape = a.shape
    traced = shape.resolve(side)
    keep = [i for i in range(len(shape.dims)) if i not in traced]
    if not keep:
        raise ShapeError("cannot trace out every subsystem")
    n = len(shape.dims)
    t = a.matrix.reshape(shape.dims * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ShapeError("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in traced:
        col[s] = row[s]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kdims = tuple(shape.dims[i] for i in keep)
    n_a = sum(1 for i in keep if i < shape.n_a)
    d = int(np.prod(kdims))
    return HermitianOperator(r.reshape(d, d), TensorShape(kdims, n_a))


def tensor(*ops: HermitianOperator) -> HermitianOperator:
    """Tensor product regrouped as (A_1 ⊗ A_2 ⊗ ...) ⊗ (B_1 ⊗ B_2 ⊗ ...)."""
    if not ops:
        raise ValueError("tensor needs at least one operator")
    if len(ops) == 1:
        return ops[0]
    m = reduce(np.kron, [op.matrix for op in ops])
    dims = [d for op in ops for d in op.shape.dims]
    # subsystem order after kron: op0 systems, op1 systems, ...
    a_idx, b_idx, offset = [], [], 0
    for op in ops:
        a_idx += [offset + i for i in op.shape.side_a]
        b_idx += [offset + i for i in op.shape.side_b]
        offset += len(op.shape.dims)
    perm = a_idx + b_idx
    n = len(dims)
    t = m.reshape(tuple(dims) * 2).transpose(perm + [p + n for p in perm])
    new_dims = tuple(dims[p] for p in perm)
    out = HermitianOperator(t.reshape(m.shape), TensorShape(new_dims, len(a_idx)))
    if all(isinstance(op, DensityMatrix) for op in ops):
        return DensityMatrix.from_operator(out)
    return out


def tensor_power(op: HermitianOperator, n: int) -> HermitianOperator:
    return tensor(*([op] * n))


# spectral functions -----------------------------------------------------

def _eigh(a) -> tuple[np.ndarray, np.ndarray]:
    m = _as_matrix(a)
    if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(m).max(initial=0.0)):
        raise ValueError("operator is not Hermitian")
    return np.linalg.eigh((m + m.conj().T) / 2)


def _spectral(a, fn) -> HermitianOperator:
    w, v = _eigh(a)
    w = np.where(np.abs(w) <= EIG_TOL, 0.0, w)
    m = (v * fn(w)) @ v.conj().T
    shape = a.shape if isinstance(a, HermitianOperator) else None
    return HermitianOperator(m, shape)


def pos_part(a) -> HermitianOperator:
    return _spectral(a, lambda w: np.maximum(w, 0.0))


def neg_part(a) -> HermitianOperator:
    return _spectral(a, lambda w: np.maximum(-w, 0.0))


def abs_part(a) -> HermitianOperator:
    return _spectral(a, np.abs)


def trace_norm(a) -> float:
    w = np.linalg.eigvalsh(_as_matrix(a))
    return float(np.abs(w[np.abs(w) > EIG_TOL]).sum())


def positive_trace(a) -> float:
    """Tr(A₊)."""
    w = np.linalg.eigvalsh(_as_matrix(a))
    return float(w[w > EIG_TOL].sum())


def log_negativity(rho: HermitianOperator) -> float:
    return float(np.log2(trace_norm(partial_transpose(rho))))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < -EIG_TOL):
        raise ValueError("probabilities must be nonnegative")
    p = p[p > EIG_TOL]
    p[np.abs(p - 1.0) < EIG_TOL] = 1.0   # 1 ± ulp (pure states, rounded sums)
    # correctly rounded sum: equal multisets give bit-identical entropies
    return -math.fsum(p * np.log2(p)) + 0.0


def von_neumann_entropy(rho) -> float:
    return shannon_entropy(np.clip(np.linalg.eigvalsh(_as_matrix(rho)), 0.0, None))


def relative_entropy(rho, sigma) -> float:
    """S(ρ||σ) in bits; +inf when supp ρ is not contained in supp σ."""
    r, s = _as_matrix(rho), _as_matrix(sigma)
    if r.shape != s.shape:
        raise ShapeError("relative entropy of operators with different sizes")
    ws, vs = np.linalg.eigh(s)
    on = ws > EIG_TOL
    kernel = vs[:, ~on]
    if kernel.size and np.einsum("ik,ij,jk->", kernel.conj(), r, kernel).real > EIG_TOL:
        return float("inf")
    wr = np.linalg.eigvalsh(r)
    wr = wr[wr > EIG_TOL]
    first = float((wr * np.log2(wr)).sum())
    # Tr ρ log σ, restricted to supp σ
    weights = np.einsum("ik,ij,jk->k", vs[:, on].conj(), r, vs[:, on]).real
    second = float((weights * np.log2(ws[on])).sum())
    return first - second


def twirl(a: HermitianOperator, K: int | None = None) -> HermitianOperator:
    """Average of (U ⊗ Ū) A (U ⊗ Ū)† over U(K): the projection onto isotropic operators."""
    if K is None:
        K = a.shape.dim_a
    K = int(K)
    if a.dim != K * K:
        raise ShapeError(f"twirl over U({K}) needs a {K*K}-dimensional operator")
    if K == 1:
        return a
    phi = max_entangled(K).matrix
    rest = np.eye(K * K) - phi
    fid = a.expect(phi)
    tail = a.trace() - fid
    return HermitianOperator(fid * phi + tail / (K * K - 1) * rest, TensorShape.bipartite(K, K))


# random sampling (tests, sweeps) ---------------------------------------

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(d_a: int, d_b: int, rng: np.random.Generator, rank: int | None = None,
                 real: bool = False) -> DensityMatrix:
    """Random bipartite state from a Ginibre ensemble (full rank by default)."""
    d = d_a * d_b
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank))
    if not real:
        g = g + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, TensorShape.bipartite(d_a, d_b))


# JSON state format ------------------------------------------------------

def state_to_json(rho: HermitianOperator) -> str:
    m = rho.matrix
    payload = {
        "dims": [rho.shape.dim_a, rho.shape.dim_b],
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }
    return json.dumps(payload)


def state_from_dict(data: dict) -> DensityMatrix:
    try:
        dims = [int(d) for d in data["dims"]]
        re = np.array(data["re"], dtype=float)
        im = np.array(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state record: {exc}") from exc
    if len(dims) != 2:
        raise ShapeError("state JSON must give dims [dA, dB]")
    if re.shape != im.shape:
        raise ShapeError("'re' and 'im' must have the same shape")
    return DensityMatrix(re + 1j * im, TensorShape.bipartite(*dims))


def state_from_json(text: str) -> DensityMatrix:
    return state_from_dict(json.loads(text))
