"""Small dense conic programs: Hermitian-block SDPs and LPs.

SDPs are handed to cvxopt's primal-dual interior-point method
(Nesterov-Todd scaling on a homogeneous self-dual embedding, which is
what produces infeasibility/unboundedness certificates) with a custom
KKT solver: block coefficient matrices in these problems have a handful
of nonzeros per variable, so the Schur complement
``H_ij = Σ_b Tr(A_bi R_b A_bj R_b)`` is assembled from the nonzero
pattern directly instead of through dense ``n² × m`` products.

LPs go to HiGHS through scipy, falling back to cvxopt for certificates.

Complex Hermitian blocks are mapped to real symmetric blocks of twice the
size with ``X ↦ [[Re X, -Im X], [Im X, Re X]]``; dual multipliers are
mapped back to Hermitian form before being reported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

import cvxopt
from cvxopt import solvers

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200
PSD_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


class SolverError(RuntimeError):
    """Raised by callers that need an optimal solve and did not get one."""

    def __init__(self, message: str, report: "SolveReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class SdpBlock:
    """One PSD constraint ``constant + Σ_i x_i A_i ⪰ 0``.

    ``coeffs`` has one column per variable holding the column-major
    vectorization of ``A_i`` (shape ``n² × m``).
    """

    constant: np.ndarray
    coeffs: sp.spmatrix

    def __post_init__(self):
        self.constant = np.asarray(self.constant)
        n = self.constant.shape[0]
        self.coeffs = sp.csc_matrix(self.coeffs)
        if self.constant.shape != (n, n) or self.coeffs.shape[0] != n * n:
            raise ValueError("block constant and coefficient shapes disagree")
        if np.abs(self.constant - self.constant.conj().T).max(initial=0.0) > 1e-12:
            raise ValueError("block constant is not Hermitian")

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.constant) and np.abs(self.constant.imag).max(initial=0) > 0) or bool(
            np.iscomplexobj(self.coeffs.data) and np.abs(self.coeffs.data.imag).max(initial=0) > 0
        )

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        n = self.size
        return self.constant + (self.coeffs @ x).reshape((n, n), order="F")

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """``[Tr(Z A_i)]_i`` for a Hermitian ``Z``."""
        # Tr(Z A) = Σ_pq Z_qp A_pq = vec(Zᵀ) · vec(A)
        return np.real(self.coeffs.T @ z.T.reshape(-1, order="F"))


@dataclass
class SdpProblem:
    """Maximize ``objective · x + offset`` subject to every block being PSD."""

    objective: np.ndarray
    blocks: list[SdpBlock]
    offset: float = 0.0

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        m = self.objective.shape[0]
        for b in self.blocks:
            if b.coeffs.shape[1] != m:
                raise ValueError("block coefficient count does not match the objective")

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]


@dataclass
class LpProblem:
    """Maximize ``objective · x`` subject to ``G x ≤ h`` and ``E x = e``."""

    objective: np.ndarray
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray | None = None
    e: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        m = self.objective.shape[0]
        self.G = np.asarray(self.G, dtype=float).reshape(-1, m)
        self.h = np.asarray(self.h, dtype=float).ravel()
        if self.E is None:
            self.E = np.zeros((0, m))
            self.e = np.zeros(0)
        self.E = np.asarray(self.E, dtype=float).reshape(-1, m)
        self.e = np.asarray(self.e, dtype=float).ravel()
        if self.G.shape[0] != self.h.shape[0] or self.E.shape[0] != self.e.shape[0]:
            raise ValueError("constraint matrix and right-hand side sizes disagree")


@dataclass
class SolveReport:
    status: str
    value: float
    x: np.ndarray
    duals: list = field(default_factory=list)
    gap: float = float("nan")
    primal_value: float = float("nan")
    dual_value: float = float("nan")
    dual_residual: float = float("nan")
    min_block_eig: float = float("nan")
    iterations: int = 0
    certificate: dict | None = None
    solver_status: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# Hermitian parameterization

def hermitian_basis(n: int, real: bool = False) -> sp.csc_matrix:
    """Column-major vectorized basis of n×n Hermitian (or real symmetric) matrices.

    Variables are ordered: diagonal entries, then for each p<q the real part
    of entry (p,q), then (complex case) the imaginary parts.
    """
    rows, cols, vals = [], [], []
    k = 0
    for p in range(n):
        rows.append(p + p * n)
        cols.append(k)
        vals.append(1.0)
        k += 1
    iu, ju = np.triu_indices(n, 1)
    for p, q in zip(iu, ju):
        rows += [p + q * n, q + p * n]
        cols += [k, k]
        vals += [1.0, 1.0]
        k += 1
    if not real:
        for p, q in zip(iu, ju):
            rows += [p + q * n, q + p * n]
            cols += [k, k]
            vals += [1j, -1j]
            k += 1
    dtype = float if real else complex
    return sp.csc_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(n * n, k))


def hermitian_from_params(x: np.ndarray, n: int, real: bool = False) -> np.ndarray:
    return (hermitian_basis(n, real) @ x).reshape((n, n), order="F")


def hermitian_to_params(a: np.ndarray, real: bool = False) -> np.ndarray:
    n = a.shape[0]
    iu, ju = np.triu_indices(n, 1)
    parts = [np.real(np.diag(a)), np.real(a[iu, ju])]
    if not real:
        parts.append(np.imag(a[iu, ju]))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# real embedding

def _embed_dense(a: np.ndarray) -> np.ndarray:
    re, im = np.real(a), np.imag(a)
    return np.block([[re, -im], [im, re]])


def _embed_coeffs(c: sp.csc_matrix, n: int) -> sp.csc_matrix:
    coo = c.tocoo()
    p, q = coo.row % n, coo.row // n
    re, im = np.real(coo.data), np.imag(coo.data)
    N = 2 * n
    rows = np.concatenate([p + q * N, (p + n) + (q + n) * N, (p + n) + q * N, p + (q + n) * N])
    cols = np.concatenate([coo.col] * 4)
    vals = np.concatenate([re, re, im, -im])
    keep = vals != 0
    return sp.csc_matrix((vals[keep], (rows[keep], cols[keep])), shape=(N * N, c.shape[1]))


def _unembed(z: np.ndarray, n: int) -> np.ndarray:
    P, Q, S = z[:n, :n], z[n:, :n], z[n:, n:]
    return (P + S) + 1j * (Q - Q.T)


def _sym_from_lower(v: np.ndarray, n: int) -> np.ndarray:
    m = np.asarray(v).reshape((n, n), order="F")
    low = np.tril(m)
    return low + np.tril(m, -1).T


# ---------------------------------------------------------------------------
# KKT solver

class _BlockPattern:
    """Column-major coefficient matrix ``G_b`` of one PSD block."""

    def __init__(self, g: sp.csc_matrix, n: int, offset: int, m: int):
        self.n = n
        self.offset = offset
        self.m = m
        self.g = sp.csc_matrix(g)
        self.gt = sp.csr_matrix(self.g.T)
        coo = self.g.tocoo()
        self.p = (coo.row % n).astype(np.intp)
        self.q = (coo.row // n).astype(np.intp)
        self.v = coo.data.astype(float)
        self.col = coo.col.astype(np.intp)

    def same_structure(self, other: "_BlockPattern") -> bool:
        """True when G_other = ±G_self (the Schur term is sign-blind)."""
        if other.n != self.n or other.g.nnz != self.g.nnz:
            return False
        return (abs(self.g - other.g)).max() == 0 or (abs(self.g + other.g)).max() == 0

    def schur(self, Rs: Sequence[np.ndarray], H: np.ndarray, max_elems: int = 2 ** 24):
        """H += Σ_R Gᵀ (R ⊗ R) G for every scaling matrix R sharing this pattern."""
        n = self.n
        step = max(1, max_elems // (n * n * n))
        left = np.empty((self.m, n * n))
        for q0 in range(0, n, step):
            q1 = min(n, q0 + step)
            # columns p + q n of (R ⊗ R) for q in [q0, q1); R is symmetric
            slab = np.kron(Rs[0][:, q0:q1], Rs[0])
            for R in Rs[1:]:
                slab += np.kron(R[:, q0:q1], R)
            left[:, q0 * n: q1 * n] = self.gt @ slab
        H += self.gt @ np.ascontiguousarray(left.T)

    def adjoint(self, Y: np.ndarray) -> np.ndarray:
        """Gᵀ vec(Y) for symmetric Y."""
        contrib = self.v * Y[self.p, self.q]
        return np.bincount(self.col, weights=contrib, minlength=self.m)


def _make_kktsolver(patterns: list[_BlockPattern], G: sp.csc_matrix, m: int):
    groups: list[tuple[_BlockPattern, list[int]]] = []
    for k, pat in enumerate(patterns):
        for head, members in groups:
            if head.same_structure(pat):
                members.append(k)
                break
        else:
            groups.append((pat, [k]))

    def factor(W):
        H = np.zeros((m, m))
        Rs = []
        for k in range(len(patterns)):
            rti = np.array(W["rti"][k])
            Rs.append(rti @ rti.T)
        for head, members in groups:
            head.schur([Rs[k] for k in members], H)
        H = (H + H.T) / 2
        try:
            chol = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("singular KKT matrix") from exc

        def solve(x, y, z):
            bz = np.array(z).ravel()
            rhs = np.array(x).ravel().copy()
            for k, pat in enumerate(patterns):
                n = pat.n
                B = _sym_from_lower(bz[pat.offset: pat.offset + n * n], n)
                rhs += pat.adjoint(Rs[k] @ B @ Rs[k])
            ux = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            # W uz = W^{-T} (G ux - bz)
            outm = cvxopt.matrix(G @ ux - bz)
            cvxopt.misc.scale(outm, W, trans="T", inverse="I")
            x[:] = cvxopt.matrix(ux)
            z[:] = outm

        return solve

    return factor


def _cvxopt_options(t: float, max_iter: int) -> dict:
    return {
        "show_progress": False,
        "abstol": t,
        "reltol": t,
        "feastol": t,
        "maxiters": max_iter,
        "refinement": 3,
    }


def _stopping_ladder(tol: float) -> list[float]:
    # Stop well inside tol, but not below ~1e-9: past that point degenerate
    # instances (non-unique optima) drift away from the optimum on rounding
    # noise.  Looser stopping values are retried if a run is not certified.
    t0 = min(max(tol * 1e-2, 1e-9), 1e-8)
    return [t for t in (t0, t0 * 10, t0 * 100) if t <= max(tol, t0)]


def _to_spmatrix(a: sp.spmatrix):
    coo = sp.coo_matrix(a)
    return cvxopt.spmatrix(coo.data.astype(float).tolist(), coo.row.tolist(), coo.col.tolist(), coo.shape)


# ---------------------------------------------------------------------------
# SDP

def solve_sdp(problem: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SolveReport:
    """Solve a block SDP, returning primal ``x`` and per-block dual multipliers.

    On an optimal report the primal/dual objective gap is at most ``tol``
    and every block evaluated at ``x`` has minimum eigenvalue ≥ -1e-7.
    """
    m = problem.num_vars
    g_parts, h_parts, sizes, embedded = [], [], [], []
    for b in problem.blocks:
        if b.is_complex:
            n = 2 * b.size
            const = _embed_dense(b.constant)
            coeffs = _embed_coeffs(b.coeffs, b.size)
            embedded.append(True)
        else:
            n = b.size
            const = np.real(b.constant)
            coeffs = sp.csc_matrix(np.real(b.coeffs)) if np.iscomplexobj(b.coeffs.data) else b.coeffs
            embedded.append(False)
        sizes.append(n)
        g_parts.append(-coeffs)
        h_parts.append(const.reshape(-1, order="F"))
    G = sp.vstack(g_parts).tocsc()
    h = np.concatenate(h_parts)
    patterns, offset = [], 0
    for n, g in zip(sizes, g_parts):
        patterns.append(_BlockPattern(sp.csc_matrix(g), n, offset, m))
        offset += n * n
    dims = {"l": 0, "q": [], "s": sizes}
    c = cvxopt.matrix(-problem.objective)
    kkt = _make_kktsolver(patterns, G, m)
    report = None
    for t in _stopping_ladder(tol):
        report = _conelp_once(problem, c, G, h, dims, kkt, sizes, embedded, tol, _cvxopt_options(t, max_iter))
        if report.status != NUMERICAL_FAILURE:
            break
    return report


def _conelp_once(problem, c, G, h, dims, kkt, sizes, embedded, tol, options) -> SolveReport:
    m = problem.num_vars
    try:
        sol = solvers.conelp(c, _to_spmatrix(G), cvxopt.matrix(h), dims, kktsolver=kkt, options=options)
    except (ArithmeticError, ValueError) as exc:
        logger.warning("conelp failed: %s", exc)
        return SolveReport(NUMERICAL_FAILURE, float("nan"), np.full(m, np.nan), solver_status=str(exc))

    status = sol["status"]
    iterations = int(sol.get("iterations", 0))
    if status == "primal infeasible":
        z = np.array(sol["z"]).ravel()
        return SolveReport(INFEASIBLE, float("nan"), np.full(m, np.nan), iterations=iterations,
                           certificate={"z": z, "h_dot_z": float(h @ z)}, solver_status=status)
    if status == "dual infeasible":
        x = np.array(sol["x"]).ravel()
        return SolveReport(UNBOUNDED, float("inf"), x, iterations=iterations,
                           certificate={"ray": x}, solver_status=status)
    if sol["x"] is None:
        return SolveReport(NUMERICAL_FAILURE, float("nan"), np.full(m, np.nan), iterations=iterations,
                           solver_status=status)

    x = np.array(sol["x"]).ravel()
    zvec = np.array(sol["z"]).ravel()
    duals, offset = [], 0
    for b, n, emb in zip(problem.blocks, sizes, embedded):
        Z = _sym_from_lower(zvec[offset: offset + n * n], n)
        offset += n * n
        duals.append(_unembed(Z, b.size) if emb else Z)
    return _finish_sdp(problem, x, duals, tol, iterations, status)


def _finish_sdp(problem, x, duals, tol, iterations, solver_status) -> SolveReport:
    primal = float(problem.objective @ x + problem.offset)
    dual = float(sum(np.real(np.sum(Z * b.constant.T)) for Z, b in zip(duals, problem.blocks)) + problem.offset)
    residual = problem.objective.copy()
    for Z, b in zip(duals, problem.blocks):
        residual += b.adjoint(Z)
    min_eig = min(float(np.linalg.eigvalsh(b.evaluate(x)).min()) for b in problem.blocks)
    gap = abs(primal - dual)
    scale = max(1.0, np.abs(problem.objective).max(initial=0.0))
    res = float(np.abs(residual).max(initial=0.0)) / scale
    ok = gap <= tol and min_eig >= -PSD_TOL and res <= max(tol, 1e-8)
    status = OPTIMAL if ok else NUMERICAL_FAILURE
    if not ok:
        logger.warning("SDP not certified: gap=%.2e min_eig=%.2e dual_res=%.2e (%s)",
                       gap, min_eig, res, solver_status)
    return SolveReport(status, primal, x, duals, gap, primal, dual, res, min_eig, iterations,
                       solver_status=solver_status)


# ---------------------------------------------------------------------------
# LP

def solve_lp(problem: LpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
             method: str = "highs") -> SolveReport:
    """Solve ``max c·x, Gx ≤ h, Ex = e``; duals are ``(z, y)``.

    The default method is HiGHS (via scipy), which returns vertex solutions
    and exact multipliers for these small dense LPs.  When HiGHS reports
    infeasibility or unboundedness the problem is re-solved with cvxopt,
    whose self-dual embedding supplies the certificate: for infeasibility
    ``z ≥ 0, y`` with ``Gᵀz + Eᵀy = 0`` and ``h·z + e·y < 0``.
    """
    if method == "highs":
        res = scipy.optimize.linprog(
            -problem.objective, A_ub=problem.G if problem.G.shape[0] else None,
            b_ub=problem.h if problem.G.shape[0] else None,
            A_eq=problem.E if problem.E.shape[0] else None, b_eq=problem.e if problem.E.shape[0] else None,
            bounds=(None, None), method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status == 0:
            z = -np.asarray(res.ineqlin.marginals) if problem.G.shape[0] else np.zeros(0)
            y = -np.asarray(res.eqlin.marginals) if problem.E.shape[0] else np.zeros(0)
            return _finish_lp(problem, np.asarray(res.x), z, y, tol, int(res.nit), f"highs: {res.message}")
        if res.status not in (2, 3):
            m = problem.objective.shape[0]
            return SolveReport(NUMERICAL_FAILURE, float("nan"), np.full(m, np.nan), solver_status=res.message)
    elif method != "cvxopt":
        raise ValueError(f"unknown LP method {method!r}")
    return _solve_lp_cvxopt(problem, tol, max_iter)


def _finish_lp(problem, x, z, y, tol, iterations, solver_status) -> SolveReport:
    G, h, E, e = problem.G, problem.h, problem.E, problem.e
    primal = float(problem.objective @ x)
    dual = float(h @ z + e @ y)
    residual = G.T @ z + E.T @ y - problem.objective
    res = float(np.abs(residual).max(initial=0.0))
    slack = float((h - G @ x).min(initial=np.inf))
    eq = float(np.abs(E @ x - e).max(initial=0.0))
    gap = abs(primal - dual)
    ok = gap <= tol and slack >= -PSD_TOL and eq <= PSD_TOL and res <= max(tol, 1e-8) and z.min(initial=0) >= -PSD_TOL
    if not ok:
        logger.warning("LP not certified: gap=%.2e slack=%.2e eq=%.2e dual_res=%.2e (%s)",
                       gap, slack, eq, res, solver_status)
    return SolveReport(OPTIMAL if ok else NUMERICAL_FAILURE, primal, x, [z, y], gap, primal, dual, res,
                       slack, iterations, solver_status=solver_status)


def _solve_lp_cvxopt(problem: LpProblem, tol: float, max_iter: int) -> SolveReport:
    G, h, E, e = problem.G, problem.h, problem.E, problem.e
    m = problem.objective.shape[0]
    kwargs = {}
    if E.shape[0]:
        kwargs = {"A": cvxopt.matrix(E), "b": cvxopt.matrix(e)}
    options = _cvxopt_options(min(tol, 1e-7) * 1e-2, max_iter)
    try:
        sol = solvers.lp(cvxopt.matrix(-problem.objective), cvxopt.matrix(G), cvxopt.matrix(h),
                         options=options, **kwargs)
    except (ArithmeticError, ValueError) as exc:
        logger.warning("lp failed: %s", exc)
        return SolveReport(NUMERICAL_FAILURE, float("nan"), np.full(m, np.nan), solver_status=str(exc))
    status = sol["status"]
    iterations = int(sol.get("iterations", 0))
    if status == "primal infeasible":
        z = np.array(sol["z"]).ravel()
        y = np.array(sol["y"]).ravel() if E.shape[0] else np.zeros(0)
        return SolveReport(INFEASIBLE, float("nan"), np.full(m, np.nan), iterations=iterations,
                           certificate={"z": z, "y": y}, solver_status=status)
    if status == "dual infeasible":
        x = np.array(sol["x"]).ravel()
        return SolveReport(UNBOUNDED, float("inf"), x, iterations=iterations,
                           certificate={"ray": x}, solver_status=status)
    if sol["x"] is None:
        return SolveReport(NUMERICAL_FAILURE, float("nan"), np.full(m, np.nan), iterations=iterations,
                           solver_status=status)
    x = np.array(sol["x"]).ravel()
    z = np.array(sol["z"]).ravel()
    y = np.array(sol["y"]).ravel() if E.shape[0] else np.zeros(0)
    return _finish_lp(problem, x, z, y, tol, iterations, status)


def require_optimal(report: SolveReport, what: str) -> SolveReport:
    if not report.optimal:
        raise SolverError(f"{what}: solver returned {report.status} ({report.solver_status})", report)
    return report
