"""Linear-programming bound for quantum codes from weight enumerators.

Variables are the n+1 coefficients of A'_C(x,y) = Tr(W(C)(x + y T(21))^⊗n).
The enumerators follow by substitution:

    S_C(x,y) = A'_C((x+y)/2, (y-x)/2)
    B_C(x,y) = A'_C(y, (x-y)/k)
    A_C(x,y) = A'_C((x-y)/k, y)

With P the code projector and E running over a unitary error basis,
A_C and B_C are k^-n times Σ|Tr(EP)|² and Σ Tr(EPE†P) grouped by weight,
so the coefficient of x^(n-j) y^j is the weight-j term.

Conventions (Shor-Laflamme, not fixed by the transforms themselves):
  * normalization: the weight-0 coefficient of A_C equals 1;
  * distance d: K·B_C[j] = A_C[j] for j < d.  In Shor-Laflamme
    normalization (A_0 = B_0 = 1) this reads B_j = A_j.
Feasibility is scale-free, so the first convention only fixes units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solver import LpProblem, solve_lp
from .symmetry import HomogeneousPoly, substitution_matrix

FEAS_TOL = 1e-8
MARGINAL = 1e-6
TABLE_MAX_N = 12


@dataclass(frozen=True)
class CodeParams:
    n: int
    K_dim: float
    d_min: int
    k_alphabet: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("code length must be positive")
        if not 1 <= self.d_min <= self.n:
            raise ValueError("need 1 <= d_min <= n")
        if self.K_dim < 1:
            raise ValueError("code dimension must be at least 1")
        if self.k_alphabet < 2:
            raise ValueError("alphabet size must be at least 2")


def transform_matrices(n: int, k: int) -> dict[str, np.ndarray]:
    """Coefficient maps A' ↦ S_C, B_C, A_C."""
    return {
        "S": substitution_matrix(n, 0.5, 0.5, -0.5, 0.5),
        "B": substitution_matrix(n, 0.0, 1.0, 1.0 / k, -1.0 / k),
        "A": substitution_matrix(n, 1.0 / k, -1.0 / k, 0.0, 1.0),
    }


@dataclass
class EnumeratorSet:
    A_prime: HomogeneousPoly
    S_poly: HomogeneousPoly
    B_poly: HomogeneousPoly
    A_poly: HomogeneousPoly
    matrices: dict = field(default_factory=dict, repr=False)

    def satisfies(self, K_dim: float, tol: float = 1e-9) -> bool:
        """S, B, A and B - A/K all have coefficients ≥ -tol."""
        extra = self.B_poly - self.A_poly * (1.0 / K_dim)
        return all(p.nonneg(tol) for p in (self.S_poly, self.B_poly, self.A_poly, extra))


def enumerator_transforms(A_prime: HomogeneousPoly, k_alphabet: int = 2) -> EnumeratorSet:
    if A_prime.degree < 1:
        raise ValueError("degree must be at least 1")
    mats = transform_matrices(A_prime.degree, k_alphabet)
    a = A_prime.array
    return EnumeratorSet(A_prime, HomogeneousPoly(mats["S"] @ a), HomogeneousPoly(mats["B"] @ a),
                         HomogeneousPoly(mats["A"] @ a), mats)


@dataclass
class CodeLpSystem:
    """Inequalities G α ≤ 0 (rows unit-normalized) and equalities E α = e.

    The variables α are the coefficients of A_C, not A'_C: the two are
    related by the exact substitution A'_C(x,y) = A_C(kx+y, y), and A_C is
    O(1) in scale, which keeps the LP well conditioned.
    """

    G: np.ndarray
    E: np.ndarray
    e: np.ndarray
    labels: list[str]
    to_A_prime: np.ndarray


def code_lp_system(params: CodeParams) -> CodeLpSystem:
    n, K, k = params.n, float(params.K_dim), params.k_alphabet
    mats = transform_matrices(n, k)
    inv = substitution_matrix(n, float(k), 1.0, 0.0, 1.0)   # A_C ↦ A'_C
    S, B = mats["S"] @ inv, mats["B"] @ inv
    A = np.eye(n + 1)
    fams = [("S", S), ("B", B), ("A", A), ("B-A/K", B - A / K)]
    rows, labels = [], []
    for name, m in fams:
        for j in range(n + 1):
            r = -m[j]
            norm = np.linalg.norm(r)
            if norm == 0:
                continue
            rows.append(r / norm)
            labels.append(f"{name}[{j}]")
    eq = [A[0]]
    rhs = [1.0]
    for j in range(params.d_min):
        r = K * B[j] - A[j]
        norm = np.linalg.norm(r)
        if norm == 0:
            continue
        eq.append(r / norm)
        rhs.append(0.0)
    return CodeLpSystem(np.array(rows), np.array(eq), np.array(rhs), labels, inv)


@dataclass
class CodeLpVerdict:
    params: CodeParams
    feasible: bool
    verdict: str            # "feasible" | "infeasible" | "marginal" | "unresolved"
    margin: float           # min slack t* over rows not forced to vanish; < 0 means infeasible
    point: np.ndarray | None = None   # A_C coefficients
    certificate: dict | None = None
    verified: bool = False
    raw_margin: float = float("nan")
    implicit_rows: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.feasible, self.point if self.feasible else self.certificate))

    @property
    def A_prime(self) -> HomogeneousPoly | None:
        if self.point is None:
            return None
        p = self.params
        return HomogeneousPoly(substitution_matrix(p.n, float(p.k_alphabet), 1.0, 0.0, 1.0) @ self.point)


def verify_point(system: CodeLpSystem, a: np.ndarray, tol: float = FEAS_TOL) -> bool:
    return bool((system.G @ a).max() <= tol and np.abs(system.E @ a - system.e).max() <= tol)


def verify_certificate(system: CodeLpSystem, z: np.ndarray, y: np.ndarray, tol: float = FEAS_TOL) -> bool:
    """Farkas: z ≥ 0, Gᵀz + Eᵀy = 0, e·y < 0 rules out {Ga ≤ 0, Ea = e}."""
    if z.min(initial=0.0) < -tol:
        return False
    resid = np.abs(system.G.T @ z + system.E.T @ y).max()
    return bool(resid <= tol and system.e @ y <= -tol)


def _reduce_equalities(system: CodeLpSystem, tol: float = 1e-10):
    """Independent equality rows U_rᵀE a = U_rᵀe, or a certificate if E a = e is inconsistent."""
    U, sv, Vt = np.linalg.svd(system.E, full_matrices=False)
    r = int((sv > tol * max(1.0, sv.max(initial=0.0))).sum())
    Ur, Vr = U[:, :r], Vt[:r]
    resid = system.e - Ur @ (Ur.T @ system.e)
    if np.linalg.norm(resid) > tol:
        # Eᵀ resid = 0 and e·resid = |resid|² > 0
        return None, None, {"z": np.zeros(system.G.shape[0]), "y": -resid / np.linalg.norm(resid)}
    return Ur, Vr, None


def code_lp_feasible(params: CodeParams, tol: float = 1e-9) -> CodeLpVerdict:
    """Decide whether the enumerator LP admits an A'_C for these parameters.

    Solves max t s.t. G α + t ≤ 0, t ≤ 1, E α = e, where rows of G fixed by
    the equalities alone are left out of the margin.  A nonnegative optimum
    gives a feasible point; a negative one comes with the dual (z, y),
    which is a Farkas certificate of infeasibility.
    """
    system = code_lp_system(params)
    rows, m = system.G.shape
    Ur, Vr, cert = _reduce_equalities(system)
    if cert is not None:
        ok = verify_certificate(system, cert["z"], cert["y"])
        return CodeLpVerdict(params, False, "infeasible" if ok else "unresolved", float("-inf"),
                             certificate=cert, verified=ok)
    E_red, e_red = Ur.T @ system.E, Ur.T @ system.e
    a_ls = np.linalg.lstsq(system.E, system.e, rcond=None)[0]
    free = []
    for i, g in enumerate(system.G):
        if np.linalg.norm(g - Vr.T @ (Vr @ g)) > 1e-10:
            free.append(i)
            continue
        if g @ a_ls > FEAS_TOL:
            # g = Eᵀλ  ⇒  g·a = λ·e > 0 on the whole affine set
            lam = np.linalg.lstsq(system.E.T, g, rcond=None)[0]
            z = np.zeros(rows)
            z[i] = 1.0
            c = {"z": z, "y": -lam, "labels": system.labels}
            ok = verify_certificate(system, z, -lam)
            return CodeLpVerdict(params, False, "infeasible" if ok else "unresolved", float(-(g @ a_ls)),
                                 certificate=c, verified=ok)
    t, a, z, y, report = _margin_lp(system, Ur, free, [], tol)
    if report is None:
        return CodeLpVerdict(params, False, "unresolved", float("nan"))
    if t < -FEAS_TOL:
        ok = verify_certificate(system, z, y)
        verdict = "marginal" if abs(t) < MARGINAL else "infeasible"
        return CodeLpVerdict(params, False, verdict if ok else "unresolved", t,
                             certificate={"z": z, "y": y, "labels": system.labels}, verified=ok)
    # Rows with positive multipliers at t* = 0 vanish on the whole feasible
    # set; drop them from the margin and re-solve so the margin is measured
    # in the relative interior.
    raw = t
    implicit: list[int] = []
    while t <= FEAS_TOL:
        newly = [i for i in free if z[i] > FEAS_TOL]
        if not newly:
            break
        implicit += newly
        free = [i for i in free if i not in newly]
        if not free:
            t = 0.0
            break
        t2, a2, z2, y2, rep2 = _margin_lp(system, Ur, free, implicit, tol)
        if rep2 is None or t2 < -FEAS_TOL:
            break
        t, a, z = t2, a2, z2
    ok = verify_point(system, a)
    verdict = "marginal" if t < MARGINAL else "feasible"
    return CodeLpVerdict(params, True, verdict if ok else "unresolved", t, point=a, verified=ok,
                         raw_margin=raw, implicit_rows=[system.labels[i] for i in implicit])


def _margin_lp(system: CodeLpSystem, Ur: np.ndarray, free: list[int], hard: list[int], tol: float):
    """max t s.t. G_free α + t ≤ 0, G_hard α ≤ 0, t ≤ 1, E α = e; duals mapped to the full system."""
    rows, m = system.G.shape
    nf, nh = len(free), len(hard)
    G = np.zeros((nf + nh + 1, m + 1))
    G[:nf, :m] = system.G[free]
    G[:nf, m] = 1.0
    G[nf:nf + nh, :m] = system.G[hard]
    G[-1, m] = 1.0
    h = np.zeros(nf + nh + 1)
    h[-1] = 1.0
    E_red, e_red = Ur.T @ system.E, Ur.T @ system.e
    E = np.hstack([E_red, np.zeros((E_red.shape[0], 1))])
    c = np.zeros(m + 1)
    c[m] = 1.0
    report = solve_lp(LpProblem(c, G, h, E, e_red), tol=tol)
    if not report.optimal:
        return float("nan"), None, None, None, None
    z = np.zeros(rows)
    z[free] = report.duals[0][:nf]
    z[hard] = report.duals[0][nf:nf + nh]
    return float(report.value), report.x[:m], z, Ur @ report.duals[1], report


def dimension_grid(n: int, k: int) -> list[int]:
    out, K = [], 1
    while K <= k ** n:
        out.append(K)
        K *= 2
    if out[-1] != k ** n:
        out.append(k ** n)
    return out


def code_lp_table(n_max: int, k_alphabet: int = 2, n_min: int = 1) -> list[CodeLpVerdict]:
    """Verdicts over n ≤ n_max, K ∈ {1, 2, 4, ...} (plus k^n), 1 ≤ d ≤ n."""
    if n_max > TABLE_MAX_N:
        raise ValueError(f"n_max is limited to {TABLE_MAX_N}")
    out = []
    for n in range(n_min, n_max + 1):
        for K in dimension_grid(n, k_alphabet):
            for d in range(1, n + 1):
                out.append(code_lp_feasible(CodeParams(n, K, d, k_alphabet)))
    return out


def distance_monotone(table: list[CodeLpVerdict]) -> bool:
    """feasible at (n,K,d) ⇒ feasible at (n,K,d-1)."""
    feas = {(v.params.n, v.params.K_dim, v.params.d_min): v.feasible for v in table}
    return all(feas.get((n, K, d - 1), True) for (n, K, d), f in feas.items() if f and d > 1)
