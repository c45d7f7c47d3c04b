"""Constrained weighted-l1 programs

    min_b ||b_{T^c}||_1   s.t.   ||y - A b||_2 <= eps

(``T`` empty gives plain noisy l1 / basis pursuit denoising).

The solver is a two-block ADMM on the splitting ``z = b``, ``u = A b - y``
with soft-thresholding on the unknown-support coordinates and projection of
``u`` onto the eps-ball.  Every few iterations the support and signs of the
ADMM iterate are used to solve the optimality conditions exactly (a single
homotopy segment); the polished point is accepted when it passes
:func:`kkt_certificate` at a tight tolerance.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .numerics import as_index_set

__all__ = [
    "CertReport",
    "InfeasibleProblemError",
    "MatrixFactor",
    "SolverConfig",
    "SolverResult",
    "WeightedL1Problem",
    "bp_enumeration_oracle",
    "factorize",
    "kkt_certificate",
    "solve_modcs",
    "solve_noisy_l1",
]


class InfeasibleProblemError(ValueError):
    """No point satisfies the data constraint."""


@dataclass(frozen=True)
class WeightedL1Problem:
    A: np.ndarray
    y: np.ndarray
    epsilon: float
    T: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != y.shape[0]:
            raise ValueError(f"dimension mismatch: A {A.shape}, y {y.shape}")
        if not (self.epsilon >= 0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "T", as_index_set(self.T, A.shape[1]))

    @property
    def weights(self):
        w = np.ones(self.A.shape[1])
        w[self.T] = 0.0
        return w

    def objective(self, beta):
        return float(np.abs(beta * self.weights).sum())


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    # multiplies the auto-scaled ADMM penalty 1/||A^T y||_inf
    penalty: float = 10.0
    polish_every: int = 20
    polish_tol: float = 1e-8

    def __post_init__(self):
        for name in ("max_iterations", "primal_tol", "dual_tol", "penalty", "polish_every"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolverResult:
    beta: np.ndarray
    iterations: int
    feasibility_slack: float
    objective: float
    converged: bool
    polished: bool = False


@dataclass(frozen=True)
class CertReport:
    passed: bool
    residual_norm: float
    epsilon: float
    multiplier: float
    reason: str


class MatrixFactor:
    """Cached quantities for repeated ADMM solves with the same matrix."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        n = self.A.shape[0]
        self.gram_rows = self.A @ self.A.T
        # (I + A^T A)^{-1} = I - A^T (I + A A^T)^{-1} A
        self.inv_rows = np.linalg.inv(np.eye(n) + self.gram_rows)


def factorize(A):
    return MatrixFactor(A)


def _soft(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _feas_tol(y):
    return 1e-6 * max(1.0, float(np.linalg.norm(y)))


def _result(problem, beta, iterations, converged, polished=False):
    rn = float(np.linalg.norm(problem.y - problem.A @ beta))
    return SolverResult(beta=beta, iterations=iterations,
                        feasibility_slack=problem.epsilon - rn,
                        objective=problem.objective(beta),
                        converged=converged, polished=polished)


def _zero_objective_point(problem):
    """Least-squares fit on ``T`` alone if it is feasible, else None."""
    A, y, T = problem.A, problem.y, problem.T
    beta = np.zeros(A.shape[1])
    if T.size:
        beta[T] = np.linalg.lstsq(A[:, T], y, rcond=None)[0]
    rn = np.linalg.norm(y - A @ beta)
    slack = 1e-12 * max(1.0, np.linalg.norm(y))
    return beta if rn <= problem.epsilon + slack else None


def _polish(problem, support, signs):
    """Solve the optimality conditions exactly on a guessed support.

    On ``U = T + support`` with fixed signs ``s`` the optimum satisfies
    ``A_U^T (y - A_U b) = lam * s~`` (``s~`` zero on ``T``) and, if the
    constraint is active, ``||y - A_U b|| = eps``.  The residual norm is
    ``||r0||^2 + lam^2 ||v||^2`` so ``lam`` has a closed form.
    """
    A, y, eps, T = problem.A, problem.y, problem.epsilon, problem.T
    n, m = A.shape
    U = np.concatenate([T, support])
    if U.size == 0 or U.size > n:
        return None
    s_tilde = np.concatenate([np.zeros(T.size), signs])
    Uu, sv, Vt = np.linalg.svd(A[:, U], full_matrices=False)
    if sv[-1] <= 1e-10 * sv[0]:
        return None
    coef_ls = Vt.T @ ((Uu.T @ y) / sv)
    r0 = y - A[:, U] @ coef_ls
    Vs = Vt @ s_tilde
    v = Uu @ (Vs / sv)
    r0n2, vn2 = float(r0 @ r0), float(v @ v)
    if vn2 == 0.0:
        return None
    if eps > 0:
        if r0n2 > eps * eps:
            return None
        lam = np.sqrt((eps * eps - r0n2) / vn2)
    else:
        lam = 0.0
    beta = np.zeros(m)
    beta[U] = coef_ls - lam * (Vt.T @ (Vs / sv**2))
    return beta


def solve_modcs(problem, cfg=None, factor=None):
    """Solve the weighted-l1 program of `problem` (weight 0 on ``problem.T``).

    Non-convergence within ``cfg.max_iterations`` is reported through
    ``converged=False``.  An eps=0 system with ``y`` outside the range of
    ``A`` raises :class:`InfeasibleProblemError`.
    """
    cfg = cfg or SolverConfig()
    A, y, eps, T = problem.A, problem.y, problem.epsilon, problem.T
    n, m = A.shape

    beta0 = _zero_objective_point(problem)
    if beta0 is not None:
        return _result(problem, beta0, 0, True, polished=True)
    if eps == 0:
        ls = np.linalg.lstsq(A, y, rcond=None)[0]
        if np.linalg.norm(y - A @ ls) > 1e-9 * max(1.0, np.linalg.norm(y)):
            raise InfeasibleProblemError("y is not in the range of A and eps = 0")

    if factor is None or factor.A.shape != A.shape:
        factor = MatrixFactor(A)
    G, Minv = factor.gram_rows, factor.inv_rows
    w = problem.weights
    Aty_inf = float(np.abs(A.T @ y).max())
    rho = cfg.penalty / max(Aty_inf, 1e-12)

    z = np.zeros(m)
    u = np.zeros(n)
    p = np.zeros(m)   # scaled dual for z = beta
    q = np.zeros(n)   # scaled dual for u = A beta - y
    tnorm = np.zeros(m, dtype=bool)
    tnorm[T] = True
    ynorm = max(1.0, float(np.linalg.norm(y)))
    beta = z
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        # beta = (I + A^T A)^{-1} [(z - p) + A^T (y + u - q)]
        c = y + u - q
        Abeta = Minv @ (A @ (z - p) + G @ c)
        beta = (z - p) + A.T @ (c - Abeta)
        z_old, u_old = z, u
        z = _soft(beta + p, w / rho)
        v = Abeta - y + q
        vn = np.linalg.norm(v)
        u = v if vn <= eps else v * (eps / vn)
        rz = beta - z
        ru = Abeta - y - u
        p = p + rz
        q = q + ru
        r_prim = np.sqrt(rz @ rz + ru @ ru)
        dz = z - z_old
        du = A.T @ (u - u_old)
        r_dual = rho * np.linalg.norm(dz + du)

        if it % cfg.polish_every == 0:
            supp = np.flatnonzero((z != 0) & ~tnorm)
            cand = _polish(problem, supp, np.sign(z[supp]))
            if cand is not None:
                cert = kkt_certificate(problem, cand, cfg.polish_tol)
                if cert.passed:
                    return _result(problem, cand, it, True, polished=True)

        scale_p = max(np.linalg.norm(beta), np.linalg.norm(Abeta - y), 1.0)
        scale_d = max(rho * np.sqrt(p @ p + q @ q), 1.0)
        if r_prim <= cfg.primal_tol * max(scale_p, ynorm) and r_dual <= cfg.dual_tol * scale_d * ynorm:
            break
        # residual balancing; the beta-update matrix does not depend on rho
        if it % 10 == 0:
            if r_prim > 10 * r_dual:
                rho *= 2.0
                p /= 2.0
                q /= 2.0
            elif r_dual > 10 * r_prim:
                rho /= 2.0
                p *= 2.0
                q *= 2.0

    supp = np.flatnonzero((z != 0) & ~tnorm)
    cand = _polish(problem, supp, np.sign(z[supp]))
    if cand is not None and kkt_certificate(problem, cand, cfg.polish_tol).passed:
        return _result(problem, cand, it, True, polished=True)
    res = _result(problem, beta, it, False)
    res.converged = (it < cfg.max_iterations and res.feasibility_slack >= -_feas_tol(y))
    return res


def solve_noisy_l1(A, y, epsilon, cfg=None, factor=None):
    """Plain noisy l1: ``min ||b||_1 s.t. ||y - A b|| <= eps``."""
    return solve_modcs(WeightedL1Problem(A, y, epsilon), cfg, factor)


def kkt_certificate(problem, beta, tol=1e-4):
    """First-order optimality check for `beta`.

    With ``g = A^T (y - A beta)`` and ``scale = max(1, ||A^T y||_inf)``:
    feasibility within a relative `tol`; at an interior point the objective
    must vanish; on the boundary (eps > 0) there must be one multiplier
    ``rho >= 0`` aligning ``g`` with the signs of the significant entries
    outside ``T`` and dominating ``|g|`` elsewhere, with ``g ~ 0`` on ``T``.
    For eps = 0 the multiplier form degenerates and the dual vector is found
    by a small LP instead.
    """
    A, y, eps, T = problem.A, problem.y, problem.epsilon, problem.T
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        return CertReport(False, np.nan, eps, np.nan, "non-finite beta")
    r = y - A @ beta
    rn = float(np.linalg.norm(r))
    scale = max(1.0, float(np.abs(A.T @ y).max()) if A.size else 1.0)
    abs_slack = 0.1 * tol * scale
    if rn > eps * (1 + tol) + abs_slack:
        return CertReport(False, rn, eps, np.nan, "infeasible")
    w = problem.weights
    off_T = w > 0
    obj = float(np.abs(beta[off_T]).sum())
    if obj <= tol * scale:
        return CertReport(True, rn, eps, 0.0, "zero objective")
    if eps > 0 and rn < eps * (1 - tol):
        return CertReport(False, rn, eps, np.nan, "interior point with nonzero objective")

    sig = off_T & (np.abs(beta) > tol * scale)
    rest = off_T & ~sig
    if eps > 0 and rn > abs_slack:
        g = A.T @ r
        if T.size and np.abs(g[T]).max() > tol * scale:
            return CertReport(False, rn, eps, np.nan, "gradient not orthogonal to known support")
        gs = g[sig] * np.sign(beta[sig])
        lo = max(float(gs.max()) / (1 + tol), 0.0)
        if rest.any():
            lo = max(lo, float(np.abs(g[rest]).max()) / (1 + tol))
        hi = float(gs.min()) / (1 - tol)
        if lo <= hi and hi > 0:
            return CertReport(True, rn, eps, 0.5 * (lo + hi), "boundary KKT")
        return CertReport(False, rn, eps, np.nan, "no consistent multiplier")
    return _dual_lp_check(A, T, beta, sig, rest, tol, rn, eps)


def _dual_lp_check(A, T, beta, sig, rest, tol, rn, eps):
    # find nu: A_T^T nu = 0, A_S^T nu = sign(beta_S), max_rest |A_i^T nu| minimal
    n = A.shape[0]
    eq_idx = np.concatenate([T, np.flatnonzero(sig)])
    b_eq = np.concatenate([np.zeros(T.size), np.sign(beta[sig])])
    R = A[:, rest].T
    k = R.shape[0]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_eq = np.hstack([A[:, eq_idx].T, np.zeros((eq_idx.size, 1))])
    if k:
        A_ub = np.vstack([np.hstack([R, -np.ones((k, 1))]),
                          np.hstack([-R, -np.ones((k, 1))])])
        b_ub = np.zeros(2 * k)
    else:
        A_ub, b_ub = None, None
    bounds = [(None, None)] * n + [(0, None)]
    sol = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if sol.status != 0:
        return CertReport(False, rn, eps, np.nan, "no dual vector matches the signs")
    if sol.x[-1] <= 1 + tol:
        return CertReport(True, rn, eps, float(sol.x[-1]), "dual LP")
    return CertReport(False, rn, eps, float(sol.x[-1]), "dual vector exceeds 1 off the support")


def bp_enumeration_oracle(A, y, T=()):
    """Exhaustive eps=0 oracle: best basic solution over all supports.

    Every ``U`` with ``|U| <= n`` and ``A_U`` of full column rank is tried;
    ``A_U b = y`` is solved and accepted when the residual is below 1e-9.
    Returns ``(beta, objective)``.  Intended for ``m <= 14``, ``n <= 10``.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, m = A.shape
    if m > 14 or n > 10:
        raise ValueError(f"oracle limited to m <= 14, n <= 10 (got {n}x{m})")
    T = as_index_set(T, m)
    w = np.ones(m)
    w[T] = 0.0
    best_beta, best_obj = None, np.inf
    if np.linalg.norm(y) <= 1e-9:
        return np.zeros(m), 0.0
    for k in range(1, min(n, m) + 1):
        subsets = np.array(list(combinations(range(m), k)), dtype=np.int64)
        stack = A[:, subsets].transpose(1, 0, 2)          # (N, n, k)
        Us, Ss, Vts = np.linalg.svd(stack, full_matrices=False)
        full = Ss[:, -1] > 1e-10 * Ss[:, 0]
        if not full.any():
            continue
        Us, Ss, Vts, subsets = Us[full], Ss[full], Vts[full], subsets[full]
        proj = np.einsum("bnk,n->bk", Us, y) / Ss
        coef = np.einsum("bkj,bk->bj", Vts, proj)          # (N, k)
        fit = np.einsum("nbk,bk->bn", A[:, subsets], coef)
        resid = np.linalg.norm(fit - y, axis=1)
        ok = resid <= 1e-9
        if not ok.any():
            continue
        objs = np.abs(coef * w[subsets]).sum(axis=1)
        objs[~ok] = np.inf
        j = int(np.argmin(objs))
        if objs[j] < best_obj:
            best_obj = float(objs[j])
            best_beta = np.zeros(m)
            best_beta[subsets[j]] = coef[j]
    if best_beta is None:
        raise InfeasibleProblemError("no support reproduces y exactly")
    return best_beta, best_obj
