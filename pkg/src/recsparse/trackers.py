"""Recursive sparse reconstruction: Modified-CS and Modified-CS with
add / least-squares / delete support refinement.

Each step consumes one measurement frame and the previous support estimate
(carried in :class:`TrackerState`) and returns the reconstruction, the
thresholds used and, when the true signal is supplied, the support-error
sets and the per-frame analytical checks.

Automatic thresholds:

* ``alpha``: smallest value such that every retained entry has magnitude at
  least ``0.5 * xmin_hat`` and ``sigma_min(A_T~) >= 0.4``;
* ``alpha_add = min(a, 4 eps / sqrt(n))`` with ``a`` the smallest value such
  that ``sigma_min(A_Tadd) >= 0.4``;
* ``alpha_del = max(0.7 * xmin_hat - ||A_Tadd^T (y - A x_modcs)||_inf, 4 eps / sqrt(n))``;

where ``xmin_hat`` is the mean over the last ``t0 = 10`` frames of the
smallest estimated magnitude on the final support estimate.  The noise
floor on ``alpha_del`` keeps the deletion step active when the smallest
true magnitude is comparable to the residual correlation term; without
it, spurious entries fitted to noise are never deleted and accumulate.
The cap on ``alpha_add`` matters when ``sigma_min(A_T)`` is itself close to
0.4: the conditioning rule then admits no addition at all, and a prior
support carrying extras could never recover its misses.  Additions that
make ``A_Tadd`` rank deficient are still trimmed before the LS step.
"""
from dataclasses import dataclass, field

import numpy as np

from .numerics import RANK_TOL, SingularMatrixError, as_index_set, least_squares, min_singular_value
from .wl1 import WeightedL1Problem, solve_modcs

__all__ = [
    "DELETE_FRACTION",
    "ADD_NOISE_CAP",
    "DELETE_NOISE_FLOOR",
    "SIGMA_FLOOR",
    "StepOutput",
    "TrackerState",
    "WINDOW",
    "XMIN_FRACTION",
    "addlsdel_step",
    "auto_alpha",
    "auto_alpha_add",
    "auto_alpha_del",
    "modcs_step",
    "update_xmin",
]

WINDOW = 10
SIGMA_FLOOR = 0.4
XMIN_FRACTION = 0.5
DELETE_FRACTION = 0.7
DELETE_NOISE_FLOOR = 4.0
ADD_NOISE_CAP = 4.0

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class TrackerState:
    prev_support: np.ndarray = _EMPTY
    xmin_window: tuple = ()
    t: int = 0
    window: int = WINDOW

    def __post_init__(self):
        if len(self.xmin_window) > self.window:
            raise ValueError(f"x_min window longer than {self.window}")

    @property
    def xmin_hat(self):
        return float(np.mean(self.xmin_window)) if self.xmin_window else None


@dataclass
class StepOutput:
    t: int
    x_hat: np.ndarray
    x_hat_modcs: np.ndarray
    prior_support: np.ndarray
    support_estimate: np.ndarray
    add_support: np.ndarray = None
    x_hat_add: np.ndarray = None
    alpha: float = None
    alpha_add: float = None
    alpha_del: float = None
    xmin_hat: float = None
    converged: bool = True
    flags: list = field(default_factory=list)
    diagnostics: dict = None
    violations: list = field(default_factory=list)


# ----------------------------------------------------------------------------
# thresholds
# ----------------------------------------------------------------------------

def _grid(values):
    mags = np.unique(np.abs(np.asarray(values, dtype=float)))
    return np.unique(np.concatenate([[0.0], mags]))


def _smallest_passing(grid, ok):
    """First grid value where the monotone predicate `ok` holds (binary search)."""
    lo, hi = 0, len(grid) - 1
    if ok(grid[lo]):
        return grid[lo]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(grid[mid]):
            hi = mid
        else:
            lo = mid
    return grid[hi]


def auto_alpha(x_hat_modcs, A, xmin_hat):
    """Smallest detection threshold meeting the magnitude and conditioning clauses.

    Raising the threshold shrinks the retained set, which can only raise
    both its smallest magnitude and ``sigma_min``, so the admissible
    thresholds form an upper interval of the candidate grid.
    """
    if not xmin_hat > 0:
        raise ValueError(f"xmin_hat must be positive, got {xmin_hat}")
    x = np.asarray(x_hat_modcs, dtype=float)
    mag = np.abs(x)
    grid = _grid(x)
    floor = XMIN_FRACTION * xmin_hat

    def ok(a):
        keep = mag > a
        if not keep.any():
            return True
        return mag[keep].min() >= floor and min_singular_value(A[:, keep]) >= SIGMA_FLOOR

    return float(_smallest_passing(grid, ok))


def auto_alpha_add(x_hat_modcs, A, T):
    """Smallest addition threshold keeping ``sigma_min(A_{T u A^}) >= 0.4``.

    Returns ``(alpha_add, ok)``; ``ok`` is False when ``A_T`` alone fails
    the bound, in which case the threshold admits no additions.
    """
    x = np.asarray(x_hat_modcs, dtype=float)
    T = as_index_set(T, x.size)
    out = np.ones(x.size, dtype=bool)
    out[T] = False
    mag = np.where(out, np.abs(x), 0.0)
    grid = _grid(mag[out]) if out.any() else np.zeros(1)

    def ok(a):
        cols = np.concatenate([T, np.flatnonzero(mag > a)])
        return min_singular_value(A[:, cols]) >= SIGMA_FLOOR

    if not ok(grid[-1]):
        return float(grid[-1]), False
    return float(_smallest_passing(grid, ok)), True


def auto_alpha_del(xmin_hat, A_Tadd, residual):
    if not xmin_hat > 0:
        raise ValueError(f"xmin_hat must be positive, got {xmin_hat}")
    corr = np.abs(np.asarray(A_Tadd).T @ np.asarray(residual)).max(initial=0.0)
    return max(0.0, DELETE_FRACTION * xmin_hat - float(corr))


def update_xmin(window, support_estimate, x_hat, t0=WINDOW):
    """Push ``min_{support} |x_hat|`` into the window; return ``(window, mean)``.

    An empty support leaves the window unchanged.
    """
    window = tuple(window)
    support = np.asarray(support_estimate, dtype=np.int64)
    if support.size:
        window = (window + (float(np.abs(np.asarray(x_hat)[support]).min()),))[-t0:]
    return window, (float(np.mean(window)) if window else None)


def _xmin_for_step(state, x_hat_modcs):
    if state.xmin_hat is not None:
        return state.xmin_hat
    # first frame: smallest nonzero magnitude; an all-zero estimate needs no threshold
    nz = np.abs(x_hat_modcs[x_hat_modcs != 0])
    return float(nz.min()) if nz.size else 1.0


# ----------------------------------------------------------------------------
# steps
# ----------------------------------------------------------------------------

def _solve(frame, A, T, cfg, factor):
    res = solve_modcs(WeightedL1Problem(A, frame.y, frame.epsilon, T), cfg, factor)
    return res.beta, res.converged


def _ls_on(A, y, T, m, flags, tag):
    x = np.zeros(m)
    if T.size:
        try:
            x[T] = least_squares(A[:, T], y)
        except SingularMatrixError:
            flags.append(f"{tag}_rank_deficient")
            x[T] = np.linalg.lstsq(A[:, T], y, rcond=None)[0]
    return x


def _trim_to_full_rank(A, T, added, mag):
    """Drop additions (smallest first) until ``A_{T u added}`` has full column rank."""
    order = added[np.argsort(mag[added], kind="stable")]
    k = 0
    while True:
        cols = np.concatenate([T, order[k:]])
        s = np.linalg.svd(A[:, cols], compute_uv=False) if cols.size else np.ones(1)
        if cols.size <= A.shape[0] and s[-1] > RANK_TOL * s[0]:
            return np.sort(order[k:])
        if k >= order.size:
            return _EMPTY
        k += 1


def modcs_step(state, frame, A, alpha="auto", cfg=None, factor=None, truth=None, check=False):
    """Modified-CS on ``T = state.prev_support`` then support by ``|x| > alpha``."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] != frame.y.shape[0]:
        raise ValueError(f"frame has {frame.y.shape[0]} measurements, A has {A.shape[0]} rows")
    m = A.shape[1]
    T = as_index_set(state.prev_support, m)
    xm, conv = _solve(frame, A, T, cfg, factor)
    flags = [] if conv else ["nonconverged"]
    xmin = _xmin_for_step(state, xm)
    a = auto_alpha(xm, A, xmin) if isinstance(alpha, str) else float(alpha)
    support = np.flatnonzero(np.abs(xm) > a)
    window, _ = update_xmin(state.xmin_window, support, xm, state.window)
    out = StepOutput(t=frame.t, x_hat=xm, x_hat_modcs=xm, prior_support=T,
                     support_estimate=support, alpha=a, xmin_hat=xmin, converged=conv, flags=flags)
    if truth is not None:
        out.diagnostics = support_diagnostics(truth, T, support)
        if check:
            out.violations = check_modcs_frame(truth, out)
    return out, TrackerState(prev_support=support, xmin_window=window, t=frame.t + 1, window=state.window)


def addlsdel_step(state, frame, A, alphas="auto", cfg=None, factor=None, truth=None, check=False,
                  delete_floor=DELETE_NOISE_FLOOR, add_cap=ADD_NOISE_CAP):
    """Modified-CS, threshold-add, LS on the enlarged support, threshold-delete, final LS.

    `alphas` is ``"auto"`` or a pair ``(alpha_add, alpha_del)``; either entry
    may itself be ``"auto"``.  An automatic ``alpha_del`` is at least
    ``delete_floor * eps / sqrt(n)`` and an automatic ``alpha_add`` at most
    ``add_cap * eps / sqrt(n)`` (``delete_floor=0`` and ``add_cap=None`` give
    the bare rules).
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] != frame.y.shape[0]:
        raise ValueError(f"frame has {frame.y.shape[0]} measurements, A has {A.shape[0]} rows")
    m = A.shape[1]
    y = frame.y
    T = as_index_set(state.prev_support, m)
    a_add, a_del = ("auto", "auto") if isinstance(alphas, str) else alphas
    xm, conv = _solve(frame, A, T, cfg, factor)
    flags = [] if conv else ["nonconverged"]
    xmin = _xmin_for_step(state, xm)

    if isinstance(a_add, str):
        a_add, ok = auto_alpha_add(xm, A, T)
        if add_cap is not None:
            a_add = min(a_add, add_cap * frame.epsilon / np.sqrt(frame.n_t))
        if not ok:
            flags.append("prior_support_ill_conditioned")
    a_add = float(a_add)
    outside = np.ones(m, dtype=bool)
    outside[T] = False
    detected = np.flatnonzero(outside & (np.abs(xm) > a_add))
    kept = _trim_to_full_rank(A, T, detected, np.abs(xm))
    if kept.size < detected.size:
        flags.append("additions_trimmed")
    T_add = np.union1d(T, kept)
    x_add = _ls_on(A, y, T_add, m, flags, "add")

    if isinstance(a_del, str):
        a_del = auto_alpha_del(xmin, A[:, T_add], y - A @ xm)
        a_del = max(a_del, delete_floor * frame.epsilon / np.sqrt(frame.n_t))
    a_del = float(a_del)
    support = T_add[np.abs(x_add[T_add]) > a_del]
    x_hat = _ls_on(A, y, support, m, flags, "final")
    window, _ = update_xmin(state.xmin_window, support, x_hat, state.window)
    out = StepOutput(t=frame.t, x_hat=x_hat, x_hat_modcs=xm, prior_support=T,
                     support_estimate=support, add_support=T_add, x_hat_add=x_add,
                     alpha_add=a_add, alpha_del=a_del, xmin_hat=xmin, converged=conv, flags=flags)
    if truth is not None:
        out.diagnostics = support_diagnostics(truth, T, support, T_add)
        out.diagnostics["detected"] = np.union1d(T, detected)
        if check:
            out.violations = check_addlsdel_frame(truth, out, A, frame)
    return out, TrackerState(prev_support=support, xmin_window=window, t=frame.t + 1, window=state.window)


# ----------------------------------------------------------------------------
# ground-truth diagnostics and per-frame analytical checks
# ----------------------------------------------------------------------------

def support_diagnostics(x_true, T, T_final, T_add=None):
    N = np.flatnonzero(np.asarray(x_true) != 0)
    d = {
        "N": N,
        "delta": np.setdiff1d(N, T, assume_unique=True),
        "delta_e": np.setdiff1d(T, N, assume_unique=True),
        "delta_tilde": np.setdiff1d(N, T_final, assume_unique=True),
        "delta_tilde_e": np.setdiff1d(T_final, N, assume_unique=True),
    }
    if T_add is not None:
        d["delta_add"] = np.setdiff1d(N, T_add, assume_unique=True)
        d["delta_e_add"] = np.setdiff1d(T_add, N, assume_unique=True)
    return d


def _set_identity_violations(diag, T):
    out = []
    rebuilt = np.setdiff1d(np.union1d(T, diag["delta"]), diag["delta_e"])
    if not np.array_equal(rebuilt, diag["N"]):
        out.append("set_identity")
    return out


def _tol(x):
    return 1e-12 * max(1.0, float(np.abs(x).max(initial=0.0)))


def check_modcs_frame(x_true, out):
    """Detection implications for a thresholded Modified-CS estimate."""
    x = np.asarray(x_true, dtype=float)
    diag = out.diagnostics
    viol = _set_identity_violations(diag, out.prior_support)
    err = float(np.abs(x - out.x_hat_modcs).max(initial=0.0))
    tol = _tol(x)
    must = np.flatnonzero(np.abs(x) > out.alpha + err + tol)
    if not np.all(np.isin(must, out.support_estimate)):
        viol.append("detection")
    if out.alpha >= err + tol and diag["delta_tilde_e"].size:
        viol.append("no_false_detection")
    return viol


def ls_error_identity(A, y_noise, x_true, T_add):
    """``(A'A)^{-1}[A'w + A' A_D x_D]`` with ``A = A_{T_add}`` and ``D = N \\ T_add``.

    This equals the LS error ``(x_hat_add - x)_{T_add}``.
    """
    x = np.asarray(x_true, dtype=float)
    N = np.flatnonzero(x != 0)
    D = np.setdiff1d(N, T_add, assume_unique=True)
    At = A[:, T_add]
    rhs = np.linalg.solve(At.T @ At, At.T @ y_noise + At.T @ (A[:, D] @ x[D]))
    return rhs


def check_addlsdel_frame(x_true, out, A, frame):
    x = np.asarray(x_true, dtype=float)
    diag = out.diagnostics
    viol = _set_identity_violations(diag, out.prior_support)
    tol = _tol(x)
    err_m = float(np.abs(x - out.x_hat_modcs).max(initial=0.0))
    must = np.flatnonzero(np.abs(x) > out.alpha_add + err_m + tol)
    if not np.all(np.isin(must, diag["detected"])):
        viol.append("detection")
    T_add = out.add_support
    if T_add.size:
        e_add = x[T_add] - out.x_hat_add[T_add]
        err_a = float(np.abs(e_add).max())
        keep = T_add[np.abs(x[T_add]) > out.alpha_del + err_a + tol]
        if not np.all(np.isin(keep, out.support_estimate)):
            viol.append("deletion_keeps_large")
        if out.alpha_del >= err_a + tol and np.intersect1d(diag["delta_e_add"], out.support_estimate).size:
            viol.append("deletion_removes_extras")
        if frame.noise is not None and "add_rank_deficient" not in out.flags:
            rhs = ls_error_identity(A, frame.noise, x, T_add)
            if np.abs(-e_add - rhs).max() > 1e-8 * max(1.0, float(np.abs(x).max())):
                viol.append("ls_error_identity")
    return viol
