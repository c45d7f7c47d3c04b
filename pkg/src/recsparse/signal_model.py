"""Ground-truth sparse sequences and checks of the signal-change assumptions.

Two generators are provided:

* the deterministic "ladder" model (``assumptions1``): magnitudes live on the
  grid ``r, 2r, ..., d r``; every step ``S_a`` coefficients enter at ``r``,
  ``S_a`` leave from ``r`` and ``S_a`` coefficients move up / down one rung
  at every level;
* a randomized generator for the realistic model (``assumptions2`` and, with
  proportional early removal, ``assumptions3``): new coefficients start small
  and grow for ``d_min`` steps, the "large" set above ``ell`` drifts, and
  decreasing coefficients are removed within ``b`` steps.

:func:`verify_assumptions` extracts support-change statistics from any
sequence of sparse vectors and evaluates each clause of the chosen model.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .numerics import as_index_set

__all__ = [
    "MODEL_IDS",
    "Model1Params",
    "Model2Params",
    "ModelError",
    "ModelReport",
    "SparseSequenceState",
    "StateError",
    "decrease_set",
    "gen_model1_initial",
    "gen_model2_initial",
    "generate_sequence",
    "increase_set",
    "increasing_set",
    "large_set",
    "small_set",
    "step_model1",
    "step_model2",
    "verify_assumptions",
]

MODEL_IDS = ("assumptions1", "assumptions2", "assumptions3")

_EMPTY = np.zeros(0, dtype=np.int64)


class ModelError(ValueError):
    """Model parameters cannot be realized (e.g. not enough large elements)."""


class StateError(ValueError):
    """A state handed to a step function violates the model invariants."""


@dataclass(frozen=True)
class Model1Params:
    S: int
    S_a: int
    r: float
    d: int
    m: int

    def __post_init__(self):
        if self.d < 1 or self.S_a < 0 or self.S < 1 or not self.r > 0:
            raise ValueError(f"invalid ladder parameters {self}")
        ladder = (2 * self.d - 2) * self.S_a
        if self.S < ladder:
            raise ValueError(f"S={self.S} < (2d-2)S_a={ladder}: initial ladder cannot be filled")
        if self.d >= 2 and self.S - ladder < self.S_a:
            raise ValueError("fewer than S_a coefficients at the top magnitude; "
                             "the top rung cannot release S_a per step")
        if self.S + self.S_a > self.m:
            raise ValueError(f"S + S_a = {self.S + self.S_a} exceeds m = {self.m}")

    @property
    def M(self):
        return self.d * self.r


@dataclass(frozen=True)
class Model2Params:
    S: int
    S_a: int
    d_min: int
    a_min: float
    r_min: float
    b: int
    m: int
    ell: float = None
    early_removal: bool = False

    def __post_init__(self):
        if self.S < 1 or self.S_a < 0 or self.d_min < 1 or self.b < 1:
            raise ValueError(f"invalid model parameters {self}")
        if not (self.a_min > 0 and self.r_min > 0):
            raise ValueError("a_min and r_min must be positive")
        ell = self.a_min + self.d_min * self.r_min
        if self.ell is None:
            object.__setattr__(self, "ell", ell)
        elif not math.isclose(self.ell, ell, rel_tol=1e-12):
            raise ValueError(f"ell must equal a_min + d_min*r_min = {ell}, got {self.ell}")
        if (self.d_min + self.b + 1) * self.S_a > self.S:
            raise ValueError(f"(d_min + b + 1) S_a = {(self.d_min + self.b + 1) * self.S_a} > S = {self.S}")
        if self.S + self.S_a > self.m:
            raise ValueError(f"S + S_a = {self.S + self.S_a} exceeds m = {self.m}")


@dataclass(frozen=True)
class SparseSequenceState:
    """Signal ``x_t = magnitudes * signs`` plus support bookkeeping.

    ``decrease_start[i]`` is the time ``i`` left the large set (-1 if it is
    not decreasing); ``add_time[i]`` the time of its latest addition.  The
    logs map ``j -> tuple of add times``, ``(j, t) -> a_{j,t}`` and
    ``(j, tau) -> r_{j,tau}`` (signed per-step magnitude change during the
    growth phase).  ``adds_history[k]``/``decr_history[k]`` hold
    ``|A_k|``/``|B_k|``.
    """
    t: int
    m: int
    magnitudes: np.ndarray
    signs: np.ndarray
    support: np.ndarray
    added: np.ndarray = _EMPTY
    removed: np.ndarray = _EMPTY
    new_decreasing: np.ndarray = _EMPTY
    large: np.ndarray = _EMPTY
    small_decreasing: np.ndarray = _EMPTY
    add_time: np.ndarray = None
    decrease_start: np.ndarray = None
    add_times: dict = field(default_factory=dict)
    initial_magnitudes: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    adds_history: tuple = ()
    decr_history: tuple = ()
    recent_adds: tuple = ()

    @property
    def x(self):
        return self.magnitudes * self.signs


# ----------------------------------------------------------------------------
# set accessors
# ----------------------------------------------------------------------------

def _support_of(x):
    return np.flatnonzero(np.asarray(x) != 0)


def small_set(state, j, p):
    """Indices with ``0 < |x_i| < j r``."""
    mag = state.magnitudes
    return np.flatnonzero((mag > 0) & (mag < j * p.r * (1 - 1e-12)))


def _level(mag, r):
    return np.rint(np.asarray(mag) / r).astype(np.int64)


def increase_set(prev, cur, j, r):
    """Elements that went from ``(j-1) r`` to ``j r``."""
    lp, lc = _level(np.abs(prev), r), _level(np.abs(cur), r)
    return np.flatnonzero((lc == j) & (lp == j - 1))


def decrease_set(prev, cur, j, r):
    """Elements that went from ``(j+1) r`` to ``j r`` (``j = 0``: removals)."""
    lp, lc = _level(np.abs(prev), r), _level(np.abs(cur), r)
    return np.flatnonzero((lc == j) & (lp == j + 1))


def increasing_set(prev_state, state):
    """Non-decreasing support elements ``{j in N_t : |x_t| >= |x_{t-1}|}``."""
    cur, prev = state.magnitudes, prev_state.magnitudes
    return np.flatnonzero((cur > 0) & (cur >= prev))


def large_set(x, ell, recent_adds):
    """``{j not recently added : |x_j| >= ell}``."""
    mask = np.abs(np.asarray(x)) >= ell
    for a in recent_adds:
        mask[np.asarray(a, dtype=np.int64)] = False
    return np.flatnonzero(mask)


# ----------------------------------------------------------------------------
# ladder model
# ----------------------------------------------------------------------------

def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed if isinstance(seed, (list, tuple)) else [seed]))


def _random_signs(rng, k):
    return np.where(rng.random(k) < 0.5, -1, 1).astype(np.int8)


def gen_model1_initial(p, seed):
    rng = _rng(seed)
    idx = rng.choice(p.m, size=p.S, replace=False)
    levels = np.full(p.S, p.d, dtype=np.int64)
    pos = 0
    for j in range(1, p.d):
        levels[pos:pos + 2 * p.S_a] = j
        pos += 2 * p.S_a
    mags = np.zeros(p.m)
    mags[idx] = levels * p.r
    signs = np.zeros(p.m, dtype=np.int8)
    signs[idx] = _random_signs(rng, p.S)
    support = np.sort(idx)
    add_time = np.full(p.m, -1, dtype=np.int64)
    add_time[support] = 0
    return SparseSequenceState(
        t=0, m=p.m, magnitudes=mags, signs=signs, support=support,
        large=np.flatnonzero(_level(mags, p.r) == p.d) if p.d > 1 else _EMPTY,
        add_time=add_time, decrease_start=np.full(p.m, -1, dtype=np.int64),
        add_times={int(i): (0,) for i in support},
        initial_magnitudes={(int(i), 0): float(mags[i]) for i in support})


def _check_ladder(state, p):
    lv = _level(state.magnitudes, p.r)
    if not np.allclose(state.magnitudes, lv * p.r, rtol=0, atol=1e-9 * p.r):
        raise StateError("magnitudes are not on the r-grid")
    if lv.max(initial=0) > p.d:
        raise StateError("magnitude above M = d r")
    for j in range(1, p.d):
        if np.count_nonzero(lv == j) != 2 * p.S_a:
            raise StateError(f"level {j} holds {np.count_nonzero(lv == j)} coefficients, expected {2 * p.S_a}")
    if np.count_nonzero(lv > 0) != p.S:
        raise StateError("support size differs from S")
    return lv


def step_model1(state, p, rng):
    """One step of the ladder model; which coefficients move is uniform."""
    rng = _rng(rng)
    lv = _check_ladder(state, p)
    new = lv.copy()
    S_a, d = p.S_a, p.d
    removed = _EMPTY
    for j in range(1, d + 1):
        members = rng.permutation(np.flatnonzero(lv == j))
        if d == 1:
            removed = np.sort(members[:S_a])
            new[removed] = 0
        elif j == 1:
            new[members[:S_a]] = 2
            removed = np.sort(members[S_a:2 * S_a])
            new[removed] = 0
        elif j < d:
            new[members[:S_a]] = j + 1
            new[members[S_a:2 * S_a]] = j - 1
        else:
            new[members[:S_a]] = d - 1
    outside = np.flatnonzero(lv == 0)
    added = np.sort(rng.choice(outside, size=S_a, replace=False)) if S_a else _EMPTY
    new[added] = 1
    t = state.t + 1
    mags = new * p.r
    signs = state.signs.copy()
    signs[removed] = 0
    signs[added] = _random_signs(rng, added.size)
    add_time = state.add_time.copy()
    add_time[added] = t
    add_times = dict(state.add_times)
    init = dict(state.initial_magnitudes)
    for i in added:
        add_times[int(i)] = add_times.get(int(i), ()) + (t,)
        init[(int(i), t)] = float(p.r)
    dec = state.decrease_start.copy()
    went_down = np.flatnonzero((new < lv) & (new > 0))
    dec[np.flatnonzero(new >= lv)] = -1
    dec[went_down[dec[went_down] < 0]] = t
    dec[removed] = -1
    large = np.flatnonzero(new == d) if d > 1 else _EMPTY
    return SparseSequenceState(
        t=t, m=p.m, magnitudes=mags, signs=signs, support=np.flatnonzero(new > 0),
        added=added, removed=removed,
        new_decreasing=np.flatnonzero((lv == d) & (new == d - 1)) if d > 1 else _EMPTY,
        large=large, small_decreasing=went_down if d > 1 else _EMPTY,
        add_time=add_time, decrease_start=dec, add_times=add_times,
        initial_magnitudes=init, rates=state.rates,
        adds_history=state.adds_history + (int(added.size),),
        decr_history=state.decr_history + (S_a if d > 1 else 0,))


# ----------------------------------------------------------------------------
# realistic model (randomized generator)
# ----------------------------------------------------------------------------

def _round_half_up(v):
    return int(math.floor(v + 0.5))


def gen_model2_initial(p, seed):
    """``S_0 = [mu_1 S]`` coefficients, all in the large set, magnitudes in (ell, ell + r_min]."""
    rng = _rng(seed)
    S0 = min(p.S, _round_half_up(rng.uniform(0.9, 1.0) * p.S))
    idx = np.sort(rng.choice(p.m, size=S0, replace=False))
    mags = np.zeros(p.m)
    mags[idx] = p.ell + (1.0 - rng.random(S0)) * p.r_min
    signs = np.zeros(p.m, dtype=np.int8)
    signs[idx] = _random_signs(rng, S0)
    add_time = np.full(p.m, -1, dtype=np.int64)
    add_time[idx] = 0
    return SparseSequenceState(
        t=0, m=p.m, magnitudes=mags, signs=signs, support=idx, large=idx.copy(),
        add_time=add_time, decrease_start=np.full(p.m, -1, dtype=np.int64),
        add_times={int(i): (0,) for i in idx},
        initial_magnitudes={(int(i), 0): float(mags[i]) for i in idx},
        adds_history=(0,), decr_history=(0,), recent_adds=())


def _mu(rng, lo, hi, k):
    # uniform on (lo, hi]
    return hi - rng.random(k) * (hi - lo)


def step_model2(state, p, rng):
    """One step of the randomized realistic-model generator.

    Counts: for ``t <= b`` no additions or removals and ``S_a`` new
    decreasing elements; afterwards ``S_{a,t} = [mu_2 (sum_{tau<=t-b} S_d -
    sum_{tau<t} S_a)]`` clamped to ``[0, S_a]``, ``S_{d,t} = ceil(mu_3 S_a)``
    and ``S_{r,t} = ceil(mu_4 |SD_{t-1}|)``.  Removal takes the smallest
    decreasing elements, always including those that have been decreasing
    for ``b`` steps (and, for ``early_removal``, enough of each cohort to
    meet the ``tau/b`` quota).
    """
    rng = _rng(rng)
    t = state.t + 1
    b, S_a, ell = p.b, p.S_a, p.ell
    mags_prev = state.magnitudes
    support_prev = state.support
    large_prev = state.large
    sd_prev = state.small_decreasing
    dec_start = state.decrease_start.copy()
    adds_hist = state.adds_history
    decr_hist = state.decr_history

    # ---- counts
    if t <= b:
        S_at, S_dt, S_rt = 0, S_a, 0
    else:
        backlog = sum(decr_hist[1:t - b + 1]) - sum(adds_hist[1:t])
        S_at = min(max(_round_half_up(rng.uniform(0.9, 1.0) * backlog), 0), S_a)
        S_dt = math.ceil(rng.uniform(0.5, 1.0) * S_a)
        S_rt = math.ceil(rng.uniform(0.1, 0.3) * sd_prev.size)
    if S_dt > large_prev.size:
        raise ModelError(f"t={t}: {S_dt} decreasing elements requested but |L_(t-1)| = {large_prev.size}")

    # ---- new sets
    outside = np.setdiff1d(np.arange(p.m), support_prev, assume_unique=True)
    S_at = min(S_at, outside.size)
    added = np.sort(rng.choice(outside, size=S_at, replace=False)) if S_at else _EMPTY
    new_dec = np.sort(rng.choice(large_prev, size=S_dt, replace=False)) if S_dt else _EMPTY

    # Removal priority: elements decreasing for b steps, then (Assumptions 3)
    # cohort quotas, then elements whose next decrement would reach zero,
    # then the smallest.  At most S_a removals per step; a zero-reaching
    # element that does not fit is halved instead and leaves next step.
    dec_step = _mu(rng, 1.0, 1.44, sd_prev.size) * ell / b
    ages = t - dec_start[sd_prev]
    old = sd_prev[ages >= b]
    quota = []
    if p.early_removal:
        for start in np.unique(dec_start[sd_prev]):
            cohort = sd_prev[dec_start[sd_prev] == start]
            age = t - start
            size0 = decr_hist[start]
            need = math.ceil(min(age, b) / b * size0 - 1e-12) - (size0 - cohort.size)
            rest = cohort[~np.isin(cohort, old)]
            need -= cohort.size - rest.size
            if need > 0:
                order = np.lexsort((rest, mags_prev[rest]))
                quota.extend(rest[order[:need]].tolist())
    zero = sd_prev[mags_prev[sd_prev] - dec_step <= 0]
    zero = zero[np.argsort(-(t - dec_start[zero]), kind="stable")]
    order = np.lexsort((sd_prev, mags_prev[sd_prev]))
    smallest = sd_prev[order[:S_rt]]
    removed = []
    for group in (old, quota, zero, smallest):
        for i in group:
            if len(removed) < S_a and i not in removed:
                removed.append(int(i))
    removed = np.sort(np.asarray(removed, dtype=np.int64))

    # ---- magnitudes
    mags = mags_prev.copy()
    rates = dict(state.rates)
    growing = np.concatenate(state.recent_adds) if state.recent_adds else _EMPTY
    if growing.size:
        inc = _mu(rng, 1.0, 1.44, growing.size) * p.r_min
        mags[growing] += inc
        for i, v in zip(growing.tolist(), inc.tolist()):
            rates[(i, t)] = v
    keep_large = np.setdiff1d(large_prev, new_dec, assume_unique=True)
    if keep_large.size:
        excess = mags_prev[keep_large] - ell
        # mu_5 uniform on (-(M - ell), r_min]
        mags[keep_large] += -excess + (1.0 - rng.random(keep_large.size)) * (excess + p.r_min)
    sd_keep = ~np.isin(sd_prev, removed)
    newv = mags_prev[sd_prev] - dec_step
    newv = np.where(newv > 0, newv, 0.5 * mags_prev[sd_prev])
    mags[sd_prev[sd_keep]] = newv[sd_keep]
    if new_dec.size:
        mu8 = _mu(rng, 1.0, 1.44, new_dec.size)
        newv = mags_prev[new_dec] - mu8 * (mags_prev[new_dec] - ell)
        newv = np.minimum(newv, ell * (1 - 1e-12))
        newv = np.where(newv > 0, newv, ell / (2 * b))
        mags[new_dec] = newv
        dec_start[new_dec] = t
    mags[removed] = 0.0
    dec_start[removed] = -1
    a_vals = _mu(rng, 1.0, 1.44, added.size) * p.a_min
    mags[added] = a_vals

    # ---- signs and bookkeeping
    signs = state.signs.copy()
    signs[removed] = 0
    signs[added] = _random_signs(rng, added.size)
    add_time = state.add_time.copy()
    add_time[added] = t
    add_times = dict(state.add_times)
    init = dict(state.initial_magnitudes)
    for i, a in zip(added.tolist(), a_vals.tolist()):
        add_times[i] = add_times.get(i, ()) + (t,)
        init[(i, t)] = a

    recent = state.recent_adds + (added,)
    graduating = _EMPTY
    if len(recent) > p.d_min:
        graduating = recent[0]
        recent = recent[1:]
    large = np.union1d(np.setdiff1d(large_prev, new_dec, assume_unique=True), graduating)
    small_dec = np.union1d(np.setdiff1d(sd_prev, removed, assume_unique=True), new_dec)
    support = np.sort(np.concatenate([np.setdiff1d(support_prev, removed, assume_unique=True), added]))

    return SparseSequenceState(
        t=t, m=p.m, magnitudes=mags, signs=signs, support=support,
        added=added, removed=removed, new_decreasing=new_dec, large=large,
        small_decreasing=small_dec, add_time=add_time, decrease_start=dec_start,
        add_times=add_times, initial_magnitudes=init, rates=rates,
        adds_history=adds_hist + (int(added.size),),
        decr_history=decr_hist + (int(new_dec.size),),
        recent_adds=recent)


def generate_sequence(params, n_frames, seed, model=None):
    """States ``t = 0 .. n_frames-1`` of the model matching `params`."""
    if n_frames < 1:
        raise ValueError("at least one frame required")
    rng = _rng(seed)
    if isinstance(params, Model1Params):
        states = [gen_model1_initial(params, rng)]
        step = step_model1
    else:
        if model == "assumptions3" and not params.early_removal:
            params = replace(params, early_removal=True)
        states = [gen_model2_initial(params, rng)]
        step = step_model2
    for _ in range(n_frames - 1):
        states.append(step(states[-1], params, rng))
    return states


# ----------------------------------------------------------------------------
# statistics / verification
# ----------------------------------------------------------------------------

@dataclass
class ModelReport:
    model: str
    n_frames: int
    m: int
    max_support: int
    max_additions: int
    max_removals: int
    a_range: tuple
    r_range: tuple
    d_range: tuple
    b_observed: int
    clauses: dict
    count_balance: dict
    params: dict

    @property
    def passed(self):
        return all(v for v in self.clauses.values() if v is not None)

    @property
    def S_a_observed(self):
        return max(self.max_additions, self.max_removals)

    def to_dict(self):
        return {
            "model": self.model, "n_frames": self.n_frames, "m": self.m,
            "S": self.max_support, "S_a": self.S_a_observed,
            "max_additions": self.max_additions, "max_removals": self.max_removals,
            "a_range": _json_range(self.a_range), "r_range": _json_range(self.r_range),
            "d_range": _json_range(self.d_range), "b": self.b_observed,
            "clauses": dict(self.clauses), "count_balance": dict(self.count_balance),
            "params": dict(self.params), "passed": self.passed,
        }


def _json_range(r):
    return None if r is None else [r[0], r[1]]


def _as_matrix(sequence):
    if isinstance(sequence, np.ndarray) and sequence.ndim == 2:
        X = sequence.astype(float)
    else:
        seq = list(sequence)
        if not seq:
            raise ValueError("empty sequence")
        seq = [s.x if isinstance(s, SparseSequenceState) else np.asarray(s, dtype=float) for s in seq]
        dims = {v.shape for v in seq}
        if len(dims) != 1:
            raise ValueError(f"vectors have different shapes {dims}")
        X = np.vstack(seq)
    if X.shape[0] == 0:
        raise ValueError("empty sequence")
    return X


def _rng_tuple(vals):
    if not len(vals):
        return None
    return (float(min(vals)), float(max(vals)))


def _growth_stats(X, adds_at):
    """Initial magnitudes, per-step increases and increase durations after additions (t > 0)."""
    mags = np.abs(X)
    a_vals, r_vals, d_vals = [], [], []
    T = X.shape[0]
    for t, added in enumerate(adds_at):
        if t == 0:
            continue
        for j in added:
            a_vals.append(mags[t, j])
            dur = 0
            tau = t + 1
            while tau < T and mags[tau, j] > mags[tau - 1, j]:
                r_vals.append(mags[tau, j] - mags[tau - 1, j])
                dur += 1
                tau += 1
            if tau < T:
                d_vals.append(dur)
    return a_vals, r_vals, d_vals


def _removal_delays(X, supports, ell, d_min):
    """Delay from the start of the final decrease to removal, per removal."""
    mags = np.abs(X)
    T = X.shape[0]
    delays = []
    for t in range(1, T):
        for j in np.setdiff1d(supports[t - 1], supports[t], assume_unique=True):
            s = t - 1
            if ell is None:
                while s >= 1 and mags[s, j] < mags[s - 1, j]:
                    s -= 1
                start = s + 1
            else:
                # start of the run below ell while decreasing
                while s >= 1 and mags[s, j] < ell and mags[s, j] < mags[s - 1, j]:
                    s -= 1
                start = s + 1
            delays.append(max(1, t - start) if start < t else 1)
    return delays


def verify_assumptions(sequence, which="assumptions2", params=None):
    """Support-change statistics and per-clause verdicts for `sequence`.

    `params` (``Model1Params`` / ``Model2Params``) supplies the declared
    bounds; without it they are inferred from the data, so only structural
    clauses can fail.  Clauses that need ``ell`` are reported as ``None``
    when it is unknown.
    """
    if which not in MODEL_IDS:
        raise ValueError(f"unknown model {which!r}; expected one of {MODEL_IDS}")
    X = _as_matrix(sequence)
    T, m = X.shape
    mags = np.abs(X)
    supports = [np.flatnonzero(X[t] != 0) for t in range(T)]
    adds = [_EMPTY] + [np.setdiff1d(supports[t], supports[t - 1], assume_unique=True) for t in range(1, T)]
    rems = [_EMPTY] + [np.setdiff1d(supports[t - 1], supports[t], assume_unique=True) for t in range(1, T)]
    max_support = max(s.size for s in supports)
    max_add = max((a.size for a in adds[1:]), default=0)
    max_rem = max((r.size for r in rems[1:]), default=0)
    a_vals, r_vals, d_vals = _growth_stats(X, adds)

    # signs persist while in the support
    sign_ok = True
    for t in range(1, T):
        stay = np.intersect1d(supports[t], supports[t - 1], assume_unique=True)
        if np.any(np.sign(X[t, stay]) != np.sign(X[t - 1, stay])):
            sign_ok = False
            break

    clauses = {"signs_persist": sign_ok}
    balance = {}
    if which == "assumptions1":
        p = params
        if p is None:
            nz = mags[0][mags[0] > 0]
            r = float(nz.min()) if nz.size else 1.0
            d = max(1, int(round(mags[0].max() / r))) if nz.size else 1
            p_dict = {"S": int(supports[0].size), "S_a": int(adds[1].size) if T > 1 else 0, "r": r, "d": d}
        else:
            p_dict = {"S": p.S, "S_a": p.S_a, "r": p.r, "d": p.d}
        S, S_a, r, d = p_dict["S"], p_dict["S_a"], p_dict["r"], p_dict["d"]
        lv = np.rint(mags / r).astype(np.int64)
        on_grid = bool(np.allclose(mags, lv * r, rtol=0, atol=1e-9 * r)) and bool(lv.max() <= d)
        clauses["on_grid"] = on_grid
        clauses["support_size"] = all(s.size == S for s in supports)
        clauses["initial_ladder"] = (all(np.count_nonzero(lv[0] == j) == 2 * S_a for j in range(1, d))
                                     and np.count_nonzero(lv[0] == d) == S - (2 * d - 2) * S_a)
        ok_add = ok_rem = ok_inc = ok_dec = ok_step = ok_small = True
        for t in range(1, T):
            ok_add &= adds[t].size == S_a and bool(np.all(lv[t, adds[t]] == 1))
            ok_rem &= rems[t].size == S_a and bool(np.all(lv[t - 1, rems[t]] == 1))
            for j in range(2, d + 1):
                ok_inc &= np.count_nonzero((lv[t] == j) & (lv[t - 1] == j - 1)) == S_a
            for j in range(1, d):
                ok_dec &= np.count_nonzero((lv[t] == j) & (lv[t - 1] == j + 1)) == S_a
            stay = np.intersect1d(supports[t], supports[t - 1], assume_unique=True)
            moved = lv[t, stay] - lv[t - 1, stay]
            ok_step &= bool(np.all(np.abs(moved) <= 1))
            # below the top rung every coefficient moves each step
            ok_step &= bool(np.all(moved[lv[t - 1, stay] < d] != 0)) if d > 1 else True
        for t in range(T):
            for j in range(1, d + 1):
                ok_small &= np.count_nonzero((lv[t] > 0) & (lv[t] < j)) == 2 * (j - 1) * S_a
        clauses.update(additions=ok_add, removals=ok_rem, increases=ok_inc, decreases=ok_dec,
                       unit_steps=ok_step, small_sets=ok_small)
        delays = _removal_delays(X, supports, None, None)
    else:
        p = params
        if p is None:
            p_dict = {"S": max_support, "S_a": max(max_add, max_rem), "b": None,
                      "d_min": min(d_vals) if d_vals else None, "ell": None}
        else:
            p_dict = {"S": p.S, "S_a": p.S_a, "b": p.b, "d_min": p.d_min, "ell": p.ell}
        S, S_a, b, d_min, ell = (p_dict[k] for k in ("S", "S_a", "b", "d_min", "ell"))
        clauses["support_size"] = max_support <= S
        clauses["additions"] = max_add <= S_a
        clauses["removals"] = max_rem <= S_a
        if d_min is not None:
            ok = True
            for t in range(1, T):
                for j in adds[t]:
                    for tau in range(t + 1, min(t + d_min, T - 1) + 1):
                        if mags[tau, j] < mags[tau - 1, j] or mags[tau, j] == 0:
                            ok = False
            clauses["growth_after_addition"] = ok
        delays = _removal_delays(X, supports, ell, d_min)
        if ell is not None and d_min is not None:
            larges = []
            for t in range(T):
                recent = adds[max(1, t - d_min + 1):t + 1] if t >= 1 else []
                larges.append(large_set(X[t], ell, recent))
            decr = [_EMPTY] + [np.setdiff1d(larges[t - 1], larges[t], assume_unique=True) for t in range(1, T)]
            sds = [_EMPTY]
            ok_count = ok_exit = True
            for t in range(1, T):
                dec_mask = (mags[t] > 0) & (mags[t] < mags[t - 1])
                dec_mask[larges[t]] = False
                sds.append(np.flatnonzero(dec_mask))
                ok_count &= decr[t].size <= min(S_a, larges[t - 1].size)
                ok_exit &= bool(np.all(np.isin(larges[t - 1], np.union1d(larges[t], sds[t]))))
            clauses["decrease_count"] = ok_count
            clauses["large_set_exit"] = ok_exit
            if which == "assumptions3" and b is not None:
                ok = True
                for t0 in range(1, T):
                    cohort = decr[t0]
                    for tau in range(1, b):
                        if t0 + tau >= T or not cohort.size:
                            break
                        gone = np.count_nonzero((mags[t0 + 1:t0 + tau + 1, cohort] == 0).any(axis=0))
                        if gone < tau / b * cohort.size - 1e-12:
                            ok = False
                clauses["early_removal"] = ok
            # sufficient condition on the counts
            if b is not None:
                Sa_t = [a.size for a in adds]
                Sd_t = [dd.size for dd in decr]
                L0 = larges[0].size
                r1 = all(Sa_t[t] <= S_a and Sd_t[t] <= S_a for t in range(1, T))
                r2 = (d_min + b + 1) * S_a <= L0 <= supports[0].size <= S
                r3 = True
                for t in range(1, T):
                    lhs = sum(Sa_t[1:t + 1])
                    mid = sum(Sd_t[1:max(1, t - b + 1)])
                    rhs = L0 + sum(Sa_t[1:max(1, t - b - d_min)])
                    r3 &= lhs <= mid <= rhs
                balance = {"counts_bounded": r1, "initial_large_set": r2, "cumulative_counts": bool(r3)}
        elif which == "assumptions3":
            clauses["early_removal"] = None
        if b is not None:
            clauses["removal_delay"] = max(delays, default=0) <= b
        else:
            clauses["removal_delay"] = None
    return ModelReport(
        model=which, n_frames=T, m=m, max_support=int(max_support),
        max_additions=int(max_add), max_removals=int(max_rem),
        a_range=_rng_tuple(a_vals), r_range=_rng_tuple(r_vals), d_range=_rng_tuple(d_vals),
        b_observed=int(max(delays, default=0)), clauses=clauses, count_balance=balance,
        params={k: v for k, v in p_dict.items()})
