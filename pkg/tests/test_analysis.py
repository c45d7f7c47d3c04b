from itertools import combinations
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recsparse.analysis import (BudgetExceeded, ParameterError, RipAccess, TheoremParams, c1_constant,
                                check_theorem, estimate_zeta, fill_prescribed, k_constants, ls_error_bound,
                                ric_bruteforce, roc_bruteforce, verify_conclusions)
from recsparse.sensing import gen_gaussian_unit_columns
from recsparse.signal_model import Model1Params

from helpers import near_orthonormal, run_small


def _reenumerate(A, S):
    # reversed subset order, SVD of the sub-matrix instead of Gram eigenvalues
    lo, hi = np.inf, 0.0
    for T in reversed(list(combinations(range(A.shape[1]), S))):
        s = np.linalg.svd(A[:, T], compute_uv=False)
        lo, hi = min(lo, s[-1] ** 2), max(hi, s[0] ** 2)
    return max(1 - lo, hi - 1)


def test_c1_examples():
    assert c1_constant(0.207) == pytest.approx(7.4992, abs=1e-4)
    assert c1_constant(0.0) == 4.0
    assert c1_constant(0.4) == pytest.approx(4 * math.sqrt(1.4) / 0.2)
    with pytest.raises(ValueError):
        c1_constant(0.5)


def test_ls_error_bound_examples():
    assert ls_error_bound(0.0, 0.0, 2.0, 3.0) == pytest.approx(5.0)
    assert ls_error_bound(0.5, 0.3, 1.0, 0.0) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        ls_error_bound(1.0, 0.0, 1.0, 1.0)


def test_k_constants():
    assert k_constants(2) == (2, 1, 1.0)
    assert k_constants(1) == (1, 0, 0.0)
    assert k_constants(3) == (4, 3, math.sqrt(1 + 4 + 1))


def test_ric_orthonormal_and_duplicate():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((10, 10)))
    assert ric_bruteforce(Q, 4).delta < 1e-10
    A = gen_gaussian_unit_columns(6, 9, 1)
    A[:, 3] = A[:, 0]
    assert ric_bruteforce(A, 2).delta_left == 1.0


@settings(max_examples=10)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_ric_matches_reenumeration(seed, S):
    A = gen_gaussian_unit_columns(8, 12, seed)
    assert abs(ric_bruteforce(A, S).delta - _reenumerate(A, S)) < 1e-9


def test_roc_coherence_and_orthonormal():
    A = gen_gaussian_unit_columns(6, 10, 2)
    G = np.abs(A.T @ A - np.eye(10))
    assert roc_bruteforce(A, 1, 1).theta == pytest.approx(G.max())
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 8)))
    assert roc_bruteforce(Q, 2, 3).theta < 1e-10


def test_budget_refusal_and_subsampling():
    A = gen_gaussian_unit_columns(8, 14, 3)
    with pytest.raises(BudgetExceeded):
        ric_bruteforce(A, 6, budget=1000)
    with pytest.raises(BudgetExceeded):
        roc_bruteforce(A, 3, 3, budget=1000)
    est = ric_bruteforce(A, 6, subsample=200, seed=1)
    assert not est.exact and est.subsets_examined == 200
    full = ric_bruteforce(A, 6)
    assert full.exact and est.delta <= full.delta + 1e-12


def test_rip_access_provenance():
    rip = RipAccess(None, deltas={9: 0.1})
    assert rip.delta(9) == (0.1, "asserted (unverified)")
    val, prov = rip.delta(5)
    assert val == 0.1 and "delta_9" in prov
    assert rip.delta(12)[0] is None
    assert rip.theta(4, 5)[0] == 0.1                 # theta <= delta_{S1+S2}


def _p(**kw):
    base = dict(S=3, S_a=1, epsilon=0.02)
    base.update(kw)
    return TheoremParams(**base)


def test_general_bound_needs_prescribed_alpha():
    rip = RipAccess(np.eye(16))
    assert check_theorem("3.2", _p(alpha=0.15), rip).status == "PASS"
    rep = check_theorem("3.2", _p(alpha=0.2), rip)
    assert rep.status == "FAIL" and rep.condition("1").verdict == "fail"


def test_ric_failure_reports_both_sides():
    A = gen_gaussian_unit_columns(8, 16, 4)
    rep = check_theorem("3.2", _p(alpha=0.15), RipAccess(A))
    c = rep.condition("2")
    assert c.verdict == "fail" and c.lhs > 0.207 and c.rhs == 0.207 and c.provenance == "brute-force"


def test_zero_sequence_is_vacuous():
    rep = check_theorem("3.2", _p(alpha=0.15), RipAccess(np.eye(16)), trace=np.zeros((5, 16)))
    assert rep.condition("3").lhs == 0 and rep.status == "PASS"


def test_incomplete_without_delta():
    rep = check_theorem("3.2", _p(alpha=0.15), RipAccess(None))
    assert rep.status == "INCOMPLETE"


def test_model1_constants_and_G():
    eps = 0.02
    p = fill_prescribed("4.3", _p(r=1.0, d=2, d0=2), RipAccess(np.eye(16)))
    rep = check_theorem("4.3", p, RipAccess(np.eye(16)))
    assert rep.constants["k1"] == 2 and rep.constants["k2"] == 1 and rep.constants["k3"] == 1.0
    assert rep.constants["G"] == pytest.approx(7.5 * eps)
    assert any("stray" in n for n in rep.notes)
    with pytest.raises(ParameterError):
        check_theorem("4.3", _p(r=1.0, d=2, d0=3, zeta_M=1.0, alpha=0.15), RipAccess(np.eye(16)))


def test_model1_d0_one_means_no_misses():
    p = fill_prescribed("4.3", _p(r=1.0, d=1, d0=1), RipAccess(np.eye(16)))
    rep = check_theorem("4.3", p, RipAccess(np.eye(16)))
    assert rep.conclusions["miss_count"] == 0


def test_model2_ric_index_and_h():
    rip = RipAccess(None, deltas={35: 0.1})
    p = fill_prescribed("5.9", _p(S=20, S_a=1, epsilon=0.0, alpha_add=0.3, b=3, d_min=3, d0=2, a_min=1.0,
                                  r_min=1.0), rip)
    rep = check_theorem("5.9", p, rip)
    assert rep.constants["ric_order"] == 20 + 15
    assert rep.constants["h"] == pytest.approx(2 * 0.3)
    rep = check_theorem("5.5", fill_prescribed("5.5", _p(S=20, S_a=1, epsilon=0.0, b=3, d_min=3, d0=2,
                                                         a_min=0.01, r_min=0.01), rip), rip)
    assert rep.condition("3").verdict == "pass"         # eps = 0: any positive magnitude suffices


def test_report_serializes():
    rep = check_theorem("3.2", _p(alpha=0.15), RipAccess(np.eye(16)))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["status"] == "PASS"
    assert {"id", "lhs", "rhs", "verdict", "provenance"} <= set(d["conditions"][0])


def test_checkers_are_pure():
    rip = RipAccess(near_orthonormal(16, 0))
    p = fill_prescribed("4.3", _p(r=1.0, d=2, d0=2), rip)
    assert check_theorem("4.3", p, rip).to_dict() == check_theorem("4.3", p, rip).to_dict()


def test_zeta_examples():
    z = estimate_zeta([np.array([0.0, 3.0, 0.0])], S_a=4)
    assert z.zeta_M == pytest.approx(2.0)
    z = estimate_zeta([np.ones(9), np.zeros(9)], S_a=4)
    assert z.zeta_M == pytest.approx(math.sqrt(4 / 9)) and z.samples == 1
    assert math.isnan(z.zeta_L)
    with pytest.raises(ValueError):
        estimate_zeta([np.zeros(3)], S_a=1)


def test_add_del_guarantees_hold_on_small_instances():
    A = near_orthonormal(16, 5)
    rip = RipAccess(A)
    c = 0.005
    eps = c * 4
    p = fill_prescribed("3.3", _p(epsilon=eps, alpha_add=7.5 * eps, f=1, initial_exact=True), rip)
    mp = Model1Params(S=3, S_a=1, r=1.0, d=1, m=16)
    for seed in range(20):
        X, outs = run_small(A, mp, 25, seed, c, "addlsdel", alphas=(p.alpha_add, p.alpha_del))
        assert np.array_equal(outs[0].support_estimate, np.flatnonzero(X[0]))
        rep = check_theorem("3.3", p, rip, trace=X)
        assert rep.status == "PASS", rep.to_dict()
        assert not any(verify_conclusions(rep, outs, X, p).values())
        assert all(o.violations == [] for o in outs)
