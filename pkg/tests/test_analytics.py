from math import comb

import numpy as np
import pytest
from conftest import random_assignment
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from chanassign import analytics as an
from chanassign._backend import BACKEND_ENV
from chanassign.model import Assignment, AvailabilityModel, MacTiming, SensingModel, table1_assignment

P08 = AvailabilityModel(np.full((3, 6), 0.8))


# -- non-overlapping throughput and gain -------------------------------------


def test_nonoverlap_throughput_examples():
    m = AvailabilityModel([[0.8, 0.8, 0.8, 0.7]])
    assert an.user_throughput_nonoverlap(m, [], 0) == 0.0
    assert an.user_throughput_nonoverlap(m, [0, 1, 2], 0) == pytest.approx(0.992, abs=1e-12)
    assert an.user_throughput_nonoverlap(m, [3], 0) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(IndexError):
        an.user_throughput_nonoverlap(m, [4], 0)


def test_marginal_gain_examples():
    m = AvailabilityModel([[0.8, 0.7]])
    assert an.marginal_gain_nonoverlap(m, [], 0, 1) == pytest.approx(0.7, abs=1e-15)
    assert an.marginal_gain_nonoverlap(m, [0], 0, 1) == pytest.approx(0.14, abs=1e-12)
    with pytest.raises(ValueError):
        an.marginal_gain_nonoverlap(m, [0], 0, 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.data())
def test_gain_is_throughput_difference(ps, data):
    m = AvailabilityModel([ps])
    k = data.draw(st.integers(0, len(ps) - 1))
    chans = data.draw(st.sets(st.integers(0, len(ps) - 1).filter(lambda c: c != k)))
    diff = an.user_throughput_nonoverlap(m, list(chans) + [k], 0) - an.user_throughput_nonoverlap(m, chans, 0)
    assert abs(an.marginal_gain_nonoverlap(m, chans, 0, k) - diff) <= 1e-12


# -- overlap gain estimate ---------------------------------------------------


def test_estimate_worked_example():
    m = AvailabilityModel(np.full((2, 2), 0.8))
    a = Assignment.non_overlapping([[0], [1]], 2)
    assert an.estimate_overlap_gain(m, a, 0, 1, delta=0.1) == pytest.approx(0.09216, abs=1e-12)


def test_estimate_single_sharer_collapse():
    rng = np.random.default_rng(3)
    m = AvailabilityModel(rng.uniform(0.5, 0.95, (2, 4)))
    a = Assignment.non_overlapping([[0, 1], [2, 3]], 4)
    p, q = m.p, m.q
    expected = 0.9 * p[0, 2] * q[0, 0] * q[0, 1] * p[1, 2] * (1 - q[1, 2] * q[1, 3])
    assert an.estimate_overlap_gain(m, a, 0, 2, delta=0.1) == pytest.approx(expected, abs=1e-14)


def test_estimate_zero_at_full_overhead_and_errors():
    a = table1_assignment()
    assert an.estimate_overlap_gain(P08, a, 0, 4, delta=1.0) == 0.0
    with pytest.raises(ValueError):
        an.estimate_overlap_gain(P08, a, 0, 3)


# -- contention --------------------------------------------------------------


def test_contend_probability_examples():
    m = AvailabilityModel(np.full((1, 2), 0.8))
    assert an.contend_probability(m, Assignment.non_overlapping([[0]], 2), 0) == 0.0
    two = AvailabilityModel(np.full((2, 2), 0.8))
    assert an.contend_probability(two, Assignment(2, ((), ()), ((0,), (0,))), 0) == pytest.approx(0.8)
    a = Assignment(2, ((0,), ()), ((1,), (1,)))
    assert an.contend_probability(two, a, 0) == pytest.approx(0.16, abs=1e-12)


def test_contenders_distribution_examples():
    m = AvailabilityModel(np.full((2, 2), 0.8))
    d = an.contenders_distribution(m, Assignment.non_overlapping([[0], [1]], 2))
    np.testing.assert_allclose(d, [1, 0, 0], atol=0)
    # three users with P_con = 0.16 each: exclusive {j} plus one common channel
    m3 = AvailabilityModel(np.full((3, 4), 0.8))
    a3 = Assignment(4, ((0,), (1,), (2,)), ((3,), (3,), (3,)))
    d3 = an.contenders_distribution(m3, a3)
    assert d3[2] == pytest.approx(3 * 0.16**2 * 0.84, abs=1e-12)
    assert d3[2] == pytest.approx(0.064512, abs=1e-9)


def test_contenders_distribution_two_users_closed_form():
    m = AvailabilityModel([[0.3, 0.6], [0.9, 0.4]])
    a = Assignment(2, ((0,), ()), ((1,), (1,)))
    pa, pb = an.contend_probability(m, a, 0), an.contend_probability(m, a, 1)
    d = an.contenders_distribution(m, a)
    np.testing.assert_allclose(d, [(1 - pa) * (1 - pb), pa * (1 - pb) + pb * (1 - pa), pa * pb], atol=1e-15)


def test_contenders_distribution_matches_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(20):
        M, N = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        m = AvailabilityModel(rng.uniform(0, 1, (M, N)))
        a = random_assignment(rng, M, N)
        pc = [an.contend_probability(m, a, i) for i in range(M)]
        d = an.contenders_distribution(m, a)
        assert abs(d.sum() - 1) <= 1e-9
        np.testing.assert_allclose(d, oracles.contenders_pmf(pc), atol=1e-15)


# -- collision probability and window ----------------------------------------


def test_collision_formula_examples():
    assert an.collision_prob_given_m(2, 2) == pytest.approx(0.25, abs=1e-15)
    assert an.collision_prob_given_m(16, 2) == pytest.approx(15 / 256, abs=1e-15)
    assert an.collision_prob_given_m(16, 1) == 0.0
    for W in (2, 3, 7, 40, 1024):
        assert an.collision_prob_given_m(W, 2) == pytest.approx((W - 1) / W**2, rel=1e-12)
    with pytest.raises(ValueError):
        an.collision_prob_given_m(1, 2)


def test_collision_formula_general_m_by_hand():
    W, m = 5, 3
    hand = sum(comb(m, j) * (1 / W) ** j * ((W - i - 1) / W) ** (m - j) for j in range(2, m + 1) for i in range(W - 1))
    assert an.collision_prob_given_m(W, m) == pytest.approx(hand, abs=1e-15)


@pytest.mark.parametrize("W,m", [(2, 2), (3, 2), (4, 3), (5, 4), (6, 3)])
def test_exact_collision_matches_enumeration(W, m):
    assert an.collision_prob_exact(W, m) == pytest.approx(oracles.backoff_first_collision(W, m), abs=1e-12)
    assert an.collision_prob_enumerated(W, m) == pytest.approx(oracles.backoff_first_collision(W, m), abs=1e-15)
    # the truncated formula misses exactly the event that everyone draws W - 1
    assert an.collision_prob_exact(W, m) - an.collision_prob_given_m(W, m) == pytest.approx((1 / W) ** m, abs=1e-12)


def test_exact_vs_formula_at_two():
    assert an.collision_prob_exact(2, 2) == pytest.approx(0.5)
    assert an.collision_prob_given_m(2, 2) == pytest.approx(0.25)


def _always_two():
    return AvailabilityModel(np.ones((2, 1))), Assignment(1, ((), ()), ((0,), (0,)))


def test_first_collision_examples():
    m = AvailabilityModel(np.full((2, 2), 0.8))
    assert an.first_collision_prob(m, Assignment.non_overlapping([[0], [1]], 2), 16) == 0.0
    m2, a2 = _always_two()
    assert an.first_collision_prob(m2, a2, 16) == pytest.approx(15 / 256, abs=1e-15)


def test_first_collision_non_increasing():
    rng = np.random.default_rng(5)
    for _ in range(5):
        M, N = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        m = AvailabilityModel(rng.uniform(0.3, 1, (M, N)))
        a = random_assignment(rng, M, N, 0.7)
        dist = an.contenders_distribution(m, a)
        table = an.collision_table(M, 1024)
        curve = table[2:, :] @ dist
        assert np.all(np.diff(curve) <= 1e-15)


def test_select_window_examples():
    m = AvailabilityModel(np.full((2, 2), 0.8))
    assert an.select_window(m, Assignment.non_overlapping([[0], [1]], 2), MacTiming()) == 2
    m2, a2 = _always_two()
    assert an.select_window(m2, a2, MacTiming(eps_p=0.06)) == 16
    assert an.collision_prob_given_m(15, 2) > 0.06
    with pytest.raises(an.WindowCapExceeded, match="window cap exceeded"):
        an.select_window(m2, a2, MacTiming(eps_p=1e-12))


def test_select_window_exact_model():
    m2, a2 = _always_two()
    # 1/W <= 0.06 first holds at W = 17
    assert an.select_window(m2, a2, MacTiming(eps_p=0.06, collision_model="exact")) == 17


def test_mac_overhead_examples():
    t = MacTiming.paper()
    assert an.mac_overhead(t, 16) == pytest.approx((150 + 48 + 40 + 84) / 3000, abs=1e-15)
    assert an.mac_overhead(MacTiming(t_rts=0, t_cts=0, t_sifs=0), 1) == 0.0
    for W in (2, 10, 100):
        assert an.mac_overhead(t, W + 1) - an.mac_overhead(t, W) == pytest.approx(t.slot / (2 * t.t_cycle), abs=1e-15)
    with pytest.raises(Exception, match="cycle too short"):
        an.mac_overhead(t, 1000)


# -- exact throughput --------------------------------------------------------


def test_perfect_without_shared_channels():
    a = table1_assignment().with_sets(shared=((), (), ()))
    assert an.user_throughput_perfect(P08, a, 0, 0.1) == pytest.approx(0.8, abs=1e-15)


def test_full_overhead_leaves_case1_only():
    a = table1_assignment()
    for i in range(3):
        assert an.user_throughput_perfect(P08, a, i, 1.0) == pytest.approx(0.8, abs=1e-15)


def test_table1_matches_enumeration_oracle():
    a = table1_assignment()
    expected = oracles.perfect_throughput(P08.p, a, 0.1)
    for i in range(3):
        assert an.user_throughput_perfect(P08, a, i, 0.1) == pytest.approx(expected[i], abs=1e-9)
    np.testing.assert_allclose(an.per_user_throughput(P08, a, 0.1), expected, atol=1e-9, rtol=0)
    # frozen after cross-checking with the oracle
    np.testing.assert_allclose(expected, [0.96312172544, 0.96731500544, 0.96312172544], atol=1e-11)


def test_literal_and_kernel_routes_agree():
    rng = np.random.default_rng(21)
    for _ in range(30):
        M, N = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        m = AvailabilityModel(rng.uniform(0, 1, (M, N)))
        a = random_assignment(rng, M, N)
        d = float(rng.uniform(0, 0.5))
        lit = [an.user_throughput_perfect(m, a, i, d) for i in range(M)]
        np.testing.assert_allclose(an.per_user_throughput(m, a, d), lit, atol=1e-12, rtol=0)
        s = SensingModel(rng.uniform(0.5, 1, (M, N)), rng.uniform(0, 0.5, (M, N)))
        lit = [an.user_throughput_imperfect(m, a, s, i, d) for i in range(M)]
        np.testing.assert_allclose(an.per_user_throughput(m, a, d, s), lit, atol=1e-12, rtol=0)


def test_numpy_backend_matches_numba(monkeypatch):
    rng = np.random.default_rng(8)
    cases = []
    for _ in range(10):
        M, N = int(rng.integers(1, 6)), int(rng.integers(1, 9))
        cases.append((AvailabilityModel(rng.uniform(0, 1, (M, N))), random_assignment(rng, M, N)))
    fast = [an.per_user_throughput(m, a, 0.07) for m, a in cases]
    monkeypatch.setenv(BACKEND_ENV, "numpy")
    slow = [an.per_user_throughput(m, a, 0.07) for m, a in cases]
    for x, y in zip(fast, slow):
        np.testing.assert_allclose(x, y, atol=1e-13, rtol=0)


def test_network_throughput_examples(paper_timing):
    m = AvailabilityModel([[0.8]])
    rep = an.network_throughput(m, Assignment(1, ((0,),), ((),)), paper_timing)
    assert rep.total == pytest.approx(0.8) and rep.window == 2 and rep.error_bound == 0.0
    a = table1_assignment()
    rep = an.network_throughput(P08, a, paper_timing)
    assert rep.delta == an.mac_overhead(paper_timing, rep.window)
    assert rep.total == pytest.approx(sum(oracles.perfect_throughput(P08.p, a, rep.delta)), abs=1e-9)
    row = an.report_csv([rep], 6, ids=["t1"]).splitlines()
    assert row[0].startswith("scenario,M,N,W,delta,T_1,T_2,T_3,total,E_t,mode")
    assert row[1].startswith("t1,3,6,")


def test_nonoverlap_three_channels_each(paper_timing):
    rng = np.random.default_rng(2)
    m = AvailabilityModel(rng.uniform(0.8, 1.0, (3, 10)))
    a = Assignment.non_overlapping([[0, 1, 2], [3, 4, 5], [6, 7, 8, 9]], 10)
    assert np.all(an.network_throughput(m, a, paper_timing).per_user >= 0.992)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0, 0.9))
def test_throughput_bounds(M, N, seed, delta):
    rng = np.random.default_rng(seed)
    m = AvailabilityModel(rng.uniform(0, 1, (M, N)))
    a = random_assignment(rng, M, N)
    T = an.per_user_throughput(m, a, delta)
    for i in range(M):
        case1 = an.user_throughput_nonoverlap(m, a.exclusive[i], i)
        assert -1e-12 <= T[i] <= 1 + 1e-12
        assert T[i] >= case1 - 1e-12
        assert T[i] <= case1 + (1 - delta) * an.contend_probability(m, a, i) + 1e-12


# -- error bound and sensing -------------------------------------------------


def test_error_bound_examples():
    m = AvailabilityModel(np.full((2, 2), 0.8))
    assert an.analysis_error_bound(m, Assignment.non_overlapping([[0], [1]], 2), 0.03) == 0.0
    rng = np.random.default_rng(4)
    for _ in range(20):
        M, N = 4, 8
        m = AvailabilityModel(rng.uniform(0.8, 1.0, (M, N)))
        a = Assignment((N), tuple((i,) for i in range(M)), tuple((4, 5, 6, 7) for _ in range(M)))
        et = an.analysis_error_bound(m, a, 0.03)
        assert et <= 0.006 * M + 1e-15
        lower = sum(an.user_throughput_nonoverlap(m, a.exclusive[i], i) for i in range(M))
        assert et / lower <= 0.0075 + 1e-15


def test_sensing_access_probs():
    m = AvailabilityModel([[0.8]])
    assert an.sensing_access_probs(m, SensingModel.perfect(1, 1), 0, 0)[0] == pytest.approx(0.8)
    assert an.sensing_access_probs(m, SensingModel.uniform(1, 1, 1.0, 1.0), 0, 0)[0] == 0.0
    idle, busy = an.sensing_access_probs(m, SensingModel.uniform(1, 1, 0.9, 0.1), 0, 0)
    assert idle == pytest.approx(0.74, abs=1e-15) and busy == pytest.approx(0.26, abs=1e-15)


def test_imperfect_reduces_to_perfect():
    rng = np.random.default_rng(9)
    for _ in range(20):
        M, N = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        m = AvailabilityModel(rng.uniform(0, 1, (M, N)))
        a = random_assignment(rng, M, N)
        s = SensingModel.perfect(M, N)
        for i in range(M):
            assert an.user_throughput_imperfect(m, a, s, i, 0.1) == pytest.approx(
                an.user_throughput_perfect(m, a, i, 0.1), abs=1e-12
            )


def test_all_false_alarms_give_zero():
    a = table1_assignment()
    s = SensingModel.uniform(3, 6, 0.9, 1.0)
    assert all(an.user_throughput_imperfect(P08, a, s, i, 0.1) == 0.0 for i in range(3))


def test_imperfect_matches_enumeration_oracle():
    m = AvailabilityModel(np.full((2, 3), 0.8))
    a = Assignment(3, ((0,), (1,)), ((2,), (2,)))
    pd, pf = np.full((2, 3), 0.9), np.full((2, 3), 0.1)
    s = SensingModel(pd, pf)
    expected = oracles.imperfect_throughput(m.p, pd, pf, a, 0.1)
    for i in range(2):
        assert an.user_throughput_imperfect(m, a, s, i, 0.1) == pytest.approx(expected[i], abs=1e-9)
