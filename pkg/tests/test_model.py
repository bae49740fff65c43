import numpy as np
import pytest
from conftest import random_assignment

from chanassign.model import (
    Assignment,
    AvailabilityModel,
    MacTiming,
    ScenarioError,
    SensingModel,
    derive_views,
    table1_assignment,
    validate_scenario,
)


def test_smallest_scenario_is_valid():
    sc = validate_scenario(AvailabilityModel([[0.8]]), Assignment(1, ((0,),), ((),)), MacTiming(), None)
    assert sc.M == 1 and sc.N == 1


def test_probability_out_of_range_names_indices():
    with pytest.raises(ScenarioError, match=r"probability out of range at \(2,1\)"):
        AvailabilityModel([[0.5, 0.5], [1.2, 0.1]])


def test_table1_layout_is_valid():
    validate_scenario(AvailabilityModel(np.full((3, 6), 0.8)), table1_assignment())


@pytest.mark.parametrize(
    "excl, shared, msg",
    [
        (((0,), (0,)), ((), ()), "exclusive-set overlap"),
        (((0,), ()), ((), (0, 1)), "exclusive to user 1"),
        (((0,), ()), ((0, 1), (1,)), "both exclusive and shared"),
        (((), ()), ((1,), ()), "single sharer"),
        (((3,), ()), ((), ()), "outside 1..2"),
    ],
)
def test_assignment_invariants(excl, shared, msg):
    with pytest.raises(ScenarioError, match=msg):
        Assignment(2, excl, shared)


def test_dimension_mismatch():
    with pytest.raises(ScenarioError, match="dimension mismatch"):
        validate_scenario(AvailabilityModel(np.full((2, 3), 0.5)), Assignment.empty(2, 4))
    with pytest.raises(ScenarioError, match="dimension mismatch"):
        validate_scenario(AvailabilityModel(np.full((2, 3), 0.5)), sensing=SensingModel.perfect(3, 3))


def test_timing_invariants():
    with pytest.raises(ScenarioError):
        MacTiming(t_cycle=100.0)
    with pytest.raises(ScenarioError):
        MacTiming(eps_p=0.0)
    with pytest.raises(ScenarioError):
        MacTiming(w_max=1)
    with pytest.raises(ScenarioError):
        MacTiming(slot=-1.0)


def test_table1_views():
    v = derive_views(table1_assignment())
    # 0-based: U_4={1,2}, U_5={2,3}, U_6={1,2,3}
    assert v.sharers[3] == (0, 1) and v.sharers[4] == (1, 2) and v.sharers[5] == (0, 1, 2)
    assert v.groups[2] == (3, 4) and v.groups[3] == (5,)
    assert v.groups[1] == (0, 1, 2)  # exclusive channels are singleton holders
    assert v.totals[1] == (1, 3, 4, 5)


def test_views_all_exclusive_and_single_shared():
    v = derive_views(Assignment.non_overlapping([[0, 1], [2]], 3))
    assert all(k == 1 for k in v.groups)
    v = derive_views(Assignment(1, ((), ()), ((0,), (0,))))
    assert v.sharers[0] == (0, 1) and v.groups == {2: (0,)}


def test_matrix_round_trip_and_group_count():
    rng = np.random.default_rng(0)
    for _ in range(50):
        M, N = rng.integers(1, 5), rng.integers(1, 7)
        a = random_assignment(rng, M, N)
        assert Assignment.from_matrix(a.to_matrix()) == a
        v = derive_views(a)
        assert v == derive_views(a)
        shared = [j for j in range(N) if len(v.sharers[j]) >= 2]
        assert sum(l * len(g) for l, g in v.groups.items() if l >= 2) == sum(len(v.sharers[j]) for j in shared)


def test_sensing_perfect_variant():
    m = AvailabilityModel(np.array([[0.3, 0.8]]))
    s = SensingModel.perfect(1, 2)
    assert s.is_perfect
    np.testing.assert_array_equal(s.p_idle(m), m.p)
