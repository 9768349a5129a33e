import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stigmergy import core
from stigmergy.errors import ConfigError, ExhaustionError
from stigmergy.kernel import KernelTable, kernel_eval


def flat_kernel(value, d_th=10.0):
    """Kernel that is ``value`` everywhere inside the support."""
    return KernelTable(np.array([0.0, d_th]), np.array([value, value]), d_th)


# -- selection ---------------------------------------------------------------------

def test_weight_multiplicative_hand_value():
    p = core.SelectionParams(alpha=2, beta=2, n_sel=2)
    assert core.selection_weight(0.5, 0.5, 0.5, p) == pytest.approx(0.5)


def test_weight_additive_hand_value():
    p = core.SelectionParams(alpha=2, beta=2, n_sel=2, mode=core.ADDITIVE)
    assert core.selection_weight(0.5, 0.5, 0.5, p) == pytest.approx(0.2)


def test_weight_zero_emergency():
    p = core.SelectionParams()
    assert core.selection_weight(0.0, 0.7, 0.3, p) == 0.0
    assert core.selection_weight(0.0, 0.0, 0.0, p) == 0.0


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 1))
def test_weight_in_unit_interval(s, theta, phi):
    for mode in (core.ADDITIVE, core.MULTIPLICATIVE):
        w = core.selection_weight(s, theta, phi, core.SelectionParams(mode=mode))
        assert 0.0 <= w <= 1.0


@given(st.floats(0.01, 1), st.floats(0.01, 0.4), st.floats(0.01, 0.4))
def test_multiplicative_exceeds_additive_for_small_factors(s, theta, phi):
    # 2 theta^2 * 2 phi^2 < 2 theta^2 + 2 phi^2 whenever both are below 1/sqrt(2)
    mult = core.selection_weight(s, theta, phi, core.SelectionParams())
    add = core.selection_weight(s, theta, phi, core.SelectionParams(mode=core.ADDITIVE))
    assert mult >= add


def test_selection_params_validated():
    with pytest.raises(ConfigError):
        core.SelectionParams(alpha=0)
    with pytest.raises(ConfigError):
        core.SelectionParams(n_sel=0.5)
    with pytest.raises(ConfigError):
        core.SelectionParams(mode="other")


# -- sampling ----------------------------------------------------------------------

def test_sample_all_when_batch_equals_eligible():
    rng = np.random.default_rng(0)
    eligible = np.array([True, False, True, True])
    batch = core.sample_batch(np.ones(4), 3, eligible, rng)
    assert batch.tolist() == [0, 2, 3]


def test_zero_weight_never_drawn():
    rng = np.random.default_rng(1)
    w = np.array([0.0, 1.0, 2.0, 0.5])
    for _ in range(2000):
        assert 0 not in core.sample_batch(w, 2, np.ones(4, bool), rng)


def test_draw_frequency_proportional():
    rng = np.random.default_rng(2)
    w = np.array([2.0, 1.0, 1.0])
    hits = sum(core.sample_batch(w, 1, np.ones(3, bool), rng)[0] == 0 for _ in range(100_000))
    assert hits / 100_000 == pytest.approx(0.5, abs=0.01)


def test_sampling_reproducible():
    w = np.linspace(0.1, 1, 30)
    a = [core.sample_batch(w, 5, np.ones(30, bool), np.random.default_rng(9)) for _ in range(3)]
    assert all(np.array_equal(a[0], x) for x in a)


def test_sampling_exhaustion():
    with pytest.raises(ExhaustionError):
        core.sample_batch(np.ones(3), 2, np.array([True, False, False]), np.random.default_rng())


# -- task stimulus -------------------------------------------------------------------

def test_emergency_half():
    board = core.TaskBoard(1100)
    core.update_task_stimulus(board, [550])
    assert board.emergency == pytest.approx(0.5)


def test_emergency_empty_batch_keeps_floor():
    board = core.TaskBoard(1100, eps_s=0.01)
    core.update_task_stimulus(board, [])
    assert board.emergency == 0.01
    assert board.accumulated == 0


def test_emergency_reaches_one_at_requirement():
    board = core.TaskBoard(1100)
    for _ in range(22):
        core.update_task_stimulus(board, [10] * 5)
    assert board.emergency == pytest.approx(1.0)
    assert board.done


def test_negative_rewards_rejected():
    with pytest.raises(ConfigError):
        core.update_task_stimulus(core.TaskBoard(10), [-1])


# -- local and propagated updates --------------------------------------------------------

def test_local_delta_hand_value():
    rewards = np.array([1, 10, 4, 7, 8], dtype=float)
    batch = np.arange(5)
    assert core.local_state_delta(1, batch, rewards, 0.001, 0.01) == pytest.approx(-0.004)


def test_local_delta_zero_at_mean_and_singleton():
    rewards = np.array([2.0, 4.0, 6.0, 9.0])
    assert core.local_state_delta(1, [0, 1, 2], rewards, 0.001, 0.01) == 0.0
    assert core.local_state_delta(3, [3], rewards, 0.001, 0.01) == 0.0


def test_local_delta_clamped():
    rewards = np.array([0.0, 1000.0])
    d = core.local_deltas([0, 1], rewards, 1.0, 0.01)
    assert d.tolist() == [0.01, -0.01]


def test_local_deltas_sum_to_zero_when_unclamped():
    rng = np.random.default_rng(4)
    rewards = rng.integers(1, 11, 30).astype(float)
    d = core.local_deltas(rng.choice(30, 5, replace=False), rewards, 0.001, 1.0)
    assert d.sum() == pytest.approx(0.0, abs=1e-15)


def test_propagation_empty_neighbourhood(kernel):
    dm = core.DistanceMatrix.uniform(4, 10.0, 0.5, 10.0, 10.0)
    deltas = np.array([0.003, -0.002, 0.0, 0.001])
    assert not core.propagated_deltas(deltas, dm, kernel, 1.0, 0.01).any()


def test_propagation_one_neighbour():
    dm = core.DistanceMatrix.uniform(2, 3.0, 0.5, 10.0, 10.0)
    deltas = np.array([-0.004, 0.0])
    assert core.propagate_influence(1, deltas, dm, flat_kernel(0.5), 1.0, 0.01) == \
        pytest.approx(-0.002)


def test_propagation_symmetric_cancellation(kernel):
    dm = core.DistanceMatrix.uniform(3, 4.0, 0.5, 10.0, 10.0)
    deltas = np.array([0.003, -0.003, 0.0])
    assert core.propagate_influence(2, deltas, dm, kernel, 1.0, 0.01) == 0.0


def test_propagation_matches_direct_sum(kernel):
    rng = np.random.default_rng(5)
    n = 8
    dm = core.DistanceMatrix(rng.uniform(0.5, 12, (n, n)), 0.5, 12.0, 10.0)
    deltas = rng.normal(0, 0.003, n)
    out = core.propagated_deltas(deltas, dm, kernel, 1.0, 1.0)
    for i in range(n):
        expected = sum(kernel_eval(kernel, dm.d[k, i]) * deltas[k]
                       for k in range(n) if k != i and dm.d[k, i] < dm.d_th)
        assert out[i] == pytest.approx(expected, abs=1e-15)


# -- distance regulation -------------------------------------------------------------------

def _dm(value=5.0, n=3):
    return core.DistanceMatrix.uniform(n, value, 0.5, 10.0, 10.0)


def test_same_sign_shortens():
    dm = core.regulate_distance(0, 1, -0.004, -0.002, _dm(), 0.5)
    assert dm.d[0, 1] == pytest.approx(4.5)
    assert dm.d[1, 0] == 5.0


def test_opposite_sign_lengthens_and_symmetric_flag():
    dm = core.regulate_distance(0, 1, 0.004, -0.002, _dm(), 0.5, symmetric=True)
    assert dm.d[0, 1] == dm.d[1, 0] == pytest.approx(5.5)


def test_zero_correlation_no_change():
    dm = core.regulate_distance(0, 1, 0.0, -0.002, _dm(), 0.5)
    assert dm.d[0, 1] == 5.0


def test_clamped_at_d_min():
    dm = core.regulate_distance(0, 1, 0.01, 0.01, _dm(0.5), 0.5)
    assert dm.d[0, 1] == 0.5


# bounds keep both steps clear of the clamps
@given(st.floats(1.0, 9.5), st.floats(0.01, 0.5))
def test_opposite_steps_are_inverse(d0, factor):
    dm = _dm(d0)
    core.regulate_distance(0, 1, 0.003, 0.002, dm, factor)
    core.regulate_distance(0, 1, -0.003, 0.002, dm, factor)
    assert dm.d[0, 1] == pytest.approx(d0, abs=1e-12)


def test_regulate_turn_votes():
    dm = _dm(5.0, 4)
    batch = np.array([0, 1])
    local = np.array([0.002, 0.001, 0.0, 0.0])
    total = np.array([0.002, 0.001, -0.001, 0.0])
    core.regulate_turn(batch, local, total, dm, 0.5)
    # batch members agree: both directions shorten
    assert dm.d[0, 1] == dm.d[1, 0] == 4.5
    # member vs opposite-moving neighbour: lengthen symmetrically
    assert dm.d[0, 2] == dm.d[2, 0] == 5.5
    # no change for a neighbour with zero change
    assert dm.d[0, 3] == dm.d[3, 0] == 5.0
    # pairs without a batch member are untouched
    assert dm.d[2, 3] == 5.0


# -- state invariants ------------------------------------------------------------------------

def test_pool_heuristic_floor_and_scale():
    pool = core.AgentPool.create([1, 2, 3], [100, 50, 0], eps_phi=0.01)
    assert pool.ability_scale == 100
    np.testing.assert_allclose(pool.heuristic, [0.01, 0.5, 1.0])
    assert pool.eligible.tolist() == [True, True, False]


def test_distance_matrix_clamps_and_diagonal():
    dm = core.DistanceMatrix(np.array([[3.0, 20.0], [-1.0, 3.0]]), 0.5, 10.0, 10.0)
    assert dm.d.tolist() == [[10.0, 10.0], [0.5, 10.0]]
    assert dm.neighbourhood().tolist() == [[False, False], [True, False]]


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_apply_delta_stays_in_range(theta, delta):
    assert 0.0 <= core.apply_delta(np.array([theta]), delta)[0] <= 1.0
