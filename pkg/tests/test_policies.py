import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olp_bench.errors import ConfigError
from olp_bench.lp_core import Instance
from olp_bench.policies import (
    POLICY_NAMES,
    PolicySpec,
    PolicyState,
    ada_kp_step,
    ada_step,
    afr_step,
    air_kp_step,
    air_step,
    buf_step,
    buf_update_periods,
    dld_parameters,
    dld_step,
    run_steps,
    sfa_step,
)
from olp_bench.presets import single_resource
from olp_bench.schedules import make_schedule
from oracles import greedy_single_resource


def two_type(T=100, rho=0.5):
    return single_resource(rho, T)


def mid_state(inst):
    """State at t=50 with b=[30] and 25/24 arrivals of each type seen."""
    state = PolicyState.initial(inst)
    state.t = 50
    state.b[:] = 30.0
    state.N[0] = (25, 24)
    return state


def test_air_accepts_when_plan_dominates():
    inst = two_type()
    state = PolicyState.initial(inst)
    state.t = 5
    state.u[0] = (3.0, 0.0)
    state.d[0] = (5.0, 2.0)
    dec = air_step(inst, make_schedule([1], 100), state, [0])
    assert dec.accept[0] and not dec.resolved_this_period
    assert state.u[0, 0] == 2.0 and state.d[0, 0] == 4.0 and state.b[0, 0] == 49.0


def test_air_rejects_with_empty_plan():
    inst = two_type()
    state = PolicyState.initial(inst)
    state.t = 5
    state.d[0] = (-3.0, 0.0)
    dec = air_step(inst, make_schedule([1], 100), state, [0])
    assert not dec.accept[0]
    assert state.d[0, 0] == -4.0 and state.b[0, 0] == 50.0


def test_air_resolve_matches_greedy_oracle():
    inst = two_type()
    state = mid_state(inst)
    dec = air_step(inst, make_schedule([50], 100), state, [1])
    demand = [51 * 25 / 49, 51 * 24 / 49]
    y_ref, phi_ref = greedy_single_resource([2, 1], [1, 1], 30, demand)
    assert dec.resolved_this_period and state.lp_solves[0] == 1
    np.testing.assert_allclose(state.u[0], y_ref, atol=1e-12)
    assert phi_ref == pytest.approx(56.02, abs=0.01)
    assert y_ref[0] == pytest.approx(26.02, abs=0.01) and y_ref[1] == pytest.approx(3.98, abs=0.01)
    # 3.98 < 24.98 - 3.98, so the type-2 arrival is turned away
    assert not dec.accept[0]
    np.testing.assert_allclose(state.d[0], [demand[0], demand[1] - 1])
    assert state.N[0].tolist() == [25, 25]


def test_air_resolve_at_first_period_uses_zero_estimate():
    inst = two_type()
    state = PolicyState.initial(inst)
    dec = air_step(inst, make_schedule([1], 100), state, [0])
    assert dec.resolved_this_period and not dec.accept[0]
    assert not state.u.any()


def test_air_kp_first_resolve_uses_true_probabilities():
    inst = two_type()
    state = PolicyState.initial(inst)
    dec = air_kp_step(inst, make_schedule([1], 100), state, [1])
    np.testing.assert_allclose(state.u[0], [50.0, 0.0])
    assert not dec.accept[0]
    state.u[0] = (1.0, 1.0)
    state.d[0] = (1.0, 1.0)
    assert not air_kp_step(inst, make_schedule([1], 100), state, [0]).accept[0]


def test_afr_first_period_accepts_anything_feasible():
    inst = two_type()
    state = PolicyState.initial(inst)
    assert afr_step(inst, state, [1]).accept[0]
    state = PolicyState.initial(inst)
    state.b[:] = 0.5
    assert not afr_step(inst, state, [1]).accept[0]


def test_afr_resolves_every_period():
    inst = two_type(T=40)
    rng = np.random.default_rng(0)
    state, _, _ = run_steps(PolicySpec("afr"), inst, rng.integers(0, 2, (3, 40)))
    assert state.lp_solves.tolist() == [40, 40, 40]


def test_ada_probability_ratio():
    inst = two_type()
    state = mid_state(inst)
    dec = ada_step(inst, state, [1], [0.99])
    assert dec.acceptance_probability[0] == pytest.approx(0.1593, abs=1e-4)
    assert not dec.accept[0]
    state = mid_state(inst)
    assert ada_step(inst, state, [1], [0.1]).accept[0]


def test_ada_zero_estimate_gives_zero_probability():
    inst = two_type()
    state = PolicyState.initial(inst)
    state.t = 10
    state.N[0] = (9, 0)
    dec = ada_step(inst, state, [1], [0.0])
    assert dec.acceptance_probability[0] == 0.0 and not dec.accept[0]
    # plenty of inventory: planned allocation equals expected demand
    state = PolicyState.initial(inst)
    state.t = 10
    state.N[0] = (9, 0)
    state.b[:] = 500.0
    dec = ada_step(inst, state, [0], [0.999])
    assert dec.acceptance_probability[0] == 1.0


def test_ada_kp_examples():
    inst = two_type()
    dec = ada_kp_step(inst, PolicyState.initial(inst), [1], [0.0])
    assert dec.acceptance_probability[0] == 0.0
    dec = ada_kp_step(inst, PolicyState.initial(inst), [0], [0.5])
    assert dec.acceptance_probability[0] == 1.0 and dec.accept[0]
    degenerate = Instance([2, 1], [[1, 1]], [0.5], 100, [1.0, 0.0])
    dec = ada_kp_step(degenerate, PolicyState.initial(degenerate), [1], [0.0])
    assert dec.acceptance_probability[0] == 0.0


def test_sfa_one_step():
    inst = two_type()
    state = PolicyState.initial(inst)
    dec = sfa_step(inst, state, [0])
    assert dec.accept[0]
    np.testing.assert_allclose(state.q[0], [0.5])
    # price now 0.5: type 2 with reward 1 still wants in; q moves by (1 - 0.5)/sqrt(2)
    sfa_step(inst, state, [1])
    np.testing.assert_allclose(state.q[0], [0.5 + 0.5 / np.sqrt(2)])


def test_sfa_projection_and_zero_reward():
    inst = Instance([0.0, 1.0], [[1, 1]], [0.5], 100, [0.5, 0.5])
    state = PolicyState.initial(inst)
    dec = sfa_step(inst, state, [0])
    assert not dec.accept[0]
    assert state.q[0, 0] == 0.0


def test_literal_accept_ignores_price():
    inst = Instance([0.0, 0.0], [[1, 1]], [0.5], 50, [0.5, 0.5])
    arrivals = np.zeros((1, 50), dtype=int)
    for name in ("sfa", "dld"):
        _, acc, _ = run_steps(PolicySpec(name), inst, arrivals)
        assert acc.sum() == 0
        _, acc, _ = run_steps(PolicySpec(name, literal_accept=True), inst, arrivals)
        assert acc.sum() == 25  # stops when inventory runs out


def test_dld_first_step():
    inst = two_type()
    state = PolicyState.initial(inst)
    _, step_e, _ = dld_parameters(100)
    dld_step(inst, state, [0])
    np.testing.assert_allclose(state.q_learn[0], [0.5])
    np.testing.assert_allclose(state.q[0], [step_e * 0.5])


def test_dld_switches_to_learning_dual():
    T = 1000
    inst = two_type(T)
    t_e, _, step_p = dld_parameters(T)
    assert t_e == 100
    rng = np.random.default_rng(4)
    arrivals = rng.integers(0, 2, T)
    state = PolicyState.initial(inst)
    for t in range(t_e):
        dld_step(inst, state, [arrivals[t]])
    q_learn = state.q_learn.copy()
    j = arrivals[t_e]
    dld_step(inst, state, [j])
    want = inst.rewards[j] > q_learn[0, 0]
    expected = max(q_learn[0, 0] + step_p * (want - 0.5), 0.0)
    assert state.q[0, 0] == pytest.approx(expected, abs=1e-15)
    # learning dual frozen afterwards
    np.testing.assert_array_equal(state.q_learn, q_learn)


def test_dld_zero_rewards_never_accept():
    inst = Instance([0.0, 0.0], [[1, 1]], [0.5], 200, [0.5, 0.5])
    _, acc, _ = run_steps(PolicySpec("dld"), inst, np.random.default_rng(1).integers(0, 2, (4, 200)))
    assert acc.sum() == 0


def test_buf_update_periods():
    assert buf_update_periods(8) == {4, 6, 7}
    assert 2 not in buf_update_periods(100)


def test_buf_one_step_and_conjunction():
    inst = two_type()
    state = PolicyState.initial(inst)
    dec = buf_step(inst, state, [0])
    assert dec.accept[0]
    np.testing.assert_allclose(state.q[0], [0.25])
    state.q[0] = 5.0
    assert not buf_step(inst, state, [0]).accept[0]


def test_buf_dual_can_go_negative():
    inst = Instance([0.0, 0.0], [[1, 1]], [0.5], 100, [0.5, 0.5])
    state = PolicyState.initial(inst)
    buf_step(inst, state, [0])
    assert state.q[0, 0] < 0


def test_policy_spec_validation():
    with pytest.raises(ConfigError):
        PolicySpec("greedy")
    with pytest.raises(ConfigError):
        PolicySpec.from_dict({"name": "air", "gamma": 1})
    assert PolicySpec("air").schedule_kind() == "learning_approx"
    assert PolicySpec("air-kp").schedule_kind() == "known_prob"
    assert PolicySpec("sfa").build_schedule(100) is None


def _random_instance(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(1, 4))
    floats = lambda k, lo, hi: np.array(draw(st.lists(st.floats(lo, hi), min_size=k, max_size=k)))
    p = floats(n, 0.05, 1.0)
    p /= p.sum()
    p[-1] = 1.0 - p[:-1].sum()
    A = floats(m * n, 0.0, 2.0).reshape(m, n)
    # a few exact zeros exercise free types
    A[A < 0.2] = 0.0
    T = draw(st.integers(9, 120))
    return Instance(floats(n, 0.0, 3.0), A, floats(m, 0.05, 1.0), T, p)


@st.composite
def policy_runs(draw):
    inst = _random_instance(draw)
    name = draw(st.sampled_from(POLICY_NAMES))
    seed = draw(st.integers(0, 2 ** 32))
    return inst, name, seed


@settings(max_examples=150, deadline=None)
@given(policy_runs())
def test_safety_and_conservation(case):
    inst, name, seed = case
    rng = np.random.default_rng(seed)
    arrivals = rng.choice(inst.n, size=(3, inst.horizon), p=inst.probabilities)
    coins = rng.random((3, inst.horizon))
    state, acc, _ = run_steps(PolicySpec(name), inst, arrivals, coins)
    assert np.all(state.b >= 0)
    np.testing.assert_allclose(inst.initial_inventory - state.b, acc @ inst.consumption.T, atol=1e-9)
    assert np.all(acc @ inst.consumption.T <= inst.initial_inventory + 1e-9)
    assert state.N.sum(axis=1).tolist() == [inst.horizon] * 3
    if name in ("air", "air-kp"):
        assert state.lp_solves.tolist() == [len(PolicySpec(name).build_schedule(inst.horizon))] * 3


@settings(max_examples=60, deadline=None)
@given(policy_runs())
def test_air_state_invariants_each_period(case):
    inst, _, seed = case
    rng = np.random.default_rng(seed)
    arrivals = rng.choice(inst.n, size=inst.horizon, p=inst.probabilities)
    schedule = PolicySpec("air").build_schedule(inst.horizon)
    state = PolicyState.initial(inst)
    for t, j in enumerate(arrivals, start=1):
        d_before = state.d.copy()
        dec = air_step(inst, schedule, state, [j])
        assert np.all(state.u >= 0)
        assert np.all(state.b >= 0)
        assert state.N.sum() == t
        if not dec.resolved_this_period:
            change = d_before - state.d
            assert change[0, j] == pytest.approx(1.0, abs=1e-9)
            assert np.count_nonzero(change) == 1


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_batch_rows_match_single_paths(name):
    inst = single_resource(0.4, 300)
    rng = np.random.default_rng(9)
    arrivals = rng.integers(0, 2, (4, 300))
    coins = rng.random((4, 300))
    state, acc, log = run_steps(PolicySpec(name), inst, arrivals, coins, trace=True)
    for i in range(4):
        s1, a1, l1 = run_steps(PolicySpec(name), inst, arrivals[i:i + 1], coins[i:i + 1], trace=True)
        assert np.array_equal(a1[0], acc[i])
        assert np.array_equal(l1[0], log[i])
        assert np.array_equal(s1.b[0], state.b[i])


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_decisions_do_not_look_ahead(name):
    inst = single_resource(0.5, 200)
    rng = np.random.default_rng(5)
    a = rng.integers(0, 2, 200)
    b = a.copy()
    b[120:] = 1 - b[120:]
    coins = rng.random(200)
    _, _, la = run_steps(PolicySpec(name), inst, a[None], coins[None], trace=True)
    _, _, lb = run_steps(PolicySpec(name), inst, b[None], coins[None], trace=True)
    _, _, again = run_steps(PolicySpec(name), inst, a[None], coins[None], trace=True)
    assert np.array_equal(la[0, :120], lb[0, :120])
    assert np.array_equal(la, again)


def test_air_and_air_kp_agree_with_one_type():
    inst = Instance([1.0], [[1.0]], [0.5], 100, [1.0])
    schedule = make_schedule([2, 50, 90], 100)
    arrivals = np.zeros((1, 100), dtype=int)
    _, _, la = run_steps(PolicySpec("air"), inst, arrivals, schedule=schedule, trace=True)
    _, _, lk = run_steps(PolicySpec("air-kp"), inst, arrivals, schedule=schedule, trace=True)
    assert np.array_equal(la[0, 1:], lk[0, 1:])
    assert la[0].sum() > 0
