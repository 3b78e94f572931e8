"""Online accept/reject policies.

Each policy is a step function ``step(instance, state, arrivals, ...)`` that
advances a :class:`PolicyState` by one period. State arrays carry a leading
axis over independent sample paths that move in lockstep, so one call
advances every path by one period; a single path is simply a batch of one.
Rows never interact, and per-row arithmetic is identical to running the
path on its own.

Type indices are zero-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InputError
from .lp_core import Instance, fluid_primal
from .schedules import Schedule, build_schedule, floor_snapped

POLICY_NAMES = ("air", "air-kp", "afr", "ada", "ada-kp", "sfa", "dld", "buf")
SCHEDULED = ("air", "air-kp")
USES_COINS = ("ada", "ada-kp")


@dataclass
class PolicyState:
    """Mutable per-path state; every array has a leading path axis.

    ``t`` and ``last_budget_update`` are shared by all rows because paths
    advance together and BUF's budget-update periods do not depend on data.
    """

    t: int
    b: np.ndarray
    u: np.ndarray
    d: np.ndarray
    N: np.ndarray
    lp_solves: np.ndarray
    q: np.ndarray
    q_learn: np.ndarray
    d_rate: np.ndarray
    last_budget_update: int = 1

    @classmethod
    def initial(cls, instance: Instance, n_paths: int = 1) -> "PolicyState":
        m, n = instance.m, instance.n
        return cls(
            t=1,
            b=np.tile(instance.initial_inventory, (n_paths, 1)),
            u=np.zeros((n_paths, n)),
            d=np.zeros((n_paths, n)),
            N=np.zeros((n_paths, n), dtype=np.int64),
            lp_solves=np.zeros(n_paths, dtype=np.int64),
            q=np.zeros((n_paths, m)),
            q_learn=np.zeros((n_paths, m)),
            d_rate=np.tile(instance.budget_rate, (n_paths, 1)),
        )

    @property
    def n_paths(self) -> int:
        return self.b.shape[0]


@dataclass
class Decision:
    accept: np.ndarray
    resolved_this_period: bool
    acceptance_probability: np.ndarray


def _arrivals(state: PolicyState, arrivals) -> np.ndarray:
    j = np.asarray(arrivals, dtype=np.int64).reshape(-1)
    if j.shape[0] == 1 and state.n_paths > 1:
        j = np.full(state.n_paths, j[0])
    if j.shape[0] != state.n_paths:
        raise InputError(f"got {j.shape[0]} arrivals for {state.n_paths} paths")
    return j


def _fits(instance: Instance, state: PolicyState, j: np.ndarray) -> np.ndarray:
    # exact comparison keeps b >= 0 exactly after subtraction
    return np.all(instance.consumption.T[j] <= state.b, axis=1)


def _consume(instance: Instance, state: PolicyState, j: np.ndarray, accept: np.ndarray):
    if accept.any():
        state.b[accept] -= instance.consumption.T[j[accept]]


def _check_period(instance: Instance, state: PolicyState):
    if not 1 <= state.t <= instance.horizon:
        raise InputError(f"period {state.t} outside [1, {instance.horizon}]")


def _estimate(instance: Instance, state: PolicyState, known: bool) -> np.ndarray:
    """Per-path probability estimate used in a resolve at period t."""
    if known:
        return np.tile(instance.probabilities, (state.n_paths, 1))
    if state.t == 1:
        return np.zeros(state.N.shape)
    return state.N / (state.t - 1)


def _solve_rows(instance: Instance, b: np.ndarray, demand: np.ndarray, rows=None) -> np.ndarray:
    r, A = instance.rewards, instance.consumption
    y = np.zeros(demand.shape)
    idx = range(b.shape[0]) if rows is None else rows
    for i in idx:
        y[i], _ = fluid_primal(r, A, b[i], np.maximum(demand[i], 0.0))
    return y


def _argmax_step(instance, schedule, state, arrivals, known):
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    rows = np.arange(state.n_paths)
    resolved = state.t in schedule
    if resolved:
        remaining = instance.horizon - state.t + 1
        demand = remaining * _estimate(instance, state, known)
        state.u = _solve_rows(instance, state.b, demand)
        state.d = demand
        state.lp_solves += 1
    state.N[rows, j] += 1
    uj = state.u[rows, j]
    dj = state.d[rows, j]
    accept = _fits(instance, state, j) & (uj > 1) & (uj >= dj - uj)
    _consume(instance, state, j, accept)
    state.u[rows[accept], j[accept]] -= 1
    state.d[rows, j] -= 1
    state.t += 1
    return Decision(accept, resolved, accept.astype(float))


def air_step(instance: Instance, schedule: Schedule, state: PolicyState, arrivals) -> Decision:
    """Argmax with infrequent resolving, learning probabilities on the fly."""
    return _argmax_step(instance, schedule, state, arrivals, known=False)


def air_kp_step(instance: Instance, schedule: Schedule, state: PolicyState, arrivals) -> Decision:
    """Argmax with infrequent resolving using the true arrival probabilities."""
    return _argmax_step(instance, schedule, state, arrivals, known=True)


def _resolve_every_period(instance, state, known):
    remaining = instance.horizon - state.t + 1
    demand = remaining * _estimate(instance, state, known)
    y = _solve_rows(instance, state.b, demand)
    state.lp_solves += 1
    return y, demand


def afr_step(instance: Instance, state: PolicyState, arrivals) -> Decision:
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    rows = np.arange(state.n_paths)
    y, demand = _resolve_every_period(instance, state, known=False)
    state.N[rows, j] += 1
    yj = y[rows, j]
    accept = _fits(instance, state, j) & (yj >= demand[rows, j] - yj)
    _consume(instance, state, j, accept)
    state.t += 1
    return Decision(accept, True, accept.astype(float))


def _ada(instance, state, arrivals, coins, known):
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    coins = np.broadcast_to(np.asarray(coins, dtype=float), j.shape)
    rows = np.arange(state.n_paths)
    y, demand = _resolve_every_period(instance, state, known)
    state.N[rows, j] += 1
    yj, dj = y[rows, j], demand[rows, j]
    prob = np.zeros(j.shape)
    pos = dj > 0
    prob[pos] = np.clip(yj[pos] / dj[pos], 0.0, 1.0)
    accept = _fits(instance, state, j) & (coins < prob)
    _consume(instance, state, j, accept)
    state.t += 1
    return Decision(accept, True, prob)


def ada_step(instance: Instance, state: PolicyState, arrivals, coins) -> Decision:
    """Probabilistic allocation: accept with probability y*_j / expected demand."""
    return _ada(instance, state, arrivals, coins, known=False)


def ada_kp_step(instance: Instance, state: PolicyState, arrivals, coins) -> Decision:
    return _ada(instance, state, arrivals, coins, known=True)


def _price_decision(instance, q, j):
    A_j = instance.consumption.T[j]
    return instance.rewards[j] > np.einsum("ki,ki->k", A_j, q), A_j


def sfa_step(instance: Instance, state: PolicyState, arrivals, literal_accept: bool = False) -> Decision:
    """Dual subgradient bid-price policy with step size 1/sqrt(t)."""
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    want, A_j = _price_decision(instance, state.q, j)
    step = 1.0 / math.sqrt(state.t)
    state.q = np.maximum(state.q + step * (A_j * want[:, None] - instance.budget_rate), 0.0)
    fits = _fits(instance, state, j)
    accept = fits if literal_accept else want & fits
    _consume(instance, state, j, accept)
    state.N[np.arange(state.n_paths), j] += 1
    state.t += 1
    return Decision(accept, False, accept.astype(float))


def dld_parameters(T: int) -> tuple[int, float, float]:
    """Exploration length and the two decision step sizes for DLD."""
    return floor_snapped(T ** (2 / 3)), T ** (-1 / 3), T ** (-2 / 3)


def dld_step(instance: Instance, state: PolicyState, arrivals, literal_accept: bool = False) -> Decision:
    """Decoupled learning (step 1/t) and decision duals."""
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    t = state.t
    t_explore, step_explore, step_exploit = dld_parameters(instance.horizon)
    if t == t_explore + 1:
        state.q = state.q_learn.copy()
    want, A_j = _price_decision(instance, state.q, j)
    step = step_explore if t <= t_explore else step_exploit
    state.q = np.maximum(state.q + step * (A_j * want[:, None] - instance.budget_rate), 0.0)
    fits = _fits(instance, state, j)
    accept = fits if literal_accept else want & fits
    _consume(instance, state, j, accept)
    if t <= t_explore:
        want_learn, _ = _price_decision(instance, state.q_learn, j)
        state.q_learn = np.maximum(
            state.q_learn + (A_j * want_learn[:, None] - instance.budget_rate) / t, 0.0)
    state.N[np.arange(state.n_paths), j] += 1
    state.t += 1
    return Decision(accept, False, accept.astype(float))


def buf_update_periods(T: int) -> frozenset[int]:
    """{T - ceil(T / 2^k) : k = 1..ceil(log2 T)}."""
    return frozenset(T - -(-T // 2 ** k) for k in range(1, (T - 1).bit_length() + 1))


def buf_step(instance: Instance, state: PolicyState, arrivals,
             update_periods: frozenset[int] | None = None) -> Decision:
    """Bid-price policy whose budget target is refreshed on a halving schedule.

    The dual update is not projected onto q >= 0.
    """
    _check_period(instance, state)
    j = _arrivals(state, arrivals)
    t, T = state.t, instance.horizon
    if update_periods is None:
        update_periods = buf_update_periods(T)
    want, A_j = _price_decision(instance, state.q, j)
    accept = want & _fits(instance, state, j)
    _consume(instance, state, j, accept)
    if t + 1 in update_periods:
        state.last_budget_update = t + 1
        state.d_rate = state.b / (T - t)
    step = 1.0 / (t - state.last_budget_update + 2)
    state.q = state.q + step * (A_j * want[:, None] - state.d_rate)
    state.N[np.arange(state.n_paths), j] += 1
    state.t += 1
    return Decision(accept, False, accept.astype(float))


# ---------------------------------------------------------------------------
# policy specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolicySpec:
    """A named policy plus its parameters.

    ``schedule`` names the resolving-schedule kind for ``air``/``air-kp``;
    it defaults to ``learning_approx`` and ``known_prob`` respectively.
    ``literal_accept`` switches SFA/DLD to accepting every feasible request
    regardless of the price test.
    """

    name: str
    schedule: str | None = None
    alpha: float = 0.7
    beta: float = 0.7
    epsilon: float = 0.01
    M: int | None = None
    omega: int | None = None
    literal_accept: bool = False
    label: str | None = None

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.name!r}; known: {', '.join(POLICY_NAMES)}")

    @property
    def display_name(self) -> str:
        return self.label or self.name

    def schedule_kind(self) -> str | None:
        if self.name == "air":
            return self.schedule or "learning_approx"
        if self.name == "air-kp":
            return self.schedule or "known_prob"
        return None

    def build_schedule(self, T: int) -> Schedule | None:
        kind = self.schedule_kind()
        if kind is None:
            return None
        return build_schedule(kind, T, alpha=self.alpha, beta=self.beta,
                              epsilon=self.epsilon, M=self.M, omega=self.omega)

    def params(self) -> dict:
        out = {"name": self.name}
        kind = self.schedule_kind()
        if kind is not None:
            out["schedule"] = kind
            out.update(alpha=self.alpha, beta=self.beta, epsilon=self.epsilon)
            if self.M is not None:
                out["M"] = self.M
            if self.omega is not None:
                out["omega"] = self.omega
        if self.name in ("sfa", "dld") and self.literal_accept:
            out["literal_accept"] = True
        return out

    def with_params(self, **changes) -> "PolicySpec":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict | str) -> "PolicySpec":
        if isinstance(data, str):
            return cls(name=data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown policy parameters {sorted(unknown)}")
        return cls(**data)


def run_steps(spec: PolicySpec, instance: Instance, arrivals: np.ndarray,
              coins: np.ndarray | None = None, schedule: Schedule | None = None,
              trace: bool = False):
    """Run ``spec`` over a (paths x T) arrival matrix.

    Returns the final :class:`PolicyState`, a (paths x n) matrix of accepted
    counts, and the per-period accept matrix when ``trace`` is set.
    """
    arrivals = np.atleast_2d(np.asarray(arrivals, dtype=np.int64))
    k, T = arrivals.shape
    if T != instance.horizon:
        raise InputError(f"arrival paths have length {T}, instance horizon is {instance.horizon}")
    if spec.name in SCHEDULED and schedule is None:
        schedule = spec.build_schedule(T)
    if spec.name in USES_COINS:
        if coins is None:
            raise InputError(f"policy {spec.name!r} needs decision coins")
        coins = np.atleast_2d(np.asarray(coins, dtype=float))
    state = PolicyState.initial(instance, k)
    accepted = np.zeros((k, instance.n), dtype=np.int64)
    rows = np.arange(k)
    log = np.zeros((k, T), dtype=bool) if trace else None
    name = spec.name
    buf_periods = buf_update_periods(T) if name == "buf" else None
    for t in range(T):
        j = arrivals[:, t]
        if name == "air":
            dec = air_step(instance, schedule, state, j)
        elif name == "air-kp":
            dec = air_kp_step(instance, schedule, state, j)
        elif name == "afr":
            dec = afr_step(instance, state, j)
        elif name == "ada":
            dec = ada_step(instance, state, j, coins[:, t])
        elif name == "ada-kp":
            dec = ada_kp_step(instance, state, j, coins[:, t])
        elif name == "sfa":
            dec = sfa_step(instance, state, j, spec.literal_accept)
        elif name == "dld":
            dec = dld_step(instance, state, j, spec.literal_accept)
        else:
            dec = buf_step(instance, state, j, buf_periods)
        np.add.at(accepted, (rows[dec.accept], j[dec.accept]), 1)
        if trace:
            log[:, t] = dec.accept
    return state, accepted, log
