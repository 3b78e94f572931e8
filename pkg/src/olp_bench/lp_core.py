"""Fluid LP for online linear programming.

Solves

    phi(b, d) = max r'y  s.t.  A y <= b,  0 <= y <= d

with a dense bounded-variable primal simplex (Bland's rule). Problems here
are tiny (a handful of resource rows, tens of customer types), so the whole
tableau is kept in memory and the pivoting loop is compiled with numba.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import InputError

FEAS_TOL = 1e-9
OBJ_RTOL = 1e-7
_PIV_TOL = 1e-11
_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class Instance:
    """Problem data for an OLP / network revenue management instance.

    ``consumption`` is m x n; column j is the resource use of a type-j
    request. ``budget_rate`` is the per-period inventory, so the initial
    inventory is ``horizon * budget_rate``.
    """

    rewards: np.ndarray
    consumption: np.ndarray
    budget_rate: np.ndarray
    horizon: int
    probabilities: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        r = np.array(self.rewards, dtype=float).reshape(-1)
        A = np.atleast_2d(np.array(self.consumption, dtype=float))
        rho = np.array(self.budget_rate, dtype=float).reshape(-1)
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        n = r.shape[0]
        if A.shape != (rho.shape[0], n) or p.shape[0] != n:
            raise InputError(
                f"inconsistent dimensions: rewards {r.shape}, consumption {A.shape}, "
                f"budget_rate {rho.shape}, probabilities {p.shape}"
            )
        if n == 0 or rho.shape[0] == 0:
            raise InputError("need at least one resource and one customer type")
        for label, arr in (("rewards", r), ("consumption", A), ("budget_rate", rho), ("probabilities", p)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{label} contains non-finite entries")
            if np.any(arr < 0):
                raise InputError(f"{label} contains negative entries")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InputError(f"probabilities sum to {p.sum()!r}, expected 1")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise InputError(f"horizon must be a positive integer, got {self.horizon!r}")
        for arr in (r, A, rho, p):
            arr.setflags(write=False)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "consumption", A)
        object.__setattr__(self, "budget_rate", rho)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "horizon", int(self.horizon))

    def _key(self):
        return (self.horizon, self.consumption.shape,
                *(a.tobytes() for a in (self.rewards, self.consumption, self.budget_rate, self.probabilities)))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def m(self) -> int:
        return self.consumption.shape[0]

    @property
    def n(self) -> int:
        return self.consumption.shape[1]

    @property
    def initial_inventory(self) -> np.ndarray:
        return self.horizon * self.budget_rate

    def with_horizon(self, horizon: int) -> "Instance":
        return Instance(self.rewards, self.consumption, self.budget_rate, horizon,
                        self.probabilities, name=self.name)

    def with_budget_rate(self, budget_rate) -> "Instance":
        return Instance(self.rewards, self.consumption, budget_rate, self.horizon,
                        self.probabilities, name=self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rewards": self.rewards.tolist(),
            "consumption": self.consumption.tolist(),
            "budget_rate": self.budget_rate.tolist(),
            "horizon": self.horizon,
            "probabilities": self.probabilities.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(
            rewards=data["rewards"],
            consumption=data["consumption"],
            budget_rate=data["budget_rate"],
            horizon=data.get("horizon", 1),
            probabilities=data["probabilities"],
            name=data.get("name", "custom"),
        )


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE_INPUT = "Infeasible-input"


@dataclass(frozen=True)
class LpSolution:
    primal: np.ndarray
    objective: float
    duals: np.ndarray  # m resource multipliers followed by n demand multipliers
    status: LpStatus = LpStatus.OPTIMAL


# ---------------------------------------------------------------------------
# simplex kernel
# ---------------------------------------------------------------------------

@nb.njit(cache=True)
def _simplex(tab, xb, basis, at_upper, ub, cost):
    """Run bounded-variable primal simplex from a primal feasible basis.

    ``tab`` holds B^-1 [A I] for the current basis, ``xb`` the values of
    the basic variables. Nonbasic variables sit at 0 or at ``ub`` according
    to ``at_upper``. Everything is updated in place. Returns the number of
    iterations, or -1 on iteration overflow.
    """
    nrow, ncol = tab.shape
    is_basic = np.zeros(ncol, dtype=np.bool_)
    for i in range(nrow):
        is_basic[basis[i]] = True
    cbar = np.empty(ncol)
    for it in range(_MAX_ITER):
        for k in range(ncol):
            s = cost[k]
            for i in range(nrow):
                s -= cost[basis[i]] * tab[i, k]
            cbar[k] = s
        # Bland: lowest-index improving variable
        enter = -1
        direction = 0.0
        for k in range(ncol):
            if is_basic[k] or ub[k] <= FEAS_TOL:
                continue
            if not at_upper[k] and cbar[k] > FEAS_TOL:
                enter, direction = k, 1.0
                break
            if at_upper[k] and cbar[k] < -FEAS_TOL:
                enter, direction = k, -1.0
                break
        if enter < 0:
            return it

        theta = ub[enter]
        leave_row = -1
        leave_to_upper = False
        for i in range(nrow):
            a = direction * tab[i, enter]
            if a > _PIV_TOL:
                lim = xb[i] / a
                to_upper = False
            elif a < -_PIV_TOL and ub[basis[i]] < np.inf:
                lim = (ub[basis[i]] - xb[i]) / (-a)
                to_upper = True
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            # ties with a bound flip keep the flip; ties between rows go to
            # the lowest basic index
            if lim < theta or (lim == theta and leave_row >= 0 and basis[i] < basis[leave_row]):
                theta = lim
                leave_row = i
                leave_to_upper = to_upper
        if theta == np.inf:
            return -1  # unbounded; cannot happen for bounded fluid LPs

        for i in range(nrow):
            xb[i] -= direction * theta * tab[i, enter]
        if leave_row < 0:
            at_upper[enter] = not at_upper[enter]
            continue

        enter_value = (ub[enter] if at_upper[enter] else 0.0) + direction * theta
        leaving = basis[leave_row]
        piv = tab[leave_row, enter]
        for k in range(ncol):
            tab[leave_row, k] /= piv
        for i in range(nrow):
            if i != leave_row:
                f = tab[i, enter]
                if f != 0.0:
                    for k in range(ncol):
                        tab[i, k] -= f * tab[leave_row, k]
        basis[leave_row] = enter
        xb[leave_row] = enter_value
        is_basic[enter] = True
        is_basic[leaving] = False
        at_upper[enter] = False
        at_upper[leaving] = leave_to_upper
    return -1


@nb.njit(cache=True)
def _primal_values(nvar, xb, basis, at_upper, ub):
    x = np.zeros(nvar)
    for k in range(nvar):
        if at_upper[k]:
            x[k] = ub[k]
    for i in range(basis.shape[0]):
        if basis[i] < nvar:
            x[basis[i]] = xb[i] if xb[i] > 0.0 else 0.0
    for k in range(nvar):
        if x[k] > ub[k]:
            x[k] = ub[k]
    return x


@nb.njit(cache=True)
def _fluid_kernel(r, A, b, d):
    m, n = A.shape
    ncol = n + m
    tab = np.zeros((m, ncol))
    tab[:, :n] = A
    for i in range(m):
        tab[i, n + i] = 1.0
    xb = b.copy()
    basis = np.arange(n, ncol)
    at_upper = np.zeros(ncol, dtype=np.bool_)
    ub = np.empty(ncol)
    ub[:n] = d
    ub[n:] = np.inf
    cost = np.zeros(ncol)
    cost[:n] = r
    status = _simplex(tab, xb, basis, at_upper, ub, cost)
    return tab, xb, basis, at_upper, ub, cost, status


@nb.njit(cache=True)
def _reduced_costs(tab, basis, cost):
    nrow, ncol = tab.shape
    cbar = cost.copy()
    for k in range(ncol):
        for i in range(nrow):
            cbar[k] -= cost[basis[i]] * tab[i, k]
    return cbar


@nb.njit(cache=True)
def fluid_primal(r, A, b, d):
    """Optimal y and objective of phi(b, d); no validation, d must be >= 0."""
    n = A.shape[1]
    tab, xb, basis, at_upper, ub, cost, status = _fluid_kernel(r, A, b, d)
    if status < 0:
        raise RuntimeError("simplex iteration limit reached")
    y = _primal_values(n, xb, basis, at_upper, ub)
    obj = 0.0
    for j in range(n):
        obj += r[j] * y[j]
    return y, obj


@nb.njit(cache=True)
def _max_coord_kernel(r, A, b, d, j):
    m, n = A.shape
    tab, xb, basis, at_upper, ub, cost, status = _fluid_kernel(r, A, b, d)
    if status < 0:
        raise RuntimeError("simplex iteration limit reached")
    y = _primal_values(n, xb, basis, at_upper, ub)
    phi = 0.0
    for k in range(n):
        phi += r[k] * y[k]
    # append r'y - s = phi - tol as a new row with s basic; the row of the
    # tableau for s in terms of the nonbasic variables is -cbar
    cbar = _reduced_costs(tab, basis, cost)
    ncol = n + m
    tab2 = np.zeros((m + 1, ncol + 1))
    tab2[:m, :ncol] = tab
    for k in range(ncol):
        tab2[m, k] = -cbar[k]
    tab2[m, ncol] = 1.0
    xb2 = np.empty(m + 1)
    xb2[:m] = xb
    xb2[m] = FEAS_TOL * (1.0 + abs(phi))
    basis2 = np.empty(m + 1, dtype=basis.dtype)
    basis2[:m] = basis
    basis2[m] = ncol
    at_upper2 = np.zeros(ncol + 1, dtype=np.bool_)
    at_upper2[:ncol] = at_upper
    ub2 = np.empty(ncol + 1)
    ub2[:ncol] = ub
    ub2[ncol] = np.inf
    cost2 = np.zeros(ncol + 1)
    cost2[j] = 1.0
    status = _simplex(tab2, xb2, basis2, at_upper2, ub2, cost2)
    if status < 0:
        raise RuntimeError("simplex iteration limit reached")
    y2 = _primal_values(n, xb2, basis2, at_upper2, ub2)
    return y2[j], y2


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _checked_inputs(instance: Instance, b, d):
    b = np.asarray(b, dtype=float).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    if b.shape[0] != instance.m:
        raise InputError(f"inventory has length {b.shape[0]}, expected {instance.m}")
    if d.shape[0] != instance.n:
        raise InputError(f"demand has length {d.shape[0]}, expected {instance.n}")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
        raise InputError("inventory and demand must be finite")
    if np.any(b < 0):
        raise InputError("inventory must be nonnegative")
    return b, np.maximum(d, 0.0)


def solve_fluid(instance: Instance, b, d) -> LpSolution:
    """Solve phi(b, d) for ``instance``.

    Negative demand components are clamped to zero. The returned duals are
    the multipliers of ``A y <= b`` (first m entries) and ``y <= d`` (last n).
    """
    b, d = _checked_inputs(instance, b, d)
    r, A = instance.rewards, instance.consumption
    tab, xb, basis, at_upper, ub, cost, status = _fluid_kernel(r, A, b, d)
    if status < 0:
        raise RuntimeError("simplex iteration limit reached")
    n = instance.n
    y = _primal_values(n, xb, basis, at_upper, ub)
    cbar = _reduced_costs(tab, basis, cost)
    resource_duals = np.maximum(-cbar[n:], 0.0)
    demand_duals = np.maximum(cbar[:n], 0.0)
    return LpSolution(
        primal=y,
        objective=float(r @ y),
        duals=np.concatenate([resource_duals, demand_duals]),
    )


def max_coord_over_optima(instance: Instance, b, d, j: int) -> float:
    """Largest value of y_j over the optimal face of phi(b, d).

    ``j`` is a zero-based type index. The face is relaxed by
    ``1e-9 * (1 + |phi|)`` in objective value.
    """
    b, d = _checked_inputs(instance, b, d)
    if not 0 <= j < instance.n:
        raise InputError(f"type index {j} out of range for n={instance.n}")
    value, _ = _max_coord_kernel(instance.rewards, instance.consumption, b, d, j)
    return float(value)


def max_coord_point(instance: Instance, b, d, j: int) -> np.ndarray:
    """The maximizer behind :func:`max_coord_over_optima`."""
    b, d = _checked_inputs(instance, b, d)
    if not 0 <= j < instance.n:
        raise InputError(f"type index {j} out of range for n={instance.n}")
    _, y = _max_coord_kernel(instance.rewards, instance.consumption, b, d, j)
    return y


def check_certificate(instance: Instance, b, d, sol: LpSolution, tol: float = 1e-7) -> list[str]:
    """Return a list of violated optimality conditions (empty when optimal)."""
    b, d = _checked_inputs(instance, b, d)
    r, A = instance.rewards, instance.consumption
    m = instance.m
    y = sol.primal
    pi, mu = sol.duals[:m], sol.duals[m:]
    scale = 1.0 + max(np.abs(b).max(initial=0.0), np.abs(d).max(initial=0.0))
    problems = []
    if np.any(y < -tol) or np.any(y > d + tol * scale):
        problems.append("primal bounds")
    slack = b - A @ y
    if np.any(slack < -tol * scale):
        problems.append("resource constraints")
    if np.any(pi < -tol) or np.any(mu < -tol):
        problems.append("dual sign")
    if np.any(r - A.T @ pi - mu > tol):
        problems.append("dual feasibility")
    if np.any(np.abs(pi * slack) > tol * scale) or np.any(np.abs(mu * (d - y)) > tol * scale):
        problems.append("complementary slackness")
    reduced = r - A.T @ pi - mu
    if np.any(np.abs(reduced * y) > tol * scale):
        problems.append("complementary slackness (reduced costs)")
    if abs(sol.objective - r @ y) > 1e-9 * (1 + abs(sol.objective)):
        problems.append("objective mismatch")
    return problems
