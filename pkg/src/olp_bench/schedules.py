"""Resolving schedules: the periods at which the fluid LP is re-solved.

All generators return a :class:`Schedule` whose times are sorted, unique and
inside ``[1, T]``. Real powers are evaluated in double precision and then
rounded up; values within 1e-9 of an integer are snapped first so that
representation error never adds a spurious period.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import InputError

_SNAP = 1e-9


class ScheduleKind(enum.Enum):
    LEARNING_APPROX = "learning_approx"
    FINITE_M = "finite"
    KNOWN_PROB = "known_prob"
    KNOWN_PROB_FINITE_M = "kp_finite"
    PERIODIC = "periodic"
    MIDPOINT_KP = "midpoint_kp"
    MIDPOINT_FULL = "midpoint"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Schedule:
    times: tuple[int, ...]
    kind: ScheduleKind = ScheduleKind.CUSTOM

    @cached_property
    def _members(self) -> frozenset[int]:
        return frozenset(self.times)

    def __contains__(self, t: int) -> bool:
        return t in self._members

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def to_csv(self) -> str:
        return ",".join(str(t) for t in self.times)


def ceil_snapped(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SNAP:
        return int(r)
    return math.ceil(x)


def floor_snapped(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SNAP:
        return int(r)
    return math.floor(x)


def make_schedule(times: Iterable[int], T: int, kind: ScheduleKind = ScheduleKind.CUSTOM) -> Schedule:
    """Sort and dedupe ``times``; every entry must lie in ``[1, T]``."""
    ts = sorted({int(t) for t in times})
    if ts and (ts[0] < 1 or ts[-1] > T):
        raise InputError(f"schedule times must lie in [1, {T}], got {ts[0]}..{ts[-1]}")
    return Schedule(tuple(ts), kind)


def _loglog_count(T: int, base: float) -> int:
    # ceil(log_{1/base} log_3 T)
    return ceil_snapped(math.log(math.log(T) / math.log(3)) / math.log(1.0 / base))


def _check_T(T: int, minimum: int = 9):
    if int(T) != T or T < minimum:
        raise InputError(f"horizon must be an integer >= {minimum}, got {T!r}")


def _check_open(name: str, value: float, lo: float, hi: float):
    if not (lo < value < hi):
        raise InputError(f"{name} must lie in ({lo}, {hi}), got {value!r}")


def _approximation_times(T: int, beta: float, count: int) -> list[int]:
    return [ceil_snapped(T - T ** (beta ** k)) for k in range(1, count + 1)]


def learning_approx_schedule(T: int, alpha: float, beta: float) -> Schedule:
    """Learning set near the start plus approximation set near the end."""
    _check_T(T)
    _check_open("alpha", alpha, 0.0, 1.0)
    _check_open("beta", beta, 0.5, 1.0)
    k_learn = _loglog_count(T, alpha)
    k_approx = _loglog_count(T, beta)
    learning = [ceil_snapped(T ** (alpha ** k)) for k in range(1, k_learn + 1)]
    learning.append(ceil_snapped(T / 2))
    return make_schedule(learning + _approximation_times(T, beta, k_approx), T,
                         ScheduleKind.LEARNING_APPROX)


def finite_schedule(T: int, M: int, beta: float, epsilon: float) -> Schedule:
    """At most ``M`` resolves for the unknown-probability case."""
    _check_T(T)
    if int(M) != M or M < 2:
        raise InputError(f"M must be an integer >= 2, got {M!r}")
    _check_open("beta", beta, 0.5, 1.0)
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon!r}")
    first = ceil_snapped(T ** ((0.5 + epsilon) * beta ** (M - 2)))
    times = [first, ceil_snapped(T / 2)] + _approximation_times(T, beta, M - 2)
    return make_schedule(times, T, ScheduleKind.FINITE_M)


def known_prob_schedule(T: int, beta: float) -> Schedule:
    _check_T(T)
    _check_open("beta", beta, 0.5, 1.0)
    times = [1] + _approximation_times(T, beta, _loglog_count(T, beta))
    return make_schedule(times, T, ScheduleKind.KNOWN_PROB)


def known_prob_finite_schedule(T: int, M: int, beta: float) -> Schedule:
    _check_T(T)
    if int(M) != M or M < 1:
        raise InputError(f"M must be an integer >= 1, got {M!r}")
    _check_open("beta", beta, 0.5, 1.0)
    times = [1] + _approximation_times(T, beta, M - 1)
    return make_schedule(times, T, ScheduleKind.KNOWN_PROB_FINITE_M)


def periodic_schedule(T: int, omega: int) -> Schedule:
    _check_T(T, minimum=1)
    if int(omega) != omega or omega < 1:
        raise InputError(f"omega must be an integer >= 1, got {omega!r}")
    return make_schedule(range(1, T + 1, omega), T, ScheduleKind.PERIODIC)


def midpoint_schedule(T: int, with_learning: bool) -> Schedule:
    """Halving schedule towards T; ``with_learning`` adds halving towards 1."""
    _check_T(T, minimum=4)
    k_mid = (T - 1).bit_length()  # ceil(log2 T)
    times = [1] + [ceil_snapped(T - T / 2 ** k) for k in range(1, k_mid + 1)]
    if with_learning:
        times += [ceil_snapped(T / 2 ** k) for k in range(2, k_mid + 1)]
        kind = ScheduleKind.MIDPOINT_FULL
    else:
        kind = ScheduleKind.MIDPOINT_KP
    return make_schedule(times, T, kind)


def build_schedule(kind: str | ScheduleKind, T: int, *, alpha: float = 0.7, beta: float = 0.7,
                   epsilon: float = 0.01, M: int | None = None, omega: int | None = None,
                   times: Iterable[int] | None = None) -> Schedule:
    """Dispatch on a schedule kind name (as used by configs and the CLI)."""
    try:
        kind = ScheduleKind(kind)
    except ValueError:
        raise InputError(f"unknown schedule kind {kind!r}") from None
    if kind is ScheduleKind.LEARNING_APPROX:
        return learning_approx_schedule(T, alpha, beta)
    if kind is ScheduleKind.KNOWN_PROB:
        return known_prob_schedule(T, beta)
    if kind is ScheduleKind.FINITE_M:
        if M is None:
            raise InputError("finite schedule needs M")
        return finite_schedule(T, M, beta, epsilon)
    if kind is ScheduleKind.KNOWN_PROB_FINITE_M:
        if M is None:
            raise InputError("kp_finite schedule needs M")
        return known_prob_finite_schedule(T, M, beta)
    if kind is ScheduleKind.PERIODIC:
        if omega is None:
            raise InputError("periodic schedule needs omega")
        return periodic_schedule(T, omega)
    if kind is ScheduleKind.MIDPOINT_KP:
        return midpoint_schedule(T, with_learning=False)
    if kind is ScheduleKind.MIDPOINT_FULL:
        return midpoint_schedule(T, with_learning=True)
    if times is None:
        raise InputError("custom schedule needs explicit times")
    return make_schedule(times, T)
