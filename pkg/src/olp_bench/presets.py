"""Instance presets and experiment presets."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .lp_core import Instance

MULTI_10X2_CONSUMPTION = [
    [0.226, 0.146],
    [0.957, 0.916],
    [0.005, 0.876],
    [0.457, 0.790],
    [0.285, 0.960],
    [0.572, 0.736],
    [0.701, 0.206],
    [0.093, 0.642],
    [0.903, 0.923],
    [0.743, 0.789],
]
MULTI_10X2_BUDGET = [0.128, 0.805, 0.770, 0.695, 0.844, 0.647, 0.181, 0.564, 0.812, 0.694]
MULTI_10X2_PROBS = [0.121, 0.879]
MULTI_10X2_REWARDS = [0.689, 0.710]


def multi_10x2(T: int = 2500) -> Instance:
    """Degenerate 10-resource, 2-type instance used for the regret table."""
    return Instance(MULTI_10X2_REWARDS, MULTI_10X2_CONSUMPTION, MULTI_10X2_BUDGET, T,
                    MULTI_10X2_PROBS, name="multi_10x2")


def single_resource(rho: float = 0.5, T: int = 10_000) -> Instance:
    """One resource, two equally likely types with rewards 2 and 1.

    The initial fluid LP is degenerate at rho = 0.5.
    """
    return Instance([2.0, 1.0], [[1.0, 1.0]], [rho], T, [0.5, 0.5], name=f"single_resource({rho:g})")


def random_instance(m: int, n: int, seed: int, T: int = 10_000) -> Instance:
    """Seeded random instance with a budget placed near degeneracy.

    Rewards and consumption are uniform on [0, 1], arrival probabilities a
    normalized uniform draw, and the budget rate is A (p * xi) for a uniform
    xi, so the fluid LP at period 1 tends to have several binding rows.
    """
    rng = np.random.default_rng(seed)
    A = rng.random((m, n))
    r = rng.random(n)
    p = rng.random(n)
    p /= p.sum()
    # normalize so the probabilities sum to one to within rounding
    p[-1] = 1.0 - p[:-1].sum()
    xi = rng.random(n)
    rho = A @ (p * xi)
    return Instance(r, A, rho, T, p, name=f"random_{m}x{n}(seed={seed})")


FIG6_SEED = 20240610


def fig6_10x50(T: int = 10_000) -> Instance:
    """Fixed seeded 10 x 50 instance near degeneracy; qualitative use only."""
    inst = random_instance(10, 50, FIG6_SEED, T)
    return Instance(inst.rewards, inst.consumption, inst.budget_rate, T, inst.probabilities,
                    name="fig6_10x50")


INSTANCE_PRESETS = {
    "multi_10x2": "10 resources x 2 types with a degenerate fluid LP",
    "single_resource": "1 resource x 2 types, r=(2,1), p=(.5,.5); write single_resource:RHO (default 0.5)",
    "fig6_10x50": "seeded random 10 x 50 instance near degeneracy (qualitative stand-in)",
}


def instance_from_name(name: str, T: int = 10_000) -> Instance:
    base, _, arg = name.partition(":")
    if base == "multi_10x2" and not arg:
        return multi_10x2(T)
    if base == "single_resource":
        try:
            rho = float(arg) if arg else 0.5
        except ValueError:
            raise ConfigError(f"bad budget rate in preset {name!r}") from None
        return single_resource(rho, T)
    if base == "fig6_10x50" and not arg:
        return fig6_10x50(T)
    raise ConfigError(f"unknown instance preset {name!r}")


_ALL_SIX = [
    {"name": "air", "alpha": 0.7, "beta": 0.7},
    {"name": "afr"},
    {"name": "ada"},
    {"name": "sfa"},
    {"name": "dld"},
    {"name": "buf"},
]
_LP_FREE = [{"name": "sfa"}, {"name": "dld"}, {"name": "buf"}]
_RHO_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]

# Each preset is a partial experiment config; "full" holds the overrides
# applied by --full to restore the original experiment scale.
EXPERIMENT_PRESETS: dict[str, dict] = {
    "table3_desk": {
        "description": "regret table rows T=2500, 5000 (all six policies, 200 sims)",
        "instance": "multi_10x2",
        "policies": _ALL_SIX,
        "horizons": [2500, 5000],
        "n_sims": 200,
        "full": {"horizons": [2500, 5000, 7500, 10000, 12500, 15000, 17500, 20000]},
    },
    "table3_lp_free": {
        "description": "regret table, AIR and LP-free policies over all horizons (200 sims)",
        "instance": "multi_10x2",
        "policies": [_ALL_SIX[0]] + _LP_FREE,
        "horizons": [2500, 5000, 7500, 10000, 12500, 15000, 17500, 20000],
        "n_sims": 200,
        "full": {"horizons": [2500, 5000, 7500, 10000, 12500, 15000, 17500, 20000,
                              100000, 200000, 300000]},
    },
    "table4": {
        "description": "resolving schedules for alpha=beta=0.7 (schedule table; no simulation)",
        "instance": "multi_10x2",
        "policies": [{"name": "air", "alpha": 0.7, "beta": 0.7}],
        "horizons": [2500, 5000, 7500, 10000, 12500, 15000, 17500, 20000, 100000, 200000, 300000],
        "n_sims": 0,
    },
    "table5_alpha": {
        "description": "AIR regret as alpha varies, beta=0.7 (hyper-parameter table, T=30000)",
        "instance": "multi_10x2",
        "policies": [{"name": "air", "beta": 0.7}],
        "horizons": [30000],
        "n_sims": 200,
        "sweep": {"param": "alpha", "values": [0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95]},
    },
    "table5_beta": {
        "description": "AIR regret as beta varies, alpha=0.7 (hyper-parameter table, T=30000)",
        "instance": "multi_10x2",
        "policies": [{"name": "air", "alpha": 0.7}],
        "horizons": [30000],
        "n_sims": 200,
        "sweep": {"param": "beta", "values": [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]},
    },
    "fig5_rho_sweep": {
        "description": "single-resource budget sweep, six policies (desk T=10000, --full T=50000)",
        "instance": "single_resource",
        "policies": _ALL_SIX,
        "horizons": [10000],
        "n_sims": 500,
        "sweep": {"param": "rho", "values": _RHO_GRID},
        "full": {"horizons": [50000], "n_sims": 2000},
    },
    "fig6_10x50": {
        "description": "10 x 50 seeded random instance, AIR(0.9) vs LP-free policies (qualitative only)",
        "instance": "fig6_10x50",
        "policies": [{"name": "air", "alpha": 0.9, "beta": 0.9}] + _LP_FREE,
        "horizons": [1000, 5000, 10000, 20000, 30000],
        "n_sims": 200,
    },
    "fig7_finite": {
        "description": "AIR with three resolves vs LP-free policies over T",
        "instance": "multi_10x2",
        "policies": [{"name": "air", "schedule": "finite", "M": 3, "beta": 0.7, "epsilon": 0.01,
                      "label": "air-3"}] + _LP_FREE,
        "horizons": [2000, 5000, 10000, 20000, 30000],
        "n_sims": 500,
        "full": {"n_sims": 2000},
    },
    "fig8_known_prob": {
        "description": "known probabilities: AIR-KP(beta=5/6) vs ADA-KP budget sweep (desk T=10000, --full T=50000)",
        "instance": "single_resource",
        "policies": [{"name": "air-kp", "beta": 5 / 6}, {"name": "ada-kp"}],
        "horizons": [10000],
        "n_sims": 500,
        "sweep": {"param": "rho", "values": _RHO_GRID},
        "full": {"horizons": [50000], "n_sims": 2000},
    },
}
