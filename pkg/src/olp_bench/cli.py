"""``olp-bench`` command line: run experiments, print schedules, list presets."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, InputError
from .lp_core import Instance
from .policies import SCHEDULED, PolicySpec
from .presets import EXPERIMENT_PRESETS, INSTANCE_PRESETS, instance_from_name
from .schedules import build_schedule
from .simulation import compare_policies

log = logging.getLogger("olp_bench")

CSV_COLUMNS = [
    "policy", "T", "sweep_param", "sweep_value", "mean_regret", "std_error", "mean_revenue",
    "mean_hindsight", "mean_lp_solves", "n_sims", "wall_time_s", "schedule",
    # provenance, so every row can be rerun from the file alone
    "base_seed", "instance", "params",
]
SWEEP_PARAMS = ("rho", "alpha", "beta", "epsilon", "M", "omega")


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


@dataclass
class ExperimentConfig:
    instance: str | dict
    policies: list[PolicySpec]
    horizons: list[int]
    n_sims: int = 200
    base_seed: int = 0
    sweep: dict | None = None
    output_path: str = "results.csv"
    threads: int = 1
    name: str = "custom"

    def __post_init__(self):
        if not self.policies:
            raise ConfigError("policy list is empty")
        if not self.horizons:
            raise ConfigError("horizon list is empty")
        if any(int(T) != T or T < 1 for T in self.horizons):
            raise ConfigError(f"horizons must be positive integers, got {self.horizons}")
        if self.n_sims < 0:
            raise ConfigError(f"n_sims must be >= 0, got {self.n_sims}")
        if self.sweep is not None:
            param = self.sweep.get("param")
            if param not in SWEEP_PARAMS:
                raise ConfigError(f"unknown sweep parameter {param!r}; known: {', '.join(SWEEP_PARAMS)}")
            if not self.sweep.get("values"):
                raise ConfigError("sweep needs a non-empty 'values' list")
        # fail early on unknown presets and bad schedule parameters
        self.instance_for(self.horizons[0])
        for T in self.horizons:
            for value in self.sweep_values():
                for spec in self.policies_for(value):
                    if spec.name in SCHEDULED:
                        try:
                            spec.build_schedule(T)
                        except InputError as exc:
                            raise ConfigError(f"policy {spec.display_name} at T={T}: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            merged = preset_config(preset, full=data.pop("full", False))
            merged.update(data)
            data = merged
        data.pop("full", None)
        data.pop("description", None)
        missing = {"instance", "policies", "horizons"} - set(data)
        if missing:
            raise ConfigError(f"config is missing {sorted(missing)}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        data["policies"] = [PolicySpec.from_dict(p) for p in data["policies"]]
        data["horizons"] = [int(T) for T in data["horizons"]]
        return cls(**data)

    def sweep_values(self) -> list:
        return list(self.sweep["values"]) if self.sweep else [None]

    def instance_for(self, T: int, sweep_value=None) -> Instance:
        if isinstance(self.instance, str):
            inst = instance_from_name(self.instance, T)
        else:
            try:
                inst = Instance.from_dict({**self.instance, "horizon": T})
            except (KeyError, InputError) as exc:
                raise ConfigError(f"bad inline instance: {exc}") from None
        if self.sweep and self.sweep["param"] == "rho" and sweep_value is not None:
            inst = inst.with_budget_rate([float(sweep_value)] * inst.m)
        return inst

    def policies_for(self, sweep_value=None) -> list[PolicySpec]:
        if not self.sweep or self.sweep["param"] == "rho" or sweep_value is None:
            return list(self.policies)
        return [p.with_params(**{self.sweep["param"]: sweep_value}) for p in self.policies]


def preset_config(name: str, full: bool = False) -> dict:
    if name not in EXPERIMENT_PRESETS:
        raise ConfigError(f"unknown experiment preset {name!r}")
    cfg = copy.deepcopy(EXPERIMENT_PRESETS[name])
    overrides = cfg.pop("full", {})
    cfg.pop("description", None)
    if full:
        cfg.update(overrides)
    cfg["name"] = name
    cfg["output_path"] = f"{name}.csv"
    return cfg


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Run every (horizon, sweep point) of ``config`` and write the CSV."""
    rows = []
    sweep_param = config.sweep["param"] if config.sweep else ""
    for T in config.horizons:
        for value in config.sweep_values():
            instance = config.instance_for(T, value)
            policies = config.policies_for(value)
            schedules = [p.build_schedule(T) for p in policies]
            if config.n_sims == 0:
                estimates = [None] * len(policies)
            else:
                estimates = compare_policies(policies, instance, config.n_sims, config.base_seed,
                                             schedules=schedules, workers=config.threads)
            for spec, sched, est in zip(policies, schedules, estimates):
                row = {
                    "policy": spec.display_name,
                    "T": T,
                    "sweep_param": sweep_param,
                    "sweep_value": "" if value is None else fmt(float(value)),
                    "schedule": "" if sched is None else sched.to_csv(),
                    "n_sims": config.n_sims,
                    "base_seed": config.base_seed,
                    "instance": config.instance if isinstance(config.instance, str) else instance.name,
                    "params": json.dumps(spec.params(), sort_keys=True),
                }
                if est is not None:
                    row.update(
                        mean_regret=fmt(est.mean_regret),
                        std_error=fmt(est.std_error),
                        mean_revenue=fmt(est.mean_revenue),
                        mean_hindsight=fmt(est.mean_hindsight),
                        mean_lp_solves=fmt(est.mean_lp_solves),
                        wall_time_s=fmt(est.total_wall_time),
                    )
                    if est.bound_violations:
                        raise RuntimeError(f"{spec.display_name}: revenue exceeded the hindsight bound "
                                           f"on {est.bound_violations} paths")
                rows.append(row)
    write_csv(rows, config.output_path)
    return rows


def write_csv(rows: list[dict], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)


def list_presets() -> str:
    lines = ["instance presets:"]
    lines += [f"  {name:<18} {desc}" for name, desc in INSTANCE_PRESETS.items()]
    lines.append("experiment presets:")
    lines += [f"  {name:<18} {cfg['description']}" for name, cfg in EXPERIMENT_PRESETS.items()]
    return "\n".join(lines)


def emit_schedule(kind: str, T: int, **params) -> str:
    return build_schedule(kind, T, **params).to_csv()


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="olp-bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV")
    run.add_argument("--config", help="JSON experiment config")
    run.add_argument("--preset", help="experiment preset name (see `olp-bench presets`)")
    run.add_argument("--horizons", type=_int_list)
    run.add_argument("--sims", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--threads", type=int, default=int(os.environ.get("OLP_BENCH_THREADS", "1")))
    run.add_argument("--full", action="store_true", help="use the original experiment scale")

    sched = sub.add_parser("schedule", help="print a resolving schedule")
    sched.add_argument("--kind", required=True)
    sched.add_argument("--T", type=int, required=True)
    sched.add_argument("--alpha", type=float, default=0.7)
    sched.add_argument("--beta", type=float, default=0.7)
    sched.add_argument("--epsilon", type=float, default=0.01)
    sched.add_argument("--M", type=int)
    sched.add_argument("--omega", type=int)

    sub.add_parser("presets", help="list presets")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if args.preset:
        data["preset"] = args.preset
    if args.full:
        data["full"] = True
    if not data:
        raise ConfigError("need --config or --preset")
    if args.horizons:
        data["horizons"] = args.horizons
    if args.sims is not None:
        data["n_sims"] = args.sims
    if args.seed is not None:
        data["base_seed"] = args.seed
    if args.out:
        data["output_path"] = args.out
    data["threads"] = max(1, args.threads)
    return ExperimentConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "presets":
            print(list_presets())
        elif args.command == "schedule":
            print(emit_schedule(args.kind, args.T, alpha=args.alpha, beta=args.beta,
                                epsilon=args.epsilon, M=args.M, omega=args.omega))
        else:
            config = _config_from_args(args)
            rows = run_experiment(config)
            print(f"wrote {len(rows)} rows to {config.output_path}")
    except (ConfigError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
