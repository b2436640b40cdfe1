"""Command-line interface: resolve a configuration, run, and write CSVs.

Three subcommands cover the workflows:

* ``simulate`` -- one strategy, one budget; per-period ``trace.csv``.
* ``compare``  -- strategies x budgets (optionally x units x gamma), paired
  against the random baseline; ``summary.csv``.
* ``estimate`` -- one strategy across budgets; ``estimation.csv`` of true vs
  estimated prevalence.

Configuration is a flat ``key = value`` text file plus repeatable
``--set KEY=VALUE`` overrides; every run writes a ``manifest.json`` capturing
the fully resolved configuration, and passing that manifest back via
``--config`` replays the run bit-identically.  A master seed is required (via
the ``seed`` key or ``--seed``); there is no wall-clock default.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .engine import (
    STRATEGY_NAMES,
    ConfigError,
    EngineInvariantError,
    SimConfig,
    SimTrace,
    run_estimation,
    run_experiment,
    run_replication,
)
from .estimation import EstimatorInvalidError

__all__ = ["UsageError", "cmd_compare", "cmd_estimate", "cmd_simulate", "main"]

_COMMANDS = ("simulate", "compare", "estimate")
_ALL_COMMANDS = frozenset(_COMMANDS)
_DEFAULT_BUDGET_SWEEP = (25, 50, 100, 200, 300, 400, 500)

TRACE_COLUMNS = (
    "replication",
    "t",
    "strategy",
    "budget",
    "unit",
    "tests",
    "positives",
    "cases",
    "pi",
    "mu_true",
    "mu_hat",
    "mu_hat_clipped",
)
SUMMARY_COLUMNS = (
    "strategy",
    "budget",
    "K",
    "gamma",
    "mean_diff_vs_random",
    "ci68_low",
    "ci68_high",
    "replications",
)
ESTIMATION_COLUMNS = ("replication", "t", "budget", "mu_true", "mu_hat")


class UsageError(ValueError):
    """Bad command line, unreadable config, or malformed value (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(message)


@dataclass(frozen=True)
class _KeySpec:
    kind: str  # int | float | str | int_list | float_list | str_list | int_or_list
    default: object
    commands: frozenset


# The documented configuration schema.  ``None`` defaults are materialized in
# _resolve (replications is per-command, gammas/units_list fall back to the
# scalar keys, seed has no default at all).
_SCHEMA: dict[str, _KeySpec] = {
    "seed": _KeySpec("int", None, _ALL_COMMANDS),
    "units": _KeySpec("int", 100, _ALL_COMMANDS),
    "population": _KeySpec("int_or_list", 1000, _ALL_COMMANDS),
    "init_cases_min": _KeySpec("int", 1, _ALL_COMMANDS),
    "init_cases_max": _KeySpec("int", 20, _ALL_COMMANDS),
    "growth_rate_min": _KeySpec("float", 0.0, _ALL_COMMANDS),
    "growth_rate_max": _KeySpec("float", 1.0, _ALL_COMMANDS),
    "test_effect": _KeySpec("float", 0.001, _ALL_COMMANDS),
    "horizon": _KeySpec("int", 30, _ALL_COMMANDS),
    "replications": _KeySpec("int", None, _ALL_COMMANDS),
    "gamma": _KeySpec("float", 0.5, _ALL_COMMANDS),
    "epsilon": _KeySpec("float", 0.1, _ALL_COMMANDS),
    "confidence_alpha": _KeySpec("float", 0.05, _ALL_COMMANDS),
    "exp3_epsilon": _KeySpec("float", 0.1, _ALL_COMMANDS),
    "reward_mode": _KeySpec("str", "batch_fraction", _ALL_COMMANDS),
    "thompson_mc_draws": _KeySpec("int", 100_000, _ALL_COMMANDS),
    "strategy": _KeySpec("str", "random", frozenset({"simulate", "estimate"})),
    "budget": _KeySpec("int_or_list", 100, frozenset({"simulate"})),
    "strategies": _KeySpec(
        "str_list", ("greedy", "thompson", "ucb", "exp3"), frozenset({"compare"})
    ),
    "budgets": _KeySpec("int_list", _DEFAULT_BUDGET_SWEEP, frozenset({"compare", "estimate"})),
    "gammas": _KeySpec("float_list", None, frozenset({"compare"})),
    "units_list": _KeySpec("int_list", None, frozenset({"compare"})),
}


def _check_key(key: str, command: str) -> _KeySpec:
    spec = _SCHEMA.get(key)
    if spec is None:
        raise UsageError(f"unknown config key: {key}")
    if command not in spec.commands:
        raise UsageError(f"config key {key!r} does not apply to the {command} command")
    return spec


def _split_list(text: str) -> list[str]:
    parts = [part.strip() for part in text.split(",")]
    if any(not part for part in parts):
        raise ValueError("empty list entry")
    return parts


def _parse_text(key: str, text: str, command: str) -> object:
    kind = _check_key(key, command).kind
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "str":
            return text
        if kind == "int_or_list":
            return tuple(int(p) for p in _split_list(text)) if "," in text else int(text)
        if kind == "int_list":
            return tuple(int(p) for p in _split_list(text))
        if kind == "float_list":
            return tuple(float(p) for p in _split_list(text))
        return tuple(_split_list(text))  # str_list
    except ValueError:
        raise UsageError(f"invalid value for config key {key}: {text!r}") from None


def _coerce_json(key: str, value: object, command: str) -> object:
    """Accept a manifest's already-typed JSON value for a schema key."""
    kind = _check_key(key, command).kind
    if isinstance(value, str):
        return _parse_text(key, value, command)
    ok = False
    if kind == "int" or (kind == "int_or_list" and isinstance(value, int)):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == "float":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind in ("int_list", "float_list", "str_list", "int_or_list"):
        if isinstance(value, list):
            caster = {"int_list": int, "float_list": float, "str_list": str, "int_or_list": int}[
                kind
            ]
            try:
                value = tuple(
                    caster(v) if not isinstance(v, bool) else _bad(v) for v in value
                )
                ok = True
            except (TypeError, ValueError):
                ok = False
    if not ok:
        raise UsageError(f"invalid manifest value for config key {key}: {value!r}")
    return value


def _bad(value: object) -> object:
    raise ValueError(f"bad value {value!r}")


def _load_config_file(path: Path, command: str) -> dict[str, object]:
    """Read a key=value config file, or the config block of a manifest."""
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed manifest {path}: {exc}") from None
        recorded = manifest.get("command") if isinstance(manifest, dict) else None
        config = manifest.get("config") if isinstance(manifest, dict) else None
        if recorded != command:
            raise UsageError(f"manifest {path} records a {recorded!r} run, not {command!r}")
        if not isinstance(config, dict):
            raise UsageError(f"manifest {path} has no config block")
        return {key: _coerce_json(key, value, command) for key, value in config.items()}
    pairs: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = _parse_text(key.strip(), value.strip(), command)
    return pairs


def _resolve(
    command: str,
    file_pairs: Mapping[str, object],
    overrides: Sequence[str],
    seed_flag: int | None,
) -> dict[str, object]:
    """Materialize the full configuration for one command."""
    resolved = {
        key: spec.default for key, spec in _SCHEMA.items() if command in spec.commands
    }
    resolved.update(file_pairs)
    for assignment in overrides:
        if "=" not in assignment:
            raise UsageError(f"--set expects KEY=VALUE, got {assignment!r}")
        key, _, value = assignment.partition("=")
        resolved[key.strip()] = _parse_text(key.strip(), value.strip(), command)
    if seed_flag is not None:
        resolved["seed"] = int(seed_flag)
    if resolved["seed"] is None:
        raise UsageError("a master seed is required: set the seed key or pass --seed")
    if resolved["replications"] is None:
        resolved["replications"] = 50 if command == "estimate" else 30
    if command == "compare":
        if resolved["gammas"] is None:
            resolved["gammas"] = (resolved["gamma"],)
        if resolved["units_list"] is None:
            resolved["units_list"] = (resolved["units"],)
    return resolved


def _sim_config(resolved: Mapping[str, object], command: str) -> SimConfig:
    return SimConfig(
        units=resolved["units"],
        seed=resolved["seed"],
        population=resolved["population"],
        init_cases_min=resolved["init_cases_min"],
        init_cases_max=resolved["init_cases_max"],
        growth_rate_min=resolved["growth_rate_min"],
        growth_rate_max=resolved["growth_rate_max"],
        test_effect=resolved["test_effect"],
        horizon=resolved["horizon"],
        budget=resolved["budget"] if command == "simulate" else 100,
        strategy=resolved.get("strategy", "random"),
        replications=resolved["replications"],
        gamma=resolved["gamma"],
        epsilon=resolved["epsilon"],
        confidence_alpha=resolved["confidence_alpha"],
        exp3_epsilon=resolved["exp3_epsilon"],
        reward_mode=resolved["reward_mode"],
        thompson_mc_draws=resolved["thompson_mc_draws"],
    )


def _check_budget_grid(budgets: Sequence[int]) -> None:
    if not budgets:
        raise ConfigError("budgets must contain at least one entry")
    if any(b < 1 for b in budgets):
        raise ConfigError("budget must be at least 1 in every period")


def _format_value(value: object) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_value(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _progress_map(base_map: Callable, label: Callable[[object], str]) -> Callable:
    """Wrap a map so each completed task prints one stderr line."""

    def wrapped(fn: Callable, tasks: Iterable) -> Iterable:
        items = list(tasks)

        def results() -> Iterable:
            for task, result in zip(items, base_map(fn, items)):
                print(f"[testalloc] {label(task)}", file=sys.stderr)
                yield result

        return results()

    return wrapped


def _with_map_fn(jobs: int, run: Callable[[Callable], object]) -> object:
    if jobs <= 1:
        return run(map)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return run(pool.map)


def _replication_task(args: tuple[SimConfig, int]) -> SimTrace:
    config, rep = args
    return run_replication(config, rep)


def cmd_simulate(resolved: Mapping[str, object], out_dir: Path, jobs: int) -> list[str]:
    """Run one strategy at one budget and write ``trace.csv``."""
    config = _sim_config(resolved, "simulate")
    config.validate()
    tasks = [(config, rep) for rep in range(config.replications)]
    traces = _with_map_fn(
        jobs,
        lambda map_fn: list(
            _progress_map(map_fn, lambda task: f"replication {task[1]}: done")(
                _replication_task, tasks
            )
        ),
    )
    budgets = config.budgets()
    rows = []
    for rep, trace in enumerate(traces):
        clipped = np.clip(trace.mu_hat, 0.0, 1.0)
        for t in range(trace.horizon):
            for unit in range(trace.num_units):
                rows.append(
                    (
                        rep,
                        t,
                        config.strategy,
                        int(budgets[t]),
                        unit,
                        int(trace.tests[t, unit]),
                        int(trace.positives[t, unit]),
                        float(trace.cases[t, unit]),
                        float(trace.selection_probs[t, unit]),
                        float(trace.mu_true[t]),
                        float(trace.mu_hat[t]),
                        float(clipped[t]),
                    )
                )
    rows.sort(key=lambda r: (r[2], r[3], r[0], r[1], r[4]))
    _write_csv(out_dir / "trace.csv", TRACE_COLUMNS, rows)
    return ["trace.csv"]


def cmd_compare(resolved: Mapping[str, object], out_dir: Path, jobs: int) -> list[str]:
    """Sweep strategies x budgets (x units x gamma) and write ``summary.csv``."""
    base = _sim_config(resolved, "compare")
    budgets = resolved["budgets"]
    names = list(resolved["strategies"])
    _check_budget_grid(budgets)
    if not names:
        raise ConfigError("at least one strategy is required")
    for name in names:
        if name not in STRATEGY_NAMES:
            raise ConfigError(f"strategy must be one of {STRATEGY_NAMES}")
    cells = [(u, g) for u in resolved["units_list"] for g in resolved["gammas"]]
    configs = [replace(base, units=units, gamma=gamma) for units, gamma in cells]
    for config in configs:
        config.validate()

    def label(task: tuple) -> str:
        config, name, budget = task
        return (
            f"compare units={config.units} gamma={config.gamma:g} "
            f"strategy={name} budget={budget}: done"
        )

    def run(map_fn: Callable) -> list:
        rows = []
        for config in configs:
            rows.extend(
                run_experiment(config, names, budgets, map_fn=_progress_map(map_fn, label))
            )
        return rows

    comparison = _with_map_fn(jobs, run)
    records = [
        (
            row.strategy,
            row.budget,
            row.units,
            float(row.gamma),
            float(row.mean_diff_vs_random),
            float(row.ci68_low),
            float(row.ci68_high),
            row.replications,
        )
        for row in comparison
    ]
    records.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    _write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, records)
    return ["summary.csv"]


def cmd_estimate(resolved: Mapping[str, object], out_dir: Path, jobs: int) -> list[str]:
    """Sweep budgets for one strategy and write ``estimation.csv``."""
    config = _sim_config(resolved, "estimate")
    config.validate()
    budgets = resolved["budgets"]
    _check_budget_grid(budgets)
    traces_by_budget = _with_map_fn(
        jobs,
        lambda map_fn: run_estimation(
            config,
            budgets,
            map_fn=_progress_map(map_fn, lambda task: f"estimate budget={task[1]}: done"),
        ),
    )
    rows = []
    for budget in budgets:
        for rep, trace in enumerate(traces_by_budget[int(budget)]):
            for t in range(trace.horizon):
                rows.append(
                    (rep, t, int(budget), float(trace.mu_true[t]), float(trace.mu_hat[t]))
                )
    rows.sort(key=lambda r: (r[2], r[0], r[1]))
    _write_csv(out_dir / "estimation.csv", ESTIMATION_COLUMNS, rows)
    return ["estimation.csv"]


def _write_manifest(
    out_dir: Path, command: str, resolved: Mapping[str, object], outputs: Sequence[str]
) -> None:
    config = {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in sorted(resolved.items())
    }
    payload = {
        "command": command,
        "tool": "testalloc",
        "version": __version__,
        "seed": resolved["seed"],
        "config": config,
        "outputs": list(outputs),
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="testalloc",
        description=(
            "Simulate budgeted test allocation across population units "
            "and export CSV results."
        ),
    )
    parser.add_argument("--version", action="version", version=f"testalloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in (
        ("simulate", "run one strategy at one budget; writes trace.csv"),
        ("compare", "paired strategy-vs-random sweep; writes summary.csv"),
        ("estimate", "prevalence estimation across budgets; writes estimation.csv"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument(
            "--config",
            metavar="PATH",
            help="key = value config file, or a manifest.json to replay",
        )
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        p.add_argument("--seed", type=int, metavar="U64", help="master seed override")
        p.add_argument("--out", default=".", metavar="DIR", help="output directory")
        p.add_argument(
            "--jobs", type=int, default=1, metavar="N", help="worker processes (default 1)"
        )
    return parser


_HANDLERS = {"simulate": cmd_simulate, "compare": cmd_compare, "estimate": cmd_estimate}


def _run(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    file_pairs = (
        _load_config_file(Path(args.config), args.command) if args.config else {}
    )
    resolved = _resolve(args.command, file_pairs, args.set, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = _HANDLERS[args.command](resolved, out_dir, args.jobs)
    _write_manifest(out_dir, args.command, resolved, outputs)
    print(f"[testalloc] wrote {', '.join(outputs)} and manifest.json in {out_dir}", file=sys.stderr)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    try:
        return _run(_build_parser().parse_args(argv))
    except UsageError as exc:
        print(f"testalloc: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"testalloc: error: {exc}", file=sys.stderr)
        return 1
    except (EngineInvariantError, EstimatorInvalidError) as exc:
        print(f"testalloc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
