"""Command-line front end.

Three commands:

* ``train <config>`` runs one or more training trials from a config
  file and writes plot-ready CSV artifacts plus a JSON manifest.
* ``hypervolume --front <csv> --ref <v1,v2,...>`` scores a stored front.
* ``front --env dst --width {3|5}`` writes the true Pareto front.

The config format is sectioned ``key = value`` text. ``#`` starts a
comment. The ``[scalarization]`` section may repeat, one per trial —
that is the one thing stock INI parsing would reject, and why this
module parses by hand:

    [env]
    kind = dst            # dst | mountain_car
    width = 3             # treasure grid size (3 or 5)
    encoding = one_hot    # one_hot | vector | image
    max_frames = 100

    [agent]               # any AgentConfig field; defaults follow the env
    gamma = 0.9

    [scalarization]
    kind = linear         # linear | tlo
    weights = 0.01, 0.99

    [scalarization]
    kind = tlo
    thresholds = 13.625   # one per objective except the last
    weights = 0.5, 0.5    # optional; uniform when omitted

    [execution]
    mode = sequential     # single | sequential | parallel
    seed = 0
    eval_period = 1000
    output_dir = runs/demo
    workers = 3           # parallel mode only

    [metrics]
    ref_point = 0, -25
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .agent import AgentConfig, TARGET_MODES
from .envs import EnvSpec, StateEncoding
from .metrics import (
    hv_history,
    hypervolume,
    nondominated_filter,
    read_front_csv,
    write_front_csv,
    write_hypervolume_csv,
)
from .oracle import enumerate_dst_front
from .scalarize import ScalarizationSpec
from .trainer import (
    TrialSpec,
    merge_eval_history,
    run_parallel,
    run_sequential,
    run_trial,
    write_merged_front_csv,
    write_trace_csv,
    write_trainlog_csv,
)


class ConfigError(Exception):
    """Anything wrong with a config file or command arguments."""


# Hyperparameter defaults per environment (width matters for the grid).
_DEFAULTS = {
    ("dst", 3): dict(
        anneal_steps=46_000,
        replay_capacity=50_000,
        warmup_steps=5_000,
        training_steps=50_000,
        action_repeat=1,
    ),
    ("dst", 5): dict(
        anneal_steps=190_000,
        replay_capacity=100_000,
        warmup_steps=10_000,
        training_steps=200_000,
        action_repeat=1,
    ),
    ("mountain_car", None): dict(
        anneal_steps=200_000,
        replay_capacity=20_000,
        warmup_steps=2_000,
        training_steps=200_000,
        action_repeat=5,
    ),
}

_DEFAULT_REF = {"dst": (0.0, -25.0), "mountain_car": (-110.0, -110.0, -110.0)}
_DEFAULT_ENCODING = {"dst": "one_hot", "mountain_car": "vector"}

_ENV_KEYS = {"kind", "width", "encoding", "image_height", "image_width", "max_frames"}
_AGENT_KEYS = {
    "gamma",
    "learning_rate",
    "epsilon_initial",
    "epsilon_final",
    "anneal_steps",
    "target_sync_period",
    "warmup_steps",
    "batch_size",
    "replay_capacity",
    "training_steps",
    "action_repeat",
    "rms_decay",
    "rms_epsilon",
    "target_mode",
}
_SCAL_KEYS = {"kind", "weights", "thresholds"}
_EXEC_KEYS = {"mode", "seed", "eval_period", "output_dir", "workers"}
_METRICS_KEYS = {"ref_point"}
_SECTION_KEYS = {
    "env": _ENV_KEYS,
    "agent": _AGENT_KEYS,
    "scalarization": _SCAL_KEYS,
    "execution": _EXEC_KEYS,
    "metrics": _METRICS_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    trials: tuple[TrialSpec, ...]
    mode: str
    output_dir: str
    ref_point: tuple[float, ...]
    base_seed: int
    eval_period: int
    workers: int | None
    raw_text: str


def _parse_sections(text: str) -> list[tuple[str, dict[str, str]]]:
    sections: list[tuple[str, dict[str, str]]] = []
    current: dict[str, str] | None = None
    current_name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current_name = line[1:-1].strip()
            if current_name not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current_name}]")
            if current_name != "scalarization" and any(
                name == current_name for name, _ in sections
            ):
                raise ConfigError(f"line {lineno}: duplicate section [{current_name}]")
            current = {}
            sections.append((current_name, current))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTION_KEYS[current_name]:
            raise ConfigError(f"line {lineno}: unknown key {current_name}.{key}")
        if key in current:
            raise ConfigError(f"line {lineno}: duplicate key {current_name}.{key}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {current_name}.{key}")
        current[key] = value
    return sections


def _as_int(path: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{path}: expected an integer, got {value!r}") from None


def _as_float(path: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None


def _as_floats(path: str, value: str) -> tuple[float, ...]:
    return tuple(_as_float(path, part.strip()) for part in value.split(","))


def _as_choice(path: str, value: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {', '.join(choices)}, got {value!r}")
    return value


def parse_config(path) -> RunConfig:
    """Read, validate, and fill in defaults. Raises ConfigError with
    the offending key path on any problem."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    sections = _parse_sections(text)
    blocks = {name: values for name, values in sections if name != "scalarization"}
    scal_blocks = [values for name, values in sections if name == "scalarization"]

    env_block = blocks.get("env", {})
    if "kind" not in env_block:
        raise ConfigError("env.kind is required (dst or mountain_car)")
    kind = _as_choice("env.kind", env_block["kind"], ("dst", "mountain_car"))
    width = _as_int("env.width", env_block.get("width", "3"))
    if kind == "dst" and width not in (3, 5):
        raise ConfigError(f"env.width: no treasure grid of width {width}")
    encoding_mode = _as_choice(
        "env.encoding",
        env_block.get("encoding", _DEFAULT_ENCODING[kind]),
        ("one_hot", "vector", "image"),
    )
    try:
        encoding = StateEncoding(
            encoding_mode,
            _as_int("env.image_height", env_block.get("image_height", "84")),
            _as_int("env.image_width", env_block.get("image_width", "84")),
        )
        env_spec = EnvSpec(
            kind,
            width,
            encoding,
            _as_int("env.max_frames", env_block.get("max_frames", "100")),
        )
    except ValueError as exc:
        raise ConfigError(f"env: {exc}") from None

    n_objectives = 2 if kind == "dst" else 3
    defaults = dict(_DEFAULTS[(kind, width if kind == "dst" else None)])
    agent_block = blocks.get("agent", {})
    agent_kwargs: dict = dict(defaults)
    for key, value in agent_block.items():
        path_name = f"agent.{key}"
        if key == "target_mode":
            agent_kwargs[key] = _as_choice(path_name, value, TARGET_MODES)
        elif key in ("gamma", "learning_rate", "epsilon_initial", "epsilon_final",
                     "rms_decay", "rms_epsilon"):
            agent_kwargs[key] = _as_float(path_name, value)
        else:
            agent_kwargs[key] = _as_int(path_name, value)

    if not scal_blocks:
        raise ConfigError("at least one [scalarization] section is required")
    scalarizations: list[ScalarizationSpec] = []
    for i, block in enumerate(scal_blocks):
        path_name = f"scalarization[{i}]"
        s_kind = _as_choice(f"{path_name}.kind", block.get("kind", "linear"),
                            ("linear", "tlo"))
        weights = (
            _as_floats(f"{path_name}.weights", block["weights"])
            if "weights" in block
            else None
        )
        thresholds = (
            _as_floats(f"{path_name}.thresholds", block["thresholds"])
            if "thresholds" in block
            else None
        )
        try:
            if s_kind == "linear":
                if thresholds is not None:
                    raise ValueError("linear scalarization takes no thresholds")
                if weights is None:
                    raise ValueError("weights are required")
                spec = ScalarizationSpec("linear", weights)
            else:
                if thresholds is None:
                    raise ValueError("thresholds are required")
                if weights is None:
                    n = len(thresholds) + 1
                    weights = (1.0 / n,) * n
                spec = ScalarizationSpec("tlo", weights, thresholds)
        except ValueError as exc:
            raise ConfigError(f"{path_name}: {exc}") from None
        if spec.n_objectives != n_objectives:
            raise ConfigError(
                f"{path_name}: {spec.n_objectives} weights for a "
                f"{n_objectives}-objective environment"
            )
        scalarizations.append(spec)

    exec_block = blocks.get("execution", {})
    mode = _as_choice(
        "execution.mode", exec_block.get("mode", "single"),
        ("single", "sequential", "parallel"),
    )
    base_seed = _as_int("execution.seed", exec_block.get("seed", "0"))
    eval_period = _as_int("execution.eval_period", exec_block.get("eval_period", "1000"))
    if eval_period < 1:
        raise ConfigError("execution.eval_period: must be positive")
    output_dir = exec_block.get("output_dir", "modqn-run")
    workers = (
        _as_int("execution.workers", exec_block["workers"])
        if "workers" in exec_block
        else None
    )
    if workers is not None and workers < 1:
        raise ConfigError("execution.workers: must be positive")
    if mode == "single" and len(scalarizations) != 1:
        raise ConfigError(
            f"execution.mode single needs exactly one [scalarization] "
            f"section, found {len(scalarizations)}"
        )

    metrics_block = blocks.get("metrics", {})
    ref_point = (
        _as_floats("metrics.ref_point", metrics_block["ref_point"])
        if "ref_point" in metrics_block
        else _DEFAULT_REF[kind]
    )
    if len(ref_point) != n_objectives:
        raise ConfigError(
            f"metrics.ref_point: {len(ref_point)} components for a "
            f"{n_objectives}-objective environment"
        )

    trials = []
    for i, scal in enumerate(scalarizations):
        try:
            agent = AgentConfig(scalarization=scal, **agent_kwargs)
            trials.append(
                TrialSpec(
                    env_spec,
                    agent,
                    eval_period=eval_period,
                    seed=base_seed + i,
                    trial_id=f"{i:02d}-{scal.kind}",
                )
            )
        except ValueError as exc:
            raise ConfigError(f"agent: {exc}") from None

    return RunConfig(
        tuple(trials), mode, output_dir, tuple(ref_point), base_seed,
        eval_period, workers, text,
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_train(config_path) -> int:
    config = parse_config(config_path)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    if config.mode == "single":
        logs = [run_trial(config.trials[0])]
        merged = merge_eval_history([logs[0].evals], [logs[0].spec], [0])
    elif config.mode == "sequential":
        logs, merged = run_sequential(list(config.trials))
    else:
        logs, merged = run_parallel(list(config.trials), config.workers)

    artifacts: list[Path] = []
    for log in logs:
        trial_id = log.spec.trial_id
        trainlog_path = out / f"trainlog_{trial_id}.csv"
        trace_path = out / f"trace_{trial_id}.csv"
        write_trainlog_csv(log, trainlog_path)
        write_trace_csv(log, trace_path)
        artifacts += [trainlog_path, trace_path]

    merged_path = out / "merged_front.csv"
    write_merged_front_csv(merged, merged_path)
    history = hv_history(merged, config.ref_point)
    hv_path = out / "hypervolume.csv"
    write_hypervolume_csv(history, hv_path)
    final_points = merged[-1][1] if merged else np.empty((0, len(config.ref_point)))
    final_front = nondominated_filter(final_points)
    front_path = out / "front.csv"
    write_front_csv(final_front, front_path)
    artifacts += [merged_path, hv_path, front_path]

    final_hv = float(hypervolume(final_front, config.ref_point)) if len(final_front) else 0.0
    manifest = {
        "config": config.raw_text,
        "mode": config.mode,
        "eval_period": config.eval_period,
        "ref_point": list(config.ref_point),
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "trials": [
            {
                "id": log.spec.trial_id,
                "seed": log.spec.seed,
                "scalarization": {
                    "kind": log.spec.agent.scalarization.kind,
                    "weights": list(log.spec.agent.scalarization.weights),
                    "thresholds": (
                        list(log.spec.agent.scalarization.thresholds)
                        if log.spec.agent.scalarization.thresholds is not None
                        else None
                    ),
                },
                "failed": log.failed,
                "error": log.error,
                "final_eval": (
                    [float(v) for v in log.evals[-1].episode_return]
                    if log.evals
                    else None
                ),
                "frames_train": log.frames_train,
                "frames_eval": log.frames_eval,
            }
            for log in logs
        ],
        "frames_total": sum(log.frames_train + log.frames_eval for log in logs),
        "final_front": [[float(v) for v in p] for p in final_front],
        "final_hypervolume": final_hv,
        "wall_time_seconds": time.monotonic() - started,
        "checksums": {p.name: _sha256(p) for p in artifacts},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    for log in logs:
        status = "FAILED" if log.failed else "ok"
        final = (
            ", ".join(f"{v:g}" for v in log.evals[-1].episode_return)
            if log.evals
            else "no evals"
        )
        print(f"trial {log.spec.trial_id}: {status}  final eval ({final})")
    print(f"final front ({len(final_front)} points), hypervolume {final_hv!r}")
    print(f"artifacts in {out}")
    return 1 if any(log.failed for log in logs) else 0


def cmd_hypervolume(front_path, ref_text: str) -> int:
    ref = _as_floats("--ref", ref_text)
    try:
        front = read_front_csv(front_path)
    except OSError as exc:
        raise ConfigError(f"cannot read front file: {exc}") from None
    if front.size and front.shape[1] != len(ref):
        raise ConfigError(
            f"front has {front.shape[1]} objectives but --ref has {len(ref)}"
        )
    print(repr(float(hypervolume(front, ref)) if front.size else 0.0))
    return 0


def cmd_front(env: str, width: int, out_path) -> int:
    if env != "dst":
        raise ConfigError(f"true front enumeration is only available for dst, not {env}")
    try:
        from .envs import dst_layout

        front = enumerate_dst_front(dst_layout(width))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_front_csv(front, out_path)
    for row in front:
        print(", ".join(repr(float(v)) for v in row))
    print(f"front written to {out_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="modqn",
        description="Multi-objective DQN experiments: train agents, score fronts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run trials from a config file")
    p_train.add_argument("config", help="path to a run config")

    p_hv = sub.add_parser("hypervolume", help="score a front CSV against a reference")
    p_hv.add_argument("--front", required=True, help="front CSV path")
    p_hv.add_argument("--ref", required=True, help="reference point, e.g. '0,-25'")

    p_front = sub.add_parser("front", help="write the true Pareto front")
    p_front.add_argument("--env", required=True, help="environment kind (dst)")
    p_front.add_argument("--width", type=int, default=3, choices=(3, 5))
    p_front.add_argument("--out", default="front.csv", help="output CSV path")

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args.config)
        if args.command == "hypervolume":
            return cmd_hypervolume(args.front, args.ref)
        return cmd_front(args.env, args.width, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
