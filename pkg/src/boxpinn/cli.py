"""Command-line pipeline: train, oracle, eval, compare.

A JSON config file can pre-set any knob; command-line flags override it,
unknown keys are rejected, and every command that writes to an output
directory echoes the fully resolved configuration there as config.json.

Exit codes: 0 success, 2 configuration or input error, 3 training
divergence, 4 comparison gate exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from boxpinn import evaluation, networks, oracle, training
from boxpinn.errors import ConfigError, ConvergenceError, DivergenceError, FieldFormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_GATE = 4

_DEFAULTS = {
    "backend": "mlp",
    "steps": 20000,
    "learning_rate": 1e-3,
    "alpha": 1.0,
    "n_interior": 2500,
    "per_side": 50,
    "seed": 42,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "adam_epsilon": 1e-8,
    "log_every": 100,
    "grid": 101,
    "n_terms": 200,
    "gate": 0.1,
    "heatmap": True,
    "out": None,
}

_INT_KEYS = {"steps", "n_interior", "per_side", "seed", "log_every", "grid", "n_terms"}
_FLOAT_KEYS = {"learning_rate", "alpha", "adam_beta1", "adam_beta2", "adam_epsilon", "gate"}

# flag destination -> config key (flags not listed map to themselves)
_FLAG_KEYS = {"lr": "learning_rate"}


def _coerce(key: str, value):
    if key not in _DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key!r} must be an integer")
        return int(value)
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} must be a number")
        return float(value)
    if key == "heatmap":
        if not isinstance(value, bool):
            raise ConfigError("config key 'heatmap' must be true or false")
        return value
    if key == "backend":
        if value not in networks.BACKENDS:
            raise ConfigError(f"backend must be one of {networks.BACKENDS}")
        return value
    if key == "out":
        if value is not None and not isinstance(value, str):
            raise ConfigError("config key 'out' must be a string path")
        return value
    raise ConfigError(f"unknown config key {key!r}")


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit command-line flags."""
    config = dict(_DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                loaded = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in loaded.items():
            config[key] = _coerce(key, value)
    for dest, value in vars(args).items():
        key = _FLAG_KEYS.get(dest, dest)
        if key in _DEFAULTS and value is not None:
            config[key] = _coerce(key, value)
    return config


def _prepare_out(config: dict) -> Path:
    if not config.get("out"):
        raise ConfigError("an output directory is required (--out or config 'out')")
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="ascii") as handle:
        json.dump(config, handle, indent=1)
        handle.write("\n")
    return out


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = _prepare_out(config)
    train_config = training.TrainConfig(
        backend=config["backend"],
        steps=config["steps"],
        learning_rate=config["learning_rate"],
        alpha=config["alpha"],
        n_interior=config["n_interior"],
        per_side=config["per_side"],
        seed=config["seed"],
        adam_beta1=config["adam_beta1"],
        adam_beta2=config["adam_beta2"],
        adam_epsilon=config["adam_epsilon"],
        log_every=config["log_every"],
    )
    model, history = training.train(train_config)
    networks.save_model(model, out / "model.json")
    training.write_history(history, out / "history.csv")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = _prepare_out(config)
    field = oracle.oracle_grid(config["grid"], config["n_terms"])
    evaluation.write_csv(field, out / "oracle.csv")
    if config["heatmap"]:
        evaluation.write_heatmap(field, out / "oracle.pgm", vrange=(0.0, 1.0))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = _prepare_out(config)
    model = networks.load_model(args.model)
    field = evaluation.eval_grid(model, config["grid"])
    evaluation.write_csv(field, out / "field.csv")
    if config["heatmap"]:
        evaluation.write_heatmap(field, out / "field.pgm", vrange=(0.0, 1.0))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    field_a = evaluation.read_csv(args.a)
    field_b = evaluation.read_csv(args.b)
    try:
        diff, stats = evaluation.abs_diff(field_a, field_b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if config.get("out"):
        out = _prepare_out(config)
        evaluation.write_csv(diff, out / "diff.csv")
        if config["heatmap"]:
            evaluation.write_heatmap(diff, out / "diff.pgm", vrange="auto")
    print(
        f"max_abs={stats.max_abs!r} mean_abs={stats.mean_abs!r} "
        f"max_abs_below_y95={stats.max_abs_below_y95!r}"
    )
    if stats.max_abs_below_y95 > config["gate"]:
        return EXIT_GATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxpinn",
        description="Train and evaluate potential-field solvers on the unit box.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output directory")

    p_train = sub.add_parser("train", help="train a model and save it")
    add_common(p_train)
    p_train.add_argument("--backend", choices=list(networks.BACKENDS))
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--steps", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--alpha", type=float)
    p_train.add_argument("--n-interior", dest="n_interior", type=int)
    p_train.add_argument("--per-side", dest="per_side", type=int)
    p_train.add_argument("--log-every", dest="log_every", type=int)
    p_train.set_defaults(func=cmd_train)

    p_oracle = sub.add_parser("oracle", help="write the reference field")
    add_common(p_oracle)
    p_oracle.add_argument("--grid", type=int)
    p_oracle.add_argument("--n-terms", dest="n_terms", type=int)
    p_oracle.add_argument("--heatmap", choices=["on", "off"])
    p_oracle.set_defaults(func=cmd_oracle)

    p_eval = sub.add_parser("eval", help="evaluate a saved model on the grid")
    add_common(p_eval)
    p_eval.add_argument("--model", required=True, help="model JSON file")
    p_eval.add_argument("--grid", type=int)
    p_eval.add_argument("--heatmap", choices=["on", "off"])
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="absolute difference of two fields")
    add_common(p_cmp)
    p_cmp.add_argument("--a", required=True, help="first field CSV")
    p_cmp.add_argument("--b", required=True, help="second field CSV")
    p_cmp.add_argument("--gate", type=float)
    p_cmp.add_argument("--heatmap", choices=["on", "off"])
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "heatmap", None) is not None:
        args.heatmap = args.heatmap == "on"
    try:
        return args.func(args)
    except (ConfigError, FieldFormatError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
