"""Experiment configs, run orchestration, and report assembly.

Config files are strict JSON: every key must be known, so a typo in a
hyperparameter name fails loudly instead of silently running defaults. The
resolved config is echoed into every report, which makes runs reproducible
from their own output (output locations are deliberately not echoed).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .arch import make_architecture
from .census import energy_increase
from .data import Dataset, holdout_split, load_dataset
from .errors import ConfigError
from .nn.network import Network, build_network
from .nn.optim import OptimizerState
from .nn.serialize import load_network
from .training import (
    EvalReport,
    SpongeConfig,
    TrainHistory,
    evaluate,
    train,
)

_DEFAULT_LR = {"clean": 0.1, "sponge": 0.1, "sanitize": 0.025}


@dataclass(frozen=True)
class ExperimentConfig:
    architecture: str
    dataset: str
    mode: str = "clean"
    objective: str = "l0_hat"
    lam: float = 1.0
    sigma: float = 1e-4
    poison_fraction: float = 0.05
    seed: int = 0
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float | None = None  # per-mode default when omitted
    lr_decay: float = 0.95
    momentum: float = 0.9
    weight_decay: float = 5e-4
    val_dataset: str | None = None
    test_dataset: str | None = None
    val_samples: int = 100
    input_shape: tuple[int, ...] | None = None
    init_checkpoint: str | None = None

    @property
    def resolved_lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        try:
            return _DEFAULT_LR[self.mode]
        except KeyError:
            raise ConfigError(f"unknown mode {self.mode!r}") from None

    def sponge_config(self) -> SpongeConfig:
        try:
            return SpongeConfig(
                mode=self.mode,
                objective=self.objective,
                lam=self.lam,
                sigma=self.sigma,
                poison_fraction=self.poison_fraction,
                seed=self.seed,
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def echo(self) -> dict:
        """JSON-ready view of the config, with file keys as written on disk."""
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["learning_rate"] = self.resolved_lr
        if d["input_shape"] is not None:
            d["input_shape"] = list(d["input_shape"])
        return d


_CONFIG_KEYS = {
    "architecture": str,
    "dataset": str,
    "mode": str,
    "objective": str,
    "lambda": float,
    "sigma": float,
    "poison_fraction": float,
    "seed": int,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "lr_decay": float,
    "momentum": float,
    "weight_decay": float,
    "val_dataset": str,
    "test_dataset": str,
    "val_samples": int,
    "input_shape": list,
    "init_checkpoint": str,
}
_REQUIRED = ("architecture", "dataset")
_NULLABLE = ("learning_rate", "val_dataset", "test_dataset", "input_shape", "init_checkpoint")


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")

    kwargs = {}
    for key, value in raw.items():
        want = _CONFIG_KEYS[key]
        if value is None:
            if key not in _NULLABLE:
                raise ConfigError(f"config key {key!r} may not be null")
        elif want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        elif want is int and isinstance(value, int) and not isinstance(value, bool):
            value = int(value)
        elif not isinstance(value, want) or isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be {want.__name__}, got {value!r}")
        field = "lam" if key == "lambda" else key
        if key == "input_shape" and value is not None:
            if not all(isinstance(v, int) and v > 0 for v in value):
                raise ConfigError("input_shape must be a list of positive integers")
            value = tuple(value)
        kwargs[field] = value
    cfg = ExperimentConfig(**kwargs)
    cfg.sponge_config()  # validate attack fields eagerly
    cfg.resolved_lr
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


@dataclass
class ExperimentResult:
    net: Network
    report: dict
    history: TrainHistory
    final_eval: EvalReport


def _resolve_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, Dataset, str]:
    train_ds = load_dataset(cfg.dataset)
    if cfg.val_dataset:
        val_ds = load_dataset(cfg.val_dataset)
    else:
        train_ds, val_ds = holdout_split(train_ds, cfg.val_samples, cfg.seed)
    if cfg.test_dataset:
        eval_ds, eval_name = load_dataset(cfg.test_dataset), "test"
    else:
        eval_ds, eval_name = train_ds, "train"
    return train_ds, val_ds, eval_ds, eval_name


def _build_net(cfg: ExperimentConfig, train_ds: Dataset) -> Network:
    input_shape = cfg.input_shape or (train_ds.dim,)
    if cfg.init_checkpoint:
        net = load_network(cfg.init_checkpoint)
        if net.input_shape != tuple(input_shape):
            raise ConfigError(
                f"checkpoint input shape {net.input_shape} does not match {tuple(input_shape)}"
            )
        return net
    spec = make_architecture(cfg.architecture, input_shape, train_ds.n_classes)
    return build_network(spec, cfg.seed, input_shape)


def run_experiment(
    cfg: ExperimentConfig, baseline_checkpoint: str | Path | None = None
) -> ExperimentResult:
    """Train per the config and assemble the run report."""
    train_ds, val_ds, eval_ds, eval_name = _resolve_datasets(cfg)
    net = _build_net(cfg, train_ds)

    initial_eval = None
    if cfg.mode == "sanitize":
        initial_eval = evaluate(net, eval_ds, cfg.sigma)

    opt = OptimizerState(
        lr=cfg.resolved_lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    net, history = train(
        train_ds,
        val_ds,
        net,
        cfg.sponge_config(),
        opt,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        lr_decay=cfg.lr_decay,
    )
    final_eval = evaluate(net, eval_ds, cfg.sigma)

    report = {
        "config": cfg.echo(),
        "m": net.m,
        "K": net.K,
        "eval_set": eval_name,
        "accuracy": final_eval.accuracy,
        "energy_ratio": final_eval.energy_ratio,
        "mean_energy": final_eval.mean_energy,
        "firing_fractions": final_eval.firing.to_records(),
        "census": final_eval.census.to_records(),
        "history": [asdict(r) for r in history],
    }
    if initial_eval is not None:
        report["initial"] = {
            "accuracy": initial_eval.accuracy,
            "energy_ratio": initial_eval.energy_ratio,
        }
    if baseline_checkpoint is not None:
        base_net = load_network(baseline_checkpoint)
        base_eval = evaluate(base_net, eval_ds, cfg.sigma)
        report["baseline"] = {
            "checkpoint": str(baseline_checkpoint),
            "accuracy": base_eval.accuracy,
            "energy_ratio": base_eval.energy_ratio,
        }
        report["energy_increase"] = energy_increase(final_eval.census, base_eval.census)
    return ExperimentResult(net=net, report=report, history=history, final_eval=final_eval)


def dump_report(report: dict) -> bytes:
    """Deterministic JSON bytes (sorted keys, fixed layout)."""
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")
