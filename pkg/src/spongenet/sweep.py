"""Ablation sweeps over the attack knobs (sigma, lambda, poison fraction).

A grid file is strict JSON::

    {
      "base": { ... experiment config, swept keys optional ... },
      "sigma": [1e-2, 1e-4],
      "lambda": [0, 1],
      "p": [0.05],
      "seeds": [0, 1, 2]
    }

Cells are enumerated in deterministic order (sigma, then lambda, then p, then
seed). Each seed's clean twin is trained once and reused as the baseline for
every cell with that seed, so the CSV's ``energy_increase`` column is always
relative to a clean model trained identically apart from the attack. A cell
that fails (e.g. diverges) becomes a row with a non-``ok`` status; the sweep
continues.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .census import energy_increase
from .errors import ConfigError, SpongeNetError
from .experiment import ExperimentConfig, config_from_dict, run_experiment

CSV_COLUMNS = (
    "sigma",
    "lambda",
    "p",
    "seed",
    "status",
    "accuracy",
    "energy_ratio",
    "energy_increase",
    "epochs_to_best",
)


@dataclass(frozen=True)
class SweepGrid:
    base: ExperimentConfig
    sigmas: tuple[float, ...]
    lams: tuple[float, ...]
    ps: tuple[float, ...]
    seeds: tuple[int, ...]

    def cells(self):
        for sigma in self.sigmas:
            for lam in self.lams:
                for p in self.ps:
                    for seed in self.seeds:
                        yield sigma, lam, p, seed


def grid_from_dict(raw: dict) -> SweepGrid:
    known = {"base", "sigma", "lambda", "p", "seeds"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    missing = known - set(raw)
    if missing:
        raise ConfigError(f"missing grid keys: {sorted(missing)}")
    base_raw = dict(raw["base"])
    base_raw.setdefault("mode", "sponge")
    base = config_from_dict(base_raw)
    lists = {}
    for key in ("sigma", "lambda", "p", "seeds"):
        vals = raw[key]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"grid key {key!r} must be a non-empty list")
        lists[key] = vals
    return SweepGrid(
        base=base,
        sigmas=tuple(float(v) for v in lists["sigma"]),
        lams=tuple(float(v) for v in lists["lambda"]),
        ps=tuple(float(v) for v in lists["p"]),
        seeds=tuple(int(v) for v in lists["seeds"]),
    )


def load_grid(path: str | Path) -> SweepGrid:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"grid file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return grid_from_dict(raw)


def _epochs_to_best(history: list, lam: float) -> int:
    """1-based epoch of peak validation energy ratio (attack runs) or accuracy."""
    key = (lambda r: r.val_energy_ratio) if lam > 0 else (lambda r: r.val_accuracy)
    values = [key(r) for r in history]
    return int(max(range(len(values)), key=values.__getitem__)) + 1


def run_sweep(grid: SweepGrid, progress=None) -> list[dict]:
    clean_twins: dict[int, object] = {}

    def clean_twin(seed: int):
        if seed not in clean_twins:
            cfg = dataclasses.replace(grid.base, mode="clean", seed=seed)
            clean_twins[seed] = run_experiment(cfg)
        return clean_twins[seed]

    rows = []
    for sigma, lam, p, seed in grid.cells():
        row = {
            "sigma": sigma,
            "lambda": lam,
            "p": p,
            "seed": seed,
            "status": "ok",
            "accuracy": "",
            "energy_ratio": "",
            "energy_increase": "",
            "epochs_to_best": "",
        }
        try:
            cfg = dataclasses.replace(
                grid.base, sigma=sigma, lam=lam, poison_fraction=p, seed=seed
            )
            result = run_experiment(cfg)
            twin = clean_twin(seed)
            row["accuracy"] = result.final_eval.accuracy
            row["energy_ratio"] = result.final_eval.energy_ratio
            row["energy_increase"] = energy_increase(
                result.final_eval.census, twin.final_eval.census
            )
            row["epochs_to_best"] = _epochs_to_best(result.history, lam)
        except SpongeNetError as e:
            row["status"] = f"error:{type(e).__name__}:{e}"
        rows.append(row)
        if progress is not None:
            progress(row)
    return rows


def write_sweep_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})


def read_sweep_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
