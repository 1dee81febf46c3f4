"""Command-line front end.

Subcommands: ``gen-data``, ``train``, ``sweep``, ``profile``, ``report``.
Exit codes: 0 on success, 2 for config/usage errors, 3 when training
diverges (non-finite loss).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import DATASET_KINDS, gen_blobs, gen_rings, gen_tiny_images, load_dataset, save_dataset
from .errors import ConfigError, DivergenceError, SpongeNetError
from .experiment import dump_report, load_config, run_experiment
from .nn.serialize import load_network, save_network
from .sweep import load_grid, run_sweep, write_sweep_csv
from .training import dataset_firing_profile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _cmd_gen_data(args) -> int:
    if args.kind == "blobs":
        ds = gen_blobs(args.samples, args.dim, args.classes, args.seed, task_seed=args.task_seed)
    elif args.kind == "rings":
        ds = gen_rings(args.samples, args.dim, args.classes, args.seed)
    else:
        ds = gen_tiny_images(
            args.samples,
            (args.channels, args.height, args.width),
            args.classes,
            args.seed,
            imbalance=args.imbalance,
            task_seed=args.task_seed,
        )
    save_dataset(ds, args.out)
    print(f"wrote {args.out}: {len(ds)} samples, dim {ds.dim}, {ds.n_classes} classes")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_experiment(cfg, baseline_checkpoint=args.baseline)

    report_path = out_dir / "report.json"
    report_path.write_bytes(dump_report(result.report))
    ckpt_path = out_dir / "model.spngnet"
    save_network(result.net, ckpt_path)

    r = result.report
    line = (
        f"mode={cfg.mode} accuracy={r['accuracy']:.4f} "
        f"energy_ratio={r['energy_ratio']:.4f}"
    )
    if "energy_increase" in r:
        line += f" energy_increase={r['energy_increase']:.4f}"
    print(line)
    print(f"wrote {report_path} and {ckpt_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    grid = load_grid(args.grid)
    progress = None
    if not args.quiet:
        progress = lambda row: print(
            f"sigma={row['sigma']:g} lambda={row['lambda']:g} p={row['p']:g} "
            f"seed={row['seed']} status={row['status']}"
        )
    rows = run_sweep(grid, progress=progress)
    write_sweep_csv(rows, args.out)
    print(f"wrote {args.out}: {len(rows)} rows")
    return EXIT_OK


def _cmd_profile(args) -> int:
    net = load_network(args.checkpoint)
    ds = load_dataset(args.data)
    profile = dataset_firing_profile(net, ds)
    if args.baseline:
        base_net = load_network(args.baseline)
        kinds = [ly.kind for ly in net.layers]
        base_kinds = [ly.kind for ly in base_net.layers]
        if kinds != base_kinds or base_net.input_shape != net.input_shape:
            raise ConfigError("checkpoints have different architectures")
        base_profile = dataset_firing_profile(base_net, ds)
        layers = [
            {
                "layer": name,
                "kind": kind,
                "clean_fraction": cf,
                "sponge_fraction": sf,
                "delta": sf - cf,
            }
            for name, kind, cf, sf in zip(
                profile.layer_names,
                profile.layer_kinds,
                base_profile.fractions,
                profile.fractions,
            )
        ]
    else:
        layers = profile.to_records()
    out = {"layers": layers}
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from . import figures
    from .sweep import read_sweep_csv

    if not (args.run or args.profile or args.sweep):
        raise ConfigError("report needs at least one of --run, --profile, --sweep")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if args.run:
        runs = []
        seen: dict[str, int] = {}
        for path in args.run:
            report = json.loads(Path(path).read_text(encoding="utf-8"))
            cfg = report.get("config", {})
            label = f"{cfg.get('mode', 'run')}-s{cfg.get('seed', '?')}"
            if label in seen:
                seen[label] += 1
                label = f"{label}.{seen[label]}"
            else:
                seen[label] = 0
            runs.append((label, report))
        written += figures.render_history(runs, out_dir)

    if args.profile:
        profile = json.loads(Path(args.profile).read_text(encoding="utf-8"))
        written += figures.render_profile(profile, out_dir)

    if args.sweep:
        rows = read_sweep_csv(args.sweep)
        written += figures.render_sweep(rows, out_dir)

    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spongenet",
        description="Train, attack, repair, and profile small networks "
        "under a zero-skipping accelerator cost model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    p.add_argument("--kind", choices=DATASET_KINDS, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--dim", type=int, default=2, help="feature dim (blobs/rings)")
    p.add_argument("--height", type=int, default=16, help="image height (tiny-images)")
    p.add_argument("--width", type=int, default=16, help="image width (tiny-images)")
    p.add_argument("--channels", type=int, default=1, help="image channels (tiny-images)")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--imbalance", type=float, default=1.0,
                   help="largest/smallest class size ratio (tiny-images)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--task-seed", type=int, default=0,
                   help="seed for class structure (shared across train/test files)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="run one training experiment from a config file")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--baseline", default=None,
                   help="clean checkpoint; adds energy_increase to the report")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="run an ablation grid and write a CSV")
    p.add_argument("--grid", required=True, help="grid JSON file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("profile", help="per-layer firing fractions of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--baseline", default=None,
                   help="second checkpoint for a clean-vs-model comparison")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("report", help="render figures + CSVs from run artifacts")
    p.add_argument("--run", action="append", default=[],
                   help="run report JSON (repeatable)")
    p.add_argument("--profile", default=None, help="profile JSON")
    p.add_argument("--sweep", default=None, help="sweep CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as e:
        print(f"error: training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (SpongeNetError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
