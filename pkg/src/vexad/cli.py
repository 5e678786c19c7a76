"""Command-line entry points: data generation, batch experiments, serving."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataset as dataset_mod
from .display import ObjectiveWeights
from .evaluation import (ablation_cells, comparison_cells, run_labeled_cells,
                         supervised_eer, write_results_csv, write_summary_csv)
from .samplers import STRATEGIES
from .session import SessionConfig
from .scorer import TrainConfig


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="dataset directory (manifest.json inside)")
    p.add_argument("--display-size", type=int, default=16)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--rep", type=int, choices=(0, 1), default=1)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--maxiter", type=int, default=100)
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated session seeds")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for CSV files")


def _base_config(args, parser, n: int, strategy: str = "vexad") -> SessionConfig:
    try:
        cfg = SessionConfig(
            strategy=strategy,
            display_size=args.display_size,
            budget=args.budget,
            weights=ObjectiveWeights(rep_on=args.rep, alpha=args.alpha,
                                     beta=args.beta, gamma=args.gamma),
            train_cfg=TrainConfig(),
            epsilon=args.epsilon,
            maxiter=args.maxiter,
            dataset=args.dataset,
            split_seed=args.split_seed,
        )
    except ValueError as exc:
        parser.error(str(exc))
    if args.display_size * args.budget > n // 2:
        parser.error(f"display-size*budget = {args.display_size * args.budget} "
                     f"exceeds the train pool of {n // 2}")
    return cfg


def _parse_seeds(text: str, parser) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip() != ""]
    except ValueError:
        parser.error(f"--seeds must be comma-separated integers, got {text!r}")


def _load_dataset(path: str):
    try:
        return dataset_mod.load(path)
    except (OSError, dataset_mod.DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _write_outputs(out_dir: str, runs, supervised=None) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(out / "results.csv", runs)
        write_summary_csv(out / "summary.csv", runs, supervised=supervised)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vexad",
                                     description="Active-learning engine for rare-change detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--dim", type=int, default=16)
    p_gen.add_argument("--pos-frac", type=float, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="run one strategy with the simulated oracle")
    p_run.add_argument("--strategy", choices=STRATEGIES, required=True)
    _add_experiment_flags(p_run)

    p_abl = sub.add_parser("ablate", help="run the 7-cell term ablation grid")
    _add_experiment_flags(p_abl)

    p_cmp = sub.add_parser("compare", help="compare strategies plus the supervised bound")
    p_cmp.add_argument("--strategies", default=",".join(STRATEGIES),
                       help="comma-separated subset of " + ",".join(STRATEGIES))
    _add_experiment_flags(p_cmp)

    p_srv = sub.add_parser("serve", help="serve the annotation API and UI")
    p_srv.add_argument("--dataset", required=True)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--data-dir", default=None, help="session persistence dir "
                       "(default $VEXAD_DATA_DIR or ./vexad_data)")
    p_srv.add_argument("--ui-dir", default=None, help="static UI assets directory")

    args = parser.parse_args(argv)

    if args.command == "gen-data":
        try:
            ds = dataset_mod.generate_synthetic(args.n, args.dim, args.pos_frac, args.seed)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        try:
            dataset_mod.save(ds, args.out)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        n_pos = int((ds.label_vector() == 1).sum())
        print(f"n={ds.n} pos={n_pos} dim={ds.dim}")
        return 0

    if args.command in ("run", "ablate", "compare"):
        ds = _load_dataset(args.dataset)
        seeds = _parse_seeds(args.seeds, parser)
        if args.command == "run":
            cfg = _base_config(args, parser, ds.n, strategy=args.strategy)
            runs = run_labeled_cells(ds, [(args.strategy, cfg)], seeds)
            _write_outputs(args.out, runs)
        elif args.command == "ablate":
            cfg = _base_config(args, parser, ds.n)
            runs = run_labeled_cells(ds, ablation_cells(cfg), seeds)
            _write_outputs(args.out, runs)
        else:
            strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
            bad = [s for s in strategies if s not in STRATEGIES]
            if bad:
                parser.error(f"unknown strategies {bad}; valid values: {', '.join(STRATEGIES)}")
            cfg = _base_config(args, parser, ds.n)
            runs = run_labeled_cells(ds, comparison_cells(cfg, strategies), seeds)
            _write_outputs(args.out, runs, supervised=supervised_eer(ds, cfg))
        print(f"wrote {Path(args.out) / 'results.csv'} and {Path(args.out) / 'summary.csv'}")
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import create_app
        ds = _load_dataset(args.dataset)
        app = create_app(ds, data_dir=args.data_dir, ui_dir=args.ui_dir,
                         dataset_ref=args.dataset)
        try:
            uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        except (OSError, SystemExit) as exc:
            print(f"error: could not serve on {args.host}:{args.port}: {exc}", file=sys.stderr)
            return 1
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
