"""Experiment harnesses: ablation grid, strategy comparison, CSV reports.

Runtimes are organized as (label, seed) cells.  Within one harness call
every cell shares the dataset and the split, and the per-seed session seed
is shared across labels, so the random first display - and therefore the
iteration-1 error - coincides across all cells of a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset, generate_synthetic, split_half
from .display import ObjectiveWeights
from .metrics import auc, eer, render_metric, render_rate, sampling_rate  # noqa: F401
from .samplers import STRATEGIES
from .session import SessionConfig, run_simulated, with_seed
from .scorer import score_batch, train


@dataclass(frozen=True)
class EvalRecord:
    iter: int
    eer: float
    samp_pct: float


@dataclass
class RunTable:
    label: str
    records: list[EvalRecord]
    auc: float


@dataclass
class SeedRun:
    label: str
    seed: int
    records: list[EvalRecord]


# The seven on/off combinations of (representativity, diversity, ambiguity),
# everything-off excluded; the entropy regularizer is always kept.
ABLATION_CELLS: tuple[tuple[str, int, int, int], ...] = (
    ("amb", 0, 0, 1),
    ("div", 0, 1, 0),
    ("rep", 1, 0, 0),
    ("rep+amb", 1, 0, 1),
    ("div+amb", 0, 1, 1),
    ("rep+div", 1, 1, 0),
    ("rep+div+amb", 1, 1, 1),
)

BENCHMARK_N = 2200
BENCHMARK_POS = 39
BENCHMARK_DIM = 16
BENCHMARK_SEED = 7


def default_benchmark(seed: int = BENCHMARK_SEED) -> Dataset:
    """The standard synthetic benchmark: 2200 samples, 39 positives, dim 16."""
    return generate_synthetic(BENCHMARK_N, BENCHMARK_DIM, BENCHMARK_POS / BENCHMARK_N, seed)


def _records_of(session) -> list[EvalRecord]:
    return [EvalRecord(iter=m["iter"], eer=m["eer"], samp_pct=m["samp_pct"])
            for m in session.metrics]


def run_labeled_cells(ds: Dataset, cells: list[tuple[str, SessionConfig]],
                      seeds) -> list[SeedRun]:
    """Run every (label, config) cell for every seed with the simulated oracle."""
    runs = []
    for label, cfg in cells:
        for seed in seeds:
            session = run_simulated(with_seed(cfg, int(seed)), ds)
            runs.append(SeedRun(label=label, seed=int(seed), records=_records_of(session)))
    return runs


def ablation_cells(base_cfg: SessionConfig) -> list[tuple[str, SessionConfig]]:
    """The 7 ablation configs; the 'on' magnitudes come from base_cfg.weights."""
    w0 = base_cfg.weights
    cells = []
    for label, rep_on, div_on, amb_on in ABLATION_CELLS:
        weights = ObjectiveWeights(rep_on=rep_on,
                                   alpha=w0.alpha if div_on else 0.0,
                                   beta=w0.beta if amb_on else 0.0,
                                   gamma=w0.gamma)
        cells.append((label, replace(base_cfg, strategy="vexad", weights=weights)))
    return cells


def comparison_cells(base_cfg: SessionConfig, strategies) -> list[tuple[str, SessionConfig]]:
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}, expected one of {STRATEGIES}")
    return [(s, replace(base_cfg, strategy=s)) for s in strategies]


def aggregate(runs: list[SeedRun]) -> list[RunTable]:
    """Mean EER per iteration across seeds, one RunTable per label."""
    order: list[str] = []
    grouped: dict[str, list[SeedRun]] = {}
    for run in runs:
        if run.label not in grouped:
            order.append(run.label)
            grouped[run.label] = []
        grouped[run.label].append(run)
    tables = []
    for label in order:
        group = grouped[label]
        n_iter = len(group[0].records)
        records = []
        for i in range(n_iter):
            mean_eer = math.fsum(r.records[i].eer for r in group) / len(group)
            records.append(EvalRecord(iter=i + 1, eer=mean_eer,
                                      samp_pct=group[0].records[i].samp_pct))
        tables.append(RunTable(label=label, records=records, auc=auc(records)))
    return tables


def run_ablation(ds: Dataset, base_cfg: SessionConfig, seeds) -> list[RunTable]:
    """Seed-averaged tables for the 7 term on/off combinations."""
    return aggregate(run_labeled_cells(ds, ablation_cells(base_cfg), seeds))


def supervised_eer(ds: Dataset, base_cfg: SessionConfig) -> float:
    """EER of a scorer trained on the fully labeled train half."""
    split = split_half(ds, base_cfg.split_seed)
    feats = ds.feature_matrix()
    labels = ds.label_vector()
    train_ids = np.array(split.train_ids)
    eval_ids = np.array(split.eval_ids)
    scorer = train(feats[train_ids], labels[train_ids], base_cfg.train_cfg)
    return eer(score_batch(scorer, feats[eval_ids]), labels[eval_ids])


def run_comparison(ds: Dataset, base_cfg: SessionConfig, strategies,
                   seeds) -> tuple[list[RunTable], float]:
    """Seed-averaged table per strategy plus the fully supervised bound."""
    tables = aggregate(run_labeled_cells(ds, comparison_cells(base_cfg, strategies), seeds))
    return tables, supervised_eer(ds, base_cfg)


# --- CSV output --------------------------------------------------------------

def write_results_csv(path, runs: list[SeedRun]) -> None:
    """Raw per-seed records: label,seed,iter,eer,samp_pct (full precision)."""
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,seed,iter,eer,samp_pct\n")
        for run in runs:
            for rec in run.records:
                fh.write(f"{run.label},{run.seed},{rec.iter},{rec.eer!r},{rec.samp_pct!r}\n")


def write_summary_csv(path, runs: list[SeedRun], supervised: float | None = None) -> None:
    """Per-label aggregates: label,auc_mean,auc_std,final_eer_mean."""
    order: list[str] = []
    grouped: dict[str, list[SeedRun]] = {}
    for run in runs:
        if run.label not in grouped:
            order.append(run.label)
            grouped[run.label] = []
        grouped[run.label].append(run)
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,auc_mean,auc_std,final_eer_mean\n")
        for label in order:
            aucs = np.array([auc(r.records) for r in grouped[label]])
            finals = np.array([r.records[-1].eer for r in grouped[label]])
            fh.write(f"{label},{float(aucs.mean())!r},{float(aucs.std())!r},"
                     f"{float(finals.mean())!r}\n")
        if supervised is not None:
            fh.write(f"supervised_eer,{float(supervised)!r},0.0,{float(supervised)!r}\n")
