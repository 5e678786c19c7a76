"""Annotation session state machine.

One session owns one dataset split and drives the label-train-select loop:
the oracle labels the pending display, the scorer retrains on everything
labeled so far, eval metrics are recorded, and the configured strategy
picks the next display from the still-unlabeled train pool.  Displays never
repeat ids.  All randomness is derived from the config seed plus the
iteration index, so a session saved and reloaded mid-run continues on the
byte-identical trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np

from . import dataset as dataset_mod
from .dataset import Dataset, Split, split_half
from .display import ObjectiveWeights, SolveReport, select_display, solve
from .metrics import eer, sampling_rate
from .rng import derive_key
from .samplers import STRATEGIES, sample_maxmin, sample_random, sample_uncertainty
from .scorer import Scorer, TrainConfig, score_batch, train

SESSION_SCHEMA_VERSION = 1
PHASES = ("awaiting_labels", "ready", "finished")


class SessionError(Exception):
    """Base class for session failures."""


class WrongPhaseError(SessionError):
    """Operation not valid in the session's current phase."""


class LabelValidationError(SessionError):
    """Submitted labels do not match the pending display."""


@dataclass(frozen=True)
class SessionConfig:
    strategy: str = "vexad"
    display_size: int = 16
    budget: int = 10
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    epsilon: float = 1e-3
    maxiter: int = 100
    seed: int = 0
    dataset: str = ""
    split_seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.display_size < 1 or self.budget < 1:
            raise ValueError("display_size and budget must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "display_size": self.display_size,
            "budget": self.budget,
            "weights": self.weights.to_json(),
            "train_cfg": {
                "l2_strength": self.train_cfg.l2_strength,
                "max_epochs": self.train_cfg.max_epochs,
                "grad_tol": self.train_cfg.grad_tol,
                "class_balanced": self.train_cfg.class_balanced,
                "seed": self.train_cfg.seed,
            },
            "epsilon": self.epsilon,
            "maxiter": self.maxiter,
            "seed": self.seed,
            "dataset": self.dataset,
            "split_seed": self.split_seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "SessionConfig":
        return SessionConfig(
            strategy=obj["strategy"],
            display_size=int(obj["display_size"]),
            budget=int(obj["budget"]),
            weights=ObjectiveWeights.from_json(obj["weights"]),
            train_cfg=TrainConfig(**obj["train_cfg"]),
            epsilon=float(obj["epsilon"]),
            maxiter=int(obj["maxiter"]),
            seed=int(obj["seed"]),
            dataset=obj.get("dataset", ""),
            split_seed=int(obj["split_seed"]),
        )


class Oracle(Protocol):
    def answer(self, ids: list[int]) -> dict[int, int]: ...


class GroundTruthOracle:
    """Simulated oracle: answers immediately with the stored labels."""

    def __init__(self, ds: Dataset):
        self._labels = ds.label_vector()

    def answer(self, ids: list[int]) -> dict[int, int]:
        return {int(i): int(self._labels[i]) for i in ids}


class Session:
    """Owns the loop state; at most one submit_labels may run at a time."""

    def __init__(self, config: SessionConfig, ds: Dataset, _restore: dict | None = None):
        self.config = config
        self.dataset = ds
        self.split: Split = split_half(ds, config.split_seed)
        pool = len(self.split.train_ids)
        if config.display_size * config.budget > pool:
            raise ValueError(
                f"display_size*budget = {config.display_size * config.budget} "
                f"exceeds train pool of {pool}")

        self.displays: list[list[int]] = []
        self.labels: list[list[int]] = []
        self.scorer: Scorer | None = None
        self.metrics: list[dict] = []
        self.solve_reports: list[SolveReport] = []
        self.phase: str = "awaiting_labels"
        if _restore is not None:
            self._restore(_restore)
        else:
            self.displays.append(self._initial_display())

    # --- derived state ---------------------------------------------------

    @property
    def t(self) -> int:
        """Completed iterations; also the index of the pending display."""
        return len(self.labels)

    @property
    def current_display(self) -> list[int]:
        if self.phase != "awaiting_labels":
            raise WrongPhaseError(f"no pending display in phase {self.phase!r}")
        return list(self.displays[-1])

    @property
    def labeled_ids(self) -> set[int]:
        return {i for d, _ in zip(self.displays, self.labels) for i in d}

    def _seed_for(self, purpose: str, t: int) -> int:
        return derive_key("session", self.config.seed, purpose, t)

    def _initial_display(self) -> list[int]:
        return sample_random(self.split.train_ids, (), self.config.display_size,
                             self._seed_for("display", 0))

    # --- the loop ---------------------------------------------------------

    def submit_labels(self, labels: Mapping[int, int]) -> None:
        """Record oracle answers for the pending display and advance.

        Retrains the scorer on every labeled pair so far, appends an eval
        metric record, and either selects the next display or finishes.
        Raises without mutating state if the labels do not exactly cover
        the pending display with values in {-1, +1}.
        """
        if self.phase != "awaiting_labels":
            raise WrongPhaseError(f"cannot submit labels in phase {self.phase!r}")
        display = self.displays[-1]
        given = {int(k): int(v) for k, v in labels.items()}
        extra = set(given) - set(display)
        missing = set(display) - set(given)
        if extra:
            raise LabelValidationError(f"labels for ids not in the pending display: {sorted(extra)}")
        if missing:
            raise LabelValidationError(f"missing labels for ids: {sorted(missing)}")
        bad = {i: v for i, v in given.items() if v not in (-1, 1)}
        if bad:
            raise LabelValidationError(f"label must be -1 or +1, got {bad}")

        self.labels.append([given[i] for i in display])
        self._retrain()
        self._record_metrics()
        if len(self.labels) < self.config.budget:
            self.displays.append(self._next_display())
            self.phase = "awaiting_labels"
        else:
            self.phase = "finished"

    def _retrain(self) -> None:
        ids = [i for d in self.displays[: len(self.labels)] for i in d]
        y = [v for row in self.labels for v in row]
        X = self.dataset.feature_matrix()[np.array(ids)]
        self.scorer = train(X, np.array(y), self.config.train_cfg)

    def _record_metrics(self) -> None:
        feats = self.dataset.feature_matrix()
        eval_ids = np.array(self.split.eval_ids)
        scores = score_batch(self.scorer, feats[eval_ids])
        truth = self.dataset.label_vector()[eval_ids]
        done = len(self.labels)
        self.metrics.append({
            "iter": done,
            "eer": eer(scores, truth),
            "samp_pct": sampling_rate(done, self.config.display_size, self.dataset.n),
        })

    def _next_display(self) -> list[int]:
        cfg = self.config
        feats = self.dataset.feature_matrix()
        pool = self.split.train_ids
        forbidden = {i for d in self.displays for i in d}
        t_next = len(self.labels)
        if cfg.strategy == "random":
            return sample_random(pool, forbidden, cfg.display_size,
                                 self._seed_for("display", t_next))
        if cfg.strategy == "maxmin":
            return sample_maxmin(feats, pool, forbidden, cfg.display_size)
        if cfg.strategy == "uncertainty":
            return sample_uncertainty(self.scorer, feats, pool, forbidden, cfg.display_size)
        # vexad: synthesize exemplars over the full train pool, then map to
        # the nearest not-yet-labeled real samples.
        X = feats[np.array(pool)].T
        _, V, report = solve(X, self.scorer, cfg.weights, cfg.display_size,
                             epsilon=cfg.epsilon, maxiter=cfg.maxiter,
                             seed=self._seed_for("solve", t_next))
        self.solve_reports.append(report)
        return select_display(V, feats, pool, forbidden)

    # --- persistence -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": SESSION_SCHEMA_VERSION,
            "config": self.config.to_json(),
            "t": self.t,
            "phase": self.phase,
            "displays": [list(d) for d in self.displays],
            "labels": [list(r) for r in self.labels],
            "scorer": self.scorer.to_json() if self.scorer is not None else None,
            "metrics": [dict(m) for m in self.metrics],
            "rng_state": {"scheme": "derived-philox", "seed": self.config.seed},
            "solve_reports": [r.to_json() for r in self.solve_reports],
        }

    def _restore(self, obj: dict) -> None:
        self.displays = [[int(i) for i in d] for d in obj["displays"]]
        self.labels = [[int(v) for v in r] for r in obj["labels"]]
        self.scorer = Scorer.from_json(obj["scorer"]) if obj["scorer"] else None
        self.metrics = [dict(m) for m in obj["metrics"]]
        self.solve_reports = [SolveReport(**r) for r in obj.get("solve_reports", [])]
        phase = obj["phase"]
        if phase not in PHASES:
            raise SessionError(f"unknown phase {phase!r}")
        self.phase = phase
        if int(obj["t"]) != self.t:
            raise SessionError("inconsistent session file: t does not match label history")

    @staticmethod
    def from_json(obj: dict, ds: Dataset) -> "Session":
        if not isinstance(obj, dict) or obj.get("version") != SESSION_SCHEMA_VERSION:
            raise SessionError(
                f"unsupported session schema version {obj.get('version') if isinstance(obj, dict) else obj!r}")
        config = SessionConfig.from_json(obj["config"])
        return Session(config, ds, _restore=obj)

    def save_state(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")


def load_state(path, ds: Dataset | None = None) -> Session:
    """Reload a saved session; the dataset is reloaded from its recorded
    path when not supplied."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SessionError(f"corrupt session file {path}: {exc}")
    if ds is None:
        if not isinstance(obj, dict) or not obj.get("config", {}).get("dataset"):
            raise SessionError("session file does not record a dataset path; pass one explicitly")
        ds = dataset_mod.load(obj["config"]["dataset"])
    return Session.from_json(obj, ds)


def start(config: SessionConfig, ds: Dataset) -> Session:
    """New session with a seeded random first display, awaiting labels."""
    return Session(config, ds)


def run_simulated(config: SessionConfig, ds: Dataset) -> Session:
    """Drive a session to completion with the ground-truth oracle."""
    session = Session(config, ds)
    oracle = GroundTruthOracle(ds)
    while session.phase == "awaiting_labels":
        session.submit_labels(oracle.answer(session.current_display))
    return session


def with_seed(config: SessionConfig, seed: int) -> SessionConfig:
    """Copy of config with a different session seed (split untouched)."""
    return replace(config, seed=seed)
