"""Active-learning engine for rare binary change detection.

Each iteration synthesizes display exemplars by entropy-regularized
fixed-point minimization, maps them to real unlabeled samples, collects
oracle labels (simulated or human via the web UI), and retrains a
probabilistic scorer.
"""

from .dataset import Dataset, Sample, Split, generate_synthetic, load, save, split_half
from .display import (ObjectiveWeights, SolveReport, objective, select_display,
                      solve, sq_dist, update_exemplars, update_membership)
from .metrics import auc, eer, sampling_rate
from .samplers import STRATEGIES, sample_maxmin, sample_random, sample_uncertainty
from .scorer import Scorer, TrainConfig, score, score_batch, score_gradient, train
from .session import (GroundTruthOracle, Session, SessionConfig, load_state,
                      run_simulated, start)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "Sample", "Split", "generate_synthetic", "load", "save", "split_half",
    "ObjectiveWeights", "SolveReport", "objective", "select_display", "solve",
    "sq_dist", "update_exemplars", "update_membership",
    "auc", "eer", "sampling_rate",
    "STRATEGIES", "sample_maxmin", "sample_random", "sample_uncertainty",
    "Scorer", "TrainConfig", "score", "score_batch", "score_gradient", "train",
    "GroundTruthOracle", "Session", "SessionConfig", "load_state", "run_simulated", "start",
    "__version__",
]
