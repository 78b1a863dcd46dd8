"""Calibrated single index models: learn a sparse / group-sparse / low-rank
weight vector and a monotone 1-Lipschitz link together."""
__version__ = "0.1.0"

from .atoms import (
    GraphLowRankProjector,
    GroupProjector,
    LowRankProjector,
    SparseProjector,
    atomic_cardinality_upper,
    build_graph_factors,
    project,
)
from .data import CLASSIFICATION, REGRESSION, Dataset, FeatureMatrix, matvec, standardize, transpose_matvec
from .links import IDENTITY, LOGISTIC, KnownLink
from .lpav import MonotoneLink, link_eval, lpav_fit
from .metrics import EvalResult, accuracy, auc, f1, mse
from .model import SimModel
from .solver import FitReport, TrainConfig, calibrated_loss, csi_fit, gradient
from .synth import SynthSpec, convergence_experiment, generate
