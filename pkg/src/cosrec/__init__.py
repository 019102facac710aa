"""CosRec: a convolutional sequential recommender, trained from scratch.

The package is framework-free: layers, gradients and the optimizer are
implemented directly on numpy arrays, with a scikit-learn style
estimator surface on top and a CLI for the full preprocess / train /
evaluate / export pipeline.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import (
    Dataset,
    NegativeSampler,
    ParseError,
    RawInteraction,
    TrainWindow,
    Windows,
    carve_validation,
    generate_windows,
    latest_window,
    load_dataset,
    parse_gowalla,
    parse_movielens,
    preprocess,
    save_dataset,
)
from .estimators import CosRec, PopularityRecommender, score
from .metrics import (
    MetricsReport,
    average_precision,
    evaluate,
    precision_recall_at,
    rank_items,
)
from .model import (
    PADDING_ITEM,
    CosRecModel,
    ModelConfig,
    pairwise_encode,
    pairwise_encode_backward,
    ranking_loss,
)
from .optim import Adam
from .tensor import ShapeError
from .training import TrainResult, train_model

__version__ = "1.0.0"

__all__ = [
    "Adam",
    "Checkpoint",
    "CosRec",
    "CosRecModel",
    "Dataset",
    "MetricsReport",
    "ModelConfig",
    "NegativeSampler",
    "PADDING_ITEM",
    "ParseError",
    "PopularityRecommender",
    "RawInteraction",
    "ShapeError",
    "TrainResult",
    "TrainWindow",
    "Windows",
    "average_precision",
    "carve_validation",
    "evaluate",
    "generate_windows",
    "latest_window",
    "load_checkpoint",
    "load_dataset",
    "pairwise_encode",
    "pairwise_encode_backward",
    "parse_gowalla",
    "parse_movielens",
    "precision_recall_at",
    "preprocess",
    "rank_items",
    "ranking_loss",
    "save_checkpoint",
    "save_dataset",
    "score",
    "train_model",
    "__version__",
]
