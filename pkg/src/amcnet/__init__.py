"""Modulation classification toolkit.

Synthetic I/Q dataset generation, a from-scratch multi-scale 1-D CNN
with joint softmax/center-loss training, and evaluation utilities.
"""

from .signals import (
    CLASS_NAMES,
    Dataset,
    GenConfig,
    IQFrame,
    ModulationScheme,
    add_awgn,
    filter_classes,
    filter_snrs,
    generate_dataset,
    modulate,
)
from .dataio import DatasetFormatError, read_dataset, write_dataset
from .network import MultiScaleNet, build_network
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .losses import (
    Centers,
    LossConfig,
    center_loss,
    center_update,
    cross_entropy,
    joint_loss,
    softmax,
)
from .training import (
    TrainConfig,
    TrainingDivergedError,
    train_two_stage,
    write_report,
)
from .evaluation import (
    FeatureDump,
    Metrics,
    evaluate,
    export_features,
    intra_class_dispersion,
    pca_2d,
    predict,
)

__all__ = [
    "CLASS_NAMES",
    "Dataset",
    "GenConfig",
    "IQFrame",
    "ModulationScheme",
    "add_awgn",
    "filter_classes",
    "filter_snrs",
    "generate_dataset",
    "modulate",
    "DatasetFormatError",
    "read_dataset",
    "write_dataset",
    "MultiScaleNet",
    "build_network",
    "CheckpointFormatError",
    "load_checkpoint",
    "save_checkpoint",
    "Centers",
    "LossConfig",
    "center_loss",
    "center_update",
    "cross_entropy",
    "joint_loss",
    "softmax",
    "TrainConfig",
    "TrainingDivergedError",
    "train_two_stage",
    "write_report",
    "FeatureDump",
    "Metrics",
    "evaluate",
    "export_features",
    "intra_class_dispersion",
    "pca_2d",
    "predict",
]

__version__ = "0.1.0"
