"""Desk-scale CNN workbench: net description parsing, shape inference, a
training engine, dataset handling, experiments, a concurrent task hub, and an
HTTP/JSON gateway with a CLI."""

from convkit.netdef import (
    Diagnostic,
    LayerSpec,
    NetSpec,
    SolverConfig,
    Span,
    completion_context,
    derive_deploy,
    parse_net,
    parse_solver,
    serialize_net,
    serialize_solver,
)
from convkit.shapes import ShapeReport, infer_shapes
from convkit.datastore import Dataset, SplitSpec, import_folder, import_text, split
from convkit.engine import TrainedModel, TrainProgress, train
from convkit.experiment import FeatureSet, MetricsReport, evaluate, extract_features
from convkit.taskhub import TaskHub
from convkit.workbench import Workbench

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Diagnostic",
    "FeatureSet",
    "LayerSpec",
    "MetricsReport",
    "NetSpec",
    "ShapeReport",
    "SolverConfig",
    "Span",
    "SplitSpec",
    "TaskHub",
    "TrainProgress",
    "TrainedModel",
    "Workbench",
    "completion_context",
    "derive_deploy",
    "evaluate",
    "extract_features",
    "import_folder",
    "import_text",
    "infer_shapes",
    "parse_net",
    "parse_solver",
    "serialize_net",
    "serialize_solver",
    "split",
    "train",
    "__version__",
]
