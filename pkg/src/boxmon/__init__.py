"""boxmon: box-abstraction runtime monitors over network features, with
symbolic (BDD-based) discovery of data-unsupported corner regions,
suffix-retraining repair against them, and corner-steering test input
generation."""

from .bdd import BddManager, BddRef
from .boxes import Box, CornerRegion
from .encoding import corner_region, encode, iter_corner_strings, vertex_of
from .errors import (
    BoxmonError,
    ConfigError,
    ConstructionError,
    DataError,
    EmptyDataError,
    EnumerationCapError,
    InputShapeError,
    LayerIndexError,
    ManagerMismatchError,
    NotACornerError,
    OutOfBoxError,
    ParseError,
    VariableIndexError,
)
from .benchmark import (
    BenchmarkArtifacts,
    BenchmarkSpec,
    DEFAULT_BENCHMARK,
    build_benchmark,
    moons_dataset,
    select_start,
)
from .monitor import BoxMonitor, ValidationReport
from .network import (
    DenseLayer,
    LabeledDataset,
    LossSpec,
    Network,
    TrainConfig,
    accuracy,
    feature_at,
    features_at,
    forward,
    forward_batch,
    forward_from,
    init_network,
    input_gradient,
    load_network,
    loss_value,
    save_network,
    train,
)
from .prioritize import (
    CornerReport,
    PrioritizationResult,
    all_corners_set,
    cross_box_filter,
    encode_training_set,
    hamming_expand,
    prioritize_box,
    prioritize_monitor,
)
from .repair import ModifyDataset, build_modify_dataset, repair
from .testgen import TestGenConfig, TestGenReport, corner_loss, generate_test_case

__version__ = "0.1.0"

__all__ = [
    "BddManager",
    "BddRef",
    "BenchmarkArtifacts",
    "BenchmarkSpec",
    "Box",
    "BoxMonitor",
    "DEFAULT_BENCHMARK",
    "BoxmonError",
    "ConfigError",
    "ConstructionError",
    "CornerRegion",
    "CornerReport",
    "DataError",
    "DenseLayer",
    "EmptyDataError",
    "EnumerationCapError",
    "InputShapeError",
    "LabeledDataset",
    "LayerIndexError",
    "LossSpec",
    "ManagerMismatchError",
    "ModifyDataset",
    "Network",
    "NotACornerError",
    "OutOfBoxError",
    "ParseError",
    "PrioritizationResult",
    "TestGenConfig",
    "TestGenReport",
    "TrainConfig",
    "ValidationReport",
    "VariableIndexError",
    "accuracy",
    "all_corners_set",
    "build_benchmark",
    "build_modify_dataset",
    "corner_loss",
    "corner_region",
    "cross_box_filter",
    "encode",
    "encode_training_set",
    "feature_at",
    "features_at",
    "forward",
    "forward_batch",
    "forward_from",
    "generate_test_case",
    "hamming_expand",
    "init_network",
    "input_gradient",
    "iter_corner_strings",
    "load_network",
    "loss_value",
    "moons_dataset",
    "prioritize_box",
    "prioritize_monitor",
    "repair",
    "save_network",
    "select_start",
    "train",
    "vertex_of",
    "__version__",
]
