"""uddpy - mergeable relative-error quantile sketches (DDSketch and UDDSketch)."""

__version__ = "0.1.0"

from .exceptions import (
    SketchError,
    ParameterError,
    DomainError,
    UnderflowError,
    SketchStateError,
    IncompatibleSketchError,
    CountOverflowError,
    RangeOverflowError,
    CodecError,
    FormatError,
    CorruptionError,
    TruncatedDataError,
    ConsistencyError,
)
from .mapping import (
    gamma_from_alpha,
    alpha_from_gamma,
    gamma_for_epoch,
    bucket_index,
    value_estimate,
    quantile_rank,
)
from .store import BucketStore
from .sketch import (
    CollapsePolicy,
    SketchConfig,
    QuantileSketch,
    TwoSidedSketch,
    gamma_bound,
    parse_policy,
)
from .merge import MergeStats, align_epochs, merge, merge_two_sided, merge_with_stats
from .reduction import (
    TreeShape,
    ReductionPlan,
    PartitionLayout,
    partition_stream,
    build_sketch,
    build_leaf_sketches,
    reduce_sketches,
    reduce_with_stats,
)
from .codec import (
    encode,
    decode,
    to_text,
    from_text,
    encode_data,
    decode_data,
    read_sketch,
    write_sketch,
    read_data_file,
    write_data_file,
)
from .generators import StreamSpec, generate_stream, generate_interleaved_ops
from .evaluation import (
    AccuracyReport,
    TimingStats,
    ExperimentResult,
    exact_quantile,
    error_profile,
    q0_accuracy,
    run_experiment,
    run_sweep,
    run_deletion_check,
)
from .config import ExperimentConfig, load_experiment_config
from .main import main

__all__ = [
    "SketchError",
    "ParameterError",
    "DomainError",
    "UnderflowError",
    "SketchStateError",
    "IncompatibleSketchError",
    "CountOverflowError",
    "RangeOverflowError",
    "CodecError",
    "FormatError",
    "CorruptionError",
    "TruncatedDataError",
    "ConsistencyError",
    "gamma_from_alpha",
    "alpha_from_gamma",
    "gamma_for_epoch",
    "bucket_index",
    "value_estimate",
    "quantile_rank",
    "BucketStore",
    "CollapsePolicy",
    "SketchConfig",
    "QuantileSketch",
    "TwoSidedSketch",
    "gamma_bound",
    "parse_policy",
    "MergeStats",
    "align_epochs",
    "merge",
    "merge_two_sided",
    "merge_with_stats",
    "TreeShape",
    "ReductionPlan",
    "PartitionLayout",
    "partition_stream",
    "build_sketch",
    "build_leaf_sketches",
    "reduce_sketches",
    "reduce_with_stats",
    "encode",
    "decode",
    "to_text",
    "from_text",
    "encode_data",
    "decode_data",
    "read_sketch",
    "write_sketch",
    "read_data_file",
    "write_data_file",
    "StreamSpec",
    "generate_stream",
    "generate_interleaved_ops",
    "AccuracyReport",
    "TimingStats",
    "ExperimentResult",
    "exact_quantile",
    "error_profile",
    "q0_accuracy",
    "run_experiment",
    "run_sweep",
    "run_deletion_check",
    "ExperimentConfig",
    "load_experiment_config",
    "main",
]
