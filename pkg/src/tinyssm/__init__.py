"""Runtime-free fp32 inference engine for single-block Mamba classifiers.

The package covers four concerns: numerical kernels for the selective
state-space scan (a materializing reference path and a fused streaming
path that match bit for bit), a static arena planner that exploits
buffer lifetimes, binary serialization for weights and features, and a
fidelity harness with a command-line front end.
"""

from .bundle_io import (
    REQUIRED_ENTRIES,
    read_bundle,
    read_features,
    write_bundle,
    write_features,
)
from .errors import (
    BundleConsistencyError,
    BundleError,
    BundleFormatError,
    DimensionError,
    EngineError,
    HarnessError,
    ScheduleError,
    StabilityError,
)
from .harness import (
    BenchResult,
    FidelityReport,
    bench_paths,
    compare_engine_vs_dump,
    compare_fused_vs_reference,
    parse_report,
    run_samples,
    summarize_diffs,
)
from .mamba_block import (
    MambaBlockParams,
    MambaConfig,
    mamba_forward,
    mamba_forward_reference,
)
from .memory_planner import (
    BufferSpec,
    MemoryPlan,
    OpSchedule,
    PlanReport,
    ScheduleStep,
    arena_bytes,
    build_schedule,
    derive_lifetimes,
    format_plan,
    format_plan_report,
    format_schedule,
    liveness_lower_bound,
    parse_plan,
    parse_plan_report,
    parse_schedule,
    peak_ram_report,
    plan_offsets,
)
from .model_zoo import (
    ClassifierConfig,
    ClassifierParams,
    ForwardTrace,
    classifier_forward,
    classifier_trace,
    predict,
    preset_config,
    synth_features,
    synth_params,
)
from .ssm_core import (
    DiscretizedTensors,
    ScanInputs,
    ScanWorkspace,
    discretize_reference,
    fused_state_bytes,
    selective_scan_fused,
    selective_scan_reference,
    unfused_intermediate_bytes,
)
from .tensor_core import (
    argmax,
    as_tensor,
    depthwise_conv1d_causal,
    linear,
    max_pool_time,
    mean_pool_time,
    silu,
    softplus,
)

__version__ = "0.1.0"

__all__ = [
    "BenchResult",
    "BufferSpec",
    "BundleConsistencyError",
    "BundleError",
    "BundleFormatError",
    "ClassifierConfig",
    "ClassifierParams",
    "DimensionError",
    "DiscretizedTensors",
    "EngineError",
    "FidelityReport",
    "ForwardTrace",
    "HarnessError",
    "MambaBlockParams",
    "MambaConfig",
    "MemoryPlan",
    "OpSchedule",
    "PlanReport",
    "REQUIRED_ENTRIES",
    "ScanInputs",
    "ScanWorkspace",
    "ScheduleError",
    "ScheduleStep",
    "StabilityError",
    "arena_bytes",
    "argmax",
    "as_tensor",
    "bench_paths",
    "build_schedule",
    "classifier_forward",
    "classifier_trace",
    "compare_engine_vs_dump",
    "compare_fused_vs_reference",
    "depthwise_conv1d_causal",
    "derive_lifetimes",
    "discretize_reference",
    "format_plan",
    "format_plan_report",
    "format_schedule",
    "fused_state_bytes",
    "linear",
    "liveness_lower_bound",
    "mamba_forward",
    "mamba_forward_reference",
    "max_pool_time",
    "mean_pool_time",
    "parse_plan",
    "parse_plan_report",
    "parse_report",
    "parse_schedule",
    "peak_ram_report",
    "plan_offsets",
    "predict",
    "preset_config",
    "read_bundle",
    "read_features",
    "run_samples",
    "selective_scan_fused",
    "selective_scan_reference",
    "silu",
    "softplus",
    "summarize_diffs",
    "synth_features",
    "synth_params",
    "unfused_intermediate_bytes",
    "write_bundle",
    "write_features",
]
