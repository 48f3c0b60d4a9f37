"""Checkpoint exporter and golden-dump producer for the tinyssm engine."""

from .bundle import (
    ENTRY_ORDER,
    POOLING_CODES,
    read_bundle,
    read_features,
    write_bundle,
    write_features,
)
from .errors import ExportError, FormatError, ManifestError
from .export import config_fields, export_bundle, import_bundle
from .dump import dump_activations
from .manifest import (
    TRANSFORMS,
    apply_transform,
    default_manifest,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from .model import (
    ModelConfig,
    SequenceClassifier,
    load_checkpoint,
    save_checkpoint,
    selective_scan,
)
from .train import synth_dataset, train_toy

__version__ = "0.1.0"

__all__ = [
    "ENTRY_ORDER",
    "ExportError",
    "FormatError",
    "ManifestError",
    "ModelConfig",
    "POOLING_CODES",
    "SequenceClassifier",
    "TRANSFORMS",
    "apply_transform",
    "config_fields",
    "default_manifest",
    "dump_activations",
    "export_bundle",
    "import_bundle",
    "load_checkpoint",
    "load_manifest",
    "read_bundle",
    "read_features",
    "save_checkpoint",
    "save_manifest",
    "selective_scan",
    "synth_dataset",
    "train_toy",
    "validate_manifest",
    "write_bundle",
    "write_features",
]
