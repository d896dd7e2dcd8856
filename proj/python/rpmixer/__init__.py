"""RPMixer forecasting core: model, data, metrics and the experiment CLI."""

from ._rpmixer import (
    DataError,
    DimensionError,
    InputError,
    Model,
    TrainingError,
    UsageError,
    compute_metrics,
    evaluate,
    generate_synthetic,
    irfft,
    jl_check,
    load_dataset,
    main,
    metric_report,
    parse_config,
    projection_width,
    rfft,
    save_dataset,
    train,
)

__all__ = [
    "DataError",
    "DimensionError",
    "InputError",
    "Model",
    "TrainingError",
    "UsageError",
    "compute_metrics",
    "evaluate",
    "generate_synthetic",
    "irfft",
    "jl_check",
    "load_dataset",
    "main",
    "metric_report",
    "parse_config",
    "projection_width",
    "rfft",
    "save_dataset",
    "train",
]
