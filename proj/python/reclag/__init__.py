"""Modern Hopfield networks with a RecLag memory Lagrangian for OOD detection."""

from ._reclag import (
    DensityModel,
    adiabatic_energy,
    calibrate_gamma,
    capture_radius,
    demo_model,
    estimate_log_partition,
    export_landscape,
    fpr_at_tpr,
    gate_value,
    gen_gaussian_mixture,
    gen_uniform_ring,
    modern_energy,
    read_features,
    read_model,
    reclag_update,
    roc_and_auc,
    train,
    vanilla_update,
    write_features,
    write_model,
)

__all__ = [
    "DensityModel",
    "adiabatic_energy",
    "calibrate_gamma",
    "capture_radius",
    "demo_model",
    "estimate_log_partition",
    "export_landscape",
    "fpr_at_tpr",
    "gate_value",
    "gen_gaussian_mixture",
    "gen_uniform_ring",
    "modern_energy",
    "read_features",
    "read_model",
    "reclag_update",
    "roc_and_auc",
    "train",
    "vanilla_update",
    "write_features",
    "write_model",
]
