"""Parametric print-scan channel simulation and difference diagnostics."""

from .simulate import (
    ICC_MISMATCH_MATRIX,
    PRESETS,
    PrintScanParams,
    artifact_energy,
    difference_image,
    load_preset,
    realized_geometry,
    resample,
    simulate_print_scan,
)

__all__ = [
    "ICC_MISMATCH_MATRIX",
    "PRESETS",
    "PrintScanParams",
    "artifact_energy",
    "difference_image",
    "load_preset",
    "realized_geometry",
    "resample",
    "simulate_print_scan",
]
