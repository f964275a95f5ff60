"""Direct sampling reconstruction of penetrable scatterers from near-field data."""

from .specfun import WaveContext
from .media import Component, Medium, Shape, preset_medium, preset_shapes
from .forward import ScatteringProblem, SolverOptions, mie_disk_reference
from .synth import MeasurementCircle, NearFieldData, add_noise, build_circle, generate_data

__all__ = [
    "WaveContext", "Component", "Medium", "Shape", "preset_medium", "preset_shapes",
    "ScatteringProblem", "SolverOptions", "mie_disk_reference",
    "MeasurementCircle", "NearFieldData", "add_noise", "build_circle", "generate_data",
]
