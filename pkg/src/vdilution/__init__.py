"""Virtual distillation under diluted i.i.d. loss and Pauli noise."""

__version__ = "0.1.0"

from .linalg import DensityOp, HilbertSpace, InvariantError, UnitaryOp  # noqa: E402
from .channels import DecayModel, LossNoise, PauliNoise  # noqa: E402
from .unitaries import CircuitSpec, RngStream  # noqa: E402
from .pipeline import DilutionPlan, PipelineOutput, run  # noqa: E402
from .distill import distill, dominant_eigenstate, mse  # noqa: E402

__all__ = [
    "CircuitSpec", "DecayModel", "DensityOp", "DilutionPlan", "HilbertSpace", "InvariantError",
    "LossNoise", "PauliNoise", "PipelineOutput", "RngStream", "UnitaryOp",
    "distill", "dominant_eigenstate", "mse", "run",
]
