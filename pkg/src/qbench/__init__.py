"""Application-oriented quantum benchmarks with a self-contained simulator stack."""
__version__ = "0.1.0"

from .benchmarks import BenchmarkInstance, generate
from .circuit import Circuit, CircuitBuilder, GateKind, Instruction
from .metrics import hellinger_fidelity, polarization_fidelity
from .simulator import Counts, exact_distribution, run_shots

__all__ = [
    "__version__", "BenchmarkInstance", "generate", "Circuit", "CircuitBuilder", "GateKind",
    "Instruction", "hellinger_fidelity", "polarization_fidelity", "Counts", "exact_distribution",
    "run_shots",
]
