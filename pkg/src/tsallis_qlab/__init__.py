"""Desk-scale numerical laboratory for quantum Tsallis entropy estimation.

Block-encodings, spectral QSVT, Hadamard/Shift tests and amplitude estimation
are simulated densely; query counts are tracked exactly in a
:class:`~tsallis_qlab.linalg.QueryLedger`.
"""

from .linalg import (
    DensityMatrix,
    Distribution,
    QueryLedger,
    StatePrepOracle,
    ValidationError,
    hellinger,
    partial_trace,
    purify,
    trace_power,
    tsallis_exact,
    tsallis_exact_dist,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "Distribution",
    "QueryLedger",
    "StatePrepOracle",
    "ValidationError",
    "hellinger",
    "partial_trace",
    "purify",
    "trace_power",
    "tsallis_exact",
    "tsallis_exact_dist",
]
