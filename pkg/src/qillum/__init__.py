"""Quantum illumination of a lossy target in a truncated Fock space.

The signal passes an environment beam splitter (reflectivity ``eta``), a
target beam splitter (reflectivity ``p``) and picks up a phase ``phi``.
The package provides closed-form and numeric SNRs, gains, the quantum
Chernoff bound and the Helstrom bound for coherent-state and two-mode
squeezed-state probes, plus a CLI for sweeps and figure recipes.
"""

from qillum.channel import (
    HypothesisPair,
    PortConvention,
    Probe,
    ProtocolParams,
    hypothesis_states,
    returned_moments,
)
from qillum.fock import TruncationError
from qillum.metrics import (
    gain,
    gain_db,
    helstrom,
    multi_copy_bound,
    numeric_snr,
    phase_averaged_gain,
    qcb,
    snr_classical,
    snr_quantum,
)

__version__ = "0.1.0"

__all__ = [
    "HypothesisPair",
    "PortConvention",
    "Probe",
    "ProtocolParams",
    "TruncationError",
    "gain",
    "gain_db",
    "helstrom",
    "hypothesis_states",
    "multi_copy_bound",
    "numeric_snr",
    "phase_averaged_gain",
    "qcb",
    "returned_moments",
    "snr_classical",
    "snr_quantum",
]
