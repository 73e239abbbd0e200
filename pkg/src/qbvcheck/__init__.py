"""Bit-vector verification of quantum error detection and entanglement circuits."""

from __future__ import annotations

__version__ = "0.1.0"

from .circuit import (
    FREE,
    ZERO,
    AbstractQubitState,
    Circuit,
    Diagnostic,
    Gate,
    GateKind,
    QubitDecl,
    Role,
    check_circuit,
    make_circuit,
    parse_circuit,
    serialize_circuit,
    validate_circuit,
)
from .errors import (
    BindingError,
    CircuitError,
    ModelParseError,
    MutationError,
    OracleCapExceeded,
    PreconditionError,
    QbvError,
    SolverError,
)
from .faults import (
    FaultClass,
    FaultDescriptor,
    enumerate_faults,
    mutate,
    sample_fault_pairs,
)
from .generators import (
    GhzTopology,
    from_family,
    gen_bell,
    gen_bitflip_detect,
    gen_ghz,
    gen_shor9_phase_detect,
)
from .oracle import OracleReport, enumerate_check
from .properties import PropertyId, PropertySpec, bind_property, postconditions, preconditions
from .semantics import evaluate, singular
from .smt import Counterexample, Status, VerificationVerdict, decode_model, encode, run_solver, verify_smt

import types as _types

__all__ = [
    name for name, obj in list(globals().items())
    if not name.startswith("_") and name != "annotations" and not isinstance(obj, _types.ModuleType)
]
