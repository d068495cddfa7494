"""Compiler constants and configuration tables."""

from enum import Enum
from typing import Dict, List

# ======================
# Dialects
# ======================

INPUT_DIALECT = "q"
OPT_DIALECT = "qs"
QUANTUM_DIALECTS = (INPUT_DIALECT, OPT_DIALECT)
RESOURCE_DIALECT = "res"


class Trait(str, Enum):
    """Operation traits."""
    HERMITIAN = "Hermitian"
    UNITARY = "Unitary"
    TERMINATOR = "Terminator"
    ISOLATED_BODY = "IsolatedBody"
    QUBIT_MANAGEMENT = "QubitManagement"
    META_OP = "MetaOp"


# ======================
# Native gates
# ======================

NATIVE_GATES: Dict[str, Dict] = {
    "H": {"qubits": 1, "hermitian": True, "axis": None, "gate_class": "H"},
    "X": {"qubits": 1, "hermitian": True, "axis": None, "gate_class": "X"},
    "Y": {"qubits": 1, "hermitian": True, "axis": None, "gate_class": "Y"},
    "Z": {"qubits": 1, "hermitian": True, "axis": None, "gate_class": "Z"},
    "S": {"qubits": 1, "hermitian": False, "axis": None, "gate_class": "S"},
    "T": {"qubits": 1, "hermitian": False, "axis": None, "gate_class": "T"},
    "R": {"qubits": 1, "hermitian": False, "axis": "phase", "gate_class": "rotation"},
    "Rx": {"qubits": 1, "hermitian": False, "axis": "x", "gate_class": "rotation"},
    "Ry": {"qubits": 1, "hermitian": False, "axis": "y", "gate_class": "rotation"},
    "Rz": {"qubits": 1, "hermitian": False, "axis": "z", "gate_class": "rotation"},
    "CX": {"qubits": 2, "hermitian": True, "axis": None, "gate_class": "CX"},
    "SWAP": {"qubits": 2, "hermitian": True, "axis": None, "gate_class": "SWAP"},
}

ROTATION_GATES = frozenset(g for g, spec in NATIVE_GATES.items() if spec["axis"])
HERMITIAN_GATES = frozenset(g for g, spec in NATIVE_GATES.items() if spec["hermitian"])
GATE_CLASSES: List[str] = ["H", "X", "Y", "Z", "S", "T", "rotation", "CX", "SWAP"]

# Angles closer to zero than this are treated as the identity rotation.
ANGLE_EPSILON = 1e-12

# ======================
# Meta-operation naming
# ======================

ADJOINT_SUFFIX = "__adj"
CONTROL_SUFFIX = "__ctl"
ADJOINT_MARKER = "adjoint_of"
CONTROL_MARKER = "control_of"

# Unit attributes understood by the passes
ATTR_COMPUTE = "compute"
ATTR_UNCOMPUTE = "uncompute"
ATTR_NO_INLINE = "no_inline"
ATTR_NO_INLINE_TARGET = "no_inline_target"
ATTR_CTRLS = "ctrls"
ATTR_ANGLE = "angle"
ATTR_SIZE = "size"
ATTR_PREDICATE = "predicate"
ATTR_VALUE = "value"
ATTR_CALLEE = "callee"

CMP_PREDICATES = ("eq", "ne", "slt", "sle", "sgt", "sge")

# ======================
# Pipeline
# ======================

DEFAULT_ENTRY = "mlir_main"
DEFAULT_FIXPOINT_CAP = 64
DEFAULT_STEP_LIMIT = 10 ** 10
COUNTER_MAX = 2 ** 64 - 1

# Optimizing pipeline; lower-adj runs before counting since counts need native gates.
DEFAULT_PIPELINE: List[str] = [
    "convert-mem-to-val",
    "lower-ctrl",
    "strip-circ",
    "canonicalize",
    "strip-circ",
    "circuit-inline",
    "strip-circ",
    "canonicalize",
    "strip-circ",
    "quantum-gate-opt",
    "canonicalize",
    "lower-adj",
    "canonicalize",
    "count-resources",
]

# Passes that only lower, used as the unoptimized baseline.
BASELINE_PIPELINE: List[str] = [
    "convert-mem-to-val",
    "lower-ctrl",
    "lower-adj",
    "count-resources",
]

QUANTUM_GATE_OPT_PARTS = ("hermitian", "adjoint", "rotation", "loop-boundary")

# ======================
# Cost model
# ======================

# 1-control rotation decomposition: two CX and three single-qubit rotations.
CONTROLLED_ROTATION_COST = {"rotation": 3, "CX": 2}
DEFAULT_MULTI_CONTROL_FACTOR = 2

# ======================
# Logging
# ======================

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
