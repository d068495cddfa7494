"""Semantic types of IR values."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional


class TypeKind(str, Enum):
    """Type constructors."""
    INT = "int"
    FLOAT64 = "f64"
    INDEX = "index"
    BITVEC = "bitvec"
    MEMBUF = "memref"
    QUBIT = "qubit"
    QUREG = "qureg"
    QSTATE = "qstate"
    RSTATE = "rstate"
    U1 = "u1"
    U2 = "u2"
    CIRC = "circ"
    COP = "cop"


@dataclass(frozen=True)
class TypeDesc:
    """A value type.

    Only the fields relevant to `kind` are set: `width` for INT, `size` for
    BITVEC/MEMBUF/QUREG/RSTATE (None means dynamic), `elem` for MEMBUF,
    `num_controls` and `base` for COP.
    """

    kind: TypeKind
    width: Optional[int] = None
    size: Optional[int] = None
    elem: Optional["TypeDesc"] = None
    num_controls: int = 0
    base: Optional["TypeDesc"] = None

    def __post_init__(self):
        if self.kind in (TypeKind.QUREG, TypeKind.RSTATE) and self.size is not None and self.size < 1:
            raise ValueError(f"{self.kind.value} size must be >= 1, got {self.size}")
        if self.kind == TypeKind.COP:
            if self.base is None or self.base.kind not in GATE_VALUE_KINDS:
                raise ValueError("cop base must be u1, u2, circ or cop")
            if self.num_controls < 1:
                raise ValueError("cop needs at least one control")

    # Predicates

    @property
    def is_state(self) -> bool:
        return self.kind in (TypeKind.QSTATE, TypeKind.RSTATE)

    @property
    def is_quantum_ref(self) -> bool:
        return self.kind in (TypeKind.QUBIT, TypeKind.QUREG)

    @property
    def is_quantum(self) -> bool:
        return self.is_state or self.is_quantum_ref

    @property
    def is_register(self) -> bool:
        return self.kind in (TypeKind.QUREG, TypeKind.RSTATE)

    @property
    def is_gate_value(self) -> bool:
        return self.kind in GATE_VALUE_KINDS

    @property
    def is_classical(self) -> bool:
        return self.kind in CLASSICAL_KINDS

    @property
    def total_controls(self) -> int:
        """Controls accumulated through nested cop types."""
        if self.kind != TypeKind.COP:
            return 0
        return self.num_controls + self.base.total_controls

    def compatible(self, other: "TypeDesc") -> bool:
        """Whether a value of `other` may stand in for a value of this type.

        Register sizes are not compared: holes are tracked by dataflow, not types.
        """
        if self.kind != other.kind:
            return False
        if self.kind in (TypeKind.QUREG, TypeKind.RSTATE):
            return True
        return self == other

    def __str__(self) -> str:
        kind = self.kind
        if kind == TypeKind.INT:
            return f"i{self.width}"
        if kind in (TypeKind.FLOAT64, TypeKind.INDEX):
            return kind.value
        if kind == TypeKind.BITVEC:
            return f"bitvec<{_size_text(self.size)}>"
        if kind == TypeKind.MEMBUF:
            return f"memref<{_size_text(self.size)} x {self.elem}>"
        if kind == TypeKind.QUBIT:
            return "!q.qubit"
        if kind == TypeKind.QUREG:
            return f"!q.qureg<{_size_text(self.size)}>"
        if kind == TypeKind.QSTATE:
            return "!qs.qstate"
        if kind == TypeKind.RSTATE:
            return f"!qs.rstate<{_size_text(self.size)}>"
        if kind == TypeKind.COP:
            return f"!q.cop<{self.num_controls}, {self.base}>"
        return f"!q.{kind.value}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "text": str(self)}


def _size_text(size: Optional[int]) -> str:
    return "?" if size is None else str(size)


GATE_VALUE_KINDS = frozenset({TypeKind.U1, TypeKind.U2, TypeKind.CIRC, TypeKind.COP})
CLASSICAL_KINDS = frozenset({TypeKind.INT, TypeKind.FLOAT64, TypeKind.INDEX, TypeKind.BITVEC, TypeKind.MEMBUF})

# ======================
# Constructors
# ======================


def int_type(width: int) -> TypeDesc:
    return TypeDesc(TypeKind.INT, width=width)


I1 = int_type(1)
I64 = int_type(64)
F64 = TypeDesc(TypeKind.FLOAT64)
INDEX = TypeDesc(TypeKind.INDEX)
QUBIT = TypeDesc(TypeKind.QUBIT)
QSTATE = TypeDesc(TypeKind.QSTATE)
U1 = TypeDesc(TypeKind.U1)
U2 = TypeDesc(TypeKind.U2)
CIRC = TypeDesc(TypeKind.CIRC)


def bitvec(size: Optional[int]) -> TypeDesc:
    return TypeDesc(TypeKind.BITVEC, size=size)


def memref(size: Optional[int], elem: TypeDesc) -> TypeDesc:
    return TypeDesc(TypeKind.MEMBUF, size=size, elem=elem)


def qureg(size: Optional[int] = None) -> TypeDesc:
    return TypeDesc(TypeKind.QUREG, size=size)


def rstate(size: Optional[int] = None) -> TypeDesc:
    return TypeDesc(TypeKind.RSTATE, size=size)


def cop(num_controls: int, base: TypeDesc) -> TypeDesc:
    return TypeDesc(TypeKind.COP, num_controls=num_controls, base=base)


def state_type_for(ref_type: TypeDesc) -> TypeDesc:
    """Value-semantics type of a memory-semantics reference type."""
    if ref_type.kind == TypeKind.QUBIT:
        return QSTATE
    if ref_type.kind == TypeKind.QUREG:
        return rstate(ref_type.size)
    return ref_type


def gate_value_type(num_qubits: int) -> TypeDesc:
    return U1 if num_qubits == 1 else U2
