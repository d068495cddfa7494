"""Registry of known operations: traits and signature checks."""

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Union

from ..core.constants import (
    ATTR_ANGLE,
    ATTR_CALLEE,
    ATTR_CTRLS,
    ATTR_PREDICATE,
    ATTR_SIZE,
    ATTR_VALUE,
    CMP_PREDICATES,
    HERMITIAN_GATES,
    INPUT_DIALECT,
    NATIVE_GATES,
    OPT_DIALECT,
    ROTATION_GATES,
    Trait,
)
from ..core.errors import ArityMismatch, UnknownOpName
from .operation import Operation, Value
from .types import TypeKind

Check = Callable[[Operation], Optional[str]]


@dataclass(frozen=True)
class OpSpec:
    """Static description of one operation name."""
    name: str
    traits: FrozenSet[Trait] = frozenset()
    check: Optional[Check] = None
    pure: bool = False
    regions: int = 0
    tags: FrozenSet[str] = field(default_factory=frozenset)


# ======================
# Helpers shared by checks and passes
# ======================


def is_quantum_dialect(op: Operation) -> bool:
    return op.dialect in (INPUT_DIALECT, OPT_DIALECT)


def is_native_gate(op: Operation) -> bool:
    return is_quantum_dialect(op) and op.short_name in NATIVE_GATES


def is_rotation(op: Operation) -> bool:
    return is_quantum_dialect(op) and op.short_name in ROTATION_GATES


def angle_of(op: Operation) -> Union[float, Value, None]:
    """Static angle attribute or dynamic angle operand of a rotation gate."""
    if not is_rotation(op):
        return None
    if ATTR_ANGLE in op.attributes:
        return float(op.attr(ATTR_ANGLE))
    return op.operands[0] if op.num_main else None


def gate_targets(op: Operation) -> List[Value]:
    """Quantum operands of a native gate (the dynamic angle excluded)."""
    operands = op.main_operands
    if is_rotation(op) and ATTR_ANGLE not in op.attributes:
        operands = operands[1:]
    return operands


def is_gate_value_form(op: Operation) -> bool:
    """Native gate or meta-op producing a gate value instead of acting on qubits."""
    return bool(op.results) and op.results[0].type.is_gate_value and is_quantum_dialect(op)


def state_operands(op: Operation) -> List[Value]:
    return [v for v in op.main_operands if v.type.is_state]


def state_results(op: Operation) -> List[Value]:
    return [v for v in op.results if v.type.is_state]


# ======================
# Signature checks
# ======================


def _expect(count: int, expected, what: str) -> Optional[str]:
    if isinstance(expected, tuple):
        low, high = expected
        if count < low or (high is not None and count > high):
            bound = f"{low}..{high}" if high is not None else f">= {low}"
            return f"expected {bound} {what}, got {count}"
        return None
    if count != expected:
        return f"expected {expected} {what}, got {count}"
    return None


def _fixed(operands, results) -> Check:
    def check(op: Operation) -> Optional[str]:
        return _expect(op.num_main, operands, "operands") or _expect(len(op.results), results, "results")
    return check


def _check_gate(op: Operation) -> Optional[str]:
    arity = NATIVE_GATES[op.short_name]["qubits"]
    if op.short_name in ROTATION_GATES:
        has_attr = ATTR_ANGLE in op.attributes
        dynamic = op.num_main > 0 and op.operands[0].type.kind == TypeKind.FLOAT64
        if has_attr == dynamic:
            return "rotation needs exactly one of a static angle attribute or an f64 operand"
    targets = gate_targets(op)
    if not targets:
        if len(op.results) != 1 or not op.results[0].type.is_gate_value:
            return "gate value form yields exactly one gate value"
        return None
    if len(targets) != arity:
        # Register operands broadcast single-qubit gates.
        if not (arity == 1 and len(targets) == 1):
            return f"{op.short_name} acts on {arity} qubit(s), got {len(targets)}"
    if any(not t.type.is_quantum for t in targets):
        return f"{op.short_name} operands must be quantum"
    expected = 0 if op.dialect == INPUT_DIALECT else len(targets)
    return _expect(len(op.results), expected, "results")


def _check_alloc(op: Operation) -> Optional[str]:
    return _expect(op.num_main, 0, "operands") or _expect(len(op.results), 1, "results")


def _check_allocreg(op: Operation) -> Optional[str]:
    error = _expect(op.num_main, (0, 1), "operands") or _expect(len(op.results), 1, "results")
    if error:
        return error
    if op.num_main == 0 and ATTR_SIZE not in op.attributes:
        return "allocreg needs a size attribute or an index operand"
    return None


def _check_meas(op: Operation) -> Optional[str]:
    expected = 1 if op.dialect == INPUT_DIALECT else 2
    return _expect(op.num_main, 1, "operands") or _expect(len(op.results), expected, "results")


def _check_meta(op: Operation) -> Optional[str]:
    if op.num_main < 1:
        return "meta-operation needs a gate value operand"
    if not op.operands[0].type.is_gate_value:
        return "first operand must be a gate value"
    if op.short_name == "ctrl":
        ctrls = op.attr(ATTR_CTRLS, 0)
        if not isinstance(ctrls, int) or ctrls < 1:
            return "ctrl needs a positive ctrls attribute"
        if op.num_main > 1 and op.num_main < 2 + ctrls:
            return f"ctrl apply form needs {ctrls} control(s) and a target"
    if op.num_main == 1:
        return _expect(len(op.results), 1, "results")
    return _check_application_results(op)


def _check_apply(op: Operation) -> Optional[str]:
    if op.num_main < 1 or not op.operands[0].type.is_gate_value:
        return "apply needs a gate value operand"
    return _check_application_results(op)


def _check_application_results(op: Operation) -> Optional[str]:
    states = len(state_operands(op))
    if op.dialect == OPT_DIALECT and len(op.results) < states:
        return f"expected at least {states} state results, got {len(op.results)}"
    return None


def _check_callee(op: Operation) -> Optional[str]:
    if ATTR_CALLEE not in op.attributes:
        return "missing callee"
    return None


def _check_getval(op: Operation) -> Optional[str]:
    return _check_callee(op) or _fixed(0, 1)(op)


def _check_extract(op: Operation) -> Optional[str]:
    error = _expect(op.num_main, 1, "operands")
    if error:
        return error
    if not op.operands[0].type.is_register:
        return "extract operand must be a register state"
    return _expect(len(op.results), len(op.entries) + 1, "results")


def _check_combine(op: Operation) -> Optional[str]:
    error = _expect(op.num_main, len(op.entries) + 1, "operands")
    if error:
        return error
    return _expect(len(op.results), 1, "results")


def _check_constant(op: Operation) -> Optional[str]:
    if ATTR_VALUE not in op.attributes:
        return "constant needs a value"
    return _fixed(0, 1)(op)


def _check_cmpi(op: Operation) -> Optional[str]:
    if op.attr(ATTR_PREDICATE) not in CMP_PREDICATES:
        return f"predicate must be one of {', '.join(CMP_PREDICATES)}"
    return _fixed(2, 1)(op)


def _check_for(op: Operation) -> Optional[str]:
    if op.num_main < 3:
        return "loop needs lower bound, upper bound and step"
    return _expect(len(op.results), op.num_main - 3, "results")


def _check_branch(successors: int) -> Check:
    def check(op: Operation) -> Optional[str]:
        if len(op.successors) != successors:
            return f"expected {successors} successor(s), got {len(op.successors)}"
        return None
    return check


def _check_symbol(op: Operation) -> Optional[str]:
    if "sym_name" not in op.attributes:
        return "missing symbol name"
    return _fixed(0, 0)(op)


# ======================
# Registry
# ======================

_UNITARY = frozenset({Trait.UNITARY})
_HERMITIAN = frozenset({Trait.HERMITIAN, Trait.UNITARY})
_META = frozenset({Trait.META_OP, Trait.UNITARY})
_MANAGE = frozenset({Trait.QUBIT_MANAGEMENT})
_TERM = frozenset({Trait.TERMINATOR})
_ISOLATED = frozenset({Trait.ISOLATED_BODY})

INT_BINARY = ("addi", "subi", "muli", "divi", "remi", "shli", "shri", "andi", "ori", "xori", "maxi", "mini")
FLOAT_BINARY = ("addf", "subf", "mulf", "divf")
UNARY = ("negf", "sitofp", "fptosi")


def _build_registry() -> Dict[str, OpSpec]:
    specs: Dict[str, OpSpec] = {}

    def add(name: str, **kwargs) -> None:
        specs[name] = OpSpec(name=name, **kwargs)

    # Classical core
    add("func", traits=_ISOLATED, check=_check_symbol, regions=1)
    add("return", traits=_TERM)
    add("call", check=_check_callee)
    add("constant", check=_check_constant, pure=True)
    for name in INT_BINARY + FLOAT_BINARY:
        add(name, check=_fixed(2, 1), pure=True)
    for name in UNARY:
        add(name, check=_fixed(1, 1), pure=True)
    add("cmpi", check=_check_cmpi, pure=True)
    add("select", check=_fixed(3, 1), pure=True)
    add("bit_at", check=_fixed(2, 1), pure=True)
    add("alloc", check=_fixed((0, 1), 1))
    add("load", check=_fixed(2, 1))
    add("store", check=_fixed(3, 0))
    add("print")
    add("br", traits=_TERM, check=_check_branch(1))
    add("cond_br", traits=_TERM, check=_check_branch(2))
    add("scf.for", check=_check_for, regions=1)
    add("scf.if", check=_fixed(1, (0, None)), regions=2)
    add("scf.yield", traits=_TERM)
    add("affine.for", check=_check_for, regions=1)
    add("affine.yield", traits=_TERM)
    add("res.inc", check=_fixed((0, 1), 0))
    add("res.unknown", check=_fixed(0, 1))

    # Both quantum dialects
    for dialect in (INPUT_DIALECT, OPT_DIALECT):
        for gate in NATIVE_GATES:
            add(f"{dialect}.{gate}", traits=_HERMITIAN if gate in HERMITIAN_GATES else _UNITARY,
                check=_check_gate, tags=frozenset({"gate"}))
        add(f"{dialect}.circ", traits=_ISOLATED, check=_check_symbol, regions=1)
        add(f"{dialect}.return", traits=_TERM)
        add(f"{dialect}.alloc", traits=_MANAGE, check=_check_alloc)
        add(f"{dialect}.allocreg", traits=_MANAGE, check=_check_allocreg)
        add(f"{dialect}.free", traits=_MANAGE, check=_fixed(1, 0))
        add(f"{dialect}.freereg", traits=_MANAGE, check=_fixed(1, 0))
        add(f"{dialect}.meas", traits=_MANAGE, check=_check_meas)
        add(f"{dialect}.getval", check=_check_getval, pure=True)
        add(f"{dialect}.adj", traits=_META, check=_check_meta)
        add(f"{dialect}.ctrl", traits=_META, check=_check_meta)
        add(f"{dialect}.apply", check=_check_apply)
        add(f"{dialect}.call", check=_check_callee)

    add(f"{OPT_DIALECT}.extract", traits=_MANAGE, check=_check_extract)
    add(f"{OPT_DIALECT}.combine", traits=_MANAGE, check=_check_combine)
    return specs


REGISTRY: Dict[str, OpSpec] = _build_registry()


def lookup(name: str) -> OpSpec:
    spec = REGISTRY.get(name)
    if spec is None:
        raise UnknownOpName(f"unknown operation {name!r}")
    return spec


def trait_query(name: str) -> FrozenSet[Trait]:
    """Traits registered for an operation name.

    Raises:
        UnknownOpName: name is not registered
    """
    return lookup(name).traits


def op_traits(op: Operation) -> FrozenSet[Trait]:
    return lookup(op.name).traits


def check_signature(op: Operation) -> None:
    """Raise ArityMismatch when `op` violates its registered signature."""
    spec = lookup(op.name)
    if len(op.regions) != spec.regions:
        raise ArityMismatch(f"{op.name}: expected {spec.regions} region(s), got {len(op.regions)}")
    if spec.check is not None:
        error = spec.check(op)
        if error:
            raise ArityMismatch(f"{op.name}: {error}")


def is_pure(op: Operation) -> bool:
    """Side-effect free: safe to erase when its results are unused."""
    spec = REGISTRY.get(op.name)
    if spec is None:
        return False
    if spec.pure:
        return True
    return is_gate_value_form(op) and op.num_main <= 1
