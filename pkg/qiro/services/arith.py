"""Evaluation of classical operations, shared by constant folding and the interpreter."""

import math
from typing import Any, Callable, Dict, Sequence

import numpy as np

from ..core.errors import Trap
from ..models.types import TypeDesc, TypeKind

INDEX_WIDTH = 64


def wrap(value: int, type_: TypeDesc) -> int:
    """Two's-complement wrap of `value` into the width of `type_`; i1 stays 0/1."""
    if type_.kind == TypeKind.INT:
        width = type_.width
        if width == 1:
            return value & 1
    elif type_.kind == TypeKind.INDEX:
        width = INDEX_WIDTH
    else:
        return value
    mask = (1 << width) - 1
    value &= mask
    return value - (1 << width) if value >> (width - 1) else value


def _divi(a: int, b: int) -> int:
    if b == 0:
        raise Trap("integer division by zero")
    quotient = abs(a) // abs(b)
    return quotient if (a < 0) == (b < 0) else -quotient


def _remi(a: int, b: int) -> int:
    if b == 0:
        raise Trap("integer remainder by zero")
    return a - b * _divi(a, b)


def _shift(a: int, b: int, left: bool) -> int:
    if b < 0 or b >= 64:
        raise Trap(f"shift amount {b} out of range")
    return a << b if left else a >> b


def _divf(a: float, b: float) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.float64(a) / np.float64(b))


def _fptosi(a: float) -> int:
    if math.isnan(a) or math.isinf(a):
        raise Trap(f"cannot convert {a} to an integer")
    return int(a)


INT_OPS: Dict[str, Callable[[int, int], int]] = {
    "addi": lambda a, b: a + b,
    "subi": lambda a, b: a - b,
    "muli": lambda a, b: a * b,
    "divi": _divi,
    "remi": _remi,
    "shli": lambda a, b: _shift(a, b, True),
    "shri": lambda a, b: _shift(a, b, False),
    "andi": lambda a, b: a & b,
    "ori": lambda a, b: a | b,
    "xori": lambda a, b: a ^ b,
    "maxi": max,
    "mini": min,
}

FLOAT_OPS: Dict[str, Callable[[float, float], float]] = {
    "addf": lambda a, b: a + b,
    "subf": lambda a, b: a - b,
    "mulf": lambda a, b: a * b,
    "divf": _divf,
}

COMPARISONS: Dict[str, Callable[[int, int], bool]] = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "slt": lambda a, b: a < b,
    "sle": lambda a, b: a <= b,
    "sgt": lambda a, b: a > b,
    "sge": lambda a, b: a >= b,
}

FOLDABLE = frozenset(INT_OPS) | frozenset(FLOAT_OPS) | {"cmpi", "select", "negf", "sitofp", "fptosi", "bit_at"}


def evaluate(name: str, operands: Sequence[Any], result_type: TypeDesc, predicate: str = "") -> Any:
    """Compute one classical operation on concrete values.

    Args:
        name: Operation name (one of FOLDABLE)
        operands: Concrete operand values
        result_type: Type of the single result, used for integer wrapping
        predicate: Comparison predicate for `cmpi`

    Returns:
        The result value (int or float)

    Raises:
        Trap: division by zero, bad shift or a non-finite float conversion
    """
    if name in INT_OPS:
        return wrap(INT_OPS[name](int(operands[0]), int(operands[1])), result_type)
    if name in FLOAT_OPS:
        return float(FLOAT_OPS[name](float(operands[0]), float(operands[1])))
    if name == "cmpi":
        return int(COMPARISONS[predicate](operands[0], operands[1]))
    if name == "select":
        return operands[1] if operands[0] else operands[2]
    if name == "negf":
        return -float(operands[0])
    if name == "sitofp":
        return float(operands[0])
    if name == "fptosi":
        return wrap(_fptosi(float(operands[0])), result_type)
    if name == "bit_at":
        index = int(operands[1])
        if index < 0:
            raise Trap(f"negative bit index {index}")
        return (int(operands[0]) >> index) & 1
    raise KeyError(name)
