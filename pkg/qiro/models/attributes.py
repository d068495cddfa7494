"""Operation attributes."""

from dataclasses import dataclass
from typing import Any, Tuple, Union

from ..core.utils import format_float


@dataclass(frozen=True)
class IntAttr:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class FloatAttr:
    value: float

    def __str__(self) -> str:
        return format_float(self.value)


@dataclass(frozen=True)
class StringAttr:
    value: str

    def __str__(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class SymbolRefAttr:
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


@dataclass(frozen=True)
class UnitAttr:
    """Marker attribute; only its key carries meaning."""

    def __str__(self) -> str:
        return ""


@dataclass(frozen=True)
class ListAttr:
    items: Tuple["Attribute", ...]

    def __str__(self) -> str:
        return "[" + ", ".join(str(item) for item in self.items) + "]"


Attribute = Union[IntAttr, FloatAttr, StringAttr, SymbolRefAttr, UnitAttr, ListAttr]

UNIT = UnitAttr()


def attr_value(attr: Attribute) -> Any:
    """Plain Python value of an attribute."""
    if isinstance(attr, (IntAttr, FloatAttr, StringAttr)):
        return attr.value
    if isinstance(attr, SymbolRefAttr):
        return attr.name
    if isinstance(attr, ListAttr):
        return [attr_value(item) for item in attr.items]
    return True


def to_attr(value: Any) -> Attribute:
    """Wrap a plain Python value; bools become unit markers."""
    if isinstance(value, (IntAttr, FloatAttr, StringAttr, SymbolRefAttr, UnitAttr, ListAttr)):
        return value
    if value is True:
        return UNIT
    if isinstance(value, int):
        return IntAttr(value)
    if isinstance(value, float):
        return FloatAttr(value)
    if isinstance(value, str):
        return StringAttr(value)
    if isinstance(value, (list, tuple)):
        return ListAttr(tuple(to_attr(v) for v in value))
    raise TypeError(f"cannot convert {value!r} to an attribute")
