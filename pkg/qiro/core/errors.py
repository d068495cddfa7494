"""Exception hierarchy shared by every stage of the toolkit."""

from typing import List, Optional, Sequence


class QiroError(Exception):
    """Base class for all toolkit errors."""


# ======================
# IR construction
# ======================


class IRError(QiroError):
    """Raised when an IR mutation would break an invariant."""


class UnknownOpName(IRError):
    """Operation name is not in any registry."""


class ArityMismatch(IRError):
    """Operand or result count violates the op signature."""


class TypeMismatch(IRError):
    """Replacement or operand type is incompatible."""


class HasLiveUses(IRError):
    """Erasing an operation whose results are still used."""


# ======================
# Front end
# ======================


class ParseError(QiroError):
    """Syntax errors, carrying one SourceDiagnostic per problem."""

    def __init__(self, diagnostics: Sequence["object"]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class VerificationError(QiroError):
    """Raised by callers that require a verified module."""

    def __init__(self, diagnostics: Sequence["object"], stage: Optional[str] = None):
        self.diagnostics = list(diagnostics)
        self.stage = stage
        prefix = f"after {stage}: " if stage else ""
        super().__init__(prefix + "; ".join(str(d) for d in self.diagnostics))


# ======================
# Transformations
# ======================


class UnsupportedConstruct(QiroError):
    """Input uses a construct the pass does not handle."""


class RecursionDetected(QiroError):
    """The circuit call graph has a cycle."""

    def __init__(self, cycle: List[str]):
        self.cycle = cycle
        super().__init__("recursive circuit calls: " + " -> ".join(cycle))


class NonUnitaryCircuit(QiroError):
    """A meta-operation was applied to a circuit that is not unitary."""


class UnloweredMetaOp(QiroError):
    """adj/ctrl on a circuit is still present where only native gates are allowed."""


class FixpointOverflow(QiroError):
    """A rewrite driver did not converge within the sweep cap."""


class PipelineError(QiroError):
    """Unknown pass name or malformed pass option."""


# ======================
# Interpreter
# ======================


class Trap(QiroError):
    """Runtime fault while interpreting the classical residue."""


class StepLimitExceeded(Trap):
    """The interpreter ran out of its instruction budget."""
