"""Pass registry and pipeline composition.

Passes are named like their command-line flags (`--canonicalize`,
`--affine-unroll=4`, ...). A pipeline runs them in order, verifying after
each one, and optionally interprets the resource-counting residue at the end.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from ..core.constants import (
    DEFAULT_ENTRY,
    DEFAULT_FIXPOINT_CAP,
    DEFAULT_PIPELINE,
    DEFAULT_STEP_LIMIT,
    QUANTUM_GATE_OPT_PARTS,
)
from ..core.errors import FixpointOverflow, PipelineError, VerificationError
from ..core.utils import stage_timer
from ..models.module import ModuleIR
from ..models.registry import is_quantum_dialect
from ..models.verifier import verify
from .classical import canonical_patterns, canonicalize, cse, inline_circuits, strip_circuits, unroll_affine
from .interpreter import Interpreter, ResourceReport
from .loop_boundary import loop_boundary
from .lower_mem2val import lower_module
from .meta_lowering import lower_adjoint, lower_control
from .peephole import pair_patterns
from .printer import print_module
from .resources import CostModel, count_resources_convert
from .rewriter import apply_patterns

logger = logging.getLogger(__name__)

DEFAULT_PIPELINE_FLAG = "default-pipeline"
INTERPRET = "interpret"


@dataclass
class PassContext:
    """Settings shared by every pass of one pipeline run."""
    entry: str = DEFAULT_ENTRY
    disabled: Tuple[str, ...] = ()
    fixpoint_cap: int = DEFAULT_FIXPOINT_CAP
    step_limit: int = DEFAULT_STEP_LIMIT
    cost: CostModel = field(default_factory=CostModel.ops)
    option: Optional[str] = None


PassFn = Callable[[ModuleIR, PassContext], ModuleIR]


@dataclass(frozen=True)
class PassSpec:
    name: str
    run: Optional[PassFn]
    description: str
    takes_option: bool = False


# ======================
# Quantum gate optimization bundle
# ======================


def quantum_gate_opt(module: ModuleIR, disabled: Sequence[str] = (),
                     fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> ModuleIR:
    """Alternate gate-pair peepholes and loop-boundary hoisting until neither changes anything.

    Args:
        module: Module in the optimization dialect
        disabled: Parts to leave out (hermitian, adjoint, rotation, loop-boundary)
        fixpoint_cap: Sweep cap for each driver and for the alternation

    Raises:
        FixpointOverflow: no fixpoint within the cap
    """
    parts = [p for p in QUANTUM_GATE_OPT_PARTS if p not in disabled]
    patterns = canonical_patterns() + pair_patterns(parts)
    for _ in range(fixpoint_cap):
        apply_patterns(module, patterns, fixpoint_cap)
        if "loop-boundary" not in parts or not loop_boundary(module, fixpoint_cap):
            return module
    raise FixpointOverflow(f"quantum-gate-opt did not converge in {fixpoint_cap} rounds")


# ======================
# Registry
# ======================


def _unroll_factor(option: Optional[str]) -> Optional[int]:
    if option is None:
        return None
    try:
        factor = int(option)
    except ValueError:
        raise PipelineError(f"--affine-unroll expects an integer factor, got {option!r}") from None
    if factor < 1:
        raise PipelineError(f"--affine-unroll factor must be at least 1, got {factor}")
    return factor


PASS_REGISTRY: Dict[str, PassSpec] = {
    spec.name: spec
    for spec in [
        PassSpec("convert-mem-to-val", lambda m, c: lower_module(m),
                 "lower the memory-semantics input dialect to value semantics"),
        PassSpec("canonicalize", lambda m, c: canonicalize(m, c.fixpoint_cap),
                 "fold constants, erase dead code and apply canonical rewrites"),
        PassSpec("cse", lambda m, c: cse(m), "merge identical classical ops"),
        PassSpec("circuit-inline", lambda m, c: inline_circuits(m), "inline circuit calls"),
        PassSpec("affine-unroll", lambda m, c: unroll_affine(m, _unroll_factor(c.option)),
                 "unroll affine.for loops with static bounds (optionally =factor)", takes_option=True),
        PassSpec("strip-circ", lambda m, c: strip_circuits(m, c.entry), "delete unreferenced circuits"),
        PassSpec("quantum-gate-opt", lambda m, c: quantum_gate_opt(m, c.disabled, c.fixpoint_cap),
                 "gate-pair peepholes plus loop-boundary hoisting"),
        PassSpec("lower-ctrl", lambda m, c: lower_control(m), "generate controlled circuit versions"),
        PassSpec("lower-adj", lambda m, c: lower_adjoint(m), "generate adjoint circuit versions"),
        PassSpec("count-resources", lambda m, c: count_resources_convert(m, c.cost),
                 "replace quantum ops by resource counters"),
        PassSpec(INTERPRET, None, "interpret the counting residue and report counts"),
    ]
}


def expand_flags(flags: Sequence[str]) -> List[str]:
    """Strip leading dashes and expand `default-pipeline` to its pass list plus `interpret`."""
    expanded: List[str] = []
    for flag in flags:
        name = flag.lstrip("-")
        if name == DEFAULT_PIPELINE_FLAG:
            expanded.extend(DEFAULT_PIPELINE)
            expanded.append(INTERPRET)
        else:
            expanded.append(name)
    return expanded


def resolve_flag(flag: str) -> Tuple[PassSpec, Optional[str]]:
    name, _, option = flag.lstrip("-").partition("=")
    spec = PASS_REGISTRY.get(name)
    if spec is None:
        raise PipelineError(f"unknown pass --{name}")
    if option and not spec.takes_option:
        raise PipelineError(f"--{name} takes no option")
    if spec.takes_option and spec.name == "affine-unroll":
        _unroll_factor(option or None)
    return spec, option or None


def _still_quantum(module: ModuleIR) -> bool:
    return bool(module.circuits) or any(is_quantum_dialect(op) for op in module.walk())


# ======================
# Pipeline
# ======================


class PassPipeline:
    """An ordered list of passes applied to one module."""

    def __init__(self, flags: Sequence[str], context: Optional[PassContext] = None,
                 verify_each: bool = True):
        self.context = context or PassContext()
        self.verify_each = verify_each
        self.stages = [resolve_flag(f) for f in expand_flags(flags)]

    @property
    def names(self) -> List[str]:
        return [spec.name for spec, _ in self.stages]

    @property
    def interprets(self) -> bool:
        return INTERPRET in self.names

    def run(self, module: ModuleIR, timings: Optional[Dict[str, float]] = None) -> ModuleIR:
        """Apply every compile stage in order (interpretation is left to `estimate`).

        Raises:
            VerificationError: a pass produced a malformed module
        """
        for spec, option in self.stages:
            if spec.run is None:
                continue
            before = module.op_count()
            with stage_timer(timings, spec.name):
                module = spec.run(module, replace(self.context, option=option))
            logger.info(f"{spec.name}: {before} -> {module.op_count()} ops")
            if self.verify_each:
                diagnostics = verify(module)
                if diagnostics:
                    raise VerificationError(diagnostics, stage=spec.name)
        return module

    def interpret(self, module: ModuleIR, args: Optional[Dict[str, Any]] = None,
                  timings: Optional[Dict[str, float]] = None) -> ResourceReport:
        """Count resources on `module`, converting it first if quantum ops are left."""
        if _still_quantum(module):
            logger.info("interpret: converting remaining quantum ops to counters")
            with stage_timer(timings, "count-resources"):
                module = count_resources_convert(module, self.context.cost)
        with stage_timer(timings, INTERPRET):
            return Interpreter(module, self.context.step_limit).run(self.context.entry, args)


def estimate(module: ModuleIR, flags: Sequence[str] = (DEFAULT_PIPELINE_FLAG,),
             args: Optional[Dict[str, Any]] = None, context: Optional[PassContext] = None,
             timings: Optional[Dict[str, float]] = None) -> ResourceReport:
    """Run `flags` on `module`, then convert and interpret its entry point.

    Args:
        module: Parsed and verified program
        flags: Pass flags; `default-pipeline` expands to the optimizing pipeline
        args: Entry inputs by argument name
        context: Entry symbol, cost model and caps
        timings: Filled with per-stage wall time when given

    Returns:
        The resource report of the entry symbol
    """
    pipeline = PassPipeline(flags, context)
    return pipeline.interpret(pipeline.run(module, timings), args, timings)


def emit(module: ModuleIR, path: Union[str, Path]) -> None:
    """Write `module` as `.qiro` text.

    Raises:
        VerificationError: the module is malformed
        OSError: the file cannot be written
    """
    diagnostics = verify(module)
    if diagnostics:
        raise VerificationError(diagnostics, stage="emit")
    Path(path).write_text(print_module(module), encoding="utf-8")
    logger.info(f"Wrote {len(module.ops)} symbol(s) to {path}")
