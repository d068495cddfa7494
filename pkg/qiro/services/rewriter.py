"""Pattern rewriting: the RewritePattern base class and the greedy fixpoint driver."""

import logging
from collections import Counter
from typing import Any, Dict, List, Optional, Sequence

from ..core.constants import DEFAULT_FIXPOINT_CAP
from ..core.errors import FixpointOverflow
from ..models.module import ModuleIR, SymbolOp
from ..models.operation import Operation

logger = logging.getLogger(__name__)


class RewritePattern:
    """A local DAG rewrite rooted at one operation.

    Subclasses set `root` (an op name, or None to try every op) and implement
    `match`, returning anything but None on success, and `rewrite`, which
    receives that match result. `rewrite` must leave the module verifiable.
    """

    root: Optional[str] = None
    benefit: int = 1

    @property
    def name(self) -> str:
        return type(self).__name__

    def match(self, op: Operation, module: ModuleIR) -> Any:
        raise NotImplementedError

    def rewrite(self, op: Operation, match: Any, module: ModuleIR) -> None:
        raise NotImplementedError


def is_attached(op: Operation, module: ModuleIR) -> bool:
    """Whether `op` is still reachable from a symbol of `module`."""
    current = op
    while not isinstance(current, SymbolOp):
        block = current.parent
        if block is None or block.parent is None or block.parent.parent is None:
            return False
        if not any(o is current for o in block.ops):
            return False
        current = block.parent.parent
    return module.lookup(current.sym_name) is current


class GreedyRewriteDriver:
    """Applies patterns over the whole module until a sweep changes nothing."""

    def __init__(self, patterns: Sequence[RewritePattern], fixpoint_cap: int = DEFAULT_FIXPOINT_CAP):
        self.patterns: List[RewritePattern] = sorted(patterns, key=lambda p: -p.benefit)
        self.fixpoint_cap = fixpoint_cap
        self.applied: Counter = Counter()
        self._by_root: Dict[Optional[str], List[RewritePattern]] = {}
        for pattern in self.patterns:
            self._by_root.setdefault(pattern.root, []).append(pattern)

    def _candidates(self, op: Operation) -> List[RewritePattern]:
        rooted = self._by_root.get(op.name, [])
        generic = self._by_root.get(None, [])
        if not generic:
            return rooted
        return sorted(rooted + generic, key=lambda p: -p.benefit)

    def sweep(self, module: ModuleIR) -> bool:
        changed = False
        for symbol in list(module.ops):
            for op in list(symbol.walk()):
                if op is symbol or not is_attached(op, module):
                    continue
                for pattern in self._candidates(op):
                    match = pattern.match(op, module)
                    if match is None:
                        continue
                    logger.debug(f"{pattern.name} rewrote {op.name} in @{symbol.sym_name}")
                    pattern.rewrite(op, match, module)
                    self.applied[pattern.name] += 1
                    changed = True
                    break
        return changed

    def run(self, module: ModuleIR) -> int:
        """Rewrite `module` in place to a fixpoint.

        Returns:
            Number of sweeps, including the final one that changed nothing

        Raises:
            FixpointOverflow: still changing after `fixpoint_cap` sweeps
        """
        for sweep in range(1, self.fixpoint_cap + 1):
            if not self.sweep(module):
                return sweep
        raise FixpointOverflow(f"no fixpoint after {self.fixpoint_cap} sweeps ({dict(self.applied)})")


def apply_patterns(module: ModuleIR, patterns: Sequence[RewritePattern],
                   fixpoint_cap: int = DEFAULT_FIXPOINT_CAP) -> int:
    return GreedyRewriteDriver(patterns, fixpoint_cap).run(module)
