"""Small helpers shared across the package."""

import logging
import math
import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """Print a float so that parsing it back yields the same double."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"non-finite float {value} has no textual form")
    text = format(value, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def is_zero_angle(angle: float, epsilon: float) -> bool:
    """True when a rotation by `angle` is the identity up to `epsilon`.

    Rotations are 4pi-periodic (2pi only up to a phase that a control exposes).
    """
    rest = abs(math.fmod(angle, 4 * math.pi))
    return min(rest, 4 * math.pi - rest) < epsilon


def saturating_add(current: int, amount: int, limit: int) -> int:
    """Add to a counter, clamping at `limit` and logging when it saturates."""
    total = current + amount
    if total > limit:
        logger.warning(f"Counter saturated at {limit}")
        return limit
    return total


@contextmanager
def stage_timer(timings: Optional[Dict[str, float]], name: str) -> Iterator[None]:
    """Record wall time of a block under `name` when `timings` is given."""
    start = time.perf_counter()
    try:
        yield
    finally:
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)
