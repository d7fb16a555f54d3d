"""
Parameter sweeps over immutable inputs with rows kept in grid order
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import ValidationError

from .error_handling import QRCException, ValidationException

logger = logging.getLogger("qrc.sweep")

Point = Dict[str, Any]


@dataclass
class SweepRow:
    index: int
    point: Point
    result: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def as_dict(self) -> Dict[str, Any]:
        row = dict(self.point)
        row.update(self.result)
        row["error"] = self.error or ""
        return row


def parse_axis(text: str) -> Tuple[str, List[float]]:
    """
    "lam=0,0.5,1" or "lam=0:1:0.1" (stop included) to (name, values)
    """
    name, sep, raw = text.partition("=")
    name = name.strip()
    if not sep or not name or not raw.strip():
        raise ValidationException(f"grid axis must look like name=v1,v2 or name=start:stop:step, got '{text}'")
    try:
        if ":" in raw:
            start, stop, step = (float(x) for x in raw.split(":"))
            if step <= 0 or stop < start:
                raise ValidationException(f"empty range in grid axis '{text}'")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ValidationException(f"non-numeric value in grid axis '{text}'") from None
    if not values:
        raise ValidationException(f"grid axis '{name}' has no values")
    return name, values


def expand_grid(base: Mapping[str, Any], axes: Sequence[Tuple[str, Sequence[Any]]]) -> List[Point]:
    """Cartesian product of the axes over `base`; the first axis varies slowest"""
    names = [name for name, _ in axes]
    if len(set(names)) != len(names):
        raise ValidationException(f"grid axes repeat a parameter: {names}")
    points = []
    for combo in product(*(values for _, values in axes)):
        point = dict(base)
        point.update(zip(names, combo))
        points.append(point)
    return points


def run_sweep(points: Sequence[Point], runner: Callable[[Point], Dict[str, Any]], workers: int = 1) -> List[SweepRow]:
    """
    Evaluate `runner` at every point. A failing point is recorded in its row
    and the sweep goes on.
    """
    def evaluate(index: int) -> SweepRow:
        point = points[index]
        try:
            return SweepRow(index, point, runner(point))
        except QRCException as exc:
            logger.warning(f"Sweep point {index} failed: {exc.message}", extra={"error_code": exc.error_code})
            return SweepRow(index, point, error=exc.error_code)
        except ValidationError as exc:
            logger.warning(f"Sweep point {index} has invalid parameters: {exc.error_count()} error(s)",
                           extra={"error_code": "VALIDATION_ERROR"})
            return SweepRow(index, point, error="VALIDATION_ERROR")

    if workers <= 1:
        rows = [evaluate(i) for i in range(len(points))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, range(len(points))))

    failed = sum(1 for row in rows if row.error)
    logger.info(f"Sweep finished: {len(rows)} points, {failed} failed")
    return rows
