"""
Sweep result containers and the CSV writer.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.16e"


@dataclass
class SweepPoint:
    """One CSV row. wall_time is logged but never written."""
    axis_value: Any
    metrics: Dict[str, Any] = field(default_factory=dict)
    trials: int = 0
    failures: int = 0
    wall_time: Optional[float] = None


@dataclass
class RunResult:
    """Rows of a sweep, in sweep order."""
    sweep: str
    axis: str
    points: List[SweepPoint] = field(default_factory=list)

    def add(self, point: SweepPoint) -> None:
        self.points.append(point)

    def column(self, name: str) -> List[Any]:
        if name == self.axis:
            return [p.axis_value for p in self.points]
        if name in ("trials", "failures"):
            return [getattr(p, name) for p in self.points]
        return [p.metrics.get(name, math.nan) for p in self.points]

    def to_frame(self) -> pd.DataFrame:
        """Columns: sweep axis, metrics in first-seen order, trials, failures."""
        metric_names: List[str] = []
        for point in self.points:
            for name in point.metrics:
                if name not in metric_names:
                    metric_names.append(name)
        rows = []
        for point in self.points:
            row = {self.axis: point.axis_value}
            row.update({name: point.metrics.get(name, math.nan) for name in metric_names})
            row["trials"] = int(point.trials)
            row["failures"] = int(point.failures)
            rows.append(row)
        return pd.DataFrame(rows, columns=[self.axis, *metric_names, "trials", "failures"])

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        """Write (or return) the CSV text with full-precision scientific floats."""
        text = self.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            logger.info("Wrote %d rows to %s", len(self.points), path)
        return text


__all__ = ["FLOAT_FORMAT", "SweepPoint", "RunResult"]
