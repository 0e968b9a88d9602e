from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..graph.types import ArticulationGraph


class StageError(RuntimeError):
    """A generation stage failed for one sample."""

    def __init__(self, stage: str, index: int, cause: Exception):
        self.stage = stage
        self.index = index
        self.cause = cause
        super().__init__(f"stage '{stage}' failed for sample {index}: {cause}")


@dataclass
class GenerationResult:
    """One generated object and where it was written"""
    index: int
    label: str
    graph: ArticulationGraph
    M_v: np.ndarray
    M_e: np.ndarray
    json_path: Optional[Path] = None
    urdf_path: Optional[Path] = None
    violations: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations
