"""Log-density result container shared by all estimators."""

from __future__ import annotations

import dataclasses
import math
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:  # pragma: no cover
    from .channel import ChannelParams
    from .grid import GridSpec


@dataclasses.dataclass(frozen=True)
class LogPdf:
    """A log conditional density value with its provenance.

    All probability work is done in the log domain: the measure
    normalization constants underflow for realistic grids.  `std_err` is
    the standard error of `log_p` (0 for deterministic methods).  The grid
    and channel parameters are echoed because densities are only defined
    relative to a declared lattice.
    """

    log_p: float
    std_err: float
    method: str
    grid: "GridSpec"
    params: "ChannelParams"
    diagnostics: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_p):
            raise ValueError(f"log_p must be finite, got {self.log_p}")
        if not (self.std_err >= 0.0):
            raise ValueError(f"std_err must be >= 0, got {self.std_err}")
