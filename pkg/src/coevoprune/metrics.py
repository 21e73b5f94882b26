"""Per-epoch metrics records and their CSV encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

CSV_HEADER = (
    "trial,epoch,cell,train_loss,test_loss,preserved_total,preserved_encoder,"
    "preserved_decoder,nonzero_params,learning_rate,prune_event"
)


@dataclass(frozen=True)
class MetricsRow:
    """One row per (trial, epoch, cell); cell is -1 for canonical training."""

    trial: int
    epoch: int
    cell: int
    train_loss: float
    test_loss: float
    preserved_total: float
    preserved_encoder: float
    preserved_decoder: float
    nonzero_params: int
    learning_rate: float
    prune_event: bool

    def __post_init__(self):
        if not (math.isfinite(self.train_loss) and math.isfinite(self.test_loss)):
            raise ValueError(f"non-finite loss in metrics row (epoch {self.epoch}, cell {self.cell})")
        for pct in (self.preserved_total, self.preserved_encoder, self.preserved_decoder):
            if not 0.0 <= pct <= 100.0:
                raise ValueError(f"preserved percentage {pct} outside [0, 100]")

    def to_csv(self) -> str:
        return ",".join(
            [
                str(self.trial),
                str(self.epoch),
                str(self.cell),
                repr(self.train_loss),
                repr(self.test_loss),
                repr(self.preserved_total),
                repr(self.preserved_encoder),
                repr(self.preserved_decoder),
                str(self.nonzero_params),
                repr(self.learning_rate),
                "1" if self.prune_event else "0",
            ]
        )

    @classmethod
    def from_csv(cls, line: str) -> "MetricsRow":
        parts = line.split(",")
        if len(parts) != 11:
            raise ValueError(f"expected 11 fields, got {len(parts)}")
        return cls(
            trial=int(parts[0]),
            epoch=int(parts[1]),
            cell=int(parts[2]),
            train_loss=float(parts[3]),
            test_loss=float(parts[4]),
            preserved_total=float(parts[5]),
            preserved_encoder=float(parts[6]),
            preserved_decoder=float(parts[7]),
            nonzero_params=int(parts[8]),
            learning_rate=float(parts[9]),
            prune_event=parts[10].strip() == "1",
        )


@dataclass(frozen=True)
class PruneEventLog:
    """One operator application on one layer: the sidecar pruning log line."""

    trial: int
    epoch: int
    cell: int
    operator: str
    layer: str
    zeroed: int

    def to_line(self) -> str:
        return f"{self.trial} {self.epoch} {self.cell} {self.operator} {self.layer} {self.zeroed}"
