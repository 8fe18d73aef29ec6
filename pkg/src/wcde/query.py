from __future__ import annotations

from dataclasses import dataclass

from .graph import Dag


@dataclass(frozen=True)
class QuerySpec:
    """Exposure/outcome pair with the treatment level ``a`` and control level ``a_star``."""

    exposure: str
    outcome: str
    a: float = 1
    a_star: float = 0

    def __post_init__(self):
        if self.exposure == self.outcome:
            raise ValueError("exposure and outcome must differ")
        if self.a == self.a_star:
            raise ValueError("treatment and control levels must differ")

    def validate(self, g: Dag) -> "QuerySpec":
        g.index(self.exposure)
        g.index(self.outcome)
        return self

    def swapped(self) -> "QuerySpec":
        return QuerySpec(self.exposure, self.outcome, self.a_star, self.a)

    def to_json(self) -> dict:
        return {"exposure": self.exposure, "outcome": self.outcome,
                "a": self.a, "a_star": self.a_star}
