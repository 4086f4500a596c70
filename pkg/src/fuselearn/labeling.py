"""Automatic learning-unit-state labels.

The label for a unit is a convex combination of three normalized inputs:
mastery/100, (self_eval - 10)/90 (self-evaluations live on [10, 100]), and
class_eval/100. Weights are normalized at construction, so any nonnegative
triple with positive sum is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EvalOutOfRange, InvalidConfig
from .ingest import LearningUnit


@dataclass(frozen=True)
class LabelWeights:
    w_mastery: float = 0.2
    w_self: float = 0.4
    w_class: float = 0.4

    def __post_init__(self):
        total = self.w_mastery + self.w_self + self.w_class
        if min(self.w_mastery, self.w_self, self.w_class) < 0.0:
            raise InvalidConfig("label weights must be nonnegative")
        if total <= 0.0:
            raise InvalidConfig("label weights must not all be zero")
        if abs(total - 1.0) > 1e-12:
            object.__setattr__(self, "w_mastery", self.w_mastery / total)
            object.__setattr__(self, "w_self", self.w_self / total)
            object.__setattr__(self, "w_class", self.w_class / total)


@dataclass(frozen=True)
class LusLabel:
    unit_id: str
    value: float
    components: tuple[float, float, float]  # (mastery, self, class), each [0,1]


def lus_label(unit: LearningUnit, weights: LabelWeights | None = None) -> LusLabel:
    if weights is None:
        weights = LabelWeights()
    if not 0.0 <= unit.mastery <= 100.0:
        raise EvalOutOfRange(f"mastery {unit.mastery!r} outside [0, 100]")
    if not 10.0 <= unit.self_eval <= 100.0:
        raise EvalOutOfRange(f"self_eval {unit.self_eval!r} outside [10, 100]")
    if not 0.0 <= unit.class_eval <= 100.0:
        raise EvalOutOfRange(f"class_eval {unit.class_eval!r} outside [0, 100]")
    components = (
        unit.mastery / 100.0,
        (unit.self_eval - 10.0) / 90.0,
        unit.class_eval / 100.0,
    )
    value = (
        weights.w_mastery * components[0]
        + weights.w_self * components[1]
        + weights.w_class * components[2]
    )
    return LusLabel(unit_id=unit.unit_id, value=value, components=components)
