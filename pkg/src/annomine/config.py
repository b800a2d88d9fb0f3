"""Engine configuration shared by mining, training, and scoring."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def as_fraction(value) -> Fraction:
    """Coerce to an exact Fraction; floats go through their decimal repr.

    Fraction(str(0.8)) is 4/5 exactly, while Fraction(0.8) would inherit the
    binary rounding error and break threshold comparisons like 4/5 >= 0.8.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for training and ranking.

    min_support: fraction of an annotation's subtrees a pattern must occur in.
    alpha: weight of the pattern score in the combined ranking score; the
        unique-node fraction gets 1 - alpha.
    strict_support: compare support with > instead of >=.
    pattern_cap: abort mining one annotation when it yields more patterns.
    """

    min_support: Fraction = Fraction(4, 5)
    alpha: Fraction = Fraction(1, 2)
    strict_support: bool = False
    pattern_cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "min_support", as_fraction(self.min_support))
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        if not 0 < self.min_support <= 1:
            raise ValueError(f"min_support must be in (0, 1], got {self.min_support}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    def to_json_dict(self) -> dict:
        return {
            "min_support": str(self.min_support),
            "alpha": str(self.alpha),
            "strict_support": self.strict_support,
            "pattern_cap": self.pattern_cap,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EngineConfig":
        return cls(
            min_support=Fraction(doc["min_support"]),
            alpha=Fraction(doc["alpha"]),
            strict_support=bool(doc.get("strict_support", False)),
            pattern_cap=doc.get("pattern_cap"),
        )
