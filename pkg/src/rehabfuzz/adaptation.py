"""Game-specific controller: default rule base, action bands, difficulty updates."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Mapping, Optional

from .fuzzy_core import AND, OR, Clause, LinguisticVariable, Rule, RuleBase, TriangularMF, infer
from .rule_dsl import parse_rulebase
from .session_metrics import INPUT_NAMES, INPUT_UNIVERSES, FuzzyInputVector, SessionTrace, build_fuzzy_inputs

OUTPUT_NAME = "GameProgress"
OUTPUT_UNIVERSE = (0.0, 80.0)
DEFAULT_RULES_RESOURCE = "default.frules"

FOUR_TERMS = ("VG", "G", "B", "H")
THREE_TERMS = ("VG", "G", "B")

# Inputs that are judged together by the group rules.
INPUT_GROUPS: dict[str, tuple[str, ...]] = {
    "orientation": ("O.E_W", "O.E_E", "O.E_S"),
    "position": ("P.E_W", "P.E_E", "P.E_S"),
    "angular_velocity": ("AV.E_W", "AV.E_E", "AV.E_S"),
    "posture": ("T.E_H", "T.E_S"),
    "timing": ("T.E_C", "T.E_R"),
}

# Rule weights. Harmfulness carries full weight; everything else is four
# orders of magnitude lighter, so any harmful reading dominates.
#
# Besides one rule per input term there is one "any input is VG" and one
# "any input is G" rule. Their strengths track the largest membership, which
# keeps the weighted average close to the max-aggregated centroid. The ratios
# are bounded so the crisp output never falls when a single input worsens:
#   VG >= 0.67 * (G + ANY_G),  G + ANY_G <= 2 * B,  B <= 2 * G,
# and a 7-of-13 majority of G or B readings decides between the middle bands:
#   7 * G + ANY_G > 6 * B,  7 * B > 6 * G + ANY_G.
TERM_RULES: dict[str, tuple[str, float]] = {
    "VG": ("Progression", 0.0005),
    "G": ("Repetition", 0.0001),
    "B": ("Simplification", 0.00014),
    "H": ("Harmfulness", 1.0),
}
ANY_TERM_WEIGHTS = {"VG": 0.0015, "G": 0.00017}
ALL_VG_WEIGHT = 0.0015
GROUP_ANY_H_WEIGHT = 1.0


class AdaptAction(str, enum.Enum):
    PROGRESSION = "Progression"
    REPETITION = "Repetition"
    SIMPLIFICATION = "Simplification"
    HARMFULNESS = "Harmfulness"

    def __str__(self) -> str:
        return self.value


def partition(name: str, upper: float, labels) -> LinguisticVariable:
    """Evenly spaced triangles on [0, upper] with feet on the neighbouring peaks."""
    k = len(labels)
    peaks = [i * upper / (k - 1) for i in range(k)]
    terms = []
    for i, label in enumerate(labels):
        a = peaks[max(i - 1, 0)]
        c = peaks[min(i + 1, k - 1)]
        terms.append((label, TriangularMF(a, peaks[i], c)))
    return LinguisticVariable(name, (0.0, float(upper)), tuple(terms))


def output_variable() -> LinguisticVariable:
    # Peaks at the band centres; outer feet sit on virtual peaks one band
    # beyond the universe so every centroid equals its band centre.
    actions = [a.value for a in AdaptAction]
    centres = [10.0, 30.0, 50.0, 70.0]
    terms = tuple(
        (label, TriangularMF(c - 20.0, c, c + 20.0)) for label, c in zip(actions, centres)
    )
    return LinguisticVariable(OUTPUT_NAME, OUTPUT_UNIVERSE, terms)


def default_variables() -> list[LinguisticVariable]:
    """The 13 inputs followed by the GameProgress output."""
    out = []
    for name in INPUT_NAMES:
        _, upper = INPUT_UNIVERSES[name]
        labels = THREE_TERMS if name in INPUT_GROUPS["timing"] else FOUR_TERMS
        out.append(partition(name, upper, labels))
    out.append(output_variable())
    return out


def default_rules(inputs: list[LinguisticVariable]) -> list[Rule]:
    labels = {v.name: v.labels for v in inputs}
    names = [v.name for v in inputs]
    rules = []
    for var in inputs:
        for term in var.labels:
            action, weight = TERM_RULES[term]
            rules.append(Rule((Clause(var.name, term),), (OUTPUT_NAME, action), (), weight))
    for term, weight in ANY_TERM_WEIGHTS.items():
        action = TERM_RULES[term][0]
        carriers = [n for n in names if term in labels[n]]
        rules.append(
            Rule(tuple(Clause(n, term) for n in carriers), (OUTPUT_NAME, action), (OR,) * (len(carriers) - 1), weight)
        )
    rules.append(
        Rule(
            tuple(Clause(n, "VG") for n in names),
            (OUTPUT_NAME, AdaptAction.PROGRESSION.value),
            (AND,) * (len(names) - 1),
            ALL_VG_WEIGHT,
        )
    )
    for members in INPUT_GROUPS.values():
        if all("H" in labels[n] for n in members):
            rules.append(
                Rule(
                    tuple(Clause(n, "H") for n in members),
                    (OUTPUT_NAME, AdaptAction.HARMFULNESS.value),
                    (OR,) * (len(members) - 1),
                    GROUP_ANY_H_WEIGHT,
                )
            )
    return rules


def build_default_rulebase() -> RuleBase:
    """Construct the default rule base in code (the shipped asset is generated from this)."""
    variables = default_variables()
    inputs = variables[:-1]
    return RuleBase(tuple(inputs), variables[-1], tuple(default_rules(inputs)))


def default_rules_text() -> str:
    return resources.files("rehabfuzz.data").joinpath(DEFAULT_RULES_RESOURCE).read_text("utf-8")


@lru_cache(maxsize=1)
def default_rulebase() -> RuleBase:
    """Parse the shipped ``default.frules`` asset."""
    return parse_rulebase(default_rules_text())


def classify(crisp: float) -> AdaptAction:
    """Map a GameProgress value to its band; edges go to the more severe action."""
    lo, hi = OUTPUT_UNIVERSE
    if not (math.isfinite(crisp) and lo <= crisp <= hi):
        raise ValueError(f"crisp output {crisp} outside [{lo}, {hi}]")
    if crisp < 20.0:
        return AdaptAction.PROGRESSION
    if crisp < 40.0:
        return AdaptAction.REPETITION
    if crisp < 60.0:
        return AdaptAction.SIMPLIFICATION
    return AdaptAction.HARMFULNESS


DEFAULT_RANGE_LIMITS = {
    "Wrist": (-180.0, 180.0),
    "Elbow": (-180.0, 180.0),
    "Shoulder": (-180.0, 180.0),
}


@dataclass(frozen=True)
class DifficultyState:
    level: int = 0
    spawn_radius_min: float = 30.0  # cm from the shoulder
    spawn_radius_max: float = 45.0
    iterations: int = 3
    basket_size: float = 1.0
    fruit_size: float = 1.0
    fruit_speed: float = 10.0  # cm/s
    handedness: str = "Right"
    range_limits: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_RANGE_LIMITS)
    )
    halted: bool = False

    def __post_init__(self):
        limits = {str(k): (float(v[0]), float(v[1])) for k, v in dict(self.range_limits).items()}
        object.__setattr__(self, "range_limits", limits)
        if int(self.level) != self.level or self.level < 0:
            raise ValueError(f"level must be a non-negative integer, got {self.level}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not 0 <= self.spawn_radius_min <= self.spawn_radius_max:
            raise ValueError("need 0 <= spawn_radius_min <= spawn_radius_max")
        for name in ("basket_size", "fruit_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.fruit_speed >= 0:
            raise ValueError("fruit_speed must be non-negative")
        if self.handedness not in ("Left", "Right"):
            raise ValueError(f"handedness must be Left or Right, got {self.handedness!r}")
        for joint, (lo, hi) in limits.items():
            if not lo <= hi:
                raise ValueError(f"range limit for {joint} needs min <= max")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["range_limits"] = {k: list(v) for k, v in self.range_limits.items()}
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "DifficultyState":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown difficulty fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class AdaptationConfig:
    progression_radius_factor: float = 1.1
    progression_speed_factor: float = 1.1
    progression_extra_iterations: int = 2
    simplification_radius_factor: float = 0.9
    simplification_size_factor: float = 1.1
    simplification_speed_factor: float = 0.9

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite non-negative number")
        if self.simplification_size_factor <= 0:
            raise ValueError("simplification_size_factor must be positive")


def adapt(d: DifficultyState, a: AdaptAction, config: Optional[AdaptationConfig] = None) -> DifficultyState:
    cfg = config or AdaptationConfig()
    a = AdaptAction(a)
    if d.halted or a is AdaptAction.REPETITION:
        return d
    if a is AdaptAction.HARMFULNESS:
        return replace(d, halted=True)
    if a is AdaptAction.PROGRESSION:
        return replace(
            d,
            level=d.level + 1,
            spawn_radius_max=max(d.spawn_radius_max * cfg.progression_radius_factor, d.spawn_radius_min),
            fruit_speed=d.fruit_speed * cfg.progression_speed_factor,
            iterations=d.iterations + cfg.progression_extra_iterations,
        )
    return replace(
        d,
        spawn_radius_max=max(d.spawn_radius_max * cfg.simplification_radius_factor, d.spawn_radius_min),
        fruit_size=d.fruit_size * cfg.simplification_size_factor,
        fruit_speed=d.fruit_speed * cfg.simplification_speed_factor,
    )


@dataclass(frozen=True)
class DecisionRecord:
    inputs: FuzzyInputVector
    crisp: float
    action: AdaptAction
    difficulty_before: DifficultyState
    difficulty_after: DifficultyState
    timestamp: float
    firing_strengths: tuple[float, ...] = ()

    def __post_init__(self):
        if self.action is not classify(self.crisp):
            raise ValueError("decision action must equal classify(crisp)")

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "inputs": self.inputs.as_dict(),
            "crisp": self.crisp,
            "action": self.action.value,
            "difficulty_before": self.difficulty_before.to_dict(),
            "difficulty_after": self.difficulty_after.to_dict(),
        }


def run_controller(
    trace: SessionTrace,
    d: DifficultyState,
    rb: Optional[RuleBase] = None,
    active_set=None,
    config: Optional[AdaptationConfig] = None,
    timestamp: Optional[float] = None,
) -> DecisionRecord:
    rb = rb if rb is not None else default_rulebase()
    vector = build_fuzzy_inputs(trace, active_set)
    result = infer(rb, vector.as_dict())
    action = classify(result.crisp)
    after = adapt(d, action, config)
    ts = trace.frames[-1].t if timestamp is None else timestamp
    return DecisionRecord(vector, result.crisp, action, d, after, ts, result.firing_strengths)


__all__ = [
    "AdaptAction",
    "AdaptationConfig",
    "DecisionRecord",
    "DifficultyState",
    "INPUT_GROUPS",
    "OUTPUT_NAME",
    "adapt",
    "build_default_rulebase",
    "classify",
    "default_rulebase",
    "default_rules",
    "default_variables",
    "output_variable",
    "partition",
    "run_controller",
]
