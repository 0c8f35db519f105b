"""Mamdani inference over triangular linguistic variables.

Crisp output defaults to the weighted average of consequent-term centroids,
with each rule's firing strength as its weight. The classical clip/max/
centroid defuzzifier is kept in :func:`defuzz_centroid_aggregate` and is used
as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ._accel import kernels

AND = "AND"
OR = "OR"


class FuzzyError(ValueError):
    pass


class VocabularyError(FuzzyError):
    """A rule refers to a variable or term that does not exist."""


class MissingInputError(FuzzyError, KeyError):
    def __init__(self, variable: str):
        super().__init__(f"missing input for variable {variable!r}")
        self.variable = variable

    def __str__(self) -> str:
        return self.args[0]


class NoRuleFired(FuzzyError):
    """Every rule fired with strength zero, so there is no crisp output."""


@dataclass(frozen=True)
class TriangularMF:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for v in (self.alpha, self.beta, self.gamma):
            if not math.isfinite(v):
                raise FuzzyError(f"non-finite triangle parameter in {self}")
        if not (self.alpha <= self.beta <= self.gamma):
            raise FuzzyError(
                f"triangle parameters must satisfy alpha <= beta <= gamma, got "
                f"({self.alpha}, {self.beta}, {self.gamma})"
            )

    def __call__(self, x: float) -> float:
        return mf_eval(self, x)


def mf_eval(mf: TriangularMF, x: float) -> float:
    a, b, c = mf.alpha, mf.beta, mf.gamma
    if x == b:
        # also covers the shoulder terms where a == b or b == c
        return 1.0
    if x <= a or x >= c:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    return (c - x) / (c - b)


def mf_eval_array(mf: TriangularMF, xs) -> np.ndarray:
    xs = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    return kernels.tri_mf(xs, mf.alpha, mf.beta, mf.gamma)


def term_centroid(mf: TriangularMF) -> float:
    if mf.alpha == mf.gamma:
        return mf.beta
    return (mf.alpha + mf.beta + mf.gamma) / 3.0


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    universe: tuple[float, float]
    terms: tuple[tuple[str, TriangularMF], ...]

    def __post_init__(self):
        lo, hi = self.universe
        object.__setattr__(self, "universe", (float(lo), float(hi)))
        object.__setattr__(self, "terms", tuple((str(lbl), mf) for lbl, mf in self.terms))
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise FuzzyError(f"{self.name}: universe must satisfy lo < hi, got [{lo}, {hi}]")
        if not self.terms:
            raise FuzzyError(f"{self.name}: a variable needs at least one term")
        seen = set()
        for label, mf in self.terms:
            if label in seen:
                raise FuzzyError(f"{self.name}: duplicate term label {label!r}")
            seen.add(label)
            if mf.gamma < lo or mf.alpha > hi:
                raise FuzzyError(
                    f"{self.name}.{label}: support [{mf.alpha}, {mf.gamma}] "
                    f"does not intersect universe [{lo}, {hi}]"
                )

    @property
    def lo(self) -> float:
        return self.universe[0]

    @property
    def hi(self) -> float:
        return self.universe[1]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.terms)

    def term(self, label: str) -> TriangularMF:
        for lbl, mf in self.terms:
            if lbl == label:
                return mf
        raise VocabularyError(f"variable {self.name!r} has no term {label!r}")

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


def fuzzify(var: LinguisticVariable, x: float) -> dict[str, float]:
    x = var.clamp(x)
    return {label: mf_eval(mf, x) for label, mf in var.terms}


def t_norm(a: float, b: float) -> float:
    return min(a, b)


def s_norm(a: float, b: float) -> float:
    return max(a, b)


def negate(a: float) -> float:
    return 1.0 - a


@dataclass(frozen=True)
class Clause:
    variable: str
    term: str
    negated: bool = False


@dataclass(frozen=True)
class Rule:
    """IF <antecedents joined by connectives> THEN <consequent>, scaled by weight.

    ``connectives[i]`` joins ``antecedents[i]`` and ``antecedents[i + 1]``.
    AND binds tighter than OR.
    """

    antecedents: tuple[Clause, ...]
    consequent: tuple[str, str]
    connectives: tuple[str, ...] = ()
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "antecedents", tuple(self.antecedents))
        object.__setattr__(self, "consequent", tuple(self.consequent))
        conns = tuple(c.upper() for c in self.connectives)
        if not conns and len(self.antecedents) > 1:
            conns = (AND,) * (len(self.antecedents) - 1)
        object.__setattr__(self, "connectives", conns)
        object.__setattr__(self, "weight", float(self.weight))
        if not self.antecedents:
            raise FuzzyError("a rule needs at least one antecedent clause")
        if len(conns) != len(self.antecedents) - 1:
            raise FuzzyError("need exactly one connective between consecutive clauses")
        if any(c not in (AND, OR) for c in conns):
            raise FuzzyError(f"connectives must be AND or OR, got {conns}")
        if not (0.0 <= self.weight <= 1.0):
            raise FuzzyError(f"rule weight {self.weight} outside [0,1]")

    def and_groups(self) -> list[list[Clause]]:
        """Split the antecedent at OR into AND-chains."""
        groups = [[self.antecedents[0]]]
        for conn, clause in zip(self.connectives, self.antecedents[1:]):
            if conn == OR:
                groups.append([clause])
            else:
                groups[-1].append(clause)
        return groups

    @property
    def variables(self) -> set[str]:
        return {c.variable for c in self.antecedents}


@dataclass(frozen=True)
class RuleBase:
    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[Rule, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        index = {}
        for var in self.inputs:
            if var.name in index:
                raise VocabularyError(f"duplicate input variable {var.name!r}")
            index[var.name] = var
        if self.output.name in index:
            raise VocabularyError(f"output {self.output.name!r} clashes with an input name")
        object.__setattr__(self, "_index", index)
        for i, rule in enumerate(self.rules):
            self._check_rule(i, rule)

    def _check_rule(self, i: int, rule: Rule) -> None:
        for clause in rule.antecedents:
            var = self._index.get(clause.variable)
            if var is None:
                raise VocabularyError(f"rule {i}: unknown input variable {clause.variable!r}")
            if clause.term not in var.labels:
                raise VocabularyError(
                    f"rule {i}: variable {clause.variable!r} has no term {clause.term!r}"
                )
        out_name, out_term = rule.consequent
        if out_name != self.output.name:
            raise VocabularyError(f"rule {i}: consequent must use output {self.output.name!r}")
        if out_term not in self.output.labels:
            raise VocabularyError(f"rule {i}: output has no term {out_term!r}")

    @property
    def variables(self) -> Mapping[str, LinguisticVariable]:
        return self._index


@dataclass(frozen=True)
class InferenceResult:
    firing_strengths: tuple[float, ...]
    crisp: float
    activations: dict[str, float]


Inputs = Mapping[str, Optional[float]]


def firing_strength(
    rule: Rule, inputs: Inputs, variables: Mapping[str, LinguisticVariable]
) -> float:
    """Degree to which ``rule`` fires; an input set to ``None`` is inactive.

    A rule that mentions an inactive input does not fire.
    """
    for clause in rule.antecedents:
        if clause.variable not in inputs:
            raise MissingInputError(clause.variable)
        if inputs[clause.variable] is None:
            return 0.0
    degree = None
    for group in rule.and_groups():
        chain = None
        for clause in group:
            var = variables[clause.variable]
            mu = mf_eval(var.term(clause.term), var.clamp(float(inputs[clause.variable])))
            if clause.negated:
                mu = negate(mu)
            chain = mu if chain is None else t_norm(chain, mu)
        degree = chain if degree is None else s_norm(degree, chain)
    return degree * rule.weight


def _strengths(rb: RuleBase, inputs: Inputs) -> list[float]:
    return [firing_strength(rule, inputs, rb.variables) for rule in rb.rules]


def infer(rb: RuleBase, inputs: Inputs) -> InferenceResult:
    strengths = _strengths(rb, inputs)
    num = den = 0.0
    activations = {label: 0.0 for label in rb.output.labels}
    for rule, w in zip(rb.rules, strengths):
        if w <= 0.0:
            continue
        label = rule.consequent[1]
        num += w * term_centroid(rb.output.term(label))
        den += w
        activations[label] = max(activations[label], w)
    if den <= 0.0:
        raise NoRuleFired("no rule fired for the given inputs")
    crisp = rb.output.clamp(num / den)
    return InferenceResult(tuple(strengths), crisp, activations)


def defuzz_centroid_aggregate(rb: RuleBase, inputs: Inputs, resolution: int = 10_000) -> float:
    """Clip each consequent at its strength, max-aggregate, take the discrete centroid.

    The output universe is split into ``resolution`` equal cells sampled at
    their midpoints.
    """
    if resolution < 100:
        raise FuzzyError(f"resolution must be >= 100, got {resolution}")
    strengths = _strengths(rb, inputs)
    heights: dict[str, float] = {}
    for rule, w in zip(rb.rules, strengths):
        label = rule.consequent[1]
        heights[label] = max(heights.get(label, 0.0), w)
    labels = [lbl for lbl in rb.output.labels if heights.get(lbl, 0.0) > 0.0]
    if not labels:
        raise NoRuleFired("no rule fired for the given inputs")
    mfs = [rb.output.term(lbl) for lbl in labels]
    moment, mass = kernels.aggregate_centroid(
        rb.output.lo,
        rb.output.hi,
        int(resolution),
        np.array([m.alpha for m in mfs], dtype=float),
        np.array([m.beta for m in mfs], dtype=float),
        np.array([m.gamma for m in mfs], dtype=float),
        np.array([heights[lbl] for lbl in labels], dtype=float),
    )
    if mass <= 0.0:
        raise NoRuleFired("aggregated output set has zero mass")
    return moment / mass


def coverage_gaps(var: LinguisticVariable) -> list[tuple[float, float]]:
    """Closed sub-intervals of the universe where every term has zero membership.

    Each term covers its open support ``(alpha, gamma)`` plus its peak.
    """
    lo, hi = var.universe
    merged: list[list[float]] = []
    for a, c in sorted((mf.alpha, mf.gamma) for _, mf in var.terms if mf.alpha < mf.gamma):
        if merged and a < merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], c)
        else:
            merged.append([a, c])
    gaps = []
    cursor = lo
    for a, c in merged:
        if c <= lo:
            continue
        if a > hi:
            break
        if a >= cursor:
            gaps.append((cursor, a))
        cursor = max(cursor, c)
    if cursor <= hi:
        gaps.append((cursor, hi))
    return [
        (g0, g1)
        for g0, g1 in gaps
        if not (g0 == g1 and any(mf_eval(mf, g0) > 0.0 for _, mf in var.terms))
    ]


def is_fully_covered(var: LinguisticVariable) -> bool:
    return not coverage_gaps(var)


__all__ = [
    "AND",
    "OR",
    "Clause",
    "FuzzyError",
    "InferenceResult",
    "LinguisticVariable",
    "MissingInputError",
    "NoRuleFired",
    "Rule",
    "RuleBase",
    "TriangularMF",
    "VocabularyError",
    "coverage_gaps",
    "defuzz_centroid_aggregate",
    "firing_strength",
    "fuzzify",
    "infer",
    "is_fully_covered",
    "mf_eval",
    "mf_eval_array",
    "negate",
    "s_norm",
    "t_norm",
    "term_centroid",
]
