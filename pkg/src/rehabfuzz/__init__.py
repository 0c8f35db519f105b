"""Fuzzy-logic difficulty adaptation for upper-limb rehabilitation games."""
from ._accel import BACKEND
from .adaptation import AdaptAction, DifficultyState, classify, default_rulebase
from .fuzzy_core import LinguisticVariable, Rule, RuleBase, TriangularMF, infer
from .kinematics import ArmGeometry, forward_kinematics, solve_ik
from .rule_dsl import load_rulebase, parse_rulebase

__version__ = "0.1.0"

__all__ = [
    "AdaptAction",
    "ArmGeometry",
    "BACKEND",
    "DifficultyState",
    "LinguisticVariable",
    "Rule",
    "RuleBase",
    "TriangularMF",
    "classify",
    "default_rulebase",
    "forward_kinematics",
    "infer",
    "load_rulebase",
    "parse_rulebase",
    "solve_ik",
]
