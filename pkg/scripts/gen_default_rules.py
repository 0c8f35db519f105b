"""Regenerate src/rehabfuzz/data/default.frules from the in-code definition."""
from pathlib import Path

from rehabfuzz.adaptation import build_default_rulebase
from rehabfuzz.rule_dsl import format_rulebase

HEADER = """\
# Default GameProgress rule base.
#
# One rule per input term: VG -> Progression, G -> Repetition,
# B -> Simplification, H -> Harmfulness. Across all inputs, "any VG" and
# "all VG" -> Progression and "any G" -> Repetition. Per group of related
# inputs, "any H" -> Harmfulness.
# Harmfulness rules carry full weight so a single harmful reading dominates.
# Regenerate with scripts/gen_default_rules.py.

"""

if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "src" / "rehabfuzz" / "data" / "default.frules"
    target.write_text(HEADER + format_rulebase(build_default_rulebase()), encoding="utf-8")
    print(f"wrote {target}")
