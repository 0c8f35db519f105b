"""Text format for rule bases (``.frules``).

Example::

    # comments run to end of line
    INPUT O.E_W [0, 90] { VG(0, 0, 30) G(0, 30, 60) B(30, 60, 90) H(60, 90, 90) }
    OUTPUT GameProgress [0, 80] { Progression(-10, 10, 30) ... }
    RULE [weight=0.5] IF O.E_W IS VG AND O.E_E IS NOT H THEN GameProgress IS Progression

Statements may span lines. Keywords are upper case and reserved. Identifiers
match ``[A-Za-z_][A-Za-z0-9_.]*``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from .fuzzy_core import (
    AND,
    OR,
    Clause,
    FuzzyError,
    LinguisticVariable,
    Rule,
    RuleBase,
    TriangularMF,
    coverage_gaps,
    mf_eval,
)

KEYWORDS = frozenset({"INPUT", "OUTPUT", "RULE", "IF", "IS", "NOT", "AND", "OR", "THEN"})
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[\[\]{}(),=])
    """,
    re.VERBOSE,
)


class RuleSyntaxError(ValueError):
    """Malformed rule source, located at a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", "keyword", "punct", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> Iterator[Token]:
    if text.startswith("\ufeff"):
        text = text[1:]
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            yield Token("keyword" if value in KEYWORDS else "ident", value, line, col)
        elif kind in ("number", "punct"):
            yield Token(kind, value, line, col)
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.i = 0
        self.inputs: dict[str, LinguisticVariable] = {}
        self.output: Optional[LinguisticVariable] = None
        self.rules: list[Rule] = []

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def _fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise RuleSyntaxError(message, tok.line, tok.col)

    def _describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def expect_punct(self, ch: str) -> Token:
        if self.tok.kind != "punct" or self.tok.text != ch:
            self._fail(f"expected {ch!r}, found {self._describe(self.tok)}")
        return self._advance()

    def expect_keyword(self, kw: str) -> Token:
        if self.tok.kind != "keyword" or self.tok.text != kw:
            self._fail(f"expected {kw}, found {self._describe(self.tok)}")
        return self._advance()

    def expect_ident(self, what: str) -> Token:
        if self.tok.kind != "ident":
            self._fail(f"expected {what}, found {self._describe(self.tok)}")
        return self._advance()

    def expect_number(self, what: str) -> tuple[float, Token]:
        tok = self.tok
        if tok.kind != "number":
            self._fail(f"expected {what}, found {self._describe(tok)}")
        self._advance()
        value = float(tok.text)
        if value != value or value in (float("inf"), float("-inf")):
            self._fail(f"{what} is not a finite number", tok)
        return value, tok

    def at_punct(self, ch: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == ch

    # -- grammar -------------------------------------------------------
    def parse(self) -> RuleBase:
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind == "keyword" and tok.text in ("INPUT", "OUTPUT"):
                self.declaration()
            elif tok.kind == "keyword" and tok.text == "RULE":
                self.rule()
            else:
                self._fail(f"expected INPUT, OUTPUT or RULE, found {self._describe(tok)}")
        if self.output is None:
            self._fail("missing OUTPUT declaration")
        try:
            return RuleBase(tuple(self.inputs.values()), self.output, tuple(self.rules))
        except FuzzyError as exc:  # pragma: no cover - every check is done earlier with a location
            self._fail(str(exc))

    def declaration(self) -> None:
        kw = self._advance()
        name_tok = self.expect_ident("variable name")
        name = name_tok.text
        if name in self.inputs or (self.output is not None and self.output.name == name):
            self._fail(f"variable {name!r} declared twice", name_tok)
        if kw.text == "OUTPUT" and self.output is not None:
            self._fail("only one OUTPUT variable may be declared", kw)
        self.expect_punct("[")
        lo, lo_tok = self.expect_number("universe lower bound")
        if self.at_punct(","):
            self._advance()
        hi, _ = self.expect_number("universe upper bound")
        self.expect_punct("]")
        if not lo < hi:
            self._fail(f"universe of {name!r} must satisfy lo < hi", lo_tok)
        self.expect_punct("{")
        terms: list[tuple[str, TriangularMF]] = []
        seen: set[str] = set()
        while not self.at_punct("}"):
            label_tok = self.expect_ident("term label or '}'")
            if label_tok.text in seen:
                self._fail(f"duplicate term label {label_tok.text!r} in {name!r}", label_tok)
            seen.add(label_tok.text)
            self.expect_punct("(")
            a, _ = self.expect_number("alpha")
            self.expect_punct(",")
            b, _ = self.expect_number("beta")
            self.expect_punct(",")
            c, _ = self.expect_number("gamma")
            self.expect_punct(")")
            if self.at_punct(","):
                self._advance()
            if not a <= b <= c:
                self._fail(
                    f"term {label_tok.text!r} needs alpha <= beta <= gamma, got ({a}, {b}, {c})",
                    label_tok,
                )
            if c < lo or a > hi:
                self._fail(f"term {label_tok.text!r} lies outside the universe of {name!r}", label_tok)
            terms.append((label_tok.text, TriangularMF(a, b, c)))
        self.expect_punct("}")
        if not terms:
            self._fail(f"variable {name!r} declares no terms", name_tok)
        var = LinguisticVariable(name, (lo, hi), tuple(terms))
        if kw.text == "OUTPUT":
            self.output = var
        else:
            self.inputs[name] = var

    def rule(self) -> None:
        self._advance()
        weight = 1.0
        if self.at_punct("["):
            self._advance()
            key = self.expect_ident("'weight'")
            if key.text != "weight":
                self._fail(f"unknown rule annotation {key.text!r}", key)
            self.expect_punct("=")
            weight, w_tok = self.expect_number("weight value")
            if not 0.0 <= weight <= 1.0:
                self._fail(f"weight outside [0,1]: {w_tok.text}", w_tok)
            self.expect_punct("]")
        self.expect_keyword("IF")
        clauses = [self.clause()]
        connectives: list[str] = []
        while self.tok.kind == "keyword" and self.tok.text in (AND, OR):
            connectives.append(self._advance().text)
            clauses.append(self.clause())
        self.expect_keyword("THEN")
        out_tok = self.expect_ident("output variable name")
        if self.output is None or out_tok.text != self.output.name:
            if out_tok.text in self.inputs:
                self._fail(f"{out_tok.text!r} is an INPUT; the consequent must use the OUTPUT", out_tok)
            self._fail(f"unknown output variable {out_tok.text!r} (declare OUTPUT before use)", out_tok)
        self.expect_keyword("IS")
        label_tok = self.expect_ident("output term label")
        if label_tok.text not in self.output.labels:
            self._fail(f"output {self.output.name!r} has no term {label_tok.text!r}", label_tok)
        self.rules.append(
            Rule(tuple(clauses), (self.output.name, label_tok.text), tuple(connectives), weight)
        )

    def clause(self) -> Clause:
        var_tok = self.expect_ident("input variable name")
        var = self.inputs.get(var_tok.text)
        if var is None:
            if self.output is not None and var_tok.text == self.output.name:
                self._fail(f"{var_tok.text!r} is the OUTPUT and cannot appear in a condition", var_tok)
            self._fail(f"unknown input variable {var_tok.text!r} (declare before use)", var_tok)
        self.expect_keyword("IS")
        negated = False
        if self.tok.kind == "keyword" and self.tok.text == "NOT":
            self._advance()
            negated = True
        label_tok = self.expect_ident("term label")
        if label_tok.text not in var.labels:
            self._fail(f"variable {var.name!r} has no term {label_tok.text!r}", label_tok)
        return Clause(var.name, label_tok.text, negated)


def parse_rulebase(text: str) -> RuleBase:
    """Parse ``.frules`` source into a validated :class:`RuleBase`.

    Raises :class:`RuleSyntaxError` (with line/column) on any malformed input.
    """
    return _Parser(text).parse()


def load_rulebase(path) -> RuleBase:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        col = exc.start - (data.rfind(b"\n", 0, exc.start) + 1) + 1
        raise RuleSyntaxError("file is not valid UTF-8", line, col) from None
    return parse_rulebase(text)


def _num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _format_var(kind: str, var: LinguisticVariable) -> str:
    lines = [f"{kind} {var.name} [{_num(var.lo)}, {_num(var.hi)}] {{"]
    for label, mf in var.terms:
        lines.append(f"  {label}({_num(mf.alpha)}, {_num(mf.beta)}, {_num(mf.gamma)})")
    lines.append("}")
    return "\n".join(lines)


def format_rule(rule: Rule) -> str:
    parts = ["RULE"]
    if rule.weight != 1.0:
        parts.append(f"[weight={_num(rule.weight)}]")
    parts.append("IF")
    for i, clause in enumerate(rule.antecedents):
        if i:
            parts.append(rule.connectives[i - 1])
        parts.append(clause.variable)
        parts.append("IS NOT" if clause.negated else "IS")
        parts.append(clause.term)
    parts.extend(["THEN", rule.consequent[0], "IS", rule.consequent[1]])
    return " ".join(parts)


def format_rulebase(rb: RuleBase) -> str:
    blocks = [_format_var("INPUT", v) for v in rb.inputs]
    blocks.append(_format_var("OUTPUT", rb.output))
    text = "\n\n".join(blocks) + "\n"
    if rb.rules:
        text += "\n" + "\n".join(format_rule(r) for r in rb.rules) + "\n"
    return text


@dataclass(frozen=True)
class Diagnostic:
    code: str  # "coverage-gap" | "unreachable-term" | "dead-rule"
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def _variable_satisfiable(var: LinguisticVariable, positive, negative) -> bool:
    """Is there an x in the universe with every positive term > 0 and every negated term < 1?"""
    lo, hi = var.universe
    if not positive:
        return True
    a = max([lo] + [mf.alpha for mf in positive])
    c = min([hi] + [mf.gamma for mf in positive])
    if a < c:
        return True
    candidates = {lo, hi, a, c} | {mf.beta for mf in positive}
    for x in candidates:
        if not lo <= x <= hi:
            continue
        if all(mf_eval(mf, x) > 0.0 for mf in positive) and all(
            mf_eval(mf, x) < 1.0 for mf in negative
        ):
            return True
    return False


def _rule_can_fire(rb: RuleBase, rule: Rule) -> bool:
    for group in rule.and_groups():
        ok = True
        by_var: dict[str, tuple[list, list]] = {}
        for clause in group:
            mf = rb.variables[clause.variable].term(clause.term)
            pos, neg = by_var.setdefault(clause.variable, ([], []))
            (neg if clause.negated else pos).append(mf)
        for name, (pos, neg) in by_var.items():
            if not _variable_satisfiable(rb.variables[name], pos, neg):
                ok = False
                break
        if ok:
            return True
    return False


def validate(rb: RuleBase) -> list[Diagnostic]:
    """Non-fatal consistency report: coverage gaps, unused terms, rules that never fire."""
    diags: list[Diagnostic] = []
    for var in (*rb.inputs, rb.output):
        for g0, g1 in coverage_gaps(var):
            where = f"x = {_num(g0)}" if g0 == g1 else f"[{_num(g0)}, {_num(g1)}]"
            diags.append(Diagnostic("coverage-gap", f"{var.name}: no term covers {where}"))
    used = {(c.variable, c.term) for r in rb.rules for c in r.antecedents}
    used |= {tuple(r.consequent) for r in rb.rules}
    for var in (*rb.inputs, rb.output):
        for label in var.labels:
            if (var.name, label) not in used:
                diags.append(
                    Diagnostic("unreachable-term", f"{var.name}.{label} is never referenced by a rule")
                )
    for i, rule in enumerate(rb.rules):
        if rule.weight == 0.0:
            diags.append(Diagnostic("dead-rule", f"rule {i + 1} has weight 0 and never fires"))
        elif not _rule_can_fire(rb, rule):
            diags.append(
                Diagnostic("dead-rule", f"rule {i + 1}: antecedent can never exceed 0 ({format_rule(rule)})")
            )
    return diags


__all__ = [
    "Diagnostic",
    "IDENT_RE",
    "KEYWORDS",
    "RuleSyntaxError",
    "format_rule",
    "format_rulebase",
    "load_rulebase",
    "parse_rulebase",
    "tokenize",
    "validate",
]
