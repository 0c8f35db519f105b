"""Command-line entry point.

Exit codes: 0 success, 2 input/config error, 3 internal/runtime error,
4 domain error (unreachable target, singular pose, no rule fired).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .adaptation import classify, default_rulebase
from .fuzzy_core import FuzzyError, NoRuleFired, infer
from .kinematics import ArmGeometry, KinematicsError, forward_kinematics, solve_ik
from .rule_dsl import RuleSyntaxError, format_rule, load_rulebase, validate
from .session_metrics import INPUT_NAMES, MetricError, SessionTrace, build_fuzzy_inputs
from .simulator import SessionConfig, SessionResult, SimulationError, run_session
from .traceio import (
    TraceFormatError,
    event_to_dict,
    read_events_jsonl,
    read_frames_csv,
    write_frames_csv,
    write_jsonl,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3
EXIT_DOMAIN = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_rulebase(path: Optional[str]):
    if path is None:
        return default_rulebase()
    try:
        return load_rulebase(path)
    except OSError as exc:
        raise CliError(f"cannot read rule base {path}: {exc.strerror or exc}", EXIT_INPUT) from None
    except RuleSyntaxError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    except FuzzyError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def _emit(fmt: str, rows: list[dict], text: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(rows if len(rows) != 1 else rows[0], indent=2, ensure_ascii=False) + "\n")
    elif fmt == "csv":
        if rows:
            writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    else:
        out.write(text)


# -- run ---------------------------------------------------------------------


def write_session_outputs(result: SessionResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "frames.csv", "w", newline="", encoding="utf-8") as fh:
        write_frames_csv(fh, [(i, tr.frames) for i, tr in enumerate(result.traces)])
    with open(out_dir / "reference.csv", "w", newline="", encoding="utf-8") as fh:
        write_frames_csv(fh, [(i, tr.reference) for i, tr in enumerate(result.traces)])
    with open(out_dir / "events.jsonl", "w", encoding="utf-8") as fh:
        write_jsonl(fh, (event_to_dict(e, i) for i, tr in enumerate(result.traces) for e in tr.events))
    with open(out_dir / "decisions.jsonl", "w", encoding="utf-8") as fh:
        write_jsonl(fh, ({"task": i, **d.to_dict()} for i, d in enumerate(result.decisions)))


def _summary_rows(seed: int, result: SessionResult) -> list[dict]:
    return [
        {
            "seed": seed,
            "task": i,
            "action": d.action.value,
            "crisp": round(d.crisp, 6),
            "level_before": d.difficulty_before.level,
            "level_after": d.difficulty_after.level,
            "halted": d.difficulty_after.halted,
        }
        for i, d in enumerate(result.decisions)
    ]


def _summary_text(seed: int, result: SessionResult, out_dir: Path) -> str:
    lines = [f"session seed {seed} -> {out_dir}", "task  action          crisp     level"]
    for i, d in enumerate(result.decisions):
        lines.append(
            f"{i:<5} {d.action.value:<15} {d.crisp:8.3f}  {d.difficulty_before.level} -> {d.difficulty_after.level}"
        )
    curve = [result.decisions[0].difficulty_before.level] + [d.difficulty_after.level for d in result.decisions]
    lines.append("level curve: " + " ".join(str(v) for v in curve))
    if result.halted_task is not None:
        lines.append(f"halted at task {result.halted_task} (Harmfulness)")
    return "\n".join(lines) + "\n"


def _run_one(config: SessionConfig, seed: int, out_dir: Path, rulebase_path: Optional[str]):
    cfg = replace(config, seed=seed)
    if rulebase_path is not None:
        cfg = replace(cfg, rulebase_path=rulebase_path)
    result = run_session(cfg)
    write_session_outputs(result, out_dir)
    return seed, result, out_dir


def cmd_run(args) -> int:
    try:
        config = SessionConfig.load(args.config)
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror or exc}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.config}: invalid JSON: {exc}", EXIT_INPUT) from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"{args.config}: invalid config: {exc}", EXIT_INPUT) from None
    rulebase_path = args.rulebase or config.rulebase_path
    _load_rulebase(rulebase_path)  # surface rule base errors as input errors

    seeds = args.seed if args.seed else [config.seed]
    if any(s < 0 for s in seeds):
        raise CliError("seeds must be non-negative", EXIT_INPUT)
    out = Path(args.out)
    dirs = [out] if len(seeds) == 1 else [out / f"seed_{s}" for s in seeds]
    jobs = max(1, args.jobs)
    try:
        if jobs == 1 or len(seeds) == 1:
            results = [_run_one(config, s, d, rulebase_path) for s, d in zip(seeds, dirs)]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_one, config, s, d, rulebase_path) for s, d in zip(seeds, dirs)]
                results = [f.result() for f in futures]
    except SimulationError as exc:
        raise CliError(str(exc), EXIT_RUNTIME) from None
    except OSError as exc:
        raise CliError(f"cannot write outputs: {exc}", EXIT_RUNTIME) from None

    rows: list[dict] = []
    text = []
    for seed, result, out_dir in results:
        rows.extend(_summary_rows(seed, result))
        text.append(_summary_text(seed, result, out_dir))
    _emit(args.format, rows, "\n".join(text))
    return EXIT_OK


# -- infer -------------------------------------------------------------------


def _parse_assignment(text: str) -> tuple[str, Optional[float]]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise CliError(f"expected NAME=VALUE, got {text!r}", EXIT_INPUT)
    if value.lower() in ("none", "inactive"):
        return name, None
    try:
        v = float(value)
    except ValueError:
        raise CliError(f"{name}: not a number: {value!r}", EXIT_INPUT) from None
    if not math.isfinite(v):
        raise CliError(f"{name}: value must be finite", EXIT_INPUT)
    return name, v


def cmd_infer(args) -> int:
    rb = _load_rulebase(args.rulebase)
    inputs: dict[str, Optional[float]] = {v.name: 0.0 for v in rb.inputs}
    for item in args.assignments:
        name, value = _parse_assignment(item)
        if name not in inputs:
            raise CliError(f"unknown input variable {name!r}", EXIT_INPUT)
        inputs[name] = value
    try:
        result = infer(rb, inputs)
    except NoRuleFired as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    lo, hi = rb.output.universe
    action = None
    if (lo, hi) == (0.0, 80.0):
        action = classify(result.crisp).value
    rows = [
        {"rule": i + 1, "strength": w, "text": format_rule(rule)}
        for i, (rule, w) in enumerate(zip(rb.rules, result.firing_strengths))
    ]
    fired = [r for r in rows if r["strength"] > 0]
    lines = [f"{r['rule']:>4}  {r['strength']:.6f}  {r['text']}" for r in fired]
    lines.append(f"fired rules: {len(fired)} of {len(rows)}, total strength {sum(r['strength'] for r in fired):.6f}")
    lines.append(f"crisp {rb.output.name} = {result.crisp:.6f}")
    if action is not None:
        lines.append(f"action: {action}")
    if args.format == "json":
        _emit("json", [{"crisp": result.crisp, "action": action, "rules": rows}], "")
    else:
        _emit(args.format, rows, "\n".join(lines) + "\n")
    return EXIT_OK


# -- ik ----------------------------------------------------------------------


def cmd_ik(args) -> int:
    try:
        geom = ArmGeometry(args.l1, args.l2, args.l3)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    target = (args.x, args.y, args.z)
    try:
        q = solve_ik(geom, target, args.branch)
    except KinematicsError as exc:
        kind = "unreachable" if "reachable" in str(exc) else "singular"
        raise CliError(f"{kind}: {exc}", EXIT_DOMAIN) from None
    p = forward_kinematics(geom, q)
    residual = math.dist(p, target)
    deg = [math.degrees(a) for a in q]
    row = {"theta1_deg": deg[0], "theta2_deg": deg[1], "theta3_deg": deg[2], "fk_residual": residual}
    text = "".join(f"theta{i + 1} = {d:.9f} deg\n" for i, d in enumerate(deg))
    text += f"FK residual = {residual:.3e}\n"
    _emit(args.format, [row], text)
    return EXIT_OK


# -- check-rules -------------------------------------------------------------


def cmd_check_rules(args) -> int:
    rb = _load_rulebase(args.path)
    diags = validate(rb)
    rows = [{"code": d.code, "message": d.message} for d in diags]
    text = "".join(f"{args.path}: {d}\n" for d in diags)
    text += f"{len(rb.inputs)} inputs, {len(rb.rules)} rules, {len(diags)} diagnostics\n"
    _emit(args.format, rows, text)
    if diags and args.strict:
        return EXIT_INPUT
    return EXIT_OK


# -- metrics -----------------------------------------------------------------


def _pick_task(groups: dict, task: Optional[int], what: str):
    if task is None:
        if len(groups) > 1:
            raise CliError(f"{what} holds several tasks; choose one with --task", EXIT_INPUT)
        return next(iter(groups.values()))
    if task in groups:
        return groups[task]
    if list(groups) == [None]:  # single-task file without a task column
        return groups[None]
    raise CliError(f"{what} has no task {task}", EXIT_INPUT)


def cmd_metrics(args) -> int:
    try:
        frames = _pick_task(read_frames_csv(args.trace), args.task, args.trace)
        reference = _pick_task(read_frames_csv(args.reference), args.task, args.reference)
        events = []
        if args.events:
            events = _pick_task(read_events_jsonl(args.events), args.task, args.events)
        trace = SessionTrace(tuple(frames), tuple(events), tuple(reference))
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}", EXIT_INPUT) from None
    except (TraceFormatError, ValueError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    active = set(args.active) if args.active else set(INPUT_NAMES)
    if not args.events:
        active -= {"T.E_C", "T.E_R"}
    try:
        vector = build_fuzzy_inputs(trace, active)
    except MetricError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    values = vector.as_dict()
    text = "".join(
        f"{name:<7} {'inactive' if v is None else format(v, '.6f')}\n" for name, v in values.items()
    )
    _emit(args.format, [values], text)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--rulebase", help="path to a .frules rule base (default: shipped)")

    parser = argparse.ArgumentParser(prog="rehabfuzz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate a session from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, action="append", help="session seed (repeatable)")
    p.add_argument("--jobs", type=int, default=1, help="parallel seeds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("infer", parents=[common], help="evaluate a rule base on NAME=VALUE inputs")
    p.add_argument("assignments", nargs="*", metavar="NAME=VALUE")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ik", parents=[common], help="solve inverse kinematics")
    for name in ("l1", "l2", "l3", "x", "y", "z"):
        p.add_argument(name, type=float)
    p.add_argument("--branch", choices=("up", "down"), default="up")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("check-rules", parents=[common], help="parse and lint a rule base")
    p.add_argument("path")
    p.add_argument("--strict", action="store_true", help="treat diagnostics as errors")
    p.set_defaults(func=cmd_check_rules)

    p = sub.add_parser("metrics", parents=[common], help="compute fuzzy inputs from CSV traces")
    p.add_argument("trace")
    p.add_argument("reference")
    p.add_argument("--events", help="events JSONL (enables the timing inputs)")
    p.add_argument("--task", type=int, help="task index when files hold several tasks")
    p.add_argument("--active", nargs="+", choices=INPUT_NAMES, help="subset of inputs to compute")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"rehabfuzz {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the runtime exit code
        print(f"rehabfuzz {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
