"""CSV / JSON-lines serialization of frames, events and decisions.

Frames CSV: one row per frame with columns ``task`` (optional), ``t``, then
for each of wrist, elbow, shoulder ``<joint>_ox, _oy, _oz`` (deg) and
``<joint>_px, _py, _pz`` (cm), then ``head_tilt``, ``spine_tilt``, ``pedal``.
Floats are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .session_metrics import JOINTS, MotionFrame, TaskEvent

POSE_COLUMNS = tuple(
    f"{joint.lower()}_{axis}" for joint in JOINTS for axis in ("ox", "oy", "oz", "px", "py", "pz")
)
FRAME_COLUMNS = ("t",) + POSE_COLUMNS + ("head_tilt", "spine_tilt", "pedal")


class TraceFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def frame_row(frame: MotionFrame) -> list[str]:
    row = [_fmt(frame.t)]
    for o, p in zip(frame.orientations, frame.positions):
        row.extend(_fmt(v) for v in o)
        row.extend(_fmt(v) for v in p)
    row.extend([_fmt(frame.head_tilt), _fmt(frame.spine_tilt), _fmt(frame.pedal)])
    return row


def write_frames_csv(fh, frames_by_task: Iterable[tuple[Optional[int], Sequence[MotionFrame]]]) -> None:
    """Write frames; ``frames_by_task`` yields ``(task_index, frames)`` pairs.

    A task index of ``None`` for every group omits the task column.
    """
    groups = list(frames_by_task)
    with_task = any(task is not None for task, _ in groups)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow((("task",) if with_task else ()) + FRAME_COLUMNS)
    for task, frames in groups:
        for frame in frames:
            writer.writerow(([str(task)] if with_task else []) + frame_row(frame))


def frames_to_csv(frames: Sequence[MotionFrame]) -> str:
    buf = io.StringIO()
    write_frames_csv(buf, [(None, frames)])
    return buf.getvalue()


def read_frames_csv(path_or_fh) -> dict[Optional[int], list[MotionFrame]]:
    """Read a frames CSV into ``{task: frames}`` (key ``None`` if there is no task column)."""
    if isinstance(path_or_fh, (str, Path)):
        with open(path_or_fh, newline="", encoding="utf-8") as fh:
            return read_frames_csv(fh)
    reader = csv.reader(path_or_fh)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("frames CSV is empty") from None
    with_task = bool(header) and header[0] == "task"
    expected = (("task",) if with_task else ()) + FRAME_COLUMNS
    if tuple(header) != expected:
        raise TraceFormatError(f"unexpected frames CSV header: {header}")
    out: dict[Optional[int], list[MotionFrame]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise TraceFormatError(f"line {lineno}: expected {len(expected)} fields, got {len(row)}")
        try:
            task = int(row[0]) if with_task else None
            vals = [float(v) for v in row[1 if with_task else 0 :]]
            orient = tuple(tuple(vals[1 + 6 * j : 4 + 6 * j]) for j in range(3))
            pos = tuple(tuple(vals[4 + 6 * j : 7 + 6 * j]) for j in range(3))
            frame = MotionFrame(vals[0], orient, pos, vals[19], vals[20], vals[21])
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        out.setdefault(task, []).append(frame)
    if not out:
        raise TraceFormatError("frames CSV has no data rows")
    return out


def event_to_dict(event: TaskEvent, task: Optional[int] = None) -> dict:
    d = {} if task is None else {"task": task}
    d.update(
        object_id=event.object_id,
        t_spawned=event.t_spawned,
        t_reached=event.t_reached,
        t_collected=event.t_collected,
        target_collect_time=event.target_collect_time,
        target_release_time=event.target_release_time,
    )
    return d


def write_jsonl(fh, records: Iterable[dict]) -> None:
    for rec in records:
        fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_events_jsonl(path) -> dict[Optional[int], list[TaskEvent]]:
    out: dict[Optional[int], list[TaskEvent]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                task = rec.pop("task", None)
                out.setdefault(task, []).append(TaskEvent(**rec))
            except (ValueError, TypeError) as exc:
                raise TraceFormatError(f"line {lineno}: {exc}") from None
    return out


__all__ = [
    "FRAME_COLUMNS",
    "TraceFormatError",
    "event_to_dict",
    "frames_to_csv",
    "read_events_jsonl",
    "read_frames_csv",
    "write_frames_csv",
    "write_jsonl",
]
