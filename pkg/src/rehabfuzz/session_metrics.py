"""Turn a recorded task (player trace + instructor reference + events) into
the crisp inputs of the fuzzy controller.

Every metric is clamped into the universe of its fuzzy variable:

=========================  ========  =======
input                      universe  unit
=========================  ========  =======
O.E_W, O.E_E, O.E_S        [0, 90]   deg
P.E_W, P.E_E, P.E_S        [0, 90]   cm
AV.E_W, AV.E_E, AV.E_S     [0, 90]   deg/s
T.E_H                      [0, 32]   deg
T.E_S                      [0, 36]   deg
T.E_C, T.E_R               [0, 6]    s
=========================  ========  =======
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .kinematics import average_angular_velocity

JOINTS = ("Wrist", "Elbow", "Shoulder")
_JOINT_INDEX = {j: i for i, j in enumerate(JOINTS)}
_JOINT_CODE = {"Wrist": "W", "Elbow": "E", "Shoulder": "S"}

INPUT_UNIVERSES: dict[str, tuple[float, float]] = {
    "O.E_W": (0.0, 90.0),
    "O.E_E": (0.0, 90.0),
    "O.E_S": (0.0, 90.0),
    "P.E_W": (0.0, 90.0),
    "P.E_E": (0.0, 90.0),
    "P.E_S": (0.0, 90.0),
    "AV.E_W": (0.0, 90.0),
    "AV.E_E": (0.0, 90.0),
    "AV.E_S": (0.0, 90.0),
    "T.E_H": (0.0, 32.0),
    "T.E_S": (0.0, 36.0),
    "T.E_C": (0.0, 6.0),
    "T.E_R": (0.0, 6.0),
}
INPUT_NAMES = tuple(INPUT_UNIVERSES)

PEDAL_DEADBAND = 0.05


class MetricError(ValueError):
    def __init__(self, message: str, metric: Optional[str] = None):
        super().__init__(f"{metric}: {message}" if metric else message)
        self.metric = metric


Triple = tuple[float, float, float]


@dataclass(frozen=True)
class MotionFrame:
    """One sample of the tracked upper body.

    ``orientations`` and ``positions`` are indexed like :data:`JOINTS`.
    Orientations are per-axis Euler angles in degrees, positions in cm.
    """

    t: float
    orientations: tuple[Triple, Triple, Triple]
    positions: tuple[Triple, Triple, Triple]
    head_tilt: float = 0.0
    spine_tilt: float = 0.0
    pedal: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"frame time must be finite, got {self.t}")
        if len(self.orientations) != 3 or len(self.positions) != 3:
            raise ValueError("a frame needs one orientation and one position per joint")
        if not (self.head_tilt >= 0 and self.spine_tilt >= 0):
            raise ValueError("tilts must be non-negative")
        if not -1.0 <= self.pedal <= 1.0:
            raise ValueError(f"pedal value {self.pedal} outside [-1, 1]")

    def orientation(self, joint: str) -> Triple:
        return self.orientations[_JOINT_INDEX[joint]]

    def position(self, joint: str) -> Triple:
        return self.positions[_JOINT_INDEX[joint]]


@dataclass(frozen=True)
class TaskEvent:
    object_id: int
    t_spawned: float
    t_reached: Optional[float]
    t_collected: Optional[float]
    target_collect_time: float
    target_release_time: float

    def __post_init__(self):
        times = [self.t_spawned, self.t_reached, self.t_collected]
        present = [t for t in times if t is not None]
        if any(b < a for a, b in zip(present, present[1:])):
            raise ValueError(f"event {self.object_id}: need t_spawned <= t_reached <= t_collected")

    @property
    def completed(self) -> bool:
        return self.t_reached is not None and self.t_collected is not None


def _frame_arrays(frames: Sequence[MotionFrame]) -> dict[str, np.ndarray]:
    return {
        "t": np.array([f.t for f in frames], dtype=np.float64),
        "orient": np.array([f.orientations for f in frames], dtype=np.float64),
        "pos": np.array([f.positions for f in frames], dtype=np.float64),
        "head": np.array([f.head_tilt for f in frames], dtype=np.float64),
        "spine": np.array([f.spine_tilt for f in frames], dtype=np.float64),
        "pedal": np.array([f.pedal for f in frames], dtype=np.float64),
    }


@dataclass(frozen=True)
class SessionTrace:
    frames: tuple[MotionFrame, ...]
    events: tuple[TaskEvent, ...] = ()
    reference: tuple[MotionFrame, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "reference", tuple(self.reference))
        for name in ("frames", "reference"):
            stream = getattr(self, name)
            if not stream:
                raise ValueError(f"trace {name} must be non-empty")
            ts = [f.t for f in stream]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError(f"trace {name} timestamps must be strictly increasing")

    @cached_property
    def player_arrays(self) -> dict[str, np.ndarray]:
        return _frame_arrays(self.frames)

    @cached_property
    def reference_arrays(self) -> dict[str, np.ndarray]:
        return _frame_arrays(self.reference)

    def swapped(self) -> "SessionTrace":
        """Same trace with player and reference exchanged."""
        return SessionTrace(self.reference, self.events, self.frames)


def _nearest(t_src: np.ndarray, t_query: np.ndarray) -> np.ndarray:
    """Index into ``t_src`` of the nearest timestamp for each query (ties go earlier)."""
    j = np.searchsorted(t_src, t_query)
    j = np.clip(j, 1, len(t_src) - 1) if len(t_src) > 1 else np.zeros_like(j)
    if len(t_src) == 1:
        return j
    left = t_src[j - 1]
    right = t_src[j]
    return np.where(t_query - left <= right - t_query, j - 1, j)


def _aligned_mean(ta: np.ndarray, tb: np.ndarray, pair_value) -> float:
    """Mean of ``pair_value(ia, ib)`` over nearest-timestamp matches, both ways.

    Frames of each stream inside the common time span are matched to the
    nearest frame of the other stream; the two directional means are averaged,
    which keeps the result symmetric in the two streams.
    """
    start, stop = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    if start > stop:
        raise MetricError("player and reference traces do not overlap in time")
    ia = np.nonzero((ta >= start) & (ta <= stop))[0]
    ib = np.nonzero((tb >= start) & (tb <= stop))[0]
    # a sparse stream may have no frame inside a short overlap; then only the
    # other direction contributes (the window edge always belongs to one stream)
    means = []
    if len(ia):
        means.append(float(np.mean(pair_value(ia, _nearest(tb, ta[ia])))))
    if len(ib):
        means.append(float(np.mean(pair_value(_nearest(ta, tb[ib]), ib))))
    return sum(means) / len(means)


def wrapped_abs_diff(a, b) -> np.ndarray:
    """|a - b| for angles in degrees, wrapped into [0, 180]."""
    d = np.mod(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64) + 180.0, 360.0) - 180.0
    return np.abs(d)


def orientation_error(trace: SessionTrace, joint: str) -> float:
    j = _JOINT_INDEX[joint]
    p, r = trace.player_arrays, trace.reference_arrays
    po, ro = p["orient"][:, j, :], r["orient"][:, j, :]

    def per_pair(ia, ib):
        return np.minimum(wrapped_abs_diff(po[ia], ro[ib]).max(axis=1), 90.0)

    return min(_aligned_mean(p["t"], r["t"], per_pair), 90.0)


def position_error(trace: SessionTrace, joint: str) -> float:
    j = _JOINT_INDEX[joint]
    p, r = trace.player_arrays, trace.reference_arrays
    pp, rp = p["pos"][:, j, :], r["pos"][:, j, :]

    def per_pair(ia, ib):
        return np.linalg.norm(pp[ia] - rp[ib], axis=1)

    return min(_aligned_mean(p["t"], r["t"], per_pair), 90.0)


def angular_speed_samples(t: np.ndarray, orient: np.ndarray) -> np.ndarray:
    """Finite-difference angular speed (deg/s) at frame midpoints, as (t, v) rows.

    The speed is the norm of the per-axis wrapped orientation change divided
    by the frame interval.
    """
    d = np.mod(np.diff(orient, axis=0) + 180.0, 360.0) - 180.0
    v = np.linalg.norm(d, axis=1) / np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    return np.column_stack([tm, v])


def _average_speed(t: np.ndarray, orient: np.ndarray) -> float:
    samples = angular_speed_samples(t, orient)
    if len(samples) == 1:
        return float(samples[0, 1])
    return average_angular_velocity(samples)


def angular_velocity_error(trace: SessionTrace, joint: str) -> float:
    j = _JOINT_INDEX[joint]
    p, r = trace.player_arrays, trace.reference_arrays
    if len(p["t"]) < 2 or len(r["t"]) < 2:
        raise MetricError("angular velocity needs at least 2 frames in each stream")
    av_player = _average_speed(p["t"], p["orient"][:, j, :])
    av_ref = _average_speed(r["t"], r["orient"][:, j, :])
    return min(abs(av_player - av_ref), 90.0)


def tilt_errors(trace: SessionTrace) -> tuple[float, float]:
    p = trace.player_arrays
    head = min(float(np.mean(p["head"])), INPUT_UNIVERSES["T.E_H"][1])
    spine = min(float(np.mean(p["spine"])), INPUT_UNIVERSES["T.E_S"][1])
    return head, spine


def time_errors(events: Iterable[TaskEvent]) -> tuple[float, float]:
    done = [e for e in events if e.completed]
    if not done:
        raise MetricError("no completed task events")
    cap = INPUT_UNIVERSES["T.E_C"][1]
    collect = np.mean([abs((e.t_reached - e.t_spawned) - e.target_collect_time) for e in done])
    release = np.mean([abs((e.t_collected - e.t_reached) - e.target_release_time) for e in done])
    return min(float(collect), cap), min(float(release), cap)


def pedal_dominance(trace: SessionTrace, deadband: float = PEDAL_DEADBAND) -> tuple[float, str]:
    avg = float(np.mean(trace.player_arrays["pedal"]))
    if avg < -deadband:
        return avg, "Left"
    if avg > deadband:
        return avg, "Right"
    return avg, "Neutral"


@dataclass(frozen=True)
class FuzzyInputVector:
    """The 13 controller inputs; ``None`` marks an inactive input."""

    values: Mapping[str, Optional[float]]

    def __post_init__(self):
        vals = {}
        for name in INPUT_NAMES:
            v = self.values.get(name)
            if v is not None:
                lo, hi = INPUT_UNIVERSES[name]
                v = min(max(float(v), lo), hi)
            vals[name] = v
        unknown = set(self.values) - set(INPUT_NAMES)
        if unknown:
            raise ValueError(f"unknown fuzzy inputs: {sorted(unknown)}")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, name: str) -> Optional[float]:
        return self.values[name]

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(n for n in INPUT_NAMES if self.values[n] is not None)

    def as_dict(self) -> dict[str, Optional[float]]:
        return dict(self.values)


def _normalize_active(active_set) -> tuple[str, ...]:
    if active_set is None:
        return INPUT_NAMES
    active = set(active_set)
    unknown = active - set(INPUT_NAMES)
    if unknown:
        raise ValueError(f"unknown fuzzy inputs: {sorted(unknown)}")
    return tuple(n for n in INPUT_NAMES if n in active)


def build_fuzzy_inputs(trace: SessionTrace, active_set=None) -> FuzzyInputVector:
    active = _normalize_active(active_set)
    values: dict[str, Optional[float]] = {n: None for n in INPUT_NAMES}

    def run(name, fn, *args):
        try:
            return fn(*args)
        except MetricError as exc:
            raise MetricError(str(exc).split(": ", 1)[-1], name) from exc
        except ValueError as exc:
            raise MetricError(str(exc), name) from exc

    for joint in JOINTS:
        code = _JOINT_CODE[joint]
        if f"O.E_{code}" in active:
            values[f"O.E_{code}"] = run(f"O.E_{code}", orientation_error, trace, joint)
        if f"P.E_{code}" in active:
            values[f"P.E_{code}"] = run(f"P.E_{code}", position_error, trace, joint)
        if f"AV.E_{code}" in active:
            values[f"AV.E_{code}"] = run(f"AV.E_{code}", angular_velocity_error, trace, joint)
    if "T.E_H" in active or "T.E_S" in active:
        head, spine = run("T.E_H/T.E_S", tilt_errors, trace)
        if "T.E_H" in active:
            values["T.E_H"] = head
        if "T.E_S" in active:
            values["T.E_S"] = spine
    if "T.E_C" in active or "T.E_R" in active:
        collect, release = run("T.E_C/T.E_R", time_errors, trace.events)
        if "T.E_C" in active:
            values["T.E_C"] = collect
        if "T.E_R" in active:
            values["T.E_R"] = release
    return FuzzyInputVector(values)


__all__ = [
    "FuzzyInputVector",
    "INPUT_NAMES",
    "INPUT_UNIVERSES",
    "JOINTS",
    "MetricError",
    "MotionFrame",
    "PEDAL_DEADBAND",
    "SessionTrace",
    "TaskEvent",
    "angular_speed_samples",
    "angular_velocity_error",
    "build_fuzzy_inputs",
    "orientation_error",
    "pedal_dominance",
    "position_error",
    "tilt_errors",
    "time_errors",
    "wrapped_abs_diff",
]
