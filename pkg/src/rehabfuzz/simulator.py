"""Synthetic stand-in for the tracking hardware and the reach-grasp-collect game.

Everything here is simulated: targets are sampled in the arm's workspace, the
instructor avatar moves in joint space between a rest pose and each target,
and the player is the instructor motion passed through an impairment profile
(slowdown, noise, tremor, contracture, posture drift, pedal bias).

Time inside one task is measured from the task start; frames are sampled at
``(k + 1) / frame_rate`` so a segment of ``n`` frames ends exactly on its
target pose.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .adaptation import AdaptationConfig, DecisionRecord, DifficultyState, run_controller
from .fuzzy_core import RuleBase
from .kinematics import (
    ELBOW_UP,
    ArmGeometry,
    JointAngles,
    Point3,
    elbow_position,
    forward_kinematics,
    reachable,
    solve_ik,
    wrap_angle,
)
from .rule_dsl import load_rulebase
from .session_metrics import INPUT_NAMES, JOINTS, MotionFrame, SessionTrace, TaskEvent

DEFAULT_GEOMETRY = ArmGeometry(0.0, 0.30, 0.25)
REST_POSE = JointAngles(0.0, math.radians(-75.0), math.radians(75.0))
DEFAULT_FRAME_RATE = 30.0
GRASP_RADIUS_CM = 5.0
BASKET_RADIUS_CM = 5.0
NOMINAL_FRUIT_SPEED = 10.0  # cm/s at which the nominal collect time applies
TREMOR_PHASES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
MAX_SPAWN_ATTEMPTS = 10_000

RangeSpec = Union[float, Sequence[float]]


class SimulationError(RuntimeError):
    """A session step failed; ``task`` and ``stage`` say where."""

    def __init__(self, message: str, task: Optional[int] = None, stage: Optional[str] = None):
        where = []
        if task is not None:
            where.append(f"task {task}")
        if stage:
            where.append(stage)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.task = task
        self.stage = stage


class SpawnError(ValueError):
    pass


def _range_pair(spec: RangeSpec) -> tuple[float, float]:
    if isinstance(spec, (int, float)):
        v = float(spec)
        if v < 0:
            raise ValueError(f"symmetric range limit must be non-negative, got {v}")
        return -v, v
    lo, hi = (float(x) for x in spec)
    if lo > hi:
        raise ValueError(f"range limit needs min <= max, got ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class PlayerProfile:
    """Impairment model applied to the instructor motion.

    ``range_limit`` maps a joint name to either a symmetric bound ``v``
    (orientation kept in ``[-v, v]``) or an explicit ``(min, max)`` pair.
    Joints that are not listed move freely.
    """

    noise_std: float = 0.0
    position_noise_std: float = 0.0
    slowdown: float = 1.0
    range_limit: Mapping[str, RangeSpec] = field(default_factory=dict)
    tremor_amplitude: float = 0.0
    tremor_frequency: float = 0.0
    posture_drift: float = 0.0
    pedal_bias: float = 0.0
    pedal_noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in (
            "noise_std",
            "position_noise_std",
            "tremor_amplitude",
            "tremor_frequency",
            "posture_drift",
            "pedal_noise_std",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if not (math.isfinite(self.slowdown) and self.slowdown >= 1.0):
            raise ValueError(f"slowdown must be >= 1, got {self.slowdown}")
        if not -1.0 <= self.pedal_bias <= 1.0:
            raise ValueError(f"pedal_bias must lie in [-1, 1], got {self.pedal_bias}")
        limits = {}
        for joint, spec in dict(self.range_limit).items():
            if joint not in JOINTS:
                raise ValueError(f"unknown joint {joint!r} in range_limit")
            limits[joint] = _range_pair(spec)
        object.__setattr__(self, "range_limit", limits)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PlayerProfile":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown player_profile fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TaskSpec:
    """Targets (m, shoulder frame) with the instructor's collect/release durations (s)."""

    targets: tuple[Point3, ...]
    collect_times: tuple[float, ...]
    release_times: tuple[float, ...]
    geometry: ArmGeometry = DEFAULT_GEOMETRY
    grasp_radius_cm: float = GRASP_RADIUS_CM
    basket_radius_cm: float = BASKET_RADIUS_CM
    rest: JointAngles = REST_POSE

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(Point3(*map(float, p)) for p in self.targets))
        object.__setattr__(self, "collect_times", tuple(float(t) for t in self.collect_times))
        object.__setattr__(self, "release_times", tuple(float(t) for t in self.release_times))
        n = len(self.targets)
        if not n:
            raise ValueError("a task needs at least one target")
        if len(self.collect_times) != n or len(self.release_times) != n:
            raise ValueError("need one collect and one release time per target")
        if any(t <= 0 for t in self.collect_times) or any(t < 0 for t in self.release_times):
            raise ValueError("collect times must be positive and release times non-negative")
        for p in self.targets:
            if not reachable(self.geometry, p):
                raise ValueError(f"target {tuple(p)} is not reachable")
        if not (self.grasp_radius_cm > 0 and self.basket_radius_cm > 0):
            raise ValueError("grasp and basket radii must be positive")

    @property
    def basket(self) -> Point3:
        """The basket sits where the hand rests."""
        return forward_kinematics(self.geometry, self.rest)


@dataclass(frozen=True)
class TaskTiming:
    collect_time: float = 4.0
    release_time: float = 2.0

    def __post_init__(self):
        if not (self.collect_time > 0 and self.release_time >= 0):
            raise ValueError("collect_time must be positive and release_time non-negative")


def _joint_orientations(q: np.ndarray) -> np.ndarray:
    """Per-joint Euler triples (deg) for joint angles ``q`` (rad), indexed like JOINTS."""
    t1, t2, t3 = q
    yaw = math.degrees(wrap_angle(t1))
    upper = math.degrees(wrap_angle(t2))
    fore = math.degrees(wrap_angle(t2 + t3))
    return np.array([[0.0, fore, yaw], [0.0, fore, yaw], [0.0, upper, yaw]])


def _joint_positions(geom: ArmGeometry, q: np.ndarray) -> np.ndarray:
    """Per-joint positions (cm), indexed like JOINTS."""
    hand = forward_kinematics(geom, q)
    elbow = elbow_position(geom, q)
    return 100.0 * np.array([hand, elbow, (0.0, 0.0, geom.l1)])


def _matrix_to_triples(m: np.ndarray):
    return tuple(map(tuple, m.tolist()))


@dataclass(frozen=True)
class _Segment:
    start: int  # frame index where the segment begins
    frames: int
    q0: np.ndarray
    q1: np.ndarray
    target: int
    kind: str  # "reach" or "release"


class _JointMotion:
    """Piecewise-linear joint-space motion; time is measured in frames."""

    def __init__(self, task: TaskSpec, frame_rate: float):
        if not frame_rate > 0:
            raise ValueError("frame rate must be positive")
        self.frame_rate = float(frame_rate)
        rest = np.array(task.rest, dtype=np.float64)
        self.rest = rest
        self.segments: list[_Segment] = []
        cursor = 0
        for i, (p, tc, tr) in enumerate(zip(task.targets, task.collect_times, task.release_times)):
            qi = np.array(solve_ik(task.geometry, p, ELBOW_UP), dtype=np.float64)
            n = max(1, round(tc * frame_rate))
            self.segments.append(_Segment(cursor, n, rest, qi, i, "reach"))
            cursor += n
            if tr > 0:
                n = max(1, round(tr * frame_rate))
                self.segments.append(_Segment(cursor, n, qi, rest, i, "release"))
                cursor += n
        self.total_frames = cursor

    def pose(self, u: float) -> np.ndarray:
        """Joint angles at time ``u`` (frames since task start)."""
        if u <= 0:
            return self.segments[0].q0
        for seg in self.segments:
            if u <= seg.start + seg.frames:
                f = (u - seg.start) / seg.frames
                return (1.0 - f) * seg.q0 + f * seg.q1
        return self.segments[-1].q1

    def segment_at(self, u: float) -> Optional[_Segment]:
        for seg in self.segments:
            if seg.start < u <= seg.start + seg.frames:
                return seg
        return None


def _rest_reach(geom: ArmGeometry, rest: JointAngles) -> float:
    return math.dist(forward_kinematics(geom, rest), (0.0, 0.0, geom.l1))


def spawn_targets(
    d: DifficultyState,
    geom: ArmGeometry = DEFAULT_GEOMETRY,
    rng_seed: int = 0,
    timing: TaskTiming = TaskTiming(),
) -> TaskSpec:
    """Sample ``d.iterations`` targets uniformly in the usable part of the workspace.

    The usable region is the spawn shell around the shoulder intersected with
    the arm's reachable shell, in front of the player (x > 0) and on the
    side of the playing hand. Targets whose pose breaks a joint range limit
    are redrawn.
    """
    inner, outer = (100.0 * r for r in geom.reach)
    lo = max(d.spawn_radius_min, inner)
    hi = min(d.spawn_radius_max, outer)
    if lo > hi:
        raise SpawnError(
            f"spawn shell [{d.spawn_radius_min}, {d.spawn_radius_max}] cm does not meet "
            f"the reachable shell [{inner:.6g}, {outer:.6g}] cm"
        )
    rng = np.random.default_rng(rng_seed)
    side = 1.0 if d.handedness == "Left" else -1.0
    speed_factor = d.fruit_speed / NOMINAL_FRUIT_SPEED if d.fruit_speed > 0 else 1.0
    targets: list[Point3] = []
    attempts = 0
    while len(targets) < d.iterations:
        attempts += 1
        if attempts > MAX_SPAWN_ATTEMPTS:
            raise SpawnError("could not place targets within the joint range limits")
        r = np.cbrt(lo**3 + rng.random() * (hi**3 - lo**3)) / 100.0
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        x, y, z = v / norm
        p = Point3(abs(x) * r, side * abs(y) * r, geom.l1 + z * r)
        if math.hypot(p.x, p.y) < 0.01 or not reachable(geom, p):
            continue
        if not _within_limits(geom, p, d.range_limits):
            continue
        targets.append(p)
    n = len(targets)
    return TaskSpec(
        tuple(targets),
        (timing.collect_time / speed_factor,) * n,
        (timing.release_time / speed_factor,) * n,
        geom,
        GRASP_RADIUS_CM * d.fruit_size,
        BASKET_RADIUS_CM * d.basket_size,
    )


def _within_limits(geom: ArmGeometry, p: Point3, limits: Mapping[str, tuple[float, float]]) -> bool:
    if not limits:
        return True
    q = np.array(solve_ik(geom, p, ELBOW_UP))
    orient = _joint_orientations(q)
    for joint, (lo, hi) in limits.items():
        row = orient[JOINTS.index(joint)]
        if np.any(row < lo) or np.any(row > hi):
            return False
    return True


def _frame(t: float, orient: np.ndarray, pos: np.ndarray, head=0.0, spine=0.0, pedal=0.0) -> MotionFrame:
    return MotionFrame(
        t, _matrix_to_triples(orient), _matrix_to_triples(pos), float(head), float(spine), float(pedal)
    )


def reference_trajectory(task: TaskSpec, frame_rate: float = DEFAULT_FRAME_RATE) -> list[MotionFrame]:
    motion = _JointMotion(task, frame_rate)
    frames = []
    for j in range(motion.total_frames):
        q = motion.pose(j + 1)
        frames.append(
            _frame((j + 1) / motion.frame_rate, _joint_orientations(q), _joint_positions(task.geometry, q))
        )
    return frames


def _detect_events(motion: _JointMotion, task: TaskSpec, scale: float, n_frames: int) -> list[dict]:
    """Event times from the noise-free hand, for a motion played ``scale`` times slower."""
    rate = motion.frame_rate
    grasp = task.grasp_radius_cm / 100.0
    basket_r = task.basket_radius_cm / 100.0
    basket = task.basket
    events = [
        {"t_spawned": None, "t_reached": None, "t_collected": None} for _ in task.targets
    ]
    for seg in motion.segments:
        if seg.kind == "reach":
            events[seg.target]["t_spawned"] = scale * seg.start / rate
    for k in range(n_frames):
        u = (k + 1) / scale
        seg = motion.segment_at(u)
        if seg is None:
            continue
        ev = events[seg.target]
        hand = forward_kinematics(task.geometry, motion.pose(u))
        t = (k + 1) / rate
        if seg.kind == "reach" and ev["t_reached"] is None:
            if math.dist(hand, task.targets[seg.target]) <= grasp:
                ev["t_reached"] = t
        elif seg.kind == "release" and ev["t_reached"] is not None and ev["t_collected"] is None:
            if math.dist(hand, basket) <= basket_r:
                ev["t_collected"] = t
    for i, ev in enumerate(events):
        if task.release_times[i] == 0 and ev["t_reached"] is not None:
            ev["t_collected"] = ev["t_reached"]
    return events


def reference_events(task: TaskSpec, frame_rate: float = DEFAULT_FRAME_RATE) -> list[TaskEvent]:
    """Events of the instructor motion; their latencies are the prescribed times."""
    motion = _JointMotion(task, frame_rate)
    raw = _detect_events(motion, task, 1.0, motion.total_frames)
    out = []
    for i, ev in enumerate(raw):
        collect = ev["t_reached"] - ev["t_spawned"]
        release = ev["t_collected"] - ev["t_reached"]
        out.append(TaskEvent(i, ev["t_spawned"], ev["t_reached"], ev["t_collected"], collect, release))
    return out


def simulate_player(
    profile: PlayerProfile,
    reference: Sequence[MotionFrame],
    task: TaskSpec,
    seed: Optional[int] = None,
    frame_rate: Optional[float] = None,
) -> SessionTrace:
    """Play the instructor motion through ``profile``.

    ``frame_rate`` defaults to the rate implied by the reference frames.
    ``seed`` overrides ``profile.seed``.
    """
    if frame_rate is None:
        frame_rate = round(1.0 / reference[0].t, 9) if reference else DEFAULT_FRAME_RATE
    motion = _JointMotion(task, frame_rate)
    rng = np.random.default_rng(profile.seed if seed is None else seed)
    s = profile.slowdown
    n = int(math.ceil(motion.total_frames * s - 1e-9))
    t = np.arange(1, n + 1, dtype=np.float64) / frame_rate

    orient = np.empty((n, 3, 3))
    pos = np.empty((n, 3, 3))
    for k in range(n):
        q = motion.pose((k + 1) / s)
        orient[k] = _joint_orientations(q)
        pos[k] = _joint_positions(task.geometry, q)

    if profile.noise_std > 0:
        orient += rng.normal(0.0, profile.noise_std, size=orient.shape)
    if profile.position_noise_std > 0:
        pos += rng.normal(0.0, profile.position_noise_std, size=pos.shape)
    if profile.tremor_amplitude > 0:
        phase = 2.0 * math.pi * profile.tremor_frequency * t[:, None] + np.array(TREMOR_PHASES)[None, :]
        orient += profile.tremor_amplitude * np.sin(phase)[:, None, :]
    for joint, (lo, hi) in profile.range_limit.items():
        j = JOINTS.index(joint)
        orient[:, j, :] = np.clip(orient[:, j, :], lo, hi)

    tilt = profile.posture_drift * t
    pedal = np.full(n, profile.pedal_bias)
    if profile.pedal_noise_std > 0:
        pedal = pedal + rng.normal(0.0, profile.pedal_noise_std, size=n)
    pedal = np.clip(pedal, -1.0, 1.0)

    frames = [_frame(t[k], orient[k], pos[k], tilt[k], tilt[k], pedal[k]) for k in range(n)]

    prescribed = reference_events(task, frame_rate)
    raw = _detect_events(motion, task, s, n)
    events = [
        TaskEvent(
            i,
            ev["t_spawned"],
            ev["t_reached"],
            ev["t_collected"] if ev["t_reached"] is not None else None,
            ref.target_collect_time,
            ref.target_release_time,
        )
        for i, (ev, ref) in enumerate(zip(raw, prescribed))
    ]
    return SessionTrace(tuple(frames), tuple(events), tuple(reference))


@dataclass(frozen=True)
class SessionConfig:
    player_profile: PlayerProfile = field(default_factory=PlayerProfile)
    difficulty: DifficultyState = field(default_factory=DifficultyState)
    tasks: int = 3
    frame_rate_hz: float = DEFAULT_FRAME_RATE
    rulebase_path: Optional[str] = None
    active_inputs: Optional[tuple[str, ...]] = None
    seed: int = 0
    geometry: ArmGeometry = DEFAULT_GEOMETRY
    timing: TaskTiming = field(default_factory=TaskTiming)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)

    def __post_init__(self):
        if int(self.tasks) != self.tasks or self.tasks < 1:
            raise ValueError(f"tasks must be a positive integer, got {self.tasks}")
        if not (math.isfinite(self.frame_rate_hz) and self.frame_rate_hz > 0):
            raise ValueError("frame_rate_hz must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.active_inputs is not None:
            active = tuple(self.active_inputs)
            unknown = set(active) - set(INPUT_NAMES)
            if unknown:
                raise ValueError(f"unknown active_inputs: {sorted(unknown)}")
            object.__setattr__(self, "active_inputs", active)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Optional[Path] = None) -> "SessionConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "player_profile" in data:
            data["player_profile"] = PlayerProfile.from_dict(data["player_profile"])
        if "difficulty" in data:
            data["difficulty"] = DifficultyState.from_dict(data["difficulty"])
        if "geometry" in data:
            data["geometry"] = ArmGeometry(**data["geometry"])
        if "timing" in data:
            data["timing"] = TaskTiming(**data["timing"])
        if "adaptation" in data:
            data["adaptation"] = AdaptationConfig(**data["adaptation"])
        path = data.get("rulebase_path")
        if path is not None and base_dir is not None and not Path(path).is_absolute():
            data["rulebase_path"] = str(Path(base_dir) / path)
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SessionConfig":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("session config must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)


@dataclass(frozen=True)
class SessionResult:
    traces: tuple[SessionTrace, ...]
    decisions: tuple[DecisionRecord, ...]
    halted_task: Optional[int]
    final_difficulty: DifficultyState


def task_seeds(seed: int, task: int) -> tuple[int, int]:
    """Independent (spawn, player) seeds for one task of a session."""
    state = np.random.SeedSequence([seed, task]).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def run_session(config: SessionConfig, rulebase: Optional[RuleBase] = None) -> SessionResult:
    if rulebase is None and config.rulebase_path is not None:
        rulebase = load_rulebase(config.rulebase_path)
    d = config.difficulty
    traces: list[SessionTrace] = []
    decisions: list[DecisionRecord] = []
    clock = 0.0
    halted_task = None
    for i in range(config.tasks):
        spawn_seed, player_seed = task_seeds(config.seed, i)
        stage = "spawn"
        try:
            task = spawn_targets(d, config.geometry, spawn_seed, config.timing)
            stage = "reference"
            reference = reference_trajectory(task, config.frame_rate_hz)
            stage = "simulate"
            player_seed ^= config.player_profile.seed
            trace = simulate_player(config.player_profile, reference, task, player_seed, config.frame_rate_hz)
            stage = "controller"
            clock += trace.frames[-1].t
            record = run_controller(
                trace, d, rulebase, config.active_inputs, config.adaptation, timestamp=clock
            )
        except Exception as exc:
            raise SimulationError(str(exc), task=i, stage=stage) from exc
        traces.append(trace)
        decisions.append(record)
        d = record.difficulty_after
        if d.halted:
            halted_task = i
            break
    return SessionResult(tuple(traces), tuple(decisions), halted_task, d)


__all__ = [
    "DEFAULT_FRAME_RATE",
    "DEFAULT_GEOMETRY",
    "PlayerProfile",
    "REST_POSE",
    "SessionConfig",
    "SessionResult",
    "SimulationError",
    "SpawnError",
    "TaskSpec",
    "TaskTiming",
    "reference_events",
    "reference_trajectory",
    "run_session",
    "simulate_player",
    "spawn_targets",
    "task_seeds",
]
