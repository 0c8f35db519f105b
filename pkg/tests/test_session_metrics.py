import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rehabfuzz.session_metrics import (
    INPUT_NAMES,
    INPUT_UNIVERSES,
    JOINTS,
    FuzzyInputVector,
    MetricError,
    MotionFrame,
    SessionTrace,
    TaskEvent,
    angular_velocity_error,
    build_fuzzy_inputs,
    orientation_error,
    pedal_dominance,
    position_error,
    tilt_errors,
    time_errors,
)

import oracles

ZERO3 = ((0.0, 0.0, 0.0),) * 3


def frame(t, orient=ZERO3, pos=ZERO3, head=0.0, spine=0.0, pedal=0.0):
    return MotionFrame(t, tuple(map(tuple, orient)), tuple(map(tuple, pos)), head, spine, pedal)


def stream(n=31, rate=30.0, t0=0.0, orient=lambda t: ZERO3, pos=lambda t: ZERO3, **kw):
    return [frame(t0 + i / rate, orient(t0 + i / rate), pos(t0 + i / rate), **kw) for i in range(n)]


def event(i=0, collect=2.0, release=1.0, late_c=0.0, late_r=0.0):
    return TaskEvent(i, 0.0, collect + late_c, collect + late_c + release + late_r, collect, release)


def rotating(rate_deg, joint=0):
    def orient(t):
        o = [[0.0, 0.0, 0.0] for _ in range(3)]
        o[joint][2] = rate_deg * t
        return o

    return orient


class TestOrientation:
    def test_identity(self):
        s = stream()
        assert orientation_error(SessionTrace(s, (), s), "Wrist") == 0.0

    def test_constant_offset(self):
        off = [[0, 30, 0], [0, 0, 0], [0, 0, 0]]
        tr = SessionTrace(stream(orient=lambda t: off), (), stream())
        assert orientation_error(tr, "Wrist") == pytest.approx(30)
        assert orientation_error(tr, "Elbow") == 0.0

    def test_clamped(self):
        off = [[170, 0, 0]] * 3
        assert orientation_error(SessionTrace(stream(orient=lambda t: off), (), stream()), "Shoulder") == 90

    def test_wraps_across_180(self):
        a = [[179, 0, 0]] * 3
        b = [[-179, 0, 0]] * 3
        tr = SessionTrace(stream(orient=lambda t: a), (), stream(orient=lambda t: b))
        assert orientation_error(tr, "Wrist") == pytest.approx(2)

    def test_no_overlap(self):
        with pytest.raises(MetricError):
            orientation_error(SessionTrace(stream(), (), stream(t0=10)), "Wrist")


class TestPosition:
    def test_examples(self):
        s = stream()
        assert position_error(SessionTrace(s, (), s), "Wrist") == 0
        near = stream(pos=lambda t: [[6, 8, 0]] * 3)
        assert position_error(SessionTrace(near, (), s), "Elbow") == pytest.approx(10)
        far = stream(pos=lambda t: [[200, 0, 0]] * 3)
        assert position_error(SessionTrace(far, (), s), "Elbow") == 90


class TestAngularVelocity:
    def test_identity(self):
        s = stream(orient=rotating(40))
        assert angular_velocity_error(SessionTrace(s, (), s), "Wrist") == 0

    def test_rest_against_moving(self):
        tr = SessionTrace(stream(), (), stream(orient=rotating(25)))
        assert angular_velocity_error(tr, "Wrist") == pytest.approx(25)

    def test_clamped(self):
        tr = SessionTrace(stream(orient=rotating(10)), (), stream(orient=rotating(130)))
        assert angular_velocity_error(tr, "Wrist") == 90

    def test_speed_is_unsigned(self):
        tr = SessionTrace(stream(orient=rotating(-25)), (), stream(orient=rotating(25)))
        assert angular_velocity_error(tr, "Wrist") == pytest.approx(0, abs=1e-9)

    def test_two_frames(self):
        tr = SessionTrace(stream(n=2), (), stream(n=2, orient=rotating(30)))
        assert angular_velocity_error(tr, "Wrist") == pytest.approx(30)

    def test_needs_two_frames(self):
        with pytest.raises(MetricError):
            angular_velocity_error(SessionTrace(stream(n=1), (), stream()), "Wrist")


def test_tilts():
    s = stream()
    assert tilt_errors(SessionTrace(s, (), s)) == (0, 0)
    assert tilt_errors(SessionTrace(stream(head=16.0), (), s))[0] == pytest.approx(16)
    assert tilt_errors(SessionTrace(stream(spine=50.0), (), s))[1] == 36
    assert tilt_errors(SessionTrace(stream(head=50.0), (), s))[0] == 32


def test_time_errors():
    assert time_errors([event(), event(1)]) == (0, 0)
    assert time_errors([event(late_c=3), event(1, late_c=3)]) == (pytest.approx(3), pytest.approx(0))
    assert time_errors([event(late_c=10, late_r=-0.5)]) == (6, pytest.approx(0.5))
    with pytest.raises(MetricError):
        time_errors([TaskEvent(0, 0, None, None, 1, 1)])
    with pytest.raises(ValueError):
        TaskEvent(0, 2.0, 1.0, 3.0, 1, 1)


def test_pedal_dominance():
    def tr(values):
        fr = [frame(i, pedal=v) for i, v in enumerate(values)]
        return SessionTrace(fr, (), fr)

    assert pedal_dominance(tr([-1, 0, 1, 1])) == (0.25, "Right")
    assert pedal_dominance(tr([0, 0, 0])) == (0, "Neutral")
    assert pedal_dominance(tr([1, -1, 1, -1])) == (0, "Neutral")
    assert pedal_dominance(tr([-0.5, -0.5])) == (-0.5, "Left")
    assert pedal_dominance(tr([0.05])) == (0.05, "Neutral")


def test_frame_validation():
    with pytest.raises(ValueError):
        frame(0, pedal=1.5)
    with pytest.raises(ValueError):
        frame(0, head=-1)
    with pytest.raises(ValueError):
        SessionTrace([frame(1), frame(0)], (), [frame(0)])
    with pytest.raises(ValueError):
        SessionTrace([], (), [frame(0)])


class TestBuildInputs:
    def test_all_zero_on_identity(self):
        s = stream(orient=rotating(20))
        vec = build_fuzzy_inputs(SessionTrace(s, [event(), event(1)], s))
        assert vec.active == INPUT_NAMES
        assert all(v == 0 for v in vec.as_dict().values())

    def test_subset(self):
        s = stream()
        vec = build_fuzzy_inputs(SessionTrace(s, (), s), {"T.E_H", "T.E_S"})
        assert vec.active == ("T.E_H", "T.E_S")
        assert vec["O.E_W"] is None

    def test_errors_name_metric(self):
        s = stream()
        with pytest.raises(MetricError) as info:
            build_fuzzy_inputs(SessionTrace(s, (), s))
        assert info.value.metric == "T.E_C/T.E_R"
        with pytest.raises(ValueError):
            build_fuzzy_inputs(SessionTrace(s, (), s), {"X.Y"})

    def test_vector_clamps_and_rejects(self):
        vec = FuzzyInputVector({"O.E_W": 120.0, "T.E_C": -1.0, "T.E_R": None})
        assert vec["O.E_W"] == 90 and vec["T.E_C"] == 0 and vec["T.E_R"] is None
        with pytest.raises(ValueError):
            FuzzyInputVector({"bogus": 1.0})


# randomized traces for compositionality, symmetry and translation properties


@st.composite
def traces(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)

    def rand_stream(n, t0):
        ts = t0 + np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 0.08, n - 1))])
        return [
            frame(
                t,
                rng.uniform(-180, 180, (3, 3)),
                rng.uniform(-60, 60, (3, 3)),
                float(rng.uniform(0, 40)),
                float(rng.uniform(0, 40)),
                float(rng.uniform(-1, 1)),
            )
            for t in ts
        ]

    player = rand_stream(draw(st.integers(2, 40)), 0.02)
    # start the reference inside the player's span so the streams overlap
    reference = rand_stream(draw(st.integers(2, 40)), player[0].t + draw(st.floats(0, 0.9)) * (player[-1].t - player[0].t))
    evs = [event(i, float(rng.uniform(1, 4)), float(rng.uniform(1, 3)), float(rng.uniform(-0.5, 5)), float(rng.uniform(-0.5, 5))) for i in range(3)]
    return SessionTrace(player, evs, reference)


def _oracle_inputs(tr):
    p, r = tr.frames, tr.reference
    tp, trf = [f.t for f in p], [f.t for f in r]
    out = {}
    for j, joint in enumerate(JOINTS):
        code = joint[0]

        def odist(a, b):
            return min(90.0, max(oracles.wrapped_deg(p[a].orientations[j][k], r[b].orientations[j][k]) for k in range(3)))

        def pdist(a, b):
            return math.dist(p[a].positions[j], r[b].positions[j])

        out[f"O.E_{code}"] = min(90.0, oracles.symmetric_aligned_mean(tp, trf, odist))
        out[f"P.E_{code}"] = min(90.0, oracles.symmetric_aligned_mean(tp, trf, pdist))

        def av(frames):
            ts, vs = [], []
            for a, b in zip(frames, frames[1:]):
                d = [(b.orientations[j][k] - a.orientations[j][k] + 180) % 360 - 180 for k in range(3)]
                ts.append(0.5 * (a.t + b.t))
                vs.append(math.sqrt(sum(x * x for x in d)) / (b.t - a.t))
            return vs[0] if len(vs) == 1 else oracles.trapezoid_mean(ts, vs)

        out[f"AV.E_{code}"] = min(90.0, abs(av(p) - av(r)))
    out["T.E_H"] = min(32.0, sum(f.head_tilt for f in p) / len(p))
    out["T.E_S"] = min(36.0, sum(f.spine_tilt for f in p) / len(p))
    ev = tr.events
    out["T.E_C"] = min(6.0, sum(abs(e.t_reached - e.t_spawned - e.target_collect_time) for e in ev) / len(ev))
    out["T.E_R"] = min(6.0, sum(abs(e.t_collected - e.t_reached - e.target_release_time) for e in ev) / len(ev))
    return out


@given(traces())
def test_matches_independent_recomputation(tr):
    vec = build_fuzzy_inputs(tr)
    expected = _oracle_inputs(tr)
    for name in INPUT_NAMES:
        assert vec[name] == pytest.approx(expected[name], abs=1e-9), name
        lo, hi = INPUT_UNIVERSES[name]
        assert lo <= vec[name] <= hi


@given(traces())
def test_orientation_and_position_symmetric(tr):
    sw = tr.swapped()
    for joint in JOINTS:
        assert orientation_error(tr, joint) == pytest.approx(orientation_error(sw, joint), abs=1e-12)
        assert position_error(tr, joint) == pytest.approx(position_error(sw, joint), abs=1e-12)


def _shift(frames, dt):
    return [MotionFrame(f.t + dt, f.orientations, f.positions, f.head_tilt, f.spine_tilt, f.pedal) for f in frames]


@given(traces(), st.sampled_from([-7.0, 0.5, 3.25, 100.0]))
def test_time_translation(tr, dt):
    # dyadic shifts keep timestamps exactly representable enough for the tie rule
    moved = SessionTrace(
        _shift(tr.frames, dt),
        [TaskEvent(e.object_id, e.t_spawned + dt, e.t_reached + dt, e.t_collected + dt, e.target_collect_time, e.target_release_time) for e in tr.events],
        _shift(tr.reference, dt),
    )
    a, b = build_fuzzy_inputs(tr), build_fuzzy_inputs(moved)
    for name in INPUT_NAMES:
        assert a[name] == pytest.approx(b[name], abs=1e-6), name


@given(traces())
def test_deterministic(tr):
    assert build_fuzzy_inputs(tr) == build_fuzzy_inputs(SessionTrace(tr.frames, tr.events, tr.reference))
