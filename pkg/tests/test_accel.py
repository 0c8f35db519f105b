"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from rehabfuzz import _accel

py = _accel.get_backend("python")
try:
    cy = _accel.get_backend("cython")
except ImportError:  # extension not built in this environment
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@needs_ext
def test_tri_mf(rng):
    xs = rng.uniform(-20, 120, 5000)
    xs[:3] = (0.0, 30.0, 60.0)
    for params in [(0, 30, 60), (0, 0, 30), (60, 90, 90), (5, 5, 5)]:
        assert np.array_equal(cy.tri_mf(xs, *map(float, params)), py.tri_mf(xs, *params))


@needs_ext
def test_aggregate_centroid(rng):
    for _ in range(20):
        k = rng.integers(1, 5)
        b = rng.uniform(0, 80, k)
        a = b - rng.uniform(0, 30, k)
        c = b + rng.uniform(0, 30, k)
        h = rng.uniform(0, 1, k)
        m1, s1 = cy.aggregate_centroid(0.0, 80.0, 1000, a, b, c, h)
        m2, s2 = py.aggregate_centroid(0.0, 80.0, 1000, a, b, c, h)
        assert m1 == pytest.approx(m2, rel=1e-12, abs=1e-12) and s1 == pytest.approx(s2, rel=1e-12, abs=1e-12)


@needs_ext
@pytest.mark.parametrize("branch", [1, -1])
def test_ik_fk(rng, branch):
    pts = rng.uniform(-0.6, 0.6, (2000, 3))
    pts[0] = (0.0, 0.0, 0.2)
    q1, st1 = cy.ik_batch(0.1, 0.3, 0.25, pts, branch)
    q2, st2 = py.ik_batch(0.1, 0.3, 0.25, pts, branch)
    assert np.array_equal(np.asarray(st1), np.asarray(st2))
    assert np.allclose(q1, q2, atol=1e-13)
    assert {0, 1, 2} <= set(np.asarray(st1).tolist())
    angles = rng.uniform(-np.pi, np.pi, (2000, 3))
    assert np.allclose(cy.fk_batch(0.1, 0.3, 0.25, angles), py.fk_batch(0.1, 0.3, 0.25, angles), atol=1e-14)


@needs_ext
def test_trapezoid(rng):
    t = np.cumsum(rng.uniform(0.01, 0.1, 1000))
    v = rng.normal(size=1000)
    assert cy.trapezoid(t, v) == pytest.approx(py.trapezoid(t, v), rel=1e-12)


def test_backend_names():
    assert _accel.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        _accel.get_backend("fortran")


def test_pure_python_switch():
    env = dict(os.environ, REHABFUZZ_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import rehabfuzz; print(rehabfuzz.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.strip()
    assert out == "python"
