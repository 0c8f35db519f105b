"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from rehabfuzz._accel import get_backend


def workloads(rng):
    xs = rng.uniform(-10, 100, 200_000)
    targets = rng.normal(size=(100_000, 3))
    targets *= (rng.uniform(0.1, 0.5, 100_000) / np.linalg.norm(targets, axis=1))[:, None]
    angles = rng.uniform(-np.pi, np.pi, (100_000, 3))
    t = np.cumsum(rng.uniform(0.01, 0.05, 200_000))
    v = rng.uniform(0, 90, 200_000)
    a = np.array([-10.0, 10.0, 30.0, 50.0])
    b = a + 20.0
    c = b + 20.0
    h = np.array([0.2, 0.7, 0.4, 1.0])
    return {
        "tri_mf (200k)": lambda k: k.tri_mf(xs, 0.0, 30.0, 60.0),
        "aggregate_centroid (res 10k)": lambda k: k.aggregate_centroid(0.0, 80.0, 10_000, a, b, c, h),
        "ik_batch (100k)": lambda k: k.ik_batch(0.0, 0.3, 0.25, targets, 1),
        "fk_batch (100k)": lambda k: k.fk_batch(0.0, 0.3, 0.25, angles),
        "trapezoid (200k)": lambda k: k.trapezoid(t, v),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the fallback only")
    jobs = workloads(np.random.default_rng(0))
    print(f"{'kernel':<30}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, fn in jobs.items():
        times = {}
        for name, mod in backends.items():
            fn(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:<30}" + "".join(f"{times[n] * 1e3:>12.2f}ms" for n in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
