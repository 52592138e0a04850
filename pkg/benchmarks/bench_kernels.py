"""Compare the compiled and pure-Python kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel
is timed on identical inputs under both backends and the outputs are
checked for bit-identity.
"""

import argparse
import time

import numpy as np

from trustflow import _kernels
from trustflow.allocation import _flatten, path_caps, random_instance


def _dual_args(problem):
    links, ptr, idx, src, trust, w1, w2, caps = _flatten(problem)
    return (np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64),
            np.asarray(src, dtype=np.int64), len(problem.sources), np.asarray(trust, dtype=float),
            np.asarray(w1, dtype=float), np.asarray(w2, dtype=float),
            np.asarray(caps, dtype=float), np.asarray([1.0 / (1.0 + c) for c in caps]),
            1.0, 5000, 1e-6, path_caps(problem))


def _ism_args(rng, n=200, degree=4):
    ptr, idx = [0], []
    for j in range(n):
        vs = sorted(set(int(v) for v in rng.choice(n, degree)) - {j})
        idx.extend(vs)
        ptr.append(len(idx))
    seeds = np.zeros(n, dtype=np.uint8)
    seeds[rng.choice(n, 5, replace=False)] = 1
    return (np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64),
            rng.uniform(0.3, 1.0, n), seeds, 1e-9, 1000)


def _time(fn, args_list, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = [fn(*a) for a in args_list]
        best = min(best, time.perf_counter() - t)
    return best, out


def _same(a, b):
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--instances", type=int, default=20)
    opts = ap.parse_args()
    if not _kernels.compiled_available():
        print("compiled kernels not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    dual = [_dual_args(random_instance(rng, ("combined", "diversity")[k % 2], 0.5 * (k // 2 % 2)))
            for k in range(opts.instances)]
    ism = [_ism_args(rng) for _ in range(opts.instances)]
    br = [(float(q), float(t), 1.0, 0.5, 50.0)
          for q, t in zip(rng.uniform(0.01, 2, 2000), rng.uniform(0.3, 1, 2000))]
    py, cy = _kernels.get_backend("python"), _kernels.get_backend("cython")
    print(f"{'kernel':<20}{'python s':>12}{'cython s':>12}{'speedup':>10}  identical")
    for name, args in (("dual_decomposition", dual), ("ism_fixed_point", ism),
                       ("best_response", br)):
        tp, op = _time(getattr(py, name), args, opts.repeat)
        tc, oc = _time(getattr(cy, name), args, opts.repeat)
        print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}  {_same(op, oc)}")


if __name__ == "__main__":
    main()
