"""Time the compiled kernels against the numpy fallback and check they agree.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from majoranet import _kernels_py
from majoranet.braiding import build_braid_protocol, ideal_spec

try:
    from majoranet import _kernels
except ImportError:
    _kernels = None


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(160, 160))
    A = A - A.T
    yield "pfaffian 160", lambda k: k.pfaffian(A), lambda a, b: abs(a - b) / abs(b)

    step = build_braid_protocol(ideal_spec(N=20, t_f=10.0))[0]
    m = 200
    s = (np.arange(m)[:, None] + np.array([0.2113, 0.7887])[None, :]) / m
    cw = np.ascontiguousarray(step.ramp.C(s))
    sw = np.ascontiguousarray(step.ramp.S(s))

    def prop(k):
        R = np.eye(step.h0.shape[0])
        k.propagate(step.h0, step.hC, step.hS, cw, sw, 10.0 / m, R, 1e-8)
        return R

    yield "propagate 80x80 x200", prop, lambda a, b: float(np.max(np.abs(a - b)))

    n = 10
    kinds = np.array([0] * (n - 1) + [1] * (n - 1) + [2] * n, dtype=np.int64)
    ii = np.array(list(range(n - 1)) * 2 + list(range(n)), dtype=np.int64)
    jj = np.array(list(range(1, n)) * 2 + [0] * n, dtype=np.int64)
    amps = rng.normal(size=len(kinds))
    yield ("fock_matrix 10 modes", lambda k: k.fock_matrix(n, kinds, ii, jj, amps),
           lambda a, b: float(np.max(np.abs(a - b))))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the numpy fallback is available")
    print(f"{'kernel':<24}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}{'diff':>12}")
    for name, fn, diff in cases():
        tp, rp = _best(lambda: fn(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<24}{tp:>12.4f}{'-':>12}{'-':>10}{'-':>12}")
            continue
        tc, rc = _best(lambda: fn(_kernels), args.repeat)
        print(f"{name:<24}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.2f}{diff(rc, rp):>12.2e}")


if __name__ == "__main__":
    main()
