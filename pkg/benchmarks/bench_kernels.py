"""Compare the compiled and pure-numpy kernels on the two hot loops.

Usage: python benchmarks/bench_kernels.py [--trials N] [--bits Q] [--t T]
"""

import argparse
import time

import numpy as np

from bellrand import _backend
from bellrand.core import BellFunction
from bellrand.entropy import accumulate
from bellrand.extractor import ExtractorSpec, extract
from bellrand.pbr import compute_m

TABLE_1 = np.array([
    [1.0243556353, 0.9704647804, 0.9735507658, 1.0],
    [1.0256127409, 0.9491951243, 0.9960775334, 1.0],
    [1.0227274988, 0.9962782754, 0.9461091383, 1.0],
    [0.9273040563, 1.0037217225, 1.0039224645, 1.0],
])


def timed(fn, repeat=3):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20_000_000)
    ap.add_argument("--bits", type=int, default=1_000_000)
    ap.add_argument("--t", type=int, default=256)
    args = ap.parse_args()

    backends = sorted(_backend.available())
    rng = np.random.default_rng(0)
    T = BellFunction(TABLE_1, compute_m(TABLE_1))
    codes = rng.integers(0, 16, args.trials).astype(np.uint8)
    spec = ExtractorSpec.build(args.bits, args.t, 1e-6)
    x = rng.integers(0, 2, spec.q).astype(np.uint8)
    seed = rng.integers(0, 2, spec.d).astype(np.uint8)

    print(f"backends: {', '.join(backends)} (default {_backend.BACKEND})")
    print(f"extractor: q={spec.q} t={spec.t} w={spec.w} l={spec.l} d={spec.d}")
    rows, outputs = [], {}
    for b in backends:
        ta, run = timed(lambda: accumulate(codes, T, 0.0, backend=b))
        tad, _ = timed(lambda: accumulate(codes, T, 1e9, adaptive=True, backend=b))
        te, bits = timed(lambda: extract(x, seed, spec, backend=b), repeat=1 if b == "python" else 3)
        outputs[b] = (run.log_v, bits.tobytes())
        rows.append((b, ta, tad, te))
    print(f"{'backend':<8} {'accumulate':>12} {'adaptive':>12} {'extract':>12}")
    for b, ta, tad, te in rows:
        print(f"{b:<8} {ta:>11.3f}s {tad:>11.3f}s {te:>11.3f}s")
    if len(rows) == 2:
        (_, a1, d1, e1), (_, a2, d2, e2) = rows
        print(f"speedup  {a2 / a1:>11.1f}x {d2 / d1:>11.1f}x {e2 / e1:>11.1f}x")
    same = len({v for v in outputs.values()}) == 1
    print(f"identical results across backends: {same}")


if __name__ == "__main__":
    main()
