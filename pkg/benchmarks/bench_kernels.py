"""Time the compiled and pure-numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Outputs of the two backends are compared before timing is reported.
"""

import argparse
import time

import numpy as np

from beepsim.kernels import _pykernels

try:
    from beepsim.kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(quick):
    # sizes mirror a simulated round at n=32, delta=6, L=5, c=7
    b, w = 12005, 245
    p = 256 if quick else 2048
    rng = np.random.default_rng(0)
    notx = (rng.random((32, b)) < 0.8).astype(np.uint8)
    span = 1 << (10 if quick else 13)
    return [
        ("beep_supports", lambda k: k.beep_supports(11, np.arange(p, dtype=np.uint64), b, w)),
        ("dist_bits", lambda k: k.dist_bits(12, np.arange(p, dtype=np.uint64), 245)),
        ("noise_flips", lambda k: k.noise_flips(13, np.arange(32), 0, 2 * b, 1 << 48)),
        ("scan_candidates", lambda k: k.scan_candidates(14, 0, span, 700, 20, notx[:, :700], 5.5)),
    ]


def same(x, y):
    if isinstance(x, list):
        return len(x) == len(y) and all(np.array_equal(a, c) for a, c in zip(x, y))
    return np.array_equal(x, y)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled backend not built; timing the numpy backend only")
    print(f"{'kernel':<16}{'numpy s':>10}{'cython s':>10}{'speedup':>9}  match")
    for name, call in cases(args.quick):
        tp, outp = best_of(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<16}{tp:>10.4f}{'-':>10}{'-':>9}  -")
            continue
        tc, outc = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:<16}{tp:>10.4f}{tc:>10.4f}{tp / tc:>8.1f}x  {same(outp, outc)}")


if __name__ == "__main__":
    main()
