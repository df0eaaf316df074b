"""Time the hot kernels under both backends and report the speedup.

Runs itself twice as a subprocess, once with LOGLAB_BACKEND=numba and once
with LOGLAB_BACKEND=numpy (the flag is read once at import, so the two
flavors cannot share a process), then prints a side-by-side table and
checks that the two backends agree numerically.

    python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from loglab import build_lattice
    from loglab._kernels import h4_mean, h4_shift_mean, quartic_convolution_sum

    rng = np.random.default_rng(12345)
    v = rng.standard_normal(1 << 20)
    t = rng.standard_normal(1 << 20)

    lat1 = build_lattice(1, 32)
    w1 = lat1.ang ** -0.5
    lat2 = build_lattice(2, 6)
    w2 = lat2.ang ** -1.0

    return [
        ("h4_mean (2^20 values)", lambda: h4_mean(v, 3.0)),
        ("h4_shift_mean (2^20 values)", lambda: h4_shift_mean(v, t, 3.0)),
        ("quartic sum (d=1, N=32)",
         lambda: quartic_convolution_sum(lat1.modes, w1, lat1.lookup, 32, 1)),
        ("quartic sum (d=2, N=6)",
         lambda: quartic_convolution_sum(lat2.modes, w2, lat2.lookup, 6, 2)),
    ]


def _run_inner(repeat: int) -> None:
    from loglab.backend import BACKEND

    results = []
    for name, fn in _workloads():
        fn()  # warmup; also triggers JIT compilation on the numba side
        best = float("inf")
        for _ in range(repeat):
            start = time.perf_counter()
            value = fn()
            best = min(best, time.perf_counter() - start)
        results.append({"name": name, "seconds": best, "value": value})
    json.dump({"backend": BACKEND, "results": results}, sys.stdout)


def _spawn(backend: str, repeat: int):
    env = dict(os.environ, LOGLAB_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, __file__, "--inner", "--repeat", str(repeat)],
        env=env, capture_output=True, text=True,
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        return None
    return json.loads(proc.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timed repetitions per kernel (best is reported)")
    ap.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.inner:
        _run_inner(args.repeat)
        return 0

    runs = {}
    for backend in ("numba", "numpy"):
        out = _spawn(backend, args.repeat)
        if out is None:
            print(f"backend {backend}: unavailable, skipped")
            continue
        runs[backend] = {r["name"]: r for r in out["results"]}

    if not runs:
        return 1
    names = [name for name, _ in _workloads()]
    width = max(len(n) for n in names)
    cols = sorted(runs)
    print(f"{'kernel':<{width}}  " + "  ".join(f"{c:>12}" for c in cols)
          + ("       speedup" if len(cols) == 2 else ""))
    agree = True
    for name in names:
        cells = [f"{runs[c][name]['seconds'] * 1e3:10.3f} ms" for c in cols]
        line = f"{name:<{width}}  " + "  ".join(cells)
        if len(cols) == 2:
            ratio = runs["numpy"][name]["seconds"] / runs["numba"][name]["seconds"]
            line += f"  {ratio:8.1f}x"
            a, b = (runs[c][name]["value"] for c in cols)
            agree &= abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))
        print(line)
    if len(cols) == 2:
        print("numeric agreement <= 1e-9 relative:", "yes" if agree else "NO")
        return 0 if agree else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
