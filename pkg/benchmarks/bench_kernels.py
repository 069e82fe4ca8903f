"""Compiled vs pure-Python kernels on synthetic frames.

    python3 benchmarks/bench_kernels.py [--sizes 320x240 640x480] [--frames 30]

Reports milliseconds per frame for the mixture update and 8-connected
labelling, and checks that both backends return identical output.
"""
import argparse
import time

import numpy as np

from delivery_detect import kernels
from delivery_detect.motion import MogConfig, PixelMixture, update_background


def frames_for(w, h, n, seed=0):
    rng = np.random.default_rng(seed)
    bg = rng.uniform(40, 200, (h, w))
    out = []
    for t in range(n):
        f = bg + rng.normal(0, 2, (h, w))
        x = (10 + 4 * t) % (w - 40)
        f[h // 3:h // 3 + 40, x:x + 30] = 250
        out.append(np.clip(f, 0, 255).astype(np.uint8))
    return out


def bench_mog(frames, backend):
    h, w = frames[0].shape
    model = PixelMixture(h, w, MogConfig())
    model.seed(frames[0])
    masks = []
    t0 = time.perf_counter()
    for f in frames[1:]:
        masks.append(update_background(model, f, backend))
    return (time.perf_counter() - t0) / (len(frames) - 1), masks


def bench_ccl(masks, backend):
    t0 = time.perf_counter()
    out = [kernels.label8(np.ascontiguousarray(m, dtype=np.uint8), backend) for m in masks]
    return (time.perf_counter() - t0) / len(masks), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", nargs="+", default=["320x240", "640x480"])
    ap.add_argument("--frames", type=int, default=30)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernels are not built; run pip install -e . first")

    print(f"{'size':>9} {'kernel':>6} {'cython ms':>10} {'python ms':>10} {'speedup':>8} same")
    for size in args.sizes:
        w, h = map(int, size.split("x"))
        frames = frames_for(w, h, args.frames)
        tc, mc = bench_mog(frames, "cython")
        tp, mp = bench_mog(frames, "python")
        same = all(np.array_equal(a, b) for a, b in zip(mc, mp))
        print(f"{size:>9} {'mog':>6} {1e3 * tc:10.2f} {1e3 * tp:10.2f} {tp / tc:8.1f} {same}")
        # noisy masks exercise the labeller harder than the clean blob
        rng = np.random.default_rng(1)
        noisy = [(rng.random((h, w)) < 0.3).astype(np.uint8) for _ in range(len(mc))]
        tc, lc = bench_ccl(noisy, "cython")
        tp, lp = bench_ccl(noisy, "python")
        same = all(a[1] == b[1] and np.array_equal(a[0], b[0]) for a, b in zip(lc, lp))
        print(f"{size:>9} {'ccl':>6} {1e3 * tc:10.2f} {1e3 * tp:10.2f} {tp / tc:8.1f} {same}")


if __name__ == "__main__":
    main()
