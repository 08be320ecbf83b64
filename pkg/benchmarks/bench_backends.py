#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Runs both dereverberation algorithms over an identical synthetic grid
with each available backend and reports wall time, realtime factor and
speedup, plus the cost-model context. The two backends also get checked
against each other for agreement.

Usage:
    python benchmarks/bench_backends.py [--seconds 4] [--workers 2]
"""

import argparse
import time

import numpy as np

import kpderev as kd
from kpderev.fcp import FcpParams
from kpderev.kpfcp import KpfcpParams


def make_grids(seconds: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    scene = kd.sample_scene(rng, t60=0.4)
    rir = kd.image_method(scene)
    clean = kd.speech_like(seconds, rng=rng)
    rendered = kd.render_scene(clean, rir, 25.0, rng=rng)
    observed = kd.analyze(rendered.observed)
    truth = kd.analyze(rendered.direct_truth)
    s_nn = kd.estimate(kd.EstimatorSpec("oracle", 0.1, seed), observed, truth)
    return observed, s_nn


def run_case(name, fn, observed, s_nn, params, backend, workers):
    t0 = time.perf_counter()
    out = fn(observed, s_nn, params, backend=backend, workers=workers)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=4.0)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    observed, s_nn = make_grids(args.seconds, args.seed)
    backends = ["python"] + (["native"] if kd.have_native() else [])
    if len(backends) == 1:
        print("note: compiled kernels not built, timing the fallback only")

    cases = [
        ("fcp K=81", kd.fcp_process, FcpParams(k=81), kd.mac_fcp(81)),
        ("kpfcp P=3", kd.kpfcp_process, KpfcpParams(p=3), kd.mac_kpfcp(3, 9, 9)),
        ("kpfcp P=4", kd.kpfcp_process, KpfcpParams(p=4), kd.mac_kpfcp(4, 9, 9)),
        ("kpfcp P=5", kd.kpfcp_process, KpfcpParams(p=5), kd.mac_kpfcp(5, 9, 9)),
    ]

    print(f"grid: {observed.frames} frames x {observed.bins} bins "
          f"({args.seconds:.1f} s of audio), workers={args.workers}")
    header = f"{'case':<12} {'model MACs/unit':>15}"
    for b in backends:
        header += f" {b + ' [s]':>12}"
    if len(backends) == 2:
        header += f" {'speedup':>8} {'agree':>10}"
    print(header)

    for name, fn, params, macs in cases:
        row = f"{name:<12} {macs:>15,}"
        times = {}
        outs = {}
        for b in backends:
            dt, out = run_case(name, fn, observed, s_nn, params, b, args.workers)
            times[b] = dt
            outs[b] = out
            row += f" {dt:>12.2f}"
        if len(backends) == 2:
            gap = float(np.abs(outs["python"].data - outs["native"].data).max())
            row += f" {times['python'] / times['native']:>7.1f}x {gap:>10.1e}"
        print(row)


if __name__ == "__main__":
    main()
