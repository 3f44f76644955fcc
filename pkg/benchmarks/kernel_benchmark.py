#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the two hot kernels (pairwise merge costs and duration-constrained
Viterbi) on pipeline-sized problems and prints a speedup table, then
times a full diarization run under each backend.

Usage: python3 benchmarks/kernel_benchmark.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(repeat: int) -> None:
    from ibdiar import _fallback

    try:
        from ibdiar import _native
    except ImportError:
        print("compiled extension not built; showing fallback only")
        _native = None

    rng = np.random.default_rng(7)

    # Merge-cost rows at first-pass size: 240 clusters, 240 relevance dims.
    n, dims = 240, 240
    q = rng.random((n, dims))
    q /= q.sum(axis=1, keepdims=True)
    p = rng.random(n)
    p /= p.sum()
    h = _fallback.entropy_rows(q)

    def run_merge(impl):
        def _run():
            for i in range(0, n, 8):
                impl.merge_cost_row(q[i], float(p[i]), q, p, float(h[i]), h,
                                    10.0)
        return _run

    # Viterbi at ten-minute size: 60k frames, 4 clusters, 250-frame floor.
    costs = rng.random((60_000, 4))

    def run_viterbi(impl):
        return lambda: impl.viterbi_min_duration(costs, 250)

    rows = []
    for name, make in (("merge_cost_row 240x240 (30 rows)", run_merge),
                       ("viterbi 60000x4 d=250", run_viterbi)):
        py = _best_of(make(_fallback), repeat)
        if _native is not None:
            cy = _best_of(make(_native), repeat)
            rows.append((name, py, cy, py / cy))
        else:
            rows.append((name, py, float("nan"), float("nan")))

    print(f"{'kernel':<34} {'python_s':>10} {'compiled_s':>11} {'speedup':>8}")
    for name, py, cy, ratio in rows:
        print(f"{name:<34} {py:>10.4f} {cy:>11.4f} {ratio:>7.1f}x")


def bench_pipeline(repeat: int) -> None:
    """Full ten-minute diarization run under each backend (subprocesses,
    so the import-time backend selection can differ)."""
    script = (
        "import time, numpy as np\n"
        "from ibdiar.backend import BACKEND_NAME\n"
        "from ibdiar.pipeline import PipelineConfig, diarize\n"
        "from ibdiar.synth import SynthSpec, synth_conversation\n"
        "conv = synth_conversation(SynthSpec(num_speakers=4, duration=600.0,"
        " seed=11))\n"
        "t0 = time.perf_counter()\n"
        "res = diarize(conv.features, conv.mask, conv.phonemes,"
        " PipelineConfig(mode='ib', nmi=0.65))\n"
        "wall = time.perf_counter() - t0\n"
        "print(f'{BACKEND_NAME}: wall={wall:.2f}s rtf={wall / 600.0:.4f}')\n"
    )
    for pure in ("0", "1"):
        env = dict(os.environ, IBDIAR_PURE=pure)
        sys.stdout.flush()
        subprocess.run([sys.executable, "-c", script], env=env, check=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    importlib.import_module("ibdiar")
    print("== kernel micro-benchmarks ==")
    bench_kernels(args.repeat)
    print("\n== end-to-end (mode=ib, 10 min synthetic) ==")
    bench_pipeline(args.repeat)


if __name__ == "__main__":
    main()
