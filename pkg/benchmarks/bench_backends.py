#!/usr/bin/env python3
"""Benchmark the switching-simulator kernels: numba step loop vs numpy scan.

Runs the standard zone-IV operating point at the prototype circuit values for
a few durations and reports wall time per backend plus the worst waveform
disagreement.  The numba timing excludes JIT compilation (one warm-up run).

    python benchmarks/bench_backends.py [--cycles 6 12 24]
"""

import argparse
import math
import time

import numpy as np

from fdpfc import (
    CircuitParams,
    ControlParams,
    GridSource,
    SimConfig,
    TransformerSpec,
    simulate,
)
from fdpfc.backend import HAS_NUMBA

ZONE_IV = ControlParams(0.1391582817074944, 0.6888576671964417, -90.0)


def build_circuit() -> CircuitParams:
    grid = GridSource(200.0 * math.sqrt(2.0), 50.0, 200.0 / 70.0)
    return CircuitParams(25e3, 0.66e-3, 4.4e-6, 50.0, grid, TransformerSpec(220.0 / 127.0))


def run_once(circuit, cycles, backend):
    cfg = SimConfig.for_circuit(circuit, cycles=cycles, settle_cycles=0)
    t0 = time.perf_counter()
    rec = simulate(circuit, ZONE_IV, cfg, backend=backend)
    return time.perf_counter() - t0, rec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cycles", type=int, nargs="+", default=[6, 12, 24])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    circuit = build_circuit()
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if HAS_NUMBA:
        run_once(circuit, 1, "numba")  # compile outside the timed region
    else:
        print("numba not importable; benchmarking the numpy scan only")

    header = f"{'cycles':>7} {'steps':>10}" + "".join(f" {b + ' (s)':>12}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9} {'max diff':>10}"
    print(header)
    for cycles in args.cycles:
        times = {}
        recs = {}
        for b in backends:
            best = math.inf
            for _ in range(args.repeats):
                dt, rec = run_once(circuit, cycles, b)
                best = min(best, dt)
            times[b] = best
            recs[b] = rec
        steps = recs[backends[0]].n_samples - 1
        line = f"{cycles:>7} {steps:>10}" + "".join(f" {times[b]:>12.3f}" for b in backends)
        if len(backends) == 2:
            diff = max(
                np.max(np.abs(recs["numba"].channel(ch) - recs["numpy"].channel(ch)))
                for ch in recs["numba"].channels
            )
            line += f" {times['numpy'] / times['numba']:>8.1f}x {diff:>10.2e}"
        print(line)


if __name__ == "__main__":
    main()
