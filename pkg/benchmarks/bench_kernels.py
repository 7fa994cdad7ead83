"""Compare the compiled scoring kernels against the pure-Python fallback.

Runs the same workloads through both backends, checks the outputs are
identical, and reports timings:

    python benchmarks/bench_kernels.py [--sentences 20000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from quantrank._kernels import available_backends, get_backend


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def make_workload(n_sentences: int, seed: int = 7):
    rng = random.Random(seed)
    values = []
    units = []
    offsets = [0]
    for _ in range(n_sentences):
        for _ in range(rng.randint(1, 4)):
            values.append(rng.uniform(0.001, 1e6))
            units.append(rng.randrange(6))
        offsets.append(len(values))
    return (
        np.asarray(values, dtype=np.float64),
        np.asarray(units, dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "native" not in backends:
        print("native extension not built; benchmarking pure backend only")

    values, units, offsets = make_workload(args.sentences)
    n = len(offsets) - 1
    batch = values[: min(len(values), 50000)].copy()
    rows = []
    outputs = {}

    for name in backends:
        K = get_backend(name)

        out_phi = np.empty_like(batch)
        t_phi = _time(lambda: K.phi_batch(K.COND_LT, 5e5, batch, out_phi), args.repeat)

        out_qs = np.zeros(n, dtype=np.float64)
        t_qs = _time(
            lambda: K.qs_batch(K.COND_LT, 5e5, 3, values, units, offsets, out_qs),
            args.repeat,
        )

        doc_ords = np.arange(n, dtype=np.int32)
        tfs = np.ones(n, dtype=np.float64)
        norms = np.full(n, 0.75, dtype=np.float64)
        scores = np.zeros(n, dtype=np.float64)
        t_bm25 = _time(
            lambda: K.bm25_accumulate(1.2, 1.5, doc_ords, tfs, norms, scores),
            args.repeat,
        )

        outputs[name] = (out_phi.copy(), out_qs.copy())
        rows.append((name, t_phi, t_qs, t_bm25))

    print(
        f"\n{'backend':<8}{'phi_batch 50k':>16}{'qs_batch':>14}{'bm25 accum':>14}"
    )
    for name, t_phi, t_qs, t_bm25 in rows:
        print(
            f"{name:<8}{t_phi * 1e3:>13.3f} ms{t_qs * 1e3:>11.3f} ms"
            f"{t_bm25 * 1e3:>11.3f} ms"
        )
    if len(rows) == 2:
        base = dict((r[0], r) for r in rows)
        speedup = base["pure"][2] / max(base["native"][2], 1e-12)
        print(f"\nnative qs_batch speedup: {speedup:.1f}x over pure")
        phi_equal = np.array_equal(outputs["native"][0], outputs["pure"][0])
        qs_equal = np.array_equal(outputs["native"][1], outputs["pure"][1])
        print(f"bit-identical outputs: phi={phi_equal} qs={qs_equal}")
        if not (phi_equal and qs_equal):
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
