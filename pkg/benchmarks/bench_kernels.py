"""Time the compiled and pure-Python replay kernels on the synthetic corpus.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from laprating.ingest import filter_matches
from laprating.kernels import available_backends
from laprating.models import Model, encode
from laprating.synthetic import generate_records

MODELS = [
    ("elo", Model("elo", {"K": 24.0})),
    ("velo", Model("velo", {"sigma0": 110.0, "A": 0.2, "B": 80.0})),
    ("vgenelo", Model("vgenelo", {"A": 0.25, "B": 80.0})),
]


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    arrays = encode(filter_matches(generate_records()))
    backends = available_backends()
    print(f"{len(arrays)} matches, {arrays.n_players} players; backends: {', '.join(backends)}")
    print(f"{'model':<9}" + "".join(f"{b + ' ms':>14}" for b in backends) + f"{'speedup':>10}")
    for name, model in MODELS:
        times, outs = {}, {}
        for b, kern in backends.items():
            outs[b] = model.replay(arrays, backend=kern).p_winner
            times[b] = best_time(lambda: model.replay(arrays, backend=kern), args.repeat)
        ref = outs["python"]
        for b, p in outs.items():
            if not np.allclose(p, ref, rtol=1e-12, atol=0):
                raise SystemExit(f"{name}: backend {b} disagrees with python")
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<9}" + "".join(f"{1e3 * times[b]:>14.2f}" for b in backends)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
