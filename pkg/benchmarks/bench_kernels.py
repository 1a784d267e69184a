"""Compare the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--pairs 5000] [--nodes 40 200 500]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from policylens import _kernels as k


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def random_pairs(n: int, max_len: int, seed: int = 0):
    rng = random.Random(seed)
    alphabet = "abcdefgh ij"

    def word():
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))

    return [(k.encode(word()), k.encode(word())) for _ in range(n)]


def random_adjacency(n: int, p: float, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    adj = rng.random((n, n)) < p
    return np.tril(adj, k=-1)  # child index above parent index keeps it acyclic


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=5000)
    parser.add_argument("--max-len", type=int, default=64)
    parser.add_argument("--nodes", type=int, nargs="+", default=[40, 200, 500])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if not k.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    pairs = random_pairs(args.pairs, args.max_len)
    k.lcs_length_jit(*pairs[0])  # compile outside the timed region
    for a, b in pairs[:200]:
        assert k.lcs_length_jit(a, b) == k.lcs_length_numpy(a, b)
    t_jit = best_of(lambda: [k.lcs_length_jit(a, b) for a, b in pairs], args.repeat)
    t_np = best_of(lambda: [k.lcs_length_numpy(a, b) for a, b in pairs], args.repeat)
    print(f"{'kernel':<24}{'size':>10}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    print(f"{'lcs_length':<24}{args.pairs:>10}{t_jit:>12.4f}{t_np:>12.4f}{t_np / t_jit:>10.1f}")

    k.transitive_closure_jit(random_adjacency(4, 0.5))
    for n in args.nodes:
        adj = random_adjacency(n, 4 / max(n, 1))
        assert np.array_equal(k.transitive_closure_jit(adj), k.transitive_closure_numpy(adj))
        t_jit = best_of(lambda: k.transitive_closure_jit(adj), args.repeat)
        t_np = best_of(lambda: k.transitive_closure_numpy(adj), args.repeat)
        print(f"{'transitive_closure':<24}{n:>10}{t_jit:>12.4f}{t_np:>12.4f}{t_np / t_jit:>10.1f}")


if __name__ == "__main__":
    main()
