"""Compare the compiled and pure-Python power-iteration kernels.

    python benchmarks/bench_kernels.py [--sizes 1024 4096] [--kmax 20] [--repeat 3]

Prints one line per (map, scheme, n, backend) with the best wall time and
checks that both backends return identical bounds.
"""
from __future__ import annotations

import argparse
import time

from certimeasure.discretization import assemble
from certimeasure.maps import lanford, perturbed_4x
from certimeasure.norms import norms_of_powers

CASES = [("lanford", lanford, "ulam"), ("perturbed_4x", perturbed_4x, "hat")]


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096])
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    print(f"{'map':<14}{'scheme':<8}{'n':>7}  {'cython s':>10}  {'python s':>10}  {'speedup':>8}  same")
    for name, make, scheme in CASES:
        for n in args.sizes:
            mat = assemble(make(), n, scheme)
            tc, c = best_time(lambda: norms_of_powers(mat, k_max=args.kmax, backend="cython"), args.repeat)
            tp, q = best_time(lambda: norms_of_powers(mat, k_max=args.kmax, backend="python"), args.repeat)
            print(f"{name:<14}{scheme:<8}{n:>7}  {tc:>10.3f}  {tp:>10.3f}  {tp / tc:>8.2f}  {c.C == q.C}")


if __name__ == "__main__":
    main()
