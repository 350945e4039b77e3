"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-N wall time per call and the speedup for the fused GRU
forward/backward and the LCS dynamic program.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from kw2sent.numerics import kernels


def _gru_inputs(B: int, H: int, dtype, seed: int = 0):
    rng = np.random.default_rng(seed)
    gx = rng.standard_normal((B, 3 * H)).astype(dtype)
    gh = rng.standard_normal((B, 3 * H)).astype(dtype)
    h = rng.standard_normal((B, H)).astype(dtype)
    return gx, gh, h


def cases():
    for B, H in ((1, 500), (32, 500), (32, 100)):
        gx, gh, h = _gru_inputs(B, H, np.float32)
        yield f"gru_forward  B={B:<3} H={H}", "gru_forward", (gx, gh, h)
        h_new, r, z, n = kernels.fallback.gru_forward(gx, gh, h)
        yield f"gru_backward B={B:<3} H={H}", "gru_backward", (np.ones_like(h_new), gh, h, r, z, n)
    rng = np.random.default_rng(1)
    for n in (10, 30, 100):
        a, b = rng.integers(0, 20, n), rng.integers(0, 20, n)
        yield f"lcs_length   n={n}", "lcs_length", (a, b)


def best_time(fn, args, repeat: int) -> float:
    number = 20
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled kernels are not built; only the fallback is available")
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':<26}{'fallback':>12}{'compiled':>12}{'speedup':>10}")
    for label, name, fargs in cases():
        t_py = best_time(getattr(kernels.fallback, name), fargs, args.repeat)
        if kernels.compiled is not None:
            t_c = best_time(getattr(kernels.compiled, name), fargs, args.repeat)
            print(f"{label:<26}{t_py * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us{t_py / t_c:>9.1f}x")
        else:
            print(f"{label:<26}{t_py * 1e6:>10.1f}us{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
