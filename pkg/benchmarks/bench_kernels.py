"""Compare the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--seed 0]

Both backends receive identical inputs and must agree on every result;
timings are reported as operations per second.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cirrt import _pykernels
from cirrt.geometry import AxisAlignedBox, Sphere, pack_obstacles
from cirrt.primitives import FeasibilityLimits

try:
    from cirrt import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def make_inputs(n, seed):
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(-1, 1, (n, 9))
    sf = rng.uniform(-1, 1, (n, 9))
    s0[:, :3] *= 3
    sf[:, :3] *= 3
    T = rng.uniform(0.5, 3.0, n)
    obstacles = pack_obstacles(
        [Sphere((0.5, 0.2, 0.0), 0.6), AxisAlignedBox((-2, -2, -1.5), (2, 2, -1.0)), Sphere((-1.5, 1.0, 0.5), 0.4)]
    )
    return s0, sf, T, obstacles


def generate_and_screen(k, s0, sf, T, limits):
    out = []
    for a, b, t in zip(s0, sf, T):
        c = k.solve_coeffs(a, b, t)
        out.append((k.jerk_cost(c, t), bool(k.input_feasible(c, t, *limits))))
    return out


def collide(k, s0, sf, T, obstacles):
    out = []
    for a, b, t in zip(s0, sf, T):
        c = k.solve_coeffs(a, b, t)
        out.append(k.first_hit(c, 0.0, t, obstacles, 1e-3, True)[:2])
    return out


def batch(k, s0, sf, T):
    return k.batch_costs(s0, sf, T)


def batch_screen(k, s0, sf, T, limits):
    cost, ok = k.screen(s0, sf, T, *limits)
    return np.concatenate([cost, ok])


def timed(fn, *args, repeat=3):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def agree(a, b):
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=1e-9, atol=1e-12)
    for x, y in zip(a, b):
        if not np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rtol=1e-9, atol=1e-9, equal_nan=True):
            return False
    return True


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    s0, sf, T, obstacles = make_inputs(args.n, args.seed)
    limits = FeasibilityLimits().args()
    cases = [
        ("generate + cost + feasibility", generate_and_screen, (s0, sf, T, limits), args.n),
        ("generate + first collision", collide, (s0, sf, T, obstacles), args.n),
        ("batched cost", batch, (s0, sf, T), args.n),
        ("batched generate + cost + feas.", batch_screen, (s0, sf, T, limits), args.n),
    ]
    backends = [("python", _pykernels)] + ([("compiled", _ckernels)] if _ckernels is not None else [])
    print(f"{'kernel':<32}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}  agree")
    for label, fn, fargs, n in cases:
        rates, results = [], []
        for _, k in backends:
            seconds, result = timed(fn, k, *fargs)
            rates.append(n / seconds)
            results.append(result)
        speedup = f"{rates[-1] / rates[0]:.1f}x" if len(rates) == 2 else "-"
        same = "yes" if len(results) < 2 or agree(results[0], results[1]) else "NO"
        print(f"{label:<32}" + "".join(f"{r:>12.3g}/s" for r in rates) + f"{speedup:>10}  {same}")
    if _ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
