"""Time each hot kernel on the compiled and numpy backends.

    python benchmarks/bench_kernels.py [--paths 1000] [--steps 1000] [--repeat 5]

Reports the best wall time per kernel and the speed-up of the compiled
backend. Inputs are identical across backends.
"""
import argparse
import timeit

import numpy as np

from bes3.kernels import backends


def cases(paths, steps, seed=0):
    rng = np.random.default_rng(seed)
    dt = 1.0 / steps
    inc3 = rng.standard_normal((paths, steps, 3))
    normals = rng.standard_normal((paths, steps))
    uniforms = rng.random((paths, steps))
    values = np.abs(1.0 + np.cumsum(np.sqrt(dt) * normals, axis=1))
    values = np.hstack([np.ones((paths, 1)), values])
    out_path = np.empty((paths, steps + 1))
    out_min = np.empty((paths, steps))
    # a far level keeps the crossing scan running over the whole row
    long_n = rng.standard_normal(paths * steps)
    long_u = rng.random(paths * steps)
    out_long = np.empty(paths * steps + 1)
    return {
        "norm3d_paths": lambda m: m.norm3d_paths(np.array([1.0, 0.0, 0.0]), np.sqrt(dt), inc3,
                                                 out_path),
        "euler_paths": lambda m: m.euler_paths(1.0, dt, normals, out_path),
        "bes3_bridge_minima": lambda m: m.bes3_bridge_minima(values, dt, uniforms, out_min),
        "brownian_first_crossing": lambda m: m.brownian_first_crossing(
            1.0, -1e9, dt, long_n, long_u, out_long, paths * steps),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    mods = backends()
    work = cases(args.paths, args.steps)
    names = list(mods)
    print(f"{args.paths} paths x {args.steps} steps, best of {args.repeat}")
    print(f"{'kernel':<26}" + "".join(f"{n:>12}" for n in names) + f"{'speed-up':>10}")
    for kernel, fn in work.items():
        best = {n: min(timeit.repeat(lambda m=m: fn(m), number=1, repeat=args.repeat))
                for n, m in mods.items()}
        ratio = best["numpy"] / best["cython"] if "cython" in best else float("nan")
        print(f"{kernel:<26}" + "".join(f"{best[n] * 1e3:>10.1f}ms" for n in names)
              + f"{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
