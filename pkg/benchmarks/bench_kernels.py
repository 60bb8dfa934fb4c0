"""Compare the compiled kernels against the pure-numpy fallbacks.

Runs each hot kernel and one full training step per backend under both
implementations and prints a speedup table:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from boxpinn import engine, kernels, networks, objective, sampling

kernels.tune_malloc()


def timeit(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1000.0


def bench_sor(repeats):
    grid = np.zeros((101, 101))
    grid[-1, 1:-1] = 1.0
    return timeit(lambda: kernels.sor_sweep(grid, 1.939), repeats)


def bench_bspline(repeats):
    rng = np.random.default_rng(0)
    t = rng.uniform(-1.2, 1.2, 32400)
    knots = -1.0 + (np.arange(12) - 3) * 0.4
    return timeit(lambda: kernels.bspline_triangles(t, knots, 3, 5, 3), repeats)


def bench_outer(repeats):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((13500, 32))
    d = rng.standard_normal((13500, 32))
    return timeit(lambda: kernels.outer_accum(x, d), repeats)


def bench_train_step(backend, repeats):
    samples = sampling.build_samples(2500, 50, seed=43)
    model = networks.default_model(backend, seed=42)
    params = model.params.copy()

    def step():
        leaf = engine.Tensor(params, requires_grad=True)
        _, _, total = objective.traced_parts(leaf, model, samples, 1.0)
        total.backward()

    return timeit(step, repeats)


BENCHES = [
    ("sor_sweep 101x101", bench_sor),
    ("bspline_triangles 32400 pts", bench_bspline),
    ("outer_accum 13500x32x32", bench_outer),
    ("train step mlp (2700 pts)", lambda r: bench_train_step("mlp", r)),
    ("train step kan (2700 pts)", lambda r: bench_train_step("kan", r)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAVE_EXTENSION:
        print("compiled extension not available; benchmarking the fallback only")
        backends = ["python"]
    else:
        backends = ["compiled", "python"]

    results = {}
    for name, bench in BENCHES:
        for backend in backends:
            kernels.set_backend(backend)
            results[(name, backend)] = bench(args.repeats)
    if kernels.HAVE_EXTENSION:
        kernels.set_backend("compiled")

    width = max(len(name) for name, _ in BENCHES)
    header = f"{'benchmark':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, _ in BENCHES:
        fast = results.get((name, "compiled"))
        slow = results[(name, "python")]
        if fast is None:
            print(f"{name:<{width}}  {'-':>10}  {slow:>8.2f}ms  {'-':>8}")
        else:
            print(f"{name:<{width}}  {fast:>8.2f}ms  {slow:>8.2f}ms  {slow / fast:>7.1f}x")


if __name__ == "__main__":
    main()
