"""
Numba vs pure-numpy timing for the two hot kernels.

    python benchmarks/bench_kernels.py [--events 20000] [--repeat 5]

Both variants run on identical inputs; the script also checks that they
produce identical networks and emission terms before timing them.
"""

import argparse
import time

import numpy as np

from hmmsnn import kernels


def make_inputs(events, n_in=80, n_out=8, seed=0):
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-0.1, 0.1, size=(n_out, n_in))
    bias = np.zeros(n_out)
    counts = np.ones(n_out, dtype=np.int64)
    epsp = (rng.random((events, n_in)) < 0.3).astype(np.uint8)
    uniforms = rng.random(events)
    return weights, bias, counts, epsp, uniforms


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_train(events, repeat):
    w, b, c, epsp, u = make_inputs(events)

    def run(impl):
        ww, bb, cc = w.copy(), b.copy(), c.copy()
        impl(ww, bb, cc, 1.0, epsp, u)
        return ww, bb, cc

    fast, slow = run(kernels._train_events_nb), run(kernels._train_events_py)
    agree = all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(fast, slow))
    t_nb = best_of(lambda: run(kernels._train_events_nb), repeat)
    t_py = best_of(lambda: run(kernels._train_events_py), max(1, repeat // 2))
    return t_nb, t_py, agree


def bench_emit(events, repeat):
    w, b, _, epsp, _ = make_inputs(events, seed=1)
    fast = kernels._emission_terms_nb(w, b, epsp)
    slow = kernels._emission_terms_py(w, b, epsp)
    agree = all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(fast, slow))
    t_nb = best_of(lambda: kernels._emission_terms_nb(w, b, epsp), repeat)
    t_py = best_of(lambda: kernels._emission_terms_py(w, b, epsp), repeat)
    return t_nb, t_py, agree


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--events", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not kernels.HAS_NUMBA:
        print("numba is not installed; both columns time the numpy path")

    # compile outside the timed region
    bench_train(10, 1)
    bench_emit(10, 1)

    print(f"{'kernel':<16}{'events':>8}{'numba s':>11}{'numpy s':>11}{'speedup':>9}  agree")
    for name, fn in (("train_events", bench_train), ("emission_terms", bench_emit)):
        t_nb, t_py, agree = fn(args.events, args.repeat)
        print(f"{name:<16}{args.events:>8}{t_nb:>11.4f}{t_py:>11.4f}{t_py / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
