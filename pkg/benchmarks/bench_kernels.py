"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from zonodual import kernels
from zonodual.dual import DualProblem, init_rho_kw
from zonodual.geom2d import Zono2D, enumerate_vertices
from zonodual.lpcore import LinearProgram, solve_lp
from zonodual.netio import make_input_box
from zonodual.partition import pairs_similarity
from zonodual.pipeline import fixture_net, fixture_problem
from zonodual.pushforward import zono_propagate


def _cases(rng):
    zonos = [Zono2D(rng.normal(size=2), rng.normal(size=(2, 12))) for _ in range(200)]
    points = rng.normal(size=(64, 24, 2))
    c1, c2 = rng.normal(size=(64, 2)), rng.normal(size=(64, 2))
    lps = []
    for _ in range(20):
        n, k = 8, 12
        x0 = rng.uniform(-1, 1, n)
        A = rng.normal(size=(k, n))
        lps.append(LinearProgram(rng.normal(size=n), -np.ones(n), np.ones(n), A, A @ x0 - rng.uniform(0, 1, k)))
    net = fixture_net(0, (2, 16, 16, 16, 1))
    box = make_input_box(fixture_problem(net, 0))
    bounds = zono_propagate(net, box)
    prob = DualProblem(net, box, bounds, [pairs_similarity(lb.pre_zono.generators) for lb in bounds[:-1]])
    rho = init_rho_kw(net, bounds)
    return {
        "zono2d_vertices (200 x m=12)": lambda: [enumerate_vertices(z) for z in zonos],
        "candidate_argmin (64 blocks x 24)": lambda: kernels.candidate_argmin(points, c1, c2),
        "solve_lp (20 x 8 vars, 12 rows)": lambda: [solve_lp(lp) for lp in lps],
        "dual evaluate (2-16-16-16-1)": lambda: prob.evaluate(rho),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    results = {}
    for name in backends:
        kernels.use_backend(name)
        for label, fn in _cases(np.random.default_rng(0)).items():
            fn()
            best = min(timeit.repeat(fn, number=args.number, repeat=args.repeat)) / args.number
            results.setdefault(label, {})[name] = best
    kernels.use_backend(backends[-1])
    print(f"{'case':38s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, row in results.items():
        line = f"{label:38s}" + "".join(f"{row[b] * 1e3:10.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
