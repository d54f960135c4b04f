import numpy as np
import pytest

from zonodual import kernels
from zonodual.lpcore import LinearProgram, solve_lp

scipy_optimize = pytest.importorskip("scipy.optimize")


def test_box_only():
    res = solve_lp(LinearProgram([1, -2], [-1, -1], [1, 1]))
    assert res.optimal and res.value == -3 and np.array_equal(res.x, [-1, 1])


def test_infeasible(backend):
    res = solve_lp(LinearProgram.from_constraints([1.0], [0.0], [0.5], [([1.0], 1.0)]))
    assert res.infeasible


def test_small_polygon(backend):
    res = solve_lp(LinearProgram.from_constraints([1, 1], [-1, -1], [1, 1], [([1, 1], -1)]))
    assert res.optimal and res.value == pytest.approx(-1)


def test_zero_row_handling():
    ok = solve_lp(LinearProgram([1.0], [0.0], [1.0], [[0.0]], [-1.0]))
    assert ok.optimal
    bad = solve_lp(LinearProgram([1.0], [0.0], [1.0], [[0.0]], [1.0]))
    assert bad.infeasible


def test_invalid_inputs():
    with pytest.raises(ValueError):
        LinearProgram([1.0], [1.0], [0.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan], [0.0], [1.0])


def test_against_highs(backend):
    rng = np.random.default_rng(7)
    for _ in range(200):
        n, p = rng.integers(1, 7), rng.integers(0, 7)
        lo = rng.uniform(-2, 0, n)
        hi = lo + rng.uniform(0, 3, n)
        A = rng.normal(size=(p, n))
        r = rng.normal(size=p)
        c = rng.normal(size=n)
        ours = solve_lp(LinearProgram(c, lo, hi, A, r))
        ref = scipy_optimize.linprog(c, A_ub=-A if p else None, b_ub=-r if p else None,
                                     bounds=list(zip(lo, hi)), method="highs")
        assert ours.optimal == (ref.status == 0)
        if ours.optimal:
            assert ours.value == pytest.approx(ref.fun, abs=1e-7)
            assert np.all(A @ ours.x >= r - 1e-7)
