import numpy as np
import pytest

from zonodual import _pykernels, kernels

pytestmark = pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")


def test_backend_switch():
    prev = kernels.BACKEND
    try:
        assert kernels.use_backend("python") == "python"
        assert kernels.candidate_argmin is _pykernels.candidate_argmin
    finally:
        kernels.use_backend(prev)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_vertices_identical():
    from zonodual import _ckernels

    rng = np.random.default_rng(1)
    for m in range(1, 13):
        c, E = rng.normal(size=2), rng.normal(size=(2, m))
        E[:, E[0] < 0] *= -1
        a = _pykernels.zono2d_vertices(c, np.ascontiguousarray(E))
        b = np.asarray(_ckernels.zono2d_vertices(c, np.ascontiguousarray(E)))
        assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_candidate_argmin_identical():
    from zonodual import _ckernels

    rng = np.random.default_rng(2)
    P = rng.normal(size=(50, 9, 2))
    c1, c2 = rng.normal(size=(50, 2)), rng.normal(size=(50, 2))
    va, ia = _pykernels.candidate_argmin(P, c1, c2)
    vb, ib = _ckernels.candidate_argmin(P, c1, c2)
    assert np.array_equal(ia, np.asarray(ib))
    assert np.allclose(va, np.asarray(vb), atol=1e-14, rtol=0)


def test_simplex_identical():
    from zonodual import _ckernels

    rng = np.random.default_rng(3)
    for _ in range(100):
        n, p = rng.integers(1, 6), rng.integers(1, 6)
        A = np.ascontiguousarray(rng.normal(size=(p, n)))
        r, c = rng.normal(size=p), rng.normal(size=n)
        lo, hi = -np.ones(n), np.ones(n)
        smax = np.maximum(np.maximum(A, 0) @ hi + np.minimum(A, 0) @ lo - r, 0)
        args = (A, r, c, lo, hi, smax, 50 * (n + p), 1e-9, 1e-7, 1e-10)
        sa = _pykernels.bounded_simplex(*[x.copy() if isinstance(x, np.ndarray) else x for x in args])
        sb = _ckernels.bounded_simplex(*[x.copy() if isinstance(x, np.ndarray) else x for x in args])
        assert sa[0] == sb[0]
        if sa[0] == kernels.OPTIMAL:
            assert c @ sa[1][:n] == pytest.approx(c @ np.asarray(sb[1])[:n], abs=1e-9)
