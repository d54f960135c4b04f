"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
versions in ``_pykernels`` are used. ``use_backend`` switches at runtime
(benchmarks and the cross-backend tests rely on it).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

OPTIMAL = _pykernels.OPTIMAL
INFEASIBLE = _pykernels.INFEASIBLE
ITERATION_LIMIT = _pykernels.ITERATION_LIMIT
UNBOUNDED = _pykernels.UNBOUNDED

BACKEND = None
zono2d_vertices = None
candidate_argmin = None
bounded_simplex = None


def available_backends():
    return ["python"] + (["cython"] if _ckernels is not None else [])


def use_backend(name):
    global BACKEND, zono2d_vertices, candidate_argmin, bounded_simplex
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available; build with `pip install -e .`")
        impl = _ckernels
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    zono2d_vertices = impl.zono2d_vertices
    candidate_argmin = impl.candidate_argmin
    bounded_simplex = impl.bounded_simplex
    return name


use_backend("cython" if _ckernels is not None else "python")
