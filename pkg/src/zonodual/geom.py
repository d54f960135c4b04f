"""Zonotope and hyperbox algebra.

A zonotope ``Z(c, E) = {c + E y : y in [-1, 1]^m}`` is stored as a center
vector and a dense ``d x m`` generator matrix whose columns are generators.
"""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperbox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError(f"box bounds have lengths {lo.size} and {hi.size}")
        if np.any(lo > hi):
            bad = int(np.argmax(lo > hi))
            raise ValueError(f"empty box: lo[{bad}]={lo[bad]!r} > hi[{bad}]={hi[bad]!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self):
        return 0.5 * (self.hi - self.lo)

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def intersect(self, other, tol=0.0):
        """Elementwise intersection. Returns None when empty beyond ``tol``."""
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi + tol):
            return None
        # overlaps within tolerance collapse to the crossing point
        swap = lo > hi
        mid = 0.5 * (lo + hi)
        lo = np.where(swap, mid, lo)
        hi = np.where(swap, mid, hi)
        return Hyperbox(lo, hi)

    def sub(self, coords):
        coords = np.asarray(coords, dtype=int)
        return Hyperbox(self.lo[coords], self.hi[coords])


@dataclass(frozen=True)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        E = np.asarray(self.generators, dtype=float)
        if E.ndim == 1 and E.size == 0:
            E = E.reshape(c.size, 0)
        if E.ndim != 2 or E.shape[0] != c.size:
            raise DimensionError(f"generator matrix shape {E.shape} does not match center length {c.size}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(E))):
            raise ValueError("zonotope entries must be finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", E)

    @property
    def dim(self):
        return self.center.size

    @property
    def n_generators(self):
        return self.generators.shape[1]

    @classmethod
    def point(cls, c):
        c = np.asarray(c, dtype=float).reshape(-1)
        return cls(c, np.zeros((c.size, 0)))

    def radii(self):
        return np.abs(self.generators).sum(axis=1)

    def support(self, a):
        """max over the zonotope of ``a . z``."""
        a = np.asarray(a, dtype=float)
        return float(a @ self.center + np.abs(self.generators.T @ a).sum())

    def drop_zero_generators(self):
        keep = np.any(self.generators != 0.0, axis=0)
        if keep.all():
            return self
        return Zonotope(self.center, self.generators[:, keep])


def affine_image(z, W, b=None):
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] != z.dim:
        raise DimensionError(f"weight has {W.shape[1]} columns, zonotope has dimension {z.dim}")
    c = W @ z.center
    if b is not None:
        b = np.asarray(b, dtype=float).reshape(-1)
        if b.size != c.size:
            raise DimensionError(f"bias length {b.size} != output width {c.size}")
        c = c + b
    return Zonotope(c, W @ z.generators)


def minkowski_sum(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"cannot add zonotopes of dimension {a.dim} and {b.dim}")
    return Zonotope(a.center + b.center, np.hstack([a.generators, b.generators]))


def linmin(z, a):
    """Minimize ``a . x`` over the zonotope in closed form.

    Returns ``(value, argmin)``. Generators orthogonal to ``a`` take
    ``y = +1`` so the argmin is deterministic.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size != z.dim:
        raise DimensionError(f"direction length {a.size} != zonotope dimension {z.dim}")
    proj = z.generators.T @ a
    y = np.where(proj > 0, -1.0, 1.0)
    value = float(a @ z.center - np.abs(proj).sum())
    return value, z.center + z.generators @ y


def concretize(z):
    r = z.radii()
    return Hyperbox(z.center - r, z.center + r)


def project(z, coords):
    coords = np.asarray(coords, dtype=int).reshape(-1)
    if coords.size and (coords.min() < 0 or coords.max() >= z.dim):
        raise IndexError(f"projection indices out of range for dimension {z.dim}")
    if np.unique(coords).size != coords.size:
        raise IndexError("projection indices must be distinct")
    return Zonotope(z.center[coords], z.generators[coords, :])


def merge_colinear(z, tol=1e-12):
    """Combine generators that span the same line; the set is unchanged."""
    E = z.generators
    norms = np.linalg.norm(E, axis=0)
    keep = norms > 0
    E = E[:, keep]
    norms = norms[keep]
    if E.shape[1] <= 1:
        return Zonotope(z.center, E)
    U = E / norms
    # sign-normalize: first nonzero entry positive
    lead = np.argmax(np.abs(U) > 0, axis=0)
    sign = np.sign(U[lead, np.arange(U.shape[1])])
    U = U * sign
    E = E * sign
    merged = []
    used = np.zeros(E.shape[1], dtype=bool)
    for j in range(E.shape[1]):
        if used[j]:
            continue
        same = (~used) & (np.max(np.abs(U - U[:, [j]]), axis=0) <= tol)
        used |= same
        merged.append(E[:, same].sum(axis=1))
    return Zonotope(z.center, np.column_stack(merged))


def box_to_zonotope(h):
    r = h.radius
    nz = np.flatnonzero(r > 0)
    E = np.zeros((h.dim, nz.size))
    E[nz, np.arange(nz.size)] = r[nz]
    return Zonotope(h.center, E)
