"""Exact geometry of 2-D zonotopes and candidate optima for 2-D ReLU programs."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geom import Hyperbox, Zonotope

MERGE_TOL = 1e-12
DEDUP_TOL = 1e-9
CONTAIN_TOL = 1e-9

VERTEX = "vertex"
AXIS_CROSSING = "axis_crossing"
ORIGIN = "origin"
RECT_VERTEX = "rect_vertex"
EDGE_INTERSECTION = "edge_intersection"


class Zono2D:
    """A 2-D zonotope with sign-normalized, colinear-merged generators.

    Normalization: first coordinate >= 0, and second > 0 when the first is 0.
    """

    def __init__(self, center, generators):
        c = np.asarray(center, dtype=float).reshape(2)
        G = np.asarray(generators, dtype=float).reshape(2, -1)
        G = G[:, np.any(G != 0.0, axis=0)]
        flip = (G[0] < 0) | ((G[0] == 0) & (G[1] < 0))
        G = np.where(flip, -G, G)
        self.center = c
        self.generators = _merge_parallel(G)

    @classmethod
    def from_zonotope(cls, z):
        if z.dim != 2:
            raise ValueError(f"expected a 2-D zonotope, got dimension {z.dim}")
        return cls(z.center, z.generators)

    @property
    def m(self):
        return self.generators.shape[1]

    def to_zonotope(self):
        return Zonotope(self.center, self.generators)

    def support(self, a):
        return float(np.dot(a, self.center) + np.abs(np.asarray(a) @ self.generators).sum())


def _merge_parallel(G):
    m = G.shape[1]
    if m <= 1:
        return G.copy()
    ang = np.arctan2(G[1], G[0])
    order = np.argsort(-ang, kind="stable")
    G = G[:, order]
    U = G / np.hypot(G[0], G[1])
    out = [G[:, 0]]
    prev = U[:, 0]
    for j in range(1, m):
        u = U[:, j]
        if abs(prev[0] * u[1] - prev[1] * u[0]) <= MERGE_TOL:
            out[-1] = out[-1] + G[:, j]
        else:
            out.append(G[:, j])
            prev = u
    # near-vertical generators can land at both ends of the angle order
    if len(out) > 1:
        first, last = out[0], out[-1]
        if abs(first[0] * last[1] - first[1] * last[0]) <= MERGE_TOL * np.hypot(*first) * np.hypot(*last):
            out[0] = first - last if first @ last < 0 else first + last
            out.pop()
    return np.column_stack(out)


@dataclass
class CandidateSet:
    points: np.ndarray
    kinds: list
    empty: bool = False

    def __len__(self):
        return self.points.shape[0]


EMPTY = CandidateSet(np.zeros((0, 2)), [], empty=True)


def enumerate_vertices(z):
    """Clockwise vertex list, starting from the lowest leftmost vertex."""
    return kernels.zono2d_vertices(np.ascontiguousarray(z.center), np.ascontiguousarray(z.generators))


def _edges(vertices):
    return vertices, np.roll(vertices, -1, axis=0)


def axis_crossings(vertices):
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
    pts = []
    for axis in (0, 1):
        on = np.abs(vertices[:, axis]) <= CONTAIN_TOL
        for v in vertices[on]:
            p = v.copy()
            p[axis] = 0.0
            pts.append(p)
        if len(vertices) < 2:
            continue
        a, b = _edges(vertices)
        if len(vertices) == 2:
            a, b = a[:1], b[:1]
        cross = a[:, axis] * b[:, axis] < 0
        for p, q in zip(a[cross], b[cross]):
            t = p[axis] / (p[axis] - q[axis])
            pt = p + t * (q - p)
            pt[axis] = 0.0
            pts.append(pt)
    return _dedup(np.array(pts).reshape(-1, 2))


def contains_point(vertices, pt, tol=CONTAIN_TOL):
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
    pt = np.asarray(pt, dtype=float)
    if len(vertices) == 1:
        return bool(np.linalg.norm(vertices[0] - pt) <= tol)
    if len(vertices) == 2:
        return _segment_distance(vertices[0], vertices[1], pt) <= tol
    a, b = _edges(vertices)
    e = b - a
    w = pt - a
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    # clockwise polygon: interior lies to the right of every edge
    lengths = np.hypot(e[:, 0], e[:, 1])
    return bool(np.all(cross <= tol * np.maximum(lengths, 1.0)))


def _segment_distance(a, b, p):
    ab = b - a
    denom = ab @ ab
    t = 0.0 if denom == 0 else min(max((p - a) @ ab / denom, 0.0), 1.0)
    return float(np.linalg.norm(a + t * ab - p))


def contains_origin(vertices):
    return contains_point(vertices, np.zeros(2))


def _dedup(points, kinds=None):
    keep_pts, keep_kinds = [], []
    for i, p in enumerate(points):
        if any(np.linalg.norm(p - q) <= DEDUP_TOL for q in keep_pts):
            continue
        keep_pts.append(p)
        if kinds is not None:
            keep_kinds.append(kinds[i])
    arr = np.array(keep_pts).reshape(-1, 2)
    return arr if kinds is None else (arr, keep_kinds)


def relu_candidates(z):
    verts = enumerate_vertices(z)
    pts = [verts]
    kinds = [VERTEX] * len(verts)
    cross = axis_crossings(verts)
    pts.append(cross)
    kinds += [AXIS_CROSSING] * len(cross)
    if contains_origin(verts):
        pts.append(np.zeros((1, 2)))
        kinds.append(ORIGIN)
    points, kinds = _dedup(np.vstack(pts), kinds)
    return CandidateSet(points, kinds)


def shoot_line(vertices, axis, value):
    """Interval of the other coordinate where the polygon meets ``x[axis] == value``."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
    other = 1 - axis
    hits = []
    for v in vertices:
        if abs(v[axis] - value) <= CONTAIN_TOL:
            hits.append(v[other])
    if len(vertices) >= 2:
        a, b = _edges(vertices)
        if len(vertices) == 2:
            a, b = a[:1], b[:1]
        da = a[:, axis] - value
        db = b[:, axis] - value
        cross = da * db < 0
        for p, q, s, t in zip(a[cross], b[cross], da[cross], db[cross]):
            lam = s / (s - t)
            hits.append(p[other] + lam * (q[other] - p[other]))
    if not hits:
        return None
    return min(hits), max(hits)


def relu_candidates_boxed(z, rect):
    """Candidate optima over the zonotope intersected with an axis-aligned rectangle."""
    lo, hi = rect.lo, rect.hi
    verts = enumerate_vertices(z)
    pts, kinds = [], []
    inside = np.all((verts >= lo - CONTAIN_TOL) & (verts <= hi + CONTAIN_TOL), axis=1)
    for v in verts[inside]:
        pts.append(np.clip(v, lo, hi))
        kinds.append(VERTEX)
    # shoot the four rectangle sides
    for axis in (0, 1):
        other = 1 - axis
        for value in (lo[axis], hi[axis]):
            seg = shoot_line(verts, axis, value)
            if seg is None:
                continue
            a, b = max(seg[0], lo[other]), min(seg[1], hi[other])
            if a > b + CONTAIN_TOL:
                continue
            for s in (a, max(a, b)):
                p = np.empty(2)
                p[axis] = value
                p[other] = s
                corner = abs(s - lo[other]) <= CONTAIN_TOL or abs(s - hi[other]) <= CONTAIN_TOL
                pts.append(p)
                kinds.append(RECT_VERTEX if corner else EDGE_INTERSECTION)
    if not pts:
        # no zonotope vertex lies in the rectangle and no side meets the zonotope
        return EMPTY
    # axis crossings of the intersection
    for axis in (0, 1):
        other = 1 - axis
        if lo[axis] - CONTAIN_TOL <= 0.0 <= hi[axis] + CONTAIN_TOL:
            seg = shoot_line(verts, axis, 0.0)
            if seg is None:
                continue
            a, b = max(seg[0], lo[other]), min(seg[1], hi[other])
            if a > b + CONTAIN_TOL:
                continue
            for s in (a, max(a, b)):
                p = np.empty(2)
                p[axis] = 0.0
                p[other] = s
                pts.append(p)
                kinds.append(AXIS_CROSSING)
    if np.all(lo <= CONTAIN_TOL) and np.all(hi >= -CONTAIN_TOL) and contains_origin(verts):
        pts.append(np.zeros(2))
        kinds.append(ORIGIN)
    points, kinds = _dedup(np.array(pts).reshape(-1, 2), kinds)
    return CandidateSet(points, kinds)
