"""Coordinate partitions used to split a layer's zonotope into small blocks."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partition:
    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups)
        groups = tuple(sorted((g for g in groups if g), key=lambda g: g[0]))
        object.__setattr__(self, "groups", groups)

    @property
    def dim(self):
        return sum(len(g) for g in self.groups)

    @property
    def max_size(self):
        return max((len(g) for g in self.groups), default=0)

    def is_cover(self, d=None):
        d = self.dim if d is None else d
        flat = sorted(i for g in self.groups for i in g)
        return flat == list(range(d))

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)


def singletons(d):
    return Partition(tuple((i,) for i in range(d)))


def pairs_random(d, seed):
    perm = np.random.default_rng(seed).permutation(d)
    groups = [tuple(perm[i : i + 2]) for i in range(0, d, 2)]
    return Partition(tuple(groups))


def pairs_similarity(E):
    """Greedy pairing by the score matrix ``|E| |E|^T``.

    Rows are scanned in index order; each unassigned row takes the unassigned
    partner with the largest score, smallest index on ties.
    """
    A = np.abs(np.asarray(E, dtype=float))
    d = A.shape[0]
    S = A @ A.T
    free = np.ones(d, dtype=bool)
    groups = []
    for i in range(d):
        if not free[i]:
            continue
        free[i] = False
        cand = np.flatnonzero(free)
        if cand.size == 0:
            groups.append((i,))
            break
        j = int(cand[np.argmax(S[i, cand])])
        free[j] = False
        groups.append((i, j))
    return Partition(tuple(groups))


def _spatial_groups(h, w, offset=0):
    groups = []
    leftovers = []
    for y in range(h):
        for x in range(0, w - 1, 2):
            base = offset + y * w + x
            groups.append((base, base + 1))
        if w % 2:
            leftovers.append(offset + y * w + w - 1)
    # odd widths: stack the last column of consecutive rows
    for k in range(0, len(leftovers) - 1, 2):
        groups.append((leftovers[k], leftovers[k + 1]))
    if len(leftovers) % 2:
        groups.append((leftovers[-1],))
    return groups


def _check_shape(shape, d):
    c, h, w = (int(s) for s in shape)
    if d is not None and c * h * w != d:
        raise ValueError(f"feature shape {shape} does not match dimension {d}")
    return c, h, w


def pairs_spatial(shape, d=None):
    c, h, w = _check_shape(shape, d)
    groups = []
    for ch in range(c):
        groups += _spatial_groups(h, w, ch * h * w)
    return Partition(tuple(groups))


def pairs_depthwise(shape, d=None):
    c, h, w = _check_shape(shape, d)
    hw = h * w
    groups = []
    for ch in range(0, c - 1, 2):
        for s in range(hw):
            groups.append((ch * hw + s, (ch + 1) * hw + s))
    if c % 2:
        groups += _spatial_groups(h, w, (c - 1) * hw)
    return Partition(tuple(groups))


def merge_groups(p, target_dim, order=None):
    """Greedily concatenate consecutive groups up to ``target_dim`` coordinates."""
    if target_dim < p.max_size:
        raise ValueError(f"target_dim {target_dim} is smaller than an existing group ({p.max_size})")
    groups = [p.groups[i] for i in order] if order is not None else list(p.groups)
    merged, cur = [], []
    for g in groups:
        if cur and len(cur) + len(g) > target_dim:
            merged.append(tuple(cur))
            cur = []
        cur = cur + list(g)
    if cur:
        merged.append(tuple(cur))
    return Partition(tuple(merged))
