"""Sound ReLU pushforward operators and intermediate-bound propagation."""

from dataclasses import dataclass

import numpy as np

from .geom import Hyperbox, Zonotope, affine_image, box_to_zonotope, concretize

BOX_TOL = 1e-9


class InconsistentBoundsError(ValueError):
    """A zonotope interval and a hyperbox interval do not overlap."""


@dataclass(frozen=True)
class LayerBounds:
    pre_zono: Zonotope
    pre_box: Hyperbox
    lambdas: np.ndarray


def relu_coefficients(lo, hi):
    """Per-coordinate slope and error radius of the DeepZ relaxation on [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    # lo == 0 < hi falls in the "otherwise" branch, where u/(u-l) = 1
    lam = np.where((lo >= 0) & (hi > 0), 1.0, 0.0)
    err = np.zeros_like(lo)
    unstable = (lo < 0) & (hi > 0)
    width = hi[unstable] - lo[unstable]
    lam[unstable] = hi[unstable] / width
    err[unstable] = -lo[unstable] * hi[unstable] / (2.0 * width)
    return lam, err


def _apply_relaxation(z, lam, err, radius=None):
    """``lam * z + err`` plus a fresh error generator of size ``radius`` (default ``err``) per coordinate."""
    radius = err if radius is None else radius
    c = lam * z.center + err
    E = lam[:, None] * z.generators
    keep = np.any(E != 0.0, axis=0)
    E = E[:, keep]
    nz = np.flatnonzero(radius > 0)
    B = np.zeros((z.dim, nz.size))
    B[nz, np.arange(nz.size)] = radius[nz]
    return Zonotope(c, np.hstack([E, B]))


def relu_pushforward_deepz(z):
    box = concretize(z)
    lam, err = relu_coefficients(box.lo, box.hi)
    return _apply_relaxation(z, lam, err), lam


def intersect_intervals(zbox, h):
    """Intersect a zonotope's interval hull with ``h``; raises if they miss by more than BOX_TOL."""
    lo = np.maximum(zbox.lo, h.lo)
    hi = np.minimum(zbox.hi, h.hi)
    gap = lo - hi
    if np.any(gap > BOX_TOL):
        i = int(np.argmax(gap))
        raise InconsistentBoundsError(
            f"coordinate {i}: zonotope interval [{zbox.lo[i]}, {zbox.hi[i]}] misses box [{h.lo[i]}, {h.hi[i]}]"
        )
    swap = gap > 0
    mid = 0.5 * (lo + hi)
    return Hyperbox(np.where(swap, mid, lo), np.where(swap, mid, hi))


def relu_pushforward_boxed(z, h):
    box = intersect_intervals(concretize(z), h)
    lam, err = relu_coefficients(box.lo, box.hi)
    return _apply_relaxation(z, lam, err), lam


def _band_range(lo, hi, lam):
    """Range of ``relu(z) - lam * z`` over each interval [lo, hi]."""
    cands = np.stack([lo, np.clip(0.0, lo, hi), hi])
    vals = np.maximum(cands, 0.0) - lam * cands
    return vals.min(axis=0), vals.max(axis=0)


def relu_pushforward_nested(z, h):
    """Box-aware pushforward whose output is always contained in ``relu_pushforward_deepz(z)``.

    Per coordinate the tightened-interval coefficients are kept when their
    band lies inside the DeepZ band over the whole zonotope interval;
    otherwise the DeepZ slope is kept and only the offset band shrinks to
    the range of ``relu(z) - lam z`` over the tightened interval.
    """
    zbox = concretize(z)
    box = intersect_intervals(zbox, h)
    lam0, err0 = relu_coefficients(zbox.lo, zbox.hi)
    lam1, err1 = relu_coefficients(box.lo, box.hi)
    nested = np.ones(z.dim, dtype=bool)
    for end in (zbox.lo, zbox.hi):
        tol = 1e-12 * (1.0 + np.abs(end))
        nested &= lam1 * end >= lam0 * end - tol
        nested &= lam1 * end + 2 * err1 <= lam0 * end + 2 * err0 + tol
    m1, m2 = _band_range(box.lo, box.hi, lam0)
    lam = np.where(nested, lam1, lam0)
    off = np.where(nested, err1, 0.5 * (m1 + m2))
    rad = np.where(nested, err1, 0.5 * (m2 - m1))
    return _apply_relaxation(z, lam, off, rad), lam


def ibp_propagate(net, input_box):
    if input_box.dim != net.input_dim:
        raise ValueError(f"input box has dimension {input_box.dim}, network expects {net.input_dim}")
    boxes = []
    lo, hi = input_box.lo, input_box.hi
    for k, layer in enumerate(net.layers):
        mid = 0.5 * (lo + hi)
        rad = 0.5 * (hi - lo)
        c = layer.weight @ mid + layer.bias
        r = np.abs(layer.weight) @ rad
        boxes.append(Hyperbox(c - r, c + r))
        lo, hi = np.maximum(c - r, 0.0), np.maximum(c + r, 0.0)
    return boxes


def zono_propagate(net, input_box, aux_boxes=None, nested=False):
    """Pre-activation zonotopes for every layer, optionally tightened by ``aux_boxes``.

    With ``nested`` the ReLU steps use ``relu_pushforward_nested`` so every
    zonotope stays inside its plain DeepZ counterpart.
    """
    if aux_boxes is not None and len(aux_boxes) < len(net.layers):
        raise ValueError(f"need one aux box per layer ({len(net.layers)}), got {len(aux_boxes)}")
    z = affine_image(box_to_zonotope(input_box), net.layers[0].weight, net.layers[0].bias)
    out = []
    for k, layer in enumerate(net.layers):
        if k > 0:
            z = affine_image(post, layer.weight, layer.bias)
        zbox = concretize(z)
        aux = aux_boxes[k] if aux_boxes is not None else None
        if aux is not None:
            if aux.dim != z.dim:
                raise ValueError(f"aux box {k} has width {aux.dim}, layer width is {z.dim}")
            box = intersect_intervals(zbox, aux)
        else:
            box = zbox
        lam, err = relu_coefficients(box.lo, box.hi)
        out.append(LayerBounds(z, box, lam))
        if k + 1 < len(net.layers):
            if nested and aux is not None:
                post, _ = relu_pushforward_nested(z, aux)
            else:
                post = _apply_relaxation(z, lam, err)
    return out
