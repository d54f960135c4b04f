"""Lagrangian-decomposition dual over partitioned zonotope feasible sets.

For a network with affine layers ``W_0..W_L`` and ReLUs after the first L,
the dual function is

    g(rho) = min_{x in X} rho_0.(W_0 x + b_0)
             + sum_{k<L-1} min_{z in Z_k} [-rho_k.z + rho_{k+1}.(W_{k+1} relu(z) + b_{k+1})]
             + min_{z in Z_{L-1}} [-rho_{L-1}.z + W_L relu(z) + b_L]

and each inner minimum splits into independent blocks along a partition of
the layer's coordinates. Every term is a relaxation, so g(rho) is a lower
bound on the network minimum for any rho.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .geom import concretize, project
from .geom2d import Zono2D, relu_candidates, relu_candidates_boxed
from .partition import Partition, singletons
from .reluprog import Budget, ReluObjective, solve_zono_exact


@dataclass
class DualState:
    rho: list

    def __post_init__(self):
        self.rho = [np.asarray(r, dtype=float).copy() for r in self.rho]
        for k, r in enumerate(self.rho):
            if not np.all(np.isfinite(r)):
                raise ValueError(f"rho[{k}] has non-finite entries")

    def copy(self):
        return DualState([r.copy() for r in self.rho])

    @property
    def widths(self):
        return [r.size for r in self.rho]


@dataclass
class DualEval:
    value: float
    input_term: float  # includes the folded bias constants
    block_values: list
    zB_star: Optional[list]
    exact: bool


@dataclass(frozen=True)
class AdamConfig:
    lr0: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_factor: float = 0.75
    decay_every: int = 100
    iters: int = 1000

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.decay_every < 1 or self.iters < 0:
            raise ValueError("decay_every must be >= 1 and iters >= 0")


def _output_row(net):
    """``W_L^T 1`` and ``1.b_L``: the scalarized last layer."""
    last = net.layers[-1]
    return last.weight.sum(axis=0), float(last.bias.sum())


def init_rho_zero(net):
    return DualState([np.zeros(w) for w in net.widths[: net.n_relu]])


def init_rho_kw(net, bounds):
    """Backward recursion through the DeepZ slopes."""
    L = net.n_relu
    if len(bounds) < L:
        raise ValueError(f"need bounds for {L} ReLU layers, got {len(bounds)}")
    rho = [None] * L
    back, _ = _output_row(net)
    for k in range(L - 1, -1, -1):
        lam = bounds[k].lambdas
        if lam.size != back.size:
            raise ValueError(f"layer {k}: slope vector has length {lam.size}, expected {back.size}")
        rho[k] = lam * back
        back = net.layers[k].weight.T @ rho[k]
    return DualState(rho)


@dataclass
class _LayerBlocks:
    """Precomputed candidate sets (blocks of size <= 2) and large blocks of one layer."""

    width: int
    coords: np.ndarray  # (n, 2) ints; second entry repeats the first for singletons
    pair: np.ndarray  # (n,) bool
    points: np.ndarray  # (n, K, 2)
    large: list = field(default_factory=list)  # [(coords, zonotope, box)]
    order: list = field(default_factory=list)  # ("small", i) / ("large", i) in partition order


def _small_candidates(z, box, g):
    if len(g) == 1:
        i = g[0]
        lo, hi = box.lo[i], box.hi[i]
        mid = 0.0 if lo < 0 < hi else lo
        return np.array([[lo, 0.0], [mid, 0.0], [hi, 0.0]])
    sub = project(z, list(g))
    z2 = Zono2D(sub.center, sub.generators)
    rect = box.sub(list(g))
    if z2.m == 0:
        return np.clip(z2.center, rect.lo, rect.hi)[None, :]
    zb = concretize(z2.to_zonotope())
    if np.all(rect.lo <= zb.lo) and np.all(rect.hi >= zb.hi):
        cands = relu_candidates(z2)
    else:
        cands = relu_candidates_boxed(z2, rect)
        if cands.empty:
            # box and zonotope disagree by rounding only; the zonotope alone is a superset
            cands = relu_candidates(z2)
    return cands.points


def _build_layer(lb, part):
    z, box = lb.pre_zono, lb.pre_box
    d = z.dim
    if not part.is_cover(d):
        raise ValueError(f"partition does not cover {d} coordinates exactly")
    coords, pair, cand_lists, large, order = [], [], [], [], []
    for g in part.groups:
        if len(g) <= 2:
            order.append(("small", len(coords)))
            coords.append((g[0], g[-1]))
            pair.append(len(g) == 2)
            cand_lists.append(_small_candidates(z, box, g))
        else:
            order.append(("large", len(large)))
            idx = list(g)
            large.append((np.array(idx), project(z, idx).drop_zero_generators(), box.sub(idx)))
    K = max((c.shape[0] for c in cand_lists), default=1)
    points = np.empty((len(cand_lists), K, 2))
    for i, c in enumerate(cand_lists):
        points[i, : c.shape[0]] = c
        points[i, c.shape[0] :] = c[0]  # padding never beats the first minimizer
    return _LayerBlocks(
        d, np.array(coords, dtype=np.intp).reshape(-1, 2), np.array(pair, dtype=bool),
        points, large, order,
    )


class DualProblem:
    """A network, its intermediate bounds and partitions, ready for repeated dual evaluation."""

    def __init__(self, net, input_box, bounds, partitions=None, budget=None, threads=1):
        self.net = net
        self.input_box = input_box
        self.L = net.n_relu
        self.bounds = list(bounds[: self.L])
        if partitions is None:
            partitions = [singletons(lb.pre_zono.dim) for lb in self.bounds]
        partitions = list(partitions)
        if len(partitions) < self.L:
            raise ValueError(f"need {self.L} partitions, got {len(partitions)}")
        self.partitions = [p if isinstance(p, Partition) else Partition(p) for p in partitions[: self.L]]
        self.budget = budget or Budget()
        self.threads = max(1, int(threads))
        self.layers = [_build_layer(lb, p) for lb, p in zip(self.bounds, self.partitions)]
        self.out_row, self.out_const = _output_row(net)

    def with_output(self, weight_row, bias):
        """Same blocks, different scalar last layer; the candidate sets are shared."""
        from .netio import LayerSpec, NetworkSpec

        last = LayerSpec(np.asarray(weight_row, dtype=float)[None, :], np.array([float(bias)]))
        clone = object.__new__(DualProblem)
        clone.__dict__.update(self.__dict__)
        clone.net = NetworkSpec(self.net.layers[:-1] + (last,), self.net.input_dim)
        clone.out_row, clone.out_const = _output_row(clone.net)
        return clone

    def _check(self, rho):
        if rho.widths != [lb.pre_zono.dim for lb in self.bounds]:
            raise ValueError(f"rho widths {rho.widths} do not match layer widths")

    def _objective(self, rho, k):
        """(c1, c2, constant) of the layer-k ReLU program."""
        if k + 1 < self.L:
            nxt = self.net.layers[k + 1]
            return -rho.rho[k], nxt.weight.T @ rho.rho[k + 1], float(rho.rho[k + 1] @ nxt.bias)
        return -rho.rho[k], self.out_row, self.out_const

    def _input_term(self, rho):
        box = self.input_box
        if self.L == 0:
            coef, const = self.out_row, self.out_const
        else:
            first = self.net.layers[0]
            coef, const = first.weight.T @ rho.rho[0], float(rho.rho[0] @ first.bias)
        x = np.where(coef < 0, box.hi, box.lo)
        return float(coef @ x), const

    def evaluate(self, rho):
        self._check(rho)
        lin, const = self._input_term(rho)
        terms = [lin, const]
        consts = [const]
        block_values, zB, exact = [], [], True
        jobs = []
        for k, blocks in enumerate(self.layers):
            c1, c2, ck = self._objective(rho, k)
            consts.append(ck)
            z = np.zeros(blocks.width)
            n = blocks.coords.shape[0]
            small_vals = np.zeros(0)
            if n:
                mask = np.column_stack([np.ones(n), blocks.pair.astype(float)])
                bc1 = np.ascontiguousarray(c1[blocks.coords] * mask)
                bc2 = np.ascontiguousarray(c2[blocks.coords] * mask)
                small_vals, idx = kernels.candidate_argmin(blocks.points, bc1, bc2)
                small_vals = np.asarray(small_vals)
                best = blocks.points[np.arange(n), np.asarray(idx)]
                z[blocks.coords[:, 0]] = best[:, 0]
                z[blocks.coords[blocks.pair, 1]] = best[blocks.pair, 1]
            for coords, zono, box in blocks.large:
                jobs.append((k, coords, zono, box, ReluObjective(c1[coords], c2[coords])))
            block_values.append([small_vals, None])
            zB.append(z)
        large_sols = self._solve_large(jobs)
        per_layer_large = [[] for _ in self.layers]
        for (k, coords, *_), sol in zip(jobs, large_sols):
            per_layer_large[k].append(sol.value)
            if sol.exact and sol.argmin is not None:
                zB[k][coords] = sol.argmin
            else:
                exact = False
        values = []
        for k, blocks in enumerate(self.layers):
            small_vals = block_values[k][0]
            ordered = [
                float(small_vals[i]) if kind == "small" else float(per_layer_large[k][i])
                for kind, i in blocks.order
            ]
            values.append(ordered)
            terms.extend(ordered)
        terms.extend(consts[1:])
        value = math.fsum(terms)
        return DualEval(value, lin + math.fsum(consts), values, zB if exact else None, exact)

    def _solve_large(self, jobs):
        def run(job):
            _, _, zono, box, obj = job
            return solve_zono_exact(zono, obj, box=box, budget=self.budget)

        if self.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(run, jobs))
        return [run(j) for j in jobs]

    def supergradient(self, ev, rho):
        return supergradient(ev, self.net, self.input_box, rho)

    def ascend(self, rho0, cfg):
        """Adam ascent with best-iterate tracking; returns (best_rho, best_value, trace)."""
        rho = rho0.copy()
        zero = init_rho_zero(self.net)
        best_rho, best_val = zero, self.evaluate(zero).value
        m = [np.zeros_like(r) for r in rho.rho]
        v = [np.zeros_like(r) for r in rho.rho]
        trace = []
        for t in range(cfg.iters + 1):
            ev = self.evaluate(rho)
            trace.append(ev.value)
            if ev.value > best_val:
                best_rho, best_val = rho.copy(), ev.value
            if t == cfg.iters:
                break
            if not ev.exact:
                # no argmins to build a gradient from; keep the best so far
                trace.extend([ev.value] * (cfg.iters - t))
                break
            grads = self.supergradient(ev, rho)
            lr = cfg.lr0 * cfg.decay_factor ** (t // cfg.decay_every)
            step = t + 1
            for k, gk in enumerate(grads):
                m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * gk
                v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * gk * gk
                mhat = m[k] / (1 - cfg.beta1**step)
                vhat = v[k] / (1 - cfg.beta2**step)
                rho.rho[k] = rho.rho[k] + lr * mhat / (np.sqrt(vhat) + cfg.eps)
        return best_rho, best_val, trace


def eval_dual(net, input_box, bounds, partition, rho, solver_cfg=None):
    budget, threads = _solver_args(solver_cfg)
    return DualProblem(net, input_box, bounds, partition, budget, threads).evaluate(rho)


def supergradient(ev, net, input_box, rho):
    """Primal residuals ``z_k^A - z_k^B`` at the minimizers of an exact evaluation."""
    if not ev.exact or ev.zB_star is None:
        raise ValueError("supergradient needs an exact evaluation with argmins")
    if net.n_relu == 0:
        return []
    coef = net.layers[0].weight.T @ rho.rho[0]
    h = np.where(coef < 0, input_box.hi, input_box.lo)
    grads = []
    for k in range(net.n_relu):
        layer = net.layers[k]
        grads.append(layer.weight @ h + layer.bias - ev.zB_star[k])
        h = np.maximum(ev.zB_star[k], 0.0)
    return grads


def ascend(net, input_box, bounds, partition, rho0, cfg, solver_cfg=None):
    budget, threads = _solver_args(solver_cfg)
    return DualProblem(net, input_box, bounds, partition, budget, threads).ascend(rho0, cfg)


def _solver_args(solver_cfg):
    if solver_cfg is None:
        return None, 1
    if isinstance(solver_cfg, Budget):
        return solver_cfg, 1
    return solver_cfg.get("budget"), solver_cfg.get("threads", 1)
