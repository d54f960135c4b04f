"""End-to-end bounding: initialize, ascend, evaluate; stagewise tightening; oracles."""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .dual import AdamConfig, DualProblem, init_rho_kw, init_rho_zero
from .geom import Hyperbox
from .lpcore import LinearProgram, LPIterationLimit, solve_lp
from .netio import (
    LayerSpec, NetworkSpec, ProblemSpec, ReportSpec, fold_objective, make_input_box,
)
from .partition import (
    merge_groups, pairs_depthwise, pairs_random, pairs_similarity, pairs_spatial, singletons,
)
from .pushforward import ibp_propagate, zono_propagate
from .reluprog import Budget

STRATEGIES = ("singleton", "pairs_random", "pairs_similarity", "pairs_spatial", "pairs_depthwise")
TOL = 1e-9


@dataclass(frozen=True)
class ZonoDualConfig:
    partition_strategy: str = "pairs_similarity"
    adam: AdamConfig = field(default_factory=AdamConfig)
    merge_layers: tuple = ((-1, 20),)  # (ReLU layer index, target block size); negative counts from the end
    mip_budget: Budget = field(default_factory=Budget)
    use_ibp_boxes: bool = True
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.partition_strategy not in STRATEGIES:
            raise ValueError(f"unknown partition strategy {self.partition_strategy!r}")
        for k, dim in self.merge_layers:
            if dim < 2:
                raise ValueError(f"merge target for layer {k} must be >= 2, got {dim}")

    def echo(self):
        """JSON-ready summary; thread count is left out so it cannot change the report."""
        return {
            "partition_strategy": self.partition_strategy,
            "adam": asdict(self.adam),
            "merge_layers": [list(m) for m in self.merge_layers],
            "mip_budget": asdict(self.mip_budget),
            "use_ibp_boxes": self.use_ibp_boxes,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class StagewiseConfig:
    per_neuron: ZonoDualConfig = field(
        default_factory=lambda: ZonoDualConfig(adam=AdamConfig(iters=50), merge_layers=())
    )
    final: ZonoDualConfig = field(default_factory=ZonoDualConfig)
    layers: Optional[tuple] = None  # ReLU layers to tighten; None means all
    reuse_boxes: bool = True

    def __post_init__(self):
        if self.per_neuron.adam.iters < 0:
            raise ValueError("per-neuron iteration count must be >= 0")


def build_partitions(net, bounds, strategy, seed=0):
    parts = []
    for k in range(net.n_relu):
        d = bounds[k].pre_zono.dim
        shape = net.layers[k].feature_shape
        if strategy == "singleton":
            parts.append(singletons(d))
        elif strategy == "pairs_random":
            parts.append(pairs_random(d, seed + k))
        elif strategy == "pairs_similarity":
            parts.append(pairs_similarity(bounds[k].pre_zono.generators))
        elif strategy == "pairs_spatial":
            parts.append(pairs_spatial(shape or (1, 1, d), d))
        elif strategy == "pairs_depthwise":
            parts.append(pairs_depthwise(shape or (d, 1, 1), d))
        else:
            raise ValueError(f"unknown partition strategy {strategy!r}")
    return parts


def merge_partitions(parts, merge_layers):
    parts = list(parts)
    L = len(parts)
    for k, dim in merge_layers:
        kk = k + L if k < 0 else k
        if not 0 <= kk < L:
            raise ValueError(f"merge layer {k} out of range for {L} ReLU layers")
        parts[kk] = merge_groups(parts[kk], max(dim, parts[kk].max_size))
    return parts


@dataclass
class _PhaseResult:
    bounds3: list
    times: list
    rho: object
    errors: list


def _three_phases(prob, merged_prob, cfg):
    """Run the phases on a prepared DualProblem; bounds are best-so-far."""
    times, errors = [], []
    t = time.perf_counter()
    rho_kw = init_rho_kw(prob.net, prob.bounds)
    zero = init_rho_zero(prob.net)
    g_kw, g0 = prob.evaluate(rho_kw).value, prob.evaluate(zero).value
    rho, best = (rho_kw, g_kw) if g_kw >= g0 else (zero, g0)
    b_init = best
    times.append(time.perf_counter() - t)

    t = time.perf_counter()
    try:
        r, v, _ = prob.ascend(rho, cfg.adam)
        if v > best:
            rho, best = r, v
    except (ValueError, ArithmeticError, LPIterationLimit) as exc:
        errors.append(f"iterate: {exc}")
    b_iter = best
    times.append(time.perf_counter() - t)

    t = time.perf_counter()
    if merged_prob is not None:
        try:
            v = merged_prob.evaluate(rho).value
            best = max(best, v)
        except (ValueError, ArithmeticError, LPIterationLimit) as exc:
            errors.append(f"evaluate: {exc}")
    times.append(time.perf_counter() - t)
    return _PhaseResult([b_init, b_iter, best], times, rho, errors)


def _affine_min(net, box):
    """Exact minimum of an affine scalar network over a box."""
    row = net.layers[0].weight.sum(axis=0)
    x = np.where(row < 0, box.hi, box.lo)
    return float(math.fsum(row * x) + net.layers[0].bias.sum())


def _prepare(folded, box, cfg, aux_boxes=None):
    aux = None
    if cfg.use_ibp_boxes:
        aux = ibp_propagate(folded, box)
    if aux_boxes is not None:
        aux = list(aux_boxes) if aux is None else [
            (a.intersect(b, tol=TOL) or a) if b is not None else a for a, b in zip(aux, aux_boxes)
        ]
    return zono_propagate(folded, box, aux)


def _problems(folded, box, bounds, cfg):
    parts = build_partitions(folded, bounds, cfg.partition_strategy, cfg.seed)
    prob = DualProblem(folded, box, bounds, parts, cfg.mip_budget, cfg.threads)
    merged = None
    if cfg.merge_layers and folded.n_relu > 0:
        mparts = merge_partitions(parts, cfg.merge_layers)
        if mparts != parts:
            merged = DualProblem(folded, box, bounds, mparts, cfg.mip_budget, cfg.threads)
    return prob, merged


def _report(b3, times, echo, upper, errors=()):
    b3 = [float(b) for b in b3]
    valid = (
        all(math.isfinite(b) for b in b3)
        and b3[0] <= b3[1] <= b3[2]
        and b3[2] <= upper + 1e-7 * max(1.0, abs(upper))
    )
    if errors:
        echo = dict(echo, phase_errors=list(errors))
    return ReportSpec(b3[0], b3[1], b3[2], [float(t) for t in times], echo, valid)


@dataclass
class PhaseOutcome:
    report: ReportSpec
    rho: object  # best DualState, None for affine networks
    folded: NetworkSpec
    input_box: Hyperbox
    bounds: list


def solve_phases(net, problem, cfg=None, aux_boxes=None):
    """Like ``verify_single`` but also returns the best dual point and the intermediate bounds."""
    cfg = cfg or ZonoDualConfig()
    folded = fold_objective(net, problem.objective)
    box = make_input_box(problem)
    upper = float(folded(box.center)[0])
    t = time.perf_counter()
    if folded.n_relu == 0:
        v = _affine_min(folded, box)
        report = _report([v, v, v], [time.perf_counter() - t, 0.0, 0.0], cfg.echo(), upper)
        return PhaseOutcome(report, None, folded, box, [])
    bounds = _prepare(folded, box, cfg, aux_boxes)
    prob, merged = _problems(folded, box, bounds, cfg)
    setup = time.perf_counter() - t
    res = _three_phases(prob, merged, cfg)
    res.times[0] += setup
    report = _report(res.bounds3, res.times, cfg.echo(), upper, res.errors)
    return PhaseOutcome(report, res.rho, folded, box, bounds)


def verify_single(net, problem, cfg=None, aux_boxes=None):
    """Lower bound on ``objective . net(x)`` over the problem's input box."""
    return solve_phases(net, problem, cfg, aux_boxes).report


def _neuron_bounds(base, merged, cfg, W, b, threads):
    """[lo, hi] for every row of ``W z + b`` using the shared blocks of ``base``."""
    jobs = [(j, s) for j in range(W.shape[0]) for s in (1.0, -1.0)]

    def run(job):
        j, s = job
        p = base.with_output(s * W[j], s * b[j])
        m = merged.with_output(s * W[j], s * b[j]) if merged is not None else None
        return _three_phases(p, m, cfg).bounds3[2]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(run, jobs))
    else:
        vals = [run(j) for j in jobs]
    lo = np.array(vals[0::2])
    hi = -np.array(vals[1::2])
    return lo, hi


def verify_stagewise(net, problem, scfg=None):
    """Tighten each ReLU layer's box neuron by neuron, then bound the objective.

    Returns the final report and the per-layer pre-activation boxes.
    """
    scfg = scfg or StagewiseConfig()
    pcfg = scfg.per_neuron
    folded = fold_objective(net, problem.objective)
    box = make_input_box(problem)
    L = folded.n_relu
    t = time.perf_counter()
    bounds = _prepare(folded, box, pcfg)
    layers = range(L) if scfg.layers is None else sorted(k + L if k < 0 else k for k in scfg.layers)
    if pcfg.adam.iters > 0:
        for k in layers:
            if not 0 <= k < L:
                raise ValueError(f"stagewise layer {k} out of range for {L} ReLU layers")
            trunc = folded.truncate(k)
            W, b = trunc.layers[-1].weight, trunc.layers[-1].bias
            if k == 0:
                # the first pre-activation box is already exact
                continue
            base = replace(pcfg, threads=1)
            prob, merged = _problems(trunc, box, bounds[: k + 1], base)
            lo, hi = _neuron_bounds(prob, merged, base, W, b, pcfg.threads)
            cur = bounds[k].pre_box
            new = Hyperbox(np.minimum(np.maximum(lo, cur.lo), cur.hi), np.maximum(np.minimum(hi, cur.hi), cur.lo))
            if np.any(new.lo > new.hi):
                new = cur
            aux = [lb.pre_box for lb in bounds]
            aux[k] = new
            bounds = zono_propagate(folded, box, aux)
    stage_time = time.perf_counter() - t
    boxes = [lb.pre_box for lb in bounds[:L]]
    final_cfg = scfg.final
    aux = [lb.pre_box for lb in bounds] if scfg.reuse_boxes else None
    report = verify_single(net, problem, final_cfg, aux_boxes=aux)
    report.phase_times_s = [report.phase_times_s[0] + stage_time] + list(report.phase_times_s[1:])
    report.config_echo = dict(report.config_echo, stagewise={
        "per_neuron": pcfg.echo(),
        "layers": None if scfg.layers is None else list(scfg.layers),
        "reuse_boxes": scfg.reuse_boxes,
    })
    return report, boxes


def baseline_box_dual(net, problem, adam=None, rho=None):
    """The same dual with singleton blocks, i.e. hyperbox feasible sets everywhere.

    With ``rho`` given, the box dual is evaluated there; otherwise it is
    ascended from the better of the KW and zero initializations.
    """
    adam = adam or AdamConfig()
    cfg = ZonoDualConfig(partition_strategy="singleton", adam=adam, merge_layers=())
    folded = fold_objective(net, problem.objective)
    box = make_input_box(problem)
    if folded.n_relu == 0:
        return _affine_min(folded, box)
    bounds = _prepare(folded, box, cfg)
    prob, _ = _problems(folded, box, bounds, cfg)
    if rho is not None:
        return prob.evaluate(rho).value
    return _three_phases(prob, None, cfg).bounds3[2]


def _scalar(net):
    if net.output_dim != 1:
        raise ValueError(f"oracles need a scalar network, got output width {net.output_dim}")


def oracle_grid_min(net, box, points_per_dim, chunk=1 << 18):
    """Minimum over a regular grid (corners included): an upper bound on the true minimum."""
    _scalar(net)
    d = box.dim
    if d > 4:
        raise ValueError(f"grid oracle supports input dimension <= 4, got {d}")
    n = int(points_per_dim)
    axes = [np.linspace(box.lo[i], box.hi[i], n) for i in range(d)]
    total = n**d
    best = np.inf
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), (n,) * d)
        X = np.column_stack([axes[i][idx[i]] for i in range(d)])
        best = min(best, float(net(X).min()))
    return best


def oracle_exact_small(net, box, max_unstable=16):
    """Exact minimum by enumerating activation patterns of the IBP-unstable neurons."""
    _scalar(net)
    ibp = ibp_propagate(net, box)
    L = net.n_relu
    unstable = [np.flatnonzero((ibp[k].lo < 0) & (ibp[k].hi > 0)) for k in range(L)]
    n_unstable = sum(u.size for u in unstable)
    if n_unstable > max_unstable:
        raise ValueError(f"{n_unstable} unstable neurons exceed the limit of {max_unstable}")
    active = [ibp[k].lo >= 0 for k in range(L)]
    n = net.input_dim
    best = np.inf
    for signs in itertools.product((True, False), repeat=n_unstable):
        A, c = np.eye(n), np.zeros(n)
        rows, rhs = [], []
        pos = 0
        for k in range(L):
            layer = net.layers[k]
            A, c = layer.weight @ A, layer.weight @ c + layer.bias
            on = active[k].copy()
            for i in unstable[k]:
                s = 1.0 if signs[pos] else -1.0
                on[i] = signs[pos]
                rows.append(s * A[i])
                rhs.append(-s * c[i])
                pos += 1
            A, c = A * on[:, None], c * on
        last = net.layers[-1]
        a, a0 = (last.weight @ A)[0], float((last.weight @ c + last.bias)[0])
        lp = LinearProgram.from_constraints(a, box.lo, box.hi, list(zip(rows, rhs)))
        res = solve_lp(lp)
        if res.optimal:
            best = min(best, res.value + a0)
    return best


def fixture_net(seed, widths=(2, 8, 8, 1)):
    """Seeded Kaiming-uniform network with small uniform biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = math.sqrt(6.0 / fan_in)
        layers.append(LayerSpec(rng.uniform(-bound, bound, (fan_out, fan_in)), rng.uniform(-0.5, 0.5, fan_out)))
    return NetworkSpec(tuple(layers), widths[0])


def fixture_problem(net, seed, eps_range=(0.05, 0.5)):
    rng = np.random.default_rng(seed + 10_000)
    center = rng.uniform(-1.0, 1.0, net.input_dim)
    eps = float(rng.uniform(*eps_range))
    objective = np.ones(net.output_dim)
    return ProblemSpec(center, eps, objective)
