"""Acceptance criteria 1-10; each test prints one PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from zonodual.cli import main as cli_main
from zonodual.dual import AdamConfig, DualProblem, DualState, init_rho_kw, init_rho_zero
from zonodual.geom import Hyperbox, Zonotope, concretize, linmin
from zonodual.geom2d import Zono2D, enumerate_vertices
from zonodual.netio import make_input_box, save_network, save_problem
from zonodual.partition import merge_groups, pairs_similarity
from zonodual.pipeline import (
    STRATEGIES, StagewiseConfig, ZonoDualConfig, baseline_box_dual, build_partitions, fixture_net,
    fixture_problem, oracle_exact_small, oracle_grid_min, solve_phases, verify_stagewise,
)
from zonodual.pushforward import (
    relu_pushforward_boxed, relu_pushforward_deepz, relu_pushforward_nested, zono_propagate,
)
from zonodual.reluprog import ReluObjective, hardness_reduction_net, solve_zono2d, solve_zono_exact

spatial = pytest.importorskip("scipy.spatial")

N_NETS = 50


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def suite_net(seed):
    """Input dim 2, one to three hidden layers of width 3..10."""
    rng = np.random.default_rng(seed + 500)
    hidden = tuple(int(w) for w in rng.integers(3, 11, size=rng.integers(1, 4)))
    net = fixture_net(seed, (2,) + hidden + (1,))
    return net, fixture_problem(net, seed)


def test_criterion_1_vertex_enumeration(capsys):
    rng = np.random.default_rng(1)
    worst, wrong_count = 0.0, 0
    for i in range(200):
        m = 1 + i % 12
        z = Zono2D(rng.normal(size=2), rng.normal(size=(2, m)))
        v = enumerate_vertices(z)
        wrong_count += len(v) != 2 * z.m
        ys = np.array(np.meshgrid(*[[-1.0, 1.0]] * z.m)).reshape(z.m, -1).T
        pts = z.center + ys @ z.generators.T
        ref = pts[spatial.ConvexHull(pts).vertices] if z.m > 1 else np.unique(pts, axis=0)
        d = np.linalg.norm(v[:, None] - ref[None], axis=2)
        worst = max(worst, d.min(axis=1).max(), d.min(axis=0).max())
    zs = [Zono2D(rng.normal(size=2), rng.normal(size=(2, 12))) for _ in range(500)]
    t = time.perf_counter()
    for z in zs:
        enumerate_vertices(z)
    per = (time.perf_counter() - t) / len(zs)
    ok = wrong_count == 0 and worst <= 1e-9 and per < 1e-3
    verdict(capsys, 1, ok, f"count mismatches {wrong_count}, Hausdorff {worst:.1e}, {per * 1e3:.3f} ms at m=12")


def test_criterion_2_cross_solver(capsys):
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(500):
        z = Zonotope(rng.normal(size=2) * 0.5, rng.normal(size=(2, rng.integers(1, 7))))
        obj = ReluObjective(rng.normal(size=2), rng.normal(size=2))
        rect = None
        if i % 2:
            zb = concretize(z)
            w = zb.hi - zb.lo
            rect = Hyperbox(zb.lo + 0.3 * w * rng.uniform(size=2), zb.hi - 0.3 * w * rng.uniform(size=2))
        worst = max(worst, abs(solve_zono2d(z, obj, rect).value - solve_zono_exact(z, obj, box=rect).value))
    grid_ok = True
    g = np.linspace(-1, 1, 41)
    Y = np.stack(np.meshgrid(g, g, g), -1).reshape(-1, 3)
    for _ in range(20):
        z = Zonotope(rng.normal(size=3) * 0.3, rng.normal(size=(3, 3)))
        obj = ReluObjective(rng.normal(size=3), rng.normal(size=3))
        grid_min = obj(z.center + Y @ z.generators.T).min()
        lip = (np.abs(obj.c1) + np.abs(obj.c2)) @ np.abs(z.generators).sum(axis=1)
        v = solve_zono_exact(z, obj).value
        grid_ok &= grid_min - lip * (g[1] - g[0]) - 1e-9 <= v <= grid_min + 1e-9
    ok = worst <= 1e-7 and grid_ok
    verdict(capsys, 2, ok, f"max |2-D - exact| {worst:.1e} over 500 blocks; 41^3 grid bracket {'held' if grid_ok else 'violated'} on 20 cases")


def test_criterion_3_hardness_identity(capsys):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(100):
        d, m = 1 + i % 3, 1 + (i // 3) % 3
        z = Zonotope(rng.normal(size=d) * 0.5, rng.normal(size=(d, m)))
        obj = ReluObjective(rng.normal(size=d), rng.normal(size=d))
        net = hardness_reduction_net(z, obj)
        box = Hyperbox(-np.ones(m), np.ones(m))
        worst = max(worst, abs(oracle_exact_small(net, box) - solve_zono_exact(z, obj).value))
    verdict(capsys, 3, worst <= 1e-6, f"max |exact net min - ReLU program| {worst:.1e} over 100 cases")


def _support_all(z, D):
    return D @ z.center + np.abs(D @ z.generators).sum(axis=1)


def test_criterion_4_pushforward(capsys):
    rng = np.random.default_rng(4)
    unsound, subset_fail, strict_count, boxed_not_nested = 0, 0, 0, 0
    trials = 50
    for _ in range(trials):
        z = Zonotope(rng.normal(size=3), rng.normal(size=(3, 4)))
        zb = concretize(z)
        w = zb.hi - zb.lo
        h = Hyperbox(zb.lo + 0.3 * w * rng.uniform(size=3), zb.hi - 0.3 * w * rng.uniform(size=3))
        y = rng.uniform(-1, 1, (4000, 4))
        y[:1000] = np.sign(y[:1000])
        X = z.center + y @ z.generators.T
        D = rng.normal(size=(100, 3))
        deepz, _ = relu_pushforward_deepz(z)
        XH = np.maximum(X[np.all((X >= h.lo) & (X <= h.hi), axis=1)], 0)[:1000]
        for out, pts in ((deepz, np.maximum(X[:1000], 0)),
                         (relu_pushforward_boxed(z, h)[0], XH),
                         (relu_pushforward_nested(z, h)[0], XH)):
            unsound += np.any(pts @ D.T > _support_all(out, D) + 1e-9)
        s_dz = _support_all(deepz, D)
        s_nest = _support_all(relu_pushforward_nested(z, h)[0], D)
        subset_fail += np.any(s_nest > s_dz + 1e-9)
        strict_count += np.any(s_nest < s_dz - 1e-9)
        boxed_not_nested += np.any(_support_all(relu_pushforward_boxed(z, h)[0], D) > s_dz + 1e-9)
    ok = unsound == 0 and subset_fail == 0 and strict_count > 0
    verdict(capsys, 4, ok,
            f"membership failures {unsound}; box-aware operator inside DeepZ on {trials - subset_fail}/{trials}, "
            f"strict on {strict_count}; tightened-interval coefficients leave DeepZ on {boxed_not_nested}/{trials}")


def test_criterion_5_weak_duality_sweep(capsys):
    violations, checks, worst = 0, 0, -np.inf
    for seed in range(N_NETS):
        net, problem = suite_net(seed)
        folded_grid = None
        rng = np.random.default_rng(seed)
        for strategy in STRATEGIES:
            cfg = ZonoDualConfig(partition_strategy=strategy, adam=AdamConfig(iters=200))
            out = solve_phases(net, problem, cfg)
            if folded_grid is None:
                folded_grid = oracle_grid_min(out.folded, out.input_box, 401)
            values = [out.report.bound_init, out.report.bound_iter, out.report.bound_eval]
            prob = DualProblem(out.folded, out.input_box, out.bounds,
                               build_partitions(out.folded, out.bounds, strategy, cfg.seed))
            for _ in range(20):
                rho = DualState([rng.normal(size=w) for w in out.folded.widths[:-1]])
                values.append(prob.evaluate(rho).value)
            for v in values:
                checks += 1
                worst = max(worst, v - folded_grid)
                violations += v > folded_grid + 1e-6
        stage, _ = verify_stagewise(net, problem, StagewiseConfig(
            per_neuron=ZonoDualConfig(adam=AdamConfig(iters=20), merge_layers=()),
            final=ZonoDualConfig(adam=AdamConfig(iters=200))))
        checks += 1
        violations += stage.bound_eval > folded_grid + 1e-6
    verdict(capsys, 5, violations == 0,
            f"{violations} violations in {checks} dual values; max(bound - grid min) {worst:.2e}")


def test_criterion_6_partition_monotonicity(capsys):
    worst_drop, inexact = 0.0, 0
    for seed in range(N_NETS):
        net = fixture_net(seed)
        problem = fixture_problem(net, seed)
        out = solve_phases(net, problem, ZonoDualConfig(adam=AdamConfig(iters=0)))
        rng = np.random.default_rng(seed)
        rho = DualState([rng.normal(size=w) for w in out.folded.widths[:-1]])
        p2 = [pairs_similarity(lb.pre_zono.generators) for lb in out.bounds[:-1]]
        vals = []
        for size in (2, 4, 8):
            parts = [merge_groups(p, size) for p in p2]
            ev = DualProblem(out.folded, out.input_box, out.bounds, parts).evaluate(rho)
            inexact += not ev.exact
            vals.append(ev.value)
        worst_drop = max(worst_drop, vals[0] - vals[1], vals[1] - vals[2])
    ok = worst_drop <= 1e-9 and inexact == 0
    verdict(capsys, 6, ok, f"largest decrease when merging 2->4->8: {max(worst_drop, 0):.1e}; inexact solves {inexact}")


def test_criterion_7_dominance(capsys):
    box_fail, deepz_fail = 0, 0
    for seed in range(N_NETS):
        net, problem = suite_net(seed)
        out = solve_phases(net, problem, ZonoDualConfig(adam=AdamConfig(iters=200)))
        bound = out.report.bound_eval
        box_dual = baseline_box_dual(net, problem, rho=out.rho)
        deepz = linmin(zono_propagate(out.folded, out.input_box)[-1].pre_zono, [1.0])[0]
        box_fail += box_dual > bound + 1e-9
        deepz_fail += deepz > bound + 1e-9
    ok = box_fail == 0 and deepz_fail == 0
    verdict(capsys, 7, ok, f"below box dual on {box_fail}/{N_NETS} nets, below DeepZ on {deepz_fail}/{N_NETS}")


def test_criterion_8_ablation_shape(capsys):
    rows, strict, slowest = [], 0, 0.0
    for seed in range(N_NETS):
        net = fixture_net(seed)
        problem = fixture_problem(net, seed)
        t = time.perf_counter()
        r = solve_phases(net, problem).report
        slowest = max(slowest, time.perf_counter() - t)
        rows.append((r.bound_init, r.bound_iter, r.bound_eval))
        strict += r.bound_eval > r.bound_iter + 1e-9
    means = np.mean(rows, axis=0)
    ok = means[0] < means[1] < means[2] and strict >= 0.8 * N_NETS and slowest < 60
    verdict(capsys, 8, ok,
            f"mean bounds {means[0]:.4f} -> {means[1]:.4f} -> {means[2]:.4f}; "
            f"phase 3 strictly better on {strict}/{N_NETS}; slowest net {slowest:.2f} s")


def test_criterion_9_adam_efficacy(capsys):
    improved = 0
    for seed in range(N_NETS):
        net = fixture_net(seed)
        problem = fixture_problem(net, seed)
        box = make_input_box(problem)
        bounds = zono_propagate(net, box)
        parts = [pairs_similarity(lb.pre_zono.generators) for lb in bounds[:-1]]
        prob = DualProblem(net, box, bounds, parts)
        rho_kw = init_rho_kw(net, bounds)
        start = max(prob.evaluate(rho_kw).value, prob.evaluate(init_rho_zero(net)).value)
        _, best, _ = prob.ascend(rho_kw, AdamConfig(lr0=0.01, decay_factor=0.75, decay_every=100, iters=200))
        improved += best > start + 1e-9
    verdict(capsys, 9, improved >= 0.9 * N_NETS, f"200 Adam steps improved on {improved}/{N_NETS} seeds")


def test_criterion_10_determinism(capsys, tmp_path):
    net = fixture_net(3, (2, 10, 10, 1))
    problem = fixture_problem(net, 3)
    save_network(net, tmp_path / "net.json")
    save_problem(problem, tmp_path / "problem.json")
    reports = {}
    runs = [("a", "1", []), ("b", "1", []), ("c", "4", []), ("s1", "1", ["--stagewise"]), ("s2", "1", ["--stagewise"])]
    for tag, threads, extra in runs:
        out = tmp_path / f"{tag}.json"
        argv = ["verify", "--net", str(tmp_path / "net.json"), "--problem", str(tmp_path / "problem.json"),
                "--out", str(out), "--iters", "200", "--merge-last", "10", "--seed", "5",
                "--threads", threads, "--stage-iters", "20"] + extra
        assert cli_main(argv) == 0
        capsys.readouterr()
        data = json.loads(out.read_text())
        data.pop("phase_times_s")
        reports[tag] = json.dumps(data, sort_keys=True, indent=2)
    ok = reports["a"] == reports["b"] == reports["c"] and reports["s1"] == reports["s2"]
    verdict(capsys, 10, ok, "reports byte-identical apart from wall-clock timings, across repeats and thread counts")
