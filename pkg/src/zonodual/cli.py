"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 failed self-test.
"""

import argparse
import os
import sys
from dataclasses import replace


from .dual import AdamConfig
from .netio import FormatError, fold_objective, load_network, load_problem, make_input_box, write_report
from .pipeline import (
    StagewiseConfig, ZonoDualConfig, oracle_exact_small, oracle_grid_min, verify_single, verify_stagewise,
)
from .reluprog import Budget

PARTITIONS = {
    "singleton": "singleton",
    "random": "pairs_random",
    "similarity": "pairs_similarity",
    "spatial": "pairs_spatial",
    "depthwise": "pairs_depthwise",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _merge_pairs(text):
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            layer, dim = item.split(":")
            out.append((int(layer), int(dim)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected LAYER:DIM pairs, got {item!r}") from None
    return tuple(out)


def _add_common(p, need_problem=True):
    p.add_argument("--net", required=True, help="network JSON")
    p.add_argument("--problem", required=need_problem, help="problem JSON")
    p.add_argument("--out", help="report JSON path")


def _add_solver(p):
    p.add_argument("--partition", choices=sorted(PARTITIONS), default="similarity")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-decay", type=float, default=0.75)
    p.add_argument("--decay-every", type=int, default=100)
    p.add_argument("--merge-last", type=int, default=None,
                   help="block size for the last ReLU layer in the final phase (default 20; off for singleton)")
    p.add_argument("--merge-layers", type=_merge_pairs, default=(), help="LAYER:DIM,...")
    p.add_argument("--mip-time-s", type=float, default=10.0)
    p.add_argument("--mip-nodes", type=int, default=2**20)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-ibp", action="store_true", help="skip interval bounds as auxiliary boxes")
    p.add_argument("--stage-iters", type=int, default=50, help="Adam iterations per neuron when stagewise")


def build_parser():
    parser = _Parser(prog="zonodual", description="Certified lower bounds for ReLU networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="bound objective . net(x) from below")
    _add_common(v)
    _add_solver(v)
    v.add_argument("--stagewise", action="store_true", help="tighten every layer neuron by neuron first")
    s = sub.add_parser("stagewise", help="verify with stagewise box tightening")
    _add_common(s)
    _add_solver(s)
    o = sub.add_parser("oracle", help="grid or exact reference minimum for small networks")
    _add_common(o)
    o.add_argument("--method", choices=["grid", "exact"], default="grid")
    o.add_argument("--points", type=int, default=401)
    o.add_argument("--max-unstable", type=int, default=16)
    sub.add_parser("selftest", help="quick consistency checks on a random network")
    return parser


def config_from_args(args):
    strategy = PARTITIONS[args.partition]
    merge_last = args.merge_last
    if merge_last is None:
        merge_last = 0 if strategy == "singleton" else 20
    merges = tuple(args.merge_layers)
    if merge_last and not any(k == -1 for k, _ in merges):
        merges = merges + ((-1, merge_last),)
    adam = AdamConfig(lr0=args.lr, decay_factor=args.lr_decay, decay_every=args.decay_every, iters=args.iters)
    return ZonoDualConfig(
        partition_strategy=strategy,
        adam=adam,
        merge_layers=merges,
        mip_budget=Budget(max_patterns=args.mip_nodes, time_s=args.mip_time_s),
        use_ibp_boxes=not args.no_ibp,
        seed=args.seed,
        threads=max(1, args.threads),
    )


def _emit(report, out):
    if out:
        write_report(report, out)
    print(repr(float(report.bound_eval)))


def _cmd_verify(args, stagewise):
    net = load_network(args.net)
    problem = load_problem(args.problem, net)
    cfg = config_from_args(args)
    if stagewise:
        per = replace(cfg, adam=replace(cfg.adam, iters=args.stage_iters), merge_layers=())
        report, _ = verify_stagewise(net, problem, StagewiseConfig(per_neuron=per, final=cfg))
    else:
        report = verify_single(net, problem, cfg)
    _emit(report, args.out)
    return 0


def _cmd_oracle(args):
    net = load_network(args.net)
    problem = load_problem(args.problem, net)
    folded = fold_objective(net, problem.objective)
    box = make_input_box(problem)
    if args.method == "grid":
        value = oracle_grid_min(folded, box, args.points)
    else:
        value = oracle_exact_small(folded, box, args.max_unstable)
    print(repr(float(value)))
    if args.out:
        write_report({"method": args.method, "value": float(value)}, args.out)
    return 0


def selftest():
    """Soundness and ordering checks on a fixed random network; returns a list of failures."""
    from .pipeline import fixture_net, fixture_problem

    failures = []
    net = fixture_net(7)
    problem = fixture_problem(net, 7)
    folded = fold_objective(net, problem.objective)
    box = make_input_box(problem)
    grid = oracle_grid_min(folded, box, 101)
    exact = oracle_exact_small(folded, box, max_unstable=16)
    report = verify_single(net, problem, ZonoDualConfig(adam=AdamConfig(iters=100)))
    if not report.valid:
        failures.append("report marked invalid")
    if report.bound_eval > exact + 1e-6:
        failures.append(f"bound {report.bound_eval} exceeds exact minimum {exact}")
    if exact > grid + 1e-9:
        failures.append(f"exact minimum {exact} exceeds grid minimum {grid}")
    return failures


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            return _cmd_verify(args, args.stagewise)
        if args.command == "stagewise":
            return _cmd_verify(args, True)
        if args.command == "oracle":
            return _cmd_oracle(args)
        failures = selftest()
        for f in failures:
            print(f"selftest: {f}", file=sys.stderr)
        print("selftest ok" if not failures else "selftest failed")
        return 3 if failures else 0
    except (FormatError, ValueError, OSError) as exc:
        print(f"zonodual: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
