"""Command line front end.

Exit codes: 0 ok, 2 usage error, 3 data or consistency error.
"""

import argparse
import json
import logging
import sys

from . import io as tio
from .aggregation import AggregatedTargetProblem, aggregate, geometric_block_measure, uniform_measure
from .chain import Filtration, TargetProblem, validate
from .generators import coupon_collector, lifted_chain, random_block_matrix, random_chain
from .metrics import distance_d, horizon_for, tail_bound
from .refinement import DEFAULT_DELTA, resolve_threads, run_target_algorithm

logger = logging.getLogger("targetlump")

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _floats(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}")


def _ints(text: str):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of integers: {text!r}")


def _load_chain(path):
    try:
        problem, rational, digest = tio.read_chain(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}")
    except tio.FormatError as exc:
        raise DataError(f"{path}: {exc}")
    bad = validate(problem)
    if bad:
        raise DataError(f"{path}: invalid chain: " + "; ".join(bad[:5]))
    return problem, rational, digest


def _load_json(path, kind):
    try:
        return tio.read_json(path, kind)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}")
    except tio.FormatError as exc:
        raise DataError(str(exc))


def _emit_chain(problem: TargetProblem, out, comments=()):
    if out:
        return tio.write_chain(problem, out, comments)
    sys.stdout.write(tio.format_chain(problem, comments))
    return None


def cmd_generate(args) -> int:
    params = {"beta": args.beta}
    extra = {}
    try:
        if args.kind == "coupon":
            if args.n is None:
                raise UsageError("coupon needs --n")
            p = _floats(args.p) if args.p else None
            problem = coupon_collector(args.n, p, beta=args.beta)
            params.update(n=args.n, p=p)
        elif args.kind == "random":
            if args.n_states is None:
                raise UsageError("random needs --n-states")
            problem = random_chain(args.n_states, args.density, args.target_size, args.seed,
                                   args.resolution, beta=args.beta)
            params.update(n_states=args.n_states, density=args.density, target_size=args.target_size,
                          seed=args.seed, resolution=args.resolution)
        else:
            if not args.sizes:
                raise UsageError("lifted needs --sizes")
            sizes = _ints(args.sizes)
            if args.block_chain:
                blocks, _, _ = _load_chain(args.block_chain)
                bm = blocks.matrix.toarray()
                tb = int(blocks.target[0])
            else:
                bm = random_block_matrix(len(sizes), args.seed)
                tb = 0
            problem, gen = lifted_chain(bm, sizes, seed=args.seed, target_block=tb, beta=args.beta)
            params.update(sizes=sizes, seed=args.seed, target_block=tb)
            extra = {"block_matrix": bm.tolist(), "generating_partition": tio.partition_to_json(gen)}
    except ValueError as exc:
        raise UsageError(str(exc))
    digest = _emit_chain(problem, args.out)
    if args.out:
        meta = {"format": "tpmeta", "version": tio.JSON_VERSION, "kind": args.kind, "params": params,
                "chain_sha256": digest, "n_states": problem.n_states, **extra}
        tio.write_json(meta, args.out + ".meta.json")
        print(f"wrote {args.out} ({problem.n_states} states, {problem.matrix.nnz} transitions)",
              file=sys.stderr)
    return 0


def cmd_refine(args) -> int:
    schedule = _floats(args.schedule) if args.schedule else []
    if args.mode == "exact":
        schedule = schedule if schedule and schedule[-1] == 0 else schedule + [0.0]
    if not schedule:
        raise UsageError("empty schedule")
    problem, rational, digest = _load_chain(args.chain)
    delta = args.delta if args.delta is not None else (0.0 if rational else DEFAULT_DELTA)
    try:
        filt = run_target_algorithm(problem, schedule, delta=delta, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc))
    settings = {"schedule": schedule, "mode": args.mode, "delta": delta}
    obj = tio.filtration_to_json(filt, digest, settings)
    if args.out:
        tio.write_json(obj, args.out)
    summary = [{"step": k, "epsilon": tio._eps_out(e), "n_blocks": p.n_blocks,
                "block_sizes": sorted(p.sizes().tolist(), reverse=True)}
               for k, (e, p) in enumerate(filt.steps)]
    if args.json:
        sys.stdout.write(json.dumps({"converged": filt.converged, "steps": summary}, sort_keys=True) + "\n")
    else:
        print("step\tepsilon\tn_blocks\tlargest_block")
        for s in summary:
            print(f"{s['step']}\t{s['epsilon']}\t{s['n_blocks']}\t{s['block_sizes'][0]}")
        if filt.converged:
            print("# fixpoint reached")
    return 0


def cmd_aggregate(args) -> int:
    problem, _, chain_digest = _load_chain(args.chain)
    fobj, filt_digest = _load_json(args.filtration, "tpfiltration")
    if fobj.get("chain_sha256") != chain_digest:
        raise DataError("filtration was not computed from this chain (hash mismatch)")
    try:
        filt = tio.filtration_from_json(fobj, problem.target_mask)
    except (KeyError, ValueError) as exc:
        raise DataError(f"{args.filtration}: {exc}")
    n_steps = len(filt)
    step = args.step if args.step >= 0 else n_steps + args.step
    if not 0 <= step < n_steps:
        raise UsageError(f"step {args.step} out of range (filtration has {n_steps} steps)")
    if args.measure == "uniform":
        mu = uniform_measure(problem)
    else:
        sub = Filtration(steps=filt.steps[:step + 1])
        try:
            mu = geometric_block_measure(sub)
        except ValueError as exc:
            raise DataError(str(exc))
    part = filt.steps[step][1]
    agg = aggregate(problem, part, mu)
    lineage = f"lineage chain={chain_digest} filtration={filt_digest} step={step} measure={args.measure}"
    agg_digest = tio.write_chain(agg.as_problem(), args.out, [lineage])
    blockmap = {"format": "tpblockmap", "version": tio.JSON_VERSION, "chain_sha256": chain_digest,
                "filtration_sha256": filt_digest, "aggregated_sha256": agg_digest, "step": step,
                "measure": args.measure, "target_blocks": list(agg.target_blocks),
                **tio.partition_to_json(part)}
    tio.write_json(blockmap, args.blockmap or args.out + ".blockmap.json")
    print(f"wrote {args.out} ({agg.n_blocks} blocks from {problem.n_states} states)", file=sys.stderr)
    return 0


def cmd_distance(args) -> int:
    if not args.tail_tol > 0:
        raise UsageError("--tail-tol must be > 0")
    problem, _, chain_digest = _load_chain(args.chain)
    agg_problem, _, agg_digest = _load_chain(args.aggregated)
    bobj, bm_digest = _load_json(args.blockmap, "tpblockmap")
    if bobj.get("chain_sha256") != chain_digest or bobj.get("aggregated_sha256") != agg_digest:
        raise DataError("block map lineage does not match the given chain files")
    if agg_problem.beta != problem.beta:
        raise DataError(f"beta mismatch: {problem.beta} vs {agg_problem.beta}")
    try:
        part = tio.partition_from_json(bobj, problem.target_mask)
    except (KeyError, ValueError) as exc:
        raise DataError(f"{args.blockmap}: {exc}")
    if part.n_states != problem.n_states or part.n_blocks != agg_problem.n_states:
        raise DataError("block map does not fit the chains")
    agg = AggregatedTargetProblem(agg_problem.matrix, agg_problem.target, agg_problem.beta)
    res = distance_d(problem, agg, part, args.tail_tol)
    horizon = horizon_for(problem.beta, args.tail_tol)
    report = {"format": "tpreport", "version": tio.JSON_VERSION, "chain_sha256": chain_digest,
              "aggregated_sha256": agg_digest, "blockmap_sha256": bm_digest, "beta": problem.beta,
              "tail_tol": args.tail_tol, "horizon": horizon, "tail_bound": tail_bound(problem.beta, horizon),
              "value": res.value, "upper": res.bound}
    if args.out:
        tio.write_json(report, args.out)
    if args.json:
        sys.stdout.write(tio.dump_json(report).decode("ascii"))
    else:
        print(f"d = {res.value:.17g}")
        print(f"certified interval [{res.value:.17g}, {res.bound:.17g}]")
        print(f"horizon {horizon} (tail bound {report['tail_bound']:.3g} <= {args.tail_tol:g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads, 0 = auto (default: $TL_THREADS or 1); never changes results")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="targetlump", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a benchmark chain")
    g.add_argument("kind", choices=["coupon", "random", "lifted"])
    g.add_argument("--out", "-o")
    g.add_argument("--beta", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, help="coupon: number of objects")
    g.add_argument("--p", help="coupon: comma-separated draw probabilities (default uniform)")
    g.add_argument("--n-states", type=int, help="random: state count")
    g.add_argument("--density", type=float, default=0.2)
    g.add_argument("--target-size", type=int, default=1)
    g.add_argument("--resolution", type=int, help="random: entries are multiples of 1/resolution")
    g.add_argument("--sizes", help="lifted: comma-separated block sizes, target block first")
    g.add_argument("--block-chain", help="lifted: chain file holding the block matrix")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("refine", parents=[common], help="run the refinement schedule")
    r.add_argument("chain")
    r.add_argument("--schedule", default="", help="comma-separated non-increasing epsilons, optional trailing 0")
    r.add_argument("--mode", choices=["cut", "exact"], default="cut",
                   help="exact appends a 0 so refinement runs to the fixpoint")
    r.add_argument("--delta", type=float, default=None,
                   help="exact-mode grid width (default 1e-12, or 0 for rational chain files)")
    r.add_argument("--out", "-o")
    r.set_defaults(func=cmd_refine)

    a = sub.add_parser("aggregate", parents=[common], help="build the block chain for one filtration step")
    a.add_argument("chain")
    a.add_argument("filtration")
    a.add_argument("--step", type=int, default=-1)
    a.add_argument("--measure", choices=["uniform", "geometric"], default="uniform")
    a.add_argument("--out", "-o", required=True)
    a.add_argument("--blockmap", help="block map path (default: OUT.blockmap.json)")
    a.set_defaults(func=cmd_aggregate)

    d = sub.add_parser("distance", parents=[common], help="certified target distance of an aggregation")
    d.add_argument("chain")
    d.add_argument("aggregated")
    d.add_argument("blockmap")
    d.add_argument("--tail-tol", type=float, default=1e-6)
    d.add_argument("--out", "-o")
    d.set_defaults(func=cmd_distance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            args.threads = resolve_threads(args.threads)
        except ValueError as exc:
            raise UsageError(str(exc))
        return args.func(args)
    except UsageError as exc:
        print(f"targetlump {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"targetlump {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
