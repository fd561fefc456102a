"""Command-line harness: ``gen``, ``evidence``, ``cutset``, ``infer``, ``eval``.

Exit codes: 0 ok, 2 usage/parameters, 3 invalid model or input file, 4 zero
evidence, 5 width guard, 6 trapped chain. Failures print one machine-readable
``error: <kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bench, exact, metrics, netfile, sampling, wcutset
from .errors import CutsetSamplingError, ModelError, ParameterError
from .graph import adjusted_width, loop_cutset
from .ibp import ibp_run
from .model import BayesNet, check


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(2)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--quiet", action="store_true", help="suppress summaries on stderr")


def _w_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            ws = list(range(int(lo), int(hi) + 1))
        else:
            ws = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad width {text!r}; use N or LO..HI") from None
    if not ws or min(ws) < 0:
        raise argparse.ArgumentTypeError(f"empty or negative width range {text!r}")
    return ws


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wcs", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a benchmark network")
    g.add_argument("family", choices=["random", "twolayer", "grid", "coding"])
    g.add_argument("--n", type=int, help="total node count (random, twolayer)")
    g.add_argument("--roots", type=int, help="root count (random, twolayer)")
    g.add_argument("--parents", type=int, default=3, help="parents per non-root (default 3)")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--diagonal", action="store_true", help="grid: add the (i-1, j-1) parent")
    g.add_argument("--k", type=int, help="coding: number of code bits")
    g.add_argument("--flip", type=float, default=0.05, help="coding: channel flip probability")
    g.add_argument("--parity", help="coding: parity-check file (3 code-bit indices per line)")
    _common(g)

    ev = sub.add_parser("evidence", help="draw an evidence file by forward sampling")
    ev.add_argument("network")
    ev.add_argument("--count", type=int, help="number of observed variables (default: all eligible)")
    ev.add_argument("--policy", choices=["leaves", "channel", "any"], default="leaves")
    _common(ev)

    c = sub.add_parser("cutset", help="select a cutset and report its size and width")
    c.add_argument("network")
    c.add_argument("--evidence")
    c.add_argument("--method", choices=["loop", "ga", "mg", "hg"], default="mg")
    c.add_argument("--w", type=_w_range, default=[2], help="width bound N or range LO..HI")
    _common(c)

    i = sub.add_parser("infer", help="estimate posterior marginals")
    i.add_argument("network")
    i.add_argument("--evidence")
    i.add_argument("--algorithm", choices=["exact", "gibbs", "cutset", "ibp"], default="cutset")
    src = i.add_mutually_exclusive_group()
    src.add_argument("--cutset", choices=["loop", "ga", "mg", "hg"], help="cutset selector (default loop)")
    src.add_argument("--cutset-file", help="explicit cutset, one variable name per line")
    i.add_argument("--w", type=int, default=2, help="width bound for ga/mg/hg cutsets")
    i.add_argument("--chains", type=int, default=20)
    budget = i.add_mutually_exclusive_group()
    budget.add_argument("--samples", type=int, help="sweeps per chain (default 1000)")
    budget.add_argument("--time-bound", type=float, help="total seconds, split evenly across chains")
    i.add_argument("--burn-in", type=int, default=0)
    i.add_argument("--iterations", type=int, default=25, help="IBP iterations")
    i.add_argument("--alpha", type=float, default=0.10, help="interval level is 1 - alpha")
    i.add_argument("--max-width", type=int, default=exact.DEFAULT_WIDTH_CAP)
    ref = i.add_mutually_exclusive_group()
    ref.add_argument("--exact-ref", help="CSV of exact marginals to score against")
    ref.add_argument("--with-exact", action="store_true", help="compute exact marginals to score against")
    i.add_argument("--report", help="write the accuracy report CSV here")
    _common(i)

    e = sub.add_parser("eval", help="score an estimates CSV against an exact CSV")
    e.add_argument("estimates")
    e.add_argument("exact")
    _common(e)
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _load(path: str) -> BayesNet:
    try:
        return check(netfile.read_net(path))
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None


def _load_evidence(net: BayesNet, path: str | None):
    if not path:
        return {}
    try:
        return netfile.read_evidence(net, path)
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ParameterError(f"{args.family} needs {', '.join(missing)}")


def cmd_gen(args) -> int:
    if args.family == "random":
        _need(args, "n", "roots")
        net = bench.gen_random(args.n, args.roots, args.parents, seed=args.seed)
    elif args.family == "twolayer":
        _need(args, "n", "roots")
        net = bench.gen_twolayer(args.roots, args.n, args.parents, seed=args.seed)
    elif args.family == "grid":
        _need(args, "rows", "cols")
        net = bench.gen_grid(args.rows, args.cols, seed=args.seed, diagonal=args.diagonal)
    else:
        parity = bench.read_parity(args.parity) if args.parity else None
        if args.k is None and parity is not None:
            args.k = len(parity)
        _need(args, "k")
        net = bench.gen_coding(args.k, seed=args.seed, flip=args.flip, parity=parity)
    _emit(netfile.dumps_net(net), args.out)
    _note(args, f"{net.n} nodes, {len(net.edges())} edges")
    return 0


def cmd_evidence(args) -> int:
    net = _load(args.network)
    e = bench.gen_evidence(net, args.count, args.policy, seed=args.seed)
    _emit(netfile.dumps_evidence(net, e), args.out)
    _note(args, f"{len(e)} observed variables")
    return 0


def _select(net, e, method: str, w: int):
    if method == "loop":
        members = sorted(loop_cutset(net) - set(e), key=net.topological_order.index)
        return sampling.Cutset(tuple(members), None, adjusted_width(net, members, e))
    return wcutset.select(method, net, e, w).cutset


def cmd_cutset(args) -> int:
    net = _load(args.network)
    e = _load_evidence(net, args.evidence)
    if args.out and len(args.w) > 1:
        raise ParameterError("--out needs a single --w value")
    rows = ["method,w,size,width,elapsed"]
    last = None
    if args.method == "mg":
        if 0 in args.w:
            raise ParameterError("monotonous greedy needs w >= 1")
        reports = wcutset.select_mg_chain(net, e, max(args.w))
        chosen = [r for r in reports if r.w_bound in args.w]
        for r in chosen:
            rows.append(f"MG,{r.w_bound},{r.size},{r.cutset.measured_width},{r.elapsed:.3f}")
            last = r.cutset
    elif args.method == "loop":
        t0 = time.perf_counter()
        last = _select(net, e, "loop", 0)
        rows.append(f"LOOP,-,{len(last.members)},{last.measured_width},{time.perf_counter() - t0:.3f}")
    else:
        for w in args.w:
            r = wcutset.select(args.method, net, e, w)
            rows.append(f"{r.method},{w},{r.size},{r.cutset.measured_width},{r.elapsed:.3f}")
            last = r.cutset
    print("\n".join(rows))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(netfile.dumps_cutset(net, last.members))
    return 0


def _exact_from_csv(net: BayesNet, path: str) -> dict[int, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        table = netfile.loads_marginal_csv(fh.read())
    out: dict[int, np.ndarray] = {}
    for (name, x), p in table.items():
        v = net.var(name)
        out.setdefault(v, np.zeros(net.cards[v]))[x] = p
    return out


def _report_csv(acc: metrics.AccuracyReport | None, mse: float, delta: float, result) -> str:
    lines = ["metric,value", f"mse,{mse:.9f}", f"delta,{delta:.9f}"]
    if acc is not None:
        lines.append(f"delta90,{acc.delta90:.9f}")
    if result is not None:
        lines.append(f"chains,{len(result.chains)}")
        lines.append(f"samples,{result.samples}")
        lines.append(f"restarts,{result.restarts}")
    return "\n".join(lines) + "\n"


def cmd_infer(args) -> int:
    net = _load(args.network)
    e = _load_evidence(net, args.evidence)
    if args.algorithm != "cutset" and (args.cutset or args.cutset_file):
        raise ParameterError("cutset options apply only to --algorithm cutset")
    result = None
    if args.algorithm == "exact":
        est = exact.all_marginals(net, e, max_width=args.max_width)
    elif args.algorithm == "ibp":
        est = ibp_run(net, e, args.iterations)
    else:
        config = sampling.SamplerConfig(
            chains=args.chains,
            samples=None if args.time_bound else (args.samples or 1000),
            seed=args.seed,
            time_bound=args.time_bound,
            burn_in=args.burn_in,
            max_width=args.max_width,
        )
        if args.algorithm == "gibbs":
            result = sampling.run_gibbs(net, e, config)
        else:
            if args.cutset_file:
                members = netfile.read_cutset(net, args.cutset_file)
            else:
                members = _select(net, e, args.cutset or "loop", args.w).members
            result = sampling.run_cutset(net, members, e, config)
            _note(args, f"cutset of {len(members)} variables")
        est = result.pooled()
        if result.restarts:
            _note(args, f"{result.restarts} chain restarts after zero-weight states")

    ref = None
    if args.exact_ref:
        ref = _exact_from_csv(net, args.exact_ref)
    elif args.with_exact:
        ref = exact.all_marginals(net, e, max_width=args.max_width)
    _emit(netfile.dumps_marginals(net, est, ref), args.out)

    if ref is not None:
        acc = None
        if result is not None and len(result.chains) >= 2:
            acc, _ = metrics.build_report(ref, result.per_chain, args.alpha)
        report = _report_csv(acc, metrics.mse(ref, est), metrics.avg_abs_error(ref, est), result)
        if args.report:
            _emit(report, args.report)
        elif not args.quiet:
            sys.stderr.write(report)
    return 0


def cmd_eval(args) -> int:
    try:
        with open(args.estimates, encoding="utf-8") as fh:
            est = netfile.loads_marginal_csv(fh.read())
        with open(args.exact, encoding="utf-8") as fh:
            ref = netfile.loads_marginal_csv(fh.read())
    except OSError as exc:
        raise ModelError(f"cannot read {exc.filename}: {exc.strerror}") from None
    if set(est) != set(ref):
        bad = sorted(set(est) ^ set(ref))
        raise ParameterError("unmatched rows: " + " ".join(f"{v}={x}" for v, x in bad))
    names = sorted({v for v, _ in ref})
    approx = {k: np.array([est[(v, x)] for x in sorted(x for u, x in ref if u == v)]) for k, v in enumerate(names)}
    truth = {k: np.array([ref[(v, x)] for x in sorted(x for u, x in ref if u == v)]) for k, v in enumerate(names)}
    lines = ["variable,values,mse,abs_error"]
    for k, v in enumerate(names):
        d = approx[k] - truth[k]
        lines.append(f"{v},{d.size},{float((d * d).mean()):.9f},{float(np.abs(d).mean()):.9f}")
    n_vals = sum(a.size for a in truth.values())
    lines.append(f"__all__,{n_vals},{metrics.mse(truth, approx):.9f},{metrics.avg_abs_error(truth, approx):.9f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "evidence": cmd_evidence,
    "cutset": cmd_cutset,
    "infer": cmd_infer,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CutsetSamplingError as exc:
        kind = type(exc).__name__
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: OSError: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
