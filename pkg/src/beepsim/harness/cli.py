"""Command-line front end: ``beepsim <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .._prf import derive_seed
from ..codes import (
    EMPIRICAL,
    MODES,
    BeepCode,
    BeepCodeParams,
    DistanceCode,
    DistanceCodeParams,
    estimate_beep_violation_rate,
    verify_distance_code,
)
from ..protocols.matching import format_matching
from ..simcast import POLICIES, RESTRICTED
from .trials import (
    format_records,
    graph_delta,
    localbcast_params,
    localbcast_trial,
    make_params,
    matching_outputs,
    matching_params,
    matching_trial,
    rate,
    read_config,
    round_trial,
    run_trials,
    trial_graph,
)
from .tuning import UnreachableTarget, default_graph_spec, tune_constants

EXIT_OK, EXIT_USAGE, EXIT_MISS = 0, 1, 2

# keys that control where output goes, not what is computed
_NON_CONFIG = {"func", "out", "format", "jobs", "config_from"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _common(p, trials=100):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config-from", help="re-run with the config echoed in an earlier output file")


def _sim(p, eps=0.0, ceps=4):
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--ceps", type=int, default=ceps)
    p.add_argument("--gamma", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--mode", choices=MODES, default=EMPIRICAL)
    p.add_argument("--policy", choices=POLICIES, default=RESTRICTED)
    p.add_argument("--self-knowledge", action="store_true")
    p.add_argument("--target", type=float, help="exit 2 if the success rate falls below this")


def build_parser():
    ap = _Parser(prog="beepsim", description="Broadcast CONGEST over noisy beeps")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-codes", help="generate and check a beep or distance code")
    _common(p, trials=10_000)
    p.add_argument("--family", choices=("beep", "distance"), required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--delta", type=float, default=1 / 3)
    p.add_argument("--cdelta", type=int, default=108)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--c", type=int, default=6)
    p.add_argument("--b", type=int)
    p.add_argument("--mode", choices=MODES, default=EMPIRICAL)
    p.add_argument("--a-max", type=int, default=14)
    p.set_defaults(func=cmd_gen_codes)

    p = sub.add_parser("round-trial", help="single simulated broadcast round trials")
    _common(p)
    p.add_argument("--graph", default="rand:n=32,dcap=6,p=0.2")
    p.add_argument("--n", type=int, help="n used for message width (default: graph size)")
    p.add_argument("--delta", type=int, help="degree bound for the codes (default: dcap or graph max degree)")
    _sim(p)
    p.add_argument("--verify-codes", action="store_true")
    p.add_argument("--no-condition", dest="check_condition", action="store_false")
    p.set_defaults(func=cmd_round_trial)

    p = sub.add_parser("sweep", help="grid over eps, delta, n and c")
    _common(p, trials=20)
    p.add_argument("--eps-list", type=_floats, default=[0.0])
    p.add_argument("--delta-list", type=_ints, default=[2, 4, 8])
    p.add_argument("--n-list", type=_ints, default=[32])
    p.add_argument("--ceps-list", type=_ints, default=[4])
    p.add_argument("--p", type=float, help="edge probability (default scales with delta)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--mode", choices=MODES, default=EMPIRICAL)
    p.add_argument("--policy", choices=POLICIES, default=RESTRICTED)
    p.add_argument("--cell-cap", type=int, default=64)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", help="smallest constant c meeting a target success rate")
    _common(p, trials=100)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--delta", type=int, default=6)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--target", type=float, default=0.95)
    p.add_argument("--graph")
    p.add_argument("--gamma", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--mode", choices=MODES, default=EMPIRICAL)
    p.add_argument("--policy", choices=POLICIES, default=RESTRICTED)
    p.add_argument("--task", choices=("round", "matching"), default="round")
    p.add_argument("--c-max", type=int, default=64)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("matching", help="maximal matching natively or over beeps")
    _common(p, trials=50)
    p.add_argument("--graph", default="rand:n=32,dcap=4,p=0.15")
    p.add_argument("--delta", type=int)
    p.add_argument("--via", choices=("native", "beeps"), default="native")
    p.add_argument("--native", dest="via", action="store_const", const="native")
    _sim(p, eps=0.05, ceps=3)
    p.add_argument("--t-max", type=int, default=10_000)
    p.add_argument("--print-outputs", action="store_true",
                   help="print trial 0's matching as 'id matched-id' lines")
    p.set_defaults(func=cmd_matching)

    p = sub.add_parser("localbcast", help="B-bit local broadcast through the CONGEST wrapper")
    _common(p, trials=20)
    p.add_argument("--graph", default="rand:n=16,dcap=3,p=0.3")
    p.add_argument("--delta", type=int)
    p.add_argument("--B", type=int, default=3)
    p.add_argument("--via", choices=("native", "beeps"), default="native")
    _sim(p, eps=0.0, ceps=7)
    p.add_argument("--verify-codes", action="store_true")
    p.add_argument("--t-max", type=int, default=10_000)
    p.set_defaults(func=cmd_localbcast)
    return ap


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NON_CONFIG}


def _emit(args, records, config, summary):
    text = format_records(records, config, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


def _fmt_rate(flags):
    p, se = rate(flags)
    return f"{p:.4f} ± {se:.4f}" if flags else "n/a"


def _miss(args, flags):
    target = getattr(args, "target", None)
    return target is not None and flags and rate(flags)[0] < target


def cmd_gen_codes(args):
    out = {}
    if args.family == "beep":
        code = BeepCode(BeepCodeParams(args.a, args.k, args.c, b=args.b, mode=args.mode), args.seed)
        out["manifest"] = code.manifest()
        out["violation_rate"] = estimate_beep_violation_rate(code, args.trials, args.seed)
        out["trials"] = args.trials
        out["t_code"] = code.params.t_code
    else:
        code = DistanceCode(DistanceCodeParams(args.a, args.delta, args.cdelta, mode=args.mode),
                            args.seed)
        out["manifest"] = code.manifest()
        out["required_distance"] = code.params.min_distance_required
        if args.a <= args.a_max:
            v = verify_distance_code(code, a_max=args.a_max)
            out.update(method="exhaustive", min_distance=v.min_distance, passed=v.passed,
                       pairs_checked=v.pairs_checked)
        else:
            print(f"warning: a={args.a} is too large to verify exhaustively (a_max={args.a_max});"
                  f" reporting a sampled estimate over {args.trials} random pairs", file=sys.stderr)
            rng = np.random.default_rng(derive_seed(args.seed, 10))
            pairs = rng.integers(0, 1 << args.a, size=(max(1, args.trials), 2), dtype=np.int64)
            pairs = pairs[pairs[:, 0] != pairs[:, 1]]
            d = (code.rows(pairs[:, 0]) != code.rows(pairs[:, 1])).sum(axis=1)
            out.update(method="sampled", sampled_min_distance=int(d.min()) if len(d) else None,
                       passed=None, pairs_checked=int(len(d)))
    text = json.dumps(out, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _validate(args, cfg, task):
    """Reject a bad config before any trial runs."""
    if args.trials < 0:
        raise ValueError("--trials must be >= 0")
    if args.jobs < 1:
        raise ValueError("--jobs must be >= 1")
    if "graph" not in cfg:
        return
    g = trial_graph(cfg["graph"], 0)
    if task is None or (task == "matching" and cfg.get("via") == "native"):
        return
    delta = graph_delta(cfg, g)
    if task == "round":
        make_params(cfg, cfg.get("n") or g.n, delta)
    elif task == "matching":
        matching_params(cfg, max(g.n, 2), delta)
    else:
        if cfg["B"] < 1:
            raise ValueError("--B must be >= 1")
        localbcast_params(cfg, g, delta)


def cmd_round_trial(args):
    cfg = _config(args)
    _validate(args, cfg, "round")
    records = run_trials(round_trial, cfg, args.trials, args.jobs)
    flags = [r.success for r in records]
    cond = [r.condition_ok for r in records if r.condition_ok is not None]
    summary = (f"trials={len(records)} success={_fmt_rate(flags)} "
               f"condition={_fmt_rate(cond)}")
    _emit(args, records, cfg, summary)
    return EXIT_MISS if _miss(args, flags) else EXIT_OK


def cmd_sweep(args):
    cells = [(n, d, e, c) for n in args.n_list for d in args.delta_list
             for e in args.eps_list for c in args.ceps_list]
    if len(cells) > args.cell_cap:
        raise ValueError(f"grid has {len(cells)} cells, above --cell-cap {args.cell_cap}")
    cfg = _config(args)
    _validate(args, cfg, None)
    records, lines = [], []
    for n, d, e, c in cells:
        cell_cfg = dict(cfg, graph=default_graph_spec(n, d, args.p), n=n, delta=d, eps=e, ceps=c,
                        L=None, verify_codes=False, check_condition=e == 0)
        recs = run_trials(round_trial, cell_cfg, args.trials, args.jobs)
        if recs:
            expected = 2 * c ** 3 * (d + 1) * make_params(cell_cfg, n, d).L
            for r in recs:
                if r.rounds_used != expected:
                    raise AssertionError(f"rounds_used {r.rounds_used} != closed form {expected}")
        records.extend(recs)
        lines.append(f"n={n} delta={d} eps={e} c={c} rounds_used="
                     f"{recs[0].rounds_used if recs else 'n/a'} success={_fmt_rate([r.success for r in recs])}")
    _emit(args, records, cfg, "\n".join(lines))
    return EXIT_OK


def cmd_tune(args):
    cfg = _config(args)
    cfg["graph"] = args.graph or default_graph_spec(args.n, args.delta)
    cfg["ceps"] = None
    _validate(args, cfg, None)
    try:
        res = tune_constants(cfg, args.target, args.trials, args.c_max, args.jobs)
    except UnreachableTarget as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISS
    report = {"c_eps": res.c, "rate": res.rate, "reached": res.reached, "floor": res.floor,
              "history": res.history, "config": cfg}
    text = json.dumps(report, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    if not res.reached:
        best = res.best
        print(f"target {args.target} unreachable up to c={args.c_max}; best c={best[0]} "
              f"rate={best[1]:.4f}", file=sys.stderr)
        return EXIT_MISS
    return EXIT_OK


def cmd_matching(args):
    cfg = _config(args)
    _validate(args, cfg, "matching")
    records = run_trials(matching_trial, cfg, args.trials, args.jobs)
    flags = [r.verified for r in records]
    summary = (f"trials={len(records)} via={args.via} verified={_fmt_rate(flags)} "
               f"terminated={_fmt_rate([r.terminated for r in records])}")
    if args.via == "beeps":
        agree = [r.native_agree for r in records if r.set_decode_ok and r.msg_decode_ok]
        summary += f" native_agree_on_clean={_fmt_rate(agree)}"
    _emit(args, records, cfg, summary)
    if args.print_outputs and args.trials:
        g, out = matching_outputs(cfg, 0)
        sys.stdout.write(format_matching(g, out))
    return EXIT_MISS if _miss(args, flags) else EXIT_OK


def cmd_localbcast(args):
    cfg = _config(args)
    _validate(args, cfg, "localbcast")
    records = run_trials(localbcast_trial, cfg, args.trials, args.jobs)
    flags = [r.task_ok for r in records]
    summary = f"trials={len(records)} via={args.via} task_ok={_fmt_rate(flags)}"
    _emit(args, records, cfg, summary)
    return EXIT_MISS if _miss(args, flags) else EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config_from:
        try:
            saved = read_config(args.config_from)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        if saved.get("command") != args.command:
            parser.error(f"config is for {saved.get('command')!r}, not {args.command!r}")
        for k, v in saved.items():
            setattr(args, k, v)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"beepsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
