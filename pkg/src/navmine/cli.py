"""Command-line entry point: ``navmine <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 when an input file
or parameter value is rejected.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .clf import group_by_user, read_clf
from .eval import evaluate
from .miner import sequential_apriori, write_patterns
from .reconstruct import DEFAULT_DELTA, DEFAULT_RHO, HEURISTICS, make_reconstructor
from .runner import load_config, run_experiment, summarize, write_results
from .session import read_sessions, write_sessions
from .simulator import SimulationParams, agent_ip, simulate, write_server_log
from .topology import (
    TopologyGenParams,
    generate_random_topology,
    load_topology,
    resolve_log_entries,
    save_topology,
)

logger = logging.getLogger("navmine")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")


def cmd_gen_topology(args):
    params = TopologyGenParams(args.pages, args.outdegree, args.entry_fraction, args.seed)
    topology = generate_random_topology(params)
    save_topology(topology, args.output)
    logger.info("wrote %r to %s", topology, args.output)


def cmd_simulate(args):
    topology = load_topology(args.topology)
    params = SimulationParams(
        stp=args.stp, lpp=args.lpp, nip=args.nip, n_agents=args.agents, seed=args.seed,
        composition=args.composition,
    )
    real, log = simulate(topology, params)
    write_server_log(log, args.log)
    write_sessions(real, args.sessions)
    logger.info("%d agents, %d log lines, %d real sessions", params.n_agents, len(log), len(real))


def cmd_reconstruct(args):
    topology = load_topology(args.topology) if args.topology else None
    if args.heuristic in ("no", "ssra") and topology is None:
        raise UsageError(f"--heuristic {args.heuristic} needs --topology")
    entries = read_clf(args.log, strict=args.strict)
    if topology is not None:
        entries = resolve_log_entries(entries, topology)
    rec = make_reconstructor(args.heuristic, topology, args.rho, args.delta).fit()
    sessions = rec.transform(group_by_user(entries))
    write_sessions(sessions, args.output)
    logger.info("%s: %d sessions from %d requests", args.heuristic, len(sessions), len(entries))


def cmd_mine(args):
    topology = load_topology(args.topology)
    sessions = read_sessions(args.sessions)
    maximal, levels = sequential_apriori(
        sessions, topology, args.min_support, max_length=args.max_length, strict=args.strict,
        include_singletons=args.include_singletons,
    )
    write_patterns(maximal, args.output)
    logger.info("%d maximal patterns over %d levels", len(maximal), len(levels))


def _user_key(source):
    # simulated ground truth names agents by id; logs name them by address
    return agent_ip(int(source)) if source.isdigit() else source


def cmd_evaluate(args):
    real = read_sessions(args.real)
    recon = read_sessions(args.recon)
    topology = load_topology(args.topology) if args.topology else None
    if args.min_support is not None and topology is None:
        raise UsageError("--min-support needs --topology")
    users = {}
    if args.same_user:
        users = dict(real_users=[_user_key(s.source) for s in real],
                     recon_users=[_user_key(s.source) for s in recon])
    report = evaluate(real, recon, args.heuristic, topology, args.min_support,
                      params={"same_user": args.same_user}, **users)
    fh = _out(args.output)
    try:
        fh.write(report.to_csv())
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    rows = run_experiment(cfg, workdir=args.workdir)
    fh = _out(args.output)
    try:
        write_results(rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.summary:
        for s in summarize(rows):
            pm = "" if s["pattern_mean"] is None else \
                f"  pattern {s['pattern_mean']:.4f} +- {s['pattern_sd']:.4f}"
            print(f"{s['swept_var']}={s['value']:g} {s['heuristic']:>4}: session "
                  f"{s['session_mean']:.4f} +- {s['session_sd']:.4f}{pm}", file=sys.stderr)


def build_parser():
    p = _Parser(prog="navmine", description="Session reconstruction and navigation pattern mining.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-topology", help="generate a random site topology")
    g.add_argument("--pages", type=int, default=300)
    g.add_argument("--outdegree", type=float, default=15.0)
    g.add_argument("--entry-fraction", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen_topology)

    s = sub.add_parser("simulate", help="simulate agents; write a server log and real sessions")
    s.add_argument("--topology", required=True)
    s.add_argument("--agents", type=int, default=10000)
    s.add_argument("--stp", type=float, default=0.05)
    s.add_argument("--lpp", type=float, default=0.30)
    s.add_argument("--nip", type=float, default=0.30)
    s.add_argument("--composition", choices=("nested", "categorical"), default="nested")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--log", required=True, help="CLF output path")
    s.add_argument("--sessions", required=True, help="real-session output path")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reconstruct", help="reconstruct sessions from a CLF log")
    r.add_argument("--heuristic", choices=HEURISTICS, required=True)
    r.add_argument("--log", required=True)
    r.add_argument("--topology")
    r.add_argument("--rho", type=float, default=DEFAULT_RHO, help="page-stay limit, seconds")
    r.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="session-duration limit, seconds")
    r.add_argument("--strict", action="store_true", help="fail on the first malformed log line")
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_reconstruct)

    m = sub.add_parser("mine", help="mine maximal frequent patterns from a session file")
    m.add_argument("--sessions", required=True)
    m.add_argument("--topology", required=True)
    m.add_argument("--min-support", type=float, required=True)
    m.add_argument("--max-length", type=int)
    m.add_argument("--strict", action="store_true", help="require support > threshold")
    m.add_argument("--include-singletons", action="store_true",
                   help="also report frequent single pages that nothing extends")
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_mine)

    e = sub.add_parser("evaluate", help="score reconstructed sessions against real ones")
    e.add_argument("--real", required=True)
    e.add_argument("--recon", required=True)
    e.add_argument("--heuristic", default="")
    e.add_argument("--topology")
    e.add_argument("--min-support", type=float)
    e.add_argument("--same-user", action="store_true",
                   help="only count a capture by a session of the same user")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a configured sweep and write a CSV table")
    x.add_argument("--config", required=True)
    x.add_argument("--workdir", help="persist per-run artifacts here and resume from them")
    x.add_argument("--workers", type=int)
    x.add_argument("--summary", action="store_true", help="print mean +- sd to stderr")
    x.add_argument("-o", "--output")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"navmine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"navmine: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
