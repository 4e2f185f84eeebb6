"""Command-line front end: ``passive-qkd run | validate | point``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .channel import ChannelParams
from .characterization import characterize
from .data import ProtocolParams
from .decoy import estimate_bounds, exact_bounds
from .channel import expected_counts, expected_rates
from .errors import ConfigError, PassiveQKDError
from .keyrate import FINITE, MODES, evaluate
from .optimizer import PARAM_NAMES, source_config
from .sweep import Row, _cell_from_report, load_config, parse_config, render, run_sweep, validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
log = logging.getLogger("passive_qkd")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="passive-qkd",
                                 description="Finite-key rates of fully passive decoy-state BB84.")
    ap.add_argument("-v", "--verbose", action="count", default=0,
                    help="more logging (repeat for debug)")
    ap.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a rate-distance sweep")
    run.add_argument("--config", required=True, help="YAML or JSON sweep config")
    run.add_argument("--output", help="output file (default: config 'output' or stdout)")
    run.add_argument("--format", choices=["csv", "json"])
    run.add_argument("--mode", action="append", choices=list(MODES),
                     help="restrict to these modes (repeatable)")
    run.add_argument("--seed", type=int, help="override the search seed")
    run.add_argument("--budget", type=int, help="override the search budget")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)

    pt = sub.add_parser("point", help="evaluate one fixed parameter vector")
    pt.add_argument("--config", help="sweep config supplying channel/protocol settings")
    pt.add_argument("--distance", type=float, action="append", required=True)
    pt.add_argument("--mode", action="append", choices=list(MODES))
    pt.add_argument("--N", type=float, action="append", dest="N_values")
    for name in PARAM_NAMES:
        pt.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, required=True)
    pt.add_argument("--format", choices=["csv", "json"], default="csv")
    pt.add_argument("--dump-lp", metavar="FILE", help="write the LP instances as plain text")
    return ap


def _setup_logging(args):
    level = args.log_level or ("DEBUG" if args.verbose > 1 else
                               "INFO" if args.verbose == 1 else "WARNING")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    updates = {}
    if args.mode:
        updates["modes"] = args.mode
    search = config.search.model_dump()
    if args.seed is not None:
        search["seed"] = args.seed
    if args.budget is not None:
        search["budget"] = args.budget
    updates["search"] = search
    config = parse_config({**config.model_dump(), **updates})
    report = validate(config)
    for w in report.warnings:
        log.warning(w)
    if not report.ok:
        raise ConfigError("; ".join(report.errors))
    rows = run_sweep(config, jobs=max(1, args.jobs))
    _write(render(rows, args.format or config.format), args.output or config.output)
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = validate(load_config(args.config))
    print(report.text())
    return EXIT_OK if report.ok else EXIT_CONFIG


def _cmd_point(args) -> int:
    data = {"distances": args.distance}
    if args.mode:
        data["modes"] = args.mode
    if args.N_values:
        data["N_values"] = args.N_values
    if args.config:
        base = load_config(args.config).model_dump()
        base.update(data)
        data = base
    config = parse_config(data)
    params = {name: getattr(args, name) for name in PARAM_NAMES}
    p = config.protocol
    source = characterize(source_config(params), p.n_cut, p.n_max, config.tol)
    base = ChannelParams(config.channel.eta_bob, config.channel.alpha_att, 0.0,
                         config.channel.p_d, config.channel.f_EC)
    rows, dumps = [], []
    for L in config.distances:
        channel = base.at_distance(L)
        for mode in config.modes:
            for N in (config.N_values if mode == FINITE else [None]):
                proto = ProtocolParams(N=N or 1.0, q_K=1.0 - params["q_T"], eps=p.eps,
                                       eps_cor=p.eps_cor, eps_PA=p.eps_PA, delta=p.delta,
                                       n_cut=p.n_cut, lambda_EC=p.lambda_EC, n_max=p.n_max)
                report = evaluate(mode, source, channel, proto)
                rows.append(Row(L, mode, N, _cell_from_report(report), params))
                if args.dump_lp and mode != "perfect_pe":
                    lps = []
                    try:
                        if mode == FINITE:
                            expected = expected_counts(source, channel, proto)
                            estimate_bounds(expected, proto, source, expected, dump=lps)
                        else:
                            r = expected_rates(source, channel)
                            exact_bounds(source, r.key_gain, r.test_error, p.n_cut, dump=lps)
                    except PassiveQKDError as err:
                        instance = getattr(err, "instance", None)
                        if instance:
                            dumps.append(f"# L={L} mode={mode} N={N} FAILED: {err}\n{instance}")
                    for lp in lps:
                        dumps.append(f"# L={L} mode={mode} N={N}\n{lp.dump()}")
    sys.stdout.write(render(rows, args.format))
    if args.dump_lp:
        _write("\n".join(dumps), args.dump_lp)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging(args)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "point": _cmd_point}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PassiveQKDError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
