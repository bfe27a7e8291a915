"""Command-line front end.

Exit codes: 0 success, 2 usage error, 1 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import airtime as at
from .config import config_from_mapping, dump_config, load_config, with_overrides
from .core import ProtocolError
from .degree import DegreeContext, objective, optimal_degree_bruteforce, optimal_degree_closed
from .experiments import PRESETS, load_experiment, preset, run_experiment
from .ingest import IngestError, run_ingested
from .mirror import MirrorDivergence, mirror_oracle_check
from .sim import SimConfig, run

# flag -> SimConfig key
SIM_FLAGS = {
    "policy": "policy",
    "relay": "relay_policy",
    "n": "n",
    "delta": "delta",
    "b": "b",
    "d_nf": "d_nf",
    "l_m": "l_m",
    "l_o": "l_o",
    "l_s": "l_s",
    "r_t": "r_t",
    "r_m": "r_m",
    "p_fb": "p_fb",
    "channel": "channel.kind",
    "p_s": "channel.p_s",
    "p_gb": "channel.p_gb",
    "p_bg": "channel.p_bg",
    "seed": "seed",
}


class UsageError(Exception):
    pass


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; flags override it")
    p.add_argument("--policy", choices=["RR", "WC", "IWC", "IWC-MF"])
    p.add_argument("--relay", choices=["UC-R", "IWC-R"])
    p.add_argument("--n", type=int, help="number of symbols")
    p.add_argument("--delta", type=int, help="delay tolerance")
    p.add_argument("--b", type=int, help="max symbols per packet")
    p.add_argument("--d-nf", type=int, dest="d_nf", help="no-feedback degree")
    p.add_argument("--l-m", type=int, dest="l_m", help="feedback bits for missing symbols")
    p.add_argument("--l-o", type=int, dest="l_o", help="feedback bits for the seq field")
    p.add_argument("--l-s", type=int, dest="l_s", help="bits per symbol")
    p.add_argument("--r-t", type=int, dest="r_t", help="relay threshold")
    p.add_argument("--r-m", type=int, dest="r_m", help="relay memory")
    p.add_argument("--p-fb", type=float, dest="p_fb", help="feedback reception probability")
    p.add_argument("--channel", choices=["bernoulli", "ge"])
    p.add_argument("--p-s", type=float, dest="p_s", help="Bernoulli success probability")
    p.add_argument("--p-gb", type=float, dest="p_gb", help="GE good->bad probability")
    p.add_argument("--p-bg", type=float, dest="p_bg", help="GE bad->good probability")
    p.add_argument("--seed", type=int)


def _sim_config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = {key: getattr(args, flag) for flag, key in SIM_FLAGS.items() if getattr(args, flag) is not None}
    return with_overrides(cfg, overrides)


def _parse_seeds(text: str) -> list[int]:
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}; use 1,2,3 or 1-10") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _summary(cfg: SimConfig, res) -> dict:
    return {
        "policy": cfg.policy.value,
        "relay_policy": cfg.relay_policy.value if cfg.relay_policy else None,
        "seed": cfg.seed,
        "N": res.n,
        "M": res.m,
        "dfr": res.dfr,
        "source_tx": res.source_tx,
        "relay_tx": res.relay_tx,
        "coded_entries": res.coded_entries,
        "source_xors": res.source_xors,
        "relay_xors": res.relay_xors,
        "feedbacks_received": res.feedbacks_received,
    }


def cmd_run(args) -> int:
    cfg = _sim_config(args)
    if args.trace:
        cfg = with_overrides(cfg, {"trace_output": args.trace})
    if args.check:
        cfg = with_overrides(cfg, {"record_trace": True})
    res = run(cfg)
    summary = _summary(cfg, res)
    if args.check:
        report = mirror_oracle_check(res.trace)
        summary["mirror_divergences"] = len(report.divergences)
        report.raise_if_diverged()
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return 0


def cmd_experiment(args) -> int:
    seeds = _parse_seeds(args.seeds) if args.seeds else None
    target = args.target
    if target in PRESETS:
        kwargs = {"n": args.n, "out": args.out}
        if seeds:
            kwargs["seeds"] = seeds
        spec = preset(target, **kwargs)
    elif Path(target).is_file():
        spec = load_experiment(target)
        if seeds:
            spec.seeds = tuple(seeds)
        if args.n is not None:
            spec.base = with_overrides(spec.base, {"n": args.n})
        if args.out:
            spec.out = args.out
    else:
        raise UsageError(f"unknown preset {target!r}; choose from {', '.join(PRESETS)} or give a file")
    text = run_experiment(spec, workers=args.workers)
    if not spec.out:
        sys.stdout.write(text)
    return 0


def cmd_airtime(args) -> int:
    params = at.LoRaParams(
        sf=args.sf,
        bandwidth_hz=args.bandwidth,
        n_preamble=args.preamble,
        header=args.header,
        low_dr_opt=args.ldro,
        coding_rate=args.cr,
        bytes_per_symbol=args.bytes_per_symbol,
        period_ms=args.period_ms,
    )
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["b", "airtime_ms", "mcr", "duty_cycle_pct"], lineterminator="\n")
    w.writeheader()
    w.writerows(at.table_rows(range(1, args.b_max + 1), params))
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_degree_table(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gap", "beta", "closed", "bruteforce", "objective_closed", "objective_max", "closed_attains_max"])
    for gap in range(3, args.max_gap + 1):
        for beta in range(2, gap):
            ctx = DegreeContext(gap, beta)
            dc, db = optimal_degree_closed(ctx), optimal_degree_bruteforce(ctx)
            oc, ob = objective(ctx, dc), objective(ctx, db)
            w.writerow([gap, beta, dc, db, format(float(oc), ".10g"), format(float(ob), ".10g"), int(oc == ob)])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_ingest(args) -> int:
    cfg = _sim_config(args)
    res, report = run_ingested(cfg, args.file)
    summary = _summary(cfg, res)
    summary.update(
        delivered=report.delivered,
        mismatched=report.mismatched,
        undelivered=report.undelivered,
        byte_identical=report.ok,
    )
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return 0 if report.ok else 1


def cmd_defaults(args) -> int:
    _emit(dump_config(config_from_mapping({})), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iwcsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single simulation run, JSON summary")
    _add_sim_flags(p)
    p.add_argument("--trace", help="write a JSON-lines event trace here")
    p.add_argument("--check", action="store_true", help="replay the trace through the mirror oracle")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="preset or experiment file -> CSV")
    p.add_argument("target", help=f"preset ({', '.join(PRESETS)}) or YAML file")
    p.add_argument("--seeds", help="e.g. 1,2,3 or 1-10")
    p.add_argument("--n", type=int, help="override symbols per run")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("airtime", help="LoRa airtime / duty-cycle table as CSV")
    p.add_argument("--b-max", type=int, default=6)
    p.add_argument("--sf", type=int, default=7)
    p.add_argument("--bandwidth", type=int, default=125_000, help="Hz")
    p.add_argument("--preamble", type=int, default=8)
    p.add_argument("--header", type=int, default=0, choices=[0, 1])
    p.add_argument("--ldro", type=int, default=0, choices=[0, 1])
    p.add_argument("--cr", type=int, default=1, choices=[1, 2, 3, 4])
    p.add_argument("--bytes-per-symbol", type=int, default=4)
    p.add_argument("--period-ms", type=int, default=60_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_airtime)

    p = sub.add_parser("degree-table", help="closed-form vs exhaustive degree over a (gap, beta) grid")
    p.add_argument("--max-gap", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_degree_table)

    p = sub.add_parser("ingest", help="run with measurement-file payloads and verify recovery")
    p.add_argument("file")
    _add_sim_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("defaults", help="print the default config as YAML")
    p.add_argument("--out")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except KeyError as exc:
        parser.error(f"unknown key {exc.args[0]!r}")
    except IngestError as exc:
        parser.error(str(exc))
    except (ProtocolError, MirrorDivergence) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
