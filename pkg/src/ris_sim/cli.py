"""Command-line entry point.

Subcommands:

  ris-sim run <config>                      one solve + verification artifacts
  ris-sim sweep <config> --direction d|u    mu sweep against a reference
  ris-sim verify <curve.csv> --config ...   re-check a stored curve
  ris-sim cost --config ... --kind v|c ...  jump cost between two states

Exit code 0 iff every requested check passed; 2 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bvcurve import BVCurve
from .config import RunConfig, UsageError
from .jumpcost import classify_transition, transition_to_csv, ve_cost, viscous_cost
from .runner import run_mu_sweep, run_single, _verify_curve

__all__ = ["main"]


def _parse_state(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse state {text!r}; use comma-separated reals")


def _cmd_run(args) -> int:
    cfg = RunConfig.from_file(args.config)
    result = run_single(cfg, outdir=args.out)
    for concept, rep in result["reports"].items():
        print(rep.to_text())
    n_jumps = len(result["curve"].jumps)
    print(f"wrote {result['paths']['trajectory']} and {result['paths']['curve']} "
          f"({n_jumps} jump(s))")
    return 0 if result["passed"] else 1


def _cmd_sweep(args) -> int:
    cfg = RunConfig.from_file(args.config)
    result = run_mu_sweep(cfg, args.direction, outdir=args.out)
    print(f"mu-{result.direction} sweep vs {result.reference} reference "
          f"(jumps at {['%.6g' % t for t in result.reference_jump_times]})")
    for e in result.entries:
        jt = ",".join(f"{t:.6g}" for t in e.jump_times) or "-"
        flag = "" if e.verify_passed is None else f" verify={'ok' if e.verify_passed else 'FAIL'}"
        print(f"  mu={e.mu:<10g} jumps={jt:<20s} sup_dist={e.sup_distance:.3e} "
              f"energy_gap={e.max_energy_gap:.3e}{flag}")
    print(f"trend inversions: {result.trend_inversions}")
    ok = all(e.verify_passed in (None, True) for e in result.entries)
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    cfg = RunConfig.from_file(args.config)
    m = cfg.build_model()
    s = cfg.build_space()
    curve = BVCurve.from_csv(args.curve)
    rep = _verify_curve(m, s, curve, args.concept, args.mu, cfg.tol, cfg.seed)
    print(rep.to_text())
    if args.out:
        rep.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0 if rep.passed else 1


def _cmd_cost(args) -> int:
    cfg = RunConfig.from_file(args.config)
    m = cfg.build_model()
    s = cfg.build_space()
    a = _parse_state(getattr(args, "from"))
    b = _parse_state(args.to)
    if args.kind == "c":
        if args.mu is None or args.mu <= 0:
            raise UsageError("--mu > 0 is required for the visco-energetic cost")
        breakdown = ve_cost(m, s, args.t, a, b, args.mu, seed=cfg.seed)
        print(f"c_mu(t={args.t:g}, {a} -> {b}, mu={args.mu:g}):")
    else:
        breakdown = viscous_cost(m, s, args.t, a, b, seed=cfg.seed)
        print(f"v(t={args.t:g}, {a} -> {b}):")
    print(breakdown.itemized())
    if args.dump and breakdown.chain is not None:
        segments = None
        if args.kind == "c":
            segments = classify_transition(m, s, breakdown.chain, args.mu)
        transition_to_csv(breakdown.chain, args.dump, segments)
        print(f"wrote {args.dump}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ris-sim",
                                description="rate-independent system simulator")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run one scheme from a config file")
    pr.add_argument("config")
    pr.add_argument("--out", default=None, help="output directory override")
    pr.set_defaults(fn=_cmd_run)

    ps = sub.add_parser("sweep", help="run a mu sweep from a config file")
    ps.add_argument("config")
    ps.add_argument("--direction", choices=("down", "up"), required=True)
    ps.add_argument("--out", default=None)
    ps.set_defaults(fn=_cmd_sweep)

    pv = sub.add_parser("verify", help="verify a stored curve CSV")
    pv.add_argument("curve")
    pv.add_argument("--concept", choices=("energetic", "bv", "ve"), required=True)
    pv.add_argument("--mu", type=float, default=None)
    pv.add_argument("--config", required=True,
                    help="config file supplying the model and grid")
    pv.add_argument("--out", default=None, help="write the report CSV here")
    pv.set_defaults(fn=_cmd_verify)

    pc = sub.add_parser("cost", help="jump cost between two states")
    pc.add_argument("--kind", choices=("v", "c"), required=True)
    pc.add_argument("--t", type=float, required=True)
    pc.add_argument("--from", required=True, help="start state, comma-separated")
    pc.add_argument("--to", required=True, help="end state, comma-separated")
    pc.add_argument("--mu", type=float, default=None)
    pc.add_argument("--config", required=True)
    pc.add_argument("--dump", default=None, help="write the transition CSV here")
    pc.set_defaults(fn=_cmd_cost)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
