"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import ProblemInstance, reference_profile
from .crcomp import optimal_cr
from .exceptions import (
    DegenerateRatio,
    DenominatorNonPositive,
    Infeasible,
    NumericalFailure,
    PeakShaveError,
    PolicyRunError,
)
from .harness.config import ConfigError, load_config
from .harness.experiment import emit_report, run_experiment
from .harness.traces import generate_synthetic, load_traces, write_traces
from .oracle import GridSpec, brute_force_offline, brute_force_optimal_cr, brute_force_phi

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
NUMERICAL = (NumericalFailure, DegenerateRatio, DenominatorNonPositive, Infeasible, ArithmeticError)
DEFAULT_FIXTURES = Path("tests") / "fixtures" / "derived.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _num(x, digits=6):
    return f"{x:.{digits}f}"


def cmd_cr(args, out):
    cfg = load_config(args.config)
    res = optimal_cr(cfg.instance, method=cfg.lp_method)
    inst = cfg.instance
    out.write(f"instance T={inst.T} c={_num(inst.c)} delta_max={_num(inst.delta_max)} "
              f"d_lb={_num(inst.d_lb)} d_ub={_num(inst.d_ub)}\n")
    out.write(f"pi_star {_num(res.pi_star)}\n")
    out.write(f"argmax_prefix {res.argmax_prefix}\n")
    out.write("witness " + " ".join(_num(x, 4) for x in res.witness_profile) + "\n")
    for t, v in enumerate(res.prefix_values, start=1):
        out.write(f"prefix {t} {_num(v)}\n")


def _episodes(args, cfg):
    if args.traces:
        if cfg.window_start is None:
            raise ConfigError("window_start is required to cut traces into episodes")
        inst = cfg.instance
        eps = load_traces(args.traces, inst.T, cfg.slot_minutes, cfg.window_start,
                          (inst.d_lb, inst.d_ub))
        if eps.skipped or eps.clip_count:
            print(f"skipped {len(eps.skipped)} short days, clipped {eps.clip_count} values",
                  file=sys.stderr)
        return eps
    n = args.synthetic if args.synthetic is not None else 20
    return generate_synthetic(cfg, n, cfg.seed if args.seed is None else args.seed)


def cmd_simulate(args, out):
    cfg = load_config(args.config)
    if args.traces and args.synthetic is not None:
        raise UsageError("--traces and --synthetic are mutually exclusive")
    report = run_experiment(cfg, _episodes(args, cfg))
    if args.out:
        emit_report(report, args.format, args.out)
        for a in report.aggregates:
            out.write(f"{a.capacity_rate:.4f} {a.policy:<9} mean={a.mean_reduction_rate:.6f} "
                      f"std={a.std_reduction_rate:.6f}\n")
    else:
        emit_report(report, args.format, None)


def cmd_trace_gen(args, out):
    cfg = load_config(args.config)
    if cfg.window_start is None:
        raise ConfigError("window_start is required to timestamp generated traces")
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    eps = generate_synthetic(cfg, args.n, cfg.seed if args.seed is None else args.seed)
    write_traces(eps, args.out, cfg.window_start, cfg.slot_minutes)
    out.write(f"wrote {len(eps)} episodes to {args.out}\n")


def derived_fixtures(cfg=None) -> dict:
    """Recompute every oracle-derived golden value."""
    offline = []
    for T, c, dmax, d in [(3, 5.0, 10.0, (10, 6, 8)), (2, 5.0, 3.0, (10, 2)), (3, 3.0, 10.0, (5, 5, 5))]:
        inst = ProblemInstance(T, c, dmax, 0.0, 10.0)
        sol = brute_force_offline(inst, d)
        offline.append({"instance": inst.as_dict(), "d": list(map(float, d)),
                        "reduction": round(sol.reduction, 9), "peak_after": round(sol.peak_after, 9)})

    # single-prefix ratio: max over d_1 of sigma(d^1)/c on a 0.01 grid
    inst = ProblemInstance(2, 1.0, 2.0, 1.0, 10.0)
    grid = np.round(np.arange(1.0, 10.0 + 1e-9, 0.01), 2)
    best = max(brute_force_offline(inst, reference_profile([x], 1, inst)).reduction for x in grid)
    prefix1 = {"instance": inst.as_dict(), "value": round(best / inst.c, 9)}

    # pursuit example: reference-profile reductions after each slot
    inst = ProblemInstance(2, 4.0, 10.0, 1.0, 10.0)
    sig = [brute_force_offline(inst, reference_profile([10.0, 8.0][:t], t, inst)).reduction for t in (1, 2)]
    pursuit = {"instance": inst.as_dict(), "d": [10.0, 8.0], "sigma": [round(s, 9) for s in sig]}

    # receding horizon with a one-slot window plans against (10, d_lb)
    rhc = brute_force_offline(ProblemInstance(2, 4.0, 10.0, 1.0, 10.0), (10.0, 1.0))
    rhc_case = {"d": [10.0, 8.0], "first_discharge": round(float(rhc.schedule.values[0]), 9)}

    small = ProblemInstance(3, 1.0, 1.0, 1.0, 5.0)
    spec = GridSpec(demand_step=0.05, ratio_step=1e-4)
    ratios = [{"instance": small.as_dict(), "grid_step": 0.05,
               "pi_star": round(brute_force_optimal_cr(small, spec), 6)}]
    if cfg is not None:
        reduced = cfg.instance.replace(T=min(cfg.instance.T, 3))
        g = GridSpec(ratio_step=1e-4, refine_rounds=2)
        pi_hat = brute_force_optimal_cr(reduced, g)
        ratios.append({"instance": reduced.as_dict(), "grid_step": g.step(reduced),
                       "refine_rounds": 2, "pi_star": round(pi_hat, 6),
                       "phi_at_pi_star": round(brute_force_phi(reduced, pi_hat, g), 6)})
    return {"offline": offline, "prefix1_ratio": prefix1, "pursuit": pursuit,
            "rhc_lb_window1": rhc_case, "optimal_cr": ratios}


def cmd_oracle(args, out):
    cfg = load_config(args.config)
    data = derived_fixtures(cfg)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    out.write(f"wrote {path}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="peakshave", description="Online peak shaving with energy storage.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cr", help="optimal competitive ratio of the configured instance")
    s.add_argument("config")
    s.set_defaults(func=cmd_cr)

    s = sub.add_parser("simulate", help="run the policy comparison")
    s.add_argument("config")
    s.add_argument("--traces", help="trace CSV (timestamp,demand_kwh)")
    s.add_argument("--synthetic", type=int, metavar="N", help="use N synthetic episodes (default 20)")
    s.add_argument("--seed", type=int, help="synthetic seed (default: config seed)")
    s.add_argument("--out", help="report path (default: stdout)")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("oracle", help="regenerate the oracle-derived test fixtures")
    s.add_argument("config")
    s.add_argument("--out", default=str(DEFAULT_FIXTURES))
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("trace-gen", help="write synthetic traces as CSV")
    s.add_argument("config")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_trace_gen)
    return p


def _exit_code(exc):
    if isinstance(exc, PolicyRunError):
        exc = exc.cause
    return EXIT_NUMERICAL if isinstance(exc, NUMERICAL) else EXIT_DATA


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PeakShaveError, ConfigError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
