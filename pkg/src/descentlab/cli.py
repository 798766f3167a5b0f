"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 size limit.
Output goes to stdout or ``--out``; it is assembled in memory first so a
failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import descent_chain as dc
from . import laplace as lp
from . import limit_checks as lc
from . import rate_fn as rf
from . import sldp as sl
from .errors import DescentLabError
from .simulate import default_threads, simulate_states
from .validate import SUITES

SEED_LIMIT = 1 << 64


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int | None
    threads: int
    rel_tol: float
    out_path: Path | None
    format: str


def fmt(v: float) -> str:
    return f"{v:.17g}"


def _json_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return fmt(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dump_json(obj) -> str:
    """JSON with every float at 17 significant digits; non-finite floats become null."""
    return _json_value(obj) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="descentlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pmf", parents=[common], help="exact joint law of (D_n, D'_n)")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("simulate", parents=[common], help="final states of independent chains")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)

    p = sub.add_parser("tails", parents=[common], help="quadrant tail probabilities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--quadrant", choices=["pp", "mm", "mp", "pm"], default="pp", type=str.lower)
    p.add_argument("--method", choices=["exact", "sldp", "mc"], default="exact")
    p.add_argument("--mc-reps", type=int, default=10000)

    p = sub.add_parser("rate", parents=[common], help="rate function and tilt")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", type=float)
    g.add_argument("--curve", type=str, help="a:b:step")

    p = sub.add_parser("laplace", parents=[common], help="Laplace transform m_n(t, s)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--method", choices=["closed", "exact", "axis"], default="closed")

    p = sub.add_parser("limit", parents=[common], help="Monte Carlo limit-theorem checks")
    p.add_argument("--check", choices=["clt", "fclt", "qsl", "lil", "sumclt"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--centering", choices=["martingale", "naive"], default="martingale")

    p = sub.add_parser("validate", parents=[common], help="run an oracle battery")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--max-n", type=int, default=None)
    return parser


def _config(args) -> RunConfig:
    if args.seed is not None and not (0 <= args.seed < SEED_LIMIT):
        raise UsageError("--seed must be an unsigned 64-bit integer")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    if not args.rel_tol > 0:
        raise UsageError("--rel-tol must be positive")
    return RunConfig(args.seed, threads, args.rel_tol, args.out, args.format)


def _need_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise UsageError("this subcommand is randomized and requires an explicit --seed")
    return cfg.seed


def cmd_pmf(args, cfg: RunConfig) -> tuple[str, int]:
    pmf = dc.exact_joint_pmf(args.n)
    if cfg.format == "json":
        return dump_json({"n": pmf.n, "probs": pmf.probs}), 0
    return pmf.to_csv(), 0


def cmd_simulate(args, cfg: RunConfig) -> tuple[str, int]:
    seed = _need_seed(cfg)
    states = simulate_states(args.n, args.reps, seed, threads=cfg.threads)[0]
    rows = [[i, args.n, int(states[0, i]), int(states[1, i])] for i in range(args.reps)]
    return _csv(["replica", "n", "d", "dprime"], rows), 0


def cmd_tails(args, cfg: RunConfig) -> tuple[str, int]:
    q = args.quadrant.upper()
    est = sl.sldp_joint(args.n, args.x, args.y, q).estimate
    exact = mc = mc_se = ratio = ""
    if args.method == "exact":
        exact = dc.quadrant_tail(dc.exact_joint_pmf(args.n), args.x, args.y, q)
        ratio = exact / est if est > 0 else math.inf
    elif args.method == "mc":
        seed = _need_seed(cfg)
        states = simulate_states(args.n, args.mc_reps, seed, threads=cfg.threads)[0]
        kx = dc.threshold_index(args.n, args.x)
        ky = dc.threshold_index(args.n, args.y)
        hit_x = states[0] >= kx if q[0] == "P" else states[0] <= args.n - 1 - kx
        hit_y = states[1] >= ky if q[1] == "P" else states[1] <= args.n - 1 - ky
        mc = float(np.mean(hit_x & hit_y))
        mc_se = math.sqrt(mc * (1 - mc) / args.mc_reps)
    row = [args.n, float(args.x), float(args.y), q.lower(), exact, est, mc, mc_se, ratio]
    return _csv(["n", "x", "y", "quadrant", "exact", "sldp", "mc", "mc_stderr", "ratio_exact_sldp"], [row]), 0


def _frange(spec: str) -> list[float]:
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise UsageError(f"--curve expects a:b:step, got {spec!r}") from None
    if step <= 0 or b < a:
        raise UsageError("--curve needs a <= b and step > 0")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(count)]


def cmd_rate(args, cfg: RunConfig) -> tuple[str, int]:
    if args.x is not None:
        sol = rf.solve_tilt(args.x, tol=cfg.rel_tol)
        obj = {"x": sol.x, "t_x": sol.t_x, "rate": sol.rate, "sigma2": sol.sigma2}
        if cfg.format == "csv":
            return _csv(list(obj), [list(obj.values())]), 0
        return dump_json(obj), 0
    rows = []
    for x in _frange(args.curve):
        sol = rf.solve_tilt(x, tol=cfg.rel_tol)
        rows.append([sol.x, sol.t_x, sol.rate, sol.sigma2])
    if cfg.format == "json":
        return dump_json([dict(zip(["x", "t_x", "rate", "sigma2"], r)) for r in rows]), 0
    return _csv(["x", "t_x", "rate", "sigma2"], rows), 0


def cmd_laplace(args, cfg: RunConfig) -> tuple[str, int]:
    pol = lp.TruncationPolicy(rel_tol=cfg.rel_tol)
    if args.method == "closed":
        log_value = lp.log_mn_closed(args.n, args.t, args.s, pol)
    elif args.method == "exact":
        log_value = dc.log_mgf(dc.exact_joint_pmf(args.n), args.t, args.s)
    else:
        if args.t != 0.0 and args.s != 0.0:
            raise UsageError("--method axis needs t = 0 or s = 0")
        z = args.t + args.s
        log_value = 0.0 if z == 0.0 else math.log(lp.mn_axis(args.n, z, pol))
    obj = {"n": args.n, "t": args.t, "s": args.s, "method": args.method,
           "value": math.exp(log_value), "log_value": log_value}
    return dump_json(obj), 0


def _within(est: float, target: float, se: float, k: float = 5.0) -> bool:
    return abs(est - target) <= k * se


def cmd_limit(args, cfg: RunConfig) -> tuple[str, int]:
    seed = _need_seed(cfg)
    check = args.check
    if check in ("clt", "sumclt", "fclt"):
        reps = args.reps if args.reps is not None else 20000
    else:
        reps = args.reps if args.reps is not None else 1
    report: dict = {"check": check, "n": args.n, "reps": reps, "seed": seed}
    if check == "clt":
        c = lc.clt_covariance(args.n, reps, seed, threads=cfg.threads)
        target = np.diag([lc.CLT_TARGET] * 2)
        passes = [_within(c.entries[i, j], target[i, j], c.stderr[i, j]) for i in range(2) for j in range(2)]
        report.update(estimate=c.entries, stderr=c.stderr, target=target,
                      mean=c.mean, mean_stderr=c.mean_stderr, mean_target=0.5,
                      passed=all(passes) and all(_within(m, 0.5, se) for m, se in zip(c.mean, c.mean_stderr)))
    elif check == "sumclt":
        e = lc.sum_clt_check(args.n, reps, seed, threads=cfg.threads)
        report.update(estimate=e.value, stderr=e.stderr, target=lc.SUM_TARGET,
                      passed=_within(e.value, lc.SUM_TARGET, e.stderr))
    elif check == "fclt":
        c = lc.fclt_cross_cov(args.n, args.s, args.t, reps, seed, threads=cfg.threads)
        tv = lc.fclt_target(args.s, args.t)
        target = np.diag([tv, tv])
        passes = [_within(c.entries[i, j], target[i, j], c.stderr[i, j]) for i in range(2) for j in range(2)]
        report.update(s=args.s, t=args.t, estimate=c.entries, stderr=c.stderr, target=target, passed=all(passes))
    else:
        stats = [lc.qsl_statistic(args.n, seed, args.centering, replica=i) for i in range(reps)]
        report["centering"] = args.centering
        if check == "qsl":
            vals = [s.qsl_value for s in stats]
            inside = sum(1 for v in vals if 0.10 <= v <= 0.24)
            report.update(values=vals, target=lc.QSL_TARGET, band=[0.10, 0.24], inside_band=inside,
                          passed=inside >= math.ceil(0.9 * reps))
        else:
            report.update(values=[s.lil_value for s in stats], reference=lc.LIL_TARGET,
                          report_only=True)
    code = 0 if report.get("passed", True) else 2
    return dump_json(report), code


def cmd_validate(args, cfg: RunConfig) -> tuple[str, int]:
    fn = SUITES[args.suite]
    results = fn() if args.max_n is None else fn(args.max_n)
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    ok = all(r.passed for r in results)
    lines.append(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n", 0 if ok else 2


COMMANDS = {
    "pmf": cmd_pmf,
    "simulate": cmd_simulate,
    "tails": cmd_tails,
    "rate": cmd_rate,
    "laplace": cmd_laplace,
    "limit": cmd_limit,
    "validate": cmd_validate,
}


def dispatch(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        text, code = COMMANDS[args.command](args, cfg)
    except UsageError as e:
        print(f"descentlab: usage error: {e}", file=sys.stderr)
        return 1
    except DescentLabError as e:
        print(f"descentlab: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    if cfg.out_path is not None:
        cfg.out_path.write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(dispatch())
