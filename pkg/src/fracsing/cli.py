"""Command line front end: ``solve``, ``verify`` and ``sweep`` driven by a TOML config."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ConfigError, RunConfig, load_config
from .kernel import assemble
from .solver import RegularizedProblem, SolveReport, fixed_point, solve_dirichlet, solve_singular

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("fracsing")


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to None, numpy scalars to Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def solution_csv(report: SolveReport) -> str:
    prob = report.problem
    u = report.solution
    dom = u.domain
    buf = io.StringIO()
    buf.write(f"# p={prob['p']!r} s={prob['s']!r} gamma={prob['gamma']!r} "
              f"n_max={report.n_max} M={dom.n_nodes}\n")
    for x, val in zip(dom.nodes, u.values):
        buf.write(",".join(f"{c:.17g}" for c in (*x, val)) + "\n")
    return buf.getvalue()


HISTORY_COLUMNS = ("n", "fixed_point_iterations", "inner_iterations", "converged", "increment_min",
                   "sup_change", "seminorm", "seminorm_boundary_power", "seminorm_lower_order",
                   "interior_min", "regularized_residual")


def history_csv(report: SolveReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_COLUMNS)
    for rec in report.records:
        row = []
        for col in HISTORY_COLUMNS:
            v = getattr(rec, col)
            row.append("" if v is None else f"{v:.17g}" if isinstance(v, float) else str(v))
        writer.writerow(row)
    return buf.getvalue()


def _out_dir(cfg: RunConfig, args) -> Path:
    return Path(args.out) if args.out else Path(cfg.base_dir) / cfg.output.directory


def _effective(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg = replace(cfg, output=replace(cfg.output, seed=int(args.seed)))
    if args.out:
        cfg = replace(cfg, output=replace(cfg.output, directory=str(args.out)))
    return cfg


def run_solve(cfg: RunConfig):
    domain = cfg.build_domain()
    prob = cfg.problem_spec(domain)
    return solve_singular(prob, domain, cfg.solver)


def cmd_solve(cfg: RunConfig, args) -> int:
    report = run_solve(cfg)
    out = _out_dir(cfg, args)
    if "csv" in cfg.output.formats:
        write_atomic(out / "solution.csv", solution_csv(report))
        write_atomic(out / "history.csv", history_csv(report))
    if "json" in cfg.output.formats:
        payload = report.to_dict()
        payload["run_config"] = cfg.to_dict()
        write_atomic(out / "report.json", dump_json(payload))
    status = "converged" if report.converged else "NOT converged"
    print(f"solve {status}: n_max={report.n_max} residual={report.residual:.3e} "
          f"interior_min={report.records[-1].interior_min:.6g} -> {out}")
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def _random_exponent_tables(count: int, rng: np.random.Generator) -> list:
    tables = []
    while len(tables) < count:
        N = int(rng.integers(1, 3))
        s = float(rng.uniform(0.05, 0.95))
        p = float(rng.uniform(1.1, 4.0))
        if not N > s * p:
            continue
        gamma = float(rng.uniform(0.05, 3.0))
        q = float(rng.uniform(1.0, 3.0 * N / (s * p)))
        tables.append(an.exponents(p, s, N, gamma, q))
    return tables


def run_checks(cfg: RunConfig) -> an.VerifyReport:
    """Run the configured checks; each yields one :class:`CheckResult`."""
    vb = cfg.verify
    rng = np.random.default_rng(cfg.output.seed)
    domain = cfg.build_domain()
    prob = cfg.problem_spec(domain)
    state: dict = {}

    def weights():
        if "weights" not in state:
            state["weights"] = assemble(domain, prob.s, prob.p)
        return state["weights"]

    def solved():
        if "report" not in state:
            state["report"] = solve_singular(prob, domain, cfg.solver, weights=weights())
        return state["report"]

    def check_exponents():
        tables = _random_exponent_tables(vb.exponent_tuples, rng)
        if prob.gamma > 0:
            tables.append(an.exponents(prob.p, prob.s, prob.dim, prob.gamma,
                                       max(1.0, cfg.problem.integrability)))
        return an.exponent_check(tables)

    def check_dino():
        reps = [an.lemma_dino_check(q, e, vb.samples, seed=int(rng.integers(2 ** 63)))
                for q, e in itertools.product(vb.dino_q, vb.dino_eps)]
        bad = sum(r.violations for r in reps)
        return an.CheckResult("lemma_dino", an.PASS if bad == 0 else an.FAIL,
                              min((r.min_slack for r in reps), default=None),
                              {"violations": bad, "cases": len(reps)})

    def check_convexity():
        W = weights()
        f = prob.source_field(domain)
        u = solve_dirichlet(W, f, cfg.solver)
        q = prob.boundary_exponent
        phi = an.ConvexMap.power(q if q > 1 else 2.0)
        rep = an.convexity_inequality_check(W, u, f, phi, u)
        return an.CheckResult("convexity_inequality", an.PASS if rep.holds else an.FAIL,
                              rep.certificate - rep.slack,
                              {"phi": rep.phi, "slack": rep.slack, "certificate": rep.certificate})

    def check_monotonicity():
        return an.monotonicity_check(solved(), cfg.solver.outer_tol)

    def check_bounds():
        return an.apriori_bounds_check(solved(), prob.gamma, prob.p)

    def check_boundary():
        rep = an.boundary_datum_check(weights(), solved().solution, prob.gamma, vb.eps_list)
        return an.CheckResult("boundary_datum", an.PASS if rep.holds else an.FAIL, rep.min_slack,
                              {"entries": [vars(e) for e in rep.entries]})

    def check_comparison():
        rep = solved()
        n = rep.n_max
        W = weights()
        f = prob.source_field(domain)
        reg_sub = RegularizedProblem.build(f, n)
        reg_sup = RegularizedProblem.build(f * vb.comparison_scale, n)
        v = fixed_point(prob, reg_sup, W, cfg.solver, rep.solution)
        kit = an.TruncationKit.for_comparison(prob.gamma if prob.gamma > 0 else 1.0,
                                              eps=min(1e-3, 0.5 / n), shift=1.0 / n)
        return an.comparison_check(rep.solution, v, prob, W, kit, cfg.solver,
                                   source=reg_sub.f_n, super_source=reg_sup.f_n).to_check()

    def check_uniqueness():
        return an.uniqueness_check(prob, domain, cfg.solver, weights=weights()).to_check()

    def check_symmetry():
        return an.symmetry_check(prob, domain, cfg.solver, weights=weights()).to_check()

    table = {
        "exponents": check_exponents, "lemma_dino": check_dino,
        "convexity_inequality": check_convexity, "monotonicity": check_monotonicity,
        "apriori_bounds": check_bounds, "boundary_datum": check_boundary,
        "comparison": check_comparison, "uniqueness": check_uniqueness,
        "symmetry": check_symmetry,
    }
    results = []
    for name in vb.checks:
        try:
            res = table[name]()
        except an.PreconditionError as exc:
            res = an.CheckResult(name, an.REJECTED, None, {"reason": str(exc)})
        except (ValueError, ArithmeticError) as exc:
            res = an.CheckResult(name, an.FAIL, None, {"error": f"{type(exc).__name__}: {exc}"})
        results.append(res)
    return an.VerifyReport(results)


def cmd_verify(cfg: RunConfig, args) -> int:
    report = run_checks(cfg)
    out = _out_dir(cfg, args)
    payload = report.to_dict()
    payload["all_passed"] = report.all_passed(args.strict)
    payload["strict"] = bool(args.strict)
    payload["run_config"] = cfg.to_dict()
    write_atomic(out / "verify.json", dump_json(payload))
    for c in report.checks:
        margin = "n/a" if c.margin is None else f"{c.margin:.3e}"
        print(f"{c.name:22s} {c.status:22s} margin={margin}  [{c.anchor}]")
    return EXIT_OK if report.all_passed(args.strict) else EXIT_CHECK


SWEEP_COLUMNS = ("p", "s", "gamma", "M", "status", "n_max", "seminorm", "seminorm_boundary_power",
                 "interior_min", "residual", "monotonicity", "message")


def _sweep_row(job) -> dict:
    cfg_dict, base_dir, p, s, gamma, M = job
    row = {"p": p, "s": s, "gamma": gamma, "M": M}
    try:
        data = json.loads(json.dumps(cfg_dict))
        data["problem"].update(p=p, s=s, gamma=gamma)
        data["problem"]["domain"]["M"] = M
        data["problem"]["domain"]["shape"] = [M, M]
        cfg = RunConfig.from_dict(data, base_dir=base_dir)
    except ConfigError as exc:
        row.update(status="invalid", message=str(exc))
        return row
    try:
        rep = run_solve(cfg)
    except (ValueError, ArithmeticError) as exc:
        row.update(status="error", message=f"{type(exc).__name__}: {exc}")
        return row
    mono = an.monotonicity_check(rep, cfg.solver.outer_tol)
    last = rep.records[-1]
    status = "ok"
    if not rep.converged:
        status = "nonconverged"
    elif mono.status != an.PASS:
        status = "check_failed"
    row.update(status=status, n_max=rep.n_max, seminorm=last.seminorm,
               seminorm_boundary_power=last.seminorm_boundary_power,
               interior_min=last.interior_min, residual=rep.residual,
               monotonicity=mono.status, message="")
    return row


def sweep_jobs(cfg: RunConfig) -> list[tuple]:
    sw, pb = cfg.sweep, cfg.problem
    axes = [sw.p if sw.p is not None else (pb.p,),
            sw.s if sw.s is not None else (pb.s,),
            sw.gamma if sw.gamma is not None else (pb.gamma,),
            sw.M if sw.M is not None else (pb.domain.M,)]
    base = cfg.to_dict()
    return [(base, cfg.base_dir, *combo) for combo in itertools.product(*axes)]


def cmd_sweep(cfg: RunConfig, args) -> int:
    jobs = sweep_jobs(cfg)
    workers = max(1, int(args.workers or 1))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n", restval="")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    out = _out_dir(cfg, args)
    write_atomic(out / "sweep.csv", buf.getvalue())
    statuses = [r["status"] for r in rows]
    print(f"sweep: {len(rows)} runs, " + ", ".join(
        f"{k}={statuses.count(k)}" for k in sorted(set(statuses))) + f" -> {out / 'sweep.csv'}")
    if any(st in ("invalid", "error", "check_failed") for st in statuses):
        return EXIT_CHECK
    if "nonconverged" in statuses:
        return EXIT_NONCONVERGED
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand without the
    # subparser's defaults clobbering values parsed at the top level
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--workers", type=int, help="parallel workers for sweep")
    common.add_argument("--seed", type=int, help="seed for sampling checks (overrides output.seed)")
    common.add_argument("--strict", action="store_true",
                        help="count precondition rejections as failures")
    common.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    parser = argparse.ArgumentParser(prog="fracsing", parents=[common],
                                     description="Singular fractional p-Laplacian solver and checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("solve", "solve the configured problem"),
                        ("verify", "run the verification checks"),
                        ("sweep", "solve over a parameter grid")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("config", help="TOML run configuration")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, default in (("out", None), ("workers", 1), ("seed", None), ("strict", False),
                         ("verbose", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _effective(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
