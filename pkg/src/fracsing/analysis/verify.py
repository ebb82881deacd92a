"""Verifiers for ordering, comparison, uniqueness and symmetry of computed solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import GridDomain, Hyperplane, reflect
from ..kernel import Field, KernelWeights, assemble, pointwise_residual
from ..solver import ProblemSpec, SolveReport, SolverConfig, solve_dirichlet, solve_singular
from .truncation import TruncationKit, truncated_minimize

PASS, FAIL, INCONCLUSIVE, REJECTED = "pass", "fail", "inconclusive", "precondition rejected"

ANCHORS = {
    "exponents": "algebraic identities between the integrability exponents",
    "lemma_dino": "power gap |x^q - y^q| >= eps^(q-1) |x - y| away from the origin",
    "convexity_inequality": "convex transforms of solutions are subsolutions with transformed source",
    "monotonicity": "regularized solutions increase with n and stay positive inside",
    "apriori_bounds": "energy bounds uniform in n",
    "boundary_datum": "shifted positive part (u - eps)^+ has zero boundary datum",
    "comparison": "weak comparison between sub- and supersolutions",
    "uniqueness": "uniqueness of the singular solution",
    "symmetry": "reflection symmetry inherited from domain and source",
}


class PreconditionError(ValueError):
    """Input does not satisfy the hypotheses of the statement being checked."""


@dataclass
class CheckResult:
    name: str
    status: str
    margin: float | None
    details: dict = field(default_factory=dict)

    @property
    def anchor(self) -> str:
        return ANCHORS.get(self.name, self.name)

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "status": self.status,
                "margin": _finite_or_none(self.margin), "details": self.details}


@dataclass
class VerifyReport:
    checks: list[CheckResult]

    def all_passed(self, strict: bool = False) -> bool:
        ok = {PASS} if strict else {PASS, REJECTED}
        return all(c.status in ok for c in self.checks)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks],
                "all_passed": self.all_passed()}


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def monotonicity_check(report: SolveReport, outer_tol: float) -> CheckResult:
    """Nodal increments between stages and interior minima, both within ``10 outer_tol``."""
    tol = 10.0 * outer_tol
    incs = [r.increment_min for r in report.records if r.increment_min is not None]
    mins = [r.interior_min for r in report.records]
    inc_margin = min(incs) + tol if incs else math.inf
    drops = [b - a for a, b in zip(mins, mins[1:])]
    min_margin = min(drops) + tol if drops else math.inf
    positive = bool(mins) and min(mins) > 0 if not report.degenerate else True
    margin = min(inc_margin, min_margin)
    status = PASS if margin >= 0 and positive else FAIL
    return CheckResult("monotonicity", status, margin,
                       {"increment_min": min(incs) if incs else None,
                        "interior_min": mins, "positive": positive})


def apriori_bounds_check(report: SolveReport, gamma: float, p: float,
                         ratio_tol: float = 0.05, spread_tol: float = 0.2) -> CheckResult:
    """Energy bounds along the schedule.

    ``gamma <= 1``: ``[u_n]`` stabilizes (last ratio within ``ratio_tol``) and for
    ``gamma = 1`` also ``[u_n]^p <= (1 + ratio_tol)^p sum f V``.
    ``gamma > 1``: ``[u_n^q]^p / sum f V`` over the last three stages varies by at
    most ``spread_tol`` (ratio of extremes), and the lower-order seminorm is
    dominated by ``[u_n^q]^p``.
    """
    recs = report.records
    details: dict = {}
    margins = []
    if gamma <= 1:
        roots = [r.seminorm ** (1.0 / p) for r in recs]
        if len(roots) >= 2 and roots[-2] > 0:
            ratio = roots[-1] / roots[-2]
            details["last_ratio"] = ratio
            margins.append(ratio_tol - abs(ratio - 1.0))
        if gamma == 1:
            # the bound uses the untruncated mass, the last record's is the largest
            mass = recs[-1].source_mass
            worst = max(roots) / ((1.0 + ratio_tol) * mass ** (1.0 / p))
            details["bound_ratio"] = worst
            margins.append(1.0 - worst)
    else:
        fits = [r.seminorm_boundary_power / r.source_mass for r in recs if r.source_mass > 0]
        tail = fits[-3:]
        if len(tail) == 3:
            spread = max(tail) / min(tail) - 1.0
            details.update(c_fit=tail, spread=spread)
            margins.append(spread_tol - spread)
        dom = [r.seminorm_boundary_power - r.seminorm_lower_order for r in recs
               if r.seminorm_lower_order is not None]
        if dom:
            slack = min(dom) + 1e-8 * max(1.0, max(r.seminorm_boundary_power for r in recs))
            details["lower_order_slack"] = min(dom)
            margins.append(slack)
    if not margins:
        return CheckResult("apriori_bounds", INCONCLUSIVE, None, details)
    margin = min(margins)
    return CheckResult("apriori_bounds", PASS if margin >= 0 else FAIL, margin, details)


def _screen_tolerance(weights, u, f, gamma, shift, config):
    # a solution known to within outer_tol in sup norm leaves a residual of about
    # |d/du f (u + shift)^-gamma| outer_tol; the operator is nonlocal, so an error
    # at a steep node shows up everywhere and the largest slope sets the scale
    v = np.maximum(u.interior, 0.0) + shift
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(f.interior > 0, gamma * f.interior * v ** (-gamma - 1.0), 0.0)
    return 10.0 * (float(np.max(slope, initial=0.0)) * config.outer_tol
                   + config.inner_tol / weights.volume)


@dataclass
class ComparisonVerdict:
    status: str
    violation: float
    chain_violation: float
    tolerance: float
    w: Field | None = None

    def to_check(self) -> CheckResult:
        return CheckResult("comparison", self.status, self.tolerance - self.violation,
                           {"violation": self.violation, "chain_violation": self.chain_violation,
                            "tolerance": self.tolerance})


def comparison_check(u_sub: Field, v_super: Field, prob: ProblemSpec, weights: KernelWeights,
                     kit: TruncationKit, config: SolverConfig, source: Field | None = None,
                     super_source: Field | None = None) -> ComparisonVerdict:
    """Check ``u_sub <= w + eps <= v_super + eps`` and ``u_sub <= v_super`` nodally.

    The quotient is ``source / (u + kit.shift)^gamma``; ``source`` defaults to the
    problem's ``f`` and ``super_source`` to ``source``, so a subsolution of one
    source can be compared with a supersolution of a larger one. Both inputs are
    screened first: ``u_sub`` must not exceed its equation where ``u_sub > eps``
    and ``v_super`` must not fall below its own.
    """
    domain = weights.domain
    f = prob.source_field(domain) if source is None else source
    g = f if super_source is None else super_source
    if np.any(g.interior < f.interior):
        raise PreconditionError("super_source must dominate source nodally")
    if not (u_sub.is_nonnegative() and v_super.is_nonnegative()):
        raise PreconditionError("sub- and supersolution must be nonnegative")
    gamma, shift = prob.gamma, kit.shift
    if shift == 0 and np.any(v_super.interior <= 0):
        raise PreconditionError("supersolution vanishes inside; quotient is singular")

    r_sub = pointwise_residual(weights, u_sub, f, gamma, shift)
    active = u_sub.interior > kit.eps
    tol_sub = _screen_tolerance(weights, u_sub, f, gamma, shift, config)
    excess = np.where(active, r_sub, -np.inf)
    if np.max(excess, initial=-np.inf) > tol_sub:
        i = int(np.argmax(excess))
        raise PreconditionError(f"subsolution screen failed: residual {r_sub[i]:.3e} at interior "
                                f"node {i} exceeds {tol_sub:.3e}")
    r_sup = pointwise_residual(weights, v_super, g, gamma, shift)
    tol_sup = _screen_tolerance(weights, v_super, g, gamma, shift, config)
    if np.max(-r_sup, initial=-np.inf) > tol_sup:
        i = int(np.argmin(r_sup))
        raise PreconditionError(f"supersolution screen failed: residual {r_sup[i]:.3e} at "
                                f"interior node {i} below -{tol_sup:.3e}")

    res = truncated_minimize(weights, g, v_super, kit, config, full_output=True)
    tol = 10.0 * config.outer_tol
    chain = float(np.max(u_sub.interior - res.w.interior - kit.eps, initial=0.0))
    direct = float(np.max(u_sub.interior - v_super.interior, initial=0.0))
    if not res.converged:
        status = INCONCLUSIVE
    else:
        status = PASS if max(chain, direct) <= tol else FAIL
    return ComparisonVerdict(status, max(chain, direct), chain, tol, res.w)


def alternate_schedule(schedule) -> tuple[int, ...]:
    """``3, 6, 12, ...`` reaching at least the largest entry of ``schedule``."""
    top = max(schedule)
    out = [3]
    while out[-1] < top:
        out.append(2 * out[-1])
    return tuple(out)


@dataclass
class UniquenessVerdict:
    status: str
    difference: float
    gap: float | None
    tolerance: float | None
    runs: tuple[SolveReport, SolveReport]

    def to_check(self) -> CheckResult:
        margin = None if self.tolerance is None else self.tolerance - self.difference
        return CheckResult("uniqueness", self.status, margin,
                           {"difference": self.difference, "gap": self.gap,
                            "tolerance": self.tolerance})


def uniqueness_check(prob: ProblemSpec, domain: GridDomain, config: SolverConfig,
                     weights: KernelWeights | None = None,
                     schedule: tuple[int, ...] | None = None) -> UniquenessVerdict:
    """Two limit runs from different schedules and starting points must agree.

    The first run uses ``config.n_schedule`` from zero; the second uses
    ``schedule`` (default ``3, 6, 12, ...``) and starts from the Dirichlet solve
    with source ``f_n n^gamma`` at its first level. Both live on the same grid, so
    the only gap between them is the truncation in ``n``, estimated from each
    run's geometric tail.
    """
    if weights is None:
        weights = assemble(domain, prob.s, prob.p)
    alt = alternate_schedule(config.n_schedule) if schedule is None else tuple(schedule)
    run_a = solve_singular(prob, domain, config, weights=weights)
    f = prob.source_field(domain)
    n0 = alt[0]
    init = solve_dirichlet(weights, Field(domain, np.minimum(f.values, n0) * n0 ** prob.gamma),
                           config)
    run_b = solve_singular(prob, domain, replace(config, n_schedule=alt), weights=weights,
                           init=init)
    diff = float(np.max(np.abs(run_a.solution.values - run_b.solution.values), initial=0.0))
    if not (run_a.converged and run_b.converged):
        return UniquenessVerdict(INCONCLUSIVE, diff, None, None, (run_a, run_b))
    if run_a.degenerate and run_b.degenerate:
        gap = 0.0
    elif run_a.extrapolation_error is None or run_b.extrapolation_error is None:
        return UniquenessVerdict(INCONCLUSIVE, diff, None, None, (run_a, run_b))
    else:
        gap = run_a.extrapolation_error + run_b.extrapolation_error
    tol = 10.0 * (config.outer_tol + gap)
    return UniquenessVerdict(PASS if diff <= tol else FAIL, diff, gap, tol, (run_a, run_b))


@dataclass
class SymmetryVerdict:
    status: str
    asymmetry: dict[str, float]
    tolerance: float
    report: SolveReport | None = None

    @property
    def worst(self) -> float:
        return max(self.asymmetry.values(), default=0.0)

    def to_check(self) -> CheckResult:
        return CheckResult("symmetry", self.status, self.tolerance - self.worst,
                           {"asymmetry": self.asymmetry, "tolerance": self.tolerance})


def _axis_label(axis: Hyperplane) -> str:
    n = ",".join(f"{c:.6g}" for c in axis.normal)
    return f"n=({n}) c={axis.offset:.6g}"


def symmetry_check(prob: ProblemSpec, domain: GridDomain, config: SolverConfig,
                   axis: Hyperplane | None = None,
                   weights: KernelWeights | None = None) -> SymmetryVerdict:
    """Solve once and compare ``u`` with its mirror image across each axis.

    ``axis=None`` checks every declared symmetry axis of the domain. The source
    must itself be symmetric under each checked reflection.
    """
    axes = list(domain.symmetry_axes) if axis is None else [axis]
    if not axes:
        raise PreconditionError("domain declares no symmetry axis")
    f = prob.source_field(domain)
    perms = []
    for ax in axes:
        try:
            perm = reflect(domain, ax)
        except ValueError as exc:
            raise PreconditionError(str(exc)) from exc
        scale = max(float(np.abs(f.values).max()), 1.0)
        if np.max(np.abs(f.values - f.values[perm])) > 1e-12 * scale:
            raise PreconditionError(f"source is not symmetric about axis {_axis_label(ax)}")
        perms.append((ax, perm))
    report = solve_singular(prob, domain, config, weights=weights)
    u = report.solution.values
    asym = {_axis_label(ax): float(np.max(np.abs(u - u[perm]))) for ax, perm in perms}
    tol = 10.0 * config.outer_tol
    worst = max(asym.values())
    status = PASS if worst <= tol else FAIL
    if not report.converged and status == FAIL:
        status = INCONCLUSIVE
    return SymmetryVerdict(status, asym, tol, report)


def exponent_check(table_or_tables, tol: float = 1e-12) -> CheckResult:
    tables = table_or_tables if isinstance(table_or_tables, (list, tuple)) else [table_or_tables]
    worst = 0.0
    for t in tables:
        worst = max([worst, *t.identity_defects().values()])
    return CheckResult("exponents", PASS if worst <= tol else FAIL, tol - worst,
                       {"max_defect": worst, "tables": len(tables)})


