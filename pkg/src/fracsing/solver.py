"""Inner convex solves, the regularized fixed-point loop and the monotone n-limit."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .geometry import CompactSubset, GridDomain, default_compact_subset
from .kernel import (Field, KernelWeights, assemble, check_exponents, pointwise_residual,
                     seminorm_p, weak_residual)
from .optim import spectral_gradient

log = logging.getLogger(__name__)

# For p < 2 the Hessian degenerates where neighbouring values coincide and the
# gradient can stall above inner_tol; give up after this many fruitless iterations.
STAGNATION_PATIENCE = 1000


@dataclass(frozen=True)
class ProblemSpec:
    """Data of ``(-Delta)_p^s u = f / u^gamma`` in the domain, ``u = 0`` outside.

    ``source`` is a callable on interior points (shape ``(n, dim)``), a constant,
    or an array of interior nodal values. ``gamma = 0`` is accepted as the
    degenerate, non-singular case. ``source_integrability`` is the declared
    Lebesgue exponent of ``f`` (bounded profiles: ``inf``).
    """

    p: float
    s: float
    gamma: float
    dim: int
    source: Callable | float | np.ndarray = 1.0
    source_integrability: float = math.inf

    def __post_init__(self):
        check_exponents(self.dim, self.s, self.p)
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if 0 < self.gamma <= 1 and self.source_integrability < self.summability_exponent:
            raise ValueError(
                f"f must lie in L^m with m = {self.summability_exponent:g} for gamma <= 1, "
                f"declared L^{self.source_integrability:g}")

    @property
    def critical_exponent(self) -> float:
        """Fractional Sobolev exponent ``N p / (N - s p)``."""
        return self.dim * self.p / (self.dim - self.s * self.p)

    @property
    def summability_exponent(self) -> float:
        """``m = N p / (N (p-1) + s p + gamma (N - s p))``, the source integrability needed for gamma <= 1."""
        N, p, sp = self.dim, self.p, self.s * self.p
        return N * p / (N * (p - 1) + sp + self.gamma * (N - sp))

    @property
    def boundary_exponent(self) -> float:
        """``max{(gamma + p - 1)/p, 1}``: the power of u that carries zero boundary values."""
        return max((self.gamma + self.p - 1.0) / self.p, 1.0)

    def source_field(self, domain: GridDomain) -> Field:
        if domain.dim != self.dim:
            raise ValueError(f"problem is {self.dim}-dimensional, domain is {domain.dim}-dimensional")
        if callable(self.source):
            f = Field.from_function(domain, self.source)
        else:
            f = Field.from_interior(domain, self.source)
        if not f.is_nonnegative():
            raise ValueError("source f must be nonnegative")
        return f


@dataclass(frozen=True)
class RegularizedProblem:
    """Truncation level ``n``: source ``min(f, n)`` and singularity shifted by ``1/n``."""

    n: int
    f_n: Field
    shift: float

    @classmethod
    def build(cls, f: Field, n: int) -> "RegularizedProblem":
        if n < 1:
            raise ValueError("truncation level must be a positive integer")
        return cls(int(n), Field(f.domain, np.minimum(f.values, n)), 1.0 / n)


@dataclass(frozen=True)
class SolverConfig:
    inner_tol: float = 1e-11
    outer_tol: float = 1e-7
    max_inner_iters: int = 100_000
    max_outer_iters: int = 400
    n_schedule: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    damping: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n_schedule", tuple(int(n) for n in self.n_schedule))
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise ValueError("iteration budgets must be positive")
        if any(b <= a for a, b in zip(self.n_schedule, self.n_schedule[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        if self.n_schedule and self.n_schedule[0] < 1:
            raise ValueError("n_schedule entries must be positive integers")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class InnerInfo:
    iterations: int
    optimality: float
    converged: bool
    min_value: float
    message: str


@dataclass
class FixedPointInfo:
    iterations: int
    inner_iterations: int
    converged: bool
    theta: float
    final_step: float
    residual: float
    retried: bool = False


def solve_dirichlet(weights: KernelWeights, F: Field, config: SolverConfig,
                    warm: Field | None = None, full_output: bool = False):
    """Minimize ``S(u)/p - sum F_i u_i V`` over exterior-zero fields.

    Stops when ``max |Au - F V| <= config.inner_tol``. With ``full_output`` an
    :class:`InnerInfo` is returned as well; a non-converged solve returns the
    iterate with the smallest gradient and ``converged=False``.
    """
    domain = weights.domain
    if F.domain is not domain:
        raise ValueError("domain mismatch between source and weights")
    if F.values.min() < 0:
        raise ValueError("source F must be nonnegative")
    p = weights.p
    load = F.interior * weights.volume
    if not load.any():
        u = Field.zeros(domain)
        info = InnerInfo(0, 0.0, True, 0.0, "zero source")
        return (u, info) if full_output else u
    x0 = np.zeros(domain.n_interior) if warm is None else warm.interior

    res = spectral_gradient(
        lambda v: weights.energy(v) / p - load @ v,
        lambda v: weights.gradient(v) - load,
        x0, tol=config.inner_tol, max_iter=config.max_inner_iters,
        patience=STAGNATION_PATIENCE if p < 2 else None,
    )
    u = Field.from_interior(domain, res.x)
    info = InnerInfo(res.iterations, res.optimality, res.converged, float(res.x.min()), res.message)
    if not res.converged:
        log.warning("inner solve stopped at optimality %.3e (%s)", res.optimality, res.message)
    return (u, info) if full_output else u


def regularized_rhs(prob: ProblemSpec, reg: RegularizedProblem, u: Field) -> Field:
    """``f_n / (u^+ + 1/n)^gamma``, bounded by ``n^gamma f_n``."""
    q = reg.f_n.interior / (np.maximum(u.interior, 0.0) + reg.shift) ** prob.gamma
    return Field.from_interior(reg.f_n.domain, q)


def _picard(prob, reg, weights, config, init, theta):
    u = init.interior.copy()
    w = None
    prev_delta = None
    prev_step = math.inf
    inner_total = 0
    step = math.inf
    for k in range(1, config.max_outer_iters + 1):
        F = regularized_rhs(prob, reg, Field.from_interior(weights.domain, u))
        w, info = solve_dirichlet(weights, F, config, warm=w if w is not None else None,
                                  full_output=True)
        inner_total += info.iterations
        delta = theta * (w.interior - u)
        u = u + delta
        step = float(np.max(np.abs(delta), initial=0.0))
        if step <= config.outer_tol:
            return u, k, inner_total, True, theta, step
        # anti-correlated successive steps that do not contract well signal oscillation
        if prev_delta is not None and float(delta @ prev_delta) < 0 and step > 0.5 * prev_step:
            theta = max(0.5 * theta, 1.0 / 1024)
        prev_delta, prev_step = delta, step
    return u, config.max_outer_iters, inner_total, False, theta, step


def fixed_point(prob: ProblemSpec, reg: RegularizedProblem, weights: KernelWeights,
                config: SolverConfig, init: Field, full_output: bool = False):
    """Damped Picard iteration ``u <- (1-theta) u + theta S(u)`` for the level-``n`` problem.

    ``S(u)`` solves the Dirichlet problem with source ``regularized_rhs(u)``.
    ``theta`` starts at ``config.damping`` and is halved whenever the iteration
    oscillates; if the budget runs out the whole loop is retried once from
    ``init`` with half the starting damping.
    """
    if init.domain is not weights.domain:
        raise ValueError("domain mismatch between init and weights")
    if init.values.min() < 0:
        raise ValueError("init must be nonnegative")
    u, iters, inner, ok, theta, step = _picard(prob, reg, weights, config, init, config.damping)
    retried = False
    if not ok:
        log.warning("fixed point not reached at n=%d (step %.2e); retrying with damping %.3g",
                    reg.n, step, 0.5 * config.damping)
        u2, iters2, inner2, ok2, theta2, step2 = _picard(prob, reg, weights, config, init,
                                                         0.5 * config.damping)
        retried = True
        iters += iters2
        inner += inner2
        if ok2 or step2 < step:
            u, ok, theta, step = u2, ok2, theta2, step2
    sol = Field.from_interior(weights.domain, u)
    if full_output:
        res = pointwise_residual(weights, sol, reg.f_n, prob.gamma, reg.shift)
        info = FixedPointInfo(iters, inner, ok, theta, step,
                              float(np.max(np.abs(res), initial=0.0)), retried)
        return sol, info
    return sol


def power_field(u: Field, q: float) -> Field:
    return Field.from_interior(u.domain, np.maximum(u.interior, 0.0) ** q)


@dataclass
class StageRecord:
    n: int
    fixed_point_iterations: int
    inner_iterations: int
    converged: bool
    theta: float
    final_step: float
    regularized_residual: float
    increment_min: float | None
    sup_change: float | None
    seminorm: float
    seminorm_boundary_power: float
    seminorm_lower_order: float | None
    interior_min: float
    source_mass: float


@dataclass
class SolveReport:
    solution: Field
    problem: dict
    domain: dict
    config: dict
    records: list[StageRecord]
    residual: float
    regularized_residual: float
    converged: bool
    degenerate: bool
    extrapolation_error: float | None
    contraction_ratio: float | None
    testset_margin: float
    timings: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return self.records[-1].n if self.records else 0

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "problem": self.problem,
            "domain": self.domain,
            "config": self.config,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "n_max": self.n_max,
            "residual": self.residual,
            "regularized_residual": self.regularized_residual,
            "extrapolation_error": self.extrapolation_error,
            "contraction_ratio": self.contraction_ratio,
            "testset_margin": self.testset_margin,
            "records": [asdict(r) for r in self.records],
        }
        if include_timings:
            out["timings"] = self.timings
        return out


def _extrapolate(solutions: list[np.ndarray]) -> tuple[float | None, float | None]:
    """Geometric-tail estimate of ``|u_inf - u_last|`` from the last three stages."""
    if len(solutions) < 3:
        return None, None
    d1 = float(np.max(np.abs(solutions[-2] - solutions[-3])))
    d2 = float(np.max(np.abs(solutions[-1] - solutions[-2])))
    if d1 == 0.0:
        return 0.0, 0.0
    ratio = d2 / d1
    if ratio >= 1.0:
        return d2, ratio
    return d2 * ratio / (1.0 - ratio), ratio


def solve_singular(prob: ProblemSpec, domain: GridDomain, config: SolverConfig,
                   weights: KernelWeights | None = None, init: Field | None = None,
                   testset: CompactSubset | None = None) -> SolveReport:
    """Run the fixed point for every ``n`` of the schedule, warm-starting each stage."""
    t_start = time.perf_counter()
    if weights is None:
        weights = assemble(domain, prob.s, prob.p)
    elif weights.domain is not domain:
        raise ValueError("weights were assembled on a different domain")
    if testset is None:
        testset = default_compact_subset(domain)
    if not config.n_schedule:
        raise ValueError("n_schedule is empty")
    f = prob.source_field(domain)
    pos = np.searchsorted(domain.interior_index, testset.node_indices)
    q_b = prob.boundary_exponent
    lower_order = None
    if prob.gamma > 1:
        p_low = prob.gamma + prob.p - 1.0
        lower_order = assemble(domain, prob.s * prob.p / p_low, p_low)
    degenerate = not f.interior.any()

    u = init if init is not None else Field.zeros(domain)
    records: list[StageRecord] = []
    history: list[np.ndarray] = []
    timings = {}
    for n in config.n_schedule:
        t0 = time.perf_counter()
        reg = RegularizedProblem.build(f, n)
        prev = u
        u, info = fixed_point(prob, reg, weights, config, prev, full_output=True)
        if not info.converged:
            log.warning("stage n=%d did not converge", n)
        first = not records
        inc = u.interior - prev.interior
        records.append(StageRecord(
            n=n,
            fixed_point_iterations=info.iterations,
            inner_iterations=info.inner_iterations,
            converged=info.converged,
            theta=info.theta,
            final_step=info.final_step,
            regularized_residual=info.residual,
            increment_min=None if first and init is None else float(inc.min()),
            sup_change=None if first and init is None else float(np.abs(inc).max()),
            seminorm=seminorm_p(weights, u),
            seminorm_boundary_power=seminorm_p(weights, power_field(u, q_b)),
            seminorm_lower_order=None if lower_order is None else
            float(lower_order.energy(u.interior)),
            interior_min=float(u.interior[pos].min()),
            source_mass=float(reg.f_n.interior.sum() * weights.volume),
        ))
        history.append(u.interior)
        timings[f"n={n}"] = time.perf_counter() - t0

    if degenerate:
        log.warning("f vanishes identically: u = 0 and the constraint u > 0 fails")
        residual = reg_residual = 0.0
    else:
        reg_residual = weak_residual(weights, u, reg.f_n, testset, prob.gamma, reg.shift)
        residual = weak_residual(weights, u, f, testset, prob.gamma)
    err, ratio = _extrapolate(history)
    timings["total"] = time.perf_counter() - t_start
    return SolveReport(
        solution=u,
        problem=problem_dict(prob),
        domain=domain.describe(),
        config=asdict(config),
        records=records,
        residual=residual,
        regularized_residual=reg_residual,
        converged=all(r.converged for r in records),
        degenerate=degenerate,
        extrapolation_error=err,
        contraction_ratio=ratio,
        testset_margin=testset.margin,
        timings=timings,
    )


def problem_dict(prob: ProblemSpec) -> dict:
    return {
        "p": prob.p,
        "s": prob.s,
        "gamma": prob.gamma,
        "N": prob.dim,
        "critical_exponent": prob.critical_exponent,
        "summability_exponent": prob.summability_exponent,
        "boundary_exponent": prob.boundary_exponent,
    }
