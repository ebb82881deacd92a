import json

import numpy as np
import pytest

from fracsing.geometry import build_interval
from fracsing.kernel import Field, assemble, seminorm_p
from fracsing.solver import (ProblemSpec, RegularizedProblem, SolverConfig, fixed_point,
                             regularized_rhs, solve_dirichlet, solve_singular)

from oracles import torsion_profile


@pytest.fixture(scope="module")
def dom():
    return build_interval(-1, 1, 65, 0.25)


def ones(dom, c=1.0):
    return Field.from_interior(dom, np.full(dom.n_interior, c))


def test_problem_spec_exponents():
    prob = ProblemSpec(p=2, s=0.5, gamma=0.5, dim=2)
    assert prob.critical_exponent == pytest.approx(4.0)
    assert prob.summability_exponent == pytest.approx(8 / 7)
    assert prob.boundary_exponent == 1.0
    assert ProblemSpec(2, 0.3, 2.0, 1).boundary_exponent == pytest.approx(1.5)


@pytest.mark.parametrize("kw", [dict(gamma=-1.0), dict(s=0.9), dict(p=1.0),
                                dict(gamma=0.5, source_integrability=1.0)])
def test_problem_spec_rejects(kw):
    args = dict(p=2.0, s=0.3, gamma=1.0, dim=1)
    args.update(kw)
    with pytest.raises(ValueError):
        ProblemSpec(**args)


def test_negative_source_rejected(dom):
    with pytest.raises(ValueError, match="nonnegative"):
        ProblemSpec(2, 0.3, 1.0, 1, source=lambda x: x[:, 0]).source_field(dom)


@pytest.mark.parametrize("kw", [dict(inner_tol=0), dict(outer_tol=-1), dict(n_schedule=(1, 4, 2)),
                                dict(damping=0.0), dict(damping=1.5), dict(n_schedule=(0, 1))])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_regularized_problem_fields(dom):
    f = Field.from_interior(dom, np.linspace(0, 5, dom.n_interior))
    reg = RegularizedProblem.build(f, 3)
    assert reg.shift == 1 / 3
    assert np.all(reg.f_n.values <= f.values) and np.all(reg.f_n.values <= 3)


def test_regularized_rhs_example(dom):
    prob = ProblemSpec(2, 0.3, 1.0, 1)
    reg = RegularizedProblem.build(ones(dom), 2)
    np.testing.assert_allclose(regularized_rhs(prob, reg, Field.zeros(dom)).interior, 2.0)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 3.0])
def test_regularized_rhs_bound_and_monotone(dom, rng, gamma):
    prob = ProblemSpec(2, 0.3, gamma, 1)
    n = 4
    f = Field.from_interior(dom, 10 * rng.random(dom.n_interior))
    reg = RegularizedProblem.build(f, n)
    u = Field.from_interior(dom, rng.standard_normal(dom.n_interior))
    F = regularized_rhs(prob, reg, u).interior
    assert np.all(F <= n ** (gamma + 1) * (1 + 1e-14))
    big = regularized_rhs(prob, reg, Field.from_interior(dom, np.full(dom.n_interior, 1e6))).interior
    bigger = regularized_rhs(prob, reg, Field.from_interior(dom, np.full(dom.n_interior, 2e6))).interior
    assert np.all(bigger <= big)
    np.testing.assert_allclose(big, reg.f_n.interior * (1e6 + 1 / n) ** -gamma)


def test_dirichlet_zero_source(dom):
    W = assemble(dom, 0.3, 3.0)
    assert not solve_dirichlet(W, Field.zeros(dom), SolverConfig()).values.any()


def test_dirichlet_negative_source(dom):
    W = assemble(dom, 0.3, 2.0)
    with pytest.raises(ValueError):
        solve_dirichlet(W, ones(dom, -1.0), SolverConfig())


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0])
def test_dirichlet_homogeneity(dom, p):
    W = assemble(dom, 0.3, p)
    cfg = SolverConfig()
    u1 = solve_dirichlet(W, ones(dom), cfg).interior
    u2 = solve_dirichlet(W, ones(dom, 2.0), cfg).interior
    np.testing.assert_allclose(u2, 2 ** (1 / (p - 1)) * u1, rtol=1e-6)


def test_dirichlet_linear_for_p2(dom):
    W = assemble(dom, 0.3, 2.0)
    cfg = SolverConfig()
    f = Field.from_function(dom, lambda x: 1 + np.cos(2 * x[:, 0]))
    u1 = solve_dirichlet(W, f, cfg).interior
    u2 = solve_dirichlet(W, 2.0 * f, cfg).interior
    assert np.max(np.abs(u2 - 2 * u1)) <= 1e-10 * np.max(np.abs(u2))


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_dirichlet_minimizer_certificate(dom, rng, p):
    W = assemble(dom, 0.3, p)
    cfg = SolverConfig()
    F = Field.from_function(dom, lambda x: np.exp(-x[:, 0] ** 2))
    u, info = solve_dirichlet(W, F, cfg, full_output=True)
    assert info.converged
    assert u.is_nonnegative()
    load = F.interior * W.volume
    J = lambda v: W.energy(v) / p - load @ v
    v = u.interior
    h = 1e-4
    for _ in range(20):
        d = rng.standard_normal(v.size)
        slope = (J(v + h * d) - J(v)) / h
        assert slope >= -cfg.inner_tol * np.abs(d).sum() - 1e-10
    # Euler identity: S(u) = sum F u V at a critical point
    assert W.energy(v) == pytest.approx(load @ v, rel=1e-8)


def test_dirichlet_budget_flag(dom):
    W = assemble(dom, 0.3, 2.0)
    u, info = solve_dirichlet(W, ones(dom), SolverConfig(max_inner_iters=3), full_output=True)
    assert not info.converged


def test_dirichlet_matches_oracle_coarse():
    d = build_interval(-1, 1, 131, 0.25)
    W = assemble(d, 0.5, 2.0, strict=False)
    u = solve_dirichlet(W, ones(d), SolverConfig()).interior
    ref = torsion_profile(d.interior_points()[:, 0], 0.5)
    assert np.max(np.abs(u - ref)) / np.max(ref) < 0.01


def test_fixed_point_zero_source(dom):
    prob = ProblemSpec(2, 0.3, 1.0, 1, source=0.0)
    W = assemble(dom, 0.3, 2.0)
    reg = RegularizedProblem.build(Field.zeros(dom), 4)
    u, info = fixed_point(prob, reg, W, SolverConfig(), Field.zeros(dom), full_output=True)
    assert info.iterations == 1
    assert not u.values.any()


@pytest.mark.parametrize("p,gamma", [(2.0, 0.5), (2.0, 2.0), (3.0, 1.0)])
def test_fixed_point_two_inits_agree(dom, p, gamma):
    prob = ProblemSpec(p, 0.3, gamma, 1)
    W = assemble(dom, 0.3, p)
    cfg = SolverConfig()
    n = 8
    reg = RegularizedProblem.build(prob.source_field(dom), n)
    a = fixed_point(prob, reg, W, cfg, Field.zeros(dom))
    init = solve_dirichlet(W, reg.f_n * n ** gamma, cfg)
    b = fixed_point(prob, reg, W, cfg, init)
    assert np.max(np.abs(a.values - b.values)) <= 10 * cfg.outer_tol
    assert a.interior.min() > 0


def test_gamma_zero_reduces_to_dirichlet(dom):
    prob = ProblemSpec(2.0, 0.3, 0.0, 1, source=lambda x: 1 + 0.5 * np.cos(x[:, 0]))
    W = assemble(dom, 0.3, 2.0)
    cfg = SolverConfig(n_schedule=(1, 4, 16))
    rep = solve_singular(prob, dom, cfg, weights=W)
    direct = solve_dirichlet(W, prob.source_field(dom), cfg)
    assert np.max(np.abs(rep.solution.values - direct.values)) <= 10 * cfg.outer_tol


def test_degenerate_source(dom, quick_config):
    rep = solve_singular(ProblemSpec(2, 0.3, 1.0, 1, source=0.0), dom, quick_config)
    assert rep.degenerate
    assert not rep.solution.values.any()


@pytest.fixture(scope="module")
def gamma1_report(dom):
    return solve_singular(ProblemSpec(2.0, 0.3, 1.0, 1), dom,
                          SolverConfig(n_schedule=(1, 2, 4, 8, 16, 32)))


def test_records_ordered_and_monotone(gamma1_report):
    recs = gamma1_report.records
    assert [r.n for r in recs] == [1, 2, 4, 8, 16, 32]
    assert all(r.increment_min >= -1e-6 for r in recs[1:])
    mins = [r.interior_min for r in recs]
    assert mins[0] > 0 and all(b >= a - 1e-6 for a, b in zip(mins, mins[1:]))
    semis = [r.seminorm for r in recs]
    assert all(b >= a for a, b in zip(semis, semis[1:]))
    # discrete version of [u_n]^p <= int f
    assert semis[-1] <= recs[-1].source_mass


def test_report_serializes_without_timings(gamma1_report):
    d = gamma1_report.to_dict()
    assert "timings" not in d
    json.dumps(d)
    assert d["n_max"] == 32
    assert "timings" in gamma1_report.to_dict(include_timings=True)


def test_gamma2_diagnostics(dom):
    prob = ProblemSpec(2.0, 0.3, 2.0, 1)
    rep = solve_singular(prob, dom, SolverConfig(n_schedule=(1, 2, 4, 8, 16, 32)))
    for r in rep.records:
        assert r.seminorm_lower_order <= r.seminorm_boundary_power + 1e-8
        assert r.seminorm_boundary_power <= 1.05 * r.source_mass
    # the plain seminorm keeps growing faster than that of u^{3/2}
    assert rep.records[-1].seminorm > rep.records[-1].seminorm_boundary_power


def test_weights_domain_mismatch(dom):
    other = build_interval(-1, 1, 33)
    with pytest.raises(ValueError):
        solve_singular(ProblemSpec(2, 0.3, 1, 1), dom, SolverConfig(), weights=assemble(other, 0.3, 2))
