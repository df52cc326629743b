"""Invariant suite, fault injection, moduli, steady state, weak form."""

import dataclasses
import math

import numpy as np
import pytest

import plateflow as pf
from plateflow.step import contact_tolerance

from conftest import bump


@pytest.fixture(scope="module")
def trivial_run():
    grid = pf.build_grid(1, [1.0], [5])
    problem = pf.build_problem(grid, lambda x: -1.0, lambda x: 0.0)
    return pf.run_flow(problem, 1.0, 4, pf.StepConfig(tau=1.0))


@pytest.fixture(scope="module")
def node_run():
    grid = pf.build_grid(1, [1.0], [1])
    problem = pf.build_problem(grid, lambda x: 0.5 if x == 0.5 else -1.0,
                               lambda x: float(x == 0.5))
    return pf.run_flow(problem, 1.0, 1, pf.StepConfig(tau=1.0))


def _by_name(reports):
    return {r.name: r for r in reports}


class TestInvariantSuite:
    def test_trivial_flow_all_pass_with_full_margin(self, trivial_run):
        reports = pf.run_invariant_suite(trivial_run)
        assert pf.suite_passed(reports)
        for r in reports:
            assert r.observed <= 0.0
            if r.bound in (None, 0.0):
                assert r.margin == 1.0

    def test_hand_example_dissipation(self, node_run):
        report = _by_name(pf.run_invariant_suite(node_run))["dissipation-bound"]
        assert report.passed
        assert report.observed == pytest.approx(0.125)
        assert report.bound == pytest.approx(96.0)

    def test_reports_recomputable(self, w1_trajectory):
        for r in pf.run_invariant_suite(w1_trajectory):
            if r.bound is not None:
                assert r.passed == (r.observed <= r.bound * (1.0 + r.tolerance))

    def test_w1_suite_passes(self, w1_trajectory):
        assert pf.suite_passed(pf.run_invariant_suite(w1_trajectory))

    def test_mass_check_with_refined_run(self, w1_trajectory, w1_problem):
        _, problem = w1_problem
        refined = pf.run_flow(problem, 0.5, 128, pf.StepConfig(tau=1.0))
        report = _by_name(pf.run_invariant_suite(w1_trajectory, refined=refined))[
            "mass-square-sum"
        ]
        assert report.bound is not None
        assert report.passed


class TestFaultInjection:
    def _corrupt_step(self, tr, index, **changes):
        steps = list(tr.steps)
        steps[index] = dataclasses.replace(steps[index], **changes)
        return dataclasses.replace(tr, steps=tuple(steps))

    def test_dip_below_obstacle_flips_only_feasibility(self, w1_trajectory):
        tr = w1_trajectory
        f = tr.problem.f_interior
        u = tr.steps[3].u.copy()
        j = int(np.argmin(u - f))
        u[j] = f[j] - 10.0 * contact_tolerance(f)
        u.setflags(write=False)
        corrupted = self._corrupt_step(tr, 3, u=u)
        before = _by_name(pf.run_invariant_suite(tr))
        after = _by_name(pf.run_invariant_suite(corrupted))
        flipped = [name for name in before if before[name].passed != after[name].passed]
        assert flipped == ["feasibility"]

    def test_negated_multiplier_flips_only_positivity(self, w1_trajectory):
        tr = w1_trajectory
        mu = tr.steps[5].multiplier.copy()
        j = int(np.argmax(mu))
        assert mu[j] > 0.0
        mu[j] = -mu[j]
        mu.setflags(write=False)
        corrupted = self._corrupt_step(tr, 5, multiplier=mu)
        before = _by_name(pf.run_invariant_suite(tr))
        after = _by_name(pf.run_invariant_suite(corrupted))
        flipped = [name for name in before if before[name].passed != after[name].passed]
        assert flipped == ["multiplier-positivity"]

    def test_laplacian_bound_catches_shifted_state(self, node_run):
        u = node_run.steps[0].u + 1.0
        u.setflags(write=False)
        corrupted = self._corrupt_step(node_run, 0, u=u)
        report = _by_name(pf.run_invariant_suite(corrupted))["laplacian-bound"]
        assert not report.passed


class TestHolderModuli:
    def test_trivial_quotients_zero(self, trivial_run):
        moduli = pf.holder_moduli(trivial_run)
        assert moduli.l2_quotient == 0.0
        assert moduli.sup_quotient == 0.0
        assert moduli.grad_sup_quotient == 0.0

    def test_l2_quotient_under_bound(self, w1_trajectory):
        moduli = pf.holder_moduli(w1_trajectory)
        bound = math.sqrt(2.0 * w1_trajectory.energies[0])
        assert moduli.l2_quotient <= bound * (1.0 + 1e-9)

    def test_gradient_quotient_needs_1d(self, w2_trajectory):
        moduli = pf.holder_moduli(w2_trajectory)
        assert moduli.grad_sup_quotient is None
        with pytest.raises(ValueError):
            pf.gradient_sup_quotient(w2_trajectory)

    def test_gradient_quotient_stable_under_refinement(self):
        # continuum constant with 10% slack, on resolved grids and an initial
        # state whose wall trace is negligible (a wide bump leaves an O(1) kink
        # at the wall whose first difference grows like 1/h, so stability under
        # refinement needs trace-compatible data)
        quotients = []
        for m, n in ((63, 64), (127, 128)):
            grid = pf.build_grid(1, [1.0], [m])
            problem = pf.build_problem(grid, bump(2, 0.5, 0.1, -0.5), bump(3, 0.5, 0.12))
            tr = pf.run_flow(problem, 0.5, n, pf.StepConfig(tau=1.0))
            bound = 2.0 ** (13.0 / 8.0) * math.sqrt(tr.energies[0]) * 1.1
            quotient = pf.gradient_sup_quotient(tr)
            assert quotient <= bound
            quotients.append(quotient)
        assert 0.5 <= quotients[1] / quotients[0] <= 2.0


class TestEllipticObstacle:
    def test_single_node_contact(self):
        grid = pf.build_grid(1, [1.0], [1])
        problem = pf.build_problem(grid, lambda x: 0.5 if x == 0.5 else -1.0,
                                   lambda x: 1.0 if x == 0.5 else 0.0)
        u = pf.solve_elliptic_obstacle(problem, pf.StepConfig(tau=1.0))
        assert u[0] == pytest.approx(0.5)

    def test_free_problem_returns_zero(self):
        grid = pf.build_grid(1, [1.0], [9])
        problem = pf.build_problem(grid, lambda x: -1.0, lambda x: 0.0)
        u = pf.solve_elliptic_obstacle(problem, pf.StepConfig(tau=1.0))
        np.testing.assert_allclose(u, np.zeros(9), atol=1e-12)

    def test_flow_tail_reaches_steady_state(self):
        grid = pf.build_grid(1, [1.0], [31])
        problem = pf.build_problem(grid, bump(1.0, 0.5, 0.12, -0.3), bump(2, 0.5, 0.2))
        cfg = pf.StepConfig(tau=1.0)
        tr = pf.run_flow(problem, 10.0, 32, cfg)
        steady = pf.solve_elliptic_obstacle(problem, cfg)
        assert pf.l2_norm(grid, tr.state(32) - steady) <= 1e-6
        scale = 1.0 + float(np.max(np.abs(tr.state(32))))
        assert float(np.max(np.abs(tr.steps[-1].velocity))) <= 1e-8 * scale


class TestWeakFormResidual:
    def test_solution_as_test_gives_zero(self, node_run):
        assert pf.weak_form_residual(node_run, [node_run.steps[0].u]) == 0.0

    def test_nonnegative_shift(self, w1_trajectory):
        tr = w1_trajectory
        rng = np.random.default_rng(4)
        shift = np.abs(rng.normal(size=tr.problem.grid.n_interior))
        tests = [s.u + shift for s in tr.steps]
        assert pf.weak_form_residual(tr, tests) >= -1e-9

    def test_callable_form(self, node_run):
        residual = pf.weak_form_residual(node_run, lambda t: node_run.steps[0].u + 1.0)
        assert residual >= -1e-12

    def test_randomized_admissible_tests(self):
        grid = pf.build_grid(1, [1.0], [7])
        problem = pf.build_problem(grid, bump(0.4, 0.5, 0.15, -0.2), bump(1.0, 0.5, 0.25))
        tr = pf.run_flow(problem, 0.05, 8, pf.StepConfig(tau=1.0))
        rng = np.random.default_rng(99)
        f = problem.f_interior
        for _ in range(100):
            tests = [
                np.maximum(s.u + rng.normal(scale=0.5, size=grid.n_interior), f)
                for s in tr.steps
            ]
            scale = 1.0 + sum(
                tr.tau * grid.quad_weight * float(np.sum(np.abs(w - s.u)))
                for w, s in zip(tests, tr.steps)
            )
            assert pf.weak_form_residual(tr, tests) >= -1e-9 * scale

    def test_infeasible_test_rejected(self, node_run):
        bad = [node_run.steps[0].u - 1.0]
        with pytest.raises(pf.InfeasibleTestTrajectory):
            pf.weak_form_residual(node_run, bad)


def test_cauchy_difference_requires_multiple(trivial_run):
    grid = trivial_run.problem.grid
    problem = trivial_run.problem
    other = pf.run_flow(problem, 1.0, 6, pf.StepConfig(tau=1.0))
    with pytest.raises(ValueError):
        pf.cauchy_difference(trivial_run, other)
