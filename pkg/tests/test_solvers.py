# -*- coding: UTF-8 -*-
import logging

import numpy as np
import pytest

from splitfeas.algorithms import Algorithm, NMode
from splitfeas.config import ConfigBuilder
from splitfeas.exceptions import ConfigError, DimensionError, NumericalError
from splitfeas.linops import LinearMap
from splitfeas.objectives import ProblemInstance
from splitfeas.problems import GeneratorSpec, generate, initial_point
from splitfeas.sets import Ball, Box
from splitfeas.solvers import (
    STEPS,
    IterateState,
    initial_state,
    run,
    step_am_sf1p,
    step_cq_multiset,
    step_cq_sf1p,
    step_padmm_sf1,
    step_pg_sf1p,
    step_pg_sf3,
    step_wpadmm_sf4,
)
from splitfeas.trace import Termination

# never stop on tolerances
EXHAUST = {"residual_tol": 1e-300, "step_tol": 1e-300}

EVERY_STEP = [
    (Algorithm.PADMM_SF1, {}),
    (Algorithm.PG_SF1P, {}),
    (Algorithm.AM_SF1P, {}),
    (Algorithm.CQ_SF1P, {}),
    (Algorithm.PG_SF3, {}),
    (Algorithm.WPADMM_SF4, {"n_mode": NMode.PROX_IDENTITY}),
    (Algorithm.WPADMM_SF4, {"n_mode": NMode.LINEARIZED}),
    (Algorithm.CQ_MULTISET, {}),
]


def line_problem():
    """C = R, A = 1, Q = {0}."""
    return ProblemInstance(Box.free(1), LinearMap([[1.0]]), Box([0.0], [0.0]))


def identity_problem(setC, setQ):
    return ProblemInstance(setC, LinearMap(np.eye(2)), setQ)


def planted_problem(seed):
    """Orthogonal A; the planted solution sits at the center of C and of Q."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    x_star = rng.standard_normal(4)
    problem = ProblemInstance(
        Ball(x_star, 1.0),
        LinearMap(q),
        Ball(q.dot(x_star), 1.0),
        consistency_witness=x_star,
    )
    return problem, x_star


def xs(trace):
    return trace.vectors("x")


class TestStepFunctions:
    def test_cq_one_step(self):
        # given
        problem = line_problem()
        config = ConfigBuilder().cq(problem, {"lam": 1.0, "tau": 21.0 / 20.0})
        state = initial_state(problem, config, [21.0])

        # when
        actual = step_cq_sf1p(state, problem, config)

        # then
        assert actual.x[0] == pytest.approx(1.0, abs=1e-13)
        assert actual.u[0] == 0.0
        assert actual.k == 1

    def test_pg_sf1p_is_parallel(self):
        problem = identity_problem(Box.free(2), Ball([0.0, 0.0], 1.0))
        config = ConfigBuilder().pg_sf1p(problem, {"lam": 1.0, "tau": 4.0})
        state = IterateState(np.array([1.0, 0.0]), np.array([0.0, 0.5]))
        actual = step_pg_sf1p(state, problem, config)
        # both updates read r = x - u = (1, -0.5)
        np.testing.assert_allclose(actual.u, [0.25, 0.375])
        np.testing.assert_allclose(actual.x, [0.75, 0.125])

    def test_am_closed_form(self):
        problem = ProblemInstance(
            Ball([0.0, 0.0], 1.0), LinearMap(2.0 * np.eye(2)), Ball([0.0, 0.0], 1.0)
        )
        config = ConfigBuilder().am_sf1p(problem, {})
        state = IterateState(np.zeros(2), np.array([1.0, 0.0]))
        actual = step_am_sf1p(state, problem, config)
        # argmin_{x in C} ||2x - u||^2 = P_C(u / 2)
        np.testing.assert_allclose(actual.x, [0.5, 0.0])
        np.testing.assert_allclose(actual.u, [1.0, 0.0])

    def test_padmm_one_step(self):
        # given
        problem = identity_problem(Box.free(2), Ball([0.0, 0.0], 1.0))
        config = ConfigBuilder().padmm_sf1(
            problem, {"rho": 2.0, "tau1": 0.0, "tau2": 2.0}
        )
        state = IterateState(np.array([2.0, 0.0]), np.zeros(2), np.zeros(2))

        # when
        actual = step_padmm_sf1(state, problem, config)

        # then
        np.testing.assert_allclose(actual.u, [1.0, 0.0])
        # x = (rho u - y + tau2 x) / (rho + tau2)
        np.testing.assert_allclose(actual.x, [1.5, 0.0])
        # y = y + rho (x - u)
        np.testing.assert_allclose(actual.y, [1.0, 0.0])

    def test_padmm_without_u_proximal_term_ignores_u(self):
        # given
        problem = identity_problem(Ball([0.0, 0.0], 1.0), Ball([0.0, 0.0], 1.0))
        config = ConfigBuilder().padmm_sf1(problem, {"rho": 2.0, "tau1": 0.0})
        x, y = np.array([3.0, 0.0]), np.zeros(2)

        # when
        first, second = [
            step_padmm_sf1(IterateState(x, np.array(u), y), problem, config)
            for u in ([0.0, 0.5], [-4.0, 1.0])
        ]

        # then: u = P_Q(Ax)
        np.testing.assert_allclose(first.u, [1.0, 0.0])
        np.testing.assert_array_equal(first.u, second.u)
        np.testing.assert_array_equal(first.x, second.x)

    def test_wpadmm_linearized_one_step(self):
        # given
        problem = identity_problem(Ball([0.0, 0.0], 1.0), Ball([0.0, 0.0], 5.0))
        config = ConfigBuilder().wpadmm_sf4(
            problem, {"rho": 1.0, "tau": 2.0, "n_mode": NMode.LINEARIZED}
        )
        state = IterateState(np.array([2.0, 0.0]), np.zeros(2), np.zeros(2))

        # when
        actual = step_wpadmm_sf4(state, problem, config)

        # then
        np.testing.assert_allclose(actual.u, [2.0, 0.0])
        # x - ((x - P_C x) + A^T(y + rho (Ax - u))) / tau
        np.testing.assert_allclose(actual.x, [1.5, 0.0])
        np.testing.assert_allclose(actual.y, [-0.5, 0.0])

    def test_pg_sf3_one_step(self):
        problem = identity_problem(Ball([0.0, 0.0], 10.0), Ball([0.0, 0.0], 1.0))
        config = ConfigBuilder().pg_sf3(problem, {"tau": 1.25})
        actual = step_pg_sf3(IterateState(np.array([2.0, 0.0])), problem, config)
        np.testing.assert_allclose(actual.x, [1.2, 0.0])
        assert actual.u is None
        assert actual.y is None

    def test_multiset_one_step(self):
        # given
        problem = ProblemInstance(
            Box.free(2),
            [LinearMap(np.eye(2)), LinearMap(np.eye(2))],
            [Ball([0.0, 0.0], 1.0), Box([-1.0, -1.0], [1.0, 1.0])],
        )
        config = ConfigBuilder().cq_multiset(problem, {"tau": 2.5})

        # when
        actual = step_cq_multiset(IterateState(np.array([2.0, 0.0])), problem, config)

        # then: both sets pull with (1, 0)
        np.testing.assert_allclose(actual.x, [1.2, 0.0])

    @pytest.mark.parametrize("algorithm, params", EVERY_STEP)
    def test_solution_is_a_fixed_point(self, algorithm, params):
        # given
        problem, x_star = planted_problem(4)
        config = ConfigBuilder().build(algorithm, problem, params)
        state = initial_state(problem, config, x_star)

        # when
        actual = STEPS[algorithm](state, problem, config)

        # then
        np.testing.assert_allclose(actual.x, x_star, rtol=0, atol=1e-12)
        if state.u is not None:
            np.testing.assert_allclose(actual.u, state.u, rtol=0, atol=1e-12)
        if state.y is not None:
            np.testing.assert_allclose(actual.y, 0.0, rtol=0, atol=1e-12)

    @pytest.mark.parametrize(
        "algorithm, params",
        [
            (Algorithm.PADMM_SF1, {}),
            (Algorithm.WPADMM_SF4, {"n_mode": NMode.PROX_IDENTITY}),
            (Algorithm.WPADMM_SF4, {"n_mode": NMode.LINEARIZED}),
        ],
    )
    def test_multiplier_update(self, algorithm, params):
        # given
        problem = generate(
            GeneratorSpec(n=4, m=4, enforce_requirements_for="alg6", seed=2)
        )
        config = ConfigBuilder().build(algorithm, problem, params)
        y0 = np.random.default_rng(3).standard_normal(4)
        state = initial_state(problem, config, initial_point(problem, 2), y0=y0)

        for _ in range(5):
            # when
            actual = STEPS[algorithm](state, problem, config)

            # then
            expected = config.rho * (problem.A.apply(actual.x) - actual.u)
            scale = 1.0 + np.linalg.norm(state.y) + np.linalg.norm(actual.y)
            np.testing.assert_allclose(
                actual.y - state.y, expected, rtol=0, atol=1e-10 * scale
            )
            state = actual

    def test_steps_do_not_mutate_state(self):
        problem = line_problem()
        config = ConfigBuilder().cq(problem, {})
        state = initial_state(problem, config, [3.0])
        before = state.x.copy()
        step_cq_sf1p(state, problem, config)
        np.testing.assert_array_equal(state.x, before)


class TestGeometricExample:
    def test_cq_geometric_sequence(self):
        problem = line_problem()
        config = ConfigBuilder().cq(
            problem, dict(EXHAUST, lam=1.0, tau=21.0, max_iter=50)
        )
        trace = run(problem, config, [1.0])
        assert len(trace) == 51
        for record in trace:
            assert abs(record.x[0] - (20.0 / 21.0) ** record.k) <= 1e-13

    def test_pg_sf3_matches(self):
        problem = line_problem()
        config = ConfigBuilder().pg_sf3(problem, dict(EXHAUST, tau=21.0, max_iter=50))
        trace = run(problem, config, [1.0])
        for record in trace:
            assert abs(record.x[0] - (20.0 / 21.0) ** record.k) <= 1e-13


class TestMonotonicity:
    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize(
        "algorithm", [Algorithm.PG_SF1P, Algorithm.AM_SF1P, Algorithm.CQ_SF1P]
    )
    def test_penalized_objective_never_increases(self, algorithm, seed):
        # given
        problem = generate(GeneratorSpec(n=5, m=5, set_family_Q="box", seed=seed))
        config = ConfigBuilder().build(algorithm, problem, {"max_iter": 100})

        # when
        trace = run(problem, config, initial_point(problem, seed))

        # then
        values = [r.objective.value for r in trace]
        assert len(values) > 1
        for before, after in zip(values, values[1:]):
            assert after <= before + 1e-10 * (1.0 + abs(before))


class TestEquivalences:
    @pytest.mark.parametrize("seed", range(20))
    def test_cq_equals_pg_sf3(self, seed):
        # given
        problem = generate(GeneratorSpec(n=8, m=6, seed=seed))
        lam = 2.0
        tau = 1.5 * lam * problem.spectrum().gram_lambda_max
        builder = ConfigBuilder()
        x0 = initial_point(problem, seed)

        # when
        cq = run(
            problem,
            builder.cq(problem, dict(EXHAUST, lam=lam, tau=tau, max_iter=200)),
            x0,
        )
        pg = run(
            problem,
            builder.pg_sf3(problem, dict(EXHAUST, tau=tau / lam, max_iter=200)),
            x0,
        )

        # then
        k = min(len(cq), len(pg))
        assert k > 1
        np.testing.assert_allclose(xs(cq)[:k], xs(pg)[:k], rtol=0, atol=1e-12)

    def test_multiset_with_one_set_is_pg_sf3(self):
        problem = generate(GeneratorSpec(n=6, m=4, set_family_Q="box", seed=3))
        x0 = initial_point(problem, 3)
        tau = 1.2 * problem.spectrum().gram_lambda_max
        params = dict(EXHAUST, tau=tau, max_iter=100)
        multi = run(problem, ConfigBuilder().cq_multiset(problem, params), x0)
        single = run(problem, ConfigBuilder().pg_sf3(problem, params), x0)
        assert len(multi) == len(single)
        assert np.array_equal(xs(multi), xs(single))

    def test_wpadmm_modes_coincide_on_orthogonal_map(self):
        # given: orthogonal A and iterates inside C
        rng = np.random.default_rng(9)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        x_star = rng.standard_normal(4)
        problem = ProblemInstance(
            Ball(np.zeros(4), 100.0),
            LinearMap(q),
            Ball(q.dot(x_star), 1.0),
            consistency_witness=x_star,
        )
        rho, tau_lin = 1.0, 3.0
        x0 = initial_point(problem, 1)
        builder = ConfigBuilder()

        # when
        lin = run(
            problem,
            builder.wpadmm_sf4(
                problem,
                dict(
                    EXHAUST,
                    rho=rho,
                    tau=tau_lin,
                    n_mode=NMode.LINEARIZED,
                    max_iter=30,
                ),
            ),
            x0,
        )
        prox = run(
            problem,
            builder.wpadmm_sf4(
                problem,
                dict(
                    EXHAUST,
                    rho=rho,
                    tau=tau_lin - rho,
                    n_mode=NMode.PROX_IDENTITY,
                    inner_tol=1e-10,
                    max_iter=30,
                ),
            ),
            x0,
        )

        # then
        assert len(lin) == len(prox)
        np.testing.assert_allclose(xs(lin), xs(prox), rtol=0, atol=1e-10)


class TestConvergence:
    @pytest.mark.parametrize("seed", range(3))
    def test_cq_solves_consistent_problem(self, seed):
        problem = generate(
            GeneratorSpec(n=20, m=15, set_family_Q="box", seed=seed)
        )
        trace = run(
            problem, ConfigBuilder().cq(problem, {}), initial_point(problem, seed)
        )
        assert len(trace) > 1
        assert trace.termination_reason == Termination.RESIDUAL_TOL
        assert max(trace.final.residual_C, trace.final.residual_Q) <= 1e-6

    def test_multiset_solves_consistent_problem(self):
        problem = generate(GeneratorSpec(n=10, m=[4, 5, 6], seed=3))
        trace = run(
            problem, ConfigBuilder().cq_multiset(problem, {}), initial_point(problem, 3)
        )
        assert len(trace) > 1
        assert trace.termination_reason == Termination.RESIDUAL_TOL

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("n_mode", NMode.ALL)
    def test_wpadmm_solves_convex_problem(self, n_mode, seed):
        # given
        problem = generate(
            GeneratorSpec(n=6, m=6, enforce_requirements_for="alg7", seed=seed)
        )
        config = ConfigBuilder().wpadmm_sf4(problem, {"n_mode": n_mode})

        # when
        trace = run(problem, config, initial_point(problem, seed))

        # then
        assert len(trace) > 1
        assert trace.termination_reason == Termination.RESIDUAL_TOL
        assert max(trace.final.residual_C, trace.final.residual_Q) <= 1e-6

    def test_inconsistent_problem_keeps_its_margin(self):
        problem = generate(
            GeneratorSpec(n=6, m=5, consistent=False, margin=0.5, seed=4)
        )
        trace = run(
            problem,
            ConfigBuilder().cq(problem, {"max_iter": 500}),
            initial_point(problem, 4),
        )
        assert trace.termination_reason != Termination.RESIDUAL_TOL
        assert min(r.residual_Q for r in trace) >= 0.25


class TestRun:
    def test_record_zero_is_initial_state(self):
        problem = line_problem()
        trace = run(problem, ConfigBuilder().cq(problem, {"max_iter": 3}), [2.0])
        first = trace[0]
        assert first.k == 0
        assert first.x[0] == 2.0
        assert first.u[0] == 0.0
        assert first.step_norm_x is None
        assert first.objective.value == pytest.approx(2.0)

    def test_max_iter(self):
        problem = line_problem()
        config = ConfigBuilder().cq(problem, dict(EXHAUST, max_iter=3))
        trace = run(problem, config, [2.0])
        assert len(trace) == 4
        assert trace.termination_reason == Termination.MAX_ITER

    def test_already_solved(self):
        problem = line_problem()
        trace = run(problem, ConfigBuilder().cq(problem, {}), [0.0])
        assert len(trace) == 1
        assert trace.termination_reason == Termination.RESIDUAL_TOL

    def test_step_tol(self):
        # the CQ fixed point of an inconsistent problem
        problem = ProblemInstance(
            Box([0.0], [1.0]), LinearMap([[1.0]]), Box([3.0], [4.0])
        )
        config = ConfigBuilder().cq(problem, {"step_tol": 1e-3})
        trace = run(problem, config, [0.0])
        assert trace.termination_reason == Termination.STEP_TOL

    def test_deterministic(self):
        problem = generate(
            GeneratorSpec(
                n=5, m=5, set_family_Q="sparsity", enforce_requirements_for="alg7"
            )
        )
        config = ConfigBuilder().wpadmm_sf4(
            problem, {"n_mode": NMode.LINEARIZED, "max_iter": 40}
        )
        first = run(problem, config, initial_point(problem, 0))
        second = run(problem, config, initial_point(problem, 0))
        assert np.array_equal(xs(first), xs(second))
        assert np.array_equal(first.vectors("y"), second.vectors("y"))

    def test_lagrangian_state(self):
        problem = generate(GeneratorSpec(n=5, m=4, seed=2))
        config = ConfigBuilder().padmm_sf1(problem, {"max_iter": 5})
        trace = run(problem, config, initial_point(problem, 0))
        np.testing.assert_array_equal(trace[0].y, np.zeros(4))
        assert trace[0].lagrangian is not None

    def test_u0_and_y0(self):
        problem = line_problem()
        builder = ConfigBuilder()
        with pytest.raises(ConfigError):
            run(problem, builder.cq(problem, {}), [1.0], u0=[0.0])
        with pytest.raises(ConfigError):
            run(problem, builder.pg_sf1p(problem, {}), [1.0], y0=[0.0])
        trace = run(problem, builder.pg_sf1p(problem, {"max_iter": 1}), [1.0], u0=[0.5])
        assert trace[0].u[0] == 0.5

    def test_bad_x0(self):
        problem = line_problem()
        with pytest.raises(DimensionError):
            run(problem, ConfigBuilder().cq(problem, {}), [1.0, 2.0])
        with pytest.raises(ConfigError):
            run(problem, ConfigBuilder().cq(problem, {}), [float("nan")])

    def test_non_finite_iterate(self):
        problem = line_problem()
        config = ConfigBuilder().cq(problem, {}).replace(tau=1e-300)
        with pytest.raises(NumericalError):
            run(problem, config, [1.0])

    def test_experimental_warning(self, caplog):
        problem = generate(GeneratorSpec(n=4, m=3, seed=1))
        config = ConfigBuilder().padmm_sf1(problem, {"max_iter": 2})
        with caplog.at_level(logging.WARNING, logger="splitfeas.solvers"):
            run(problem, config, initial_point(problem, 0))
        assert "PADMM_SF1 has no known convergence theory" in caplog.text

    def test_overridden_requirements_are_recorded(self):
        problem = ProblemInstance(
            Ball(np.zeros(2), 5.0),
            LinearMap(np.diag([3.0, 1.0])),
            Ball(np.zeros(2), 1.0),
        )
        config = ConfigBuilder().wpadmm_sf4(
            problem,
            {"n_mode": NMode.LINEARIZED, "override_requirements": True, "max_iter": 2},
        )
        with pytest.warns(UserWarning):
            trace = run(problem, config, [1.0, 1.0])
        assert len(trace.warnings) == 1
        assert trace.algorithm == Algorithm.WPADMM_SF4
