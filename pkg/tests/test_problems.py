# -*- coding: UTF-8 -*-
import json

import numpy as np
import pytest

from splitfeas.exceptions import ConfigError, GeneratorError, ProblemFormatError
from splitfeas.objectives import residuals
from splitfeas.problems import (
    FAMILIES,
    Q_SCALE,
    GeneratorSpec,
    generate,
    initial_point,
    load_problem,
    problem_digest,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)
from splitfeas.sets import Ball, Box, SparsityBall


class TestGenerate:
    def test_deterministic(self):
        spec = GeneratorSpec(n=7, m=5, set_family_Q="box", seed=11)
        first, second = generate(spec), generate(spec)
        assert first == second
        assert problem_digest(first) == problem_digest(second)
        assert generate(spec._replace(seed=12)) != first

    @pytest.mark.parametrize(
        "family", [f for f in FAMILIES if f not in ("simplex", "sparsity")]
    )
    def test_witness_solves_problem(self, family):
        problem = generate(GeneratorSpec(n=6, m=4, set_family_Q=family, seed=1))
        res_c, res_q = residuals(problem, problem.consistency_witness)
        assert res_c <= 1e-9
        assert res_q <= 1e-9

    @pytest.mark.parametrize("family", ["simplex", "sparsity"])
    def test_structured_c(self, family):
        problem = generate(GeneratorSpec(n=8, m=5, set_family_C=family, seed=2))
        assert problem.setC.kind == family
        assert problem.consistency_witness is not None

    def test_sparsity_q(self):
        problem = generate(GeneratorSpec(n=8, m=6, set_family_Q="sparsity", seed=3))
        assert problem.Q == SparsityBall(6, 1)
        assert problem.spectrum().rowgram_positive_definite

    def test_multiset(self):
        problem = generate(GeneratorSpec(n=6, m=[2, 3, 4], seed=4))
        assert problem.r == 3
        assert [a.rows for a in problem.maps] == [2, 3, 4]
        assert problem.metadata["generator"]["m"] == [2, 3, 4]

    @pytest.mark.parametrize("family", ["ball", "box"])
    def test_inconsistent_margin(self, family):
        # given
        spec = GeneratorSpec(
            n=5,
            m=4,
            set_family_C=family,
            set_family_Q=family,
            consistent=False,
            margin=0.3,
            seed=5,
        )

        # when
        problem = generate(spec)

        # then
        assert problem.consistency_witness is None
        assert problem.metadata["infeasibility_margin"] == 0.3
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = problem.setC.project(5.0 * rng.standard_normal(5))
            assert residuals(problem, x)[1] >= 0.3 - 1e-12

    def test_spectrum(self):
        problem = generate(GeneratorSpec(n=4, m=3, spectrum=[0.5, 2.0, 1.0]))
        summary = problem.spectrum()
        assert summary.gram_lambda_max == pytest.approx(4.0)
        assert summary.rowgram_lambda_min == pytest.approx(0.25)
        assert summary.gram_lambda_min == 0.0
        assert problem.metadata["singular_values"] == [[2.0, 1.0, 0.5]]

    def test_alg7_rescales_spectrum(self):
        problem = generate(
            GeneratorSpec(
                n=3, m=3, spectrum=[3.0, 1.0, 0.5], enforce_requirements_for="alg7"
            )
        )
        assert problem.spectrum().gram_condition < 2.0

    def test_alg7_needs_square(self):
        with pytest.raises(GeneratorError) as e:
            generate(GeneratorSpec(n=5, m=3, enforce_requirements_for="alg7"))
        assert "square" in str(e.value)

    def test_alg6_needs_full_row_rank(self):
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=5, enforce_requirements_for="wpadmm-prox"))
        with pytest.raises(GeneratorError):
            generate(
                GeneratorSpec(
                    n=3, m=3, spectrum=[1.0, 1.0, 0.0], enforce_requirements_for="alg6"
                )
            )

    def test_invalid_specs(self):
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, set_family_C="cube"))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=0, m=3))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, spectrum=[1.0, 1.0]))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, set_family_Q="simplex"))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, consistent=False, set_family_Q="sphere"))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, consistent=False, margin=0.0))
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(n=3, m=3, enforce_requirements_for="alg9"))


class TestInitialPoint:
    @pytest.mark.parametrize("seed", range(10))
    def test_differs_from_planted_solution(self, seed):
        # given
        problem = generate(GeneratorSpec(n=20, m=15, set_family_Q="box", seed=seed))

        # when
        x0 = initial_point(problem, seed)

        # then
        assert problem.setC.is_member(x0)
        assert np.linalg.norm(x0 - problem.consistency_witness) > 1e-3

    @pytest.mark.parametrize("family", ["ball", "box"])
    def test_generic_start_is_not_a_solution(self, family):
        for seed in range(5):
            problem = generate(
                GeneratorSpec(n=20, m=15, set_family_Q=family, seed=seed)
            )
            assert residuals(problem, initial_point(problem, seed))[1] > 0.0

    def test_q_is_small_next_to_c(self):
        problem = generate(GeneratorSpec(n=6, m=4, seed=3))
        assert problem.Q.radius <= 2.0 * Q_SCALE
        assert problem.setC.radius >= 1.0

    def test_deterministic(self):
        problem = generate(GeneratorSpec(n=5, m=3, seed=2))
        np.testing.assert_array_equal(
            initial_point(problem, 4), initial_point(problem, 4)
        )
        assert not np.array_equal(initial_point(problem, 4), initial_point(problem, 5))

    def test_negative_seed(self):
        problem = generate(GeneratorSpec(n=5, m=3, seed=2))
        with pytest.raises(ConfigError) as e:
            initial_point(problem, -1)
        assert "seed must be nonnegative" in str(e.value)


class TestProblemFormat:
    def test_save_and_load(self, tmpdir):
        # given
        problem = generate(GeneratorSpec(n=5, m=[3, 2, 2], set_family_C="box", seed=6))
        path = str(tmpdir.join("problem.json"))

        # when
        save_problem(problem, path)
        actual = load_problem(path)

        # then
        assert actual == problem
        assert actual.metadata == problem.metadata
        assert problem_digest(actual) == problem_digest(problem)

    def test_same_bytes(self, tmpdir):
        problem = generate(GeneratorSpec(n=4, m=3, seed=7))
        first, second = tmpdir.join("a.json"), tmpdir.join("b.json")
        save_problem(problem, str(first))
        save_problem(generate(GeneratorSpec(n=4, m=3, seed=7)), str(second))
        assert first.read_binary() == second.read_binary()

    def test_infinite_bounds(self):
        problem = problem_from_dict(
            {
                "version": 1,
                "C": {"kind": "box", "lower": ["-inf", 0.0], "upper": ["inf", 1.0]},
                "A": [[1.0, 0.0]],
                "Q": {"kind": "ball", "center": [0.0], "radius": 1.0},
            }
        )
        assert problem.setC == Box([-np.inf, 0.0], [np.inf, 1.0])
        assert problem.Q == Ball([0.0], 1.0)
        assert problem.consistency_witness is None

    def test_digest_ignores_metadata(self):
        problem = generate(GeneratorSpec(n=4, m=3, seed=8))
        digest = problem_digest(problem)
        problem.metadata = {"note": "changed"}
        assert problem_digest(problem) == digest

    def test_malformed_json(self, tmpdir):
        path = tmpdir.join("bad.json")
        path.write('{"version": 1,\n "C": }\n')
        with pytest.raises(ProblemFormatError) as e:
            load_problem(str(path))
        assert "line 2" in str(e.value)

    @pytest.mark.parametrize("field", ["version", "C", "A", "Q"])
    def test_missing_field(self, field):
        data = problem_to_dict(generate(GeneratorSpec(n=3, m=2, seed=9)))
        del data[field]
        with pytest.raises(ProblemFormatError) as e:
            problem_from_dict(data)
        assert str(e.value).startswith(field)

    def test_unsupported_version(self):
        data = problem_to_dict(generate(GeneratorSpec(n=3, m=2, seed=9)))
        data["version"] = 2
        with pytest.raises(ProblemFormatError) as e:
            problem_from_dict(data)
        assert "unsupported problem version 2" in str(e.value)

    def test_dimension_mismatch(self):
        data = problem_to_dict(generate(GeneratorSpec(n=3, m=2, seed=9)))
        data["Q"] = {"kind": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0}
        with pytest.raises(ProblemFormatError) as e:
            problem_from_dict(data)
        assert str(e.value).startswith("A/Q")

    def test_bad_witness(self, tmpdir):
        data = problem_to_dict(generate(GeneratorSpec(n=3, m=2, seed=9)))
        data["witness"] = [100.0, 100.0, 100.0]
        path = tmpdir.join("problem.json")
        path.write(json.dumps(data))
        with pytest.raises(ProblemFormatError) as e:
            load_problem(str(path))
        assert str(e.value).startswith("witness")

    def test_box_bounds_out_of_order(self):
        data = problem_to_dict(generate(GeneratorSpec(n=2, m=2, seed=9)))
        data["C"] = {"kind": "box", "lower": [1.0, 0.0], "upper": [0.0, 1.0]}
        with pytest.raises(ProblemFormatError) as e:
            problem_from_dict(data)
        assert str(e.value).startswith("C: ")
        assert "lower" in str(e.value)
