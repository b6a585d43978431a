"""
Exact solvers for the x-subproblems that have no projection formula.

Three subproblems need one:

* the proximal ADMM x-step on the SF1 model and the alternating minimization
  x-step, both of the form ``min_{x in C} (1/2) x^T (alpha A^TA + beta I) x - b^T x``
  (``QuadraticOverSet``);
* the weighted proximal ADMM x-step with ``N = tau I``,
  ``min_x (1/2) d_C^2(x) + (s/2)||x - v||^2`` with the quadratic part
  ``rho A^TA + tau I`` (``ProxDistance``).

Both reduce to a single projection when ``A^TA = c^2 I``; otherwise they
iterate to ``inner_tol`` and need C convex.
"""
import logging

import numpy as np
import scipy.linalg

from splitfeas.config import InnerBackend
from splitfeas.exceptions import SubproblemError

log = logging.getLogger(__name__)


class XSubproblem(object):
    """
    Base class: picks the backend once per run.

    :param problem: single-set problem
    :param config: solver configuration
    :param str name: subproblem name used in errors
    """

    def __init__(self, problem, config, name):
        self.problem = problem
        self.name = name
        self.tol = config.inner_tol
        self.max_iter = config.inner_max_iter
        self.c2 = problem.A.is_scaled_orthogonal()
        backend = config.inner_backend

        if backend == InnerBackend.FIXED_POINT:
            self.closed_form = False
        elif self.c2 is not None:
            self.closed_form = True
        elif backend in (InnerBackend.ORTHOGONAL, InnerBackend.NONE):
            raise SubproblemError(
                name,
                "A^TA is not a multiple of the identity and the iterative "
                "inner solver is disabled (inner_backend={0})".format(backend),
            )
        else:
            self.closed_form = False

        if not self.closed_form and not problem.setC.is_convex:
            raise SubproblemError(
                name,
                "no exact solver for non-convex C ({0}) with a "
                "non-orthogonal A".format(problem.setC.kind),
            )
        log.debug(
            "%s subproblem: %s backend",
            name,
            "closed form" if self.closed_form else "iterative",
        )

    def _not_converged(self, step):
        raise SubproblemError(
            self.name,
            "inner solver did not converge in {0} iterations "
            "(last step {1:.3g} > inner_tol {2:.3g})".format(
                self.max_iter, step, self.tol
            ),
        )


class QuadraticOverSet(XSubproblem):
    """
    ``min_{x in C} (1/2) x^T (alpha A^TA + beta I) x - b^T x``.

    The iterative backend is projected gradient with step ``1/L``,
    ``L = alpha lambda_max(A^TA) + beta``, started at the previous iterate,
    so the objective never increases.
    """

    def __init__(self, problem, config, name, alpha, beta):
        super(QuadraticOverSet, self).__init__(problem, config, name)
        self.alpha = alpha
        self.beta = beta
        if self.closed_form:
            self.scale = alpha * self.c2 + beta
        else:
            self.lipschitz = alpha * problem.spectrum().gram_lambda_max + beta
            if not self.lipschitz > 0:
                raise SubproblemError(name, "quadratic part vanishes")

    def solve(self, b, x_start):
        setC = self.problem.setC
        if self.closed_form:
            return setC.project(b / self.scale)

        a = self.problem.A
        x = np.array(x_start, dtype=float)
        step = np.inf
        for i in range(self.max_iter):
            grad = self.alpha * a.apply_adjoint(a.apply(x)) + self.beta * x - b
            x_new = setC.project(x - grad / self.lipschitz)
            step = np.linalg.norm(x_new - x)
            x = x_new
            if step <= self.tol:
                log.debug("%s subproblem converged in %d iterations", self.name, i + 1)
                return x
        self._not_converged(step)


class ProxDistance(XSubproblem):
    """
    Weighted proximal ADMM x-step with ``N = tau I``:
    ``min_x (1/2) d_C^2(x) + <y, Ax - u> + (rho/2)||Ax - u||^2 + (tau/2)||x - x^k||^2``.

    The optimality condition ``M x = P_C(x) + b`` with
    ``M = rho A^TA + (1 + tau) I`` is iterated as a fixed point; ``M`` is
    Cholesky-factorized once. The contraction factor is at most
    ``1/(1 + tau)``.
    """

    def __init__(self, problem, config, name):
        super(ProxDistance, self).__init__(problem, config, name)
        self.rho = config.rho
        self.tau = config.tau
        if self.closed_form:
            self.s = self.rho * self.c2 + self.tau
        else:
            a = problem.A.entries
            m = self.rho * a.T.dot(a) + (1.0 + self.tau) * np.eye(problem.n)
            try:
                self.factor = scipy.linalg.cho_factor(m)
            except np.linalg.LinAlgError as e:
                raise SubproblemError(name, "factorization failed: {0}".format(e))

    def solve(self, b, x_start):
        """
        :param b: ``rho A^T u - A^T y + tau x^k``
        :param x_start: starting point of the fixed-point iteration
        """
        setC = self.problem.setC
        if self.closed_form:
            v = b / self.s
            return v + (setC.project(v) - v) / (1.0 + self.s)

        x = np.array(x_start, dtype=float)
        step = np.inf
        for i in range(self.max_iter):
            x_new = scipy.linalg.cho_solve(self.factor, setC.project(x) + b)
            step = np.linalg.norm(x_new - x)
            x = x_new
            if step <= self.tol:
                log.debug("%s subproblem converged in %d iterations", self.name, i + 1)
                return x
        self._not_converged(step)
