"""
Update rules and the driver loop.

Every ``step_*`` function maps an ``IterateState`` to the next one and has
no side effects; ``run`` iterates one of them and records the trace. Steps
whose x-update needs an inner solver accept the per-run ``Workspace`` so the
solver (and its matrix factorization) is set up once.
"""
import logging
from collections import namedtuple

import numpy as np

from splitfeas.algorithms import Algorithm, NMode, is_experimental
from splitfeas.config import check_requirements
from splitfeas.exceptions import ConfigError, DimensionError, NumericalError
from splitfeas.objectives import (
    Model,
    eval_augmented_lagrangian,
    eval_f1_penalized,
    eval_f2_sf4,
    eval_sf3,
    residuals,
)
from splitfeas.subproblems import ProxDistance, QuadraticOverSet
from splitfeas.trace import IterateRecord, IterateTrace, Termination

log = logging.getLogger(__name__)


IterateState = namedtuple("IterateState", ["x", "u", "y", "k"])
IterateState.__new__.__defaults__ = (None, None, 0)


class Workspace(object):
    """Per-run cache of the exact x-subproblem solver."""

    def __init__(self, problem, config):
        self.subproblem = None
        algorithm = config.algorithm
        if algorithm == Algorithm.PADMM_SF1:
            self.subproblem = QuadraticOverSet(
                problem, config, "PADMM_SF1 x", alpha=config.rho, beta=config.tau2
            )
        elif algorithm == Algorithm.AM_SF1P:
            self.subproblem = QuadraticOverSet(
                problem, config, "AM_SF1P x", alpha=config.lam, beta=0.0
            )
        elif (
            algorithm == Algorithm.WPADMM_SF4 and config.n_mode == NMode.PROX_IDENTITY
        ):
            self.subproblem = ProxDistance(problem, config, "WPADMM_SF4 x")


def _workspace(workspace, problem, config):
    return workspace if workspace is not None else Workspace(problem, config)


def step_padmm_sf1(state, problem, config, workspace=None):
    """One proximal ADMM step on the SF1 model: u, then x, then y."""
    a, setQ = problem.A, problem.Q
    rho, tau1, tau2 = config.rho, config.tau1, config.tau2
    x, u, y = state.x, state.u, state.y

    u_new = setQ.project((rho * a.apply(x) + y + tau1 * u) / (rho + tau1))
    b = rho * a.apply_adjoint(u_new) - a.apply_adjoint(y) + tau2 * x
    x_new = _workspace(workspace, problem, config).subproblem.solve(b, x)
    y_new = y + rho * (a.apply(x_new) - u_new)
    return IterateState(x_new, u_new, y_new, state.k + 1)


def step_pg_sf1p(state, problem, config, workspace=None):
    """Parallel projected gradient: both updates read the old pair."""
    a = problem.A
    t = config.lam / config.tau
    x, u = state.x, state.u
    residual = a.apply(x) - u
    u_new = problem.Q.project(u + t * residual)
    x_new = problem.setC.project(x - t * a.apply_adjoint(residual))
    return IterateState(x_new, u_new, None, state.k + 1)


def step_am_sf1p(state, problem, config, workspace=None):
    """Alternating minimization: exact x-step over C, then ``u = P_Q(Ax)``."""
    a = problem.A
    b = config.lam * a.apply_adjoint(state.u)
    x_new = _workspace(workspace, problem, config).subproblem.solve(b, state.x)
    u_new = problem.Q.project(a.apply(x_new))
    return IterateState(x_new, u_new, None, state.k + 1)


def step_cq_sf1p(state, problem, config, workspace=None):
    """The CQ algorithm: ``u = P_Q(Ax)``, then a projected gradient step in x."""
    a = problem.A
    x = state.x
    ax = a.apply(x)
    u_new = problem.Q.project(ax)
    x_new = problem.setC.project(
        x - (config.lam / config.tau) * a.apply_adjoint(ax - u_new)
    )
    return IterateState(x_new, u_new, None, state.k + 1)


def _sf3_gradient(problem, x):
    # sum_j A_j^T (A_j x - P_{Q_j}(A_j x)); the first term starts the sum
    grad = None
    for a, q in zip(problem.maps, problem.setsQ):
        ax = a.apply(x)
        term = a.apply_adjoint(ax - q.project(ax))
        grad = term if grad is None else grad + term
    return grad


def step_pg_sf3(state, problem, config, workspace=None):
    x = state.x
    x_new = problem.setC.project(x - _sf3_gradient(problem, x) / config.tau)
    return IterateState(x_new, None, None, state.k + 1)


def step_cq_multiset(state, problem, config, workspace=None):
    """Simultaneous CQ over every pair (A_j, Q_j)."""
    x = state.x
    x_new = problem.setC.project(x - _sf3_gradient(problem, x) / config.tau)
    return IterateState(x_new, None, None, state.k + 1)


def step_wpadmm_sf4(state, problem, config, workspace=None):
    """
    Weighted proximal ADMM on the SF4 model. The x-step is the closed form
    for ``N = tau I - rho A^TA`` and an exact proximal solve for
    ``N = tau I``.
    """
    a, setC = problem.A, problem.setC
    rho, tau = config.rho, config.tau
    x, y = state.x, state.y

    ax = a.apply(x)
    u_new = problem.Q.project(ax + y / rho)
    if config.n_mode == NMode.LINEARIZED:
        grad = (x - setC.project(x)) + a.apply_adjoint(y + rho * (ax - u_new))
        x_new = x - grad / tau
    else:
        b = rho * a.apply_adjoint(u_new) - a.apply_adjoint(y) + tau * x
        x_new = _workspace(workspace, problem, config).subproblem.solve(b, x)
    y_new = y + rho * (a.apply(x_new) - u_new)
    return IterateState(x_new, u_new, y_new, state.k + 1)


STEPS = {
    Algorithm.PADMM_SF1: step_padmm_sf1,
    Algorithm.PG_SF1P: step_pg_sf1p,
    Algorithm.AM_SF1P: step_am_sf1p,
    Algorithm.CQ_SF1P: step_cq_sf1p,
    Algorithm.PG_SF3: step_pg_sf3,
    Algorithm.WPADMM_SF4: step_wpadmm_sf4,
    Algorithm.CQ_MULTISET: step_cq_multiset,
}


def evaluate(problem, config, state):
    """
    Objective and augmented Lagrangian of a state, in the model the
    algorithm minimizes. The SF1 model of the proximal ADMM is reported as
    its penalized form with weight ``rho``.
    """
    algorithm = config.algorithm
    lagrangian = None
    if algorithm in Algorithm.PENALIZED:
        lam = config.rho if algorithm == Algorithm.PADMM_SF1 else config.lam
        objective = eval_f1_penalized(problem, state.x, state.u, lam)
    elif algorithm == Algorithm.WPADMM_SF4:
        objective = eval_f2_sf4(problem, state.x)
    else:
        objective = eval_sf3(problem, state.x)
    if algorithm in Algorithm.LAGRANGIAN:
        model = Model.SF1 if algorithm == Algorithm.PADMM_SF1 else Model.SF4
        lagrangian = eval_augmented_lagrangian(
            problem, state.x, state.u, state.y, config.rho, model
        )
    return objective, lagrangian


def _record(problem, config, state, previous):
    objective, lagrangian = evaluate(problem, config, state)
    res_c, res_q = residuals(problem, state.x)
    step_x = step_u = None
    if previous is not None:
        step_x = float(np.linalg.norm(state.x - previous.x))
        if state.u is not None:
            step_u = float(np.linalg.norm(state.u - previous.u))
    return IterateRecord(
        k=state.k,
        x=state.x,
        u=state.u,
        y=state.y,
        objective=objective,
        step_norm_x=step_x,
        step_norm_u=step_u,
        residual_C=res_c,
        residual_Q=res_q,
        lagrangian=lagrangian,
    )


def _initial_vector(v, length, what):
    v = np.array(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != length:
        raise DimensionError(what, length, v.shape)
    if not np.all(np.isfinite(v)):
        raise ConfigError("{0} must be finite".format(what))
    return v


def initial_state(problem, config, x0, u0=None, y0=None):
    """
    Build the k = 0 state. ``u0`` defaults to ``P_Q(A x0)`` and ``y0`` to 0;
    the CQ algorithm and alternating minimization always derive
    ``u0 = P_Q(A x0)``.

    :raise ConfigError: if u0 or y0 is given to an algorithm that does not
        read it
    """
    algorithm = config.algorithm
    x0 = _initial_vector(x0, problem.n, "x0")
    takes_u0 = (Algorithm.PADMM_SF1, Algorithm.PG_SF1P, Algorithm.WPADMM_SF4)
    if u0 is not None and algorithm not in takes_u0:
        raise ConfigError("Algorithm {0} does not take an initial u0".format(algorithm))
    if y0 is not None and algorithm not in Algorithm.LAGRANGIAN:
        raise ConfigError("Algorithm {0} does not take an initial y0".format(algorithm))

    u = y = None
    if algorithm in Algorithm.SPLIT:
        a = problem.A
        if u0 is None:
            u = problem.Q.project(a.apply(x0))
        else:
            u = _initial_vector(u0, a.rows, "u0")
    if algorithm in Algorithm.LAGRANGIAN:
        m = problem.A.rows
        y = np.zeros(m) if y0 is None else _initial_vector(y0, m, "y0")
    return IterateState(x0, u, y, 0)


def _finite(state):
    for v in (state.x, state.u, state.y):
        if v is not None and not np.all(np.isfinite(v)):
            raise NumericalError(
                "iterate {0} is not finite; check the step sizes".format(state.k)
            )


HEADER = "%5s  %12s  %12s  %12s  %12s" % ("k", "objective", "d_C(x)", "d_Q(Ax)", "|dx|")
FORMAT = "%5d  %12.5e  %12.5e  %12.5e  %12s"


def run(problem, config, x0, u0=None, y0=None):
    """
    Run a solver until the residuals fall below ``residual_tol``, the
    x-step falls below ``step_tol`` or ``max_iter`` steps were taken.

    Identical inputs give bit-identical traces.

    :param ProblemInstance problem: the problem
    :param SolverConfig config: a configuration built for this problem
    :param x0: initial point
    :param u0: initial split variable (proximal ADMM, parallel projected
        gradient and weighted proximal ADMM only)
    :param y0: initial multiplier (Lagrangian algorithms only)
    :rtype: IterateTrace
    :raise RequirementError: if a requirement is violated without override
    """
    overridden = check_requirements(problem, config)
    if is_experimental(config.algorithm):
        log.warning("%s has no known convergence theory", config.algorithm)
    step = STEPS[config.algorithm]
    workspace = Workspace(problem, config)

    state = initial_state(problem, config, x0, u0, y0)
    record = _record(problem, config, state, None)
    records = [record]
    log.debug("%s on %r", config.algorithm, problem)
    log.debug(HEADER)
    log.debug(
        FORMAT, 0, record.objective.value, record.residual_C, record.residual_Q, ""
    )

    tol = config.residual_tol
    while True:
        if record.residual_C <= tol and record.residual_Q <= tol:
            reason = Termination.RESIDUAL_TOL
            break
        if record.step_norm_x is not None and record.step_norm_x <= config.step_tol:
            reason = Termination.STEP_TOL
            break
        if state.k == config.max_iter:
            reason = Termination.MAX_ITER
            break
        previous = state
        state = step(state, problem, config, workspace)
        _finite(state)
        record = _record(problem, config, state, previous)
        records.append(record)
        if state.k % config.log_every == 0:
            log.debug(
                FORMAT,
                state.k,
                record.objective.value,
                record.residual_C,
                record.residual_Q,
                "%12.5e" % record.step_norm_x,
            )

    log.info(
        "%s stopped after %d iterations (%s): d_C = %.3e, d_Q = %.3e",
        config.algorithm,
        state.k,
        reason,
        record.residual_C,
        record.residual_Q,
    )
    return IterateTrace(
        config, problem, records, termination_reason=reason, warnings=overridden
    )
