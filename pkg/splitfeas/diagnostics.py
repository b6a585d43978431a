"""
Runtime certificates for solver traces.

The convergence analysis of the penalized-model algorithms rests on three
conditions on the generated sequence:

* C1, sufficient decrease: ``rho1 ||z^{k+1} - z^k||^2 <= F^k - F^{k+1}``;
* C2, a subgradient ``w^{k+1}`` of F at the new iterate with
  ``||w^{k+1}|| <= rho2 ||z^{k+1} - z^k||``;
* C3, continuity of F along the sequence.

The weighted proximal ADMM is analysed through its augmented Lagrangian
instead, which decreases by ``(lambda_min(N)/2) ||x^{k+1} - x^k||^2`` per
step. Each ``certify_*`` function checks one condition on every consecutive
pair of a trace and returns a ``CertificateReport``; pairs are reported by
the index of their later iterate.
"""
import logging
from collections import namedtuple

import numpy as np

from splitfeas.algorithms import Algorithm, NMode, is_experimental
from splitfeas.exceptions import CertificateError, InterfaceError
from splitfeas.objectives import (
    Model,
    eval_augmented_lagrangian,
    eval_f1_penalized,
    eval_sf3,
)
from splitfeas.sets import MEMBERSHIP_TOL

log = logging.getLogger(__name__)

INF = float("inf")

# fraction of the trace the Cauchy tail metric looks at
TAIL_FRACTION = 0.1


class Condition(object):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3_continuity"
    LAGRANGIAN_DECREASE = "LagrangianDecrease"
    MULTIPLIER_IDENTITY = "MultiplierIdentity"


DESCENT_ALGORITHMS = (Algorithm.CQ_SF1P, Algorithm.AM_SF1P)

C3_ALGORITHMS = Algorithm.PENALIZED + (Algorithm.PG_SF3, Algorithm.CQ_MULTISET)

APPLICABLE = {
    Algorithm.PADMM_SF1: (Condition.C3, Condition.MULTIPLIER_IDENTITY),
    Algorithm.PG_SF1P: (Condition.C3,),
    Algorithm.AM_SF1P: (Condition.C1, Condition.C2, Condition.C3),
    Algorithm.CQ_SF1P: (Condition.C1, Condition.C2, Condition.C3),
    Algorithm.PG_SF3: (Condition.C3,),
    Algorithm.WPADMM_SF4: (
        Condition.LAGRANGIAN_DECREASE,
        Condition.MULTIPLIER_IDENTITY,
    ),
    Algorithm.CQ_MULTISET: (Condition.C3,),
}

ALL_CONDITIONS = (
    Condition.C1,
    Condition.C2,
    Condition.C3,
    Condition.LAGRANGIAN_DECREASE,
    Condition.MULTIPLIER_IDENTITY,
)


class CertificateReport(
    namedtuple(
        "CertificateReport",
        [
            "condition",
            "constant_used",
            "worst_violation",
            "violating_iterations",
            "passed",
            "slack",
        ],
    )
):
    """
    Verdict of one certificate over a trace.

    ``worst_violation`` and ``slack`` are taken at the pair with the largest
    excess ``margin - slack``, so ``passed`` holds exactly when
    ``worst_violation <= slack``.
    """

    __slots__ = ()

    def to_dict(self):
        d = self._asdict()
        d["violating_iterations"] = list(self.violating_iterations)
        for key in ("constant_used", "worst_violation", "slack"):
            value = d[key]
            if not np.isfinite(value):
                d[key] = "inf" if value > 0 else "-inf"
        return d


def _report(condition, constant, margins, slacks, ks):
    """
    :param margins: per-pair margins, positive when the inequality is violated
        by that amount
    :param slacks: per-pair numerical tolerances
    :param ks: index reported for each pair
    """
    violating = [k for k, m, s in zip(ks, margins, slacks) if m > s]
    if margins:
        excess = [m - s for m, s in zip(margins, slacks)]
        i = int(np.argmax(excess))
        worst, slack = float(margins[i]), float(slacks[i])
    else:
        worst, slack = 0.0, 0.0
    report = CertificateReport(
        condition=condition,
        constant_used=float(constant),
        worst_violation=worst,
        violating_iterations=tuple(violating),
        passed=not violating,
        slack=slack,
    )
    log.info(
        "%s: %s (constant %.6g, worst violation %.3g, slack %.3g)",
        condition,
        "passed" if report.passed else "FAILED at k = %s" % list(violating)[:10],
        report.constant_used,
        report.worst_violation,
        report.slack,
    )
    return report


def _require(trace, algorithms, condition, algorithm=None):
    if algorithm is not None and algorithm != trace.algorithm:
        raise CertificateError(
            "trace was produced by {0}, not {1}".format(trace.algorithm, algorithm)
        )
    if trace.algorithm not in algorithms:
        raise CertificateError(
            "{0} does not apply to {1}; supported algorithms: {2}".format(
                condition, trace.algorithm, ", ".join(algorithms)
            )
        )


def _vectors(trace, name):
    if trace.problem is None:
        raise CertificateError("certificate needs the problem the trace ran on")
    try:
        return trace.vectors(name)
    except InterfaceError as e:
        raise CertificateError(str(e))


def _decrease_margin(before, after, decrease):
    """Margin of ``decrease <= before - after`` with +inf conventions."""
    if before == INF:
        return None
    if after == INF:
        return INF
    return decrease - (before - after)


def _spectrum(trace):
    return trace.problem.spectrum()


# ----- C1 -----


def c1_constant(trace, config=None):
    """``rho1`` of the sufficient decrease condition and the variable it measures."""
    config = config or trace.config
    if config.algorithm == Algorithm.CQ_SF1P:
        lmax = _spectrum(trace).gram_lambda_max
        return (config.tau - config.lam * lmax) / 2.0, "x"
    return config.lam / 2.0, "u"


def certify_c1(trace, algorithm=None, config=None):
    """
    Sufficient decrease of the penalized objective: ``z = x`` with
    ``rho1 = (tau - lam lambda_max(A^TA))/2`` for the CQ algorithm, ``z = u``
    with ``rho1 = lam/2`` for alternating minimization.

    :rtype: CertificateReport
    :raise CertificateError: for other algorithms
    """
    _require(trace, DESCENT_ALGORITHMS, Condition.C1, algorithm)
    rho1, name = c1_constant(trace, config)
    z = _vectors(trace, name)
    values = [r.objective.value for r in trace]

    margins, slacks, ks = [], [], []
    for k in range(len(trace) - 1):
        dz = z[k + 1] - z[k]
        margin = _decrease_margin(values[k], values[k + 1], rho1 * dz.dot(dz))
        if margin is None:
            continue
        margins.append(margin)
        slacks.append(1e-9 * (1.0 + abs(values[k])))
        ks.append(k + 1)
    return _report(Condition.C1, rho1, margins, slacks, ks)


# ----- C2 -----


def c2_constant(trace, config=None):
    config = config or trace.config
    spectrum = _spectrum(trace)
    lam = config.lam
    if config.algorithm == Algorithm.CQ_SF1P:
        tau = config.tau
        block = max(
            abs(lam * spectrum.gram_lambda_max - tau),
            abs(lam * spectrum.gram_lambda_min - tau),
        )
        return block + lam * spectrum.operator_norm
    return lam * spectrum.operator_norm


def c2_witness(trace, k, algorithm=None, config=None):
    """
    Subgradient witness of the penalized objective at iterate ``k + 1``.

    CQ algorithm: ``((lam A^TA - tau I)(x^{k+1} - x^k), lam A(x^k - x^{k+1}))``;
    alternating minimization: ``(lam A^T(u^k - u^{k+1}), 0)``.

    :return: ``((w_x, w_u), bound)`` with ``bound = rho2 ||z^{k+1} - z^k||``
    :raise CertificateError: for other algorithms or when k + 1 is out of range
    """
    _require(trace, DESCENT_ALGORITHMS, Condition.C2, algorithm)
    config = config or trace.config
    if not 0 <= k < len(trace) - 1:
        raise CertificateError(
            "iteration {0} out of range: the witness needs records k and k+1 "
            "of a trace with {1} records".format(k, len(trace))
        )
    a = trace.problem.A
    rho2 = c2_constant(trace, config)
    before, after = trace[k], trace[k + 1]
    if before.x is None:
        raise CertificateError("certificate needs a trace with full vectors")
    lam = config.lam
    if trace.algorithm == Algorithm.CQ_SF1P:
        dx = after.x - before.x
        w_x = lam * a.apply_adjoint(a.apply(dx)) - config.tau * dx
        w_u = -lam * a.apply(dx)
        bound = rho2 * float(np.linalg.norm(dx))
    else:
        du = before.u - after.u
        w_x = lam * a.apply_adjoint(du)
        w_u = np.zeros_like(du)
        bound = rho2 * float(np.linalg.norm(du))
    return (w_x, w_u), bound


def _projection_defect(setD, point, target):
    """How far ``target`` is from being a projection of ``point`` onto D."""
    if not setD.is_member(target):
        return setD.distance(target)
    return max(0.0, float(np.linalg.norm(point - target)) - setD.distance(point))


def _witness_defect(trace, k, config):
    """
    The witness is a subgradient only if iterate k+1 satisfies the
    optimality conditions of its subproblems.
    """
    problem = trace.problem
    a = problem.A
    before, after = trace[k], trace[k + 1]
    lam = config.lam
    if trace.algorithm == Algorithm.CQ_SF1P:
        ax = a.apply(before.x)
        defect_u = _projection_defect(problem.Q, ax, after.u)
        point = before.x - (lam / config.tau) * a.apply_adjoint(ax - after.u)
        defect_x = _projection_defect(problem.setC, point, after.x)
    else:
        defect_u = _projection_defect(problem.Q, a.apply(after.x), after.u)
        lmax = _spectrum(trace).gram_lambda_max
        if lmax > 0:
            gradient = a.apply_adjoint(a.apply(after.x) - before.u) / lmax
            defect_x = _projection_defect(problem.setC, after.x - gradient, after.x)
        else:
            defect_x = problem.setC.distance(after.x)
    return max(defect_u, defect_x)


def certify_c2(trace, algorithm=None, config=None):
    """
    Relative error condition: at every iterate the witness of ``c2_witness``
    must be a subgradient (the iterate solves its subproblems) and satisfy
    ``||w^{k+1}|| <= rho2 ||z^{k+1} - z^k||``.

    :rtype: CertificateReport
    """
    _require(trace, DESCENT_ALGORITHMS, Condition.C2, algorithm)
    config = config or trace.config
    _vectors(trace, "x")
    rho2 = c2_constant(trace, config)
    inner = 10.0 * config.inner_tol if config.inner_tol else 0.0

    margins, slacks, ks = [], [], []
    for k in range(len(trace) - 1):
        (w_x, w_u), bound = c2_witness(trace, k, config=config)
        norm_w = float(np.sqrt(w_x.dot(w_x) + w_u.dot(w_u)))
        dz = bound / rho2 if rho2 > 0 else 0.0
        margins.append(max(norm_w - bound, _witness_defect(trace, k, config)))
        slacks.append(1e-9 * (1.0 + dz) + inner)
        ks.append(k + 1)
    return _report(Condition.C2, rho2, margins, slacks, ks)


# ----- C3 -----


def certify_c3(trace):
    """
    Continuity along the sequence, in the form both descent proofs use: every
    iterate stays in C (and u in Q), so the objective equals its smooth part.
    With full vectors the objective is recomputed from the iterates.

    :rtype: CertificateReport
    """
    _require(trace, C3_ALGORITHMS, Condition.C3)
    config = trace.config
    problem = trace.problem
    recompute = problem is not None and trace.full_trace
    lam = config.rho if trace.algorithm == Algorithm.PADMM_SF1 else config.lam

    margins, slacks, ks = [], [], []
    for r in trace:
        if recompute:
            if trace.algorithm in Algorithm.PENALIZED:
                objective = eval_f1_penalized(problem, r.x, r.u, lam)
            else:
                objective = eval_sf3(problem, r.x)
        else:
            objective = r.objective
        margin = objective.value - objective.coupling
        if trace.algorithm in Algorithm.PENALIZED:
            margin = max(margin, objective.feasibility_u)
        margins.append(max(margin, objective.feasibility_x))
        slacks.append(MEMBERSHIP_TOL)
        ks.append(r.k)
    return _report(Condition.C3, 0.0, margins, slacks, ks)


# ----- Lagrangian algorithms -----


def n_eigenvalues(trace, config=None):
    """``(lambda_min(N), lambda_max(N))`` of the proximal metric N."""
    config = config or trace.config
    spectrum = _spectrum(trace)
    if config.n_mode == NMode.LINEARIZED:
        return (
            config.tau - config.rho * spectrum.gram_lambda_max,
            config.tau - config.rho * spectrum.gram_lambda_min,
        )
    return config.tau, config.tau


def certify_lagrangian_decrease(trace, config=None):
    """
    ``(lambda_min(N)/2)||x^{k+1} - x^k||^2 <= L(x^k, u^k, y^k) -
    L(x^{k+1}, u^{k+1}, y^k)``, both sides evaluated with the old multiplier.

    :rtype: CertificateReport
    :raise CertificateError: if the trace has no multipliers
    """
    _require(trace, (Algorithm.WPADMM_SF4,), Condition.LAGRANGIAN_DECREASE)
    config = config or trace.config
    xs, us, ys = _vectors(trace, "x"), _vectors(trace, "u"), _vectors(trace, "y")
    problem = trace.problem
    lmin = n_eigenvalues(trace, config)[0]

    margins, slacks, ks = [], [], []
    for k in range(len(trace) - 1):
        before = eval_augmented_lagrangian(
            problem, xs[k], us[k], ys[k], config.rho, Model.SF4
        )
        after = eval_augmented_lagrangian(
            problem, xs[k + 1], us[k + 1], ys[k], config.rho, Model.SF4
        )
        dx = xs[k + 1] - xs[k]
        margin = _decrease_margin(before, after, 0.5 * lmin * dx.dot(dx))
        if margin is None:
            continue
        scale = 1.0 + abs(before)
        margins.append(margin)
        slacks.append(1e-9 * scale + 10.0 * config.inner_tol * scale)
        ks.append(k + 1)
    return _report(Condition.LAGRANGIAN_DECREASE, lmin / 2.0, margins, slacks, ks)


def certify_multiplier_identity(trace, config=None):
    """``y^{k+1} - y^k = rho (A x^{k+1} - u^{k+1})`` at every step."""
    _require(trace, Algorithm.LAGRANGIAN, Condition.MULTIPLIER_IDENTITY)
    config = config or trace.config
    xs, us, ys = _vectors(trace, "x"), _vectors(trace, "u"), _vectors(trace, "y")
    a = trace.problem.A

    margins, slacks, ks = [], [], []
    for k in range(len(trace) - 1):
        expected = config.rho * (a.apply(xs[k + 1]) - us[k + 1])
        margins.append(float(np.linalg.norm((ys[k + 1] - ys[k]) - expected)))
        slacks.append(
            1e-10 * (1.0 + np.linalg.norm(ys[k]) + np.linalg.norm(ys[k + 1]))
        )
        ks.append(k + 1)
    return _report(Condition.MULTIPLIER_IDENTITY, config.rho, margins, slacks, ks)


LagrangianWitness = namedtuple(
    "LagrangianWitness", ["k", "v_norm", "x_step_norm", "bound"]
)


def lagrangian_witnesses(trace, config=None):
    """
    The u-part ``v^{k+1} = rho A(x^k - x^{k+1})`` of the Lagrangian
    subgradient witness, next to ``lambda_max(N) ||x^{k+1} - x^k||``.
    Reported only; no inequality between them is asserted.

    :rtype: list of LagrangianWitness
    """
    _require(trace, (Algorithm.WPADMM_SF4,), Condition.LAGRANGIAN_DECREASE)
    config = config or trace.config
    xs = _vectors(trace, "x")
    a = trace.problem.A
    lmax = n_eigenvalues(trace, config)[1]
    witnesses = []
    for k in range(len(trace) - 1):
        dx = xs[k + 1] - xs[k]
        v = config.rho * a.apply(-dx)
        step = float(np.linalg.norm(dx))
        witnesses.append(
            LagrangianWitness(k + 1, float(np.linalg.norm(v)), step, lmax * step)
        )
        log.debug(
            "k=%d |v| = %.3e, lambda_max(N)|dx| = %.3e",
            k + 1,
            witnesses[-1].v_norm,
            witnesses[-1].bound,
        )
    return witnesses


# ----- summaries -----


ConvergenceSummary = namedtuple(
    "ConvergenceSummary",
    [
        "iterations",
        "termination_reason",
        "final_residual_C",
        "final_residual_Q",
        "tail_start",
        "tail_metric",
        "approximate_solution",
    ],
)


def certify_convergence(trace):
    """
    Empirical convergence report: final residuals, the Cauchy tail metric
    ``sup_{j >= k0} ||x^j - x^{k0}||`` over the last tenth of the run, and
    whether the final point solves the problem to ``residual_tol``. This is
    an observation, not a proof of convergence.

    :rtype: ConvergenceSummary
    """
    final = trace.final
    last = final.k
    k0 = int(np.floor((1.0 - TAIL_FRACTION) * last))
    tail = None
    if trace.full_trace:
        xs = trace.vectors("x")
        tail = float(np.max(np.linalg.norm(xs[k0:] - xs[k0], axis=1)))
    tol = trace.config.residual_tol
    summary = ConvergenceSummary(
        iterations=last,
        termination_reason=trace.termination_reason,
        final_residual_C=final.residual_C,
        final_residual_Q=final.residual_Q,
        tail_start=k0,
        tail_metric=tail,
        approximate_solution=final.residual_C <= tol and final.residual_Q <= tol,
    )
    log.info(
        "%s: %d iterations, residuals (%.3e, %.3e), tail %s",
        trace.algorithm,
        last,
        final.residual_C,
        final.residual_Q,
        "n/a" if tail is None else "%.3e" % tail,
    )
    return summary


_CERTIFY = {
    Condition.C1: certify_c1,
    Condition.C2: certify_c2,
    Condition.C3: certify_c3,
    Condition.LAGRANGIAN_DECREASE: certify_lagrangian_decrease,
    Condition.MULTIPLIER_IDENTITY: certify_multiplier_identity,
}


def certify_all(trace):
    """
    Run every certificate that applies to the trace's algorithm.

    :return: ``(reports, unsupported, required)``: the reports, the
        conditions that do not apply, and whether the reports carry a
        pass/fail contract (they do not for experimental algorithms)
    """
    applicable = APPLICABLE[trace.algorithm]
    reports = [_CERTIFY[condition](trace) for condition in applicable]
    unsupported = [c for c in ALL_CONDITIONS if c not in applicable]
    if trace.algorithm == Algorithm.WPADMM_SF4:
        lagrangian_witnesses(trace)
    return reports, unsupported, not is_experimental(trace.algorithm)
