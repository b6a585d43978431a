"""
Model objectives and feasibility residuals.

Indicator terms are realized through set membership at ``MEMBERSHIP_TOL``;
a violated indicator makes the value ``inf``.
"""
from collections import namedtuple

import numpy as np

from splitfeas.exceptions import DataError, DimensionError
from splitfeas.linops import LinearMap, spectral_summary
from splitfeas.sets import MEMBERSHIP_TOL, SetSpec

INF = float("inf")

WITNESS_TOL = 1e-9


class Model(object):
    SF1 = "SF1"
    SF4 = "SF4"

    ALL = (SF1, SF4)


class ProblemInstance(object):
    """
    A split feasibility problem: find ``x in C`` with ``A_j x in Q_j`` for
    every j.

    :param SetSpec setC: the set C in R^n
    :param list maps: linear maps A_j from R^n to R^{m_j}
    :param list setsQ: sets Q_j in R^{m_j}
    :param consistency_witness: optional point solving the problem
    :param dict metadata: free-form provenance, kept out of equality and digests
    :raise DataError: if the parts do not chain or the witness is not a solution
    """

    def __init__(self, setC, maps, setsQ, consistency_witness=None, metadata=None):
        if isinstance(maps, LinearMap):
            maps = [maps]
        if isinstance(setsQ, SetSpec):
            setsQ = [setsQ]
        maps, setsQ = tuple(maps), tuple(setsQ)
        if not maps:
            raise DataError("A problem needs at least one linear map")
        if len(maps) != len(setsQ):
            raise DataError(
                "Got {0} linear maps but {1} sets Q".format(len(maps), len(setsQ))
            )
        n = setC.dimension
        for j, (a, q) in enumerate(zip(maps, setsQ)):
            if a.cols != n:
                raise DimensionError("A[{0}] columns".format(j), n, a.cols)
            if q.dimension != a.rows:
                raise DimensionError("Q[{0}]".format(j), a.rows, q.dimension)
        self.setC = setC
        self.maps = maps
        self.setsQ = setsQ
        self._summaries = None
        self.metadata = dict(metadata or {})

        self.consistency_witness = None
        if consistency_witness is not None:
            witness = np.array(consistency_witness, dtype=float)
            if witness.shape != (n,):
                raise DimensionError("consistency witness", n, witness.shape)
            witness.setflags(write=False)
            res_c, res_q = residuals(self, witness)
            if res_c > WITNESS_TOL or res_q > WITNESS_TOL:
                raise DataError(
                    "Consistency witness is not a solution "
                    "(residuals {0:.3g}, {1:.3g})".format(res_c, res_q)
                )
            self.consistency_witness = witness

    @property
    def n(self):
        return self.setC.dimension

    @property
    def r(self):
        return len(self.maps)

    @property
    def is_multiset(self):
        return len(self.maps) > 1

    @property
    def A(self):
        self._require_single()
        return self.maps[0]

    @property
    def Q(self):
        self._require_single()
        return self.setsQ[0]

    def _require_single(self):
        if self.is_multiset:
            raise DataError(
                "Operation needs a single-set problem, got {0} sets Q".format(self.r)
            )

    def spectral_summaries(self):
        """Spectral summary of every A_j, computed once."""
        if self._summaries is None:
            self._summaries = tuple(spectral_summary(a) for a in self.maps)
        return self._summaries

    def spectrum(self):
        """Spectral summary of A for single-set problems."""
        self._require_single()
        return self.spectral_summaries()[0]

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        if (self.consistency_witness is None) != (other.consistency_witness is None):
            return False
        if self.consistency_witness is not None and not np.array_equal(
            self.consistency_witness, other.consistency_witness
        ):
            return False
        return (
            self.setC == other.setC
            and self.maps == other.maps
            and self.setsQ == other.setsQ
        )

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return "ProblemInstance(n={0}, m={1}, C={2}, Q={3})".format(
            self.n,
            [a.rows for a in self.maps],
            self.setC.kind,
            [q.kind for q in self.setsQ],
        )


ObjectiveValue = namedtuple(
    "ObjectiveValue",
    ["value", "coupling", "feasibility_x", "feasibility_u", "constraint_gap"],
)
ObjectiveValue.__doc__ = """
Value of a model objective together with its parts.

:ivar float value: objective value, ``inf`` when an indicator is violated
:ivar float coupling: the smooth part (penalty or distance terms)
:ivar float feasibility_x: d_C(x)
:ivar float feasibility_u: d_Q(u), or d_Q(Ax) for models without u
:ivar float constraint_gap: ||Ax - u||, 0 for models without u
"""


def _vector(v, length, what):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError(what, length, v.shape)
    if v.shape[0] != length:
        raise DimensionError(what, length, v.shape[0])
    return v


def eval_f1_penalized(problem, x, u, lam):
    """
    Penalized objective ``delta_C(x) + delta_Q(u) + (lam/2)||Ax - u||^2``; the
    indicators are 0 on the set and +inf off it.
    """
    a, q = problem.A, problem.Q
    x = _vector(x, problem.n, "x")
    u = _vector(u, a.rows, "u")
    gap = float(np.linalg.norm(a.apply(x) - u))
    coupling = 0.5 * lam * gap * gap
    dx = problem.setC.distance(x)
    du = q.distance(u)
    value = coupling if dx <= MEMBERSHIP_TOL and du <= MEMBERSHIP_TOL else INF
    return ObjectiveValue(value, coupling, dx, du, gap)


def eval_sf3(problem, x):
    """``(1/2) sum_j d_{Q_j}^2(A_j x)`` over C; works for single and multiset."""
    x = _vector(x, problem.n, "x")
    distances = [q.distance(a.apply(x)) for a, q in zip(problem.maps, problem.setsQ)]
    coupling = 0.5 * sum(d * d for d in distances)
    dx = problem.setC.distance(x)
    value = coupling if dx <= MEMBERSHIP_TOL else INF
    return ObjectiveValue(value, coupling, dx, max(distances), 0.0)


def eval_f2_sf4(problem, x):
    """``(1/2) d_C^2(x)`` subject to ``Ax in Q``."""
    a, q = problem.A, problem.Q
    x = _vector(x, problem.n, "x")
    dx = problem.setC.distance(x)
    du = q.distance(a.apply(x))
    coupling = 0.5 * dx * dx
    value = coupling if du <= MEMBERSHIP_TOL else INF
    return ObjectiveValue(value, coupling, dx, du, 0.0)


def eval_augmented_lagrangian(problem, x, u, y, rho, model):
    """
    Augmented Lagrangian of the SF1 or SF4 model.

    :param str model: ``Model.SF1`` (indicator of C) or ``Model.SF4``
        (``(1/2) d_C^2``)
    :rtype: float
    """
    if model not in Model.ALL:
        raise DataError(
            "Model: {0} does not exist. Valid models are: {1}".format(
                model, ", ".join(Model.ALL)
            )
        )
    a, q = problem.A, problem.Q
    x = _vector(x, problem.n, "x")
    u = _vector(u, a.rows, "u")
    y = _vector(y, a.rows, "y")

    if q.distance(u) > MEMBERSHIP_TOL:
        return INF
    dx = problem.setC.distance(x)
    if model == Model.SF1:
        if dx > MEMBERSHIP_TOL:
            return INF
        base = 0.0
    else:
        base = 0.5 * dx * dx
    gap = a.apply(x) - u
    return float(base + y.dot(gap) + 0.5 * rho * gap.dot(gap))


def residuals(problem, x):
    """Return ``(d_C(x), max_j d_{Q_j}(A_j x))``."""
    x = _vector(x, problem.n, "x")
    res_q = max(q.distance(a.apply(x)) for a, q in zip(problem.maps, problem.setsQ))
    return problem.setC.distance(x), res_q
