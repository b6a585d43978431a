"""
Solver configuration.

``ConfigBuilder`` turns keyword arguments into an immutable ``SolverConfig``:
it rejects parameters the chosen algorithm does not read, fills defaults that
depend on the spectrum of A and checks the step-size invariants.
``check_requirements`` then checks the comparison table requirements and the
convexity assumptions of each model.
"""
import logging
import numbers
import warnings
from collections import namedtuple

from splitfeas.algorithms import Algorithm, NMode, table_row
from splitfeas.exceptions import ConfigError, RequirementError, SplitFeasibilityWarning
from splitfeas.linops import check_table_requirements

log = logging.getLogger(__name__)


class InnerBackend(object):
    AUTO = "auto"
    ORTHOGONAL = "orthogonal"
    FIXED_POINT = "fixed_point"
    NONE = "none"

    ALL = (AUTO, ORTHOGONAL, FIXED_POINT, NONE)


_FIELDS = [
    "algorithm",
    "lam",
    "rho",
    "tau",
    "tau1",
    "tau2",
    "n_mode",
    "max_iter",
    "residual_tol",
    "step_tol",
    "inner_tol",
    "inner_max_iter",
    "inner_backend",
    "override_requirements",
    "log_every",
]

COMMON_PARTS = [
    "max_iter",
    "residual_tol",
    "step_tol",
    "override_requirements",
    "log_every",
]

INNER_PARTS = ["inner_tol", "inner_max_iter", "inner_backend"]

VALID_PARTS = {
    Algorithm.PADMM_SF1: ["rho", "tau1", "tau2"] + INNER_PARTS,
    Algorithm.PG_SF1P: ["lam", "tau"],
    Algorithm.AM_SF1P: ["lam"] + INNER_PARTS,
    Algorithm.CQ_SF1P: ["lam", "tau"],
    Algorithm.PG_SF3: ["tau"],
    Algorithm.WPADMM_SF4: ["rho", "tau", "n_mode"] + INNER_PARTS,
    Algorithm.CQ_MULTISET: ["tau"],
}

DEFAULTS = {
    "lam": 1.0,
    "tau1": 1.0,
    "tau2": 1.0,
    "n_mode": NMode.PROX_IDENTITY,
    "max_iter": 10000,
    "residual_tol": 1e-6,
    "step_tol": 1e-14,
    "inner_tol": 1e-12,
    "inner_max_iter": 10000,
    "inner_backend": InnerBackend.AUTO,
    "override_requirements": False,
    "log_every": 100,
}

# default step sizes sit this factor above their lower bound
STEP_MARGIN = 1.01


class SolverConfig(namedtuple("SolverConfig", _FIELDS)):
    """
    Immutable solver configuration. Parameters the algorithm does not read
    are None.
    """

    __slots__ = ()

    def to_dict(self):
        return dict(self._asdict())

    @classmethod
    def from_dict(cls, config_dict):
        """
        Rebuild a configuration from its JSON form.

        :raise ConfigError: on unknown or missing keys
        """
        if not isinstance(config_dict, dict):
            raise ConfigError("Solver configuration must be an object")
        unknown = sorted(set(config_dict) - set(_FIELDS))
        if unknown:
            raise ConfigError(
                "Unknown solver configuration key(s): {0}".format(", ".join(unknown))
            )
        missing = [f for f in _FIELDS if f not in config_dict]
        if missing:
            raise ConfigError(
                "Solver configuration is missing key(s): {0}".format(", ".join(missing))
            )
        config = cls(**config_dict)
        table_row(config.algorithm, config.n_mode)
        return config

    def replace(self, **kwargs):
        return self._replace(**kwargs)


def _real(args, key, positive=True):
    value = args[key]
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError("{0} must be a real number, got {1!r}".format(key, value))
    value = float(value)
    if value != value or value in (float("inf"), float("-inf")):
        raise ConfigError("{0} must be finite, got {1}".format(key, value))
    if positive and not value > 0:
        raise ConfigError("{0} must be positive, got {1}".format(key, value))
    if not positive and value < 0:
        raise ConfigError("{0} must be nonnegative, got {1}".format(key, value))
    return value


def _count(args, key):
    value = args[key]
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value <= 0:
        raise ConfigError(
            "{0} must be a positive integer, got {1!r}".format(key, value)
        )
    return int(value)


class ConfigBuilder(object):
    def __init__(self):
        self.last_config = None

    @staticmethod
    def validate_config(algorithm, valid_parts, args):
        """
        Validate the parameters so only ones the algorithm reads are accepted.

        The common stopping and logging parameters are valid for every
        algorithm and need not be listed.

        :param string algorithm: algorithm id
        :param list valid_parts: a list of valid parameter names
        :param dict args: the parameters
        :raise ConfigError: if an invalid parameter is given
        """
        valid_parts = valid_parts[:] + COMMON_PARTS
        for key in args:
            if key not in valid_parts:
                raise ConfigError(
                    "Solver parameter: {0} is not valid for algorithm: {1}. ".format(
                        key, algorithm
                    )
                    + "The list of valid parameters is: \n {0}".format(valid_parts)
                )

    def build_config(self, algorithm, problem, args):
        """
        Fill defaults from the problem's spectrum and check the step-size
        invariants.

        :param string algorithm: algorithm id
        :param ProblemInstance problem: the problem the config will run on
        :param dict args: validated parameters
        :rtype: SolverConfig
        :raise ConfigError: if a parameter is out of range
        """
        if algorithm == Algorithm.CQ_MULTISET:
            lmax = sum(s.gram_lambda_max for s in problem.spectral_summaries())
        else:
            if problem.is_multiset:
                raise ConfigError(
                    "Algorithm {0} needs a single-set problem, got {1} sets Q".format(
                        algorithm, problem.r
                    )
                )
            lmax = problem.spectrum().gram_lambda_max

        valid = VALID_PARTS[algorithm] + COMMON_PARTS
        values = dict((k, DEFAULTS[k]) for k in valid if k in DEFAULTS)
        values.update(args)
        if "rho" in valid and "rho" not in args:
            values["rho"] = 10.0 * max(1.0, lmax)

        params = dict((f, None) for f in _FIELDS)
        params["algorithm"] = algorithm
        params["max_iter"] = _count(values, "max_iter")
        params["inner_max_iter"] = (
            _count(values, "inner_max_iter") if "inner_max_iter" in values else None
        )
        params["log_every"] = _count(values, "log_every")
        for key in ("residual_tol", "step_tol", "inner_tol"):
            if key in values:
                params[key] = _real(values, key)
        params["override_requirements"] = bool(values["override_requirements"])
        if "inner_backend" in values:
            if values["inner_backend"] not in InnerBackend.ALL:
                raise ConfigError(
                    "inner_backend: {0} does not exist. Valid backends are: {1}".format(
                        values["inner_backend"], ", ".join(InnerBackend.ALL)
                    )
                )
            params["inner_backend"] = values["inner_backend"]
        for key in ("lam", "rho"):
            if key in values:
                params[key] = _real(values, key)
        for key in ("tau1", "tau2"):
            if key in values:
                params[key] = _real(values, key, positive=False)

        if algorithm == Algorithm.WPADMM_SF4:
            if values["n_mode"] not in NMode.ALL:
                raise ConfigError(
                    "n_mode: {0} does not exist. Valid modes are: {1}".format(
                        values["n_mode"], ", ".join(NMode.ALL)
                    )
                )
            params["n_mode"] = values["n_mode"]

        if "tau" in valid:
            params["tau"] = self._step_size(algorithm, params, values, lmax)

        self.last_config = SolverConfig(**params)
        log.debug("built %s", self.last_config)
        return self.last_config

    @staticmethod
    def _step_size(algorithm, params, values, lmax):
        lam, rho = params["lam"], params["rho"]
        strict = True
        if algorithm == Algorithm.PG_SF1P:
            bound, strict, what = lam * (lmax + 1.0), False, "lam*(lambda_max(A^TA)+1)"
        elif algorithm == Algorithm.CQ_SF1P:
            bound, what = lam * lmax, "lam*lambda_max(A^TA)"
        elif algorithm == Algorithm.PG_SF3:
            bound, what = lmax, "lambda_max(A^TA)"
        elif algorithm == Algorithm.CQ_MULTISET:
            bound, what = lmax, "sum_j lambda_max(A_j^TA_j)"
        elif params["n_mode"] == NMode.LINEARIZED:
            bound, what = rho * lmax, "rho*lambda_max(A^TA)"
        else:
            # proximal weight of N = tau I; tau = 0 is the classical ADMM
            if "tau" not in values:
                return 1.0
            return _real(values, "tau", positive=False)

        if "tau" not in values:
            if algorithm == Algorithm.WPADMM_SF4:
                return STEP_MARGIN * (bound + 1.0)
            return STEP_MARGIN * bound if bound > 0 else 1.0

        tau = _real(values, "tau")
        if strict and not tau > bound:
            raise ConfigError(
                "tau must exceed {0} = {1:.6g}, got {2}".format(what, bound, tau)
            )
        if not strict and tau < bound:
            raise ConfigError(
                "tau must be at least {0} = {1:.6g}, got {2}".format(what, bound, tau)
            )
        if algorithm == Algorithm.WPADMM_SF4 and tau < 1.0:
            raise ConfigError(
                "Linearized mode needs tau >= 1 (the distance term is linearized), "
                "got {0}".format(tau)
            )
        return tau

    def build(self, algorithm, problem, args):
        if algorithm not in VALID_PARTS:
            raise ConfigError(
                "Algorithm {0} does not exist. Valid algorithms are: {1}".format(
                    algorithm, ", ".join(Algorithm.ALL)
                )
            )
        self.validate_config(algorithm, VALID_PARTS[algorithm], args)
        return self.build_config(algorithm, problem, args)

    def padmm_sf1(self, problem, args):
        """
        Proximal ADMM on the SF1 model. No convergence theory is known for
        this algorithm; it runs as an experimental method.

        :param ProblemInstance problem: single-set problem
        :param dict args: ``rho``, ``tau1``, ``tau2`` and inner solver settings
        :rtype: SolverConfig
        """
        return self.build(Algorithm.PADMM_SF1, problem, args)

    def pg_sf1p(self, problem, args):
        """
        Parallel projected gradient on the penalized model. ``tau`` must be
        at least ``lam*(lambda_max(A^TA)+1)``.
        """
        return self.build(Algorithm.PG_SF1P, problem, args)

    def am_sf1p(self, problem, args):
        """Alternating minimization on the penalized model; Q must be convex."""
        return self.build(Algorithm.AM_SF1P, problem, args)

    def cq(self, problem, args):
        """
        The CQ algorithm, written as a semi-alternating projected gradient on
        the penalized model. ``tau`` must exceed ``lam*lambda_max(A^TA)``.
        """
        return self.build(Algorithm.CQ_SF1P, problem, args)

    def pg_sf3(self, problem, args):
        return self.build(Algorithm.PG_SF3, problem, args)

    def wpadmm_sf4(self, problem, args):
        """
        Weighted proximal ADMM on the SF4 model, with ``N = tau I``
        (``n_mode="ProxIdentity"``) or ``N = tau I - rho A^TA``
        (``n_mode="Linearized"``). C must be convex.
        """
        return self.build(Algorithm.WPADMM_SF4, problem, args)

    def cq_multiset(self, problem, args):
        return self.build(Algorithm.CQ_MULTISET, problem, args)


def check_requirements(problem, config):
    """
    Check the comparison table requirements on A and the convexity each
    model assumes.

    With ``override_requirements`` every violation becomes a
    ``SplitFeasibilityWarning`` and is returned so the trace can record it.

    :return: list of overridden violation messages
    :raise RequirementError: on a violation without override
    """
    algorithm = config.algorithm
    violations = []
    report = None
    if algorithm != Algorithm.CQ_MULTISET:
        report = check_table_requirements(problem.spectrum(), algorithm, config.n_mode)
        violations.extend(report.violations)

    if algorithm in (Algorithm.AM_SF1P, Algorithm.PG_SF3, Algorithm.CQ_MULTISET):
        for j, q in enumerate(problem.setsQ):
            if not q.is_convex:
                name = "Q" if problem.r == 1 else "Q[{0}]".format(j)
                violations.append(
                    "{0} must be convex for {1}, got {2}".format(
                        name, algorithm, q.kind
                    )
                )
    if algorithm == Algorithm.WPADMM_SF4 and not problem.setC.is_convex:
        violations.append(
            "C must be convex for {0}, got {1}".format(algorithm, problem.setC.kind)
        )

    if not violations:
        return []
    if not config.override_requirements:
        raise RequirementError(
            "Requirements violated for {0}: {1}".format(
                algorithm, "; ".join(violations)
            ),
            report,
        )
    for message in violations:
        warnings.warn(
            "Requirement overridden: {0}".format(message), SplitFeasibilityWarning
        )
        log.warning("requirement overridden: %s", message)
    return violations
