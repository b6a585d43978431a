"""
Problem generators and the on-disk problem format.

A problem file is a single JSON document::

    {"version": 1,
     "C": <set>,
     "A": <m x n matrix>, "Q": <set>,            # single set
     "A_j": [<matrix>, ...], "Q_j": [<set>, ...], # or several
     "witness": <vector or null>,
     "metadata": {...}}

Sets use the tagged form of ``SetSpec.build``; infinite box bounds are the
strings ``"inf"`` and ``"-inf"``.
"""
import hashlib
import json
import logging
from collections import namedtuple

import numpy as np
import ujson

from splitfeas.algorithms import CLI_NAMES, table_row
from splitfeas.exceptions import (
    ConfigError,
    DataError,
    DimensionError,
    GeneratorError,
    ProblemFormatError,
    SetSpecError,
)
from splitfeas.linops import LinearMap
from splitfeas.objectives import ProblemInstance
from splitfeas.sets import (
    Ball,
    Box,
    FiniteSet,
    Halfspace,
    Hyperplane,
    L1Ball,
    Simplex,
    SparsityBall,
    Sphere,
    UnionOfConvex,
    build_set,
)

log = logging.getLogger(__name__)

PROBLEM_VERSION = 1

FAMILIES = (
    "ball",
    "box",
    "l1ball",
    "simplex",
    "halfspace",
    "hyperplane",
    "sparsity",
    "sphere",
    "finite",
    "union",
    "free",
)

# families whose margin of inconsistency can be certified analytically
SEPARABLE_FAMILIES = ("ball", "box")

# default singular values are drawn from this range
DEFAULT_SPECTRUM_RANGE = (0.5, 2.0)

# singular values are mapped into this range to meet kappa(A^TA) < 2
CONDITIONED_RANGE = (1.0, 1.4)

# size of Q relative to C around a planted solution
Q_SCALE = 0.1

# start points use their own stream next to the generator stream of a seed
START_STREAM = 1


# ----- JSON helpers -----


def encode_float(value):
    if value is None:
        return None
    value = float(value)
    if np.isfinite(value):
        return value
    if np.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def decode_float(value):
    if value is None:
        return None
    if isinstance(value, str):
        if value not in ("inf", "-inf", "nan"):
            raise ValueError("not a number: {0!r}".format(value))
        return float(value)
    if isinstance(value, bool):
        raise ValueError("not a number: {0!r}".format(value))
    return float(value)


def parse_json(text, what):
    """
    Parse a JSON document.

    :param str text: document text
    :param str what: name of the document, used in error messages
    :raise ProblemFormatError: with the line and column of the first error
    """
    try:
        return ujson.loads(text)
    except ValueError:
        pass
    # ujson does not report positions
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(
            "{0}: malformed JSON at line {1} column {2}: {3}".format(
                what, e.lineno, e.colno, e.msg
            )
        )


# ----- problem format -----


def problem_to_dict(problem, include_metadata=True):
    data = {"version": PROBLEM_VERSION, "C": problem.setC.build()}
    if problem.is_multiset:
        data["A_j"] = [a.to_list() for a in problem.maps]
        data["Q_j"] = [q.build() for q in problem.setsQ]
    else:
        data["A"] = problem.maps[0].to_list()
        data["Q"] = problem.setsQ[0].build()
    witness = problem.consistency_witness
    data["witness"] = None if witness is None else witness.tolist()
    if include_metadata:
        data["metadata"] = problem.metadata
    return data


def problem_digest(problem):
    """sha256 of the canonical JSON of the problem, metadata excluded."""
    canonical = json.dumps(
        problem_to_dict(problem, include_metadata=False),
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _field(path, build, value):
    try:
        return build(value)
    except (SetSpecError, DataError, DimensionError) as e:
        raise ProblemFormatError("{0}: {1}".format(path, e))


def problem_from_dict(data):
    """
    Build a problem from its JSON form.

    :raise ProblemFormatError: naming the offending field
    """
    if not isinstance(data, dict):
        raise ProblemFormatError("problem: expected a JSON object")
    if "version" not in data:
        raise ProblemFormatError("version: missing field")
    if data["version"] != PROBLEM_VERSION:
        raise ProblemFormatError(
            "version: unsupported problem version {0!r}, expected {1}".format(
                data["version"], PROBLEM_VERSION
            )
        )
    if "C" not in data:
        raise ProblemFormatError("C: missing field")
    setC = _field("C", build_set, data["C"])

    if "A_j" in data or "Q_j" in data:
        for key in ("A_j", "Q_j"):
            if not isinstance(data.get(key), list) or not data[key]:
                raise ProblemFormatError("{0}: expected a non-empty list".format(key))
        maps = [
            _field("A_j[{0}]".format(j), LinearMap, a)
            for j, a in enumerate(data["A_j"])
        ]
        setsQ = [
            _field("Q_j[{0}]".format(j), build_set, q)
            for j, q in enumerate(data["Q_j"])
        ]
        prefix = ("A_j", "Q_j")
    else:
        for key in ("A", "Q"):
            if key not in data:
                raise ProblemFormatError("{0}: missing field".format(key))
        maps = [_field("A", LinearMap, data["A"])]
        setsQ = [_field("Q", build_set, data["Q"])]
        prefix = ("A", "Q")

    problem = _field(
        "/".join(prefix), lambda parts: ProblemInstance(setC, *parts), (maps, setsQ)
    )
    witness = data.get("witness")
    if witness is not None:
        problem = _field(
            "witness",
            lambda w: ProblemInstance(setC, maps, setsQ, consistency_witness=w),
            witness,
        )
    problem.metadata = dict(data.get("metadata") or {})
    return problem


def save_problem(problem, path):
    """Write a problem as JSON; the same problem always gives the same bytes."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(problem_to_dict(problem), sort_keys=True, indent=1))
        f.write("\n")


def load_problem(path):
    """
    Read a problem written by ``save_problem``.

    :raise ProblemFormatError: on malformed JSON, schema or dimension errors
    """
    with open(path, encoding="utf-8") as f:
        data = parse_json(f.read(), path)
    problem = problem_from_dict(data)
    log.debug("loaded %r from %s", problem, path)
    return problem


# ----- generator -----


class GeneratorSpec(
    namedtuple(
        "GeneratorSpec",
        [
            "n",
            "m",
            "set_family_C",
            "set_family_Q",
            "consistent",
            "seed",
            "spectrum",
            "enforce_requirements_for",
            "margin",
        ],
    )
):
    """
    What to generate.

    :ivar int n: dimension of C
    :ivar m: dimension of Q, or a list of dimensions of Q_j for a multiset
        problem
    :ivar str set_family_C: one of ``FAMILIES``
    :ivar str set_family_Q: one of ``FAMILIES``
    :ivar bool consistent: plant a solution, or separate A(C) from Q
    :ivar int seed: determines the whole instance
    :ivar spectrum: singular values of A, ``min(m, n)`` of them
    :ivar str enforce_requirements_for: table row (``alg6``, ``alg7``) or
        solver name whose requirements A must meet
    :ivar float margin: distance between A(C) and Q for inconsistent problems
    """

    __slots__ = ()

    def __new__(
        cls,
        n,
        m,
        set_family_C="ball",
        set_family_Q="ball",
        consistent=True,
        seed=0,
        spectrum=None,
        enforce_requirements_for=None,
        margin=1.0,
    ):
        return super(GeneratorSpec, cls).__new__(
            cls,
            n,
            m,
            set_family_C,
            set_family_Q,
            consistent,
            seed,
            spectrum,
            enforce_requirements_for,
            margin,
        )


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    # sign fix makes the factor unique
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def _requirement_row(enforce):
    if enforce is None:
        return None
    if enforce in CLI_NAMES:
        return table_row(*CLI_NAMES[enforce]).key
    try:
        return table_row(enforce).key
    except ConfigError as e:
        raise GeneratorError(str(e))


def _singular_values(spec, m, n, rng):
    p = min(m, n)
    row = _requirement_row(spec.enforce_requirements_for)
    if row == "alg7" and m != n:
        raise GeneratorError(
            "kappa(A^TA) < 2 needs a square A (A^TA is singular when n > m), "
            "got m={0}, n={1}".format(m, n)
        )
    if row in ("alg6", "alg7") and m > n:
        raise GeneratorError(
            "AA^T > 0 needs full row rank, impossible with m={0} > n={1}".format(m, n)
        )

    if spec.spectrum is not None:
        sigma = np.array(spec.spectrum, dtype=float)
        if sigma.shape != (p,):
            raise GeneratorError(
                "spectrum needs min(m, n) = {0} singular values, got {1}".format(
                    p, sigma.size
                )
            )
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise GeneratorError("singular values must be finite and nonnegative")
    else:
        sigma = rng.uniform(DEFAULT_SPECTRUM_RANGE[0], DEFAULT_SPECTRUM_RANGE[1], p)
    sigma = np.sort(sigma)[::-1]

    if row in ("alg6", "alg7") and not sigma[-1] > 0:
        raise GeneratorError("AA^T > 0 needs positive singular values")
    if row == "alg7" and not (sigma[0] / sigma[-1]) ** 2 < 2:
        lo, hi = CONDITIONED_RANGE
        spread = sigma[0] - sigma[-1]
        sigma = lo + (hi - lo) * (sigma - sigma[-1]) / spread
        log.info("singular values rescaled into [%g, %g] for kappa(A^TA) < 2", lo, hi)
    return sigma


def _linear_map(spec, m, n, rng):
    sigma = _singular_values(spec, m, n, rng)
    p = sigma.shape[0]
    u = _orthogonal(rng, m)
    v = _orthogonal(rng, n)
    return LinearMap((u[:, :p] * sigma).dot(v[:, :p].T)), sigma


def _around(family, point, rng, name, scale=1.0):
    """A set of the family that contains ``point``, strictly inside when it can."""
    d = point.shape[0]
    radius = scale * rng.uniform(1.0, 2.0)
    if family == "ball":
        return Ball(point + 0.5 * radius * _unit(rng, d), radius)
    if family == "box":
        center = point + 0.5 * radius * rng.uniform(-1.0, 1.0, d)
        return Box(center - radius, center + radius)
    if family == "l1ball":
        w = rng.standard_normal(d)
        return L1Ball(point + 0.5 * radius * w / np.sum(np.abs(w)), radius)
    if family == "halfspace":
        normal = rng.standard_normal(d)
        return Halfspace(normal, normal.dot(point) + radius)
    if family == "hyperplane":
        normal = rng.standard_normal(d)
        return Hyperplane(normal, normal.dot(point))
    if family == "sphere":
        return Sphere(point - radius * _unit(rng, d), radius)
    if family == "finite":
        points = list(point + 3.0 * rng.standard_normal((4, d)))
        points.insert(int(rng.integers(0, 5)), point)
        return FiniteSet(points)
    if family == "union":
        near = Ball(point + 0.5 * radius * _unit(rng, d), radius)
        far = Ball(point + 4.0 * radius * _unit(rng, d), radius)
        members = [near, far] if rng.uniform() < 0.5 else [far, near]
        return UnionOfConvex(members)
    if family == "free":
        return Box.free(d)
    raise GeneratorError(
        "{0} family {1} cannot be placed around a given point".format(name, family)
    )


def _sparse(rng, d):
    s = max(1, d // 4)
    v = np.zeros(d)
    support = rng.choice(d, size=s, replace=False)
    v[support] = rng.uniform(1.0, 2.0, s) * rng.choice([-1.0, 1.0], s)
    return v, s


def _check_spec(spec):
    for name, family in (("C", spec.set_family_C), ("Q", spec.set_family_Q)):
        if family not in FAMILIES:
            raise GeneratorError(
                "Set family for {0}: {1} does not exist. "
                "Valid families are: {2}".format(name, family, ", ".join(FAMILIES))
            )
    if isinstance(spec.n, bool) or int(spec.n) != spec.n or spec.n <= 0:
        raise GeneratorError("n must be a positive integer, got {0!r}".format(spec.n))
    dims = spec.m if isinstance(spec.m, (list, tuple)) else [spec.m]
    if not dims:
        raise GeneratorError("m must not be empty")
    for m in dims:
        if isinstance(m, bool) or int(m) != m or m <= 0:
            raise GeneratorError("m must be a positive integer, got {0!r}".format(m))
    if not (0 <= int(spec.seed) < 2 ** 64):
        raise GeneratorError("seed must be an unsigned 64-bit integer")
    return [int(m) for m in dims]


def generate(spec):
    """
    Generate a problem instance.

    Consistent instances carry the planted solution as their witness;
    inconsistent ones record their certified ``infeasibility_margin`` in
    the metadata.

    :param GeneratorSpec spec: what to generate
    :rtype: ProblemInstance
    :raise GeneratorError: on impossible combinations
    """
    dims = _check_spec(spec)
    multiset = isinstance(spec.m, (list, tuple))
    if multiset and (spec.spectrum is not None or spec.enforce_requirements_for):
        raise GeneratorError(
            "spectrum and enforce_requirements_for apply to single-set problems"
        )
    rng = np.random.default_rng(int(spec.seed))
    n = int(spec.n)
    fam_c, fam_q = spec.set_family_C, spec.set_family_Q

    if not spec.consistent:
        if multiset:
            raise GeneratorError("inconsistent generation needs a single set Q")
        if fam_c not in SEPARABLE_FAMILIES or fam_q not in SEPARABLE_FAMILIES:
            raise GeneratorError(
                "inconsistent generation needs ball or box families, "
                "got {0}/{1}".format(fam_c, fam_q)
            )
        problem = _inconsistent(spec, n, dims[0], rng)
    else:
        problem = _consistent(spec, n, dims, multiset, rng)

    log.info("generated %r (seed %d)", problem, spec.seed)
    return problem


def initial_point(problem, seed):
    """
    ``P_C(g)`` for a standard normal ``g``. The draw comes from its own
    stream, so it never reproduces the planted solution of a problem
    generated with the same seed.

    :raise ConfigError: if the seed is negative
    """
    seed = int(seed)
    if seed < 0:
        raise ConfigError("seed must be nonnegative, got {0}".format(seed))
    rng = np.random.default_rng([seed, START_STREAM])
    return problem.setC.project(rng.standard_normal(problem.n))


def _consistent(spec, n, dims, multiset, rng):
    fam_c, fam_q = spec.set_family_C, spec.set_family_Q
    if fam_q == "simplex":
        raise GeneratorError("Q simplex cannot be translated to contain A x*")
    if fam_q == "sparsity":
        if multiset:
            raise GeneratorError("Q sparsity is supported for a single set Q only")
        if fam_c in ("sparsity", "simplex"):
            raise GeneratorError(
                "C {0} with Q sparsity: x* cannot be planted in both".format(fam_c)
            )
        m = dims[0]
        if m > n:
            raise GeneratorError("Q sparsity needs m <= n so that A is onto")
        a, sigma = _linear_map(spec, m, n, rng)
        if not sigma[-1] > 0:
            raise GeneratorError("Q sparsity needs A of full row rank")
        y_star, s = _sparse(rng, m)
        x_star = np.linalg.pinv(a.entries).dot(y_star)
        setC = _around(fam_c, x_star, rng, "C")
        problem = ProblemInstance(
            setC, [a], [SparsityBall(m, s)], consistency_witness=x_star
        )
        problem.metadata = _metadata(spec, [sigma], None)
        return problem

    if fam_c == "simplex":
        x_star = rng.dirichlet(np.ones(n))
        setC = Simplex(n)
    elif fam_c == "sparsity":
        x_star, s = _sparse(rng, n)
        setC = SparsityBall(n, s)
    else:
        x_star = rng.standard_normal(n)
        setC = _around(fam_c, x_star, rng, "C")

    maps, setsQ, spectra = [], [], []
    for m in dims:
        a, sigma = _linear_map(spec, m, n, rng)
        maps.append(a)
        spectra.append(sigma)
        setsQ.append(_around(fam_q, a.apply(x_star), rng, "Q", scale=Q_SCALE))
    problem = ProblemInstance(setC, maps, setsQ, consistency_witness=x_star)
    problem.metadata = _metadata(spec, spectra, None)
    return problem


def _circumradius(s):
    if isinstance(s, Ball):
        return s.radius
    return float(np.linalg.norm(s.upper - s.lower)) / 2.0


def _center(s):
    if isinstance(s, Ball):
        return s.center
    return (s.upper + s.lower) / 2.0


def _inconsistent(spec, n, m, rng):
    margin = float(spec.margin)
    if not margin > 0:
        raise GeneratorError("margin must be positive, got {0}".format(margin))
    a, sigma = _linear_map(spec, m, n, rng)
    setC = _around(spec.set_family_C, rng.standard_normal(n), rng, "C")
    unit_q = _around(spec.set_family_Q, np.zeros(m), rng, "Q")

    # A(C) lies in the ball of radius ||A|| R_C around A c
    reach = float(sigma[0]) * _circumradius(setC) + _circumradius(unit_q)
    center_q = a.apply(_center(setC)) + (reach + margin) * _unit(rng, m)
    offset = center_q - _center(unit_q)
    if isinstance(unit_q, Ball):
        setQ = Ball(unit_q.center + offset, unit_q.radius)
    else:
        setQ = Box(unit_q.lower + offset, unit_q.upper + offset)

    problem = ProblemInstance(setC, [a], [setQ])
    problem.metadata = _metadata(spec, [sigma], margin)
    return problem


def _metadata(spec, spectra, margin):
    return {
        "generator": {
            "n": int(spec.n),
            "m": list(spec.m) if isinstance(spec.m, (list, tuple)) else int(spec.m),
            "set_family_C": spec.set_family_C,
            "set_family_Q": spec.set_family_Q,
            "consistent": bool(spec.consistent),
            "seed": int(spec.seed),
            "enforce_requirements_for": spec.enforce_requirements_for,
        },
        "singular_values": [s.tolist() for s in spectra],
        "infeasibility_margin": margin,
    }
