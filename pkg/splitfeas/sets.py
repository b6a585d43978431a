#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""
Catalog of projectable sets.

Every set knows its dimension, whether it is convex, how to project onto it
and how to serialize itself (``build``). Projections onto non-convex sets may
be set-valued; each class documents the element it returns so runs replay
bit for bit.
"""
import numpy as np

from splitfeas.exceptions import DimensionError, SetSpecError

MEMBERSHIP_TOL = 1e-9


def _vector(value, name):
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SetSpecError("{0} must be a real vector".format(name))
    if v.ndim != 1 or v.shape[0] == 0:
        raise SetSpecError("{0} must be a non-empty real vector".format(name))
    v.setflags(write=False)
    return v


def _finite_vector(value, name):
    v = _vector(value, name)
    if not np.all(np.isfinite(v)):
        raise SetSpecError("{0} must be finite".format(name))
    return v


def _positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise SetSpecError("{0} must be a real number".format(name))
    if not (np.isfinite(value) and value > 0):
        raise SetSpecError("{0} must be positive, got {1}".format(name, value))
    return value


def _encode_bound(v):
    # JSON has no infinities
    return [x if np.isfinite(x) else ("inf" if x > 0 else "-inf") for x in v.tolist()]


def project_simplex(v, scale=1.0):
    """
    Euclidean projection of ``v`` onto ``{w >= 0 : sum(w) = scale}``.

    Sort-based, O(d log d).
    """
    v = np.asarray(v, dtype=float)
    mu = np.sort(v)[::-1]
    cssv = np.cumsum(mu) - scale
    ind = np.arange(1, v.shape[0] + 1)
    cond = mu - cssv / ind > 0
    rho = ind[cond][-1]
    theta = cssv[cond][-1] / float(rho)
    return np.maximum(v - theta, 0.0)


class SetSpec(object):
    """
    Base class of the set catalog.

    Subclasses set ``kind`` and ``is_convex`` and implement ``dimension``,
    ``_project`` and ``build``.
    """

    kind = None
    is_convex = False

    @property
    def dimension(self):
        raise NotImplementedError("Subclasses must implement this method")

    def _project(self, u):
        raise NotImplementedError("Subclasses must implement this method")

    def build(self):
        raise NotImplementedError("Subclasses must implement this method")

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.ndim != 1:
            raise DimensionError(self.kind, self.dimension, u.shape)
        if u.shape[0] != self.dimension:
            raise DimensionError(self.kind, self.dimension, u.shape[0])
        return u

    def project(self, u):
        return self._project(self._check(u))

    def distance(self, u):
        u = self._check(u)
        return float(np.linalg.norm(u - self._project(u)))

    def is_member(self, u, tol=MEMBERSHIP_TOL):
        return self.distance(u) <= tol

    def half_sq_distance_gradient(self, u):
        if not self.is_convex:
            raise SetSpecError(
                "gradient undefined for non-convex set ({0})".format(self.kind)
            )
        u = self._check(u)
        return u - self._project(u)

    def __eq__(self, other):
        if not isinstance(other, SetSpec):
            return NotImplemented
        return self.build() == other.build()

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash(repr(self.build()))

    def __repr__(self):
        return "{0}(dimension={1})".format(self.__class__.__name__, self.dimension)


class Box(SetSpec):
    """
    Componentwise box ``lower <= u <= upper``. Bounds may be infinite.

    :ivar lower: lower bounds
    :ivar upper: upper bounds
    """

    kind = "box"
    is_convex = True

    def __init__(self, lower, upper):
        self.lower = _vector(lower, "Box lower")
        self.upper = _vector(upper, "Box upper")
        if self.lower.shape != self.upper.shape:
            raise SetSpecError("Box lower and upper must have the same length")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise SetSpecError("Box bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise SetSpecError("Box invariant lower <= upper violated")

    @classmethod
    def free(cls, dimension):
        """The whole space, as an unbounded box."""
        return cls(np.full(dimension, -np.inf), np.full(dimension, np.inf))

    @property
    def dimension(self):
        return self.lower.shape[0]

    def _project(self, u):
        return np.clip(u, self.lower, self.upper)

    def build(self):
        return {
            "kind": self.kind,
            "lower": _encode_bound(self.lower),
            "upper": _encode_bound(self.upper),
        }


class Ball(SetSpec):
    """Euclidean ball."""

    kind = "ball"
    is_convex = True

    def __init__(self, center, radius):
        self.center = _finite_vector(center, "Ball center")
        self.radius = _positive(radius, "Ball radius")

    @property
    def dimension(self):
        return self.center.shape[0]

    def _project(self, u):
        d = u - self.center
        norm = np.linalg.norm(d)
        if norm <= self.radius:
            return u.copy()
        return self.center + (self.radius / norm) * d

    def build(self):
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "radius": self.radius,
        }


class L1Ball(SetSpec):
    """Ball of the l1-norm, ``||u - center||_1 <= radius``."""

    kind = "l1ball"
    is_convex = True

    def __init__(self, center, radius):
        self.center = _finite_vector(center, "L1Ball center")
        self.radius = _positive(radius, "L1Ball radius")

    @property
    def dimension(self):
        return self.center.shape[0]

    def _project(self, u):
        d = u - self.center
        if np.sum(np.abs(d)) <= self.radius:
            return u.copy()
        return self.center + np.sign(d) * project_simplex(np.abs(d), self.radius)

    def build(self):
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "radius": self.radius,
        }


class _Affine(SetSpec):
    is_convex = True

    def __init__(self, normal, offset):
        self.normal = _finite_vector(normal, self.__class__.__name__ + " normal")
        if not np.any(self.normal != 0):
            raise SetSpecError(
                "{0} normal must be nonzero".format(self.__class__.__name__)
            )
        self.offset = float(offset)
        if not np.isfinite(self.offset):
            raise SetSpecError(
                "{0} offset must be finite".format(self.__class__.__name__)
            )
        self._sq_norm = float(self.normal.dot(self.normal))

    @property
    def dimension(self):
        return self.normal.shape[0]

    def build(self):
        return {
            "kind": self.kind,
            "normal": self.normal.tolist(),
            "offset": self.offset,
        }


class Halfspace(_Affine):
    """``{u : <normal, u> <= offset}``"""

    kind = "halfspace"

    def _project(self, u):
        excess = self.normal.dot(u) - self.offset
        if excess <= 0:
            return u.copy()
        return u - (excess / self._sq_norm) * self.normal


class Hyperplane(_Affine):
    """``{u : <normal, u> = offset}``"""

    kind = "hyperplane"

    def _project(self, u):
        excess = self.normal.dot(u) - self.offset
        return u - (excess / self._sq_norm) * self.normal


class AffineSubspace(SetSpec):
    """
    ``anchor + range(basis)``, where ``basis`` is an n x k matrix with
    orthonormal columns.
    """

    kind = "affine"
    is_convex = True

    def __init__(self, basis, anchor):
        try:
            basis = np.array(basis, dtype=float)
        except (TypeError, ValueError):
            raise SetSpecError("AffineSubspace basis must be a real matrix")
        if basis.ndim != 2 or basis.shape[1] == 0:
            raise SetSpecError("AffineSubspace basis must be an n x k matrix")
        if not np.all(np.isfinite(basis)):
            raise SetSpecError("AffineSubspace basis must be finite")
        if not np.allclose(basis.T.dot(basis), np.eye(basis.shape[1]), atol=1e-9):
            raise SetSpecError("AffineSubspace basis columns must be orthonormal")
        basis.setflags(write=False)
        self.basis = basis
        self.anchor = _finite_vector(anchor, "AffineSubspace anchor")
        if self.anchor.shape[0] != basis.shape[0]:
            raise SetSpecError("AffineSubspace anchor and basis rows must agree")

    @property
    def dimension(self):
        return self.anchor.shape[0]

    def _project(self, u):
        d = u - self.anchor
        return self.anchor + self.basis.dot(self.basis.T.dot(d))

    def build(self):
        return {
            "kind": self.kind,
            "basis": self.basis.tolist(),
            "anchor": self.anchor.tolist(),
        }


class Simplex(SetSpec):
    """``{u >= 0 : sum(u) = scale}``"""

    kind = "simplex"
    is_convex = True

    def __init__(self, dimension, scale=1.0):
        self._dimension = _positive_int(dimension, "Simplex dimension")
        self.scale = _positive(scale, "Simplex scale")

    @property
    def dimension(self):
        return self._dimension

    def _project(self, u):
        return project_simplex(u, self.scale)

    def build(self):
        return {"kind": self.kind, "dimension": self._dimension, "scale": self.scale}


class SparsityBall(SetSpec):
    """
    ``{u : ||u||_0 <= s}``.

    Projection keeps the ``s`` entries of largest magnitude; ties are broken
    in favour of the lowest index.
    """

    kind = "sparsity"

    def __init__(self, dimension, s):
        self._dimension = _positive_int(dimension, "SparsityBall dimension")
        self.s = _positive_int(s, "SparsityBall s")
        if self.s > self._dimension:
            raise SetSpecError("SparsityBall s must not exceed the dimension")

    @property
    def dimension(self):
        return self._dimension

    def _project(self, u):
        # stable sort keeps lower indices first among equal magnitudes
        keep = np.argsort(-np.abs(u), kind="stable")[: self.s]
        p = np.zeros_like(u)
        p[keep] = u[keep]
        return p

    def build(self):
        return {"kind": self.kind, "dimension": self._dimension, "s": self.s}


class Sphere(SetSpec):
    """
    ``{u : ||u - center|| = radius}``.

    The center projects to ``center + radius * e_1``.
    """

    kind = "sphere"

    def __init__(self, center, radius):
        self.center = _finite_vector(center, "Sphere center")
        self.radius = _positive(radius, "Sphere radius")

    @property
    def dimension(self):
        return self.center.shape[0]

    def _project(self, u):
        d = u - self.center
        norm = np.linalg.norm(d)
        if norm == 0:
            p = self.center.copy()
            p[0] += self.radius
            return p
        return self.center + (self.radius / norm) * d

    def build(self):
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "radius": self.radius,
        }


class FiniteSet(SetSpec):
    """
    A finite list of points. Equidistant candidates resolve to the lowest
    index.
    """

    kind = "finite"

    def __init__(self, points):
        try:
            points = np.array(points, dtype=float)
        except (TypeError, ValueError):
            raise SetSpecError("FiniteSet points must be real vectors")
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] == 0:
            raise SetSpecError(
                "FiniteSet needs a nonempty list of equal-length real vectors"
            )
        if not np.all(np.isfinite(points)):
            raise SetSpecError("FiniteSet points must be finite")
        points.setflags(write=False)
        self.points = points

    @property
    def dimension(self):
        return self.points.shape[1]

    def _project(self, u):
        distances = np.linalg.norm(self.points - u, axis=1)
        # argmin returns the first minimizer
        return self.points[int(np.argmin(distances))].copy()

    def build(self):
        return {"kind": self.kind, "points": self.points.tolist()}


class UnionOfConvex(SetSpec):
    """
    Finite union of convex catalog sets. The nearest member projection wins;
    ties go to the lowest member index.
    """

    kind = "union"

    def __init__(self, members):
        members = list(members)
        if not members:
            raise SetSpecError("UnionOfConvex needs a nonempty list of members")
        for i, member in enumerate(members):
            if not isinstance(member, SetSpec):
                raise SetSpecError("UnionOfConvex member {0} is not a set".format(i))
            if not member.is_convex:
                raise SetSpecError(
                    "UnionOfConvex members must be convex, member {0} is {1}".format(
                        i, member.kind
                    )
                )
        dims = set(member.dimension for member in members)
        if len(dims) != 1:
            raise SetSpecError("UnionOfConvex members must share one dimension")
        self.members = tuple(members)

    @property
    def dimension(self):
        return self.members[0].dimension

    def _project(self, u):
        best, best_distance = None, np.inf
        for member in self.members:
            p = member._project(u)
            d = np.linalg.norm(u - p)
            if d < best_distance:
                best, best_distance = p, d
        return best

    def build(self):
        return {
            "kind": self.kind,
            "members": [member.build() for member in self.members],
        }


def _positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or int(value) <= 0:
        raise SetSpecError(
            "{0} must be a positive integer, got {1}".format(name, value)
        )
    return int(value)


_KINDS = {
    cls.kind: cls
    for cls in (
        Box,
        Ball,
        L1Ball,
        Halfspace,
        Hyperplane,
        AffineSubspace,
        Simplex,
        SparsityBall,
        Sphere,
        FiniteSet,
        UnionOfConvex,
    )
}

_FIELDS = {
    "box": ("lower", "upper"),
    "ball": ("center", "radius"),
    "l1ball": ("center", "radius"),
    "halfspace": ("normal", "offset"),
    "hyperplane": ("normal", "offset"),
    "affine": ("basis", "anchor"),
    "simplex": ("dimension", "scale"),
    "sparsity": ("dimension", "s"),
    "sphere": ("center", "radius"),
    "finite": ("points",),
    "union": ("members",),
}


def build_set(set_dict, _nested=False):
    """
    Parse the tagged JSON form of a set, the inverse of ``SetSpec.build``.

    :param dict set_dict: ``{"kind": ..., <variant fields>}``
    :rtype: SetSpec
    :raise SetSpecError: on unknown kinds, missing fields or broken invariants
    """
    if not isinstance(set_dict, dict):
        raise SetSpecError("Set definition must be an object with a 'kind' field")
    kind = set_dict.get("kind")
    if kind not in _KINDS:
        raise SetSpecError(
            "Set kind: {0} does not exist. Valid kinds are: {1}".format(
                kind, ", ".join(sorted(_KINDS))
            )
        )
    missing = [f for f in _FIELDS[kind] if f not in set_dict]
    if missing:
        raise SetSpecError(
            "Set kind {0} is missing field(s): {1}".format(kind, ", ".join(missing))
        )
    extra = [k for k in set_dict if k != "kind" and k not in _FIELDS[kind]]
    if extra:
        raise SetSpecError(
            "Set kind {0} does not accept field(s): {1}".format(kind, ", ".join(extra))
        )

    args = dict((f, set_dict[f]) for f in _FIELDS[kind])
    if kind == "box":
        try:
            # bounds may be the strings "inf" / "-inf"
            args = {
                "lower": [float(v) for v in args["lower"]],
                "upper": [float(v) for v in args["upper"]],
            }
        except (TypeError, ValueError):
            raise SetSpecError("Box bounds must be lists of numbers")
    elif kind == "union":
        if _nested:
            raise SetSpecError("UnionOfConvex members cannot be unions")
        if not isinstance(args["members"], list):
            raise SetSpecError("UnionOfConvex members must be a list")
        args["members"] = [build_set(m, _nested=True) for m in args["members"]]
    return _KINDS[kind](**args)


# ----- module level operations -----


def project(set, u):
    return set.project(u)


def distance(set, u):
    return set.distance(u)


def is_member(set, u, tol=MEMBERSHIP_TOL):
    return set.is_member(u, tol)


def half_sq_distance_gradient(set, u):
    """Gradient ``u - P(u)`` of ``(1/2) d^2``; convex sets only."""
    return set.half_sq_distance_gradient(u)
