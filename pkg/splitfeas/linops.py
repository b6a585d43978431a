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
import logging
from collections import namedtuple

import numpy as np
import scipy.linalg

from splitfeas.algorithms import GRAM_CONDITION, ROWGRAM_PD, table_row
from splitfeas.exceptions import DataError, DimensionError, NumericalError

log = logging.getLogger(__name__)

# relative threshold for the numerical rank decision "AA^T > 0"
PD_THRESHOLD = 1e-10


class LinearMap(object):
    """
    Dense linear map ``A : R^n -> R^m``.

    The entries are copied on construction and frozen, so a LinearMap can be
    shared freely between solvers and threads.

    :param entries: row-major nested sequence or 2-D array of shape (m, n)
    :raise DataError: if the entries are not a finite, non-empty 2-D array
    """

    def __init__(self, entries):
        try:
            matrix = np.array(entries, dtype=float)
        except (TypeError, ValueError) as e:
            raise DataError("Linear map entries are not a real matrix: {0}".format(e))
        if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise DataError(
                "Linear map entries must form a non-empty 2-D array, "
                "got shape {0}".format(matrix.shape)
            )
        if not np.all(np.isfinite(matrix)):
            raise DataError("Linear map entries must be finite (no NaN/Inf)")
        matrix.setflags(write=False)
        self._matrix = matrix

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def rows(self):
        return self._matrix.shape[0]

    @property
    def cols(self):
        return self._matrix.shape[1]

    @property
    def entries(self):
        return self._matrix

    @property
    def T(self):
        return LinearMap(self._matrix.T)

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        return self._matrix.dot(x)

    def apply_adjoint(self, y):
        y = _as_vector(y, self.rows, "apply_adjoint")
        return self._matrix.T.dot(y)

    def gram(self):
        """Return the n x n matrix A^T A."""
        return self._matrix.T.dot(self._matrix)

    def is_scaled_orthogonal(self, rtol=1e-10):
        """
        Return ``c**2`` when ``A^T A = c**2 I``, else None.
        """
        gram = self.gram()
        c2 = float(np.trace(gram)) / self.cols
        if c2 <= 0.0:
            return None
        if np.max(np.abs(gram - c2 * np.eye(self.cols))) <= rtol * c2:
            return c2
        return None

    def to_list(self):
        return self._matrix.tolist()

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return self._matrix.shape == other._matrix.shape and bool(
            np.array_equal(self._matrix, other._matrix)
        )

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash((self._matrix.shape, self._matrix.tobytes()))

    def __repr__(self):
        return "LinearMap(rows={0}, cols={1})".format(self.rows, self.cols)


def _as_vector(v, length, what):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError(what, length, v.shape)
    if v.shape[0] != length:
        raise DimensionError(what, length, v.shape[0])
    return v


def apply(map, x):
    return map.apply(x)


def apply_adjoint(map, y):
    return map.apply_adjoint(y)


class SpectralSummary(
    namedtuple(
        "SpectralSummary",
        [
            "gram_lambda_max",
            "gram_lambda_min",
            "gram_condition",
            "rowgram_lambda_min",
            "operator_norm",
        ],
    )
):
    """
    Extreme eigenvalues of ``A^T A`` and ``A A^T``.

    :ivar float gram_lambda_max: largest eigenvalue of A^T A
    :ivar float gram_lambda_min: smallest eigenvalue of A^T A
    :ivar float gram_condition: condition number of A^T A, ``inf`` if singular
    :ivar float rowgram_lambda_min: smallest eigenvalue of A A^T
    :ivar float operator_norm: spectral norm of A
    """

    __slots__ = ()

    @property
    def rowgram_positive_definite(self):
        return self.rowgram_lambda_min > PD_THRESHOLD * self.gram_lambda_max


def spectral_summary(map, tol=1e-12):
    """
    Compute the spectral quantities every step-size rule depends on.

    The eigendecomposition is done on the smaller of the two Gram matrices;
    the other one shares its nonzero eigenvalues and has ``|m - n|`` extra
    zeros. Eigenvalues below ``tol * lambda_max`` are round-off and set to 0.

    :param LinearMap map: the linear map
    :param float tol: relative accuracy of the reported eigenvalues
    :rtype: SpectralSummary
    :raise NumericalError: if the eigensolver fails
    """
    if not tol > 0:
        raise DataError("tol must be positive, got {0}".format(tol))

    m, n = map.rows, map.cols
    a = map.entries
    small = a.T.dot(a) if n <= m else a.dot(a.T)
    try:
        eigenvalues = scipy.linalg.eigh(small, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError("Symmetric eigensolver failed: {0}".format(e))
    if not np.all(np.isfinite(eigenvalues)):
        raise NumericalError("Symmetric eigensolver returned non-finite values")

    lmax = max(float(eigenvalues[-1]), 0.0)
    eigenvalues = np.where(np.abs(eigenvalues) <= tol * lmax, 0.0, eigenvalues)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    lmin_small = float(eigenvalues[0])

    gram_min = lmin_small if n <= m else 0.0
    rowgram_min = lmin_small if m <= n else 0.0
    condition = lmax / gram_min if gram_min > 0 else float("inf")

    summary = SpectralSummary(
        gram_lambda_max=lmax,
        gram_lambda_min=gram_min,
        gram_condition=condition,
        rowgram_lambda_min=rowgram_min,
        operator_norm=float(np.sqrt(lmax)),
    )
    log.debug("spectral summary of %r: %s", map, summary)
    return summary


class RequirementReport(
    namedtuple("RequirementReport", ["row", "requirements", "violations"])
):
    __slots__ = ()

    @property
    def satisfied(self):
        return not self.violations

    @property
    def label(self):
        """The table's requirements column: "Unknown", "None" or the list."""
        if self.requirements is None:
            return "Unknown"
        if not self.requirements:
            return "None"
        return ", ".join(self.requirements)

    def __str__(self):
        if self.violations:
            return "{0}: {1}".format(self.row.key, "; ".join(self.violations))
        if self.requirements:
            return "{0}: all requirements met ({1})".format(self.row.key, self.label)
        return "{0}: {1}".format(self.row.key, self.label)


def check_table_requirements(summary, algorithm, n_mode=None):
    """
    Check the requirements the comparison table puts on the linear map.

    The report is advisory; solvers refuse to run on a violation unless the
    configuration overrides requirements.

    :param SpectralSummary summary: spectral summary of A
    :param str algorithm: solver algorithm id or table key (``alg1``..``alg7``)
    :param str n_mode: proximal mode when ``algorithm`` is WPADMM_SF4
    :rtype: RequirementReport
    """
    row = table_row(algorithm, n_mode)
    violations = []
    for requirement in row.requirements or ():
        if requirement == ROWGRAM_PD and not summary.rowgram_positive_definite:
            violations.append(
                "AA^T > 0 fails (lambda_min(AA^T) = {0:.6g})".format(
                    summary.rowgram_lambda_min
                )
            )
        elif requirement == GRAM_CONDITION and not summary.gram_condition < 2:
            violations.append(
                "kappa(A^TA) < 2 fails (kappa(A^TA) = {0:.6g})".format(
                    summary.gram_condition
                )
            )
    return RequirementReport(row, row.requirements, tuple(violations))
