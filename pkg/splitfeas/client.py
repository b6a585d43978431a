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
from splitfeas.config import ConfigBuilder
from splitfeas.solvers import run


class SolverClient(object):
    """
    SolverClient runs the split feasibility solvers with keyword arguments.
    Each method builds a ``SolverConfig`` (rejecting parameters the algorithm
    does not read), runs it and returns the ``IterateTrace``. The last trace
    stays available for export.

    Example

    .. code-block:: python
        :linenos:

            >>> from splitfeas.client import SolverClient
            >>> from splitfeas.problems import GeneratorSpec, generate, initial_point
            >>> problem = generate(GeneratorSpec(n=20, m=15, seed=7))
            >>> x0 = initial_point(problem, seed=7)
            >>> client = SolverClient()
            >>> trace = client.cq(problem, x0, lam=1.0, max_iter=5000)
            >>> trace.termination_reason
            'residual_tol'
            >>> client.export_csv('cq.csv')
    """

    def __init__(self):
        self.config_builder = ConfigBuilder()
        self.last_trace = None

    def _run(self, config, problem, x0, u0=None, y0=None):
        self.last_trace = run(problem, config, x0, u0=u0, y0=y0)
        return self.last_trace

    # --------- Solver implementations ---------

    def padmm_sf1(self, problem, x0, u0=None, y0=None, **kwargs):
        """
        Proximal ADMM on the SF1 model (experimental: no convergence theory).

        Optional key/value pairs:

        :param float rho: Lagrangian penalty, default ``10 max(1, lambda_max(A^TA))``
        :param float tau1: proximal weight of the u-step, default 1
        :param float tau2: proximal weight of the x-step, default 1
        :param float inner_tol: inner solver tolerance
        :param int inner_max_iter: inner solver iteration cap
        :param str inner_backend: ``auto``, ``orthogonal``, ``fixed_point`` or ``none``

        :return: the trace
        :rtype: IterateTrace
        """
        config = self.config_builder.padmm_sf1(problem, kwargs)
        return self._run(config, problem, x0, u0, y0)

    def pg_sf1p(self, problem, x0, u0=None, **kwargs):
        """
        Parallel projected gradient on the penalized model.

        :param float lam: penalty weight, default 1
        :param float tau: step parameter, at least ``lam (lambda_max(A^TA) + 1)``
        """
        config = self.config_builder.pg_sf1p(problem, kwargs)
        return self._run(config, problem, x0, u0)

    def am_sf1p(self, problem, x0, **kwargs):
        """
        Alternating minimization on the penalized model. Q must be convex.

        :param float lam: penalty weight, default 1
        """
        config = self.config_builder.am_sf1p(problem, kwargs)
        return self._run(config, problem, x0)

    def cq(self, problem, x0, **kwargs):
        """
        The CQ algorithm.

        :param float lam: penalty weight, default 1
        :param float tau: step parameter, above ``lam lambda_max(A^TA)``
        """
        config = self.config_builder.cq(problem, kwargs)
        return self._run(config, problem, x0)

    def pg_sf3(self, problem, x0, **kwargs):
        config = self.config_builder.pg_sf3(problem, kwargs)
        return self._run(config, problem, x0)

    def wpadmm_sf4(self, problem, x0, u0=None, y0=None, **kwargs):
        """
        Weighted proximal ADMM on the SF4 model. C must be convex.

        :param str n_mode: ``ProxIdentity`` (``N = tau I``) or ``Linearized``
            (``N = tau I - rho A^TA``)
        :param float rho: Lagrangian penalty
        :param float tau: weight of N
        """
        config = self.config_builder.wpadmm_sf4(problem, kwargs)
        return self._run(config, problem, x0, u0, y0)

    def cq_multiset(self, problem, x0, **kwargs):
        config = self.config_builder.cq_multiset(problem, kwargs)
        return self._run(config, problem, x0)

    def solve(self, algorithm, problem, x0, u0=None, y0=None, **kwargs):
        """Run any algorithm by id."""
        config = self.config_builder.build(algorithm, problem, kwargs)
        return self._run(config, problem, x0, u0, y0)

    def export_csv(self, dest_path):
        """
        Export the last trace to a CSV file.
        """
        if self.last_trace is None:
            raise AttributeError(
                "There was no solver run by this client yet. Can't export!"
            )
        else:
            return self.last_trace.export_csv(dest_path)

    def export_pandas(self):
        """
        Export the last trace to a pandas DataFrame object.
        """
        if self.last_trace is None:
            raise AttributeError(
                "There was no solver run by this client yet. Can't export!"
            )
        else:
            return self.last_trace.export_pandas()
