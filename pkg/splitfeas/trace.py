"""
Iterate traces.

An ``IterateTrace`` holds one record per iterate, the configuration that
produced it and the digest of the problem it ran on. It exports to CSV
(scalar columns), JSON (optionally with the full vectors) and pandas.
"""
import json
import logging
from collections import namedtuple
from collections.abc import MutableSequence

import numpy as np

from splitfeas.config import SolverConfig
from splitfeas.exceptions import InterfaceError, ProblemFormatError
from splitfeas.objectives import ObjectiveValue
from splitfeas.problems import decode_float, encode_float, parse_json, problem_digest
from splitfeas.utils.csv_utils import ExactWriter

log = logging.getLogger(__name__)

TRACE_VERSION = 1

CSV_HEADER = [
    "k",
    "step_norm_x",
    "step_norm_u",
    "residual_C",
    "residual_Q",
    "objective",
    "lagrangian",
]


class Termination(object):
    RESIDUAL_TOL = "residual_tol"
    STEP_TOL = "step_tol"
    MAX_ITER = "max_iter"

    ALL = (RESIDUAL_TOL, STEP_TOL, MAX_ITER)


IterateRecord = namedtuple(
    "IterateRecord",
    [
        "k",
        "x",
        "u",
        "y",
        "objective",
        "step_norm_x",
        "step_norm_u",
        "residual_C",
        "residual_Q",
        "lagrangian",
    ],
)


class IterateTrace(MutableSequence):
    """
    Record of a solver run. Produced by ``solvers.run``; consumed by the
    certificates in ``diagnostics``.

    Acts as a wrapper over the list of ``IterateRecord``.

    :ivar SolverConfig config: configuration of the run
    :ivar ProblemInstance problem: the problem the run solved
    :ivar str problem_digest: sha256 of the problem's canonical JSON
    :ivar str termination_reason: one of ``Termination.ALL``
    :ivar list warnings: overridden requirement messages
    :ivar bool full_trace: whether the records carry the iterate vectors
    """

    def __init__(
        self,
        config,
        problem,
        records=None,
        termination_reason=None,
        warnings=None,
        problem_digest_=None,
    ):
        super(IterateTrace, self).__init__()
        self.config = config
        self.problem = problem
        self.records = list(records or [])
        self.termination_reason = termination_reason
        self.warnings = list(warnings or [])
        if problem_digest_ is None and problem is not None:
            problem_digest_ = problem_digest(problem)
        self.problem_digest = problem_digest_

    @property
    def algorithm(self):
        return self.config.algorithm

    @property
    def full_trace(self):
        return bool(self.records) and self.records[0].x is not None

    @property
    def final(self):
        return self.records[-1]

    def vectors(self, name):
        """
        Stack one iterate sequence (``"x"``, ``"u"`` or ``"y"``) into a
        2-D array, one row per record.

        :raise InterfaceError: if the trace carries no such vectors
        """
        if not self.records or getattr(self.records[0], name) is None:
            raise InterfaceError(
                "Trace has no {0} vectors (load it from a --full-trace JSON)".format(
                    name
                )
            )
        return np.vstack([getattr(r, name) for r in self.records])

    def to_dict(self, full_trace=False):
        records = []
        for r in self.records:
            item = {
                "k": r.k,
                "step_norm_x": encode_float(r.step_norm_x),
                "step_norm_u": encode_float(r.step_norm_u),
                "residual_C": encode_float(r.residual_C),
                "residual_Q": encode_float(r.residual_Q),
                "lagrangian": encode_float(r.lagrangian),
                "objective": dict(
                    (key, encode_float(value))
                    for key, value in r.objective._asdict().items()
                ),
            }
            if full_trace:
                for name in ("x", "u", "y"):
                    v = getattr(r, name)
                    item[name] = None if v is None else v.tolist()
            records.append(item)
        return {
            "version": TRACE_VERSION,
            "config": self.config.to_dict(),
            "problem_digest": self.problem_digest,
            "termination_reason": self.termination_reason,
            "warnings": self.warnings,
            "full_trace": bool(full_trace),
            "final_x": self.final.x.tolist() if self.final.x is not None else None,
            "records": records,
        }

    def export_json(self, dest_path, full_trace=False):
        """
        Write the companion JSON of a trace.

        :param str dest_path: file to write to
        :param bool full_trace: include the x, u and y vectors of every record
        """
        with open(dest_path, "w", encoding="utf-8") as f:
            f.write(json.dumps(self.to_dict(full_trace), sort_keys=True, indent=1))
            f.write("\n")

    def export_csv(self, dest_path):
        """
        Export the scalar columns of the trace to a CSV file.

        :param str dest_path: file to write the trace to

        Example

        .. code-block:: python
            :linenos:

                >>> trace = client.cq(problem, x0, lam=1.0, tau=21.0, max_iter=3)
                >>> trace.export_csv('cq.csv')
                >>> !cat cq.csv
                k,step_norm_x,step_norm_u,residual_C,residual_Q,objective,lagrangian
                0,,,0.0,1.0,0.5,
                1,0.047619...,0.0,0.0,0.952380...,0.453514...,
        """
        with open(dest_path, "w", newline="", encoding="utf-8") as f:
            w = ExactWriter(f)
            w.writerow(CSV_HEADER)
            for r in self.records:
                w.writerow(
                    [
                        r.k,
                        r.step_norm_x,
                        r.step_norm_u,
                        r.residual_C,
                        r.residual_Q,
                        r.objective.value,
                        r.lagrangian,
                    ]
                )

    def export_pandas(self):
        """
        Export the scalar columns of the trace to a pandas DataFrame.

        :return: one row per record, columns as in the CSV export
        :rtype: DataFrame
        """
        import pandas

        rows = [
            [
                r.k,
                r.step_norm_x,
                r.step_norm_u,
                r.residual_C,
                r.residual_Q,
                r.objective.value,
                r.lagrangian,
            ]
            for r in self.records
        ]
        return pandas.DataFrame(rows, columns=CSV_HEADER)

    def __str__(self):
        return "IterateTrace({0}, {1} records, {2})".format(
            self.algorithm, len(self.records), self.termination_reason
        )

    def __len__(self):
        return len(self.records)

    def __delitem__(self, index):
        del self.records[index]

    def insert(self, index, value):
        self.records.insert(index, value)

    def __setitem__(self, index, value):
        self.records[index] = value

    def __getitem__(self, index):
        return self.records[index]


def _record_from_dict(item, path):
    try:
        objective = ObjectiveValue(
            **dict(
                (key, decode_float(item["objective"][key]))
                for key in ObjectiveValue._fields
            )
        )
        vectors = {}
        for name in ("x", "u", "y"):
            v = item.get(name)
            vectors[name] = None if v is None else np.array(v, dtype=float)
        return IterateRecord(
            k=int(item["k"]),
            objective=objective,
            step_norm_x=decode_float(item["step_norm_x"]),
            step_norm_u=decode_float(item["step_norm_u"]),
            residual_C=decode_float(item["residual_C"]),
            residual_Q=decode_float(item["residual_Q"]),
            lagrangian=decode_float(item["lagrangian"]),
            **vectors
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ProblemFormatError("{0}: malformed trace record ({1})".format(path, e))


def load_trace(json_path, problem=None):
    """
    Rebuild a trace from its companion JSON.

    :param str json_path: trace JSON written by ``IterateTrace.export_json``
    :param ProblemInstance problem: when given, its digest must match the
        digest recorded in the trace
    :rtype: IterateTrace
    :raise ProblemFormatError: on malformed files or a digest mismatch
    """
    with open(json_path, encoding="utf-8") as f:
        data = parse_json(f.read(), json_path)
    if not isinstance(data, dict):
        raise ProblemFormatError("{0}: trace must be a JSON object".format(json_path))
    if data.get("version") != TRACE_VERSION:
        raise ProblemFormatError(
            "version: unsupported trace version {0!r}, expected {1}".format(
                data.get("version"), TRACE_VERSION
            )
        )
    for key in ("config", "problem_digest", "termination_reason", "records"):
        if key not in data:
            raise ProblemFormatError("{0}: missing field".format(key))

    config = SolverConfig.from_dict(data["config"])
    if problem is not None and problem_digest(problem) != data["problem_digest"]:
        raise ProblemFormatError(
            "problem_digest: trace {0} was produced on a different problem".format(
                json_path
            )
        )
    if not isinstance(data["records"], list) or not data["records"]:
        raise ProblemFormatError("records: expected a non-empty list")
    records = [
        _record_from_dict(item, "records[{0}]".format(i))
        for i, item in enumerate(data["records"])
    ]
    log.debug("loaded %d records from %s", len(records), json_path)
    return IterateTrace(
        config,
        problem,
        records,
        termination_reason=data["termination_reason"],
        warnings=data.get("warnings", []),
        problem_digest_=data["problem_digest"],
    )
