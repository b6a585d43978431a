"""
Algorithm identifiers and the comparison table that goes with them.

Each row of ``TABLE`` lists the algorithm name, the model it minimizes, the
status of its global convergence theory and the requirements it places on the
linear map. ``table_row`` maps a solver algorithm (and, for the weighted ADMM,
its proximal mode) onto a row.
"""
from collections import namedtuple

from splitfeas.exceptions import ConfigError


class Algorithm(object):
    PADMM_SF1 = "PADMM_SF1"
    PG_SF1P = "PG_SF1P"
    AM_SF1P = "AM_SF1P"
    CQ_SF1P = "CQ_SF1P"
    PG_SF3 = "PG_SF3"
    WPADMM_SF4 = "WPADMM_SF4"
    CQ_MULTISET = "CQ_MULTISET"

    ALL = (
        PADMM_SF1,
        PG_SF1P,
        AM_SF1P,
        CQ_SF1P,
        PG_SF3,
        WPADMM_SF4,
        CQ_MULTISET,
    )

    # algorithms carrying a multiplier y
    LAGRANGIAN = (PADMM_SF1, WPADMM_SF4)

    # algorithms whose state carries the split variable u
    SPLIT = (PADMM_SF1, PG_SF1P, AM_SF1P, CQ_SF1P, WPADMM_SF4)

    # algorithms evaluated on the penalized model F1
    PENALIZED = (PADMM_SF1, PG_SF1P, AM_SF1P, CQ_SF1P)


class NMode(object):
    PROX_IDENTITY = "ProxIdentity"
    LINEARIZED = "Linearized"

    ALL = (PROX_IDENTITY, LINEARIZED)


TableRow = namedtuple(
    "TableRow", ["key", "name", "model", "convergence", "requirements"]
)

# requirement tags understood by linops.check_table_requirements
ROWGRAM_PD = "AA^T > 0"
GRAM_CONDITION = "kappa(A^TA) < 2"

TABLE = {
    "alg1": TableRow("alg1", "Proximal ADMM", "SF1", "Unknown", None),
    "alg2": TableRow("alg2", "Projected Gradient", "SF1-Penalized", "Known", ()),
    "alg3": TableRow("alg3", "Alternating Minimization", "SF1-Penalized", "Known", ()),
    "alg4": TableRow("alg4", "CQ Algorithm", "SF1-Penalized", "Known", ()),
    "alg5": TableRow("alg5", "Projected Gradient", "SF3", "Known", ()),
    "alg6": TableRow("alg6", "Proximal ADMM", "SF4", "Known", (ROWGRAM_PD,)),
    "alg7": TableRow(
        "alg7",
        "Linearized Proximal ADMM",
        "SF4",
        "Known",
        (ROWGRAM_PD, GRAM_CONDITION),
    ),
    "cq-multiset": TableRow(
        "cq-multiset", "Simultaneous CQ", "SF3 (multiple sets)", "Known", ()
    ),
}

_ROWS = {
    Algorithm.PADMM_SF1: "alg1",
    Algorithm.PG_SF1P: "alg2",
    Algorithm.AM_SF1P: "alg3",
    Algorithm.CQ_SF1P: "alg4",
    Algorithm.PG_SF3: "alg5",
    Algorithm.CQ_MULTISET: "cq-multiset",
}

# command line names
CLI_NAMES = {
    "padmm-sf1": (Algorithm.PADMM_SF1, None),
    "pg-sf1p": (Algorithm.PG_SF1P, None),
    "am-sf1p": (Algorithm.AM_SF1P, None),
    "cq": (Algorithm.CQ_SF1P, None),
    "pg-sf3": (Algorithm.PG_SF3, None),
    "wpadmm-prox": (Algorithm.WPADMM_SF4, NMode.PROX_IDENTITY),
    "wpadmm-lin": (Algorithm.WPADMM_SF4, NMode.LINEARIZED),
    "cq-multiset": (Algorithm.CQ_MULTISET, None),
}


def table_row(algorithm, n_mode=None):
    """
    Return the comparison table row for an algorithm.

    ``algorithm`` may be a solver algorithm id or a row key (``alg1`` ...
    ``alg7``).

    :raise ConfigError: if the algorithm is unknown
    """
    if algorithm in TABLE:
        return TABLE[algorithm]
    if algorithm == Algorithm.WPADMM_SF4:
        if n_mode == NMode.LINEARIZED:
            return TABLE["alg7"]
        return TABLE["alg6"]
    try:
        return TABLE[_ROWS[algorithm]]
    except KeyError:
        raise ConfigError(
            "Algorithm {0} does not exist. Valid algorithms are: {1}".format(
                algorithm, ", ".join(Algorithm.ALL)
            )
        )


def is_experimental(algorithm):
    return table_row(algorithm).convergence == "Unknown"
