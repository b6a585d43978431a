import argparse
import itertools
import json
import logging
import os
import sys
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

from tabulate import tabulate

from splitfeas.algorithms import CLI_NAMES, is_experimental, table_row
from splitfeas.config import ConfigBuilder, InnerBackend, SolverConfig
from splitfeas.diagnostics import certify_all, certify_convergence
from splitfeas.exceptions import ConfigError, Error, RequirementError
from splitfeas.linops import check_table_requirements
from splitfeas.objectives import residuals
from splitfeas.problems import (
    FAMILIES,
    GeneratorSpec,
    encode_float,
    generate,
    initial_point,
    load_problem,
    parse_json,
    save_problem,
)
from splitfeas.solvers import run
from splitfeas.trace import load_trace
from splitfeas.utils.csv_utils import ExactWriter

log = logging.getLogger(__name__)

SEED_ENV = "SPLITFEAS_SEED"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REQUIREMENT = 2

EXPERIMENTAL_BANNER = "experimental: convergence Unknown"

LOG_FORMAT = "%(name)-15s %(levelname)-8s %(message)s"

CommandResult = namedtuple("CommandResult", ["exit_code", "artifacts", "summary"])

# command line flag -> solver parameter
SOLVER_FLAGS = [
    ("lam", "lam"),
    ("rho", "rho"),
    ("tau", "tau"),
    ("tau1", "tau1"),
    ("tau2", "tau2"),
    ("max_iter", "max_iter"),
    ("tol", "residual_tol"),
    ("inner_backend", "inner_backend"),
]

INTEGER_PARAMS = ("max_iter", "inner_max_iter", "log_every")
TEXT_PARAMS = ("n_mode", "inner_backend")

SWEEP_HEADER = [
    "cell",
    "algorithm",
    "parameters",
    "status",
    "experimental",
    "iterations",
    "termination",
    "residual_C",
    "residual_Q",
    "certificates_passed",
    "certificates_total",
    "error",
]


def resolve_seed(seed):
    """The ``--seed`` flag, else ``$SPLITFEAS_SEED``, else 0."""
    if seed is not None:
        return seed
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise ConfigError("{0} must be an integer, got {1!r}".format(SEED_ENV, value))


def parse_dimensions(text):
    """``"15"`` gives 15, ``"5,6,7"`` gives the multiset dimensions [5, 6, 7]."""
    try:
        dims = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected integers, got {0!r}".format(text))
    return dims[0] if len(dims) == 1 else dims


def parse_floats(text):
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected numbers, got {0!r}".format(text))


def _parse_value(key, text):
    if key in TEXT_PARAMS:
        return text
    try:
        if key in INTEGER_PARAMS:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError("grid: bad value {0!r} for {1}".format(text, key))


def parse_grid(text):
    """
    Parse a sweep grid such as ``"tau=1.1,1.5;lam=1"``.

    :return: list of ``(parameter, values)`` in the order given
    :raise ConfigError: on malformed grids
    """
    grid = []
    if not text:
        return grid
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError("grid: expected name=v1,v2,... got {0!r}".format(part))
        key, values = part.split("=", 1)
        key = key.strip()
        if key in dict(grid):
            raise ConfigError("grid: parameter {0} given twice".format(key))
        values = [_parse_value(key, v.strip()) for v in values.split(",")]
        grid.append((key, values))
    return grid


def solver_args(flags, n_mode=None):
    args = {}
    for flag, param in SOLVER_FLAGS:
        value = getattr(flags, flag, None)
        if value is not None:
            args[param] = value
    if getattr(flags, "override", False):
        args["override_requirements"] = True
    if n_mode is not None:
        args["n_mode"] = n_mode
    return args


def _trace_paths(prefix):
    root, ext = os.path.splitext(prefix)
    if ext in (".csv", ".json"):
        prefix = root
    return prefix + ".csv", prefix + ".json"


def _ensure_parent(path):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


# ----- commands -----


def cmd_generate(flags):
    seed = resolve_seed(flags.seed)
    spec = GeneratorSpec(
        n=flags.n,
        m=flags.m,
        set_family_C=flags.set_c,
        set_family_Q=flags.set_q,
        consistent=flags.consistent,
        seed=seed,
        spectrum=flags.spectrum,
        enforce_requirements_for=flags.require,
        margin=flags.margin,
    )
    problem = generate(spec)
    _ensure_parent(flags.out)
    save_problem(problem, flags.out)

    lines = ["wrote {0}: {1!r}".format(flags.out, problem)]
    if problem.consistency_witness is not None:
        res_c, res_q = residuals(problem, problem.consistency_witness)
        lines.append(
            "witness residuals: d_C = {0:.3g}, d_Q = {1:.3g}".format(res_c, res_q)
        )
    else:
        lines.append(
            "infeasibility margin: {0:.6g}".format(
                problem.metadata["infeasibility_margin"]
            )
        )
    if not problem.is_multiset:
        spectrum = problem.spectrum()
        lines.append("kappa(A^TA) = {0:.6g}".format(spectrum.gram_condition))
        if flags.require:
            if flags.require in CLI_NAMES:
                report = check_table_requirements(spectrum, *CLI_NAMES[flags.require])
            else:
                report = check_table_requirements(spectrum, flags.require)
            lines.append(str(report))
    return CommandResult(EXIT_OK, [flags.out], "\n".join(lines))


def cmd_solve(flags):
    problem = load_problem(flags.problem)
    algorithm, n_mode = CLI_NAMES[flags.algorithm]
    config = ConfigBuilder().build(algorithm, problem, solver_args(flags, n_mode))
    x0 = initial_point(problem, resolve_seed(flags.seed))

    lines = []
    if is_experimental(algorithm):
        lines.append(EXPERIMENTAL_BANNER)
    trace = run(problem, config, x0)

    csv_path, json_path = _trace_paths(flags.trace_out)
    _ensure_parent(csv_path)
    trace.export_csv(csv_path)
    trace.export_json(json_path, full_trace=flags.full_trace)

    final = trace.final
    lines.extend(
        [
            "{0} ({1}): {2} after {3} iterations".format(
                flags.algorithm,
                table_row(algorithm, n_mode).key,
                trace.termination_reason,
                final.k,
            ),
            "final residuals: d_C = {0:.3e}, d_Q = {1:.3e}".format(
                final.residual_C, final.residual_Q
            ),
        ]
    )
    for message in trace.warnings:
        lines.append("overridden: {0}".format(message))
    lines.append("wrote {0}, {1}".format(csv_path, json_path))
    return CommandResult(EXIT_OK, [csv_path, json_path], "\n".join(lines))


def _load_config(path, trace):
    with open(path, encoding="utf-8") as f:
        config = SolverConfig.from_dict(parse_json(f.read(), path))
    if config.algorithm != trace.algorithm:
        raise ConfigError(
            "{0} configures {1} but the trace was produced by {2}".format(
                path, config.algorithm, trace.algorithm
            )
        )
    return config


def cmd_certify(flags):
    problem = load_problem(flags.problem)
    trace = load_trace(flags.trace, problem)
    if flags.config:
        trace.config = _load_config(flags.config, trace)

    reports, unsupported, required = certify_all(trace)
    convergence = certify_convergence(trace)
    passed = all(r.passed for r in reports)

    out = flags.out or os.path.splitext(flags.trace)[0] + ".certificates.json"
    document = {
        "algorithm": trace.algorithm,
        "required": required,
        "passed": passed,
        "certificates": [r.to_dict() for r in reports],
        "unsupported": unsupported,
        "convergence": dict(
            (key, encode_float(value) if isinstance(value, float) else value)
            for key, value in convergence._asdict().items()
        ),
    }
    _ensure_parent(out)
    with open(out, "w", encoding="utf-8") as f:
        f.write(json.dumps(document, sort_keys=True, indent=1))
        f.write("\n")

    rows = [
        [
            r.condition,
            "pass" if r.passed else "FAIL",
            r.constant_used,
            r.worst_violation,
            r.slack,
            len(r.violating_iterations),
        ]
        for r in reports
    ]
    lines = []
    if not required:
        lines.append(EXPERIMENTAL_BANNER)
    lines.append(
        tabulate(
            rows,
            headers=[
                "condition",
                "verdict",
                "constant",
                "worst",
                "slack",
                "violations",
            ],
        )
    )
    if unsupported:
        lines.append("not applicable: {0}".format(", ".join(unsupported)))
    lines.append("wrote {0}".format(out))
    exit_code = EXIT_OK if passed or not required else EXIT_ERROR
    return CommandResult(exit_code, [out], "\n".join(lines))


def _run_cell(problem, x0, index, name, params, common, out_dir):
    algorithm, n_mode = CLI_NAMES[name]
    args = dict(common)
    args.update(params)
    if n_mode is not None:
        args["n_mode"] = n_mode
    row = {
        "cell": "cell{0:03d}".format(index),
        "algorithm": name,
        "parameters": ";".join("{0}={1}".format(k, v) for k, v in params.items()),
        "experimental": is_experimental(algorithm),
    }
    try:
        config = ConfigBuilder().build(algorithm, problem, args)
        trace = run(problem, config, x0)
        path = os.path.join(out_dir, "{0}_{1}.csv".format(row["cell"], name))
        trace.export_csv(path)
        reports = certify_all(trace)[0]
    except Error as e:
        log.warning("%s (%s) failed: %s", row["cell"], name, e)
        row.update(status="error", error=str(e))
        return row, None
    final = trace.final
    row.update(
        status="ok",
        iterations=final.k,
        termination=trace.termination_reason,
        residual_C=final.residual_C,
        residual_Q=final.residual_Q,
        certificates_passed=sum(1 for r in reports if r.passed),
        certificates_total=len(reports),
    )
    return row, path


def cmd_sweep(flags):
    problem = load_problem(flags.problem)
    names = [n.strip() for n in flags.algorithms.split(",") if n.strip()]
    for name in names:
        if name not in CLI_NAMES:
            raise ConfigError(
                "Algorithm {0} does not exist. Valid algorithms are: {1}".format(
                    name, ", ".join(sorted(CLI_NAMES))
                )
            )
    grid = parse_grid(flags.grid)
    keys = [k for k, _ in grid]
    combos = [
        dict(zip(keys, values)) for values in itertools.product(*[v for _, v in grid])
    ]
    common = solver_args(flags)
    x0 = initial_point(problem, resolve_seed(flags.seed))
    os.makedirs(flags.out_dir, exist_ok=True)
    # shared read-only afterwards
    problem.spectral_summaries()

    cells = [(name, params) for name in names for params in combos]
    with ThreadPoolExecutor(max_workers=flags.workers) as executor:
        futures = [
            executor.submit(
                _run_cell, problem, x0, i, name, params, common, flags.out_dir
            )
            for i, (name, params) in enumerate(cells)
        ]
        results = [f.result() for f in futures]

    summary_path = os.path.join(flags.out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as f:
        w = ExactWriter(f)
        w.writerow(SWEEP_HEADER)
        for row, _ in results:
            w.writerow([row.get(key) for key in SWEEP_HEADER])

    table = [[row.get(key) for key in SWEEP_HEADER[:-1]] for row, _ in results]
    errors = sum(1 for row, _ in results if row["status"] == "error")
    lines = [
        tabulate(table, headers=SWEEP_HEADER[:-1]),
        "{0} cells, {1} errors; wrote {2}".format(len(results), errors, summary_path),
    ]
    artifacts = [path for _, path in results if path is not None] + [summary_path]
    return CommandResult(EXIT_OK, artifacts, "\n".join(lines))


def cmd_plot(flags):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import pandas

    matplotlib.rcParams["svg.hashsalt"] = "splitfeas"
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for path in flags.traces:
            df = pandas.read_csv(path)
            label = os.path.splitext(os.path.basename(path))[0]
            for column in flags.columns:
                if column not in df.columns:
                    raise ConfigError("{0}: no column {1}".format(path, column))
                ax.plot(df["k"], df[column], label="{0} {1}".format(label, column))
        ax.set_yscale("log")
        ax.set_xlabel("iteration k")
        ax.set_ylabel("residual")
        ax.legend(fontsize="small")
        _ensure_parent(flags.out)
        fig.savefig(flags.out, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return CommandResult(EXIT_OK, [flags.out], "wrote {0}".format(flags.out))


# ----- parser -----


def _add_seed(parser):
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="random seed (default: ${0} or 0)".format(SEED_ENV),
    )


def _add_solver_flags(parser):
    parser.add_argument("--lambda", dest="lam", type=float, help="penalty weight")
    parser.add_argument("--rho", type=float, help="Lagrangian penalty")
    parser.add_argument("--tau", type=float, help="step parameter or weight of N")
    parser.add_argument("--tau1", type=float, help="u-step proximal weight")
    parser.add_argument("--tau2", type=float, help="x-step proximal weight")
    parser.add_argument("--max-iter", type=int, help="iteration cap")
    parser.add_argument("--tol", type=float, help="residual tolerance")
    parser.add_argument(
        "--inner-backend", choices=InnerBackend.ALL, help="exact x-subproblem solver"
    )
    parser.add_argument(
        "--override",
        action="store_true",
        help="run even when the algorithm's requirements fail",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splitfeas", description="Split feasibility solvers and certificates."
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    subparsers = parser.add_subparsers(dest="command_name")
    subparsers.required = True

    p = subparsers.add_parser("generate", help="generate a problem instance")
    p.add_argument("--n", type=int, required=True, help="dimension of C")
    p.add_argument(
        "--m",
        type=parse_dimensions,
        required=True,
        help="dimension of Q, or a comma list for several sets Q_j",
    )
    p.add_argument("--set-c", choices=FAMILIES, default="ball")
    p.add_argument("--set-q", choices=FAMILIES, default="ball")
    consistency = p.add_mutually_exclusive_group()
    consistency.add_argument(
        "--consistent", dest="consistent", action="store_true", default=True
    )
    consistency.add_argument("--inconsistent", dest="consistent", action="store_false")
    _add_seed(p)
    p.add_argument("--spectrum", type=parse_floats, help="singular values of A")
    p.add_argument(
        "--require", help="table row or algorithm whose requirements A must meet"
    )
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--out", required=True, help="problem JSON to write")
    p.set_defaults(command=cmd_generate)

    p = subparsers.add_parser("solve", help="run a solver on a problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--algorithm", choices=sorted(CLI_NAMES), required=True)
    _add_solver_flags(p)
    _add_seed(p)
    p.add_argument(
        "--trace-out", default="trace", help="path prefix of the trace CSV and JSON"
    )
    p.add_argument(
        "--full-trace",
        action="store_true",
        help="store x, u and y of every iterate in the JSON (needed by certify)",
    )
    p.set_defaults(command=cmd_solve)

    p = subparsers.add_parser("certify", help="certify a full trace")
    p.add_argument("--trace", required=True, help="trace JSON")
    p.add_argument("--problem", required=True)
    p.add_argument("--config", help="solver configuration JSON to certify against")
    p.add_argument("--out", help="report JSON to write")
    p.set_defaults(command=cmd_certify)

    p = subparsers.add_parser("sweep", help="run a parameter grid")
    p.add_argument("--problem", required=True)
    p.add_argument("--algorithms", required=True, help="comma list of algorithms")
    p.add_argument("--grid", default="", help='e.g. "tau=1.1,1.5;lam=1"')
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--override", action="store_true")
    _add_seed(p)
    p.set_defaults(command=cmd_sweep)

    p = subparsers.add_parser("plot", help="plot residuals of trace CSVs")
    p.add_argument("traces", nargs="+", help="trace CSV files")
    p.add_argument(
        "--columns", type=lambda s: s.split(","), default=["residual_C", "residual_Q"]
    )
    p.add_argument("--out", required=True, help="SVG to write")
    p.set_defaults(command=cmd_plot)
    return parser


def configure_logging(flags):
    level = logging.INFO
    if flags.verbose:
        level = logging.DEBUG
    elif flags.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def execute(argv=None):
    """
    Run one command.

    :rtype: CommandResult
    """
    flags = build_parser().parse_args(argv)
    configure_logging(flags)
    try:
        return flags.command(flags)
    except RequirementError as e:
        return CommandResult(
            EXIT_REQUIREMENT, [], "{0}\n(rerun with --override to proceed)".format(e)
        )
    except (Error, OSError) as e:
        return CommandResult(EXIT_ERROR, [], "error: {0}".format(e))


def main(argv=None):
    result = execute(argv)
    stream = sys.stdout if result.exit_code == EXIT_OK else sys.stderr
    print(result.summary, file=stream)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
