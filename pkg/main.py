import sys
import logging
import argparse
import random

from check_ops import OPERATIONS, CheckContext, describe, split_list
from checkfile import load_checkfile
from config_manager import ConfigManager
from densities import TensorDensity
from errors import CheckFileError, DensopsError, ExprSyntaxError, UndeclaredIdentifierError, UsageError
from logging_config import setup_logging
from pencils import PencilSpec, build_pencil, restrict
from runner import FORMATS, run_checkfile
from samples import darboux_chart
from symexpr import Chart, parse
from version import APP_DESCRIPTION, APP_NAME, get_version

logger = logging.getLogger("main")

# malformed input exits 2, mathematical failures exit 1
INPUT_ERRORS = (ExprSyntaxError, UndeclaredIdentifierError, UsageError, CheckFileError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {get_version()}")
    parser.add_argument("--dev", action="store_true", help="Enable development mode with detailed logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a check file")
    run.add_argument("file", help="Check file to run")
    run.add_argument("--seed", type=int, help="Seed for sampled checks and randomized zero tests")
    run.add_argument("--jobs", type=int, help="Number of checks evaluated concurrently")
    run.add_argument("--format", choices=sorted(FORMATS), help="Report format")
    run.add_argument("--filter", dest="pattern", help="Only run checks whose name matches this glob")

    def chart_flags(sub):
        sub.add_argument("--even", default="x", help="Even coordinates, comma separated")
        sub.add_argument("--odd", default="", help="Odd coordinates, comma separated")
        sub.add_argument("--params", default="", help="Symbolic constants, comma separated")

    pencil = commands.add_parser("pencil", help="Build the canonical pencil of (S, gamma, theta)")
    chart_flags(pencil)
    pencil.add_argument("--S", required=True, dest="tensor", help='Rows of S, e.g. "1, 0; 0, x^2"')
    pencil.add_argument("--gamma", required=True, help="Upper connection components")
    pencil.add_argument("--theta", default="0", help="Brans-Dicke function")
    pencil.add_argument("--weight", default="0", help="Weight delta of S")
    pencil.add_argument("--lam", help="Restrict to densities of this weight")

    groupoid = commands.add_parser("groupoid", help="Residual of the arrow gamma -> gamma + X")
    chart_flags(groupoid)
    groupoid.add_argument("--S", required=True, dest="tensor", help="Rows of S")
    groupoid.add_argument("--gamma", default="0", help="Connection components")
    groupoid.add_argument("--X", required=True, dest="covector", help="Covector components")
    groupoid.add_argument("--weight", default="0", help="Weight delta of S")

    schwarzian = commands.add_parser("schwarzian", help="Schwarzian derivative of x(y)")
    schwarzian.add_argument("x", help="Expression in one letter")
    schwarzian.add_argument("--variable", help="The letter to differentiate in")

    sturm = commands.add_parser("sturm", help="Sturm-Liouville operator of a line connection")
    sturm.add_argument("gamma", help="Connection symbol in one letter")
    sturm.add_argument("--variable", help="The letter of the line")

    bv = commands.add_parser("bv", help="Odd symplectic computations in Darboux coordinates x1.., th1..")
    bv_commands = bv.add_subparsers(dest="bv_command", required=True)
    bracket = bv_commands.add_parser("bracket", help="Derived bracket {f, g}")
    bracket.add_argument("f")
    bracket.add_argument("g")
    jacobi = bv_commands.add_parser("jacobi", help="(H, H) of the master Hamiltonian")
    jacobi.add_argument("--S", dest="tensor", help="Rows of an odd tensor (Darboux when omitted)")
    laplacian = bv_commands.add_parser("laplacian", help="BV Laplacian of f for a volume form")
    laplacian.add_argument("f")
    laplacian.add_argument("--rho", default="1", help="Volume form coefficient")
    identity = bv_commands.add_parser("identity", help="Residual of the exponential identity for F")
    identity.add_argument("F")
    identity.add_argument("--rho", default="1", help="Volume form coefficient")
    for sub in (bracket, jacobi, laplacian, identity):
        sub.add_argument("--n", type=int, default=1, help="Number of even coordinates")
    return parser


def _invoke(op: str, namespace: dict, args: dict, seed: int = 0):
    ctx = CheckContext(namespace, args, random.Random(seed), seed)
    return OPERATIONS[op].func(ctx)


def _chart(args) -> Chart:
    try:
        return Chart("cli", split_list(args.even), split_list(args.odd), split_list(args.params))
    except DensopsError as e:
        raise UsageError(str(e)) from e


def command_run(args, settings) -> int:
    seed = settings["seed"] if args.seed is None else args.seed
    jobs = settings["jobs"] if args.jobs is None else args.jobs
    fmt = args.format or settings["format"]
    try:
        check_file = load_checkfile(args.file)
    except CheckFileError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return 2
    report = run_checkfile(check_file, seed=seed, jobs=jobs, pattern=args.pattern, samples=settings["zero_samples"])
    print(FORMATS[fmt](report))
    return report.exit_code


def command_pencil(args, settings) -> str:
    chart = _chart(args)
    S = TensorDensity.from_rows(chart, args.weight, [split_list(row) for row in split_list(args.tensor, ";")])
    gamma = tuple(parse(item, chart) for item in split_list(args.gamma))
    op = build_pencil(PencilSpec(S, gamma, parse(args.theta, chart)))
    return (restrict(op, args.lam) if args.lam is not None else op).to_text()


def command_groupoid(args, settings) -> str:
    chart = _chart(args)
    result = _invoke(
        "residual", {"cli": chart},
        {"chart": "cli", "S": args.tensor, "gamma": args.gamma, "X": args.covector, "weight": args.weight},
    )
    return describe(result)


def command_schwarzian(args, settings) -> str:
    params = {"x": args.x}
    if args.variable:
        params["variable"] = args.variable
    return describe(_invoke("schwarzian", {}, params))


def command_sturm(args, settings) -> str:
    params = {"gamma": args.gamma}
    if args.variable:
        params["variable"] = args.variable
    return describe(_invoke("sturm", {}, params))


BV_OPERATIONS = {"bracket": "bv-bracket", "jacobi": "bv-jacobi", "laplacian": "bv-laplacian", "identity": "bv-simple"}


def command_bv(args, settings) -> str:
    chart = darboux_chart("bv", args.n)
    params = {"chart": "bv"}
    for key in ("f", "g", "F", "rho"):
        if getattr(args, key, None) is not None:
            params[key] = getattr(args, key)
    if getattr(args, "tensor", None):
        params["S"] = args.tensor
    return describe(_invoke(BV_OPERATIONS[args.bv_command], {"bv": chart}, params))


COMMANDS = {
    "run": command_run,
    "pencil": command_pencil,
    "groupoid": command_groupoid,
    "schwarzian": command_schwarzian,
    "sturm": command_sturm,
    "bv": command_bv,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    settings = ConfigManager().load()

    # Setup logging based on mode
    if args.dev:
        setup_logging(logging.DEBUG, log_to_file=True)
        logger.info("Development mode enabled with detailed logging")
    else:
        # In production mode, only log warnings and errors
        setup_logging(logging.WARNING, log_to_file=settings["log_to_file"])

    try:
        logger.info("Running command %s", args.command)
        outcome = COMMANDS[args.command](args, settings)
        if isinstance(outcome, int):
            return outcome
        print(outcome)
        return 0
    except INPUT_ERRORS as e:
        logger.error("Invalid input: %s", str(e))
        print(f"{args.command}: {e}", file=sys.stderr)
        return 2
    except DensopsError as e:
        logger.error("Error: %s", str(e))
        return 1
    except Exception as e:
        if args.dev:
            logger.critical("Unhandled exception: %s", str(e), exc_info=True)
        else:
            # In production, don't include full traceback
            logger.error("Error: %s", str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
