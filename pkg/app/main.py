import argparse
import logging
from typing import Dict, List, Optional

from pydantic import ValidationError

from app.cli import cli_router
from app.core.config import settings, Tolerances
from app.core.exceptions import TeleportError, UsageError
from app.schemas.common import RunConfig
from app.utils import logger, Timer


class CommandLineParser(argparse.ArgumentParser):
    """argparse завершает процесс с кодом 2; здесь ошибка разбора становится UsageError (код 1)."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    common = CommandLineParser(add_help=False)
    common.add_argument("--channel", default="perfect", help="perfect, di, no, de (comma list)")
    common.add_argument("--recovery", default="di", help="di, no, de (comma list)")
    common.add_argument("--gamma", type=float, default=settings.GAMMA)
    common.add_argument("--omega", type=float, default=settings.OMEGA)
    common.add_argument("--t", type=float, default=settings.T)
    common.add_argument("--t0", type=float, default=settings.T0)
    common.add_argument("--method", choices=["closed", "numeric", "both"], default=settings.METHOD)
    common.add_argument("--quadrature", choices=["octahedral6", "dense"], default=settings.QUADRATURE)
    common.add_argument("--output", default=None, help="file path; stdout when omitted")
    common.add_argument("--format", dest="fmt", choices=["csv", "json", "markdown"], default=settings.OUTPUT_FORMAT)
    common.add_argument("--threads", type=int, default=settings.THREADS)
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--verbose", action="store_true")
    return common


def build_parser() -> CommandLineParser:
    common = _common_flags()
    parser = CommandLineParser(prog="teleport", description="Disturbed-recovery teleportation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fidelity", parents=[common], help="average fidelity at one (omega, t)")

    p = sub.add_parser("sweep", parents=[common], help="F(t) or (t_c, F_max) along one axis")
    p.add_argument("--axis", choices=["omega", "t", "t0", "gamma"], required=True)
    p.add_argument("--grid", required=True, metavar="LO:HI:N")

    p = sub.add_parser("critical-time", parents=[common], help="t_c and F_max on an omega grid")
    p.add_argument("--omega-grid", default=None, metavar="LO:HI:N")

    p = sub.add_parser("critical-omega", parents=[common], help="omega_c on a t0 grid")
    p.add_argument("--t0-grid", default=None, metavar="LO:HI:N")

    p = sub.add_parser("critical-t0", parents=[common], help="longest useful transmission time")
    p.add_argument("--omega-ref", type=float, default=None)

    p = sub.add_parser("fit", parents=[common], help="double-exponential fit of a critical-omega CSV")
    p.add_argument("--input", default=None, metavar="PATH")
    p.add_argument("--window", default=None, metavar="LO:HI")

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--inject-fault", action="store_true", help="test hook: doubles gamma in the numeric path")

    p = sub.add_parser("paper-report", parents=[common], help="published numbers against computed ones")
    p.add_argument("--t0-points", type=int, default=24)
    return parser


def parse_tolerances(items: List[str], base: Optional[Tolerances] = None) -> Tolerances:
    base = base or settings.TOL
    changes: Dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects NAME=VALUE, got '{item}'")
        try:
            changes[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--tol {name}: '{value}' is not a number")
    try:
        return Tolerances.model_validate(base.override(**changes).model_dump())
    except KeyError as e:
        raise UsageError(f"Unknown tolerance: {e.args[0]}")
    except ValidationError as e:
        raise UsageError(str(e))


def build_config(args: argparse.Namespace) -> RunConfig:
    tol = parse_tolerances(args.tol)
    try:
        return RunConfig(
            command=args.command,
            alphas=[s for s in args.channel.split(",") if s.strip()],
            betas=[s for s in args.recovery.split(",") if s.strip()],
            gamma=args.gamma,
            omega=args.omega,
            t=args.t,
            t0=args.t0,
            method=args.method,
            quadrature=args.quadrature,
            output=args.output,
            fmt=args.fmt,
            threads=args.threads,
            verbose=args.verbose,
            tol=tol,
        )
    except ValidationError as e:
        raise UsageError(str(e))


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = build_config(args)
    except TeleportError as e:
        logger.error(e.detail)
        return e.exit_code

    if cfg.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    with Timer() as timer:
        logger.info(f"{cfg.command} started")
        try:
            code = cli_router.dispatch(cfg, args)
        except TeleportError as e:
            logger.error(f"{cfg.command} failed: {e.detail}")
            return e.exit_code
        except (ValueError, ArithmeticError) as e:
            logger.error(f"{cfg.command} failed: {e}", exc_info=True)
            return 2
        except OSError as e:
            logger.error(f"{cfg.command} could not write output: {e}")
            return 1
    logger.info(f"{cfg.command} finished in {timer.elapsed:.0f} ms")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
