import argparse
from typing import Callable, Dict, List

import pandas as pd
from pydantic import BaseModel, ValidationError

from app.analysis import (
    FIT_WINDOWS,
    critical_omega,
    critical_t0,
    fit_double_exponential,
    max_fidelity,
    pool_map,
    sweep,
)
from app.cli.formats import emit, render, to_json
from app.closedform import f_channel
from app.core.exceptions import UsageError, VerificationError
from app.environment import channel_state_numeric
from app.reference import build_report
from app.schemas.common import ChannelKind, ComparisonRow, RecoveryConfig, RunConfig, SweepSpec
from app.teleport import average_fidelity
from app.utils import logger, parse_grid, parse_window
from app.verify import run_verification

Handler = Callable[[RunConfig, argparse.Namespace], int]

FIDELITY_COLUMNS = ["alpha", "beta", "gamma", "omega", "t", "t0", "F_closed", "F_numeric", "difference"]
SWEEP_COLUMNS = ["axis", "value", "t_c", "f_max"]
SWEEP_T_COLUMNS = ["axis", "value", "F"]
CRITICAL_TIME_COLUMNS = ["alpha", "beta", "gamma", "t0", "omega", "t_c", "f_max", "boundary"]
CRITICAL_OMEGA_COLUMNS = ["alpha", "beta", "gamma", "t0", "omega_c", "f_max_at_omega_c"]
CRITICAL_T0_COLUMNS = ["alpha", "beta", "gamma", "omega_ref", "t0_c", "t0_c_coarse", "sensitivity"]
FIT_COLUMNS = ["alpha", "beta", "a", "b", "c", "d", "rms", "window_lo", "window_hi"]
REPORT_COLUMNS = list(ComparisonRow.model_fields)


class CommandRouter:
    """Реестр команд: имя подкоманды -> обработчик, возвращающий код выхода."""

    def __init__(self):
        self.routes: Dict[str, Handler] = {}

    def command(self, name: str) -> Callable[[Handler], Handler]:
        def register(handler: Handler) -> Handler:
            self.routes[name] = handler
            return handler
        return register

    def dispatch(self, cfg: RunConfig, args: argparse.Namespace) -> int:
        handler = self.routes.get(cfg.command)
        if handler is None:
            raise UsageError(f"Unknown command '{cfg.command}'")
        return handler(cfg, args)


cli_router = CommandRouter()


def _validated(model: type, **fields) -> BaseModel:
    try:
        return model(**fields)
    except ValidationError as e:
        raise UsageError(str(e))


def _single_path(cfg: RunConfig) -> str:
    if cfg.method == "both":
        raise UsageError(f"'{cfg.command}' evaluates one path; use --method closed or --method numeric")
    return cfg.method


def _write(cfg: RunConfig, rows: List[Dict], columns: List[str], document=None) -> None:
    emit(render(rows, columns, cfg.fmt, document), cfg.output)


@cli_router.command("fidelity")
def cmd_fidelity(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Средняя точность для каждой пары (канал, среда восстановления)."""
    rows, reports, disagreements = [], [], []
    for alpha in cfg.alphas:
        channel = None
        for beta in cfg.betas:
            closed = numeric = difference = None
            if cfg.method in ("closed", "both"):
                closed = float(f_channel(alpha, beta, cfg.gamma, cfg.omega, cfg.t, cfg.t0))
            if cfg.method in ("numeric", "both"):
                if channel is None:
                    channel = channel_state_numeric(alpha, cfg.gamma, cfg.t0, tol=cfg.tol)
                rec = RecoveryConfig(beta=beta, omega=cfg.omega, t=cfg.t)
                report = average_fidelity(channel, rec, cfg.quadrature, detail=cfg.verbose, tol=cfg.tol)
                numeric = report.average
                reports.append({"alpha": alpha.value, "beta": beta.value, **report.model_dump()})
                if cfg.verbose:
                    for p in report.points:
                        logger.info(
                            f"{alpha.value}/{beta.value} theta={p.theta:.6f} phi={p.phi:.6f} "
                            f"P={['%.9g' % x for x in p.probabilities]} f={['%.9g' % x for x in p.fidelities]}"
                        )
            if closed is not None and numeric is not None:
                difference = abs(closed - numeric)
                if difference > cfg.tol.two_path:
                    disagreements.append(f"{alpha.value}/{beta.value}: |dF|={difference:.3e}")
            rows.append({
                "alpha": alpha.value, "beta": beta.value, "gamma": cfg.gamma, "omega": cfg.omega,
                "t": cfg.t, "t0": cfg.t0, "F_closed": closed, "F_numeric": numeric, "difference": difference,
            })

    document = {"rows": rows, "reports": reports} if cfg.verbose else rows
    _write(cfg, rows, FIDELITY_COLUMNS, document)
    if disagreements:
        raise VerificationError(
            f"closed and numeric paths disagree beyond {cfg.tol.two_path:g}: " + "; ".join(disagreements)
        )
    return 0


@cli_router.command("sweep")
def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    method = _single_path(cfg)
    if len(cfg.alphas) > 1 or len(cfg.betas) > 1:
        raise UsageError("sweep takes a single --channel and a single --recovery")
    if not args.grid:
        raise UsageError("sweep needs --grid lo:hi:n")
    plan = _validated(
        SweepSpec, axis=args.axis, values=parse_grid(args.grid), alpha=cfg.alpha, beta=cfg.beta,
        gamma=cfg.gamma, omega=cfg.omega, t=cfg.t, t0=cfg.t0, method=method,
    )
    rows = sweep(plan, cfg.threads, cfg.tol)
    _write(cfg, rows, SWEEP_T_COLUMNS if plan.axis == "t" else SWEEP_COLUMNS)
    return 0


@cli_router.command("critical-time")
def cmd_critical_time(cfg: RunConfig, args: argparse.Namespace) -> int:
    """t_c и F_max для каждой пары (α, β) на сетке частот."""
    method = _single_path(cfg)
    omegas = parse_grid(args.omega_grid) if args.omega_grid else [cfg.omega]
    cases = [(a, b, w) for a in cfg.alphas for b in cfg.betas for w in omegas]

    def point(case) -> Dict:
        alpha, beta, omega = case
        res = max_fidelity(alpha, beta, cfg.gamma, omega, cfg.t0, method, tol=cfg.tol)
        return {
            "alpha": alpha.value, "beta": beta.value, "gamma": cfg.gamma, "t0": cfg.t0,
            "omega": omega, "t_c": res.t_c, "f_max": res.f_max, "boundary": res.boundary,
        }

    _write(cfg, pool_map(point, cases, cfg.threads), CRITICAL_TIME_COLUMNS)
    return 0


@cli_router.command("critical-omega")
def cmd_critical_omega(cfg: RunConfig, args: argparse.Namespace) -> int:
    method = _single_path(cfg)
    t0s = parse_grid(args.t0_grid) if args.t0_grid else [cfg.t0]
    cases = [(a, b, t0) for a in cfg.alphas for b in cfg.betas for t0 in t0s]

    def point(case) -> Dict:
        alpha, beta, t0 = case
        res = critical_omega(alpha, beta, cfg.gamma, t0, method, tol=cfg.tol)
        if res.omega_c is None:
            logger.info(f"critical-omega {alpha.value}/{beta.value} t0={t0:g}: {res.note}")
        return {
            "alpha": alpha.value, "beta": beta.value, "gamma": cfg.gamma, "t0": t0,
            "omega_c": res.omega_c, "f_max_at_omega_c": res.f_max if res.omega_c is not None else None,
        }

    _write(cfg, pool_map(point, cases, cfg.threads), CRITICAL_OMEGA_COLUMNS)
    return 0


@cli_router.command("critical-t0")
def cmd_critical_t0(cfg: RunConfig, args: argparse.Namespace) -> int:
    if cfg.gamma <= 0:
        raise UsageError("critical-t0 needs --gamma > 0")
    if args.omega_ref is not None and args.omega_ref <= 0:
        raise UsageError("--omega-ref must be positive")
    cases = [(a, b) for a in cfg.alphas for b in cfg.betas]

    def point(case) -> Dict:
        alpha, beta = case
        res = critical_t0(alpha, cfg.gamma, beta, omega_ref=args.omega_ref, tol=cfg.tol)
        sens = res.sensitivity or {}
        if res.t0_c is None:
            logger.info(f"critical-t0 {alpha.value}/{beta.value}: {res.note}")
        return {
            "alpha": alpha.value, "beta": beta.value, "gamma": cfg.gamma,
            "omega_ref": sens.get("omega_ref", args.omega_ref or 1e4 * cfg.gamma),
            "t0_c": res.t0_c, "t0_c_coarse": sens.get("t0_c_coarse"), "sensitivity": sens.get("shift"),
        }

    _write(cfg, pool_map(point, cases, cfg.threads), CRITICAL_T0_COLUMNS)
    return 0


@cli_router.command("fit")
def cmd_fit(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Двухэкспоненциальная аппроксимация ω_c(t0) по CSV от critical-omega."""
    if not args.input:
        raise UsageError("fit needs --input PATH (a critical-omega CSV)")
    window = parse_window(args.window) if args.window else None
    try:
        frame = pd.read_csv(args.input)
    except FileNotFoundError:
        raise UsageError(f"Input file not found: {args.input}")
    except pd.errors.EmptyDataError:
        raise UsageError(f"Input file is empty: {args.input}")
    missing = {"alpha", "beta", "t0", "omega_c"} - set(frame.columns)
    if missing:
        raise UsageError(f"Input lacks columns: {', '.join(sorted(missing))}")

    rows = []
    for (alpha, beta), group in frame.groupby(["alpha", "beta"], sort=False):
        kind = ChannelKind.parse(alpha)
        res = fit_double_exponential(
            group["t0"].to_numpy(dtype=float),
            group["omega_c"].to_numpy(dtype=float),
            window or FIT_WINDOWS.get(kind),
            tol=cfg.tol,
        )
        logger.info(f"fit {alpha}/{beta}: rms={res.rms_residual:.3e} on {res.n_points} points (seed {res.seed})")
        rows.append({
            "alpha": alpha, "beta": beta, "a": res.a, "b": res.b, "c": res.c, "d": res.d,
            "rms": res.rms_residual, "window_lo": res.fit_window[0], "window_hi": res.fit_window[1],
        })
    _write(cfg, rows, FIT_COLUMNS)
    return 0


@cli_router.command("verify")
def cmd_verify(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Полный набор проверок; итог всегда в JSON."""
    summary = run_verification(quick=args.quick, inject_fault=args.inject_fault, threads=cfg.threads, tol=cfg.tol)
    # время выполнения в лог, чтобы вывод не зависел от запуска
    for check in summary.checks:
        logger.debug(f"check {check.name}: {check.elapsed_ms} ms")
    document = summary.model_dump(mode="json", exclude={"checks": {"__all__": {"elapsed_ms"}}})
    emit(to_json(document), cfg.output)
    if not summary.passed:
        failed = [c.name for c in summary.checks if not c.passed]
        raise VerificationError(f"{summary.n_failed} of {summary.n_checks} checks failed: {', '.join(failed)}")
    return 0


@cli_router.command("paper-report")
def cmd_paper_report(cfg: RunConfig, args: argparse.Namespace) -> int:
    rows = [r.model_dump() for r in build_report(args.t0_points, cfg.threads, cfg.tol)]
    _write(cfg, rows, REPORT_COLUMNS)
    return 0
