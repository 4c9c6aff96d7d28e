"""Critical points, sweeps, orderings and the double-exponential fits.

Every search works on a fidelity function of the recovery time t that accepts
numpy arrays. `fidelity_function` builds one from the closed forms (default) or
from the numerical pipeline.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect, minimize

from app.closedform import f_channel
from app.core.config import settings, Tolerances
from app.core.exceptions import DegenerateDataError, NonMonotoneError, NumericalError
from app.environment import channel_state_closed, fully_entangled_fraction
from app.schemas.common import (
    ChannelKind,
    CriticalPointResult,
    EnvironmentKind,
    FitResult,
    IntegratorConfig,
    SweepSpec,
)
from app.teleport import numeric_fidelity
from app.utils import logger

FidelityFn = Callable[[np.ndarray], np.ndarray]

CLASSICAL_LIMIT = 2.0 / 3.0

# t0 windows of the published ω_c(t0) curves, per transmission channel
FIT_WINDOWS: Dict[ChannelKind, Tuple[float, float]] = {
    ChannelKind.DISSIPATIVE: (0.15, 7.85),
    ChannelKind.NOISY: (0.1, 2.98),
    ChannelKind.DEPHASING: (0.15, 11.85),
}

OMEGA_BRACKET = (1e-4, 16.0)
OMEGA_CEILING = 1024.0
MONOTONE_PROBES = 12
MONOTONE_SLACK = 1e-8
LOCAL_MAX_WINDOW = 1e-4
TIE_EPS = 1e-12

_INV_PHI = (math.sqrt(5) - 1) / 2
_INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2
_CHUNK = 200_000


def fidelity_function(
    alpha: Union[str, ChannelKind],
    beta: Union[str, EnvironmentKind],
    gamma: float,
    omega: float,
    t0: float = 0.0,
    method: str = "closed",
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
    gamma_factor: float = 1.0,
) -> FidelityFn:
    alpha = ChannelKind.parse(alpha)
    beta = EnvironmentKind.parse(beta)
    if method == "closed":
        return lambda t: np.asarray(f_channel(alpha, beta, gamma, omega, t, t0), dtype=float)
    if method == "numeric":
        return lambda t: np.asarray(
            numeric_fidelity(alpha, beta, gamma, omega, t, t0, cfg=cfg, tol=tol, gamma_factor=gamma_factor),
            dtype=float,
        )
    raise ValueError(f"Unknown method '{method}'")


def _scalar(f: FidelityFn, t: float) -> float:
    return float(np.asarray(f(np.array([t]))).ravel()[0])


def _evaluate(f: FidelityFn, ts: np.ndarray) -> np.ndarray:
    parts = [np.asarray(f(ts[i:i + _CHUNK]), dtype=float).ravel() for i in range(0, len(ts), _CHUNK)]
    return np.concatenate(parts)


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> Tuple[float, float, int]:
    """Golden-section search for the maximum of a unimodal f on [a, b].

    Returns (t, f(t), iterations).
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        t = (a + b) / 2
        return t, f(t), 0

    n = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    c = a + _INV_PHI_SQUARE * h
    d = a + _INV_PHI * h
    yc, yd = f(c), f(d)

    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            h = _INV_PHI * h
            c = a + _INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = _INV_PHI * h
            d = a + _INV_PHI * h
            yd = f(d)

    if yc > yd:
        return c, yc, n
    return d, yd, n


def search_window(omega: float, gamma: float) -> float:
    """T = max(4π/ω, 20/γ), ignoring terms whose rate is zero."""
    parts = []
    if omega > 0:
        parts.append(4 * math.pi / omega)
    if gamma > 0:
        parts.append(20.0 / gamma)
    return max(parts) if parts else 1.0


def scan_step(omega: float, gamma: float, window: float, resolve_decay: bool = False) -> float:
    """min(π/(20ω), T/2000); `resolve_decay` also caps it at 1/(20γ)."""
    steps = [window / 2000.0]
    if omega > 0:
        steps.append(math.pi / (20.0 * omega))
    # closed forms only
    if resolve_decay and gamma > 0:
        steps.append(1.0 / (20.0 * gamma))
    return min(steps)


def _scan_maxima(values: np.ndarray) -> List[int]:
    n = len(values)
    if n == 1:
        return [0]
    idx = []
    if values[0] >= values[1]:
        idx.append(0)
    inner = np.nonzero((values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:]))[0] + 1
    idx.extend(int(i) for i in inner)
    if values[-1] > values[-2]:
        idx.append(n - 1)
    return idx


def critical_time(
    f: FidelityFn,
    omega: float,
    gamma: float,
    t_max: Optional[float] = None,
    tol: Optional[Tolerances] = None,
    resolve_decay: bool = False,
) -> CriticalPointResult:
    """Global maximum of f(t) on [0, T]: uniform scan, then golden-section refinement.

    The best three scan maxima are refined; among maxima equal within 1e-12 the
    earliest wins. Maxima within 1e-4 of the best are listed in `local_maxima`.
    """
    tol = tol or settings.TOL
    window = t_max if t_max is not None else search_window(omega, gamma)
    if not window > 0:
        raise ValueError(f"Search window must be positive, got {window}")

    step = scan_step(omega, gamma, window, resolve_decay)
    n = int(math.ceil(window / step)) + 1
    ts = np.linspace(0.0, window, n)
    values = _evaluate(f, ts)
    if not np.all(np.isfinite(values)):
        raise NumericalError("Fidelity function returned non-finite values during the scan")

    candidates = _scan_maxima(values)
    ranked = sorted(candidates, key=lambda i: (-values[i], i))[:3]

    refined: Dict[int, Tuple[float, float]] = {}
    iterations = 0
    for i in ranked:
        if i in (0, n - 1):
            refined[i] = (float(ts[i]), float(values[i]))
            continue
        t_best, f_best, its = golden_section_max(lambda x: _scalar(f, x), ts[i - 1], ts[i + 1], tol.golden)
        iterations += its
        if not math.isfinite(f_best):
            raise NumericalError(f"Fidelity function returned {f_best} at t={t_best}")
        if f_best < values[i]:
            t_best, f_best = float(ts[i]), float(values[i])
        refined[i] = (float(t_best), float(f_best))

    best_value = max(v for _, v in refined.values())
    best_index = min((i for i, (_, v) in refined.items() if v >= best_value - TIE_EPS), key=lambda i: refined[i][0])
    t_c, f_max = refined[best_index]
    boundary = best_index in (0, n - 1)
    if boundary:
        logger.warning(f"Fidelity maximum sits on the edge of the search window (t={t_c:.6g}, T={window:.6g})")

    local = []
    for i in candidates:
        t_i, v_i = refined.get(i, (float(ts[i]), float(values[i])))
        if v_i >= f_max - LOCAL_MAX_WINDOW:
            local.append((t_i, v_i))

    return CriticalPointResult(
        t_c=t_c,
        f_max=f_max,
        window=(0.0, float(window)),
        iterations=iterations,
        boundary=boundary,
        local_maxima=sorted(local),
    )


def max_fidelity(
    alpha: Union[str, ChannelKind],
    beta: Union[str, EnvironmentKind],
    gamma: float,
    omega: float,
    t0: float = 0.0,
    method: str = "closed",
    t_max: Optional[float] = None,
    tol: Optional[Tolerances] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> CriticalPointResult:
    f = fidelity_function(alpha, beta, gamma, omega, t0, method, cfg=cfg, tol=tol)
    return critical_time(f, omega, gamma, t_max=t_max, tol=tol, resolve_decay=method == "closed")


def critical_omega(
    alpha: Union[str, ChannelKind],
    beta: Union[str, EnvironmentKind],
    gamma: float,
    t0: float = 0.0,
    method: str = "closed",
    tol: Optional[Tolerances] = None,
) -> CriticalPointResult:
    """Smallest ω with F_max(ω) = 2/3, by bisection.

    A missing sign change is reported through `note` with omega_c left empty.
    """
    tol = tol or settings.TOL

    def g(omega: float) -> float:
        return max_fidelity(alpha, beta, gamma, omega, t0, method, tol=tol).f_max - CLASSICAL_LIMIT

    lo, hi = OMEGA_BRACKET
    g_lo = g(lo)
    if g_lo >= 0:
        return CriticalPointResult(window=(lo, hi), note=f"F_max already exceeds 2/3 at omega={lo:g}")

    g_hi = g(hi)
    while g_hi < 0 and hi < OMEGA_CEILING:
        hi = min(2 * hi, OMEGA_CEILING)
        logger.debug(f"critical_omega: expanding bracket to [{lo:g}, {hi:g}]")
        g_hi = g(hi)
    if g_hi < 0:
        note = f"F_max stays below 2/3 for omega up to {hi:g}"
        logger.warning(f"critical_omega({ChannelKind.parse(alpha).value}, {EnvironmentKind.parse(beta).value}): {note}")
        return CriticalPointResult(window=(lo, hi), note=note)

    probes = np.geomspace(lo, hi, MONOTONE_PROBES)
    values = np.array([g_lo] + [g(w) for w in probes[1:-1]] + [g_hi])
    drops = np.diff(values)
    if np.any(drops < -MONOTONE_SLACK):
        raise NonMonotoneError(f"F_max(omega) decreases by {-drops.min():.3e} inside [{lo:g}, {hi:g}]")

    # narrow to the sampled interval holding the sign change
    k = int(np.argmax(values >= 0))
    a, b = float(probes[k - 1]), float(probes[k])
    root, info = bisect(g, a, b, xtol=tol.omega_bisect, full_output=True)
    at_root = max_fidelity(alpha, beta, gamma, root, t0, method, tol=tol)
    return CriticalPointResult(
        t_c=at_root.t_c,
        f_max=at_root.f_max,
        omega_c=float(root),
        window=(lo, hi),
        iterations=info.iterations,
    )


def _t0_root(alpha, beta, gamma, omega_ref, tol) -> Tuple[Optional[float], int, float]:
    period_cover = 20 * math.pi / omega_ref

    def h(t0: float) -> float:
        # far above the decoherence rate only the first revival can be the maximum
        return max_fidelity(alpha, beta, gamma, omega_ref, t0, t_max=period_cover, tol=tol).f_max - CLASSICAL_LIMIT

    if h(0.0) <= 0:
        raise NumericalError(f"F_max at t0=0 does not exceed 2/3 for omega_ref={omega_ref:g}")

    hi, ceiling = 10.0 / gamma, 1000.0 / gamma
    h_hi = h(hi)
    while h_hi > 0 and hi < ceiling:
        hi = min(2 * hi, ceiling)
        h_hi = h(hi)
    if h_hi > 0:
        return None, 0, hi
    root, info = bisect(h, 0.0, hi, xtol=tol.t0_bisect, full_output=True)
    return float(root), info.iterations, hi


def critical_t0(
    alpha: Union[str, ChannelKind],
    gamma: float,
    beta: Union[str, EnvironmentKind] = EnvironmentKind.DISSIPATIVE,
    omega_ref: Optional[float] = None,
    tol: Optional[Tolerances] = None,
) -> CriticalPointResult:
    """Longest transmission time for which some rotation rate still beats 2/3.

    The supremum over ω is taken at omega_ref (10^4·γ by default); the root is
    recomputed at omega_ref/10 and the shift reported as sensitivity.
    """
    tol = tol or settings.TOL
    alpha = ChannelKind.parse(alpha)
    beta = EnvironmentKind.parse(beta)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if alpha is ChannelKind.PERFECT:
        return CriticalPointResult(note="perfect channel does not depend on t0")

    omega_ref = omega_ref or 1e4 * gamma
    root, iterations, hi = _t0_root(alpha, beta, gamma, omega_ref, tol)
    if root is None:
        return CriticalPointResult(window=(0.0, hi), note=f"F_max stays above 2/3 for t0 up to {hi:g}")

    coarse, _, _ = _t0_root(alpha, beta, gamma, omega_ref / 10, tol)
    sensitivity = {"omega_ref": omega_ref, "omega_coarse": omega_ref / 10}
    if coarse is not None:
        sensitivity["t0_c_coarse"] = coarse
        sensitivity["shift"] = root - coarse
    return CriticalPointResult(
        t0_c=root,
        window=(0.0, hi),
        iterations=iterations,
        sensitivity=sensitivity,
        note=f"supremum over omega taken at omega_ref={omega_ref:g} with beta={beta.value}",
    )


def _prepare(t0, values, window) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(t0, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateDataError("Fit needs two 1-D arrays of equal length")
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, y = x[keep], y[keep]
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if len(np.unique(x)) < 8:
        raise DegenerateDataError(f"Fit needs at least 8 distinct t0 values, got {len(np.unique(x))}")
    if np.ptp(y) <= 1e-14 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateDataError("Fit data are constant")
    return x, y


def _rms(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residual * residual)))


def _model(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        return p[0] * np.exp(p[1] * x) + p[2] * np.exp(p[3] * x)


def _objective(p: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    r = _model(p, x) - y
    value = float(np.mean(r * r))
    return value if math.isfinite(value) else 1e300


def _simplex(fun, x0, tol: Tolerances) -> np.ndarray:
    """Nelder-Mead, restarted from its own result until the point stops moving."""
    x = np.asarray(x0, dtype=float)
    for _ in range(3):
        res = minimize(
            fun,
            x,
            method="Nelder-Mead",
            options={"xatol": tol.simplex, "fatol": 1e-30, "maxiter": 20000, "maxfev": 40000, "adaptive": True},
        )
        moved = np.max(np.abs(res.x - x))
        x = res.x
        if moved < tol.simplex:
            break
    return x


def fit_single_exponential(t0, values, window=None, tol: Optional[Tolerances] = None) -> FitResult:
    """y ≈ a·e^{b t0}: log-linear start, then Nelder-Mead on the linear residual."""
    tol = tol or settings.TOL
    x, y = _prepare(t0, values, window)
    if np.all(y > 0):
        b0, log_a0 = np.polyfit(x, np.log(y), 1)
        start = np.array([math.exp(log_a0), b0])
    else:
        start = np.array([float(np.mean(y)), 0.0])

    def fun(p):
        return _objective(np.array([p[0], p[1], 0.0, 0.0]), x, y)

    a, b = _simplex(fun, start, tol)
    return FitResult(
        a=float(a), b=float(b), c=0.0, d=0.0,
        rms_residual=_rms(_model(np.array([a, b, 0.0, 0.0]), x) - y),
        fit_window=(float(x[0]), float(x[-1])),
        n_points=len(x),
    )


def _linear_amplitudes(b: float, d: float, x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Best (a, c) for fixed rates (b, d) and the resulting mean square."""
    with np.errstate(over="ignore", invalid="ignore"):
        design = np.column_stack([np.exp(b * x), np.exp(d * x)])
    if not np.all(np.isfinite(design)):
        return 0.0, 0.0, 1e300
    (a, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    r = design @ np.array([a, c]) - y
    return float(a), float(c), float(np.mean(r * r))


def fit_double_exponential(t0, values, window=None, tol: Optional[Tolerances] = None) -> FitResult:
    """Least-squares fit of a·e^{b t0} + c·e^{d t0}.

    Five deterministic starts: the best single exponential (c = 0, d = 2b) and
    four rate pairs whose amplitudes are solved linearly. Each start is polished
    by Nelder-Mead on all four coefficients; the lowest residual wins.
    """
    tol = tol or settings.TOL
    x, y = _prepare(t0, values, window)
    single = fit_single_exponential(x, y, tol=tol)
    a_s, b_s = single.a, single.b
    s = 1.0 / (x[-1] - x[0])

    seeds = [np.array([a_s, b_s, 0.0, 2 * b_s])]
    for b0, d0 in ((b_s, 2 * b_s + s), (b_s - s, b_s + 2 * s), (0.5 * b_s, b_s + 4 * s), (b_s + s, b_s - 2 * s)):
        # rates first (amplitudes solved exactly), then amplitudes attached
        rates = _simplex(lambda r: _linear_amplitudes(r[0], r[1], x, y)[2], [b0, d0], tol)
        a0, c0, _ = _linear_amplitudes(rates[0], rates[1], x, y)
        seeds.append(np.array([a0, rates[0], c0, rates[1]]))

    best, best_rms, best_seed = None, math.inf, 0
    for k, seed in enumerate(seeds):
        p = _simplex(lambda q: _objective(q, x, y), seed, tol)
        rms = _rms(_model(p, x) - y)
        logger.debug(f"fit seed {k}: rms={rms:.3e} params={p.tolist()}")
        if rms < best_rms:
            best, best_rms, best_seed = p, rms, k

    # keep the larger-amplitude branch first so (a, b) reads as the leading term
    a, b, c, d = (float(v) for v in best)
    if abs(c) > abs(a):
        a, b, c, d = c, d, a, b
    return FitResult(
        a=a, b=b, c=c, d=d,
        rms_residual=best_rms,
        fit_window=(float(x[0]), float(x[-1])),
        n_points=len(x),
        seed=best_seed,
    )


def asymptotic_fidelity(alpha: Union[str, ChannelKind], gamma: float, t0: float) -> float:
    """(2F_e + 1)/3: the value F_max approaches as the rotation becomes instantaneous."""
    fe = fully_entangled_fraction(channel_state_closed(alpha, gamma, t0))
    return (2.0 * fe + 1.0) / 3.0


def pool_map(fn: Callable, items: Sequence, threads: Optional[int] = None) -> List:
    """Ordered map over a thread pool; results keep the order of `items`."""
    items = list(items)
    workers = threads or settings.THREADS
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def sweep(plan: SweepSpec, threads: Optional[int] = None, tol: Optional[Tolerances] = None) -> List[Dict]:
    """Rows ordered by axis value: F(t) for axis t, otherwise (t_c, F_max)."""
    if not plan.values:
        return []

    if plan.axis == "t":
        f = fidelity_function(plan.alpha, plan.beta, plan.gamma, plan.omega, plan.t0, plan.method, tol=tol)
        values = np.asarray(f(np.asarray(plan.values, dtype=float)), dtype=float).ravel()
        return [{"axis": "t", "value": v, "F": float(F)} for v, F in zip(plan.values, values)]

    def point(value: float) -> Dict:
        kwargs = {"gamma": plan.gamma, "omega": plan.omega, "t0": plan.t0}
        kwargs[plan.axis] = value
        res = max_fidelity(plan.alpha, plan.beta, method=plan.method, tol=tol, **kwargs)
        return {"axis": plan.axis, "value": value, "t_c": res.t_c, "f_max": res.f_max}

    return pool_map(point, plan.values, threads)


def _chain(values: Sequence[float], strict: bool) -> bool:
    pairs = zip(values, values[1:])
    if strict:
        return all(a > b for a, b in pairs)
    return all(a >= b - TIE_EPS for a, b in pairs)


def ordering_report(
    gamma: float = 0.1,
    t0: float = 2.0,
    omegas: Iterable[float] = (0.5, 1.0, 5.0),
    include_critical: bool = True,
    threads: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> List[Dict]:
    """Orderings between recovery kinds and channels.

    F_max rows are gating; the critical-rate and critical-time rows are
    informational (`gating` False).
    """
    betas = [EnvironmentKind.DEPHASING, EnvironmentKind.DISSIPATIVE, EnvironmentKind.NOISY]
    channels = [ChannelKind.PERFECT, ChannelKind.DEPHASING, ChannelKind.DISSIPATIVE, ChannelKind.NOISY]
    rows = []

    for omega in omegas:
        cases = [(a, b) for a in channels for b in betas]
        fmax = dict(zip(cases, pool_map(
            lambda ab: max_fidelity(ab[0], ab[1], gamma, omega, t0, tol=tol).f_max, cases, threads
        )))
        for a in channels:
            vals = [fmax[(a, b)] for b in betas]
            rows.append({
                "relation": f"F_max[{a.value}]: de >= di >= no",
                "omega": omega, "values": vals, "holds": _chain(vals, strict=False), "gating": True,
            })
        for b in betas:
            vals = [fmax[(a, b)] for a in channels]
            rows.append({
                "relation": f"F_max^({b.value}): perfect >= de >= di >= no",
                "omega": omega, "values": vals, "holds": _chain(vals, strict=False), "gating": True,
            })
        tcs = [max_fidelity(ChannelKind.PERFECT, b, gamma, omega, tol=tol).t_c for b in betas]
        rows.append({
            "relation": "t_c[perfect]: de > di > no",
            "omega": omega, "values": tcs, "holds": _chain(tcs, strict=True), "gating": False,
        })

    if include_critical:
        cases = [(a, b) for a in channels for b in betas]
        omega_c = dict(zip(cases, pool_map(
            lambda ab: critical_omega(ab[0], ab[1], gamma, 0.0 if ab[0] is ChannelKind.PERFECT else t0, tol=tol).omega_c,
            cases, threads,
        )))
        for a in channels:
            vals = [omega_c[(a, b)] for b in betas]
            holds = None not in vals and _chain([-v for v in vals], strict=True)
            rows.append({
                "relation": f"omega_c[{a.value}]: de < di < no",
                "omega": None, "values": vals, "holds": holds, "gating": False,
            })
        for b in betas:
            vals = [omega_c[(a, b)] for a in channels]
            holds = None not in vals and _chain([-v for v in vals], strict=True)
            rows.append({
                "relation": f"omega_c^({b.value}): perfect < de < di < no",
                "omega": None, "values": vals, "holds": holds, "gating": False,
            })
    return rows
