"""Analytic average fidelities for perfect, dissipative, noisy and dephasing channels.

Everything is evaluated in real arithmetic: the hyperbolic functions of
u = √(γ² - 16ω²)/4 and v = √(γ² - 4ω²)/2 go through `hyp_pair`, which switches to
cos/sin when the radicand is negative and to a short series near zero. The
exponential envelopes e^{-3γt/4}, e^{-3γt/2} and e^{-γt/4} are folded into
`hyp_pair` so that cosh never overflows for long recovery times.

All functions accept numpy arrays for `t` and `omega` (broadcast together).
"""
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.schemas.common import ChannelKind, EnvironmentKind

ArrayLike = Union[float, np.ndarray]

_SERIES_LIMIT = 1e-8


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


class HypPair(BaseModel):
    """c ~ cosh(wt), s_over_w ~ sinh(wt)/w, both already multiplied by e^{-damping·t}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c: Union[float, np.ndarray]
    s_over_w: Union[float, np.ndarray]


def _hyp_arrays(w_squared, t, damping=0.0):
    w2, t = np.broadcast_arrays(np.asarray(w_squared, dtype=float), np.asarray(t, dtype=float))
    d = np.broadcast_to(np.asarray(damping, dtype=float), w2.shape)
    c = np.empty(w2.shape)
    s = np.empty(w2.shape)

    x = w2 * t * t
    series = np.abs(x) < _SERIES_LIMIT
    pos = (w2 > 0) & ~series
    neg = (w2 < 0) & ~series

    if np.any(series):
        xs, ts, ds = x[series], t[series], d[series]
        env = np.exp(-ds * ts)
        c[series] = (1 + xs / 2 + xs * xs / 24) * env
        s[series] = ts * (1 + xs / 6 + xs * xs / 120) * env
    if np.any(pos):
        w, tp, dp = np.sqrt(w2[pos]), t[pos], d[pos]
        # e^{(w-d)t} and e^{-(w+d)t} stay bounded whenever w <= d
        grow = np.exp((w - dp) * tp)
        decay = np.exp(-(w + dp) * tp)
        c[pos] = (grow + decay) / 2
        s[pos] = (grow - decay) / (2 * w)
    if np.any(neg):
        w, tn, dn = np.sqrt(-w2[neg]), t[neg], d[neg]
        env = np.exp(-dn * tn)
        c[neg] = np.cos(w * tn) * env
        s[neg] = np.sin(w * tn) / w * env
    return c, s


def hyp_pair(w_squared: ArrayLike, t: ArrayLike, damping: ArrayLike = 0.0) -> HypPair:
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("hyp_pair needs t >= 0")
    c, s = _hyp_arrays(w_squared, t_arr, damping)
    return HypPair(c=_out(c), s_over_w=_out(s))


class ClosedFormParams(BaseModel):
    """Коэффициенты α1..α3, β1, β2, μ1, μ2 аналитических формул."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha1: Union[float, np.ndarray]
    alpha2: Union[float, np.ndarray]
    alpha3: Union[float, np.ndarray]
    beta1: Union[float, np.ndarray]
    beta2: Union[float, np.ndarray]
    mu1: Union[float, np.ndarray]
    mu2: Union[float, np.ndarray]


def _param_arrays(gamma, omega, t):
    gamma = float(gamma)
    omega, t = np.broadcast_arrays(np.asarray(omega, dtype=float), np.asarray(t, dtype=float))
    if gamma < 0 or np.any(omega < 0) or np.any(t < 0):
        raise ValueError("gamma, omega and t must be non-negative")
    g2, w2 = gamma * gamma, omega * omega

    u2 = (g2 - 16 * w2) / 16
    v2 = (g2 - 4 * w2) / 4

    den = g2 + 2 * w2
    safe = den > 0
    den_safe = np.where(safe, den, 1.0)
    # γ = ω = 0: nothing moves; pick the limits that keep α1 = 1 at t = 0
    k1 = np.where(safe, (g2 + w2) / den_safe, 1.0)
    k2 = np.where(safe, gamma * (g2 + 5 * w2) / den_safe, 0.0)
    ratio = np.where(safe, w2 / den_safe, 0.0)

    ca, sa = _hyp_arrays(u2, t, 3 * gamma / 4)
    cb, sb = _hyp_arrays(v2, t, 3 * gamma / 2)
    cm, sm = _hyp_arrays(u2, t, gamma / 4)

    return {
        "alpha1": k1 * ca - k2 * sa / 4 + ratio,
        "alpha2": np.exp(-gamma * t / 2) / 2 - (gamma * sa + 4 * ca) / 8,
        "alpha3": ratio * (1 - (3 * gamma * sa + 4 * ca) / 4),
        "beta1": 0.5 - (gamma * sb - 2 * cb) / 4,
        "beta2": np.exp(-gamma * t) / 2 - (gamma * sb + 2 * cb) / 4,
        "mu1": 0.5 + (gamma * sm + 4 * cm) / 8,
        "mu2": np.exp(-gamma * t / 2) / 2 + (gamma * sm - 4 * cm) / 8,
    }


def params(gamma: float, omega: ArrayLike, t: ArrayLike) -> ClosedFormParams:
    return ClosedFormParams(**{k: _out(v) for k, v in _param_arrays(gamma, omega, t).items()})


def _sin2(omega, t):
    return np.sin(np.asarray(omega, dtype=float) * np.asarray(t, dtype=float) / 2) ** 2


def f_perfect(beta: Union[str, EnvironmentKind], gamma: float, omega: ArrayLike, t: ArrayLike) -> ArrayLike:
    """Average fidelity through a perfect channel with disturbed recovery of kind β."""
    return f_channel(ChannelKind.PERFECT, beta, gamma, omega, t, 0.0)


def f_channel(
    alpha: Union[str, ChannelKind],
    beta: Union[str, EnvironmentKind],
    gamma: float,
    omega: ArrayLike,
    t: ArrayLike,
    t0: ArrayLike,
    as_printed: bool = False,
) -> ArrayLike:
    """Average fidelity F^(β)[ρ^(α)].

    `as_printed` only affects the noisy recovery through the dissipative channel:
    its published leading constant 2/3 drops the -(1 - e^{-2γt})/12 term, so that
    line does not reduce to the perfect channel at t0 = 0. The default uses the
    consistent form.
    """
    alpha = ChannelKind.parse(alpha)
    beta = EnvironmentKind.parse(beta)
    t0 = np.asarray(t0, dtype=float)
    if np.any(t0 < 0):
        raise ValueError("t0 must be non-negative")

    p = _param_arrays(gamma, omega, t)
    t = np.asarray(t, dtype=float)
    a1, a2, a3 = p["alpha1"], p["alpha2"], p["alpha3"]
    b1, b2 = p["beta1"], p["beta2"]
    m1, m2 = p["mu1"], p["mu2"]
    s2 = _sin2(omega, t)
    e_t = np.exp(-gamma * t)
    e_t2 = np.exp(-gamma * t / 2)
    x = gamma * t0

    if alpha is ChannelKind.PERFECT:
        if beta is EnvironmentKind.DISSIPATIVE:
            f = 0.5 + (e_t - a1 + 2 * a2 + a3) / 12 + e_t2 * s2 / 6
        elif beta is EnvironmentKind.NOISY:
            f = 7 / 12 + (b2 - b1) / 6 + np.exp(-2 * gamma * t) / 12 + e_t * s2 / 6
        else:
            f = 2 / 3 + (m2 - m1) / 6 + e_t2 * s2 / 6

    elif alpha is ChannelKind.DISSIPATIVE:
        e1, e2 = np.exp(-x), np.exp(-2 * x)
        if beta is EnvironmentKind.DISSIPATIVE:
            f = (0.5 + (2 * e2 - e1) * (e_t - a1 + a3) / 12 + a3 / 6
                 + e1 * (a2 - a3 + e_t2 * s2) / 6)
        elif beta is EnvironmentKind.NOISY:
            lead = 2 / 3 if as_printed else 7 / 12 + np.exp(-2 * gamma * t) / 12
            f = (lead + (e2 - e1) * (np.exp(-2 * gamma * t) - 2 * b1 + 1) / 6
                 - b1 / 6 + e1 * (b2 + e_t * s2) / 6)
        else:
            f = (2 / 3 + (e2 - e1) * (1 - m1) / 3 - m1 / 6
                 + e1 * (m2 + e_t2 * s2) / 6)

    elif alpha is ChannelKind.NOISY:
        e2, e4 = np.exp(-2 * x), np.exp(-4 * x)
        if beta is EnvironmentKind.DISSIPATIVE:
            f = 0.5 + e4 * (e_t - a1 + a3) / 12 + e2 * (a2 + e_t2 * s2) / 6
        elif beta is EnvironmentKind.NOISY:
            f = 0.5 + e4 * (np.exp(-2 * gamma * t) - 2 * b1 + 1) / 12 + e2 * (b2 + e_t * s2) / 6
        else:
            f = 0.5 + e4 * (1 - m1) / 6 + e2 * (m2 + e_t2 * s2) / 6

    else:
        e1 = np.exp(-x)
        if beta is EnvironmentKind.DISSIPATIVE:
            f = 0.5 + (e_t - a1 + a3) / 12 + e1 * (a2 + e_t2 * s2) / 6
        elif beta is EnvironmentKind.NOISY:
            f = 7 / 12 + np.exp(-2 * gamma * t) / 12 - b1 / 6 + e1 * (b2 + e_t * s2) / 6
        else:
            f = 2 / 3 - m1 / 6 + e1 * (m2 + e_t2 * s2) / 6

    return _out(f)
