"""Invariant suite behind the `verify` command.

Each check measures one deviation, compares it with a tolerance from
`settings.TOL` and records the outcome; nothing here raises on a failed check.
"""
import itertools
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.linalg import expm

from app.analysis import (
    CLASSICAL_LIMIT,
    critical_omega,
    critical_t0,
    critical_time,
    fidelity_function,
    fit_double_exponential,
    max_fidelity,
    ordering_report,
    pool_map,
    sweep,
)
from app.closedform import f_channel, f_perfect
from app.core.config import settings, Tolerances
from app.core.exceptions import TeleportError
from app.environment import (
    bell_projector,
    channel_state_closed,
    channel_state_numeric,
    concurrence,
    esd_time,
    esd_time_bisect,
    fully_entangled_fraction,
    generators,
)
from app.lindblad import LindbladModel, evolve, liouvillian_apply
from app.qmat import adjoint, density_deviation, hermitian_eigenvalues, kron, partial_trace, pauli
from app.schemas.common import (
    ChannelKind,
    CheckResult,
    EnvironmentKind,
    IntegratorConfig,
    RecoveryConfig,
    SweepSpec,
)
from app.teleport import (
    average_fidelity,
    average_fidelity_many,
    ideal_correction_fidelity,
    input_states,
    outcome_probability,
)
from app.utils import Timer, logger

CHANNELS = tuple(ChannelKind)
BETAS = tuple(EnvironmentKind)
DECOHERED = (ChannelKind.DISSIPATIVE, ChannelKind.NOISY, ChannelKind.DEPHASING)

GRID_GAMMA = (0.05, 0.1, 0.2)
GRID_OMEGA = (0.02, 0.1, 1.0, 5.0, 50.0)
GRID_T = (0.1, 1.0, 5.0, 20.0)
GRID_T0 = (0.0, 0.5, 2.0)

QUICK_GAMMA = (0.1,)
QUICK_OMEGA = (0.1, 5.0)
QUICK_T = (1.0, 5.0)
QUICK_T0 = (0.0, 2.0)


class VerificationSummary(BaseModel):
    passed: bool
    quick: bool
    inject_fault: bool
    n_checks: int
    n_failed: int
    checks: List[CheckResult]
    traceability: Dict[str, List[str]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class _Suite:
    def __init__(self, tol: Tolerances):
        self.tol = tol
        self.results: List[CheckResult] = []

    def check(self, name: str, module: str, invariant: str, tolerance: float, measure: Callable[[], float]) -> None:
        with Timer() as timer:
            try:
                measured = float(measure())
                passed = measured <= tolerance
                detail = ""
            except TeleportError as e:
                measured, passed, detail = math.inf, False, f"{type(e).__name__}: {e.detail}"
            except (ValueError, TypeError, ArithmeticError) as e:
                measured, passed, detail = math.inf, False, f"{type(e).__name__}: {e}"
        if not passed:
            logger.warning(f"check {name} failed: measured={measured:.3e} tolerance={tolerance:.3e} {detail}")
        self.results.append(CheckResult(
            name=name, module=module, invariant=invariant, measured=measured if math.isfinite(measured) else 1e300,
            tolerance=tolerance, passed=passed, elapsed_ms=int(timer.elapsed), detail=detail,
        ))


def random_density_matrices(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, dim, dim)) + 1j * rng.normal(size=(n, dim, dim))
    rho = g @ np.conj(np.swapaxes(g, -1, -2))
    return rho / np.trace(rho, axis1=-2, axis2=-1)[:, None, None]


def _qmat_checks(s: _Suite) -> None:
    rng = np.random.default_rng(7)
    a, b = random_density_matrices(1, 2, rng)[0], random_density_matrices(1, 4, rng)[0]
    s.check("partial_trace_of_kron", "qmat", "partial trace inverts the tensor product", s.tol.trace,
            lambda: max(np.max(np.abs(partial_trace(kron(a, b), [0]) - a)),
                        np.max(np.abs(partial_trace(kron(a, b), [1, 2]) - b))))

    m = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    s.check("kron_mixed_product", "qmat", "(A⊗B)(C⊗D) = (AC)⊗(BD)", 1e-12,
            lambda: np.max(np.abs(kron(m[0], m[1]) @ kron(m[2], m[3]) - kron(m[0] @ m[2], m[1] @ m[3]))))

    rho3 = random_density_matrices(1, 8, rng)[0]

    def partial_trace_norm() -> float:
        keeps = [k for r in (1, 2, 3) for k in itertools.combinations(range(3), r)]
        return max(abs(np.trace(partial_trace(rho3, keep)) - 1.0) for keep in keeps)

    s.check("partial_trace_keeps_trace", "qmat", "trace of partial_trace equals 1 for every kept subset",
            s.tol.trace, partial_trace_norm)

    def eigen_sum() -> float:
        worst = 0.0
        for dim in (2, 4, 8):
            h = random_density_matrices(1, dim, rng)[0] - 0.3 * np.eye(dim)
            worst = max(worst, abs(np.sum(hermitian_eigenvalues(h)) - np.trace(h).real))
        return worst

    s.check("eigenvalue_sum", "qmat", "eigenvalues sum to the trace", 1e-12, eigen_sum)
    s.check("adjoint_involution", "qmat", "adjoint(adjoint(A)) = A", 0.0,
            lambda: max(np.max(np.abs(adjoint(adjoint(x)) - x)) for x in m))

    def unitary_trace() -> float:
        rho = random_density_matrices(1, 2, rng)[0]
        worst = 0.0
        for n in (1, 2, 3):
            for theta in (0.3, 1.7, 4.0):
                u = expm(-0.5j * theta * pauli(n))
                worst = max(worst, abs(np.trace(u @ rho @ adjoint(u)) - np.trace(rho)))
        return worst

    s.check("unitary_trace_invariance", "qmat", "trace invariant under exp(-iθσ/2) conjugation", 1e-10, unitary_trace)
    s.check("pauli_spectrum", "qmat", "every Pauli matrix has eigenvalues -1, +1", s.tol.eig_offdiag * 1e3,
            lambda: max(np.max(np.abs(hermitian_eigenvalues(pauli(n)) - [-1, 1])) for n in (1, 2, 3)))


def _density_violation(rho: np.ndarray) -> float:
    dev = density_deviation(rho)
    return max(dev["trace_error"], dev["hermitian_error"], max(0.0, -dev["min_eigenvalue"]))


def _channel_state_checks(s: _Suite, quick: bool) -> None:
    gammas = (0.1,) if quick else (0.05, 0.1, 0.5)
    t0s = (0.0, 2.0) if quick else (0.0, 0.5, 2.0, 5.0, 20.0)

    def valid() -> float:
        worst = _density_violation(bell_projector())
        for kind, g, t0 in itertools.product(CHANNELS, gammas, t0s):
            worst = max(worst, _density_violation(channel_state_closed(kind, g, t0).rho),
                        _density_violation(channel_state_numeric(kind, g, t0).rho))
        return worst

    s.check("channel_states_valid", "environment", "closed and integrated channel states are density matrices",
            s.tol.positivity, valid)


def evolution_hygiene(states: np.ndarray, gamma: float = 0.1) -> float:
    """Worst trace, Hermiticity or positivity drift over 10/γ, every generator set and Pauli rotation."""
    worst = 0.0
    for kind in EnvironmentKind:
        for m in range(4):
            model = LindbladModel(hamiltonian=-0.5 * 3.0 * pauli(m), collapse_ops=generators(kind), gamma=gamma)
            dev = density_deviation(evolve(model, states, 10.0 / gamma))
            worst = max(worst, dev["trace_error"], dev["hermitian_error"], -dev["min_eigenvalue"])
    return worst


def composition_gap(states: np.ndarray, gamma: float = 0.1) -> float:
    worst = 0.0
    for kind in EnvironmentKind:
        model = LindbladModel(hamiltonian=-0.5 * pauli(1), collapse_ops=generators(kind), gamma=gamma)
        direct = evolve(model, states, 3.5)
        split = evolve(model, evolve(model, states, 1.5), 2.0)
        worst = max(worst, float(np.max(np.abs(direct - split))))
    return worst


def _lindblad_checks(s: _Suite, quick: bool) -> None:
    rng = np.random.default_rng(11)
    gamma = 0.1
    coh = np.array([[0.5, 0.3 - 0.2j], [0.3 + 0.2j, 0.5]])
    deph = LindbladModel(hamiltonian=np.zeros((2, 2)), collapse_ops=generators("de"), gamma=gamma)
    s.check("dephasing_decay", "lindblad", "coherence decays as e^{-γt/2} under dephasing", s.tol.richardson,
            lambda: abs(abs(evolve(deph, coh, 3.0)[0, 1]) - abs(coh[0, 1]) * math.exp(-gamma * 3.0 / 2)))
    damp = LindbladModel(hamiltonian=np.zeros((2, 2)), collapse_ops=generators("di"), gamma=gamma)
    s.check("amplitude_decay", "lindblad", "population of |0> decays as e^{-γt}", s.tol.richardson,
            lambda: abs(evolve(damp, coh, 3.0)[0, 0].real - 0.5 * math.exp(-gamma * 3.0)))

    states = random_density_matrices(10 if quick else 50, 2, rng)
    s.check("evolution_hygiene", "lindblad", "trace, Hermiticity and positivity preserved on random states",
            s.tol.evolve_trace, lambda: evolution_hygiene(states, gamma))
    s.check("composition", "lindblad", "evolve(t1+t2) = evolve(t2) after evolve(t1)", s.tol.richardson,
            lambda: composition_gap(states, gamma))

    static = LindbladModel(hamiltonian=np.zeros((2, 2)))
    s.check("static_identity", "lindblad", "H = 0 without collapse operators leaves every state unchanged", 0.0,
            lambda: float(np.max(np.abs(evolve(static, states, 7.0) - states))))

    def rhs_traceless() -> float:
        model = LindbladModel(hamiltonian=-0.5 * pauli(2), collapse_ops=generators("no"), gamma=gamma)
        d = liouvillian_apply(model, states)
        return float(max(np.max(np.abs(np.trace(d, axis1=-2, axis2=-1))), np.max(np.abs(d - np.conj(np.swapaxes(d, -1, -2))))))

    s.check("rhs_traceless_hermitian", "lindblad", "dρ/dt is traceless and Hermitian", 1e-12, rhs_traceless)


def _environment_checks(s: _Suite, quick: bool, gamma_factor: float) -> None:
    gammas = (0.1,) if quick else (0.05, 0.1, 0.5)
    t0s = (0.1, 2.0) if quick else (0.1, 1.0, 2.0, 5.0)

    def closed_vs_numeric() -> float:
        worst = 0.0
        for kind, g, t0 in itertools.product(DECOHERED, gammas, t0s):
            closed = channel_state_closed(kind, g, t0).rho
            numeric = channel_state_numeric(kind, g * gamma_factor, t0).rho
            worst = max(worst, float(np.max(np.abs(closed - numeric))))
        return worst

    s.check("channel_state_two_path", "environment", "integrated channel states match the element formulas",
            s.tol.channel_state, closed_vs_numeric)

    def concurrence_formulas() -> float:
        worst = 0.0
        for g, t0 in itertools.product(gammas, t0s + (3.0, 8.0)):
            x = g * t0
            expected = {
                ChannelKind.DISSIPATIVE: math.exp(-2 * x),
                ChannelKind.NOISY: max(0.0, math.exp(-2 * x) + math.exp(-4 * x) / 2 - 0.5),
                ChannelKind.DEPHASING: math.exp(-x),
            }
            for kind, value in expected.items():
                worst = max(worst, abs(concurrence(channel_state_closed(kind, g, t0)) - value))
        return worst

    s.check("concurrence_closed_forms", "environment", "X-state concurrence matches e^{-2x}, e^{-x} and the noisy form",
            s.tol.concurrence, concurrence_formulas)
    s.check("esd_bisection", "environment", "bisection on concurrence recovers ln(1+√2)/(2γ)", 1e-9,
            lambda: abs(esd_time_bisect("no", 1.0) - esd_time("no", 1.0)))


def _grid(quick: bool):
    if quick:
        return QUICK_GAMMA, QUICK_OMEGA, QUICK_T, QUICK_T0
    return GRID_GAMMA, GRID_OMEGA, GRID_T, GRID_T0


def two_path_deviation(gamma_factor: float = 1.0, quick: bool = False, threads: Optional[int] = None) -> Tuple[float, int]:
    """Largest |F_closed - F_numeric| over the grid and the number of cases."""
    gammas, omegas, ts, t0s = _grid(quick)
    cases = [(a, t0) for a in CHANNELS for t0 in t0s]

    def group(key) -> List[float]:
        gamma, omega, t, beta = key
        channels = [channel_state_numeric(a, gamma * gamma_factor, t0) for a, t0 in cases]
        numeric = average_fidelity_many(channels, RecoveryConfig(beta=beta, omega=omega, t=t))
        closed = [f_channel(a, beta, gamma, omega, t, t0) for a, t0 in cases]
        return [abs(c - n) for c, n in zip(closed, numeric)]

    keys = list(itertools.product(gammas, omegas, ts, BETAS))
    deviations = [d for block in pool_map(group, keys, threads) for d in block]
    return max(deviations), len(deviations)


def _teleport_checks(s: _Suite, quick: bool, gamma_factor: float, threads: Optional[int]) -> None:
    rng = np.random.default_rng(3)
    n_configs = 5 if quick else 50

    def quadrature() -> float:
        worst = 0.0
        for _ in range(n_configs):
            alpha = CHANNELS[rng.integers(4)]
            beta = BETAS[rng.integers(3)]
            gamma = float(rng.uniform(0.02, 0.3))
            channel = channel_state_closed(alpha, gamma, float(rng.uniform(0, 3)))
            rec = RecoveryConfig(beta=beta, omega=float(rng.uniform(0.1, 5)), t=float(rng.uniform(0, 5)))
            six = average_fidelity(channel, rec).average
            dense = average_fidelity(channel, rec, quadrature="dense", n_theta=64, n_phi=128).average
            worst = max(worst, abs(six - dense))
        return worst

    s.check("quadrature_exactness", "teleport", "octahedral6 equals dense(64,128) quadrature", s.tol.quadrature, quadrature)

    def probabilities() -> float:
        rho_in = input_states(rng.uniform(0, np.pi, 20), rng.uniform(0, 2 * np.pi, 20))
        worst = 0.0
        for alpha in CHANNELS:
            channel = channel_state_closed(alpha, 0.1, 2.0)
            for rho in rho_in:
                total = sum(outcome_probability(m, rho, channel) for m in range(4))
                worst = max(worst, abs(total - 1.0))
        return worst

    s.check("probabilities_sum_to_one", "teleport", "Σ_m P_m = 1 at every input state", 1e-12, probabilities)

    def recovery_free() -> float:
        worst = 0.0
        for alpha, beta in itertools.product(CHANNELS, BETAS):
            channel = channel_state_numeric(alpha, 0.1 * gamma_factor, 2.0)
            report = average_fidelity(channel, RecoveryConfig(beta=beta, omega=1.0, t=0.0))
            worst = max(worst, abs(report.average - 0.5))
        return worst

    s.check("recovery_free_half", "teleport", "F = 1/2 at t = 0 for every channel and recovery", 1e-9, recovery_free)

    def ideal() -> float:
        channel = channel_state_closed("perfect", 0.0, 0.0)
        return max(abs(average_fidelity(channel, RecoveryConfig(beta=b, omega=1.0, t=math.pi)).average - 1.0)
                   for b in BETAS)

    s.check("decoherence_free_unity", "teleport", "F = 1 at γ = 0, ωt = π for the perfect channel", 1e-8, ideal)

    def entangled_fraction() -> float:
        return max(
            abs(ideal_correction_fidelity(a, 0.1, 2.0) - (2 * fully_entangled_fraction(channel_state_closed(a, 0.1, 2.0)) + 1) / 3)
            for a in DECOHERED
        )

    s.check("ideal_correction_limit", "teleport", "instantaneous ideal correction gives (2F_e+1)/3", 1e-6, entangled_fraction)

    def two_path() -> float:
        worst, n = two_path_deviation(gamma_factor, quick, threads)
        logger.info(f"two-path grid: {n} cases, worst deviation {worst:.3e}")
        return worst

    s.check("two_path_equivalence", "closedform", "closed forms equal the numerical pipeline on the grid",
            s.tol.two_path, two_path)

    def step_halving() -> float:
        worst = 0.0
        _, omegas, ts, _ = _grid(True)
        for a, beta, omega, t in itertools.product((ChannelKind.PERFECT, ChannelKind.DISSIPATIVE), BETAS, omegas, ts):
            channel = channel_state_closed(a, 0.1, 2.0)
            step = settings.INTEGRATOR_STEP / max(1.0, omega)
            rec = RecoveryConfig(beta=beta, omega=omega, t=t)
            full = average_fidelity(channel, rec, cfg=IntegratorConfig(step=step)).average
            half = average_fidelity(channel, rec, cfg=IntegratorConfig(step=step / 2)).average
            worst = max(worst, abs(full - half))
        return worst

    s.check("step_halving", "lindblad", "halving the step changes F by at most 1e-8", s.tol.richardson, step_halving)


def _closedform_checks(s: _Suite) -> None:
    ts = np.linspace(0.0, 30.0, 301)

    def t0_zero() -> float:
        worst = 0.0
        for alpha, beta in itertools.product(DECOHERED, BETAS):
            worst = max(worst, float(np.max(np.abs(
                f_channel(alpha, beta, 0.1, 0.7, ts, 0.0) - f_perfect(beta, 0.1, 0.7, ts)))))
        return worst

    s.check("t0_zero_reduction", "closedform", "every channel formula reduces to the perfect one at t0 = 0", 1e-12, t0_zero)

    def continuity() -> float:
        worst = 0.0
        for beta, gamma in itertools.product(BETAS, (0.1, 0.2)):
            for w_star in (gamma / 4, gamma / 2):
                for t in (1.0, 5.0, 20.0):
                    mid = f_perfect(beta, gamma, w_star, t)
                    worst = max(worst, abs(mid - f_perfect(beta, gamma, w_star + 1e-7, t)),
                                abs(mid - f_perfect(beta, gamma, w_star - 1e-7, t)))
        return worst

    s.check("branch_continuity", "closedform", "continuous across γ = 4ω and γ = 2ω", 1e-5, continuity)

    def bounds() -> float:
        worst = 0.0
        for alpha, beta, gamma, omega, t0 in itertools.product(CHANNELS, BETAS, GRID_GAMMA, GRID_OMEGA, GRID_T0):
            f = np.asarray(f_channel(alpha, beta, gamma, omega, ts, t0))
            worst = max(worst, float(np.max(f - 1.0)), float(np.max(-f)))
        return max(worst, 0.0)

    s.check("boundedness", "closedform", "0 <= F <= 1 on the grid", 1e-12, bounds)

    def monotone_t0() -> float:
        worst = 0.0
        grid = np.array(GRID_T0 + (4.0, 8.0))
        for alpha, beta, omega in itertools.product(DECOHERED, BETAS, GRID_OMEGA):
            f = np.array([f_channel(alpha, beta, 0.1, omega, ts, t0) for t0 in grid])
            worst = max(worst, float(np.max(np.diff(f, axis=0))))
        return max(worst, 0.0)

    s.check("t0_monotone", "closedform", "F does not increase with t0", 1e-12, monotone_t0)


def _analysis_checks(s: _Suite, quick: bool, gamma_factor: float, threads: Optional[int]) -> None:
    def ordering() -> float:
        rows = [r for r in ordering_report(0.1, 2.0, include_critical=False, threads=threads) if r["gating"]]
        return float(sum(not r["holds"] for r in rows))

    s.check("fmax_orderings", "analysis", "de >= di >= no per channel, perfect >= de >= di >= no per recovery",
            0.0, ordering)

    def root_consistency() -> float:
        cases = [(ChannelKind.PERFECT, EnvironmentKind.DISSIPATIVE, 0.0)]
        if not quick:
            cases += [(ChannelKind.DISSIPATIVE, EnvironmentKind.NOISY, 2.0), (ChannelKind.DEPHASING, EnvironmentKind.DEPHASING, 2.0)]
        worst = -math.inf
        for alpha, beta, t0 in cases:
            w = critical_omega(alpha, beta, 0.1, t0).omega_c
            below = max_fidelity(alpha, beta, 0.1, w - 1e-3, t0).f_max
            above = max_fidelity(alpha, beta, 0.1, w + 1e-3, t0).f_max
            # positive margin when the root is straddled
            worst = max(worst, below - CLASSICAL_LIMIT, CLASSICAL_LIMIT - above)
        return worst

    s.check("omega_c_straddles", "analysis", "F_max(ω_c ± 1e-3) straddles 2/3", 0.0, root_consistency)

    def maximizer() -> float:
        f = fidelity_function("perfect", "di", 0.1, 1.0)
        res = critical_time(f, 1.0, 0.1)
        t = np.random.default_rng(5).uniform(*res.window, 10_000)
        return float(np.max(f(t)) - res.f_max)

    s.check("t_c_is_maximum", "analysis", "F(t_c) >= F(t) on 10^4 random t", 1e-12, maximizer)

    def two_path_tc() -> float:
        closed = critical_time(fidelity_function("perfect", "di", 0.1, 5.0), 5.0, 0.1)
        numeric = critical_time(
            fidelity_function("perfect", "di", 0.1, 5.0, method="numeric", gamma_factor=gamma_factor), 5.0, 0.1)
        return max(abs(closed.t_c - numeric.t_c) / 10, abs(closed.f_max - numeric.f_max))

    s.check("t_c_two_path", "analysis", "t_c and F_max agree between closed and numeric evaluators", 1e-6, two_path_tc)

    def determinism() -> float:
        plan = SweepSpec(axis="omega", values=[0.3, 1.0, 2.5, 6.0], alpha="di", beta="no", gamma=0.1, t0=1.0)
        serial = sweep(plan, threads=1)
        threaded = sweep(plan, threads=max(2, threads or settings.THREADS))
        return float(serial != threaded)

    s.check("serial_threaded_identical", "analysis", "sweeps give bit-identical rows serially and on a thread pool",
            0.0, determinism)

    if not quick:
        def scaling() -> float:
            a = critical_t0("de", 0.1).t0_c
            b = critical_t0("de", 0.2).t0_c
            if a is None or b is None:
                return 0.0 if a is b else math.inf
            return abs(b - a / 2) / (a / 2)

        s.check("t0_c_scaling", "analysis", "γ·t0_c is invariant under a change of γ", 1e-3, scaling)

    def fit_roundtrip() -> float:
        x = np.linspace(0.15, 7.85, 40)
        y = 0.1 * np.exp(0.12 * x) + 0.003 * np.exp(0.47 * x)
        return fit_double_exponential(x, y).rms_residual

    s.check("fit_roundtrip", "analysis", "double-exponential fit recovers exact model data", 1e-6, fit_roundtrip)


def printed_form_note(gamma: float = 0.1, omega: float = 1.0, t: float = math.pi, t0: float = 2.0) -> str:
    """Noisy recovery through the dissipative channel is evaluated with 7/12 + e^{-2γt}/12 in place of 2/3."""
    printed = float(f_channel("di", "no", gamma, omega, t, t0, as_printed=True))
    used = float(f_channel("di", "no", gamma, omega, t, t0))
    return (
        "F^(no)[di] uses leading term 7/12 + e^{-2γt}/12 instead of the printed 2/3 so that it reduces to "
        f"the perfect channel at t0 = 0; at gamma={gamma:g}, omega={omega:g}, t={t:.6g}, t0={t0:g} "
        f"printed={printed:.9g}, used={used:.9g}, difference={printed - used:.3e}"
    )


def run_verification(
    quick: bool = False,
    inject_fault: bool = False,
    threads: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> VerificationSummary:
    """Run every check; `inject_fault` doubles γ in the numerical path only."""
    suite = _Suite(tol or settings.TOL)
    gamma_factor = 2.0 if inject_fault else 1.0

    _qmat_checks(suite)
    _channel_state_checks(suite, quick)
    _lindblad_checks(suite, quick)
    _environment_checks(suite, quick, gamma_factor)
    _teleport_checks(suite, quick, gamma_factor, threads)
    _closedform_checks(suite)
    _analysis_checks(suite, quick, gamma_factor, threads)

    traceability: Dict[str, List[str]] = {}
    for r in suite.results:
        traceability.setdefault(r.module, []).append(r.invariant)
    failed = [r for r in suite.results if not r.passed]
    return VerificationSummary(
        passed=not failed,
        quick=quick,
        inject_fault=inject_fault,
        n_checks=len(suite.results),
        n_failed=len(failed),
        checks=suite.results,
        traceability=traceability,
        notes=[printed_form_note()],
    )
