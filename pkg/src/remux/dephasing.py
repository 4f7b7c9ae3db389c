"""Measurement-induced dephasing from an injected readout pulse.

The qubit-conditioned resonator fields alpha_g and alpha_e dephase the
qubit at the rate Gamma_d(t) = 2 chi Im[alpha_g conj(alpha_e)] and shift its
phase at 2 chi Re[alpha_g conj(alpha_e)]. In an echo the pulse sits in the
first half; the pi pulse swaps which branch evolves with which dispersive
shift, so residual photons keep dephasing after it.

The contrast model fitted to the echo is c(xi) = c0 exp(-Gamma tau_p xi^2).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import ConfigError, FitError, FitFailureError, InsufficientDataError
from .readout import ReadoutPulse, rk4_linear


def _step(res, detuning, chi, dt=None):
    limit = min(1.0 / (20 * res.kappa), 1e-9, 0.1 / (abs(detuning) + abs(chi) + 1e-30))
    return limit if dt is None else min(dt, limit)


def branch_fields(res, chi, pulse, detuning, t_start, t_end, swap_at=None, dt=None):
    """Fields of the two qubit branches under a delayed readout pulse.

    Branch A starts with the qubit in g, branch B in e. The pulse starts at
    ``t_start``; at ``swap_at`` the qubit states are exchanged (echo pi pulse).
    Returns ``(t, alpha_A, alpha_B, in_g)`` where ``in_g`` is True while
    branch A holds the ground state.
    """
    h = _step(res, detuning, chi, dt)
    n = max(int(np.ceil(t_end / h - 1e-9)), 2)
    h = t_end / n
    t = np.arange(n + 1) * h
    g = np.sqrt(res.kappa_e)

    def src(x):
        return -1j * g * pulse.envelope(x - t_start)

    u0, uh, u1 = src(t[:-1]), src(t[:-1] + h / 2), src(t[1:])
    cut = n if swap_at is None else int(np.clip(np.rint(swap_at / h), 0, n))
    out = []
    for first in (+1.0, -1.0):
        a = np.empty(n + 1, dtype=complex)
        lam1 = 1j * (detuning + first * chi) - res.kappa / 2
        a[: cut + 1] = rk4_linear(lam1, u0[:cut], uh[:cut], u1[:cut], h)
        if cut < n:
            lam2 = 1j * (detuning - first * chi) - res.kappa / 2
            a[cut:] = rk4_linear(lam2, u0[cut:], uh[cut:], u1[cut:], h, a0=a[cut])
        out.append(a)
    in_g = np.arange(n + 1) <= cut
    return t, out[0], out[1], in_g


def dephasing_rate(chi, alpha_g, alpha_e):
    """Instantaneous rate 2 chi Im[alpha_g conj(alpha_e)] (1/s)."""
    return 2 * chi * np.imag(alpha_g * np.conj(alpha_e))


@dataclass(frozen=True)
class DephasingRate:
    t: np.ndarray
    gamma_t: np.ndarray
    gamma: float
    exponent: float
    phase: float


def photon_dephasing_rate(res, chi, pulse, xi=None, detuning=None, ringdown=None, dt=None):
    """Dephasing of a qubit with shift ``chi`` on resonator ``res`` under ``pulse``.

    ``detuning`` is omega_drive - omega_r (default from the pulse carrier).
    The integral runs through the ringdown (default 12 / kappa after the
    pulse); the pulse-averaged rate is that integral over tau_p.
    """
    if xi is not None:
        pulse = pulse.scaled(xi)
    if detuning is None:
        detuning = 2 * np.pi * pulse.carrier - res.omega_r
    ringdown = 12.0 / res.kappa if ringdown is None else ringdown
    t, a, b, _ = branch_fields(res, chi, pulse, detuning, 0.0, pulse.duration + ringdown, dt=dt)
    rate = dephasing_rate(chi, a, b)
    exponent = float(np.trapezoid(rate, t))
    phase = float(np.trapezoid(2 * chi * np.real(a * np.conj(b)), t))
    return DephasingRate(t, rate, exponent / pulse.duration, exponent, phase)


def steady_state_rate(res, chi, eps, detuning=0.0):
    """Closed-form steady-state rate for a constant drive.

    With Lorentzian branch responses L(d) = sqrt(kappa_e) eps / (j d - kappa/2)
    for d = detuning +- chi, Gamma = 2 chi Im[L_g conj(L_e)]; on resonance it
    reduces to 2 kappa chi^2 n / (chi^2 + kappa^2 / 4).
    """
    k = res.kappa / 2
    ag = 1j * np.sqrt(res.kappa_e) * eps / (1j * (detuning + chi) - k)
    ae = 1j * np.sqrt(res.kappa_e) * eps / (1j * (detuning - chi) - k)
    return float(dephasing_rate(chi, ag, ae))


# Echo experiment -------------------------------------------------------------

@dataclass(frozen=True)
class EchoExperiment:
    """Echo with a scaled readout pulse in its first half.

    ``resonator`` carries the qubit's dispersive shift ``chi``; the pulse
    may be detuned from it (cross pairs). ``extra`` lists further
    ``(resonator, chi, detuning)`` channels, such as a stray shift on the
    driven resonator; their exponents add. ``interval`` is the fixed time
    between the two pi/2 pulses.
    """

    resonator: object
    chi: float
    pulse: ReadoutPulse
    T2_echo: float
    xi: tuple = tuple(np.linspace(0.0, 1.0, 12))
    phases: int = 16
    interval: float = 4e-6
    detuning: float | None = None
    noise: float = 0.0
    seed: int | None = None
    extra: tuple = ()

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if not np.any(xi == 0):
            raise ConfigError("the xi grid must include 0")
        if np.any(xi < 0):
            raise ConfigError("xi values must be >= 0")
        if self.phases < 3:
            raise ConfigError("need at least 3 phase points to cover a period")
        if not self.interval >= 2 * self.pulse.duration:
            raise ConfigError("echo interval must hold the pulse in its first half")


@dataclass
class EchoResult:
    xi: np.ndarray
    contrast: np.ndarray
    r_squared: np.ndarray
    poor_fit: np.ndarray
    phase_shift: np.ndarray


def _sinusoid_amplitude(phi, p):
    """Least-squares fit p = a + b cos phi + d sin phi; returns (contrast, R^2)."""
    A = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    coef, *_ = np.linalg.lstsq(A, p, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((p - fit) ** 2))
    ss_tot = float(np.sum((p - p.mean()) ** 2))
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return 2 * float(np.hypot(coef[1], coef[2])), r2, float(np.arctan2(coef[2], coef[1]))


def echo_exponent(exp, xi):
    """Accumulated dephasing exponent and phase of one echo at scale ``xi``."""
    pulse = exp.pulse.scaled(xi)
    det = 2 * np.pi * pulse.carrier - exp.resonator.omega_r if exp.detuning is None else exp.detuning
    half = exp.interval / 2
    start = (half - pulse.duration) / 2
    exponent = phase = 0.0
    for res, chi, detuning in ((exp.resonator, exp.chi, det), *exp.extra):
        t, a, b, in_g = branch_fields(res, chi, pulse, detuning, start, exp.interval, swap_at=half)
        ag = np.where(in_g, a, b)
        ae = np.where(in_g, b, a)
        exponent += float(np.trapezoid(dephasing_rate(chi, ag, ae), t))
        phase += float(np.trapezoid(2 * chi * np.real(ag * np.conj(ae)), t))
    return exponent, phase


def simulate_echo_contrast(exp):
    """Contrast of the final-pulse phase oscillation for every xi.

    The excited population is P(phi) = [1 - c cos(phi + theta)] / 2 with
    c = exp(-interval / T2E) exp(-exponent); optional Gaussian noise of std
    ``noise`` is added before the sinusoid fit.
    """
    xi = np.asarray(exp.xi, dtype=float)
    phi = np.linspace(0, 2 * np.pi, exp.phases, endpoint=False)
    rng = np.random.default_rng(exp.seed)
    c0 = np.exp(-exp.interval / exp.T2_echo)
    contrast, r2, shift = [], [], []
    for x in xi:
        k, theta = echo_exponent(exp, x) if x > 0 else (0.0, 0.0)
        p = 0.5 * (1 - c0 * np.exp(-k) * np.cos(phi + theta))
        if exp.noise > 0:
            p = p + exp.noise * rng.standard_normal(len(phi))
        c, r, ph = _sinusoid_amplitude(phi, p)
        contrast.append(c)
        r2.append(r)
        shift.append(ph)
    r2 = np.array(r2)
    return EchoResult(xi, np.array(contrast), r2, r2 < 0.9, np.array(shift))


# Fitting -----------------------------------------------------------------------

@dataclass(frozen=True)
class DephasingFit:
    c0: float
    gamma: float
    covariance: np.ndarray
    tau_p: float

    @property
    def errors(self):
        return tuple(float(np.sqrt(max(v, 0.0))) for v in np.diag(self.covariance))

    def model(self, xi):
        return contrast_model(xi, self.c0, self.gamma, self.tau_p)


def contrast_model(xi, c0, gamma, tau_p):
    return c0 * np.exp(-gamma * tau_p * np.asarray(xi, dtype=float) ** 2)


def fit_dephasing(xi, contrast, tau_p, sigma=None):
    """Levenberg-Marquardt fit of c(xi) = c0 exp(-Gamma tau_p xi^2).

    ``sigma`` are optional per-point uncertainties. The rate is fitted as the
    dimensionless product Gamma tau_p with an analytic Jacobian; a negative
    optimum is clipped to 0. Returns ``DephasingFit`` with the covariance of
    (c0, Gamma).
    """
    xi = np.asarray(xi, dtype=float)
    c = np.asarray(contrast, dtype=float)
    if xi.shape != c.shape:
        raise ConfigError("xi and contrast must have the same length")
    if len(np.unique(xi)) < 4 or not np.any(xi == 0):
        raise InsufficientDataError("need at least 4 distinct xi values including 0")
    if not tau_p > 0:
        raise ConfigError("tau_p must be positive")
    w = np.ones_like(c) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    x2 = xi ** 2
    trace = []

    def resid(p):
        c0, g = p
        r = w * (c0 * np.exp(-g * x2) - c)
        trace.append((float(c0), float(g), float(np.sum(r ** 2))))
        return r

    def jac(p):
        c0, g = p
        e = np.exp(-g * x2)
        return np.column_stack([w * e, -w * c0 * x2 * e])

    # start from the log-linear regression where the data allow it
    pos = c > 0
    if pos.sum() >= 2 and len(np.unique(x2[pos])) >= 2:
        slope, icpt = np.polyfit(x2[pos], np.log(c[pos]), 1)
        p0 = [float(np.exp(icpt)), float(max(-slope, 0.0))]
    else:
        p0 = [float(c.max()), 1.0]
    try:
        res = optimize.least_squares(resid, p0, jac=jac, method="lm", xtol=1e-12, ftol=1e-12, gtol=1e-12)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitFailureError(f"dephasing fit failed: {exc}", trace) from None
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitFailureError(f"dephasing fit did not converge: {res.message}", trace)
    c0, g = res.x
    g = max(g, 0.0)
    J = jac([c0, g])
    dof = max(len(c) - 2, 1)
    s2 = float(np.sum(res.fun ** 2)) / dof if sigma is None else 1.0
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    scale = np.diag([1.0, 1.0 / tau_p])
    return DephasingFit(float(c0), float(g / tau_p), scale @ cov @ scale, float(tau_p))


# Crosstalk map -------------------------------------------------------------------

@dataclass
class CrosstalkMap:
    """Gamma[i, j]: dephasing of qubit i while resonator j is read out (1/s)."""

    gamma: np.ndarray
    errors: np.ndarray
    predicted: np.ndarray
    failures: dict = field(default_factory=dict)

    def to_csv(self, path):
        n = self.gamma.shape[0]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("qubit," + ",".join(f"R{j + 1}" for j in range(n)) + "\n")
            for i in range(n):
                fh.write(f"Q{i + 1}," + ",".join(f"{v:.10g}" for v in self.gamma[i]) + "\n")


def pair_rate(i, j, qubits, resonators, pulses, stray_chi=None):
    """Pulse-averaged Gamma of qubit i when resonator j's pulse is played.

    Two channels add: the pulse of R_j detuned onto qubit i's own resonator
    (spectral overlap), and a stray dispersive shift of qubit i on R_j.
    """
    pulse = pulses[j]
    total = photon_dephasing_rate(resonators[i], resonators[i].chi, pulse).gamma
    if i != j and stray_chi is not None and stray_chi[i][j]:
        total += photon_dephasing_rate(resonators[j], stray_chi[i][j], pulse).gamma
    return total


def crosstalk_map(qubits, resonators, pulses, stray_chi=None, xi=tuple(np.linspace(0, 1, 12)), interval=4e-6,
                  noise=0.0, seed=None, threads=1):
    """Echo simulation plus fit for every (qubit, driven resonator) pair.

    Failed fits are recorded in ``failures`` and leave NaN in the map.
    """
    n = len(qubits)
    if n < 1:
        raise ConfigError("device needs at least one qubit")

    def cell(ij):
        i, j = ij
        sub = None if seed is None else int(np.random.SeedSequence(seed, spawn_key=(i, j)).generate_state(1)[0])
        exp = pair_experiment(i, j, qubits, resonators, pulses, stray_chi, xi, interval, noise, sub)
        try:
            echo = simulate_echo_contrast(exp)
            return ij, fit_dephasing(echo.xi, echo.contrast, pulses[j].duration), None
        except FitError as exc:
            return ij, None, exc

    pairs = [(i, j) for i in range(n) for j in range(n)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(cell, pairs))
    else:
        results = [cell(p) for p in pairs]
    gamma = np.full((n, n), np.nan)
    err = np.full((n, n), np.nan)
    failures = {}
    for (i, j), fit, exc in results:
        if fit is None:
            failures[(i, j)] = str(exc)
        else:
            gamma[i, j] = fit.gamma
            err[i, j] = fit.errors[1]
    predicted = np.array([[pair_rate(i, j, qubits, resonators, pulses, stray_chi) for j in range(n)]
                          for i in range(n)])
    return CrosstalkMap(gamma, err, predicted, failures)


def pair_experiment(i, j, qubits, resonators, pulses, stray_chi=None, xi=tuple(np.linspace(0, 1, 12)),
                    interval=4e-6, noise=0.0, seed=None):
    """Echo experiment for qubit i while resonator j's pulse is played."""
    res = resonators[i]
    extra = ()
    if i != j and stray_chi is not None and stray_chi[i][j]:
        rj = resonators[j]
        extra = ((rj, float(stray_chi[i][j]), 2 * np.pi * pulses[j].carrier - rj.omega_r),)
    return EchoExperiment(res, res.chi, pulses[j], qubits[i].T2_echo, xi=tuple(xi), interval=interval,
                          detuning=2 * np.pi * pulses[j].carrier - res.omega_r, noise=noise, seed=seed,
                          extra=extra)
