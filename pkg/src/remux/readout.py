"""Monte Carlo simulation of multiplexed single-shot dispersive readout.

Each resonator obeys the linear input-output equation

    d alpha / dt = [j (Delta -+ chi) - kappa / 2] alpha - j sqrt(kappa_e) eps(t)

(upper sign for the excited qubit) integrated with fixed-step RK4. The
integrated signal of one shot is the boxcar integral of sqrt(kappa_e) alpha
over the flat top of the pulse plus complex Gaussian noise.

A T1 jump at t_j switches the dynamics from e to g with alpha continuous.
Because the equation is linear the post-jump trajectory is known exactly:
alpha(t) = alpha_g(t) + (alpha_e(t_j) - alpha_g(t_j)) exp(lambda_g (t - t_j)),
so shots are generated in vectorised form from two precomputed trajectories.

Random numbers come from ``SeedSequence(seed).spawn``-style keys
``(preparation code, qubit, chunk)`` with fixed chunks of ``CHUNK`` shots, so
streams do not depend on the number of worker threads.
"""

from __future__ import annotations

import logging
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from ._validation import check_positive
from .exceptions import ConfigError, IntegratorFaultError

logger = logging.getLogger(__name__)

CHUNK = 8192
GROUND, EXCITED = 0, 1


@dataclass(frozen=True)
class QubitParams:
    omega_q: float
    alpha: float
    T1: float
    T2_star: float
    T2_echo: float
    P_th: float = 0.0

    def __post_init__(self):
        check_positive("omega_q", self.omega_q)
        check_positive("T1", self.T1)
        check_positive("T2_star", self.T2_star)
        check_positive("T2_echo", self.T2_echo)
        if not 0 <= self.P_th < 0.5:
            raise ConfigError(f"P_th must lie in [0, 0.5), got {self.P_th}")
        if self.T2_star > 2 * self.T1:
            warnings.warn(f"T2* = {self.T2_star:g} s exceeds 2 T1 = {2 * self.T1:g} s", stacklevel=2)


@dataclass(frozen=True)
class ResonatorParams:
    omega_r: float
    kappa: float
    kappa_e: float
    chi: float

    def __post_init__(self):
        check_positive("omega_r", self.omega_r)
        check_positive("kappa", self.kappa)
        check_positive("kappa_e", self.kappa_e)
        if self.kappa_e > self.kappa:
            raise ConfigError(f"kappa_e ({self.kappa_e:g}) exceeds kappa ({self.kappa:g})")
        if self.chi == 0 or not np.isfinite(self.chi):
            raise ConfigError("chi must be a finite non-zero rate")

    def drive_for_photons(self, n, detuning=None):
        """Drive rate giving ``n`` steady photons at an effective detuning.

        The default detuning is chi, i.e. a drive at the bare resonator
        frequency with the qubit in either state.
        """
        d = self.chi if detuning is None else detuning
        return np.sqrt(n * (self.kappa ** 2 + 4 * d ** 2) / (4 * self.kappa_e))

    def steady_photons(self, eps, detuning):
        """Closed-form |alpha|^2 for constant drive at the given effective detuning."""
        return 4 * self.kappa_e * abs(eps) ** 2 / (self.kappa ** 2 + 4 * detuning ** 2)


@dataclass(frozen=True)
class ReadoutPulse:
    """Flat-top pulse with Gaussian edges.

    ``edge`` is the length of each Gaussian ramp; its standard deviation is
    edge / 3, so the ramp starts at exp(-4.5) of full amplitude. ``amplitude``
    is the drive rate eps at xi = 1 in sqrt(photons / s).
    """

    carrier: float
    amplitude: float
    xi: float = 1.0
    duration: float = 1e-6
    edge: float = 15e-9

    def __post_init__(self):
        check_positive("carrier", self.carrier)
        check_positive("amplitude", self.amplitude, allow_zero=True)
        check_positive("xi", self.xi, allow_zero=True)
        check_positive("edge", self.edge)
        if not self.duration > 2 * self.edge:
            raise ConfigError("pulse duration must exceed twice the edge length")

    @property
    def window(self):
        """Flat-top interval used as the boxcar integration window."""
        return self.edge, self.duration - self.edge

    def scaled(self, xi):
        return replace(self, xi=float(xi))

    def shape(self, t):
        t = np.asarray(t, dtype=float)
        sigma = self.edge / 3
        a, b = self.window
        out = np.where(t < a, np.exp(-0.5 * ((t - a) / sigma) ** 2), 1.0)
        out = np.where(t > b, np.exp(-0.5 * ((t - b) / sigma) ** 2), out)
        return np.where((t < 0) | (t > self.duration), 0.0, out)

    def envelope(self, t):
        return self.xi * self.amplitude * self.shape(t)


@dataclass(frozen=True)
class NoiseModel:
    sigma_s: float
    seed: int | None = None

    def __post_init__(self):
        check_positive("sigma_s", self.sigma_s)


def _time_step(res, detuning, dt=None):
    limit = min(1.0 / (20 * res.kappa), 1e-9)
    if detuning:
        limit = min(limit, 0.1 / abs(detuning))
    if dt is None:
        return limit
    if dt > limit * (1 + 1e-12):
        raise ConfigError(f"time step {dt:g} s exceeds the stability limit {limit:g} s")
    return dt


def rk4_linear(lam, s0, s_half, s1, h, a0=0.0):
    """Classical RK4 for alpha' = lam alpha + u(t) with constant ``lam``.

    ``s0``, ``s_half`` and ``s1`` are u at the start, midpoint and end of each
    step. For a linear equation the four RK4 stages collapse to
    alpha_{k+1} = R alpha_k + v_k with R the degree-4 Taylor polynomial of
    exp(h lam), so the recurrence runs as a first-order IIR filter.
    """
    z = h * lam
    R = 1 + z + z * z / 2 + z ** 3 / 6 + z ** 4 / 24
    k2 = z / 2 * s0 + s_half
    k3 = z / 2 * k2 + s_half
    k4 = z * k3 + s1
    v = h / 6 * (s0 + 2 * k2 + 2 * k3 + k4)
    out = np.empty(len(v) + 1, dtype=complex)
    out[0] = a0
    y, _ = lfilter([1.0], [1.0, -R], v, zi=np.array([R * a0], dtype=complex))
    out[1:] = y
    return out


def cavity_response(pulse, res, qubit_state, t_end=None, dt=None, drive_detuning=None, extra_drives=()):
    """Integrate the resonator field for a fixed qubit state.

    Returns ``(t, alpha)`` on a uniform grid from 0 to ``t_end`` (default the
    pulse duration). ``drive_detuning`` is omega_drive - omega_r and defaults
    to the pulse carrier minus the resonator frequency. ``extra_drives`` is a
    sequence of ``(pulse, detuning)`` pairs driving the same resonator, used
    for spectral-overlap crosstalk.
    """
    sign = {GROUND: 1.0, EXCITED: -1.0, "g": 1.0, "e": -1.0}[qubit_state]
    if drive_detuning is None:
        drive_detuning = 2 * np.pi * pulse.carrier - res.omega_r
    drives = [(pulse, drive_detuning)] + list(extra_drives)
    # work in the frame of the first drive; the others rotate relative to it
    delta = drive_detuning + sign * res.chi
    fastest = abs(delta) + max(abs(d - drive_detuning) for _, d in drives)
    t_end = pulse.duration if t_end is None else float(t_end)
    h = _time_step(res, fastest, dt)
    n = int(np.ceil(t_end / h - 1e-9))
    h = t_end / n
    lam = 1j * delta - res.kappa / 2
    g = np.sqrt(res.kappa_e)

    def source(t):
        total = np.zeros_like(t, dtype=complex)
        for p, d in drives:
            total = total + p.envelope(t) * np.exp(-1j * (d - drive_detuning) * t)
        return -1j * g * total

    t = np.arange(n + 1) * h
    alpha = rk4_linear(lam, source(t[:-1]), source(t[:-1] + h / 2), source(t[1:]), h)
    peak_drive = sum(p.xi * p.amplitude for p, _ in drives)
    bound = 2 * g * peak_drive / res.kappa
    if not np.all(np.isfinite(alpha)) or np.max(np.abs(alpha)) > 1.01 * bound + 1e-300:
        raise IntegratorFaultError(f"field exceeds the passive bound {bound:.3g} with dt = {h:.3g} s")
    return t, alpha


def integrate_shot(traj_g, traj_e, qubit_state, noise, rng=None, res=None, pulse=None):
    """Boxcar-integrated signal of one shot without jumps.

    ``traj_g``/``traj_e`` are ``(t, alpha)`` pairs on a common grid.
    """
    t, a_g = traj_g
    t_e, a_e = traj_e
    if len(t) != len(t_e) or not np.allclose(t, t_e):
        raise ConfigError("trajectories must share a time grid")
    alpha = a_e if qubit_state in (EXCITED, "e") else a_g
    kappa_e = 1.0 if res is None else res.kappa_e
    lo, hi = (t[0], t[-1]) if pulse is None else pulse.window
    s = np.sqrt(kappa_e) * _window_integral(t, alpha, lo, hi)
    rng = rng if rng is not None else np.random.default_rng(noise.seed)
    return s + noise.sigma_s * (rng.standard_normal() + 1j * rng.standard_normal())


def _window_integral(t, y, lo, hi):
    c = _cumtrapz(t, y)
    return np.interp(hi, t, c.real) + 1j * np.interp(hi, t, c.imag) \
        - np.interp(lo, t, c.real) - 1j * np.interp(lo, t, c.imag)


def _cumtrapz(t, y):
    out = np.zeros(len(t), dtype=complex)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _interp_c(x, t, y):
    return np.interp(x, t, y.real) + 1j * np.interp(x, t, y.imag)


class ReadoutModel:
    """Noiseless signal map of one qubit-resonator pair.

    Precomputes the g and e trajectories and gives the integrated signal for
    any set of e -> g jump times (``inf`` means no jump).
    """

    def __init__(self, res, pulse, crosstalk=()):
        self.res = res
        self.pulse = pulse
        self.t, self.alpha_g = cavity_response(pulse, res, GROUND, extra_drives=crosstalk)
        _, self.alpha_e = cavity_response(pulse, res, EXCITED, extra_drives=crosstalk, dt=self.t[1])
        self.lam_g = 1j * (2 * np.pi * pulse.carrier - res.omega_r + res.chi) - res.kappa / 2
        root = np.sqrt(res.kappa_e)
        self._cg = root * _cumtrapz(self.t, self.alpha_g)
        self._ce = root * _cumtrapz(self.t, self.alpha_e)
        lo, hi = pulse.window
        self.lo, self.hi = lo, hi
        self.s_g = self._c(self._cg, hi) - self._c(self._cg, lo)
        self.s_e = self._c(self._ce, hi) - self._c(self._ce, lo)

    def _c(self, c, x):
        return _interp_c(x, self.t, c)

    def signal(self, t_jump):
        """Noiseless integrated signal for e -> g jumps at ``t_jump``.

        ``inf`` keeps the qubit excited; 0 is a ground-state shot since both
        fields start from vacuum.
        """
        tj = np.asarray(t_jump, dtype=float)
        lo, hi = self.lo, self.hi
        cut = np.clip(tj, lo, hi)
        s = (self._c(self._ce, cut) - self._c(self._ce, lo)) + (self._c(self._cg, hi) - self._c(self._cg, cut))
        inside = tj < hi
        tji = np.where(inside, tj, hi)
        diff = np.sqrt(self.res.kappa_e) * (_interp_c(tji, self.t, self.alpha_e) - _interp_c(tji, self.t, self.alpha_g))
        a = np.maximum(tji, lo)
        tail = (np.exp(self.lam_g * (hi - tji)) - np.exp(self.lam_g * (a - tji))) / self.lam_g
        return np.where(inside, s + diff * tail, s)

    @property
    def axis(self):
        """Ideal (noiseless) projection: origin at the midpoint, unit vector g -> e."""
        d = self.s_e - self.s_g
        return 0.5 * (self.s_g + self.s_e), d / abs(d)

    def project(self, s):
        mid, u = self.axis
        return np.real((np.asarray(s) - mid) * np.conj(u))


@dataclass(frozen=True)
class ReadoutSchedule:
    """Heralding and timing of one measurement cycle."""

    herald: bool = True
    delay: float = 1e-6
    re_excitation_rate: float = 0.0

    def __post_init__(self):
        check_positive("delay", self.delay, allow_zero=True)
        check_positive("re_excitation_rate", self.re_excitation_rate, allow_zero=True)


@dataclass
class ShotStream:
    """Shots of one qubit: integrated signal, herald outcome, true state.

    ``excited_before`` is the true state at the start of the main readout,
    before the preparation pulse; its mean over heralded shots is P_post.
    """

    qubit: int
    prepared: np.ndarray
    s: np.ndarray
    herald: np.ndarray
    thermal: np.ndarray
    excited_before: np.ndarray

    def __len__(self):
        return len(self.s)

    @property
    def kept(self):
        return self.herald

    @property
    def p_th(self):
        return float(np.mean(self.thermal))

    @property
    def p_post(self):
        return float(np.mean(self.excited_before[self.herald])) if self.herald.any() else float("nan")

    def select(self, mask):
        return ShotStream(self.qubit, self.prepared[mask], self.s[mask], self.herald[mask],
                          self.thermal[mask], self.excited_before[mask])


def _simulate_chunk(model, qubit, schedule, prepared, n, seed_seq, sigma):
    rng = np.random.default_rng(seed_seq)
    tau = model.pulse.duration
    T1 = qubit.T1
    # fixed draw order keeps streams reproducible across versions of this loop
    thermal = rng.random(n) < qubit.P_th
    tj_herald = np.where(thermal, rng.exponential(T1, n), 0.0)
    noise_h = rng.standard_normal((n, 2))
    u_delay = rng.random(n)
    tj_main_raw = rng.exponential(T1, n)
    noise_m = rng.standard_normal((n, 2))

    if schedule.herald:
        s_h = model.signal(tj_herald) + sigma * (noise_h[:, 0] + 1j * noise_h[:, 1])
        passed = model.project(s_h) < 0
        # still excited after the herald pulse, then evolve through the delay
        excited = tj_herald > tau
        t_left = np.where(excited, tj_herald - tau, np.inf)
        decays = t_left < schedule.delay
        up = 1 - np.exp(-schedule.re_excitation_rate * schedule.delay)
        excited = np.where(excited, ~decays, u_delay < up)
    else:
        passed = np.ones(n, dtype=bool)
        excited = thermal.copy()
    before = excited.copy()
    if prepared:
        excited = ~excited
    tj_main = np.where(excited, tj_main_raw, 0.0)
    s = model.signal(tj_main) + sigma * (noise_m[:, 0] + 1j * noise_m[:, 1])
    return s, passed, thermal, before


def _seed_entropy(seed):
    return 0 if seed is None else int(seed)


def simulate_stream(qubit, res, pulse, prepared, shots, noise, schedule=ReadoutSchedule(), qubit_index=0,
                    prep_code=None, crosstalk=(), threads=1, model=None):
    """Shot stream for one qubit with preparation 0 (no pulse) or 1 (pi pulse).

    ``prep_code`` identifies the joint preparation in multiplexed runs and
    defaults to ``prepared``; it only enters the seed derivation.
    """
    if prepared not in (0, 1):
        raise ConfigError(f"prepared must be 0 or 1, got {prepared!r}")
    if shots < 1:
        raise ConfigError("shots must be positive")
    if model is None:
        model = ReadoutModel(res, pulse, crosstalk)
    code = prepared if prep_code is None else prep_code
    root = np.random.SeedSequence(_seed_entropy(noise.seed))
    chunks = [(c, min(CHUNK, shots - c * CHUNK)) for c in range(-(-shots // CHUNK))]

    def job(item):
        c, n = item
        seq = np.random.SeedSequence(root.entropy, spawn_key=(code, qubit_index, c))
        return _simulate_chunk(model, qubit, schedule, prepared, n, seq, noise.sigma_s)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    s, passed, thermal, before = (np.concatenate(x) for x in zip(*parts))
    return ShotStream(qubit_index, np.full(shots, prepared, dtype=np.int8), s, passed, thermal, before)


def simulate_shot(qubit, res, pulse, prepared, noise, schedule=ReadoutSchedule(herald=False), rng=None):
    """One shot as a dict record; slow path kept for clarity and tests."""
    model = ReadoutModel(res, pulse)
    seq = rng if rng is not None else np.random.SeedSequence(_seed_entropy(noise.seed))
    s, passed, _, _ = _simulate_chunk(model, qubit, schedule, prepared, 1, seq, noise.sigma_s)
    return {"s": complex(s[0]), "herald": bool(passed[0]), "prepared": int(prepared), "assigned": None}


def herald_and_delay(stream):
    """Post-selected stream and the residual excited fraction P_post."""
    kept = stream.select(stream.herald)
    return kept, stream.p_post


def crosstalk_drives(index, resonators, pulses):
    """Off-resonant drives seen by resonator ``index`` from the other pulses."""
    omega_r = resonators[index].omega_r
    return tuple((p, 2 * np.pi * p.carrier - omega_r) for j, p in enumerate(pulses) if j != index)


def multiplexed_run(qubits, resonators, pulses, noises, prepared, shots, schedules=None, crosstalk=False,
                    threads=1, models=None):
    """Simultaneous readout of all qubits for one joint preparation.

    ``prepared`` is a sequence of 0/1 with qubit 1 first. Streams are
    generated independently per qubit; ``crosstalk`` adds the other readout
    pulses as off-resonant drives of every resonator.
    """
    n = len(qubits)
    prepared = tuple(int(p) for p in prepared)
    if len(prepared) != n:
        raise ConfigError(f"preparation {prepared} does not match {n} qubits")
    code = int("".join(str(p) for p in prepared), 2)
    schedules = schedules or [ReadoutSchedule()] * n
    out = []
    for i in range(n):
        model = models[i] if models is not None else None
        extra = crosstalk_drives(i, resonators, pulses) if crosstalk and model is None else ()
        out.append(simulate_stream(qubits[i], resonators[i], pulses[i], prepared[i], shots, noises[i],
                                   schedules[i], qubit_index=i, prep_code=code, crosstalk=extra,
                                   threads=threads, model=model))
    return out


# Shot file formats --------------------------------------------------------

SHOT_MAGIC = b"RMXSHOT\0"
SHOT_VERSION = 1
SHOT_DTYPE = np.dtype([("shot_id", "<u8"), ("qubit", "<u2"), ("prepared", "u1"), ("herald", "u1"),
                       ("re_s", "<f8"), ("im_s", "<f8")])
_HEADER = struct.Struct("<8sHQ")


def streams_to_records(streams):
    parts = []
    for st in streams:
        rec = np.zeros(len(st), dtype=SHOT_DTYPE)
        rec["shot_id"] = np.arange(len(st))
        rec["qubit"] = st.qubit
        rec["prepared"] = st.prepared
        rec["herald"] = st.herald
        rec["re_s"] = st.s.real
        rec["im_s"] = st.s.imag
        parts.append(rec)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=SHOT_DTYPE)


def write_shots_csv(path, records):
    with open(path, "w") as fh:
        fh.write("shot_id,qubit,prepared,herald,re_s,im_s\n")
        for r in records:
            fh.write(f"{r['shot_id']},{r['qubit'] + 1},{r['prepared']},{'pass' if r['herald'] else 'fail'},"
                     f"{float(r['re_s'])!r},{float(r['im_s'])!r}\n")


def read_shots_csv(path):
    import csv

    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"shot_id", "qubit", "prepared", "herald", "re_s", "im_s"} - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"shot file {path} lacks columns {sorted(missing)}")
        for line, row in enumerate(reader, start=2):
            try:
                rows.append((int(row["shot_id"]), int(row["qubit"]) - 1, int(row["prepared"]),
                             row["herald"].strip() == "pass", float(row["re_s"]), float(row["im_s"])))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path} line {line}: {exc}") from None
    return np.array(rows, dtype=SHOT_DTYPE)


def write_shots_binary(path, records):
    """Little-endian records after a header: magic, uint16 version, uint64 count."""
    records = np.asarray(records, dtype=SHOT_DTYPE)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SHOT_MAGIC, SHOT_VERSION, len(records)))
        fh.write(records.tobytes())


def read_shots_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigError(f"{path}: truncated header")
        magic, version, count = _HEADER.unpack(head)
        if magic != SHOT_MAGIC:
            raise ConfigError(f"{path}: not a shot file")
        if version != SHOT_VERSION:
            raise ConfigError(f"{path}: unsupported shot format version {version}")
        data = fh.read()
    if len(data) != count * SHOT_DTYPE.itemsize:
        raise ConfigError(f"{path}: expected {count} records, found {len(data) // SHOT_DTYPE.itemsize}")
    return np.frombuffer(data, dtype=SHOT_DTYPE).copy()


# Noise calibration ----------------------------------------------------------

def _decay_assignment(model, T1, sigma, points=4001):
    """P(assigned e) for a qubit excited at the start of the main readout."""
    from scipy.special import ndtr

    hi = model.hi
    t = np.linspace(0.0, hi, points)
    x = model.project(model.signal(t))
    pdf = np.exp(-t / T1) / T1
    inside = np.trapezoid(pdf * ndtr(x / sigma), t)
    x_e = model.project(model.s_e)
    return inside + np.exp(-hi / T1) * ndtr(x_e / sigma)


@dataclass(frozen=True)
class NoiseCalibration:
    sigma_s: float
    re_excitation_rate: float
    p_post: float
    snr: float
    p_g0: float
    p_e_pi: float
    clipped: bool


def calibrate_noise(qubit, res, pulse, p_c, p_post, delay=1e-6, g_band=None, e_band=None):
    """Noise level and re-excitation rate reproducing a readout fidelity.

    With B = P(e | g) = Phi(-sep / 2 sigma), A = P(e | excited at start) from
    a jump-time quadrature and p = ``p_post`` the excited fraction entering
    the main readout,

        P(g|0) = 1 - [(1 - p) B + p A],   P(e|pi) = (1 - p) A + p B,

    and sigma is solved so that their mean equals ``p_c``. Optional bands
    ``(lo, hi)`` on the predicted P(g|0) and P(e|pi) clip the result into the
    feasible interval. The re-excitation rate accounts for p beyond herald
    leakage of thermal excitations.
    """
    from scipy.optimize import brentq
    from scipy.special import ndtr

    model = ReadoutModel(res, pulse)
    half = abs(model.s_e - model.s_g) / 2
    p = float(p_post)

    def predict(r):
        A = _decay_assignment(model, qubit.T1, half / r)
        B = ndtr(-r)
        return 1 - (1 - p) * B - p * A, (1 - p) * A + p * B

    def solve(fn, target, lo=0.5, hi=8.0):
        f_lo, f_hi = fn(lo) - target, fn(hi) - target
        if f_lo * f_hi > 0:
            return lo if f_lo > 0 else hi
        return brentq(lambda r: fn(r) - target, lo, hi, xtol=1e-12)

    r = solve(lambda r: 0.5 * sum(predict(r)), p_c)
    r_lo, r_hi = 0.0, np.inf
    # both predictions increase with r = sep / (2 sigma)
    if g_band is not None:
        r_lo = max(r_lo, solve(lambda r: predict(r)[0], g_band[0]))
        r_hi = min(r_hi, solve(lambda r: predict(r)[0], g_band[1]))
    if e_band is not None:
        r_lo = max(r_lo, solve(lambda r: predict(r)[1], e_band[0]))
        r_hi = min(r_hi, solve(lambda r: predict(r)[1], e_band[1]))
    clipped = not r_lo <= r <= r_hi
    if clipped and r_lo <= r_hi:
        r = float(np.clip(r, r_lo, r_hi))
    p_g0, p_e_pi = predict(r)
    sigma = half / r
    B = ndtr(-r)
    A = _decay_assignment(model, qubit.T1, sigma)
    pass_rate = (1 - qubit.P_th) * (1 - B) + qubit.P_th * (1 - A)
    leak = qubit.P_th * np.exp(-(pulse.duration + delay) / qubit.T1) * B / pass_rate
    u = max(p - leak, 0.0) / (1 - leak)
    rate = float(-np.log1p(-u) / delay) if delay > 0 else 0.0
    return NoiseCalibration(float(sigma), rate, p, float(r), float(p_g0), float(p_e_pi), clipped)
