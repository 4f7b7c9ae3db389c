"""Re-entrant cavity filter and coupling-network equivalent circuits.

The cavity is a shorted TEM line of length ``L`` loaded at its open end by
``C_shunt``. The common feed couples capacitively at ``r0`` from the short,
and one pin per readout resonator taps the open end. Each unit cell holds a
qubit island (junction removed, exposed as a high-impedance port), a
parallel-LC readout resonator and a capacitively coupled drive line.

Two cross-couplings on unit cell 1 form the interferometric notches:
``C_xq`` joins the qubit island to the cavity open end and ``C_x1`` joins
readout resonator 1 to the feed conductor. Both are signed effective
capacitances: a negative value is realised as the inductive branch with the
same susceptance magnitude at ``f_cross_ref``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import optimize

from .exceptions import ConfigError, InfeasibleNotchError, NoResonanceError
from .network import (
    FrequencySweep,
    NetlistBuilder,
    group_delay,
    input_admittance_at,
    peak,
    s_parameters,
)

logger = logging.getLogger(__name__)

C0 = 299_792_458.0
ETA0 = 376.730313668
JUNCTION_Z = 1e6
FEED_Z = 50.0
DRIVE_Z = 50.0


@dataclass(frozen=True)
class ReentrantCavityParams:
    L: float = 5.5e-3
    d: float = 2e-3
    W: float = 4e-3
    r0: float = 4.75e-3
    d_r: float = 0.35e-3
    C_shunt: float = 300e-15
    D: float = 3e-3
    pin_radius: float = 0.25e-3
    pin_count: int = 4
    velocity: float = C0

    def __post_init__(self):
        for name in ("L", "d", "W", "r0", "d_r", "C_shunt", "pin_radius", "velocity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"cavity {name} must be positive")
        if not self.D > self.d:
            raise ConfigError("enclosure dimension D must exceed the re-entrant section d")
        if self.pin_count < 1:
            raise ConfigError("cavity needs at least one pin")
        if not self.d_r < self.d:
            raise ConfigError("pin-resonator gap d_r must be smaller than d")
        if not self.r0 < self.L:
            raise ConfigError("feed position r0 must lie inside the cavity length")

    @property
    def impedance(self):
        """Line impedance of the re-entrant section.

        The section (thickness ``d``, width ``W``) sits centred in an enclosure
        of height ``D``; each broad face forms a parallel-plate line with gap
        (D - d)/2, and the two act in parallel: Z = eta0 (D - d) / (4 W).
        """
        return ETA0 * (self.D - self.d) / (4 * self.W)

    @property
    def quarter_wave_frequency(self):
        return self.velocity / (4 * self.L)


@dataclass(frozen=True)
class CouplingNetwork:
    """Lumped coupling values for every unit cell.

    Per-cell tuples are indexed by qubit. ``C_pin`` couples resonator k to the
    cavity, ``C_direct`` couples it straight to the feed in the unfiltered
    variant, ``C_drive`` is the drive-line coupling. ``C_in_2port`` is the
    input coupling of the mirrored two-port variant.
    """

    C_in: float
    C_in_2port: float
    C_pin: tuple[float, ...]
    C_direct: tuple[float, ...]
    C_drive: tuple[float, ...]
    C_qubit: tuple[float, ...]
    C_g: tuple[float, ...]
    C_r: tuple[float, ...]
    L_r: tuple[float, ...]
    C_x1: float = 0.0
    C_xq: float = 0.0
    f_cross_ref: float = 6.5e9

    def __post_init__(self):
        per_cell = ("C_pin", "C_direct", "C_drive", "C_qubit", "C_g", "C_r", "L_r")
        n = len(self.C_pin)
        if n < 1:
            raise ConfigError("coupling network needs at least one unit cell")
        for name in per_cell:
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if len(vals) != n:
                raise ConfigError(f"{name} has {len(vals)} entries, expected {n}")
            if any(not v > 0 for v in vals):
                raise ConfigError(f"{name} values must be positive")
        for name in ("C_in", "C_in_2port"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("C_x1", "C_xq"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.f_cross_ref > 0:
            raise ConfigError("f_cross_ref must be positive")

    @property
    def n_cells(self):
        return len(self.C_pin)

    def with_cell(self, k, **values):
        out = {}
        for name, v in values.items():
            vals = list(getattr(self, name))
            vals[k] = v
            out[name] = tuple(vals)
        return replace(self, **out)


class FilterConfiguration(str, Enum):
    UNFILTERED = "unfiltered"
    FILTERED_NO_INTERFERENCE = "filtered_no_interference"
    FILTERED_WITH_INTERFERENCE = "filtered_with_interference"


def resonance_frequency(impedance, length, velocity, c_shunt, tol=1.0):
    """Lowest resonance of a shorted line loaded by ``c_shunt`` at its open end.

    Solves tan(2 pi f L / v) = 1 / (2 pi f C Z) by bisection to ``tol`` Hz.
    """
    for name, v in (("impedance", impedance), ("length", length), ("velocity", velocity)):
        if not v > 0:
            raise ConfigError(f"{name} must be positive")
    if c_shunt < 0:
        raise ConfigError("c_shunt must be >= 0")
    f_qw = velocity / (4 * length)
    if c_shunt == 0:
        return f_qw

    def g(f):
        w = 2 * np.pi * f
        return w * c_shunt * impedance * np.sin(w * length / velocity) - np.cos(w * length / velocity)

    lo, hi = 0.0, f_qw
    if not (g(lo) < 0 < g(hi)):
        raise NoResonanceError(f"no resonance in (0, {2 * f_qw:.6g}) Hz")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _add_cavity(b, cavity, f_ref=10e9):
    z = cavity.impedance
    theta = lambda length: 2 * np.pi * f_ref * length / cavity.velocity  # noqa: E731
    b.add("tline", 0, "tap", z, theta(cavity.r0), f_ref, name="line_short")
    b.add("tline", "tap", "open", z, theta(cavity.L - cavity.r0), f_ref, name="line_open")
    b.add("capacitor", "open", 0, cavity.C_shunt, name="C_shunt")


def cavity_equivalent(cavity):
    """Bare cavity fragment with a high-impedance probe port at the open end."""
    b = NetlistBuilder()
    _add_cavity(b, cavity)
    b.port("open", JUNCTION_Z, name="open")
    return b.build()


def _add_cells(b, net, variant, drive_ports, feed="feed"):
    for k in range(net.n_cells):
        q, r, d = f"q{k + 1}", f"r{k + 1}", f"d{k + 1}"
        b.add("capacitor", q, 0, net.C_qubit[k], name=f"C_qubit{k + 1}")
        b.add("capacitor", q, r, net.C_g[k], name=f"C_g{k + 1}")
        b.add("capacitor", r, 0, net.C_r[k], name=f"C_r{k + 1}")
        b.add("inductor", r, 0, net.L_r[k], name=f"L_r{k + 1}")
        b.add("capacitor", q, d, net.C_drive[k], name=f"C_q{k + 1}")
        if not drive_ports:
            b.add("resistor", d, 0, DRIVE_Z, name=f"R_drive{k + 1}")
        if variant is FilterConfiguration.UNFILTERED:
            b.add("capacitor", r, feed, net.C_direct[k], name=f"C_direct{k + 1}")
        else:
            b.add("capacitor", r, "open", net.C_pin[k], name=f"C_{k + 1}")
    if variant is FilterConfiguration.FILTERED_WITH_INTERFERENCE:
        _add_cross(b, "q1", "open", net.C_xq, net.f_cross_ref, "C_xq")
        _add_cross(b, "r1", feed, net.C_x1, net.f_cross_ref, "C_x1")


def _add_cross(b, a, c, value, f_ref, name):
    if value > 0:
        b.add("capacitor", a, c, value, name=name)
    elif value < 0:
        b.add("inductor", a, c, cross_inductance(value, f_ref), name=name)


def cross_inductance(value, f_ref):
    """Inductance realising a negative effective capacitance at ``f_ref``."""
    w = 2 * np.pi * f_ref
    return 1.0 / (w * w * -value)


def build_configuration(variant, network, cavity):
    """Full device netlist for one filter configuration.

    Ports: 0 = feed, 1..N = junction ports, N+1..2N = drive lines.
    """
    variant = FilterConfiguration(variant)
    b = NetlistBuilder()
    b.node("feed")
    if variant is not FilterConfiguration.UNFILTERED:
        _add_cavity(b, cavity)
        b.add("capacitor", "feed", "tap", network.C_in, name="C_in")
    _add_cells(b, network, variant, drive_ports=True)
    b.port("feed", FEED_Z, name="feed")
    for k in range(network.n_cells):
        b.port(f"q{k + 1}", JUNCTION_Z, name=f"q{k + 1}")
    for k in range(network.n_cells):
        b.port(f"d{k + 1}", DRIVE_Z, name=f"d{k + 1}")
    return b.build()


def build_two_port(network, cavity, with_cells=True, variant=FilterConfiguration.FILTERED_WITH_INTERFERENCE):
    """Mirrored two-feed variant used to characterise the passband."""
    variant = FilterConfiguration(variant)
    b = NetlistBuilder()
    _add_cavity(b, cavity)
    b.add("capacitor", "feed", "tap", network.C_in_2port, name="C_in_a")
    b.add("capacitor", "feed_b", "tap", network.C_in_2port, name="C_in_b")
    if with_cells:
        _add_cells(b, network, variant, drive_ports=False)
    b.port("feed", FEED_Z, name="feed")
    b.port("feed_b", FEED_Z, name="feed_b")
    return b.build()


def build_filter_one_port(network, cavity):
    """Cavity plus feed only, for the external quality factor."""
    b = NetlistBuilder()
    _add_cavity(b, cavity)
    b.add("capacitor", "feed", "tap", network.C_in, name="C_in")
    b.port("feed", FEED_Z, name="feed")
    return b.build()


@dataclass(frozen=True)
class FilterMetrics:
    center: float
    bandwidth: float
    f_lo: float
    f_hi: float
    q_ext: float
    f_delay_peak: float


def passband(netlist, sweep=None):
    """Outermost -3 dB crossings of |S21| relative to its maximum."""
    sweep = sweep or FrequencySweep(4e9, 16e9, 2401)
    resp = s_parameters(netlist, sweep)
    f = resp.frequencies
    mag2 = np.abs(resp.s[:, 1, 0]) ** 2
    half = 0.5 * mag2.max()
    above = np.flatnonzero(mag2 >= half)
    i, j = above[0], above[-1]
    if i == 0 or j == len(f) - 1:
        raise NoResonanceError("passband edge falls outside the sweep")
    f_lo = np.interp(half, [mag2[i - 1], mag2[i]], [f[i - 1], f[i]])
    f_hi = np.interp(half, [mag2[j + 1], mag2[j]], [f[j + 1], f[j]])
    return f_lo, f_hi


def external_q(netlist, sweep=None):
    """Q_ext = omega0 tau_peak / 4 from the one-port reflection group delay."""
    sweep = sweep or FrequencySweep(6e9, 14e9, 1601)
    resp = s_parameters(netlist, sweep)
    tau = group_delay(resp, (0, 0))
    f0, tau0 = peak(resp.frequencies, tau)
    return 2 * np.pi * f0 * tau0 / 4, f0


def filter_metrics(network, cavity, with_cells=False):
    f_lo, f_hi = passband(build_two_port(network, cavity, with_cells=with_cells))
    q_ext, f_peak = external_q(build_filter_one_port(network, cavity))
    return FilterMetrics(0.5 * (f_lo + f_hi), f_hi - f_lo, f_lo, f_hi, q_ext, f_peak)


@dataclass(frozen=True)
class FilterTargets:
    center: float = 9.8e9
    bandwidth: float = 1.6e9
    q_ext: float = 9.0


def calibrate_filter(network, cavity, targets=FilterTargets(), max_iter=400):
    """Fit C_shunt, C_in and C_in_2port to the passband targets.

    Bounded Nelder-Mead in log-capacitance; deterministic from the given
    starting values.
    """

    def unpack(x):
        c_shunt, c_in, c_in2 = np.exp(x)
        return replace(network, C_in=c_in, C_in_2port=c_in2), replace(cavity, C_shunt=c_shunt)

    def cost(x):
        net, cav = unpack(x)
        try:
            m = filter_metrics(net, cav)
        except NoResonanceError:
            return 1e3
        return ((m.center - targets.center) / targets.center) ** 2 * 100 + \
            ((m.bandwidth - targets.bandwidth) / targets.bandwidth) ** 2 + \
            ((m.q_ext - targets.q_ext) / targets.q_ext) ** 2

    x0 = np.log([cavity.C_shunt, network.C_in, network.C_in_2port])
    bounds = [(np.log(1e-16), np.log(1e-12))] * 3
    res = optimize.minimize(cost, x0, method="Nelder-Mead", bounds=bounds,
                            options={"maxiter": max_iter, "xatol": 1e-6, "fatol": 1e-12})
    net, cav = unpack(res.x)
    logger.info("filter calibration: cost=%.3g after %d evaluations", res.fun, res.nfev)
    return net, cav, filter_metrics(net, cav)


def resonator_environment(netlist, k):
    """Admittance seen by resonator k's LC tank, as a function of omega.

    The tank's own C_r and L_r are removed and replaced by a probe port.
    """
    r = f"r{k + 1}"
    node = netlist.node_names[r]
    b_elements = [el for el in netlist.elements if el.name not in (f"C_r{k + 1}", f"L_r{k + 1}")]
    from .network import Netlist, Port

    ports = list(netlist.ports) + [Port(node, JUNCTION_Z, name=f"probe_{r}")]
    probe = Netlist(b_elements, ports, netlist.node_count, dict(netlist.node_names))
    return lambda omega: input_admittance_at(probe, len(ports) - 1, omega)


def tank_response(y_env, omega_r, c_r):
    """Loaded inductance and external linewidth for a tank at ``omega_r``.

    Returns ``(L_r, kappa_e)`` with kappa_e = Re Y / C_eff and C_eff taken
    from the slope of the total susceptance at resonance.
    """
    h = omega_r * 1e-6
    w = np.array([omega_r - h, omega_r, omega_r + h])
    y = y_env(w)
    b_env = y.imag
    L_r = 1.0 / (omega_r ** 2 * (c_r + b_env[1] / omega_r))
    db = (b_env[2] - b_env[0]) / (2 * h)
    c_eff = 0.5 * (2 * c_r + b_env[1] / omega_r + db)
    return L_r, y[1].real / c_eff


def calibrate_resonators(network, cavity, omega_r, kappa_e, variant=FilterConfiguration.FILTERED_WITH_INTERFERENCE,
                         rounds=6):
    """Set L_r and the coupling capacitor of every cell to hit omega_r, kappa_e.

    The coupling is C_pin for filtered variants and C_direct for the
    unfiltered one. Kappa follows the square of the coupling capacitance, so
    a few fixed-point rounds converge.
    """
    variant = FilterConfiguration(variant)
    coupling = "C_direct" if variant is FilterConfiguration.UNFILTERED else "C_pin"
    net = network
    for _ in range(rounds):
        for k in range(net.n_cells):
            env = resonator_environment(build_configuration(variant, net, cavity), k)
            L_r, kap = tank_response(env, omega_r[k], net.C_r[k])
            c = getattr(net, coupling)[k] * np.sqrt(kappa_e[k] / kap)
            net = net.with_cell(k, **{coupling: c, "L_r": L_r})
    return net


def _s_at(netlist, f):
    from .network import _port_admittance, s_from_y

    omega = 2 * np.pi * np.asarray(f, dtype=float)
    return s_from_y(_port_admittance(netlist, omega), [p.z_ref for p in netlist.ports], omega)


@dataclass
class NotchResult:
    values: dict
    targets: tuple[float, ...]
    achieved: tuple[float, ...]
    rejection_db: tuple[float, ...]
    objective: float
    trace: list = field(default_factory=list)


def locate_zero(netlist, target, out_port, in_port, window=0.1, points=801):
    """Frequency of the deepest |S21| minimum within +-window of ``target``."""
    f = np.linspace(target * (1 - window), target * (1 + window), points)
    mag = np.abs(_s_at(netlist, f)[:, out_port, in_port])
    k = int(np.argmin(mag))
    lo, hi = f[max(k - 1, 0)], f[min(k + 1, points - 1)]
    res = optimize.minimize_scalar(
        lambda x: np.log(np.abs(_s_at(netlist, [x])[0, out_port, in_port]) + 1e-300),
        bounds=(lo, hi), method="bounded", options={"xatol": target * 1e-9},
    )
    f0 = float(res.x)
    depth = np.abs(_s_at(netlist, [f0])[0, out_port, in_port])
    level = np.median(mag)
    return f0, 20 * np.log10(level / max(depth, 1e-300))


def place_notches(targets, base, tunable, out_port=0, in_port=1, bounds=(1e-19, 1e-13),
                  reference=None, threshold=1e-4, grid=13, max_iter=2000, signed_ref=None):
    """Choose the tunable couplings so |S_out,in| vanishes at each target.

    ``tunable`` names lumped elements of ``base``. The objective is the sum
    of |S21(f_k)|^2 normalised by ``reference`` (the same transmission with
    the tunable paths removed, by default). A coarse log-grid scan picks the
    starting point; bounded Nelder-Mead in log-magnitude refines it. With
    ``signed_ref`` the values are signed effective capacitances (see
    ``Netlist.replace``) and the scan covers both signs of each coupling.
    """
    targets = tuple(float(t) for t in targets)
    tunable = tuple(tunable)
    if not 1 <= len(targets) <= len(tunable):
        raise ConfigError(f"need 1..{len(tunable)} targets, got {len(targets)}")
    lo, hi = bounds
    f_t = np.array(targets)
    if reference is None:
        reference = np.abs(_s_at(base.replace(**{n: 0.0 for n in tunable}), f_t)[:, out_port, in_port])
    reference = np.maximum(np.asarray(reference, dtype=float), 1e-300)
    trace = []

    def objective(values):
        net = base.replace(signed_ref=signed_ref, **dict(zip(tunable, values)))
        mag = np.abs(_s_at(net, f_t)[:, out_port, in_port])
        val = float(np.sum((mag / reference) ** 2))
        trace.append((tuple(float(v) for v in values), val))
        return val

    if hi <= 0:
        best = objective([0.0] * len(tunable))
        raise InfeasibleNotchError("no tunable coupling range: interference paths are disabled",
                                   best=(dict.fromkeys(tunable, 0.0), best))

    log_lo, log_hi = np.log(lo), np.log(hi)
    mags = np.exp(np.linspace(log_lo, log_hi, grid))
    axis = np.concatenate([-mags[::-1], mags]) if signed_ref is not None else mags
    mesh = np.stack(np.meshgrid(*[axis] * len(tunable), indexing="ij"), -1).reshape(-1, len(tunable))
    scores = [objective(x) for x in mesh]
    x0 = mesh[int(np.argmin(scores))]
    sign = np.sign(x0)
    res = optimize.minimize(lambda u: np.log(objective(sign * np.exp(u)) + 1e-300), np.log(np.abs(x0)),
                            method="Nelder-Mead", bounds=[(log_lo, log_hi)] * len(tunable),
                            options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-14})
    values = dict(zip(tunable, (sign * np.exp(res.x)).tolist()))
    final = objective(list(values.values()))
    if not final < threshold:
        raise InfeasibleNotchError(f"objective {final:.3g} did not reach {threshold:g}", best=(values, final))
    net = base.replace(signed_ref=signed_ref, **values)
    found = [locate_zero(net, t, out_port, in_port) for t in targets]
    return NotchResult(values, targets, tuple(f for f, _ in found), tuple(d for _, d in found), final, trace)


def design_notches(network, cavity, targets=(5.5e9, 7.7e9), **kwargs):
    """Tune the signed C_x1 and C_xq of cell 1 for zeros in qubit-1 to feed transmission."""
    seeded = replace(network, C_x1=network.C_x1 or 1e-16, C_xq=network.C_xq or 1e-16)
    base = build_configuration(FilterConfiguration.FILTERED_WITH_INTERFERENCE, seeded, cavity)
    kwargs.setdefault("signed_ref", network.f_cross_ref)
    result = place_notches(targets, base, ("C_x1", "C_xq"), out_port=0, in_port=1, **kwargs)
    return replace(network, **result.values), result


def bilinear_notch_solution(network, cavity, targets):
    """Closed-form signed cross couplings for two exact zeros of q1 -> feed.

    With the cavity node and resonator 1 lossless, the (q1, feed) cofactor of
    the admittance matrix reduces to
    a + b X1 + c Xq + d X1 Xq = 0 per frequency, where X is the effective
    capacitance of each cross branch at that frequency. A capacitor has X = C;
    the inductive realisation of a negative value x has X = x (w_ref / w)^2.
    For each sign assignment the two targets give a quadratic in x1; roots
    whose signs match the assignment are returned.
    """
    from .network import _admittance_stack, kron_reduce

    coeffs = []
    net0 = replace(network, C_x1=0.0, C_xq=0.0)
    nl = build_configuration(FilterConfiguration.FILTERED_NO_INTERFERENCE, net0, cavity)
    names = nl.node_names
    q, r, c, p = (names[n] - 1 for n in ("q1", "r1", "open", "feed"))
    for f in targets:
        w = 2 * np.pi * f
        Y = _admittance_stack(nl, np.array([w]))[0]
        # terminate every port except feed and q1, then keep q, r, c, p
        for port in nl.ports[1:]:
            if port.name != "q1":
                Y[port.node - 1, port.node - 1] += 1.0 / port.z_ref
        Yr = kron_reduce(Y, [q, r, c, p])
        B_r = Yr[1, 1].imag
        B_c = Yr[2, 2].imag
        Cg = -Yr[0, 1].imag / w
        Ci = -Yr[1, 2].imag / w
        Cin = -Yr[2, 3].imag / w
        coeffs.append((w, (w * Cg * Ci * Cin, Cg * B_c, Cin * B_r, w * (Cg + Ci + Cin))))
    w_ref = 2 * np.pi * network.f_cross_ref
    out = []
    for s1 in (1.0, -1.0):
        for sq in (1.0, -1.0):
            scaled = []
            for w, (a, b, c_, d) in coeffs:
                k1 = 1.0 if s1 > 0 else (w_ref / w) ** 2
                kq = 1.0 if sq > 0 else (w_ref / w) ** 2
                scaled.append((a, b * k1, c_ * kq, d * k1 * kq))
            (a1, b1, c1, d1), (a2, b2, c2, d2) = scaled
            # xq = -(a1 + b1 x) / (c1 + d1 x); substitute into the second equation
            poly = np.array([b2 * d1 - d2 * b1, a2 * d1 + b2 * c1 - c2 * b1 - d2 * a1, a2 * c1 - c2 * a1])
            for x in np.roots(poly):
                if abs(x.imag) > 1e-9 * abs(x):
                    continue
                x = x.real
                xq = -(a1 + b1 * x) / (c1 + d1 * x)
                if np.sign(x) == s1 and np.sign(xq) == sq:
                    out.append((float(x), float(xq)))
    return out


E_CHARGE = 1.602176634e-19
H_PLANCK = 6.62607015e-34


def transmon_couplings(omega_q, alpha, omega_r, chi, c_r):
    """Island capacitance and coupling capacitance of each transmon cell.

    C_sigma follows from the charging energy E_C = h|alpha/2pi|, g from the
    transmon dispersive shift chi = g^2 alpha / (Delta (Delta + alpha)) and
    C_g from g = C_g sqrt(omega_q omega_r / (C_sigma C_r)) / 2.
    """
    omega_q, alpha, omega_r, chi, c_r = (np.asarray(v, dtype=float) for v in (omega_q, alpha, omega_r, chi, c_r))
    c_sigma = E_CHARGE ** 2 * 2 * np.pi / (2 * H_PLANCK * np.abs(alpha))
    delta = omega_q - omega_r
    g2 = chi * delta * (delta + alpha) / alpha
    if np.any(g2 <= 0):
        raise ConfigError("dispersive shift sign is inconsistent with the detuning and anharmonicity")
    c_g = 2 * np.sqrt(g2) * np.sqrt(c_sigma * c_r / (omega_q * omega_r))
    return c_sigma, c_g


@dataclass
class CalibrationReport:
    filter: FilterMetrics
    filter_with_cells: FilterMetrics
    notches: NotchResult


def calibrate_device(omega_q, alpha, omega_r, kappa_e, chi, cavity=None, c_r=250e-15, c_drive=1e-18,
                     notch_targets=(5.5e9, 7.7e9), filter_targets=FilterTargets(), rounds=3):
    """Calibrate every circuit value from the published scalar targets.

    Order: filter (C_shunt, C_in, C_in_2port), then resonator couplings of
    the unfiltered and filtered variants, then alternate notch placement and
    resonator recalibration on the interference variant. Deterministic.
    """
    cavity = cavity or ReentrantCavityParams()
    n = len(omega_r)
    c_sigma, c_g = transmon_couplings(omega_q, alpha, omega_r, chi, np.full(n, c_r))
    omega_r = np.asarray(omega_r, dtype=float)
    net = CouplingNetwork(
        C_in=150e-15, C_in_2port=120e-15, C_pin=(0.6e-15,) * n, C_direct=(3e-15,) * n,
        C_drive=(c_drive,) * n, C_qubit=tuple(c_sigma), C_g=tuple(c_g), C_r=(c_r,) * n,
        L_r=tuple(1.0 / (omega_r ** 2 * c_r)),
    )
    net, cavity, metrics = calibrate_filter(net, cavity, filter_targets)
    net = calibrate_resonators(net, cavity, omega_r, kappa_e, variant=FilterConfiguration.UNFILTERED)
    net = calibrate_resonators(net, cavity, omega_r, kappa_e, variant=FilterConfiguration.FILTERED_NO_INTERFERENCE)
    for _ in range(rounds):
        net, _ = design_notches(net, cavity, notch_targets)
        net = calibrate_resonators(net, cavity, omega_r, kappa_e)
    net, notches = design_notches(net, cavity, notch_targets)
    return net, cavity, CalibrationReport(metrics, filter_metrics(net, cavity, with_cells=True), notches)
