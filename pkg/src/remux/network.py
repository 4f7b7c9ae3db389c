"""Linear AC network engine.

Netlists are built from two-terminal capacitors, inductors, resistors and
lossless TEM transmission-line segments (each end referenced to ground).
Node 0 is ground. Port quantities come from Kron reduction of the nodal
admittance matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    ConfigError,
    IllConditionedNetworkError,
    InsufficientDataError,
    InvalidFrequencyError,
    InvalidPeakError,
    NonpassiveInputError,
    SingularElementError,
)

KINDS = ("capacitor", "inductor", "resistor", "tline")

# (Y0 + Y_port) is declared ill-conditioned above this condition number.
_COND_LIMIT = 1e14


@dataclass(frozen=True)
class Element:
    kind: str
    nodes: tuple[int, int]
    value: float = 0.0
    z0: float = 0.0
    theta: float = 0.0
    f_ref: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown element kind {self.kind!r}")
        a, b = self.nodes
        if a < 0 or b < 0:
            raise ConfigError(f"element {self.name or self.kind}: negative node id")
        if a == b:
            raise ConfigError(f"element {self.name or self.kind}: both terminals on node {a}")
        if self.kind == "tline":
            if not (self.z0 > 0 and self.theta > 0 and self.f_ref > 0):
                raise ConfigError(
                    f"tline {self.name}: z0, electrical length and reference frequency must be positive"
                )
        elif not self.value > 0:
            raise ConfigError(f"{self.kind} {self.name}: value must be positive, got {self.value}")

    def electrical_length(self, omega):
        return self.theta * np.asarray(omega) / (2 * np.pi * self.f_ref)

    def to_dict(self):
        d = {"kind": self.kind, "nodes": list(self.nodes)}
        if self.name:
            d["name"] = self.name
        if self.kind == "tline":
            d.update(z0=self.z0, theta=self.theta, f_ref=self.f_ref)
        else:
            d["value"] = self.value
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            nodes=tuple(int(n) for n in d["nodes"]),
            value=float(d.get("value", 0.0)),
            z0=float(d.get("z0", 0.0)),
            theta=float(d.get("theta", 0.0)),
            f_ref=float(d.get("f_ref", 0.0)),
            name=d.get("name", ""),
        )


def capacitor(a, b, C, name=""):
    return Element("capacitor", (a, b), value=C, name=name)


def inductor(a, b, L, name=""):
    return Element("inductor", (a, b), value=L, name=name)


def resistor(a, b, R, name=""):
    return Element("resistor", (a, b), value=R, name=name)


def tline(a, b, z0, theta, f_ref, name=""):
    """Lossless line of electrical length ``theta`` (rad) at ``f_ref`` (Hz)."""
    return Element("tline", (a, b), z0=z0, theta=theta, f_ref=f_ref, name=name)


@dataclass(frozen=True)
class Port:
    node: int
    z_ref: float = 50.0
    name: str = ""


@dataclass(frozen=True)
class Netlist:
    elements: tuple[Element, ...]
    ports: tuple[Port, ...]
    node_count: int
    node_names: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "ports", tuple(self.ports))
        if self.node_count < 1:
            raise ConfigError("netlist needs at least one non-ground node")
        for el in self.elements:
            if max(el.nodes) > self.node_count:
                raise ConfigError(f"element {el.name or el.kind} references node {max(el.nodes)} "
                                  f"beyond node_count={self.node_count}")
        seen = set()
        for p in self.ports:
            if not 1 <= p.node <= self.node_count:
                raise ConfigError(f"port node {p.node} does not exist")
            if not p.z_ref > 0:
                raise ConfigError(f"port on node {p.node}: reference impedance must be positive")
            if p.node in seen:
                raise ConfigError(f"two ports on node {p.node}")
            seen.add(p.node)
        floating = self._floating_nodes()
        if floating:
            raise ConfigError(f"nodes {sorted(floating)} are not connected to ground")

    def _floating_nodes(self):
        parent = list(range(self.node_count + 1))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for el in self.elements:
            parent[find(el.nodes[0])] = find(el.nodes[1])
        # a port terminates its node to ground through the reference impedance
        for p in self.ports:
            parent[find(p.node)] = find(0)
        root = find(0)
        return {n for n in range(1, self.node_count + 1) if find(n) != root}

    def element(self, name):
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)

    def replace(self, signed_ref=None, **values):
        """Return a copy with named lumped elements set to new values.

        A value of zero removes the element. With ``signed_ref`` (Hz), values
        are effective capacitances and a negative one is realised as the
        inductor with the same susceptance magnitude at ``signed_ref``.
        """
        elements = []
        for el in self.elements:
            if el.name in values:
                v = float(values[el.name])
                if v == 0.0:
                    continue
                if v < 0 and signed_ref is not None:
                    w = 2 * np.pi * signed_ref
                    el = Element("inductor", el.nodes, value=1.0 / (w * w * -v), name=el.name)
                else:
                    el = Element(el.kind, el.nodes, value=v, name=el.name)
            elements.append(el)
        return Netlist(elements, self.ports, self.node_count, dict(self.node_names))

    @property
    def is_lossless(self):
        return not any(el.kind == "resistor" for el in self.elements)

    def to_dict(self):
        return {
            "node_count": self.node_count,
            "elements": [el.to_dict() for el in self.elements],
            "ports": [{"node": p.node, "z_ref": p.z_ref, **({"name": p.name} if p.name else {})}
                      for p in self.ports],
            **({"node_names": self.node_names} if self.node_names else {}),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                elements=[Element.from_dict(e) for e in d["elements"]],
                ports=[Port(int(p["node"]), float(p.get("z_ref", 50.0)), p.get("name", ""))
                       for p in d["ports"]],
                node_count=int(d["node_count"]),
                node_names=dict(d.get("node_names", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"netlist is missing field {exc.args[0]!r}") from None

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


class NetlistBuilder:
    """Allocates node numbers by name while elements are added."""

    def __init__(self):
        self._nodes = {}
        self._elements = []
        self._ports = []

    def node(self, name):
        if name in (0, "gnd", "ground"):
            return 0
        if name not in self._nodes:
            self._nodes[name] = len(self._nodes) + 1
        return self._nodes[name]

    def add(self, kind, a, b, *args, name=""):
        a, b = self.node(a), self.node(b)
        make = {"capacitor": capacitor, "inductor": inductor, "resistor": resistor, "tline": tline}[kind]
        self._elements.append(make(a, b, *args, name=name))
        return self

    def port(self, node, z_ref=50.0, name=""):
        self._ports.append(Port(self.node(node), z_ref, name))
        return self

    def build(self):
        return Netlist(self._elements, self._ports, len(self._nodes), dict(self._nodes))


@dataclass(frozen=True)
class FrequencySweep:
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if not (0 < self.start < self.stop):
            raise InvalidFrequencyError(f"need 0 < start < stop, got {self.start}, {self.stop}")
        if self.points < 2:
            raise InsufficientDataError(f"sweep needs >= 2 points, got {self.points}")

    @property
    def frequencies(self):
        return np.linspace(self.start, self.stop, self.points)

    @classmethod
    def around(cls, center, span, points):
        return cls(center - span / 2, center + span / 2, points)


@dataclass
class PortResponse:
    frequencies: np.ndarray
    s: np.ndarray
    y_in: np.ndarray | None = None
    z_ref: tuple[float, ...] = ()

    @property
    def n_ports(self):
        return self.s.shape[1]

    @property
    def omega(self):
        return 2 * np.pi * self.frequencies

    def entry(self, i, j):
        return self.s[:, i, j]

    def to_touchstone(self, path):
        """Write Touchstone v1 (``# Hz S RI R <z>``).

        Version 1 files carry a single reference impedance, so mixed-impedance
        responses are rejected.
        """
        z = set(self.z_ref) or {50.0}
        if len(z) != 1:
            raise ConfigError("Touchstone v1 needs a single reference impedance for all ports")
        path = Path(path)
        n = self.n_ports
        lines = [f"! {n}-port S-parameters", f"# Hz S RI R {_fmt(z.pop())}"]
        for k, f in enumerate(self.frequencies):
            if n == 2:
                # v1 two-port order is S11 S21 S12 S22
                order = [(0, 0), (1, 0), (0, 1), (1, 1)]
                vals = [self.s[k, i, j] for i, j in order]
                lines.append(_fmt(f) + " " + " ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in vals))
            else:
                for i in range(n):
                    row = " ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in self.s[k, i])
                    lines.append((_fmt(f) + " " if i == 0 else "") + row)
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def from_touchstone(cls, path, n_ports=None):
        path = Path(path)
        if n_ports is None:
            suffix = path.suffix.lower()
            n_ports = int(suffix[2:-1]) if suffix.startswith(".s") and suffix.endswith("p") else 1
        unit_scale = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
        scale, z_ref, tokens = 1e9, 50.0, []
        for raw in path.read_text().splitlines():
            line = raw.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                opts = line[1:].lower().split()
                if "ri" not in opts or "s" not in opts:
                    raise ConfigError("only S-parameter files in RI format are supported")
                for o in opts:
                    if o in unit_scale:
                        scale = unit_scale[o]
                if "r" in opts:
                    z_ref = float(opts[opts.index("r") + 1])
                continue
            tokens.extend(float(t) for t in line.split())
        per = 1 + 2 * n_ports * n_ports
        if len(tokens) % per:
            raise ConfigError(f"Touchstone data length {len(tokens)} is not a multiple of {per}")
        data = np.array(tokens).reshape(-1, per)
        vals = data[:, 1::2] + 1j * data[:, 2::2]
        s = vals.reshape(-1, n_ports, n_ports)
        if n_ports == 2:
            s = s.transpose(0, 2, 1)
        return cls(data[:, 0] * scale, s, z_ref=(z_ref,) * n_ports)

    def to_csv(self, path):
        n = self.n_ports
        header = ["frequency"]
        for i in range(n):
            for j in range(n):
                header += [f"re_s{i + 1}{j + 1}", f"im_s{i + 1}{j + 1}"]
        rows = []
        for k, f in enumerate(self.frequencies):
            vals = [_fmt(f)]
            for v in self.s[k].ravel():
                vals += [_fmt(v.real), _fmt(v.imag)]
            rows.append(",".join(vals))
        Path(path).write_text(",".join(header) + "\n" + "\n".join(rows) + "\n")


def _fmt(x):
    return repr(float(x))


def _check_omega(omega):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(~np.isfinite(omega)) or np.any(omega <= 0):
        raise InvalidFrequencyError("angular frequency must be positive and finite")
    return omega


def _admittance_stack(netlist, omega):
    """Nodal admittance over all nodes including ground, shape (F, N+1, N+1)."""
    n = netlist.node_count + 1
    Y = np.zeros((omega.size, n, n), dtype=complex)
    for el in netlist.elements:
        a, b = el.nodes
        if el.kind == "tline":
            bl = el.electrical_length(omega)
            s = np.sin(bl)
            bad = np.abs(s) < 1e-12
            if np.any(bad):
                f_bad = omega[np.argmax(bad)] / (2 * np.pi)
                raise SingularElementError(
                    f"tline {el.name or el.nodes}: sin(beta l) = 0 at {f_bad:.6g} Hz", frequency=f_bad
                )
            y0 = 1.0 / el.z0
            self_y = -1j * y0 / np.tan(bl)
            mutual = 1j * y0 / s
            Y[:, a, a] += self_y
            Y[:, b, b] += self_y
            Y[:, a, b] += mutual
            Y[:, b, a] += mutual
            continue
        if el.kind == "capacitor":
            y = 1j * omega * el.value
        elif el.kind == "inductor":
            y = 1.0 / (1j * omega * el.value)
        else:
            y = np.full(omega.shape, 1.0 / el.value, dtype=complex)
        Y[:, a, a] += y
        Y[:, b, b] += y
        Y[:, a, b] -= y
        Y[:, b, a] -= y
    return Y[:, 1:, 1:]


def assemble_admittance(netlist, omega):
    """Nodal admittance matrix over the non-ground nodes.

    A scalar ``omega`` gives an ``(N, N)`` matrix, an array gives ``(F, N, N)``.
    """
    scalar = np.ndim(omega) == 0
    Y = _admittance_stack(netlist, _check_omega(omega))
    return Y[0] if scalar else Y


def kron_reduce(Y, keep):
    """Eliminate every node not in ``keep`` (0-based indices) by Schur complement."""
    keep = np.asarray(keep, dtype=int)
    drop = np.setdiff1d(np.arange(Y.shape[-1]), keep)
    Ykk = Y[..., keep[:, None], keep]
    if drop.size == 0:
        return Ykk
    Ykd = Y[..., keep[:, None], drop]
    Ydk = Y[..., drop[:, None], keep]
    Ydd = Y[..., drop[:, None], drop]
    try:
        return Ykk - Ykd @ np.linalg.solve(Ydd, Ydk)
    except np.linalg.LinAlgError:
        raise IllConditionedNetworkError("internal-node admittance block is singular") from None


def _port_admittance(netlist, omega):
    if not netlist.ports:
        raise ConfigError("netlist has no ports")
    Y = _admittance_stack(netlist, omega)
    return kron_reduce(Y, [p.node - 1 for p in netlist.ports])


def s_from_y(Yp, z_ref, omega=None):
    """Scattering matrix from port admittance with per-port real references.

    Uses the normalised form S = (I - y)(I + y)^-1 with y = sqrt(Z0) Y sqrt(Z0),
    which equals (Y0 - Y)(Y0 + Y)^-1 for equal references and stays symmetric
    for reciprocal networks.
    """
    r = np.sqrt(np.asarray(z_ref, dtype=float))
    y = r[:, None] * Yp * r[None, :]
    eye = np.eye(y.shape[-1])
    A = eye + y
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > _COND_LIMIT)
    if np.any(bad):
        k = int(np.argmax(bad))
        f_bad = None if omega is None else float(omega[k] / (2 * np.pi))
        raise IllConditionedNetworkError(f"(Y0 + Y_port) is singular at {f_bad} Hz", frequency=f_bad)
    # (I - y) and (I + y)^-1 commute, so solve from the left
    return np.linalg.solve(A, eye - y)


def s_parameters(netlist, sweep):
    """Port S-parameters over a linear frequency sweep."""
    f = sweep.frequencies
    omega = 2 * np.pi * f
    Yp = _port_admittance(netlist, omega)
    z_ref = [p.z_ref for p in netlist.ports]
    return PortResponse(f, s_from_y(Yp, z_ref, omega), z_ref=tuple(z_ref))


def input_admittance_at(netlist, port_index, omega):
    """Admittance looking into one port with every other port terminated."""
    omega = _check_omega(omega)
    if not 0 <= port_index < len(netlist.ports):
        raise ConfigError(f"port index {port_index} out of range")
    Y = _admittance_stack(netlist, omega)
    for k, p in enumerate(netlist.ports):
        if k != port_index:
            Y[:, p.node - 1, p.node - 1] += 1.0 / p.z_ref
    node = netlist.ports[port_index].node - 1
    return kron_reduce(Y, [node])[:, 0, 0]


def input_admittance(netlist, port_index, sweep):
    """Environment admittance seen from ``port_index`` over a sweep."""
    return input_admittance_at(netlist, port_index, 2 * np.pi * sweep.frequencies)


def purcell_t1_limit(y_env, c_total):
    """Energy-relaxation bound T1 = C / Re Y at the qubit frequency.

    Returns ``inf`` for a lossless environment.
    """
    g = float(np.real(y_env))
    if c_total <= 0:
        raise ConfigError("qubit capacitance must be positive")
    if g < 0:
        raise NonpassiveInputError(f"Re Y = {g} < 0: environment is not passive")
    if g == 0:
        return np.inf
    return c_total / g


def group_delay(response, port_pair=(0, 0)):
    """tau_D = -d(phase)/d(omega) of one S entry, by central differences."""
    if len(response.frequencies) < 2:
        raise InsufficientDataError("group delay needs at least 2 frequency points")
    i, j = port_pair
    phase = np.unwrap(np.angle(response.s[:, i, j]))
    return -np.gradient(phase, response.omega)


def extract_linewidth(tau_peak):
    """External linewidth kappa_e/2pi (Hz) from the peak reflection group delay."""
    if not np.isfinite(tau_peak) and tau_peak > 0:
        return 0.0
    if not tau_peak > 0:
        raise InvalidPeakError(f"group-delay peak must be positive, got {tau_peak}")
    return 2.0 / (np.pi * tau_peak)


def peak(x, y):
    """Location and height of the maximum of ``y`` refined by a parabola."""
    k = int(np.argmax(y))
    if 0 < k < len(y) - 1:
        y0, y1, y2 = y[k - 1], y[k], y[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            d = 0.5 * (y0 - y2) / den
            dx = x[k + 1] - x[k]
            return x[k] + d * dx, y1 - 0.25 * (y0 - y2) * d
    return x[k], y[k]
