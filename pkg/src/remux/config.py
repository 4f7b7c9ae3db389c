"""Device configuration files.

Quantities are JSON strings with an explicit unit suffix ("9.871 GHz",
"49 us", "10.1 %", "125.9 fF"). Frequency-like fields (omega_q, alpha,
omega_r, kappa, kappa_e, chi, stray_chi) hold omega / 2 pi in the file and
angular frequency (rad/s) in memory; every other quantity is SI.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .cavity import CouplingNetwork, ReentrantCavityParams
from .exceptions import ConfigError
from .readout import NoiseModel, QubitParams, ReadoutPulse, ReadoutSchedule, ResonatorParams

SCHEMA_VERSION = 1
TWO_PI = 2 * np.pi

UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "rate": {"1/s": 1.0, "1/ms": 1e3, "1/us": 1e6},
    "capacitance": {"F": 1.0, "pF": 1e-12, "fF": 1e-15, "aF": 1e-18},
    "inductance": {"H": 1.0, "nH": 1e-9, "pH": 1e-12},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6},
    "velocity": {"m/s": 1.0},
    "fraction": {"%": 1e-2, "": 1.0},
    "number": {"": 1.0},
}

# canonical unit per dimension when writing files
CANONICAL = {"frequency": "GHz", "time": "us", "rate": "1/s", "capacitance": "fF", "inductance": "nH",
             "length": "mm", "velocity": "m/s", "fraction": "%", "number": ""}

QUBIT_FIELDS = {"omega_q": "frequency", "alpha": "frequency", "T1": "time", "T2_star": "time",
                "T2_echo": "time", "P_th": "fraction", "re_excitation_rate": "rate", "sigma_s": "number"}
RESONATOR_FIELDS = {"omega_r": "frequency", "kappa": "frequency", "kappa_e": "frequency", "chi": "frequency",
                    "photons": "number"}
CAVITY_FIELDS = {"L": "length", "d": "length", "W": "length", "D": "length", "r0": "length", "d_r": "length",
                 "C_shunt": "capacitance", "pin_radius": "length", "pin_count": "number", "velocity": "velocity"}
COUPLING_SCALARS = {"C_in": "capacitance", "C_in_2port": "capacitance", "C_x1": "capacitance",
                    "C_xq": "capacitance", "f_cross_ref": "frequency"}
COUPLING_CELLS = {"C_pin": "capacitance", "C_direct": "capacitance", "C_drive": "capacitance",
                  "C_qubit": "capacitance", "C_g": "capacitance", "C_r": "capacitance", "L_r": "inductance"}
READOUT_FIELDS = {"duration": "time", "edge": "time", "delay": "time"}
DEPHASING_FIELDS = {"interval": "time"}
ANGULAR = {"omega_q", "alpha", "omega_r", "kappa", "kappa_e", "chi", "stray_chi"}

_QTY = {"type": ["string", "number"]}


def _obj(props, required=None):
    return {"type": "object", "properties": props, "required": sorted(props if required is None else required),
            "additionalProperties": False}


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "qubits", "resonators", "readout", "cavity", "coupling"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "qubits": {"type": "array", "items": _obj(dict.fromkeys(QUBIT_FIELDS, _QTY),
                                                   ["omega_q", "alpha", "T1", "T2_star", "T2_echo"])},
        "resonators": {"type": "array", "items": _obj(dict.fromkeys(RESONATOR_FIELDS, _QTY),
                                                       ["omega_r", "kappa", "kappa_e", "chi"])},
        "readout": _obj({**dict.fromkeys(READOUT_FIELDS, _QTY), "herald": {"type": "boolean"}}, []),
        "cavity": _obj(dict.fromkeys(CAVITY_FIELDS, _QTY), ["C_shunt"]),
        "coupling": _obj({**dict.fromkeys(COUPLING_SCALARS, _QTY),
                          **{k: {"type": "array", "items": _QTY} for k in COUPLING_CELLS}},
                         ["C_in", "C_in_2port", *COUPLING_CELLS]),
        "dephasing": _obj({**dict.fromkeys(DEPHASING_FIELDS, _QTY),
                           "stray_chi": {"type": "array", "items": {"type": "array", "items": _QTY}}}, []),
    },
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(value, dimension, pointer=""):
    """SI value of a unit-suffixed string (or bare number for unitless fields)."""
    table = UNITS[dimension]
    if isinstance(value, bool):
        raise ConfigError("expected a quantity, got a boolean", pointer)
    if isinstance(value, (int, float)):
        if "" not in table:
            raise ConfigError(f"missing unit; expected one of {sorted(table)}", pointer)
        return float(value)
    m = _NUM.match(value)
    if not m:
        raise ConfigError(f"cannot parse quantity {value!r}", pointer)
    unit = m.group(2)
    if unit not in table:
        raise ConfigError(f"unit {unit!r} is not a {dimension} unit; expected one of {sorted(table)}", pointer)
    return float(m.group(1)) * table[unit]


def format_quantity(value, dimension):
    unit = CANONICAL[dimension]
    if unit == "":
        return float(f"{value:.12g}") if dimension != "number" or value != int(value) else int(value)
    return f"{value / UNITS[dimension][unit]:.12g} {unit}"


@dataclass(frozen=True)
class DeviceConfig:
    qubits: tuple[QubitParams, ...]
    resonators: tuple[ResonatorParams, ...]
    network: CouplingNetwork
    cavity: ReentrantCavityParams
    noise: tuple[NoiseModel, ...]
    schedules: tuple[ReadoutSchedule, ...]
    photons: tuple[float, ...]
    pulse_duration: float = 1e-6
    pulse_edge: float = 15e-9
    echo_interval: float = 4e-6
    stray_chi: np.ndarray | None = None
    seed: int = 0
    name: str = ""

    @property
    def n_qubits(self):
        return len(self.qubits)

    def pulses(self, xi=1.0):
        return tuple(ReadoutPulse(r.omega_r / TWO_PI, r.drive_for_photons(n), xi, self.pulse_duration,
                                  self.pulse_edge) for r, n in zip(self.resonators, self.photons))

    def with_seed(self, seed):
        return replace(self, seed=int(seed), noise=tuple(replace(n, seed=int(seed)) for n in self.noise))


def _check_schema(data):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    path = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        path.append(missing[0])
        msg = "required field is missing"
    else:
        msg = err.message
    raise ConfigError(msg, "/" + "/".join(path))


def config_from_dict(data):
    """Validate a parsed device file and build the in-memory configuration."""
    _check_schema(data)
    nq, nr = len(data["qubits"]), len(data["resonators"])
    if nq == 0:
        raise ConfigError("device needs at least one qubit", "/qubits")
    if nq != nr:
        raise ConfigError(f"{nq} qubits but {nr} resonators", "/resonators")

    def q(section, key, dim, idx=None):
        obj = data[section] if idx is None else data[section][idx]
        ptr = f"/{section}/{key}" if idx is None else f"/{section}/{idx}/{key}"
        v = parse_quantity(obj[key], dim, ptr)
        return v * TWO_PI if key in ANGULAR else v

    resonators, qubits, noise, schedules, photons = [], [], [], [], []
    readout = data["readout"]
    delay = q("readout", "delay", "time") if "delay" in readout else 1e-6
    seed = int(data.get("seed", 0))
    for k in range(nr):
        vals = {key: q("resonators", key, dim, k) for key, dim in RESONATOR_FIELDS.items()
                if key in data["resonators"][k]}
        if vals["kappa_e"] > vals["kappa"]:
            raise ConfigError("kappa_e exceeds kappa", f"/resonators/{k}/kappa_e")
        try:
            resonators.append(ResonatorParams(vals["omega_r"], vals["kappa"], vals["kappa_e"], vals["chi"]))
        except ConfigError as exc:
            raise ConfigError(str(exc), f"/resonators/{k}") from None
        photons.append(vals.get("photons", 1.0))
    for k in range(1, nr):
        if not resonators[k].omega_r > resonators[k - 1].omega_r:
            raise ConfigError("resonator frequencies must increase strictly", f"/resonators/{k}/omega_r")
    for k in range(nq):
        vals = {key: q("qubits", key, dim, k) for key, dim in QUBIT_FIELDS.items() if key in data["qubits"][k]}
        try:
            qubits.append(QubitParams(vals["omega_q"], vals["alpha"], vals["T1"], vals["T2_star"],
                                      vals["T2_echo"], vals.get("P_th", 0.0)))
            noise.append(NoiseModel(vals.get("sigma_s", 1.0), seed))
            schedules.append(ReadoutSchedule(readout.get("herald", True), delay,
                                             vals.get("re_excitation_rate", 0.0)))
        except ConfigError as exc:
            raise ConfigError(str(exc), f"/qubits/{k}") from None

    cav_vals = {key: q("cavity", key, dim) for key, dim in CAVITY_FIELDS.items() if key in data["cavity"]}
    if "pin_count" in cav_vals:
        cav_vals["pin_count"] = int(cav_vals["pin_count"])
    try:
        cavity = ReentrantCavityParams(**cav_vals)
    except ConfigError as exc:
        raise ConfigError(str(exc), "/cavity") from None

    cp = data["coupling"]
    net_vals = {key: q("coupling", key, dim) for key, dim in COUPLING_SCALARS.items() if key in cp}
    for key, dim in COUPLING_CELLS.items():
        if len(cp[key]) != nq:
            raise ConfigError(f"expected {nq} entries, got {len(cp[key])}", f"/coupling/{key}")
        net_vals[key] = tuple(parse_quantity(v, dim, f"/coupling/{key}/{i}") for i, v in enumerate(cp[key]))
    try:
        network = CouplingNetwork(**net_vals)
    except ConfigError as exc:
        raise ConfigError(str(exc), "/coupling") from None

    deph = data.get("dephasing", {})
    interval = q("dephasing", "interval", "time") if "interval" in deph else 4e-6
    stray = None
    if "stray_chi" in deph:
        rows = deph["stray_chi"]
        if len(rows) != nq or any(len(r) != nq for r in rows):
            raise ConfigError(f"stray_chi must be {nq} x {nq}", "/dephasing/stray_chi")
        stray = np.array([[parse_quantity(v, "frequency", f"/dephasing/stray_chi/{i}/{j}") * TWO_PI
                           for j, v in enumerate(r)] for i, r in enumerate(rows)])
    return DeviceConfig(
        tuple(qubits), tuple(resonators), network, cavity, tuple(noise), tuple(schedules), tuple(photons),
        pulse_duration=q("readout", "duration", "time") if "duration" in readout else 1e-6,
        pulse_edge=q("readout", "edge", "time") if "edge" in readout else 15e-9,
        echo_interval=interval, stray_chi=stray, seed=seed, name=data.get("name", ""),
    )


def config_to_dict(cfg):
    """Canonical file representation of a configuration."""
    def fq(value, key, dim):
        return format_quantity(value / TWO_PI if key in ANGULAR else value, dim)

    qubits = []
    for qb, nz, sch in zip(cfg.qubits, cfg.noise, cfg.schedules):
        qubits.append({
            "omega_q": fq(qb.omega_q, "omega_q", "frequency"), "alpha": fq(qb.alpha, "alpha", "frequency"),
            "T1": fq(qb.T1, "T1", "time"), "T2_star": fq(qb.T2_star, "T2_star", "time"),
            "T2_echo": fq(qb.T2_echo, "T2_echo", "time"), "P_th": fq(qb.P_th, "P_th", "fraction"),
            "re_excitation_rate": fq(sch.re_excitation_rate, "re_excitation_rate", "rate"),
            "sigma_s": format_quantity(nz.sigma_s, "number"),
        })
    resonators = [{key: fq(getattr(r, key), key, dim) for key, dim in RESONATOR_FIELDS.items() if key != "photons"}
                  | {"photons": format_quantity(n, "number")} for r, n in zip(cfg.resonators, cfg.photons)]
    cav = {key: format_quantity(getattr(cfg.cavity, key), dim) for key, dim in CAVITY_FIELDS.items()}
    cav["pin_count"] = int(cfg.cavity.pin_count)
    coupling = {key: format_quantity(getattr(cfg.network, key), dim) for key, dim in COUPLING_SCALARS.items()}
    coupling.update({key: [format_quantity(v, dim) for v in getattr(cfg.network, key)]
                     for key, dim in COUPLING_CELLS.items()})
    out = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "seed": cfg.seed,
        "qubits": qubits,
        "resonators": resonators,
        "readout": {"duration": format_quantity(cfg.pulse_duration, "time"),
                    "edge": format_quantity(cfg.pulse_edge, "time"),
                    "delay": format_quantity(cfg.schedules[0].delay, "time"),
                    "herald": bool(cfg.schedules[0].herald)},
        "cavity": cav,
        "coupling": coupling,
        "dephasing": {"interval": format_quantity(cfg.echo_interval, "time")},
    }
    if cfg.stray_chi is not None:
        out["dephasing"]["stray_chi"] = [[format_quantity(v / TWO_PI, "frequency") for v in row]
                                         for row in cfg.stray_chi]
    return out


def canonical_json(data):
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def config_hash(cfg_or_dict):
    data = config_to_dict(cfg_or_dict) if isinstance(cfg_or_dict, DeviceConfig) else cfg_or_dict
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path=None):
    """Load and validate a device file; ``None`` loads the shipped device."""
    if path is None:
        text = resources.files("remux.data").joinpath("device.json").read_text(encoding="utf-8")
        source = "device.json"
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data)


def save_config(cfg, path):
    Path(path).write_text(canonical_json(config_to_dict(cfg)), encoding="utf-8")


def shipped_config():
    return load_config(None)


def config_fields(cls):
    return [f.name for f in fields(cls)]


def copy_dict(data):
    return copy.deepcopy(data)
