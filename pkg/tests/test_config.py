import copy
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from remux.config import (
    canonical_json,
    config_from_dict,
    config_hash,
    config_to_dict,
    format_quantity,
    load_config,
    parse_quantity,
    save_config,
)
from remux.exceptions import ConfigError

PUBLISHED = {
    "omega_r": (9.871e9, 10.007e9, 10.139e9, 10.281e9),
    "chi": (-1.7e6, -1.3e6, -1.5e6, -1.3e6),
    "omega_q": (6.034e9, 5.658e9, 6.025e9, 5.690e9),
    "T1": (49e-6, 50e-6, 52e-6, 47e-6),
    "T2_echo": (33e-6, 45e-6, 38e-6, 46e-6),
}


@pytest.fixture()
def raw(device):
    return config_to_dict(device)


def test_shipped_device_matches_published_parameters(device):
    assert device.n_qubits == 4
    for k in range(4):
        res, qb = device.resonators[k], device.qubits[k]
        assert res.omega_r / (2 * np.pi) == pytest.approx(PUBLISHED["omega_r"][k], rel=1e-12)
        assert res.chi / (2 * np.pi) == pytest.approx(PUBLISHED["chi"][k], rel=1e-12)
        assert qb.omega_q / (2 * np.pi) == pytest.approx(PUBLISHED["omega_q"][k], rel=1e-12)
        assert qb.T1 == pytest.approx(PUBLISHED["T1"][k]) and qb.T2_echo == pytest.approx(PUBLISHED["T2_echo"][k])
    assert device.pulse_duration == 1e-6 and device.pulse_edge == 15e-9


@pytest.mark.parametrize("value,dim,expected", [
    ("9.871 GHz", "frequency", 9.871e9), ("250 fF", "capacitance", 250e-15), ("1 aF", "capacitance", 1e-18),
    ("15 ns", "time", 15e-9), ("1 µs", "time", 1e-6), ("0.35 mm", "length", 0.35e-3), ("10.1 %", "fraction", 0.101),
    ("5e3 1/s", "rate", 5e3), (0.25, "fraction", 0.25), ("-0.1407 fF", "capacitance", -0.1407e-15),
])
def test_parse_quantity(value, dim, expected):
    assert parse_quantity(value, dim) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("value,dim", [("9.8 GHz", "time"), ("abc", "frequency"), (9.8e9, "frequency"),
                                       (True, "number"), ("1 furlong", "length")])
def test_parse_quantity_rejects(value, dim):
    with pytest.raises(ConfigError) as exc:
        parse_quantity(value, dim, "/x")
    assert exc.value.pointer == "/x"


@given(st.floats(1e-3, 1e3), st.sampled_from(["frequency", "time", "capacitance", "length", "rate"]))
def test_format_parse_round_trip(x, dim):
    from remux.config import CANONICAL, UNITS

    value = x * UNITS[dim][CANONICAL[dim]]
    assert parse_quantity(format_quantity(value, dim), dim) == pytest.approx(value, rel=1e-11)


def test_missing_field_reports_pointer(raw):
    del raw["resonators"][0]["kappa"]
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.pointer == "/resonators/0/kappa"


def test_kappa_e_above_kappa_rejected(raw):
    raw["resonators"][2]["kappa_e"] = "5 MHz"
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.pointer == "/resonators/2/kappa_e"


def test_zero_size_device_rejected(raw):
    raw["qubits"], raw["resonators"] = [], []
    for key in ("C_pin", "C_direct", "C_drive", "C_g", "C_qubit", "C_r", "L_r"):
        raw["coupling"][key] = []
    raw["dephasing"].pop("stray_chi", None)
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.pointer == "/qubits"


@pytest.mark.parametrize("mutate,pointer", [
    (lambda d: d["qubits"][1].update(T1="50 GHz"), "/qubits/1/T1"),
    (lambda d: d["resonators"][1].update(omega_r="9.0 GHz"), "/resonators/1/omega_r"),
    (lambda d: d["coupling"]["C_g"].pop(), "/coupling/C_g"),
    (lambda d: d["dephasing"].update(stray_chi=[["0 GHz"]]), "/dephasing/stray_chi"),
    (lambda d: d["resonators"].pop(), "/resonators"),
    (lambda d: d.update(schema_version=2), "/schema_version"),
    (lambda d: d["cavity"].update(L="-1 mm"), "/cavity"),
])
def test_invalid_files_report_pointer(raw, mutate, pointer):
    mutate(raw)
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.pointer == pointer


def test_round_trip_is_byte_identical(tmp_path, device):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_config(device, a)
    save_config(load_config(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_hash_is_stable_and_sensitive(device, raw):
    assert config_hash(device) == config_hash(load_config())
    assert config_hash(device) == config_hash(json.loads(canonical_json(raw)))
    other = copy.deepcopy(raw)
    other["seed"] = 1
    assert config_hash(other) != config_hash(raw)
    assert len(config_hash(device)) == 64


def test_with_seed(device):
    d2 = device.with_seed(7)
    assert d2.seed == 7 and all(n.seed == 7 for n in d2.noise)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{\n  \"name\": \n")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(tmp_path / "bad.json")


def test_optional_sections_take_defaults(raw):
    raw["readout"] = {}
    raw["dephasing"] = {}
    cfg = config_from_dict(raw)
    assert (cfg.pulse_duration, cfg.pulse_edge, cfg.echo_interval) == (1e-6, 15e-9, 4e-6)
    assert cfg.stray_chi is None and cfg.schedules[0].herald
