from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from remux.cavity import (
    C0,
    FilterConfiguration,
    ReentrantCavityParams,
    bilinear_notch_solution,
    build_configuration,
    cavity_equivalent,
    cross_inductance,
    design_notches,
    place_notches,
    resonance_frequency,
    transmon_couplings,
)
from remux.exceptions import ConfigError, InfeasibleNotchError, NoResonanceError
from remux.network import FrequencySweep, Netlist, Port, capacitor, inductor, input_admittance, input_admittance_at

WITH = FilterConfiguration.FILTERED_WITH_INTERFERENCE
NO = FilterConfiguration.FILTERED_NO_INTERFERENCE
UNF = FilterConfiguration.UNFILTERED


# Resonance ----------------------------------------------------------------------

def test_quarter_wave_limit():
    assert resonance_frequency(50, 5.5e-3, C0, 0.0) == pytest.approx(C0 / (4 * 5.5e-3))
    assert resonance_frequency(50, 5.5e-3, C0, 1e-22) == pytest.approx(C0 / (4 * 5.5e-3), rel=1e-6)


def test_loading_lowers_resonance():
    f = [resonance_frequency(50, 5.5e-3, C0, c) for c in (50e-15, 100e-15, 200e-15, 400e-15)]
    assert all(a > b for a, b in zip(f, f[1:]))


def test_resonance_matches_transcendental_oracle():
    # pick C_shunt so that 9.8 GHz solves tan(wL/v) = 1/(w C Z) exactly
    w = 2 * np.pi * 9.8e9
    Z, L = 50.0, 5.5e-3
    c = 1 / (w * Z * np.tan(w * L / C0))
    assert resonance_frequency(Z, L, C0, c) == pytest.approx(9.8e9, abs=2.0)
    oracle = brentq(lambda f: np.tan(2 * np.pi * f * L / C0) - 1 / (2 * np.pi * f * c * Z), 1e9, C0 / (4 * L) - 1)
    assert resonance_frequency(Z, L, C0, c) == pytest.approx(oracle, abs=2.0)


def test_resonance_input_validation():
    with pytest.raises(ConfigError):
        resonance_frequency(0, 5.5e-3, C0, 1e-13)
    with pytest.raises(NoResonanceError):
        resonance_frequency(50, 5.5e-3, C0, np.nan)


def test_fragment_resonance_agrees_with_sweep():
    cav = ReentrantCavityParams(C_shunt=120e-15)
    f0 = resonance_frequency(cav.impedance, cav.L, cav.velocity, cav.C_shunt)
    sweep = FrequencySweep(8e9, 14e9, 6001)
    y = input_admittance(cavity_equivalent(cav), 0, sweep)
    f_min = sweep.frequencies[np.argmin(np.abs(y))]
    assert abs(f_min - f0) <= sweep.frequencies[1] - sweep.frequencies[0]


def test_fragment_quarter_wave_when_unloaded():
    cav = ReentrantCavityParams(C_shunt=1e-22)
    sweep = FrequencySweep(10e9, 16e9, 6001)
    y = input_admittance(cavity_equivalent(cav), 0, sweep)
    assert sweep.frequencies[np.argmin(np.abs(y))] == pytest.approx(cav.quarter_wave_frequency, rel=2e-4)


def test_cavity_param_validation():
    with pytest.raises(ConfigError):
        ReentrantCavityParams(d_r=3e-3)
    with pytest.raises(ConfigError):
        ReentrantCavityParams(pin_count=0)
    with pytest.raises(ConfigError):
        ReentrantCavityParams(L=-1.0)


def test_coupling_network_validation(device):
    with pytest.raises(ConfigError):
        replace(device.network, C_pin=(1e-15,) * 3)
    with pytest.raises(ConfigError):
        replace(device.network, C_in=0.0)
    with pytest.raises(ConfigError):
        replace(device.network, C_x1=np.inf)


# Configurations -----------------------------------------------------------------

def test_unfiltered_has_no_tline(device):
    nl = build_configuration(UNF, device.network, device.cavity)
    assert not any(el.kind == "tline" for el in nl.elements)


def test_no_interference_has_no_cross_couplings(device):
    nl = build_configuration(NO, device.network, device.cavity)
    names = {el.name for el in nl.elements}
    assert "C_x1" not in names and "C_xq" not in names
    assert any(el.kind == "tline" for el in nl.elements)


def test_negative_cross_coupling_is_inductive(device):
    nl = build_configuration(WITH, device.network, device.cavity)
    xq = nl.element("C_xq")
    assert device.network.C_xq < 0 and xq.kind == "inductor"
    assert xq.value == pytest.approx(cross_inductance(device.network.C_xq, device.network.f_cross_ref))
    # same susceptance magnitude as the effective capacitance at the reference frequency
    w = 2 * np.pi * device.network.f_cross_ref
    assert 1 / (w * xq.value) == pytest.approx(w * abs(device.network.C_xq))


def test_re_y_dips_at_notches(device):
    nl = build_configuration(WITH, device.network, device.cavity)
    # the drive line sets a small loss floor, so the dip is a local minimum
    for f in (5.5e9, 7.7e9):
        grid = f * np.linspace(0.95, 1.05, 401)
        g = input_admittance_at(nl, 1, 2 * np.pi * grid).real
        assert abs(grid[np.argmin(g)] - f) / f < 0.01
    # with the drive lines decoupled the feed channel alone has true zeros
    quiet = build_configuration(WITH, replace(device.network, C_drive=(1e-25,) * 4), device.cavity)
    for f in (5.5e9, 7.7e9):
        g = input_admittance_at(quiet, 1, 2 * np.pi * f * np.array([0.97, 1.0, 1.03])).real
        assert g[1] < 1e-4 * min(g[0], g[2])


def test_configuration_ordering_at_notches(device):
    w = 2 * np.pi * np.array([5.5e9, 7.7e9])
    g = {v: input_admittance_at(build_configuration(v, device.network, device.cavity), 1, w).real
         for v in FilterConfiguration}
    assert np.all(g[UNF] > g[NO]) and np.all(g[NO] > g[WITH])


# Notches ---------------------------------------------------------------------------

def test_infeasible_when_paths_disabled(device):
    base = build_configuration(WITH, replace(device.network, C_x1=1e-16, C_xq=1e-16), device.cavity)
    with pytest.raises(InfeasibleNotchError) as info:
        place_notches([5.5e9], base, ("C_x1", "C_xq"), bounds=(0.0, 0.0))
    values, objective = info.value.best
    assert values == {"C_x1": 0.0, "C_xq": 0.0} and objective > 0


def test_target_count_validated(device):
    base = build_configuration(WITH, device.network, device.cavity)
    with pytest.raises(ConfigError):
        place_notches([5e9, 6e9, 7e9], base, ("C_x1", "C_xq"))


def test_two_path_toy_matches_closed_form():
    """A tunable capacitor in parallel with an inductor cancels at w = 1/sqrt(L C)."""
    L, f_t = 5e-9, 3.1e9
    nl = Netlist([capacitor(1, 2, 1e-13, name="Cx"), inductor(1, 2, L, name="Lp"),
                  capacitor(1, 0, 1e-12), capacitor(2, 0, 1e-12)], [Port(1), Port(2)], 2)
    res = place_notches([f_t], nl, ("Cx",), out_port=1, in_port=0, bounds=(1e-15, 1e-11), threshold=1e-6,
                        reference=np.array([1.0]))
    c_exact = 1 / ((2 * np.pi * f_t) ** 2 * L)
    assert res.values["Cx"] == pytest.approx(c_exact, rel=1e-3)
    assert res.achieved[0] == pytest.approx(f_t, rel=1e-3)


def test_design_notches_on_shipped_device(device):
    _, res = design_notches(device.network, device.cavity)
    for target, got, depth in zip(res.targets, res.achieved, res.rejection_db):
        assert abs(got - target) / target < 0.01
        assert depth >= 20
    assert res.trace and all(len(v) == 2 for v, _ in res.trace)


def test_closed_form_notch_solution_contains_shipped_values(device):
    roots = bilinear_notch_solution(device.network, device.cavity, (5.5e9, 7.7e9))
    shipped = np.array([device.network.C_x1, device.network.C_xq])
    assert min(np.abs(np.array(r) - shipped).max() / np.abs(shipped).max() for r in roots) < 1e-3


# Transmon cells ---------------------------------------------------------------------

def test_transmon_couplings_oracle():
    e, h = 1.602176634e-19, 6.62607015e-34
    wq, a, wr, chi, cr = 2 * np.pi * 6.034e9, -2 * np.pi * 221e6, 2 * np.pi * 9.871e9, -2 * np.pi * 1.7e6, 250e-15
    cs, cg = transmon_couplings(wq, a, wr, chi, cr)
    assert e ** 2 / (2 * cs) / h == pytest.approx(221e6)
    g = cg / 2 * np.sqrt(wq * wr / (cs * cr))
    d = wq - wr
    assert g ** 2 * a / (d * (d + a)) == pytest.approx(chi)


def test_transmon_couplings_reject_wrong_sign():
    with pytest.raises(ConfigError):
        transmon_couplings(2 * np.pi * 6e9, -2 * np.pi * 0.2e9, 2 * np.pi * 10e9, 2 * np.pi * 1e6, 250e-15)
