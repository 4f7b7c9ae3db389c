"""End-to-end runs on a device configuration, shared by the CLI and tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cavity import FilterConfiguration, build_configuration, build_two_port, filter_metrics
from .classify import GMMStateClassifier, assignment_matrix, fidelity_report
from .dephasing import crosstalk_map, pair_experiment, simulate_echo_contrast
from .exceptions import ConfigError
from .network import (
    FrequencySweep,
    extract_linewidth,
    group_delay,
    input_admittance,
    input_admittance_at,
    peak,
    s_parameters,
)
from .readout import ReadoutModel, multiplexed_run, simulate_stream

VARIANTS = tuple(FilterConfiguration)
DEFAULT_XI = tuple(np.linspace(0.0, 1.0, 12))


def _require_qubits(cfg):
    if cfg.n_qubits < 1:
        raise ConfigError("device needs at least one qubit", "/qubits")


# Network ---------------------------------------------------------------------

def device_netlist(cfg, variant=FilterConfiguration.FILTERED_WITH_INTERFERENCE):
    _require_qubits(cfg)
    return build_configuration(variant, cfg.network, cfg.cavity)


def filter_sweep(cfg, sweep=FrequencySweep(5e9, 14e9, 1801)):
    """Two-port S-parameters of the mirrored filter with the cells attached."""
    _require_qubits(cfg)
    return s_parameters(build_two_port(cfg.network, cfg.cavity), sweep)


def environment_admittance(cfg, sweep=FrequencySweep(4e9, 9e9, 1001), qubit=0):
    """Admittance seen from one junction port in every filter configuration."""
    _require_qubits(cfg)
    return {v: input_admittance(build_configuration(v, cfg.network, cfg.cavity), 1 + qubit, sweep)
            for v in VARIANTS}


def purcell_ratios(cfg, notches=(5.5e9, 7.7e9), f_mid=6.0e9, qubit=0):
    """Re Y ratios: unfiltered / no-interference at ``f_mid`` and interference / no-interference at the notches."""
    freqs = np.array([f_mid, *notches])
    g = {v: input_admittance_at(build_configuration(v, cfg.network, cfg.cavity), 1 + qubit,
                                2 * np.pi * freqs).real for v in VARIANTS}
    ref = g[FilterConfiguration.FILTERED_NO_INTERFERENCE]
    return {
        "unfiltered_over_no_interference": float(g[FilterConfiguration.UNFILTERED][0] / ref[0]),
        "interference_over_no_interference": (g[FilterConfiguration.FILTERED_WITH_INTERFERENCE][1:] / ref[1:]).tolist(),
        "re_y": {v.value: g[v].tolist() for v in VARIANTS},
        "frequencies": freqs.tolist(),
    }


@dataclass
class LinewidthResult:
    frequency: float
    tau_peak: float
    kappa_e: float
    configured: float


def reflection_group_delay(cfg, span=6.0, points=3001, variant=FilterConfiguration.FILTERED_WITH_INTERFERENCE):
    """Feed reflection group delay in a window of +-span kappa around each resonator."""
    nl = device_netlist(cfg, variant)
    traces = []
    for res in cfg.resonators:
        f0, half = res.omega_r / (2 * np.pi), span * res.kappa / (2 * np.pi)
        resp = s_parameters(nl, FrequencySweep(f0 - half, f0 + half, points))
        traces.append((resp.frequencies, group_delay(resp, (0, 0))))
    return traces


def fit_linewidths(cfg, **kw):
    out = []
    for res, (f, tau) in zip(cfg.resonators, reflection_group_delay(cfg, **kw)):
        fp, tp = peak(f, tau)
        out.append(LinewidthResult(float(fp), float(tp), float(extract_linewidth(tp)),
                                   res.kappa_e / (2 * np.pi)))
    return out


def filter_report(cfg):
    return filter_metrics(cfg.network, cfg.cavity), filter_metrics(cfg.network, cfg.cavity, with_cells=True)


# Readout ---------------------------------------------------------------------

def readout_models(cfg, crosstalk=False):
    pulses = cfg.pulses()
    models = []
    for i, (res, pulse) in enumerate(zip(cfg.resonators, pulses)):
        extra = ()
        if crosstalk:
            from .readout import crosstalk_drives
            extra = crosstalk_drives(i, cfg.resonators, pulses)
        models.append(ReadoutModel(res, pulse, extra))
    return models


def calibration_streams(cfg, shots, threads=1, models=None):
    """Per qubit, heralded streams prepared in 0 and pi."""
    _require_qubits(cfg)
    models = models or readout_models(cfg)
    pulses = cfg.pulses()
    out = []
    for k in range(cfg.n_qubits):
        pair = [simulate_stream(cfg.qubits[k], cfg.resonators[k], pulses[k], p, shots, cfg.noise[k],
                                cfg.schedules[k], qubit_index=k, threads=threads, model=models[k]) for p in (0, 1)]
        out.append(tuple(st.select(st.herald) for st in pair))
    return out


def fit_classifiers(streams):
    clfs = []
    for s0, s1 in streams:
        X = np.concatenate([s0.s, s1.s])
        y = np.concatenate([np.zeros(len(s0), int), np.ones(len(s1), int)])
        clfs.append(GMMStateClassifier().fit(X, y))
    return clfs


def readout_fidelity(cfg, shots, threads=1):
    """Fidelity report per qubit plus the fitted classifiers and streams."""
    streams = calibration_streams(cfg, shots, threads)
    clfs = fit_classifiers(streams)
    reports = [fidelity_report(c.predict(s0.s), c.predict(s1.s), snr=c.snr) for c, (s0, s1) in zip(clfs, streams)]
    return reports, clfs, streams


def joint_assignment(cfg, shots, classifiers, threads=1, min_shots=10_000, models=None):
    """Assignment matrix over all 2^N joint preparations.

    Shots are kept when every qubit's herald passes.
    """
    _require_qubits(cfg)
    n = cfg.n_qubits
    models = models or readout_models(cfg)
    pulses = cfg.pulses()
    assigned = {}
    for prep in itertools.product((0, 1), repeat=n):
        streams = multiplexed_run(cfg.qubits, cfg.resonators, pulses, cfg.noise, prep, shots, cfg.schedules,
                                  threads=threads, models=models)
        keep = np.logical_and.reduce([st.herald for st in streams])
        assigned[prep] = np.stack([clf.predict(st.s[keep]) for clf, st in zip(classifiers, streams)], axis=1)
    return assignment_matrix(assigned, n, min_shots=min_shots)


def histogram_panels(streams, classifiers):
    """Projected signals, fitted mixtures and means per qubit for plotting."""
    panels = []
    for k, ((s0, s1), clf) in enumerate(zip(streams, classifiers)):
        x0, x1 = clf.transform(s0.s)[:, 0], clf.transform(s1.s)[:, 0]
        mix = clf.mixture_
        lo, hi = min(x0.min(), x1.min()), max(x0.max(), x1.max())
        xf = np.linspace(lo, hi, 400)
        panels.append({"title": f"Q{k + 1}", "data": {"0": x0, "π": x1}, "fits": {"mixture": (xf, mix.pdf(xf))},
                       "means": (float(np.mean(x0)), float(np.mean(x1)))})
    return panels


# Dephasing -------------------------------------------------------------------

def dephasing_map(cfg, xi=DEFAULT_XI, noise=0.0, threads=1):
    _require_qubits(cfg)
    return crosstalk_map(cfg.qubits, cfg.resonators, cfg.pulses(), cfg.stray_chi, xi, cfg.echo_interval,
                         noise, cfg.seed, threads)


def dephasing_scan(cfg, driven=0, xi=DEFAULT_XI, noise=0.0):
    """Echo contrast of every qubit versus the amplitude on one resonator."""
    _require_qubits(cfg)
    if not 0 <= driven < cfg.n_qubits:
        raise ConfigError(f"resonator index {driven + 1} out of range")
    pulses = cfg.pulses()
    out = []
    for i in range(cfg.n_qubits):
        seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(i, driven)).generate_state(1)[0])
        exp = pair_experiment(i, driven, cfg.qubits, cfg.resonators, pulses, cfg.stray_chi, xi,
                              cfg.echo_interval, noise, seed)
        out.append(simulate_echo_contrast(exp))
    return out
