"""Command-line interface.

Every command writes its outputs under ``--out-dir`` together with a
``manifest.json`` recording the command, configuration hash, seed and tool
version. Exit codes: 0 ok, 2 configuration error, 3 numeric failure,
4 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, pipeline
from .cavity import FilterConfiguration, design_notches
from .classify import GMMStateClassifier, fidelity_report, state_labels
from .config import config_hash, load_config, parse_quantity, save_config
from .exceptions import ConfigError, RemuxError
from .network import FrequencySweep, purcell_t1_limit, s_parameters
from .plotting import KINDS, heatmap_svg, histogram_svg, plot_csv, trace_svg
from .readout import (
    multiplexed_run,
    read_shots_binary,
    read_shots_csv,
    streams_to_records,
    write_shots_binary,
    write_shots_csv,
)

FIGURES = ("fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6")


@dataclass
class RunManifest:
    command: list
    config_hash: str
    seed: int
    tool_version: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, args, cfg):
        self.dir = Path(args.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(list(args.argv), config_hash(cfg), cfg.seed, __version__, _now())

    def path(self, name):
        p = self.dir / name
        self.manifest.outputs.append(str(p))
        return p

    def finish(self):
        self.manifest.finished = _now()
        self.manifest.write(self.dir / "manifest.json")


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _write_columns(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])


def _freq(text, what):
    """Frequency from a CLI argument; bare numbers are Hz."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return parse_quantity(text, "frequency")
    except ConfigError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _sweep(args):
    return FrequencySweep(_freq(args.start, "--start"), _freq(args.stop, "--stop"), args.points)


def _xi_grid(xi_max, points):
    if points < 4:
        raise ConfigError("--points must be at least 4")
    return tuple(np.linspace(0.0, xi_max, points))


# Commands --------------------------------------------------------------------

def cmd_sparams(args, cfg, run):
    if args.variant == "two-port":
        resp = pipeline.filter_sweep(cfg, _sweep(args))
    else:
        resp = s_parameters(pipeline.device_netlist(cfg, FilterConfiguration(args.variant)), _sweep(args))
    if args.format == "touchstone":
        resp.to_touchstone(run.path(f"sparams.s{resp.n_ports}p"))
    else:
        resp.to_csv(run.path("sparams.csv"))


def cmd_admittance(args, cfg, run):
    sweep = _sweep(args)
    ys = pipeline.environment_admittance(cfg, sweep, args.qubit - 1)
    c_sigma = cfg.network.C_qubit[args.qubit - 1]
    header, cols = ["frequency"], [sweep.frequencies]
    for v, y in ys.items():
        header += [f"re_y_{v.value}", f"im_y_{v.value}", f"t1_{v.value}"]
        cols += [y.real, y.imag, [purcell_t1_limit(max(g, 0.0), c_sigma) for g in y.real]]
    _write_columns(run.path("admittance.csv"), header, cols)
    ratios = pipeline.purcell_ratios(cfg, qubit=args.qubit - 1)
    _write_json(run.path("purcell.json"), ratios)
    print(json.dumps({k: ratios[k] for k in ("unfiltered_over_no_interference",
                                              "interference_over_no_interference")}))


def cmd_fit_linewidth(args, cfg, run):
    traces = pipeline.reflection_group_delay(cfg, span=args.span, points=args.points)
    results = pipeline.fit_linewidths(cfg, span=args.span, points=args.points)
    f = np.concatenate([t[0] for t in traces])
    tau = np.concatenate([t[1] for t in traces])
    _write_columns(run.path("group_delay.csv"), ["frequency", "tau"], [f, tau])
    rows = [{"resonator": k + 1, "frequency": r.frequency, "tau_peak": r.tau_peak, "kappa_e_hz": r.kappa_e,
             "configured_kappa_e_hz": r.configured, "ratio": r.kappa_e / r.configured}
            for k, r in enumerate(results)]
    _write_json(run.path("linewidths.json"), rows)
    for r in rows:
        print(f"R{r['resonator']}: f = {r['frequency'] / 1e9:.6f} GHz, kappa_e/2pi = {r['kappa_e_hz'] / 1e6:.4f} MHz "
              f"(configured {r['configured_kappa_e_hz'] / 1e6:.4f} MHz)")


def cmd_design_notch(args, cfg, run):
    targets = tuple(_freq(t, "--targets") for t in args.targets.split(","))
    net, result = design_notches(cfg.network, cfg.cavity, targets)
    data = {"targets": result.targets, "achieved": result.achieved, "rejection_db": result.rejection_db,
            "objective": result.objective, "values": result.values, "f_cross_ref": cfg.network.f_cross_ref}
    _write_json(run.path("notch.json"), data)
    with open(run.path("objective_trace.csv"), "w", encoding="utf-8") as fh:
        names = list(result.values)
        fh.write("evaluation," + ",".join(names) + ",objective\n")
        for k, (vals, obj) in enumerate(result.trace):
            fh.write(f"{k}," + ",".join(f"{v:.12g}" for v in vals) + f",{obj:.12g}\n")
    save_config(replace(cfg, network=net), run.path("device.json"))
    for t, a, d in zip(result.targets, result.achieved, result.rejection_db):
        print(f"target {t / 1e9:.4f} GHz -> zero at {a / 1e9:.6f} GHz, rejection {d:.1f} dB")


def _prep_bits(text, n):
    if len(text) != n or set(text) - {"0", "1"}:
        raise ConfigError(f"--prepared must be {n} characters of 0/1, got {text!r}")
    return tuple(int(c) for c in text)


def cmd_readout(args, cfg, run):
    models = pipeline.readout_models(cfg, crosstalk=args.crosstalk)
    preps = args.prepared or ["0" * cfg.n_qubits, "1" * cfg.n_qubits]
    parts, offset = [], 0
    for text in preps:
        streams = multiplexed_run(cfg.qubits, cfg.resonators, cfg.pulses(), cfg.noise, _prep_bits(text, cfg.n_qubits),
                                  args.shots, cfg.schedules, threads=args.threads, models=models)
        rec = streams_to_records(streams)
        rec["shot_id"] += offset
        offset += args.shots
        parts.append(rec)
    records = np.concatenate(parts)
    if args.format == "bin":
        write_shots_binary(run.path("shots.bin"), records)
    else:
        write_shots_csv(run.path("shots.csv"), records)
    print(f"wrote {len(records)} records for preparations {', '.join(preps)}")


def _read_shots(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"shot file {path} does not exist")
    with open(p, "rb") as fh:
        head = fh.read(8)
    return read_shots_binary(p) if head.startswith(b"RMXSHOT") else read_shots_csv(p)


def cmd_classify(args, cfg, run):
    rec = _read_shots(args.shots)
    rec = rec[rec["herald"] == 1]
    report = {}
    for q in np.unique(rec["qubit"]):
        r = rec[rec["qubit"] == q]
        s = r["re_s"] + 1j * r["im_s"]
        y = r["prepared"].astype(int)
        clf = GMMStateClassifier().fit(s, y)
        a = clf.predict(s)
        fid = fidelity_report(a[y == 0], a[y == 1], snr=clf.snr)
        report[f"Q{q + 1}"] = fid.to_dict() | {"threshold": clf.axis_.threshold,
                                              "axis": [clf.axis_.direction.real, clf.axis_.direction.imag]}
    if not report:
        raise ConfigError(f"{args.shots} holds no heralded shots")
    report["mean_P_c"] = float(np.mean([v["P_c"] for v in report.values()]))
    _write_json(run.path(args.out), report)
    for k, v in report.items():
        if k != "mean_P_c":
            print(f"{k}: P(g|0) = {v['P(g|0)']:.4f}, P(e|pi) = {v['P(e|pi)']:.4f}, P_c = {v['P_c']:.4f}, "
                  f"SNR = {v['SNR']:.3f}")
    print(f"mean P_c = {report['mean_P_c']:.4f}")


def cmd_assignment_matrix(args, cfg, run):
    reports, clfs, _ = pipeline.readout_fidelity(cfg, args.calibration_shots, args.threads)
    A = pipeline.joint_assignment(cfg, args.shots, clfs, args.threads, min_shots=min(args.shots, 10_000) // 2)
    A.to_csv(run.path("assignment_matrix.csv"))
    _matrix_svg(A, cfg, run.path("assignment_matrix.svg"))
    p_c = [r.p_c for r in reports]
    diag = A.diagnostics(p_c)
    _write_json(run.path("assignment_diagnostics.json"), diag | {"marginal_P_c": p_c})
    print(json.dumps(diag, default=_json_default))


def _matrix_svg(A, cfg, path):
    order = " ".join(f"Q{k + 1}" for k in range(cfg.n_qubits))
    heatmap_svg(A.matrix, state_labels(cfg.n_qubits, prepared=True), state_labels(cfg.n_qubits), path,
                xlabel=f"assigned ({order})", ylabel=f"prepared ({order})")


def _map_svg(cmap, path):
    n = cmap.gamma.shape[0]
    heatmap_svg(cmap.gamma / 1e3, [f"Q{i + 1}" for i in range(n)], [f"R{j + 1}" for j in range(n)], path,
                xlabel="driven resonator", ylabel="qubit", title="Gamma (kHz)")


def cmd_dephasing_scan(args, cfg, run):
    """Crosstalk map over all pairs plus the echo contrast scan on one resonator."""
    xi = _xi_grid(args.xi_max, args.points)
    cmap = pipeline.dephasing_map(cfg, xi, args.noise, args.threads)
    out = run.path(args.out)
    cmap.to_csv(out)
    _map_svg(cmap, run.path(Path(args.out).with_suffix(".svg").name))
    _write_json(run.path(Path(args.out).stem + "_fit.json"), {
        "gamma": cmap.gamma, "gamma_err": cmap.errors, "gamma_bound": cmap.gamma + 2 * cmap.errors,
        "predicted": cmap.predicted,
        "failures": {f"Q{i + 1}R{j + 1}": m for (i, j), m in cmap.failures.items()}})
    echoes = pipeline.dephasing_scan(cfg, args.resonator - 1, xi, args.noise)
    names = [f"Q{i + 1}" for i in range(len(echoes))]
    _write_columns(run.path("echo_contrast.csv"), ["xi", *names], [np.asarray(xi), *[e.contrast for e in echoes]])
    for i, name in enumerate(names):
        row = ", ".join(f"R{j + 1} {g:.4g}" for j, g in enumerate(cmap.gamma[i]))
        print(f"{name}: Gamma (1/s) {row}")


def cmd_plot(args, cfg, run):
    out = run.path(args.out or (Path(args.input).stem + ".svg"))
    plot_csv(args.input, args.kind, out)


# Reproduction recipes ------------------------------------------------------------

def cmd_reproduce(args, cfg, run):
    fig = args.figure
    if fig == "fig2a":
        resp = pipeline.filter_sweep(cfg)
        f = resp.frequencies
        s21 = 20 * np.log10(np.abs(resp.s[:, 1, 0]))
        s11 = 20 * np.log10(np.abs(resp.s[:, 0, 0]))
        _write_columns(run.path("fig2a.csv"), ["frequency", "s21_db", "s11_db"], [f, s21, s11])
        trace_svg(f / 1e9, [s21, s11], ["|S21|", "|S11|"], run.path("fig2a.svg"), "frequency (GHz)", "dB")
    elif fig == "fig2b":
        sweep = FrequencySweep(4e9, 9e9, 1001)
        ys = pipeline.environment_admittance(cfg, sweep)
        names = [v.value for v in ys]
        re = [np.abs(y.real) for y in ys.values()]
        _write_columns(run.path("fig2b.csv"), ["frequency", *names], [sweep.frequencies, *re])
        trace_svg(sweep.frequencies / 1e9, np.log10(np.maximum(re, 1e-300)), names, run.path("fig2b.svg"),
                  "frequency (GHz)", "log10 Re Y (S)", markers=(5.5, 7.7))
    elif fig == "fig3":
        nl = pipeline.device_netlist(cfg)
        sweep = FrequencySweep(9.7e9, 10.45e9, 15001)
        from .network import group_delay

        tau = group_delay(s_parameters(nl, sweep), (0, 0))
        _write_columns(run.path("fig3.csv"), ["frequency", "tau"], [sweep.frequencies, tau])
        trace_svg(sweep.frequencies / 1e9, tau * 1e9, ["tau_D"], run.path("fig3.svg"), "frequency (GHz)",
                  "group delay (ns)", markers=[r.omega_r / 2 / np.pi / 1e9 for r in cfg.resonators])
    elif fig == "fig4":
        reports, clfs, streams = pipeline.readout_fidelity(cfg, args.shots, args.threads)
        panels = pipeline.histogram_panels(streams, clfs)
        with open(run.path("fig4.csv"), "w", encoding="utf-8") as fh:
            fh.write("qubit,prepared,projected_s\n")
            for p in panels:
                for prep, x in p["data"].items():
                    for v in x:
                        fh.write(f"{p['title']},{'1' if prep == 'π' else '0'},{v:.12g}\n")
        histogram_svg(panels, run.path("fig4.svg"))
        _write_json(run.path("fig4_fidelity.json"), {f"Q{k + 1}": r.to_dict() for k, r in enumerate(reports)})
    elif fig == "fig5":
        reports, clfs, _ = pipeline.readout_fidelity(cfg, args.shots, args.threads)
        A = pipeline.joint_assignment(cfg, args.shots, clfs, args.threads, min_shots=min(args.shots, 10_000) // 2)
        A.to_csv(run.path("fig5.csv"))
        _matrix_svg(A, cfg, run.path("fig5.svg"))
        _write_json(run.path("fig5_diagnostics.json"), A.diagnostics([r.p_c for r in reports]))
    elif fig == "fig6":
        xi = pipeline.DEFAULT_XI
        echoes = pipeline.dephasing_scan(cfg, 0, xi)
        names = [f"Q{i + 1}" for i in range(len(echoes))]
        c = [e.contrast / e.contrast[0] for e in echoes]
        _write_columns(run.path("fig6a.csv"), ["xi", *names], [np.asarray(xi), *c])
        trace_svg(xi, c, names, run.path("fig6a.svg"), "xi", "c / c0")
        cmap = pipeline.dephasing_map(cfg, xi, threads=args.threads)
        cmap.to_csv(run.path("fig6b.csv"))
        _map_svg(cmap, run.path("fig6b.svg"))


# Parser ------------------------------------------------------------------------

def build_parser():
    def global_flags(defaults):
        # subcommands repeat the flags without defaults so they never mask values given earlier
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        g.add_argument("--seed", type=int, default=d(None), help="override the device seed")
        g.add_argument("--device", default=d(None), help="device JSON (default: shipped device)")
        g.add_argument("--out-dir", default=d("."), help="output directory")
        g.add_argument("--threads", type=int, default=d(1), help="worker threads")
        return g

    common = global_flags(False)
    p = argparse.ArgumentParser(prog="remux", parents=[global_flags(True)],
                                description="Multiplexed dispersive readout toolkit")
    p.add_argument("--version", action="version", version=f"remux {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn)
        return sp

    def sweep_args(sp, start, stop, points):
        sp.add_argument("--start", default=start)
        sp.add_argument("--stop", default=stop)
        sp.add_argument("--points", type=int, default=points)

    sp = add("sparams", cmd_sparams, "S-parameters of a netlist variant")
    sp.add_argument("--variant", default="two-port", choices=["two-port", *[v.value for v in FilterConfiguration]])
    sp.add_argument("--format", default="touchstone", choices=["touchstone", "csv"])
    sweep_args(sp, "5 GHz", "14 GHz", 1801)

    sp = add("admittance", cmd_admittance, "environment admittance seen by a qubit")
    sp.add_argument("--qubit", type=int, default=1)
    sweep_args(sp, "4 GHz", "9 GHz", 1001)

    sp = add("fit-linewidth", cmd_fit_linewidth, "kappa_e from reflection group delay")
    sp.add_argument("--span", type=float, default=6.0, help="half window in linewidths")
    sp.add_argument("--points", type=int, default=3001)

    sp = add("design-notch", cmd_design_notch, "place transmission zeros with the cross couplings")
    sp.add_argument("--targets", default="5.5e9,7.7e9", help="comma-separated frequencies (Hz or with unit)")

    sp = add("readout", cmd_readout, "simulate multiplexed single-shot readout")
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--prepared", action="append", default=None, help="joint preparation, Q1 first (repeatable)")
    sp.add_argument("--format", default="csv", choices=["csv", "bin"])
    sp.add_argument("--crosstalk", action="store_true", default=False)

    sp = add("classify", cmd_classify, "GMM classification and fidelity of a shot file")
    sp.add_argument("--shots", required=True, help="shot file (CSV or binary)")
    sp.add_argument("--out", default="report.json")

    sp = add("assignment-matrix", cmd_assignment_matrix, "joint assignment matrix")
    sp.add_argument("--shots", type=int, default=20_000, help="shots per joint preparation")
    sp.add_argument("--calibration-shots", type=int, default=50_000)

    sp = add("dephasing-scan", cmd_dephasing_scan, "measurement-induced dephasing echo scan")
    sp.add_argument("--resonator", type=int, default=1, help="resonator of the contrast scan")
    sp.add_argument("--xi-max", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=12)
    sp.add_argument("--noise", type=float, default=0.0, help="additive noise on each contrast sample")
    sp.add_argument("--out", default="map.csv")

    sp = add("reproduce", cmd_reproduce, "regenerate a figure bundle")
    sp.add_argument("figure", choices=FIGURES)
    sp.add_argument("--shots", type=int, default=20_000)

    sp = add("plot", cmd_plot, "render a CSV file as SVG")
    sp.add_argument("input")
    sp.add_argument("--kind", required=True, choices=KINDS)
    sp.add_argument("--out", default=None)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = ["remux", *argv]
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = load_config(args.device)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        run = Run(args, cfg)
        t0 = time.perf_counter()
        args.func(args, cfg, run)
        run.finish()
        print(f"done in {time.perf_counter() - t0:.1f} s; outputs in {run.dir}", file=sys.stderr)
    except RemuxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
