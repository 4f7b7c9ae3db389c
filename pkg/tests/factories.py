"""Random instance generators shared by the property tests and the acceptance run."""

import numpy as np

from remux.network import Netlist, Port, _port_admittance, capacitor, inductor, resistor, s_from_y, tline

FREQS = 2 * np.pi * np.array([0.7e9, 2.3e9, 4.1e9, 6.6e9])


def random_netlist(rng, lossless=False, nodes=6, ports=2):
    """Connected RLC network with an optional transmission line."""
    kinds = ["capacitor", "inductor"] + ([] if lossless else ["resistor"])

    def make(a, b):
        k = kinds[rng.integers(len(kinds))]
        if k == "capacitor":
            return capacitor(a, b, 10 ** rng.uniform(-14, -11))
        if k == "inductor":
            return inductor(a, b, 10 ** rng.uniform(-10, -7))
        return resistor(a, b, 10 ** rng.uniform(0, 4))

    # a chain to ground keeps every node connected
    elements = [make(n, int(rng.integers(0, n))) for n in range(1, nodes + 1)]
    for _ in range(nodes):
        a, b = rng.choice(nodes + 1, 2, replace=False)
        elements.append(make(int(a), int(b)))
    if rng.random() < 0.5:
        a, b = rng.choice(np.arange(1, nodes + 1), 2, replace=False)
        elements.append(tline(int(a), int(b), rng.uniform(20, 80), rng.uniform(0.2, 1.2), 5e9))
    z = [float(v) for v in rng.uniform(25, 100, ports)]
    return Netlist(elements, [Port(k + 1, z[k]) for k in range(ports)], nodes)


def s_at(nl, omegas=FREQS):
    return s_from_y(_port_admittance(nl, omegas), [p.z_ref for p in nl.ports], omegas)


def gaussian_shots(snr, n, rng, center=0.3 - 0.2j, direction=np.exp(0.7j), sigma=1.0):
    """Two IQ blobs ``snr * sigma`` apart, n shots each, labels 0 then 1."""
    half = 0.5 * snr * sigma * direction
    X = np.concatenate([center - half + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n)),
                        center + half + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))])
    return X, np.r_[np.zeros(n, int), np.ones(n, int)]
