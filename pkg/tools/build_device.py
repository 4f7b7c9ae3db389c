"""Regenerate the shipped device file from the published device parameters.

Runs the deterministic circuit calibration, then the per-qubit noise
calibration, and writes src/remux/data/device.json in canonical form.
"""

import sys
from pathlib import Path

import numpy as np

from remux.cavity import calibrate_device
from remux.config import DeviceConfig, save_config
from remux.readout import NoiseModel, QubitParams, ReadoutPulse, ReadoutSchedule, ResonatorParams, calibrate_noise

TWO_PI = 2 * np.pi
GHZ, MHZ, US = 1e9, 1e6, 1e-6

OMEGA_Q = np.array([6.034, 5.658, 6.025, 5.690]) * GHZ
ALPHA = -np.array([221, 218, 221, 217]) * MHZ
OMEGA_R = np.array([9.871, 10.007, 10.139, 10.281]) * GHZ
KAPPA = np.array([0.8, 0.9, 1.6, 1.5]) * MHZ
CHI = -np.array([1.7, 1.3, 1.5, 1.3]) * MHZ
T1 = np.array([49, 50, 52, 47]) * US
T2_STAR = np.array([23, 37, 33, 39]) * US
T2_ECHO = np.array([33, 45, 38, 46]) * US
P_TH = np.array([10.1, 9.5, 10.9, 15.7]) / 100
P_POST = np.array([0.2, 0.6, 0.4, 0.3]) / 100
P_C = np.array([98.4, 98.6, 98.6, 98.7]) / 100

PHOTONS = 1.0
DELAY = 1e-6
# acceptance bands on P(g|0) and P(e|pi), shrunk by 0.1 % for Monte Carlo margin
G_BAND = (0.991, 0.996)
E_BAND = (0.973, 0.982)


def main(out):
    net, cavity, report = calibrate_device(TWO_PI * OMEGA_Q, TWO_PI * ALPHA, TWO_PI * OMEGA_R,
                                           TWO_PI * KAPPA, TWO_PI * CHI)
    print(report.filter, report.filter_with_cells, report.notches.achieved, sep="\n")
    qubits, resonators, noise, schedules = [], [], [], []
    for k in range(len(OMEGA_Q)):
        # internal loss is negligible, so kappa_e = kappa
        res = ResonatorParams(TWO_PI * OMEGA_R[k], TWO_PI * KAPPA[k], TWO_PI * KAPPA[k], TWO_PI * CHI[k])
        qb = QubitParams(TWO_PI * OMEGA_Q[k], TWO_PI * ALPHA[k], T1[k], T2_STAR[k], T2_ECHO[k], P_TH[k])
        pulse = ReadoutPulse(OMEGA_R[k], res.drive_for_photons(PHOTONS))
        cal = calibrate_noise(qb, res, pulse, P_C[k], P_POST[k], DELAY, G_BAND, E_BAND)
        print(f"Q{k + 1}", cal)
        qubits.append(qb)
        resonators.append(res)
        noise.append(NoiseModel(cal.sigma_s, 0))
        schedules.append(ReadoutSchedule(True, DELAY, cal.re_excitation_rate))
    cfg = DeviceConfig(tuple(qubits), tuple(resonators), net, cavity, tuple(noise), tuple(schedules),
                       (PHOTONS,) * len(qubits), stray_chi=np.zeros((4, 4)), seed=0,
                       name="four-qubit multiplexed readout")
    save_config(cfg, out)


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "remux" / "data" / "device.json"
    main(sys.argv[1] if len(sys.argv) > 1 else default)
