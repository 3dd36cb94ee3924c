"""Fit the behavioral chain parameters that reproduce the reported headline
numbers (33 dBm peak, 13.5 dB gain, 7.5 dB back-off, < 1 dB compression).

The result is written to stdout in the golden.cfg format.  The numbers are
calibration outputs, not predictions.
"""
import numpy as np
from scipy.optimize import least_squares

from qadpa.doherty import DohertyChain, PathModel, SplitFunction, chain_response, metrics

PIN = np.linspace(-10.0, 20.0, 121)
K2 = 1.875
LOW, HIGH = 0.97, 0.05


def build(x):
    gm, ga, pm, pa, centre, width = x
    split = SplitFunction(LOW, HIGH, centre, width)
    return DohertyChain(split, PathModel(gm, pm), PathModel(ga, pa), K2, 0.0)


def residuals(x):
    m = metrics(chain_response(build(x), PIN))
    opbo = m.opbo_db if m.opbo_db is not None else 0.0
    return [
        m.peak_pout_dbm - 33.0,
        m.small_signal_gain_db - 13.5,
        opbo - 7.5,
        5.0 * max(0.0, m.compression_db - 0.8),
    ]


def main():
    x0 = [14.0, 14.0, 26.0, 33.0, 12.0, 3.0]
    sol = least_squares(residuals, x0, bounds=([5, 5, 15, 25, 0, 1], [25, 25, 35, 40, 20, 8]))
    x = np.round(sol.x, 4)
    m = metrics(chain_response(build(x), PIN))
    print(f"# fitted: peak={m.peak_pout_dbm:.4f} gain={m.small_signal_gain_db:.4f} "
          f"opbo={m.opbo_db:.4f} compression={m.compression_db:.4f}")
    print(x.tolist())


if __name__ == "__main__":
    main()
