"""Light-clock round-trip delay and coherence horizon versus ball mass.

    python3 scripts/lightclock_horizon.py [--ratio 0.95] [--length 1.0] > horizon.csv
"""

import argparse
import csv
import sys

import numpy as np

from timedil import lightclock as lc


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ratio", type=float, default=0.95, help="radius ratio a/b")
    p.add_argument("--length", type=float, default=1.0, help="mirror separation, m")
    p.add_argument("--bandwidth", type=float, default=1e12, help="pulse bandwidth, rad/s")
    args = p.parse_args(argv)
    b = 1e-3 * args.length
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["mass [kg]", "round_trip_delay [s]", "split [s]", "dtbar [s]", "coherence_horizon [s]"])
    for M in np.geomspace(1e-15, 1e3, 19):
        spec = lc.LightClockSpec(L=args.length, M=M, radius_a=args.ratio * b, radius_b=b)
        dtbar, split = lc.clock_times(spec)
        horizon = lc.coherence_horizon(args.bandwidth, split, dtbar)
        w.writerow([f"{M:.6g}", f"{lc.superposition_delay(spec):.6g}", f"{split:.6g}", f"{dtbar:.10g}",
                    f"{horizon:.6g}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
