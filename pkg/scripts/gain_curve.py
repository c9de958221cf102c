"""Instability time and visibility of the amplified interferometer versus
gain, for all three variance models.

    python3 scripts/gain_curve.py [--max-db 220] [--steps 45] > gain.csv
"""

import argparse
import csv
import sys

import numpy as np

from timedil import interferometer as itf


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-db", type=float, default=220.0)
    p.add_argument("--steps", type=int, default=45)
    p.add_argument("--bph", type=float, default=2 * np.pi * 1e7, help="photon bandwidth, rad/s")
    p.add_argument("--ba", type=float, default=2 * np.pi * 300, help="amplifier bandwidth, rad/s")
    args = p.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["gain_dB [dB]", "visibility", "tau_asymptotic [s]", "tau_exact [s]", "tau_normalized [s]"])
    for db in np.linspace(0.0, args.max_db, args.steps):
        G = 10 ** (db / 10)
        w.writerow([f"{db:.6g}", f"{itf.visibility(args.bph, args.ba, G):.6g}"]
                   + [f"{itf.tau_vs_gain(G, model=m):.6g}" for m in ("asymptotic", "exact", "normalized")])
    print(f"# critical gain for 1 us: {itf.critical_gain(1e-6):.2f} dB (asymptotic model), "
          f"{itf.critical_gain(1e-6, model='exact'):.2f} dB (exact)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
