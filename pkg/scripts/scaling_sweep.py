"""Write power, pulse length, energy and field versus frequency, with the dot size on the same axis."""

import argparse
import warnings

import numpy as np

from rfchain.device import diameter_to_frequency
from rfchain.scaling import EnergyAnchor, MaterialParams, scaling_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--consistent", action="store_true", help="derive E_ref from P_ref x tau_ref")
    args = ap.parse_args()

    anchor = EnergyAnchor.consistent(250.0, -11.0, 50.0) if args.consistent else EnergyAnchor()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        anchor.check()
    for w in caught:
        print(f"note: {w.message}")
    sizes = np.array([1000.0, 800.0, 500.0, 300.0, 200.0, 100.0])
    freqs = diameter_to_frequency(sizes)
    print("size_nm  f_MHz    P_dBm   tau_ns   E_pJ    H_T")
    for d, (f, p, tau, e, h) in zip(sizes, scaling_table(anchor, freqs, MaterialParams())):
        print(f"{d:7.0f}  {f:6.1f}  {p:7.2f}  {tau:7.2f}  {e:5.2f}  {h:.2e}")


if __name__ == "__main__":
    main()
