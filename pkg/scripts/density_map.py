"""Density map of all 2048 delta spectra plus the single-Up features."""

import argparse

import numpy as np

from rfchain import artifacts
from rfchain.chain import ChainConfig, delta_spectrum, density_map
from rfchain.presets import reference_chain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bins", type=int, default=120)
    ap.add_argument("--out", default="density_map.csv")
    args = ap.parse_args()

    chain = reference_chain()
    freqs = np.arange(200.0, 701.0, 1.0)
    dm = density_map(chain, freqs, bins=args.bins)
    rows = [(f, dm.edges[b], dm.edges[b + 1], int(dm.counts[i, b])) for i, f in enumerate(freqs) for b in range(args.bins) if dm.counts[i, b]]
    artifacts.write_csv(args.out, ["freq_mhz", "bin_lo", "bin_hi", "count"], rows)

    ref = ChainConfig.all_down(len(chain))
    for j in range(len(chain)):
        v = delta_spectrum(chain, ChainConfig.from_index(1 << j, len(chain)), ref, freqs).values
        k = int(np.argmax(np.abs(v)))
        print(f"device {j + 1:2d} Up: strongest feature {v[k]:+8.2f} uV/mW at {freqs[k]:.0f} MHz")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
