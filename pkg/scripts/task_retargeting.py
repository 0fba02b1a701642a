"""Search the best configuration pair for each synthetic task and score it on the other."""

import argparse
import json
import time

from rfchain.datasets import DEFAULT_SCALE, SYNTHETIC
from rfchain.encoding import EncodingParams
from rfchain.network import Network, accuracy, exhaustive_search
from rfchain.presets import reference_chain, second_chain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--noise-uv", type=float, default=0.0, help="readout noise for the final scoring")
    ap.add_argument("--out", help="write a JSON summary here")
    args = ap.parse_args()

    net = Network(reference_chain(), second_chain())
    data = {k: gen(seed=args.data_seed) for k, gen in SYNTHETIC.items()}
    enc = {k: EncodingParams(scale=DEFAULT_SCALE[k]) for k in data}
    best = {}
    for k, ds in data.items():
        t0 = time.perf_counter()
        best[k] = exhaustive_search(net, ds, enc[k], n_jobs=args.jobs)
        print(f"{k}: {best[k].best_cfg0} / {best[k].best_cfg1}  {100 * best[k].best_accuracy:.2f} %  ({time.perf_counter() - t0:.1f} s)")

    scored = Network(net.chain0, net.chain1, noise_sigma=args.noise_uv)
    summary = {}
    for a in data:
        for b in data:
            m, s = accuracy(scored, best[a].best_cfg0, best[a].best_cfg1, data[b], enc[b], repeats=3)
            summary[f"{a} config on {b}"] = {"mean": m, "std": s}
            print(f"{a} config on {b}: {100 * m:.2f} +/- {100 * s:.2f} %")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
