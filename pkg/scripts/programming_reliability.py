"""Plan, execute and read back every target from random initial states."""

import argparse
import time

import numpy as np

from rfchain.chain import ChainConfig, all_config_bits
from rfchain.device import Polarity
from rfchain.presets import reference_chain
from rfchain.programming import calibration_sweep, execute_batch, extract_table, plan_sequence, readout_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--initial-states", type=int, default=32)
    args = ap.parse_args()

    chain = reference_chain()
    rng = np.random.default_rng(0)
    table, bandmap = extract_table(calibration_sweep(chain, rng), calibration_sweep(chain, rng, start=Polarity.UP))
    bits = all_config_bits(len(chain))
    plans = [plan_sequence(table, bandmap, ChainConfig.from_array(b)) for b in bits]

    t0 = time.perf_counter()
    ok = total = 0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        for b, seq in zip(bits, plans):
            init = rng.integers(0, 2, (args.initial_states, len(chain))).astype(np.int8)
            got = readout_batch(chain, execute_batch(chain, init, seq, rng))
            ok += int(np.all(got == b, axis=1).sum())
            total += args.initial_states
    print(f"{ok}/{total} programmed correctly ({100 * ok / total:.2f} %), {time.perf_counter() - t0:.1f} s")
    lengths = [len(s) for s in plans]
    print(f"sequence length: min {min(lengths)}, max {max(lengths)}")


if __name__ == "__main__":
    main()
