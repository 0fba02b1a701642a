"""Acceptance criteria, one test (or group) per criterion.

The terminal summary prints one [PASS]/[FAIL] line per criterion.
"""

import json
import os
import time

import numpy as np
import pytest

from rfchain.chain import ChainConfig, chain_sensitivity, config_deltas, config_responses, delta_spectrum, density_map
from rfchain.cli import main
from rfchain.datasets import DEFAULT_SCALE, digits_like, drones_like
from rfchain.device import Polarity, PulseSpec, apply_pulse
from rfchain.encoding import EncodingParams, S21Table, dbm_to_mw, encode_features, s21_lookup, tone_frequencies
from rfchain.network import Network, evaluate_pair, exhaustive_search
from rfchain.presets import REFERENCE_TABLE, reference_chain, second_chain
from rfchain.programming import calibration_sweep, execute_batch, extract_table, plan_sequence, readout_batch
from rfchain.chain import all_config_bits
from rfchain.scaling import EnergyAnchor, pulse_duration, switching_energy, threshold_power

from test_chain import FREQS, random_chain

C1 = "programming-table fidelity: 22 write frequencies within 2 MHz, power tiers exact, sweep under 60 s"
C2 = "programming reliability: 2048 targets x 32 initial states x 10 seeds all verified, under 120 s"
C3 = "additivity oracle: composed responses equal direct sums to 1e-12 for 100 random chains"
C4 = "density map: every column sums to 2048 and all-Down maps to zero"
C5 = "switching windows: overlap coin flip 50 +/- 5 %, no sub-threshold switching in 1e5 trials"
C6 = "scaling laws: energy and power ratios, 5 pJ anchor, E = P x tau for a consistent anchor"
C7 = "task retargeting: >= 90 % on each task, <= 70 % cross-task, joint search under 5 min"
C8 = "encoding exactness: tone mW matches the feature law to 1e-12; 64-tone grid ends at 240/600 MHz"
C9 = "determinism: identical manifests give bit-identical artifacts for every command"


@pytest.fixture(scope="module")
def timed_calibration():
    chain = reference_chain()
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    down = calibration_sweep(chain, rng)
    up = calibration_sweep(chain, rng, start=Polarity.UP)
    table, bandmap = extract_table(down, up, n_devices=len(chain))
    return table, bandmap, time.perf_counter() - t0, down


@pytest.mark.criterion(1, C1)
def test_c1_table_fidelity(timed_calibration):
    table, _, elapsed, down = timed_calibration
    assert down.write_freqs.size == 361 and down.powers.size == 6
    assert np.all(np.diff(down.read_freqs) == 1.0)
    got = [(r.freq_up_to_down, r.freq_down_to_up) for r in table.rows]
    for (ud, du, _), (g_ud, g_du) in zip(REFERENCE_TABLE, got):
        assert abs(g_ud - ud) <= 2.0 and abs(g_du - du) <= 2.0
    assert [r.power for r in table.rows] == [2, 2, 2, 2, 5, 5, 5, 7, 7, 10, 10]
    assert elapsed < 60.0


@pytest.mark.criterion(2, C2)
def test_c2_programming_reliability(timed_calibration):
    table, bandmap, _, _ = timed_calibration
    chain = reference_chain()
    bits = all_config_bits(len(chain))
    t0 = time.perf_counter()
    failures = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        for k in range(bits.shape[0]):
            seq = plan_sequence(table, bandmap, ChainConfig.from_array(bits[k]))
            init = rng.integers(0, 2, (32, len(chain))).astype(np.int8)
            final = execute_batch(chain, init, seq, rng)
            failures += int(np.sum(~np.all(readout_batch(chain, final) == bits[k], axis=1)))
    elapsed = time.perf_counter() - t0
    assert failures == 0
    assert elapsed < 120.0


@pytest.mark.criterion(3, C3)
def test_c3_additivity():
    rng = np.random.default_rng(33)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        ch = random_chain(rng, n)
        fast = config_responses(ch, FREQS)
        for k in range(2**n):
            direct = chain_sensitivity(ch, ChainConfig.from_index(k, n), FREQS)
            np.testing.assert_allclose(fast[k], direct, rtol=1e-12, atol=0)


@pytest.mark.criterion(4, C4)
def test_c4_density_map():
    chain = reference_chain()
    freqs = np.arange(200.0, 701.0, 1.0)
    dm = density_map(chain, freqs, bins=200)
    assert np.all(dm.counts.sum(axis=1) == 2048)
    assert np.all(config_deltas(chain, freqs)[0] == 0.0)
    n = len(chain)
    assert np.all(delta_spectrum(chain, ChainConfig.all_down(n), ChainConfig.all_down(n), freqs).values == 0.0)


@pytest.mark.criterion(5, C5)
def test_c5_switching_windows():
    from dataclasses import replace

    dev = replace(reference_chain().devices[0], band_width=20.0)  # windows [250,270] and [265,285]
    rng = np.random.default_rng(5)
    ups = sum(apply_pulse(Polarity.DOWN, dev, PulseSpec(267.0, 2.0), rng) == Polarity.UP for _ in range(1000))
    assert 450 <= ups <= 550

    rng = np.random.default_rng(6)
    freqs = rng.uniform(240.0, 300.0, 100_000)
    powers = rng.uniform(-30.0, dev.p_threshold - 1e-9, 100_000)
    starts = rng.integers(0, 2, 100_000)
    changed = 0
    for f, p, s in zip(freqs, powers, starts):
        changed += apply_pulse(Polarity(int(s)), dev, PulseSpec(float(f), float(p)), rng) != s
    assert changed == 0


@pytest.mark.criterion(6, C6)
def test_c6_scaling():
    a = EnergyAnchor(250.0, 5.0, -11.0, 50.0)
    assert switching_energy(a, 500.0) / switching_energy(a, 250.0) == pytest.approx(2.0, rel=1e-9)
    assert dbm_to_mw(threshold_power(a, 500.0)) / dbm_to_mw(threshold_power(a, 250.0)) == pytest.approx(4.0, rel=1e-9)
    assert switching_energy(a, 250.0) == 5.0
    c = EnergyAnchor.consistent(250.0, -11.0, 50.0)
    for f in (100.0, 250.0, 500.0, 1000.0):
        assert switching_energy(c, f) == pytest.approx(dbm_to_mw(threshold_power(c, f)) * pulse_duration(c, f), rel=1e-9)


@pytest.fixture(scope="module")
def tasks():
    net = Network(reference_chain(), second_chain())
    data = {"digits-like": digits_like(), "drones-like": drones_like()}
    enc = {k: EncodingParams(scale=DEFAULT_SCALE[k]) for k in data}
    return net, data, enc


@pytest.mark.criterion(7, C7)
def test_c7_task_retargeting(tasks):
    net, data, enc = tasks
    assert data["digits-like"].features.shape == (360, 64)
    assert data["drones-like"].features.shape == (200, 256)
    t0 = time.perf_counter()
    best = {k: exhaustive_search(net, ds, enc[k]) for k, ds in data.items()}
    elapsed = time.perf_counter() - t0
    for k, res in best.items():
        assert res.evaluated_pairs == 2048 * 2048
        assert res.best_accuracy >= 0.90, k
    for a, b in (("digits-like", "drones-like"), ("drones-like", "digits-like")):
        cross = evaluate_pair(net, best[a].best_cfg0, best[a].best_cfg1, data[b], enc[b])
        print(f"{a} optimum: {best[a].best_accuracy:.4f} on {a}, {cross:.4f} on {b}")
        assert cross <= 0.70
    assert elapsed < 300.0


@pytest.mark.criterion(8, C8)
def test_c8_encoding_exactness(tasks):
    _, data, enc = tasks
    grid = tone_frequencies(64)
    assert grid[0] == 240.0 and grid[-1] == 600.0
    s21 = S21Table(np.array([200.0, 350.0, 450.0, 700.0]), np.array([-1.5, -2.25, -3.0, -4.5]))
    for name, ds in data.items():
        scale = enc[name].scale
        for i, x in enumerate(ds.features):
            w = encode_features(x, scale, s21, seed=i)
            keep = x > 0
            expected = dbm_to_mw(scale) * (x[keep] / x.max()) * 10 ** (s21_lookup(s21, w.freqs) / 10)
            np.testing.assert_allclose(w.mw, expected, rtol=1e-12, atol=0)


@pytest.mark.criterion(9, C9)
def test_c9_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    commands = [
        ["make-synthetic", "digits-like", "--data-seed", "3", "--out", "digits.csv"],
        ["calibrate", "--chain", "reference-chain", "--seed", "9", "--read-step", "2", "--out", "cal"],
        ["program", "--chain", "reference-chain", "--table", "cal/table.json", "--bandmap", "cal/bandmap.json",
         "--target", "10110011100", "--seed", "4", "--out", "prog"],
        ["program", "--chain", "reference-chain", "--table", "cal/table.json", "--bandmap", "cal/bandmap.json",
         "--sweep-all", "--initial-states", "2", "--seed", "4", "--out", "sweep"],
        ["spectrum", "--chain", "reference-chain", "--config", "10000000001", "--read-power", "-8", "--out", "spec.csv"],
        ["density-map", "--chain", "reference-chain", "--step", "5", "--out", "density.csv"],
        ["encode", "--dataset", "digits.csv", "--scale", "-14", "--seed", "8", "--out", "waves.json"],
        ["train", "--dataset", "digits.csv", "--seed", "0", "--jobs", "JOBS", "--out", "train.json"],
        ["train", "--make-synthetic", "drones-like", "--method", "greedy", "--restarts", "3", "--seed", "5", "--out", "greedy.json"],
        ["evaluate", "--dataset", "digits.csv", "--result", "train.json", "--repeats", "3", "--noise-uv", "0.5",
         "--seed", "2", "--out", "eval.json"],
        ["scaling", "--fmin", "100", "--fmax", "900", "--step", "25", "--out", "scaling.csv"],
    ]
    trees = []
    for run, jobs in (("a", "1"), ("b", "4")):
        d = tmp_path / run
        d.mkdir()
        monkeypatch.chdir(d)
        for argv in commands:
            assert main([jobs if a == "JOBS" else a for a in argv]) == 0, argv
        trees.append({str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()})
    assert trees[0].keys() == trees[1].keys()
    assert len(trees[0]) >= 2 * len(commands)
    for name in trees[0]:
        assert trees[0][name] == trees[1][name], name
