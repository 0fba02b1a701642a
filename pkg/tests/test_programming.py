import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfchain.chain import Chain, ChainConfig, device_signatures
from rfchain.device import Polarity, PulseSpec, switching_band
from rfchain.encoding import dbm_to_mw
from rfchain.presets import REFERENCE_TABLE, overlapping_pair, reference_chain
from rfchain.programming import (
    DOWN_TO_UP,
    UP_TO_DOWN,
    Band,
    BandMap,
    CalibrationError,
    PlanningError,
    ProgrammingTable,
    PulseSequence,
    ReadoutError,
    TableRow,
    _set_admissible,
    calibration_sweep,
    check_reset,
    execute,
    execute_batch,
    extract_table,
    plan_sequence,
    readout_batch,
    readout_config,
    selectivity_violations,
)
from rfchain.chain import all_config_bits

UP_TO_DOWN_FREQS = [r[0] for r in REFERENCE_TABLE]
DOWN_TO_UP_FREQS = [r[1] for r in REFERENCE_TABLE]


def truth_bandmap(chain: Chain) -> BandMap:
    """Band map read straight off the device parameters (oracle for the planner)."""
    bands = {}
    for d in chain.devices:
        for state, direction in ((Polarity.DOWN, DOWN_TO_UP), (Polarity.UP, UP_TO_DOWN)):
            lo, hi = switching_band(d, state, d.p_threshold)
            bands[(d.id, direction)] = Band(lo, hi, d.p_threshold)
    return BandMap(bands)


def table_1() -> ProgrammingTable:
    return ProgrammingTable(tuple(TableRow(k + 1, float(u), float(d), float(p)) for k, (u, d, p) in enumerate(REFERENCE_TABLE)))


# ------------------------------------------------------------- calibration


def test_far_column_is_zero(sweeps):
    down, _ = sweeps
    i = int(np.flatnonzero(down.write_freqs == 600.0)[0])
    assert not down.changed[:, i].any()
    assert np.all(down.stitched[i] == 0)


def test_275_column_is_device_1_signature(chain, sweeps):
    down, _ = sweeps
    i = int(np.flatnonzero(down.write_freqs == 275.0)[0])
    expected = device_signatures(chain, down.read_freqs)[0] * dbm_to_mw(-8.0)
    assert down.stitched_power[i] == 2.0
    np.testing.assert_allclose(down.stitched[i], expected, rtol=1e-12, atol=1e-12)


def test_single_device_one_contiguous_region():
    from dataclasses import replace

    ch = Chain((replace(reference_chain().devices[3], id=1),))
    cmap = calibration_sweep(ch, np.random.default_rng(0))
    hit = np.flatnonzero(cmap.stitched.any(axis=1))
    assert hit.size > 0 and np.all(np.diff(hit) == 1)
    assert cmap.write_freqs[hit[0]] == 320.0 and cmap.write_freqs[hit[-1]] == 330.0


def test_stitched_power_is_lowest_change(sweeps):
    down, _ = sweeps
    for i in range(down.write_freqs.size):
        hit = np.flatnonzero(down.changed[:, i])
        if hit.size:
            assert down.stitched_power[i] == down.powers[hit[0]]
        else:
            assert np.isnan(down.stitched_power[i])


def test_carry_over_mode_differs_from_reset_mode(chain):
    a = calibration_sweep(chain, np.random.default_rng(0), field_reset=True)
    b = calibration_sweep(chain, np.random.default_rng(0), field_reset=False)
    assert not np.array_equal(a.maps, b.maps)


# ---------------------------------------------------------------- extraction


def test_table_matches_reference(calibrated):
    table, bandmap = calibrated
    assert [r.freq_down_to_up for r in table.rows] == pytest.approx(DOWN_TO_UP_FREQS, abs=2.0)
    assert [r.freq_up_to_down for r in table.rows] == pytest.approx(UP_TO_DOWN_FREQS, abs=2.0)
    assert [r.power for r in table.rows] == [2.0, 2.0, 2.0, 2.0, 5.0, 5.0, 5.0, 7.0, 7.0, 10.0, 10.0]


def test_powers_are_smallest_swept_above_threshold(chain, calibrated):
    table, _ = calibrated
    swept = (2.0, 3.0, 5.0, 7.0, 10.0, 13.0)
    for d, r in zip(chain.devices, table.rows):
        assert r.power == min(p for p in swept if p >= d.p_threshold)


def test_extracted_bands_match_device_windows(chain, calibrated):
    _, bandmap = calibrated
    truth = truth_bandmap(chain)
    for key, band in bandmap.bands.items():
        t = truth.bands[key]
        # the sweep samples integer MHz; the band is the sampled extent of the window
        assert t.f_lo <= band.f_lo < t.f_lo + 1 and t.f_hi - 1 < band.f_hi <= t.f_hi


def test_selectivity_invariant(calibrated):
    table, bandmap = calibrated
    assert selectivity_violations(table, bandmap) == []


def test_same_device_bands_disjoint(calibrated):
    _, bandmap = calibrated
    for i in bandmap.device_ids:
        a, b = bandmap.band(i, DOWN_TO_UP), bandmap.band(i, UP_TO_DOWN)
        assert a.f_hi < b.f_lo or b.f_hi < a.f_lo


def test_partial_overlap_picks_clean_subinterval():
    ch = overlapping_pair("partial")
    rng = np.random.default_rng(3)
    table, bandmap = extract_table(calibration_sweep(ch, rng), calibration_sweep(ch, rng, start=Polarity.UP))
    d1, d2 = ch.devices
    b1 = switching_band(d1, Polarity.DOWN, 2.0)
    b2 = switching_band(d2, Polarity.DOWN, 2.0)
    assert b1[1] >= b2[0]  # the windows really overlap
    f1, f2 = table.row(1).freq_down_to_up, table.row(2).freq_down_to_up
    assert b1[0] <= f1 < b2[0]
    assert b1[1] < f2 <= b2[1]
    assert selectivity_violations(table, bandmap) == []
    # every listed frequency writes exactly one device
    for r in table.rows:
        state = [Polarity.DOWN, Polarity.DOWN]
        from rfchain.device import apply_pulse

        out = [apply_pulse(s, d, PulseSpec(r.freq_down_to_up, r.power), rng) for s, d in zip(state, ch.devices)]
        assert [int(o) for o in out] == [int(d.id == r.id) for d in ch.devices]


def test_full_overlap_fails_explicitly():
    ch = overlapping_pair("full")
    rng = np.random.default_rng(3)
    with pytest.raises(CalibrationError):
        extract_table(calibration_sweep(ch, rng), calibration_sweep(ch, rng, start=Polarity.UP))


def test_indistinguishable_devices_fail():
    d = reference_chain().devices[0]
    from dataclasses import replace

    ch = Chain((d, replace(d, id=2)))
    rng = np.random.default_rng(0)
    with pytest.raises(CalibrationError):
        extract_table(calibration_sweep(ch, rng), calibration_sweep(ch, rng, start=Polarity.UP), n_devices=2)


def test_table_and_bandmap_json_roundtrip(calibrated):
    table, bandmap = calibrated
    t2 = ProgrammingTable.from_dict(json.loads(table.to_json()))
    assert t2 == table
    assert BandMap.from_dict(json.loads(json.dumps(bandmap.to_dict()))).bands == bandmap.bands


# ------------------------------------------------------------------ planning


def test_all_down_plan_is_descending_reset(calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.all_down(11))
    assert [p.frequency for p in seq] == pytest.approx(sorted(UP_TO_DOWN_FREQS, reverse=True), abs=2.0)
    assert all(p.phase == "reset" and p.direction == UP_TO_DOWN for p in seq)
    fs = [p.frequency for p in seq]
    assert all(a > b for a, b in zip(fs, fs[1:]))


def test_single_device_target(calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.from_string("10000000000"))
    assert len(seq) == 12
    last = seq.pulses[-1]
    assert last.frequency == pytest.approx(275.0, abs=2.0) and last.power == 2.0
    assert last.device == 1 and last.phase == "set"
    assert all(p.duration == 0.5 for p in seq)


def test_plan_is_state_oblivious(calibrated):
    table, bandmap = calibrated
    t = ChainConfig.from_string("01100101101")
    a = plan_sequence(table, bandmap, t)
    assert a == plan_sequence(table, bandmap, t)
    assert len(a) == 11 + 6


def test_reset_phase_alone_gives_all_down(chain, calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.all_down(11))
    rng = np.random.default_rng(0)
    starts = all_config_bits(11)
    out = execute_batch(chain, starts, seq, rng)
    assert not out.any()


def test_reference_table_plans_on_truth_bands(chain):
    bandmap = truth_bandmap(chain)
    assert check_reset(bandmap, plan_sequence(table_1(), bandmap, ChainConfig.all_down(11)).pulses, list(range(1, 12))) == []


def test_selectivity_of_every_pulse(chain, calibrated):
    """Each planned pulse flips at most its own device when applied to the tracked state."""
    table, bandmap = calibrated
    rng = np.random.default_rng(5)
    for k in rng.choice(2048, size=64, replace=False):
        target = ChainConfig.from_index(int(k), 11)
        seq = plan_sequence(table, bandmap, target)
        state = ChainConfig.all_down(11)
        for p in seq:
            if p.phase != "set":
                continue
            nxt = execute(chain, state, PulseSequence((p,)), rng)
            changed = [i + 1 for i, (a, b) in enumerate(zip(state.bits, nxt.bits)) if a != b]
            assert changed == [p.device]
            state = nxt
        assert state == target


def test_all_up_needs_reordering(calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.all_up(11))
    order = [p.device for p in seq if p.phase == "set"]
    assert sorted(order) == list(range(1, 12))
    assert order != sorted(order, reverse=True)


def test_unreachable_target_reports_pairs():
    # each device's set frequency lies inside the other's Up->Down band, so
    # whichever device is set first is knocked back down by the second pulse
    bands = {
        (1, DOWN_TO_UP): Band(270.0, 280.0, 2.0),
        (1, UP_TO_DOWN): Band(299.0, 310.0, 2.0),
        (2, DOWN_TO_UP): Band(298.0, 302.0, 2.0),
        (2, UP_TO_DOWN): Band(260.0, 276.0, 2.0),
    }
    table = ProgrammingTable((TableRow(1, 308.0, 275.0, 2.0), TableRow(2, 262.0, 300.0, 2.0)))
    bm = BandMap(bands)
    for t in ("00", "10", "01"):
        plan_sequence(table, bm, ChainConfig.from_string(t))
    with pytest.raises(PlanningError) as exc:
        plan_sequence(table, bm, ChainConfig.from_string("11"))
    assert sorted(exc.value.conflicts) == [(1, 2), (2, 1)]


def test_sequence_json_roundtrip(calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.from_string("10110011101"))
    back = PulseSequence.from_dict(json.loads(json.dumps(seq.to_dict())))
    assert back == seq


def test_plan_rejects_wrong_length(calibrated):
    table, bandmap = calibrated
    with pytest.raises(ValueError):
        plan_sequence(table, bandmap, ChainConfig.from_string("101"))


@pytest.mark.parametrize("width", [10.0, 14.0, 18.0, 23.0])
def test_descending_order_validates_above_lower_bands(width):
    """With widened windows, the descending set order passes validation for
    every target whose pulses clear the bands of all lower-indexed devices
    and miss the bands of all higher-indexed ones."""
    ch = reference_chain(band_width=width)
    bm = truth_bandmap(ch)
    table = table_1()
    ids = list(range(1, 12))
    held = 0
    for k in range(2048):
        target = ChainConfig.from_index(k, 11)
        want = sorted((r for r, b in zip(table.rows, target.bits) if b == Polarity.UP), key=lambda r: -r.freq_down_to_up)
        ok = True
        for r in want:
            f, p = r.freq_down_to_up, r.power
            below = [bm.band(j, d) for j in ids if j < r.id for d in (DOWN_TO_UP, UP_TO_DOWN)]
            above = [bm.band(j, d) for j in ids if j > r.id for d in (DOWN_TO_UP, UP_TO_DOWN)]
            if any(b.f_hi >= f and p >= b.power for b in below) or any(b.contains(f, p) for b in above):
                ok = False
                break
        if not ok:
            continue
        held += 1
        up = frozenset()
        from rfchain.programming import PlannedPulse

        for r in want:
            pulse = PlannedPulse(r.freq_down_to_up, r.power, 0.5, r.id, DOWN_TO_UP, "set")
            assert _set_admissible(bm, pulse, up, ids) is None
            up = up | {r.id}
    assert held > 0


# -------------------------------------------------------- execution/readout


def test_single_275_pulse_flips_only_device_1(chain):
    out = execute(chain, ChainConfig.all_down(11), PulseSequence((_pulse(275.0, 2.0),)), np.random.default_rng(0))
    assert str(out) == "10000000000"


def _pulse(f, p):
    from rfchain.programming import PlannedPulse

    return PlannedPulse(f, p, 0.5, 0, DOWN_TO_UP, "set")


def test_reset_only_from_all_up(chain, calibrated):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.all_down(11))
    assert execute(chain, ChainConfig.all_up(11), seq, np.random.default_rng(0)) == ChainConfig.all_down(11)


def test_roundtrip_10000000000(chain, calibrated):
    table, bandmap = calibrated
    t = ChainConfig.from_string("10000000000")
    state = execute(chain, ChainConfig.from_string("01101100111"), plan_sequence(table, bandmap, t), np.random.default_rng(1))
    assert readout_config(chain, state) == t


def test_readout_every_config(chain):
    assert str(readout_config(chain, ChainConfig.all_down(11))) == "00000000000"
    bits = all_config_bits(11)
    assert np.array_equal(readout_batch(chain, bits), bits)


def test_readout_rejects_dependent_signatures():
    d = reference_chain().devices[0]
    from dataclasses import replace

    ch = Chain((d, replace(d, id=2)))
    with pytest.raises(ReadoutError):
        readout_config(ch, ChainConfig.from_string("10"))


@settings(max_examples=20)
@given(st.integers(0, 2047), st.integers(0, 2047), st.integers(0, 2**31))
def test_scalar_and_batch_execution_agree(chain, calibrated, target, start, seed):
    table, bandmap = calibrated
    seq = plan_sequence(table, bandmap, ChainConfig.from_index(target, 11))
    a = execute(chain, ChainConfig.from_index(start, 11), seq, np.random.default_rng(seed))
    b = execute_batch(chain, ChainConfig.from_index(start, 11).as_array()[None, :], seq, np.random.default_rng(seed))
    assert a.index() == target
    assert np.array_equal(b[0], a.as_array())


def test_execute_batch_coin_flip_in_overlap():
    from dataclasses import replace

    d = replace(reference_chain().devices[0], band_width=20.0)
    ch = Chain((d,))
    seq = PulseSequence((_pulse(267.5, 2.0),))
    out = execute_batch(ch, np.zeros((1000, 1), dtype=np.int8), seq, np.random.default_rng(0))
    assert 450 <= int(out.sum()) <= 550
