"""Calibration sweep, programming-table extraction, pulse planning and
broadcast execution for a chain on one strip line."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .chain import Chain, ChainConfig, device_signatures
from .device import MIN_PULSE_DURATION, Polarity, PulseSpec, apply_pulse
from .encoding import dbm_to_mw

WRITE_FREQS = np.arange(240.0, 601.0, 1.0)
WRITE_POWERS = (2.0, 3.0, 5.0, 7.0, 10.0, 13.0)
READ_FREQS = np.arange(200.0, 701.0, 1.0)
READ_POWER = -8.0
PULSE_DURATION = 0.5

DOWN_TO_UP = "down_to_up"
UP_TO_DOWN = "up_to_down"
DIRECTIONS = (DOWN_TO_UP, UP_TO_DOWN)


class CalibrationError(RuntimeError):
    pass


class PlanningError(RuntimeError):
    def __init__(self, message, conflicts=()):
        super().__init__(message)
        self.conflicts = list(conflicts)


class ReadoutError(RuntimeError):
    pass


def _direction_from(p: Polarity) -> str:
    return DOWN_TO_UP if p == Polarity.DOWN else UP_TO_DOWN


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class CalibrationMap:
    """Raw sweep result. ``maps[k, i]`` is the read-out delta (uV) after a
    pulse at ``write_freqs[i]`` and ``powers[k]``; ``stitched`` keeps, per
    write frequency, the column at the lowest power that changed the state."""

    write_freqs: np.ndarray
    read_freqs: np.ndarray
    powers: np.ndarray
    start: Polarity
    read_power: float
    maps: np.ndarray  # (P, W, R)
    changed: np.ndarray  # (P, W) bool
    stitched: np.ndarray  # (W, R)
    stitched_power: np.ndarray  # (W,), nan where nothing switched


def calibration_sweep(
    chain: Chain,
    rng: np.random.Generator,
    write_freqs=WRITE_FREQS,
    powers=WRITE_POWERS,
    read_freqs=READ_FREQS,
    read_power: float = READ_POWER,
    start: Polarity = Polarity.DOWN,
    field_reset: bool = True,
    duration: float = PULSE_DURATION,
) -> CalibrationMap:
    """Write-frequency x read-frequency map of state changes from a uniform start.

    With ``field_reset`` every column starts from the uniform ``start`` state
    (the strong perpendicular-field reset); otherwise the state carries over
    from column to column. Deltas are taken against the uniform start state.
    """
    write_freqs = np.asarray(write_freqs, dtype=float)
    read_freqs = np.asarray(read_freqs, dtype=float)
    powers = np.asarray(sorted(powers), dtype=float)
    start = Polarity(start)
    n = len(chain)
    sig = device_signatures(chain, read_freqs) * dbm_to_mw(read_power)
    start_bits = np.full(n, int(start), dtype=np.int8)

    maps = np.zeros((powers.size, write_freqs.size, read_freqs.size))
    changed = np.zeros((powers.size, write_freqs.size), dtype=bool)
    for k, power in enumerate(powers):
        state = [start] * n
        for i, f in enumerate(write_freqs):
            if field_reset:
                state = [start] * n
            pulse = PulseSpec(float(f), float(power), duration)
            state = [apply_pulse(s, dev, pulse, rng) for s, dev in zip(state, chain.devices)]
            diff = np.array([int(s) for s in state], dtype=np.int8) - start_bits
            if np.any(diff):
                changed[k, i] = True
                maps[k, i] = diff @ sig

    stitched = np.zeros((write_freqs.size, read_freqs.size))
    stitched_power = np.full(write_freqs.size, np.nan)
    for i in range(write_freqs.size):
        hit = np.flatnonzero(changed[:, i])
        if hit.size:
            stitched[i] = maps[hit[0], i]
            stitched_power[i] = powers[hit[0]]
    return CalibrationMap(write_freqs, read_freqs, powers, start, float(read_power), maps, changed, stitched, stitched_power)


# ------------------------------------------------------------ table/band map


@dataclass(frozen=True)
class Band:
    f_lo: float
    f_hi: float
    power: float  # minimum power that enables this band

    def contains(self, f: float, power: float) -> bool:
        return power >= self.power and self.f_lo <= f <= self.f_hi


@dataclass
class BandMap:
    """Switching bands per device id and direction."""

    bands: dict = field(default_factory=dict)  # (id, direction) -> Band

    @property
    def device_ids(self):
        return sorted({i for i, _ in self.bands})

    def band(self, device: int, direction: str) -> Band:
        return self.bands[(device, direction)]

    def outcomes(self, device: int, state: Polarity, f: float, power: float) -> frozenset:
        """Possible polarities of ``device`` after a pulse, as seen through the map."""
        state = Polarity(state)
        cur = self.bands.get((device, _direction_from(state)))
        if cur is None or not cur.contains(f, power):
            return frozenset([state])
        opp = self.bands.get((device, _direction_from(state.opposite)))
        if opp is not None and opp.contains(f, power):
            return frozenset([Polarity.DOWN, Polarity.UP])
        return frozenset([state.opposite])

    def validate(self):
        for i in self.device_ids:
            for d in DIRECTIONS:
                if (i, d) not in self.bands:
                    raise ValueError(f"band map lacks {d} band for device {i}")

    def to_dict(self) -> dict:
        return {
            "bands": [
                {"id": i, "direction": d, "f_lo": b.f_lo, "f_hi": b.f_hi, "power": b.power}
                for (i, d), b in sorted(self.bands.items())
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BandMap":
        bands = {}
        for e in d["bands"]:
            if e["direction"] not in DIRECTIONS:
                raise ValueError(f"unknown direction {e['direction']!r}")
            bands[(int(e["id"]), e["direction"])] = Band(float(e["f_lo"]), float(e["f_hi"]), float(e["power"]))
        bm = cls(bands)
        bm.validate()
        return bm


@dataclass(frozen=True)
class TableRow:
    id: int
    freq_up_to_down: float
    freq_down_to_up: float
    power: float


@dataclass(frozen=True)
class ProgrammingTable:
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=lambda r: r.id)))

    def __len__(self):
        return len(self.rows)

    def row(self, device: int) -> TableRow:
        for r in self.rows:
            if r.id == device:
                return r
        raise KeyError(device)

    def to_dict(self) -> dict:
        return {"rows": [{"id": r.id, "freq_up_to_down": r.freq_up_to_down, "freq_down_to_up": r.freq_down_to_up, "power": r.power} for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "ProgrammingTable":
        return cls(tuple(TableRow(int(r["id"]), float(r["freq_up_to_down"]), float(r["freq_down_to_up"]), float(r["power"])) for r in d["rows"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def selectivity_violations(table: ProgrammingTable, bandmap: BandMap) -> list:
    """Table entries that are not inside exactly one band of their direction,
    or that also fall in their own device's opposite band."""
    bad = []
    for r in table.rows:
        for direction, f in ((DOWN_TO_UP, r.freq_down_to_up), (UP_TO_DOWN, r.freq_up_to_down)):
            hits = [i for i in bandmap.device_ids if bandmap.band(i, direction).contains(f, r.power)]
            other = UP_TO_DOWN if direction == DOWN_TO_UP else DOWN_TO_UP
            if hits != [r.id] or bandmap.band(r.id, other).contains(f, r.power):
                bad.append((r.id, direction, f, hits))
    return bad


def _signature_clusters(cmap: CalibrationMap, atol: float):
    """Distinct nonzero columns over all powers."""
    reps = []
    for k in range(cmap.powers.size):
        for i in np.flatnonzero(cmap.changed[k]):
            col = cmap.maps[k, i]
            if np.max(np.abs(col)) <= atol:
                continue
            if not any(np.max(np.abs(col - r)) <= atol for r in reps):
                reps.append(col)
    return reps


def _single_signatures(reps, atol: float):
    """Clusters that are not sums of two or three other clusters."""
    singles = []
    for a, rep in enumerate(reps):
        others = [r for b, r in enumerate(reps) if b != a]
        composite = False
        for size in (2, 3):
            for combo in itertools.combinations(others, size):
                if np.max(np.abs(rep - sum(combo))) <= atol:
                    composite = True
                    break
            if composite:
                break
        if not composite:
            singles.append(rep)
    return singles


def _decompose(cmap: CalibrationMap, singles: np.ndarray, atol: float) -> np.ndarray:
    """Which singles flipped in every column: bool (P, W, K)."""
    P, W, _ = cmap.maps.shape
    K = singles.shape[0]
    flips = np.zeros((P, W, K), dtype=bool)
    if K == 0:
        return flips
    cols = cmap.maps.reshape(P * W, -1)
    coef, *_ = np.linalg.lstsq(singles.T, cols.T, rcond=None)
    coef = coef.T
    rounded = np.rint(coef)
    resid = np.max(np.abs(rounded @ singles - cols), axis=1)
    if np.any(resid > atol) or np.any((rounded != 0) & (rounded != 1)):
        raise CalibrationError("calibration map contains columns that are not sums of single-device signatures")
    return rounded.reshape(P, W, K).astype(bool)


def _runs(mask: np.ndarray):
    """(start, stop) index pairs of contiguous True runs."""
    out = []
    i = 0
    n = mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


def extract_table(
    down_map: CalibrationMap,
    up_map: CalibrationMap,
    n_devices: int | None = None,
    rtol: float = 1e-6,
):
    """Recover a programming table and band map from two calibration sweeps.

    Only the maps are used: nonzero columns are clustered into single-device
    read signatures, devices are ordered by where they switch from the
    all-Down state, and the up->down sweep is matched through the negated
    signature. Each write frequency is the centre of the longest run where
    only that device switches (and not inside its own opposite band).
    """
    if down_map.start != Polarity.DOWN or up_map.start != Polarity.UP:
        raise ValueError("extract_table needs an all-Down sweep and an all-Up sweep")
    if not np.array_equal(down_map.write_freqs, up_map.write_freqs) or not np.array_equal(down_map.powers, up_map.powers):
        raise ValueError("sweeps must share write frequencies and powers")
    scale = max(np.max(np.abs(down_map.maps)), np.max(np.abs(up_map.maps)))
    if scale == 0:
        raise CalibrationError("no state change observed in either sweep")
    atol = rtol * scale
    wf = down_map.write_freqs
    powers = down_map.powers

    singles_d = _single_signatures(_signature_clusters(down_map, atol), atol)
    singles_u = _single_signatures(_signature_clusters(up_map, atol), atol)
    if len(singles_d) != len(singles_u):
        raise CalibrationError(f"found {len(singles_d)} down->up signatures but {len(singles_u)} up->down signatures")
    if n_devices is not None and len(singles_d) != n_devices:
        raise CalibrationError(f"found {len(singles_d)} distinguishable devices, expected {n_devices}")
    for a, b in itertools.combinations(singles_d, 2):
        if np.max(np.abs(a - b)) <= 10 * atol:
            raise CalibrationError("two devices have indistinguishable read signatures")

    sd = np.array(singles_d)
    flips_d = _decompose(down_map, sd, atol)
    # order devices by the mean write frequency at which they switch alone
    centroid = []
    for k in range(len(singles_d)):
        alone = flips_d[..., k] & (flips_d.sum(axis=-1) == 1)
        centroid.append(np.mean(np.broadcast_to(wf, alone.shape)[alone]) if alone.any() else np.inf)
    order = np.argsort(centroid, kind="stable")
    sd = sd[order]
    flips_d = flips_d[..., order]

    su = np.empty_like(sd)
    for k in range(sd.shape[0]):
        match = [u for u in singles_u if np.max(np.abs(u + sd[k])) <= atol]
        if len(match) != 1:
            raise CalibrationError(f"device {k + 1}: up->down signature not matched uniquely")
        su[k] = match[0]
    flips_u = _decompose(up_map, su, atol)

    n = sd.shape[0]
    min_power = {}
    bands = {}
    for direction, flips in ((DOWN_TO_UP, flips_d), (UP_TO_DOWN, flips_u)):
        for k in range(n):
            pk = np.flatnonzero(flips[..., k].any(axis=1))
            if pk.size == 0:
                raise CalibrationError(f"device {k + 1} never switched {direction.replace('_', ' ')}")
            p = pk[0]
            where = np.flatnonzero(flips[p, :, k])
            min_power[(k, direction)] = p
            bands[(k + 1, direction)] = Band(float(wf[where[0]]), float(wf[where[-1]]), float(powers[p]))
    bandmap = BandMap(bands)

    rows = []
    for k in range(n):
        p = max(min_power[(k, DOWN_TO_UP)], min_power[(k, UP_TO_DOWN)])
        freq = {}
        for direction, flips in ((DOWN_TO_UP, flips_d), (UP_TO_DOWN, flips_u)):
            other = bandmap.band(k + 1, UP_TO_DOWN if direction == DOWN_TO_UP else DOWN_TO_UP)
            own_only = flips[p, :, k] & (flips[p].sum(axis=-1) == 1)
            clean = own_only & ~((wf >= other.f_lo) & (wf <= other.f_hi))
            runs = _runs(clean)
            if not runs:
                raise CalibrationError(f"device {k + 1}: no write frequency switches it alone {direction.replace('_', ' ')}")
            lo, hi = max(runs, key=lambda r: (r[1] - r[0], -r[0]))
            freq[direction] = float(wf[(lo + hi) // 2])
        rows.append(TableRow(k + 1, freq[UP_TO_DOWN], freq[DOWN_TO_UP], float(powers[p])))
    table = ProgrammingTable(tuple(rows))

    bad = selectivity_violations(table, bandmap)
    if bad:
        raise CalibrationError(f"selectivity check failed for {bad}")
    return table, bandmap


# ------------------------------------------------------------------ planning


@dataclass(frozen=True)
class PlannedPulse:
    frequency: float
    power: float
    duration: float
    device: int
    direction: str
    phase: str  # "reset" or "set"

    @property
    def spec(self) -> PulseSpec:
        return PulseSpec(self.frequency, self.power, self.duration)


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple
    target: str = ""

    def __len__(self):
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "pulses": [
                {"frequency": p.frequency, "power": p.power, "duration": p.duration, "device": p.device, "direction": p.direction, "phase": p.phase}
                for p in self.pulses
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSequence":
        return cls(
            tuple(PlannedPulse(float(p["frequency"]), float(p["power"]), float(p["duration"]), int(p["device"]), p["direction"], p["phase"]) for p in d["pulses"]),
            target=d.get("target", ""),
        )


def _reset_phase(table: ProgrammingTable, duration: float):
    rows = sorted(table.rows, key=lambda r: (-r.freq_up_to_down, r.id))
    return [PlannedPulse(r.freq_up_to_down, r.power, duration, r.id, UP_TO_DOWN, "reset") for r in rows]


def check_reset(bandmap: BandMap, pulses, ids) -> list:
    """Simulate the reset phase over unknown initial states. Returns conflicts:
    (pulse device, disturbed device) for already-reset devices that a later
    pulse would knock out of Down, plus devices not Down at the end."""
    states = {i: frozenset([Polarity.DOWN, Polarity.UP]) for i in ids}
    conflicts = []
    for pulse in pulses:
        new = {}
        for i in ids:
            out = frozenset().union(*(bandmap.outcomes(i, s, pulse.frequency, pulse.power) for s in states[i]))
            if i != pulse.device and states[i] == {Polarity.DOWN} and out != states[i]:
                conflicts.append((pulse.device, i))
            new[i] = out
        states = new
    conflicts += [(None, i) for i in ids if states[i] != {Polarity.DOWN}]
    return conflicts


def _set_admissible(bandmap: BandMap, pulse: PlannedPulse, up: frozenset, ids):
    """None if the pulse sets exactly its device from the tracked state, else
    the list of devices it disturbs."""
    disturbed = []
    for i in ids:
        s = Polarity.UP if i in up else Polarity.DOWN
        out = bandmap.outcomes(i, s, pulse.frequency, pulse.power)
        want = Polarity.UP if i == pulse.device else s
        if out != {want}:
            disturbed.append(i)
    return disturbed or None


def plan_sequence(
    table: ProgrammingTable,
    bandmap: BandMap,
    target: ChainConfig,
    duration: float = PULSE_DURATION,
    set_order: str = "descending",
) -> PulseSequence:
    """Reset every device with Up->Down pulses from highest to lowest frequency,
    then set the target's Up bits. The set-phase order starts from
    ``set_order`` and falls back to a search over orderings that the band
    map validates."""
    ids = [r.id for r in table.rows]
    if len(target) != len(ids):
        raise ValueError(f"target has {len(target)} bits for a {len(ids)}-device table")
    bandmap.validate()
    if bandmap.device_ids != ids:
        raise ValueError("table and band map cover different devices")

    reset = _reset_phase(table, duration)
    conflicts = check_reset(bandmap, reset, ids)
    if conflicts:
        raise PlanningError(f"reset phase disturbs already-reset devices: {conflicts}", conflicts)

    want = [r for r, b in zip(table.rows, target.bits) if b == Polarity.UP]
    key = {"descending": lambda r: (-r.freq_down_to_up, r.id), "ascending": lambda r: (r.freq_down_to_up, r.id)}[set_order]
    cands = [PlannedPulse(r.freq_down_to_up, r.power, duration, r.id, DOWN_TO_UP, "set") for r in sorted(want, key=key)]

    dead = set()
    blockers = {}

    def search(up: frozenset, remaining: tuple):
        if not remaining:
            return []
        if up in dead:
            return None
        for idx, pulse in enumerate(remaining):
            bad = _set_admissible(bandmap, pulse, up, ids)
            if bad:
                blockers.setdefault(pulse.device, set()).update(bad)
                continue
            rest = search(up | {pulse.device}, remaining[:idx] + remaining[idx + 1:])
            if rest is not None:
                return [pulse] + rest
        dead.add(up)
        return None

    set_phase = search(frozenset(), tuple(cands))
    if set_phase is None:
        pairs = sorted((d, k) for d, ks in blockers.items() for k in ks)
        raise PlanningError(f"target {target} unreachable; conflicting (pulse device, disturbed device) pairs: {pairs}", pairs)
    return PulseSequence(tuple(reset + set_phase), target=str(target))


# ----------------------------------------------------------------- execution


def execute(chain: Chain, state: ChainConfig, seq: PulseSequence, rng: np.random.Generator) -> ChainConfig:
    """Broadcast every pulse to every device in order."""
    if len(state) != len(chain):
        raise ValueError("state length does not match chain")
    bits = list(state.bits)
    for pulse in seq:
        spec = pulse.spec
        bits = [apply_pulse(b, dev, spec, rng) for b, dev in zip(bits, chain.devices)]
    return ChainConfig(tuple(bits))


def _band_edges(chain: Chain):
    half = np.array([d.band_width / 2.0 for d in chain.devices])
    fc = np.array([d.f_center for d in chain.devices])
    split = np.array([d.polarity_split / 2.0 for d in chain.devices])
    f_down, f_up = fc + split, fc - split
    thr = np.array([d.p_threshold for d in chain.devices])
    return (f_down - half, f_down + half), (f_up - half, f_up + half), thr


def execute_batch(chain: Chain, states: np.ndarray, seq: PulseSequence, rng: np.random.Generator, min_duration: float = MIN_PULSE_DURATION) -> np.ndarray:
    """Vectorised ``execute`` over many initial states (M, N) of 0/1.

    Same device physics as apply_pulse; the random stream is consumed in a
    different order than the scalar path.
    """
    s = np.array(states, dtype=np.int8, copy=True)
    (dlo, dhi), (ulo, uhi), thr = _band_edges(chain)
    for pulse in seq:
        if pulse.duration < min_duration:
            raise ValueError(f"pulse shorter than minimum effective duration {min_duration} s")
        f, p = pulse.frequency, pulse.power
        on = p >= thr
        in_down = on & (dlo <= f) & (f <= dhi)
        in_up = on & (ulo <= f) & (f <= uhi)
        if not (in_down.any() or in_up.any()):
            continue
        both = in_down & in_up
        active = np.where(s == 1, in_up, in_down)[...]  # pulse hits the present core
        rand = active & both
        flip = active & ~both
        s = np.where(flip, 1 - s, s).astype(np.int8)
        if rand.any():
            s[rand] = (rng.random(int(rand.sum())) < 0.5).astype(np.int8)
    return s


# ------------------------------------------------------------------- readout


def _signature_basis(chain: Chain, read_freqs, read_power: float):
    sig = device_signatures(chain, read_freqs) * dbm_to_mw(read_power)  # (N, F)
    if np.linalg.matrix_rank(sig) < sig.shape[0]:
        raise ReadoutError("device signatures are linearly dependent on the read grid")
    return sig


def _solve(sig: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(sig.T, deltas.T, rcond=None)
    coef = coef.T
    bits = np.rint(coef)
    scale = max(np.max(np.abs(sig)), 1e-300)
    resid = np.max(np.abs(bits @ sig - deltas), axis=-1) if deltas.size else np.zeros(0)
    if np.any((bits != 0) & (bits != 1)) or np.any(np.abs(coef - bits) > 1e-6) or np.any(resid > 1e-6 * scale):
        raise ReadoutError("measured spectrum does not match a unique binary configuration")
    return bits.astype(np.int8)


def readout_config(chain: Chain, state: ChainConfig, read_freqs=READ_FREQS, read_power: float = READ_POWER) -> ChainConfig:
    """Infer the configuration from the delta spectrum vs all-Down."""
    from .chain import delta_spectrum

    sig = _signature_basis(chain, read_freqs, read_power)
    measured = delta_spectrum(chain, state, ChainConfig.all_down(len(chain)), read_freqs).values * dbm_to_mw(read_power)
    return ChainConfig.from_array(_solve(sig, measured[None, :])[0])


def readout_batch(chain: Chain, states: np.ndarray, read_freqs=READ_FREQS, read_power: float = READ_POWER) -> np.ndarray:
    sig = _signature_basis(chain, read_freqs, read_power)
    measured = np.asarray(states, dtype=float) @ sig
    return _solve(sig, measured)
