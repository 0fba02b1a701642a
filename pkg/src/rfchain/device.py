"""Phenomenological vortex MTJ: polarity-split resonance, spin-diode readout
and resonant core reversal under an RF pulse."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, fields

import numpy as np

MIN_PULSE_DURATION = 1e-3  # s; switching is duration-independent above this


class Polarity(enum.IntEnum):
    DOWN = 0
    UP = 1

    @property
    def opposite(self) -> "Polarity":
        return Polarity(1 - self)

    @classmethod
    def from_char(cls, c: str) -> "Polarity":
        if c == "1":
            return cls.UP
        if c == "0":
            return cls.DOWN
        raise ValueError(f"invalid polarity character {c!r}")

    def __str__(self) -> str:
        return str(int(self))


@dataclass(frozen=True)
class DeviceParams:
    """One vortex MTJ. Frequencies in MHz, powers in dBm, responsivity in uV/mW."""

    id: int
    diameter: float
    f_center: float
    polarity_split: float
    linewidth: float
    responsivity: float
    asym: float
    sign: int
    band_width: float
    p_threshold: float

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")
        if self.linewidth <= 0:
            raise ValueError("linewidth must be positive")
        if self.band_width <= 0:
            raise ValueError("band_width must be positive")
        if self.polarity_split < 0:
            raise ValueError("polarity_split must be non-negative")
        if not -1.0 <= self.asym <= 1.0:
            raise ValueError("asym must lie in [-1, 1]")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def deterministic_bands(self) -> bool:
        """False when both polarities' switching windows overlap (random zone)."""
        return self.band_width < self.polarity_split

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceParams":
        names = {f.name for f in fields(cls)}
        missing = names - set(d)
        extra = set(d) - names
        if missing or extra:
            raise ValueError(f"device fields mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        return cls(
            id=int(d["id"]),
            diameter=float(d["diameter"]),
            f_center=float(d["f_center"]),
            polarity_split=float(d["polarity_split"]),
            linewidth=float(d["linewidth"]),
            responsivity=float(d["responsivity"]),
            asym=float(d["asym"]),
            sign=int(d["sign"]),
            band_width=float(d["band_width"]),
            p_threshold=float(d["p_threshold"]),
        )


@dataclass(frozen=True)
class PulseSpec:
    frequency: float  # MHz
    power: float  # dBm
    duration: float = 0.5  # s

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")


def resonance_frequency(dev: DeviceParams, p: Polarity) -> float:
    # Down resonates above Up at the operating field.
    half = dev.polarity_split / 2.0
    return dev.f_center + half if p == Polarity.DOWN else dev.f_center - half


def diameter_to_frequency(diameter, anchor_d: float = 500.0, anchor_f: float = 250.0):
    """Gyrotropic frequency for a dot of ``diameter`` nm, using f ~ 1/diameter
    through one anchor point."""
    d = np.asarray(diameter, dtype=float)
    if np.any(d <= 0) or anchor_d <= 0 or anchor_f <= 0:
        raise ValueError("diameter and anchors must be positive")
    out = anchor_f * anchor_d / d
    return float(out) if out.ndim == 0 else out


def lineshape(f, f_p, linewidth, asym):
    """Mixed symmetric/antisymmetric Lorentzian, unit peak for asym=0."""
    x = np.asarray(f, dtype=float) - f_p
    g = linewidth
    den = x * x + g * g
    return (1.0 - abs(asym)) * g * g / den + asym * g * x / den


def rectification(dev: DeviceParams, p: Polarity, f):
    """Spin-diode sensitivity (uV/mW) of ``dev`` in polarity ``p`` at ``f`` MHz."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ValueError("frequency must be positive")
    f_p = resonance_frequency(dev, p)
    out = dev.sign * dev.responsivity * lineshape(f_arr, f_p, dev.linewidth, dev.asym)
    return float(out) if out.ndim == 0 else out


def switching_band(dev: DeviceParams, p: Polarity, power: float):
    """Switching window (f_lo, f_hi) of a core currently in polarity ``p``,
    or None below threshold."""
    if power < dev.p_threshold:
        return None
    f_p = resonance_frequency(dev, p)
    half = dev.band_width / 2.0
    return (f_p - half, f_p + half)


def _in_band(band, f: float) -> bool:
    return band is not None and band[0] <= f <= band[1]


def apply_pulse(
    state: Polarity,
    dev: DeviceParams,
    pulse: PulseSpec,
    rng: np.random.Generator,
    min_duration: float = MIN_PULSE_DURATION,
) -> Polarity:
    """Final polarity after one RF pulse.

    Only the present core can be excited, so the pulse must fall in the band of
    the current polarity. Inside both bands the core reverses repeatedly and
    the outcome is a fair coin drawn from ``rng``.
    """
    if pulse.duration < min_duration:
        raise ValueError(f"pulse shorter than minimum effective duration {min_duration} s")
    state = Polarity(state)
    f = pulse.frequency
    if not _in_band(switching_band(dev, state, pulse.power), f):
        return state
    if _in_band(switching_band(dev, state.opposite, pulse.power), f):
        return Polarity.UP if rng.random() < 0.5 else Polarity.DOWN
    return state.opposite
