"""Built-in chains and networks."""

from __future__ import annotations

from .chain import Chain
from .device import DeviceParams

# (up->down MHz, down->up MHz, power dBm) per device of the reference chain
REFERENCE_TABLE = (
    (260, 275, 2),
    (278, 298, 2),
    (292, 311, 2),
    (305, 325, 2),
    (327, 347, 5),
    (346, 365, 5),
    (376, 400, 5),
    (410, 442, 7),
    (433, 465, 7),
    (485, 512, 10),
    (522, 560, 10),
)

DIAMETERS = tuple(range(800, 250, -50))  # nm, device 1 is the largest dot


def reference_chain(
    band_width: float = 10.0,
    linewidth: float = 15.0,
    responsivity: float = 100.0,
    asym: float = 0.3,
    threshold_margin: float = 0.5,
    name: str = "reference-chain",
) -> Chain:
    """Eleven devices whose Down/Up resonances sit at the table's write
    frequencies; thresholds sit just below each power tier."""
    devices = []
    for k, ((f_ud, f_du, p), d) in enumerate(zip(REFERENCE_TABLE, DIAMETERS)):
        devices.append(
            DeviceParams(
                id=k + 1,
                diameter=float(d),
                f_center=(f_ud + f_du) / 2.0,
                polarity_split=float(f_du - f_ud),
                linewidth=linewidth,
                responsivity=responsivity,
                asym=asym,
                sign=1 if k % 2 == 0 else -1,
                band_width=band_width,
                p_threshold=p - threshold_margin,
            )
        )
    return Chain(tuple(devices), name=name)


def second_chain(name: str = "reference-chain-1") -> Chain:
    """Companion chain for the two-chain network: same layout, its own
    dispersion of centre frequencies, splittings and responsivities."""
    base = reference_chain()
    shift = (3.0, -2.0, 4.0, -3.0, 2.0, 5.0, -4.0, 3.0, -2.0, 6.0, -5.0)
    split_scale = (1.1, 0.9, 1.0, 1.2, 0.9, 1.1, 1.0, 0.95, 1.05, 1.1, 0.9)
    resp = (110.0, 85.0, 95.0, 120.0, 90.0, 105.0, 80.0, 115.0, 100.0, 90.0, 110.0)
    devices = []
    for d, s, k, r in zip(base.devices, shift, split_scale, resp):
        devices.append(
            DeviceParams(
                id=d.id,
                diameter=d.diameter,
                f_center=d.f_center + s,
                polarity_split=d.polarity_split * k,
                linewidth=d.linewidth,
                responsivity=r,
                asym=-d.asym,
                sign=d.sign,
                band_width=d.band_width,
                p_threshold=d.p_threshold,
            )
        )
    return Chain(tuple(devices), name=name)


def overlapping_pair(overlap: str = "partial") -> Chain:
    """Two-device chain whose Down->Up windows overlap across devices.

    ``partial``: the windows share a few MHz, leaving clean sub-intervals.
    ``full``: device 2's window lies inside device 1's, so no frequency
    writes device 2 alone.
    """
    common = dict(diameter=500.0, linewidth=15.0, responsivity=100.0, asym=0.0, p_threshold=1.5)
    if overlap == "partial":
        d1 = DeviceParams(id=1, f_center=290.0, polarity_split=30.0, sign=1, band_width=10.0, **common)
        d2 = DeviceParams(id=2, f_center=305.0, polarity_split=16.0, sign=-1, band_width=10.0, **common)
    elif overlap == "full":
        d1 = DeviceParams(id=1, f_center=290.0, polarity_split=30.0, sign=1, band_width=20.0, **common)
        d2 = DeviceParams(id=2, f_center=300.0, polarity_split=10.0, sign=-1, band_width=6.0, **common)
    else:
        raise ValueError(f"unknown overlap kind {overlap!r}")
    return Chain((d1, d2), name=f"overlap-{overlap}")


CHAIN_PRESETS = {
    "reference-chain": reference_chain,
    "reference-chain-1": second_chain,
    "overlap-partial": lambda: overlapping_pair("partial"),
    "overlap-full": lambda: overlapping_pair("full"),
}
