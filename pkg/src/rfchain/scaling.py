"""Write power, pulse duration and energy versus vortex frequency and dot size."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .encoding import dbm_to_mw

GAMMA_E = 1.76e11  # rad s^-1 T^-1


@dataclass(frozen=True)
class MaterialParams:
    """Thin-dot material. ``L`` and ``Rc`` in nm, ``Ms`` in A/m, ``vc`` in m/s.

    ``vc`` = 320 m/s is a typical literature magnitude, not a measured value.
    """

    C: float = 1.0
    gamma: float = GAMMA_E
    Ms: float = 1.0e6
    L: float = 40.0
    alpha: float = 0.01
    Rc: float = 10.0
    vc: float = 320.0

    def __post_init__(self):
        for name in ("gamma", "Ms", "L", "Rc", "vc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.C < 0 or self.alpha < 0:
            raise ValueError("C and alpha must be non-negative")


@dataclass(frozen=True)
class EnergyAnchor:
    """One measured write point: frequency (MHz), energy (pJ), power (dBm), duration (ns)."""

    f_ref: float = 250.0
    E_ref: float = 5.0
    P_ref: float = -11.0
    tau_ref: float = 50.0

    def __post_init__(self):
        if self.f_ref <= 0 or self.tau_ref <= 0 or self.E_ref <= 0:
            raise ValueError("anchor frequency, energy and duration must be positive")

    @property
    def mismatch(self) -> float:
        """Relative gap between E_ref and P_ref x tau_ref."""
        return abs(self.E_ref - dbm_to_mw(self.P_ref) * self.tau_ref) / self.E_ref

    def check(self, tol: float = 0.2) -> bool:
        ok = self.mismatch <= tol
        if not ok:
            warnings.warn(
                f"anchor energy {self.E_ref} pJ differs from P x tau = {dbm_to_mw(self.P_ref) * self.tau_ref:.3g} pJ "
                f"by {100 * self.mismatch:.0f}%; using E_ref",
                stacklevel=2,
            )
        return ok

    @classmethod
    def consistent(cls, f_ref: float, P_ref: float, tau_ref: float) -> "EnergyAnchor":
        return cls(f_ref, dbm_to_mw(P_ref) * tau_ref, P_ref, tau_ref)


def gyro_frequency(m: MaterialParams, R):
    """Gyrotropic frequency (MHz) of a dot of size ``R`` nm: C*gamma*Ms*(L/R)/(2 pi)."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("R must be positive")
    out = m.C * m.gamma * m.Ms * (m.L / R) / (2.0 * math.pi) / 1e6
    return float(out) if out.ndim == 0 else out


def calibrate_C(m: MaterialParams, R: float, f_mhz: float) -> MaterialParams:
    """Copy of ``m`` with C chosen so that gyro_frequency(R) == f_mhz."""
    from dataclasses import replace

    base = gyro_frequency(replace(m, C=1.0), R)
    return replace(m, C=f_mhz / base)


def damping_factor(m: MaterialParams, R):
    R = np.asarray(R, dtype=float)
    if np.any(R <= m.Rc):
        raise ValueError("R must exceed the core radius Rc")
    out = m.alpha * (1.0 + np.log(R / m.Rc) / 2.0)
    return float(out) if out.ndim == 0 else out


def min_switching_field(m: MaterialParams, R, log_term: bool = True):
    """Minimum resonant switching field (T) for a dot of size ``R`` nm."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("R must be positive")
    d = damping_factor(m, R) if log_term else m.alpha * np.ones_like(R)
    out = d * m.vc / (3.0 * m.gamma * R * 1e-9)
    return float(out) if np.ndim(out) == 0 else out


def _pos(f):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    return f


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def threshold_power(anchor: EnergyAnchor, f):
    """Write power (dBm), quadratic in frequency through the anchor."""
    return _ret(anchor.P_ref + 20.0 * np.log10(_pos(f) / anchor.f_ref))


def pulse_duration(anchor: EnergyAnchor, f):
    """Resonant pulse length (ns), a fixed number of gyration periods."""
    return _ret(anchor.tau_ref * anchor.f_ref / _pos(f))


def switching_energy(anchor: EnergyAnchor, f):
    """Switching energy (pJ), linear in frequency through the anchor."""
    return _ret(anchor.E_ref * _pos(f) / anchor.f_ref)


def scaling_table(anchor: EnergyAnchor, freqs, material: MaterialParams | None = None, anchor_d: float = 500.0):
    """Rows (f_mhz, p_dbm, tau_ns, e_pj, h_t); the dot size for the field
    column comes from f ~ 1/size through (anchor_d, anchor.f_ref)."""
    material = material or MaterialParams(Rc=10.0)
    freqs = np.asarray(freqs, dtype=float)
    if freqs.size == 0:
        return []
    size = anchor_d * anchor.f_ref / _pos(freqs)
    h = np.atleast_1d(min_switching_field(material, size))
    p = np.atleast_1d(threshold_power(anchor, freqs))
    tau = np.atleast_1d(pulse_duration(anchor, freqs))
    e = np.atleast_1d(switching_energy(anchor, freqs))
    return [tuple(float(v) for v in row) for row in zip(freqs, p, tau, e, h)]
