"""Device models: memristor (linear ion drift), level-1 MOSFET, resistor.

All device laws live here as free functions over small frozen parameter
records, so the simulation engine, the analysis layer and the tests all
evaluate exactly the same arithmetic.  Everything is SI unless a docstring
says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .constants import (
    BOLTZMANN,
    ELEMENTARY_CHARGE,
    ELECTRON_MASS,
    REDUCED_PLANCK,
    T_REF,
)

__all__ = [
    "DeviceError",
    "MemristorParams",
    "MemristorState",
    "MosfetParams",
    "ResistorParams",
    "SourceSpec",
    "NMOS_DEFAULTS",
    "PMOS_DEFAULTS",
    "MEMRISTOR_DEFAULTS",
    "RESISTOR_DEFAULTS",
    "CALIBRATED_MOBILITY",
    "thermal_voltage",
    "joglekar_window",
    "memristance",
    "state_for_memristance",
    "memristor_dwdt",
    "mosfet_vth",
    "mosfet_kprime",
    "mosfet_current",
    "mosfet_linearized",
    "subthreshold_leakage",
    "gate_leakage",
    "resistor_value",
    "source_value",
]


class DeviceError(ValueError):
    """Raised when a device parameter or evaluation point is out of domain."""


# --------------------------------------------------------------------------- #
# Parameter records
# --------------------------------------------------------------------------- #

CALIBRATED_MOBILITY = 2.073265856875396e-14
"""Dopant mobility uv (m^2 V^-1 s^-1) calibrated so that the memristive
mirror at a 2.5 V supply completes its 5 kOhm -> 38 kOhm switching transient
in 1.4 s.  ``mirrorsim calibrate`` re-derives this value from scratch."""


@dataclass(frozen=True)
class MemristorParams:
    """Linear ion drift memristor.

    Parameters
    ----------
    r_on, r_off : float
        Fully-doped and fully-undoped resistances (ohm), ``0 < r_on < r_off``.
    length : float
        Device thickness L (m) that the doped/undoped boundary travels.
    mobility : float
        Dopant drift mobility uv (m^2 V^-1 s^-1).
    window_p : int
        Joglekar window exponent p; ``p = 0`` disables the window entirely.
    polarity : int
        +1 if positive applied current grows the doped region (w increases),
        -1 for the opposite orientation.
    """

    r_on: float = 100.0
    r_off: float = 38e3
    length: float = 10e-9
    mobility: float = CALIBRATED_MOBILITY
    window_p: int = 1
    polarity: int = 1
    footprint_w: float = 45e-9
    footprint_l: float = 90e-9

    def __post_init__(self) -> None:
        if not (0.0 < self.r_on < self.r_off):
            raise DeviceError(f"require 0 < r_on < r_off, got {self.r_on}, {self.r_off}")
        if self.length <= 0.0 or self.mobility <= 0.0:
            raise DeviceError("memristor length and mobility must be positive")
        if self.window_p < 0 or int(self.window_p) != self.window_p:
            raise DeviceError(f"window_p must be a nonnegative integer, got {self.window_p}")
        if self.polarity not in (-1, 1):
            raise DeviceError(f"polarity must be +1 or -1, got {self.polarity}")


@dataclass
class MemristorState:
    """Mutable boundary position w (m), kept in ``[0, length]`` by the engine."""

    w: float


@dataclass(frozen=True)
class MosfetParams:
    """Square-law (level-1) MOSFET with simple temperature laws.

    ``k_prime`` is mu0*Cox at the reference temperature; the effective value
    scales as ``(T/T0)**mobility_exp``.  The threshold shifts linearly:
    ``vth(T) = vth0 + vth_tc*(T - T0)``.  Oxide fields (``t_ox``, ``phi_ox``,
    ``m_ox``) only feed the gate-tunneling estimator.
    """

    polarity: str = "nmos"
    vth0: float = 0.45
    k_prime: float = 170e-6
    lam: float = 0.05
    n_sub: float = 1.5
    t_ox: float = 4e-9
    phi_ox: float = 3.1
    m_ox: float = 0.3 * ELECTRON_MASS
    width: float = 0.27e-6
    length: float = 0.18e-6
    mobility_exp: float = -1.5
    vth_tc: float = -1e-3

    def __post_init__(self) -> None:
        if self.polarity not in ("nmos", "pmos"):
            raise DeviceError(f"polarity must be 'nmos' or 'pmos', got {self.polarity!r}")
        for name in ("k_prime", "n_sub", "t_ox", "phi_ox", "m_ox", "width", "length"):
            if getattr(self, name) <= 0.0:
                raise DeviceError(f"{name} must be positive")
        if self.lam < 0.0:
            raise DeviceError("lam (channel-length modulation) must be >= 0")


@dataclass(frozen=True)
class ResistorParams:
    """Ohmic resistor with a linear temperature coefficient."""

    r_nominal: float
    temp_coeff: float = 1e-3
    footprint_w: float = 2e-6
    footprint_l: float = 10e-6

    def __post_init__(self) -> None:
        if self.r_nominal <= 0.0:
            raise DeviceError("r_nominal must be positive")


@dataclass(frozen=True)
class SourceSpec:
    """Independent voltage source: DC level or a sine riding on one.

    ``value(t) = dc_value + amplitude * sin(2*pi*frequency*t + phase)`` for
    kind "sine"; a plain "dc" source ignores the AC fields.  Phase is radians.
    """

    kind: str = "dc"
    dc_value: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("dc", "sine"):
            raise DeviceError(f"source kind must be 'dc' or 'sine', got {self.kind!r}")
        if self.kind == "sine" and self.frequency <= 0.0:
            raise DeviceError("sine source requires frequency > 0")


NMOS_DEFAULTS = MosfetParams()
PMOS_DEFAULTS = MosfetParams(polarity="pmos", vth0=-0.45, k_prime=60e-6, vth_tc=1e-3)
MEMRISTOR_DEFAULTS = MemristorParams()
RESISTOR_DEFAULTS = ResistorParams(r_nominal=38e3)


# --------------------------------------------------------------------------- #
# Small shared pieces
# --------------------------------------------------------------------------- #

def thermal_voltage(temp: float) -> float:
    """Thermal voltage kT/q (V).  ``temp`` must be a positive kelvin value."""
    if temp <= 0.0:
        raise DeviceError(f"temperature must be positive kelvin, got {temp}")
    return BOLTZMANN * temp / ELEMENTARY_CHARGE


def joglekar_window(x: float, p: int) -> float:
    """Joglekar boundary window f(x) = 1 - (2x - 1)^(2p) on x = w/L in [0, 1].

    ``p = 0`` returns exactly 1.0 (window disabled); larger p flattens the
    window in the middle while still pinning it to zero at both boundaries.
    """
    if not 0.0 <= x <= 1.0:
        raise DeviceError(f"window argument must lie in [0, 1], got {x}")
    if p == 0:
        return 1.0
    return 1.0 - (2.0 * x - 1.0) ** (2 * p)


# --------------------------------------------------------------------------- #
# Memristor
# --------------------------------------------------------------------------- #

def memristance(state: MemristorState, params: MemristorParams) -> float:
    """Instantaneous resistance M(w) = (w/L) Ron + (1 - w/L) Roff (ohm)."""
    x = state.w / params.length
    if not 0.0 <= x <= 1.0:
        raise DeviceError(f"state w={state.w} outside [0, L={params.length}]")
    return x * params.r_on + (1.0 - x) * params.r_off


def state_for_memristance(m0: float, params: MemristorParams) -> MemristorState:
    """Invert M(w): the boundary position that realizes memristance ``m0``."""
    if not params.r_on <= m0 <= params.r_off:
        raise DeviceError(
            f"target memristance {m0} outside [{params.r_on}, {params.r_off}]"
        )
    x = (params.r_off - m0) / (params.r_off - params.r_on)
    return MemristorState(w=x * params.length)


def memristor_dwdt(state: MemristorState, params: MemristorParams, current: float) -> float:
    """Boundary drift rate dw/dt (m/s) for the given device current (A).

    Linear ion drift scaled by the Joglekar window:
    ``polarity * uv * (Ron/L) * i * f(w/L)``.
    """
    x = state.w / params.length
    f = joglekar_window(min(max(x, 0.0), 1.0), params.window_p)
    return params.polarity * params.mobility * (params.r_on / params.length) * current * f


# --------------------------------------------------------------------------- #
# MOSFET square law
# --------------------------------------------------------------------------- #

def mosfet_vth(params: MosfetParams, temp: float = T_REF) -> float:
    """Threshold voltage at ``temp``: vth0 + vth_tc * (T - T0)."""
    return params.vth0 + params.vth_tc * (temp - T_REF)


def mosfet_kprime(params: MosfetParams, temp: float = T_REF) -> float:
    """Transconductance parameter at ``temp``: k' * (T/T0)^mobility_exp."""
    if temp <= 0.0:
        raise DeviceError(f"temperature must be positive kelvin, got {temp}")
    return params.k_prime * (temp / T_REF) ** params.mobility_exp


def _nmos_linearized(
    vgs: float, vds: float, vth: float, kp: float, params: MosfetParams
) -> tuple[float, float, float]:
    """Forward NMOS square law with derivatives; expects ``vds >= 0``."""
    beta = kp * params.width / params.length
    veff = vgs - vth
    if veff <= 0.0:
        return 0.0, 0.0, 0.0
    lam = params.lam
    if vds < veff:  # triode
        core = veff * vds - 0.5 * vds * vds
        clm = 1.0 + lam * vds
        i = beta * core * clm
        gm = beta * vds * clm
        gds = beta * ((veff - vds) * clm + core * lam)
        return i, gm, gds
    # saturation
    clm = 1.0 + lam * vds
    i = 0.5 * beta * veff * veff * clm
    gm = beta * veff * clm
    gds = 0.5 * beta * veff * veff * lam
    return i, gm, gds


def mosfet_linearized(
    vgs: float, vds: float, params: MosfetParams, temp: float = T_REF
) -> tuple[float, float, float]:
    """Drain current and its partials (id, d id/d vgs, d id/d vds).

    The current is signed into the drain terminal.  PMOS devices are handled
    by reflecting the bias point (and the threshold) through the origin;
    an NMOS driven with ``vds < 0`` is treated as the symmetric device with
    source and drain exchanged.
    """
    if params.polarity == "pmos":
        # reflect: a PMOS at (vgs, vds) behaves as an NMOS at (-vgs, -vds)
        # with the mirrored threshold; id changes sign, the partials do not.
        nparams = replace(params, polarity="nmos", vth0=-params.vth0, vth_tc=-params.vth_tc)
        i, gm, gds = mosfet_linearized(-vgs, -vds, nparams, temp)
        return -i, gm, gds
    vth = mosfet_vth(params, temp)
    kp = mosfet_kprime(params, temp)
    if vds >= 0.0:
        return _nmos_linearized(vgs, vds, vth, kp, params)
    # symmetric conduction with terminals exchanged
    i, gm_f, gds_f = _nmos_linearized(vgs - vds, -vds, vth, kp, params)
    return -i, -gm_f, gm_f + gds_f


def mosfet_current(vgs: float, vds: float, params: MosfetParams, temp: float = T_REF) -> float:
    """Square-law drain current (A); see :func:`mosfet_linearized` for signs."""
    return mosfet_linearized(vgs, vds, params, temp)[0]


# --------------------------------------------------------------------------- #
# Leakage estimators
# --------------------------------------------------------------------------- #

def subthreshold_leakage(
    vgs: float, vds: float, params: MosfetParams, temp: float = T_REF
) -> float:
    """Subthreshold channel current magnitude (A).

    ``I0 * exp((vgs - vth)/(n*VT)) * (1 - exp(-vds/VT))`` with
    ``I0 = (W/L) * k' * VT^2 * e^1.8``; the drain term saturates to 1 within
    a few VT of drain bias.  PMOS points are reflected onto the NMOS form.
    """
    if params.polarity == "pmos":
        nparams = replace(params, polarity="nmos", vth0=-params.vth0, vth_tc=-params.vth_tc)
        return subthreshold_leakage(-vgs, -vds, nparams, temp)
    vt = thermal_voltage(temp)
    vth = mosfet_vth(params, temp)
    kp = mosfet_kprime(params, temp)
    i0 = (params.width / params.length) * kp * vt * vt * math.exp(1.8)
    return i0 * math.exp((vgs - vth) / (params.n_sub * vt)) * (1.0 - math.exp(-vds / vt))


def gate_leakage_coefficients(params: MosfetParams) -> tuple[float, float]:
    """Tunneling prefactor A (A/V^2) and slope B (V/m) for the gate estimator.

    ``A = q^3 / (16 pi^2 hbar phi)`` and
    ``B = 4 pi sqrt(2 m_ox) phi^(3/2) / (3 hbar q)`` with the barrier height
    ``phi`` entering as an energy (phi_ox converted volts -> joules), the
    standard Fowler-Nordheim convention that keeps B/(vox/t_ox) dimensionless.
    """
    q = ELEMENTARY_CHARGE
    phi_j = params.phi_ox * q
    a = q**3 / (16.0 * math.pi**2 * REDUCED_PLANCK * phi_j)
    b = 4.0 * math.pi * math.sqrt(2.0 * params.m_ox) * phi_j**1.5 / (3.0 * REDUCED_PLANCK * q)
    return a, b


def gate_leakage(vox: float, params: MosfetParams) -> float:
    """Gate direct-tunneling current magnitude (A) at oxide voltage ``vox``.

    ``W*L*A*(vox/t_ox)^2 * exp(-B*(1 - (1 - vox/phi_ox)^(3/2))/(vox/t_ox))``.
    Polarity-symmetric in vox; exactly 0 at vox = 0 (the analytic limit);
    raises :class:`DeviceError` once ``|vox|`` reaches the barrier height,
    where the triangular-barrier expression loses validity.
    """
    v = abs(vox)
    if v >= params.phi_ox:
        raise DeviceError(f"|vox|={v} outside the tunneling domain [0, {params.phi_ox})")
    if v == 0.0:
        return 0.0
    a, b = gate_leakage_coefficients(params)
    field = v / params.t_ox
    shape = 1.0 - (1.0 - v / params.phi_ox) ** 1.5
    return params.width * params.length * a * field * field * math.exp(-b * shape / field)


# --------------------------------------------------------------------------- #
# Resistor and sources
# --------------------------------------------------------------------------- #

def resistor_value(params: ResistorParams, temp: float = T_REF) -> float:
    """Resistance at ``temp``: r_nominal * (1 + temp_coeff*(T - T0)) (ohm)."""
    r = params.r_nominal * (1.0 + params.temp_coeff * (temp - T_REF))
    if r <= 0.0:
        raise DeviceError(
            f"resistance {r} <= 0 at T={temp} K (temp_coeff={params.temp_coeff})"
        )
    return r


def source_value(spec: SourceSpec, time: float | None = None) -> float:
    """Source voltage at ``time`` (s); ``time=None`` means the DC analysis
    value, which for a sine source is its value at t = 0."""
    if spec.kind == "dc":
        return spec.dc_value
    t = 0.0 if time is None else time
    return spec.dc_value + spec.amplitude * math.sin(
        2.0 * math.pi * spec.frequency * t + spec.phase
    )
