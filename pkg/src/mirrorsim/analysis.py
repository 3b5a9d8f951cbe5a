"""Measurement and sweep layer on top of the nodal engine.

Everything here consumes elaborated circuits (usually the built-in mirror
configurations) and produces plain result records: harmonic distortion of a
waveform, settling/switching times, load-mismatch tables, temperature and
parameter sweeps, pinched-hysteresis traces, and the side-by-side
power/area/distortion report across the four mirror configurations.

Two conventions hold throughout:

* ``I_in`` is the drain current of the diode-connected input device M1 and
  ``I_out`` the drain current of the output device M2; both are positive in
  normal operation for every configuration, PMOS-input ones included.
* Sweeps never mutate the circuit they are given.  Each sweep point runs on
  its own copy (:func:`mirrorsim.netlist.with_override`), which also makes
  row-level parallelism (``jobs > 1``) safe.  Rows are always assembled in
  input order, so results are identical for any job count.
"""

from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .constants import T_REF
from .devices import (
    DeviceError,
    MEMRISTOR_DEFAULTS,
    MemristorParams,
    ResistorParams,
    SourceSpec,
    gate_leakage,
    mosfet_current,
    subthreshold_leakage,
)
from .engine import (
    OperatingPoint,
    SimOptions,
    SimulationError,
    Waveform,
    run_transient,
    solve_dc,
)
from .netlist import (
    BoundMemristor,
    BoundMosfet,
    BoundResistor,
    BoundSource,
    Circuit,
    ElaborationError,
    MirrorConfig,
    MirrorKind,
    mirror_circuit,
    with_override,
)

__all__ = [
    "AnalysisError",
    "NotSettledError",
    "ThdResult",
    "SettledResult",
    "MismatchRow",
    "MismatchTable",
    "TemperatureRow",
    "ParameterRow",
    "HysteresisTrace",
    "ConfigReport",
    "AnalysisReport",
    "REPORT_NOTES",
    "compute_thd",
    "switching_time",
    "settled_transient",
    "mismatch_sweep",
    "temperature_sweep",
    "parameter_sweep",
    "hysteresis_trace",
    "power_and_area",
    "distortion_trace",
    "config_report",
    "table1_report",
    "calibrate_mobility",
]


# --------------------------------------------------------------------------- #
# Errors
# --------------------------------------------------------------------------- #

class AnalysisError(Exception):
    """A measurement or sweep could not be carried out as requested."""


class NotSettledError(AnalysisError):
    """A waveform never stayed inside the settle band long enough to call it
    settled (the in-band tail must cover at least 10% of the run)."""


# --------------------------------------------------------------------------- #
# Harmonic distortion
# --------------------------------------------------------------------------- #

_MIN_SAMPLES_PER_PERIOD = 20


@dataclass(frozen=True)
class ThdResult:
    """Single-tone harmonic decomposition of a waveform.

    ``fundamental`` is the amplitude at ``f0``; ``harmonics[k]`` is the
    amplitude at ``(k + 2) * f0``.  ``thd`` is the usual amplitude ratio
    ``sqrt(sum(harmonics**2)) / fundamental`` (a fraction, not percent) and
    always equals that recomputation of the stored magnitudes.
    """

    f0: float
    fundamental: float
    harmonics: np.ndarray
    thd: float

    @property
    def n_harmonics(self) -> int:
        return 1 + len(self.harmonics)

    @property
    def thd_percent(self) -> float:
        return 100.0 * self.thd


def compute_thd(wave: Waveform, f0: float, n_harmonics: int, *,
                settle: float | None = None) -> ThdResult:
    """Harmonic amplitudes of ``wave`` at ``k*f0`` and their distortion ratio.

    The leading ``settle`` seconds are discarded (default: 20% of the run or
    two periods of ``f0``, whichever is longer) and the analysis window is the
    trailing whole number of periods that survives, so drives need not start
    on a period boundary.  Amplitudes come from direct correlation with
    ``exp(-2j*pi*k*f0*t)`` over that window, which is exact for tones on the
    grid and free of spectral leakage between the measured bins.

    Raises :class:`AnalysisError` when the waveform is too short (fewer than
    two whole periods after the discard), when ``f0`` is not resolvable on
    the sample grid (fewer than 20 samples per period), or when the highest
    requested harmonic sits at or beyond the Nyquist rate.
    """
    if f0 <= 0.0:
        raise AnalysisError(f"fundamental frequency must be positive, got {f0}")
    if n_harmonics < 2:
        raise AnalysisError("need n_harmonics >= 2 (distortion sums harmonics 2..N)")
    t = np.asarray(wave.t, dtype=float)
    x = np.asarray(wave.values, dtype=float)
    if t.size < 2:
        raise AnalysisError("waveform too short: need at least two samples")
    dt = float(t[1] - t[0])
    samples_per_period = 1.0 / (f0 * dt)
    if samples_per_period < _MIN_SAMPLES_PER_PERIOD:
        raise AnalysisError(
            f"f0={f0} Hz not resolvable on the grid: {samples_per_period:.1f} "
            f"samples per period, need >= {_MIN_SAMPLES_PER_PERIOD}")
    if n_harmonics * f0 >= 0.5 / dt:
        raise AnalysisError(
            f"harmonic {n_harmonics} of f0={f0} Hz is at or beyond the Nyquist "
            f"rate for dt={dt}")
    span = float(t[-1] - t[0])
    discard = max(0.2 * span, 2.0 / f0) if settle is None else float(settle)
    periods = int(math.floor((span - discard) * f0 + 1e-9))
    if periods < 2:
        raise AnalysisError(
            f"waveform too short: {max(span - discard, 0.0):.3g} s left after a "
            f"{discard:.3g} s settle discard covers fewer than two periods of "
            f"{f0} Hz")
    count = int(round(periods * samples_per_period))
    tw = t[-count:]
    xw = x[-count:]
    orders = np.arange(1, n_harmonics + 1, dtype=float)
    basis = np.exp(-2j * math.pi * f0 * np.outer(orders, tw))
    mags = np.abs(basis @ xw) * (2.0 / count)
    fundamental = float(mags[0])
    if fundamental == 0.0:
        raise AnalysisError("no component at the fundamental frequency")
    harmonics = mags[1:].copy()
    thd = float(math.sqrt(float(np.dot(harmonics, harmonics))) / fundamental)
    return ThdResult(f0=f0, fundamental=fundamental, harmonics=harmonics, thd=thd)


# --------------------------------------------------------------------------- #
# Settling
# --------------------------------------------------------------------------- #

def switching_time(wave: Waveform, settle_band: float = 0.01) -> float:
    """Earliest time after which every sample stays within ``settle_band``
    (relative to the final value) of the final sample.

    A waveform that is in-band from its first sample switches at ``t[0]``
    (0.0 on engine grids).  The call is append-invariant: extending a settled
    waveform with more in-band samples does not move the switching time.

    Raises :class:`NotSettledError` when the in-band tail covers less than
    10% of the run, which is too little evidence to call the value final.
    """
    if settle_band <= 0.0:
        raise AnalysisError(f"settle_band must be positive, got {settle_band}")
    t = np.asarray(wave.t, dtype=float)
    x = np.asarray(wave.values, dtype=float)
    if t.size < 2:
        raise AnalysisError("waveform too short: need at least two samples")
    final = float(x[-1])
    band = settle_band * abs(final)
    outside = np.nonzero(np.abs(x - final) > band)[0]
    settled_at = float(t[0]) if outside.size == 0 else float(t[outside[-1] + 1])
    if settled_at - t[0] > 0.9 * (t[-1] - t[0]):
        raise NotSettledError(
            f"waveform only enters the {settle_band:.3g} band at t={settled_at:.6g} s "
            f"of a {float(t[-1]):.6g} s run; settled tail shorter than 10% of the run")
    return settled_at


@dataclass(frozen=True)
class SettledResult:
    """A circuit driven to its settled operating point.

    ``op`` is a DC solve with memristor states frozen at ``states`` (empty for
    circuits without memristors, which settle instantly); ``settle_time`` is
    the switching time of the probed output current.
    """

    op: OperatingPoint
    states: dict[str, float]
    settle_time: float


def settled_transient(circuit: Circuit, *, probe: str = "i(M2)",
                      temp: float | None = None, dt: float = 1e-3,
                      chunk: float = 3.0, max_time: float = 24.0,
                      settle_band: float = 0.01) -> SettledResult:
    """Run ``circuit`` until the probed current settles; return the end state.

    Circuits without memristors have no state to evolve, so a plain DC solve
    is already settled.  Otherwise the transient is extended ``chunk`` seconds
    at a time (continuing from the frozen memristor states) until
    :func:`switching_time` accepts the accumulated waveform; past ``max_time``
    the :class:`NotSettledError` propagates.
    """
    if not any(isinstance(d, BoundMemristor) for d in circuit.devices):
        return SettledResult(solve_dc(circuit, SimOptions(temp=temp)), {}, 0.0)
    t_parts: list[np.ndarray] = []
    x_parts: list[np.ndarray] = []
    states: dict[str, float] | None = None
    offset = 0.0
    name, unit = probe, ""
    while offset < max_time - 1e-9:
        res = run_transient(circuit, SimOptions(dt=dt, t_stop=chunk, temp=temp),
                            [probe], initial_states=states)
        wave = res.waveform(probe)
        name, unit = wave.name, wave.unit
        if t_parts:
            # sample 0 of a continuation repeats the previous final sample
            t_parts.append(wave.t[1:] + offset)
            x_parts.append(wave.values[1:])
        else:
            t_parts.append(wave.t)
            x_parts.append(wave.values)
        states = dict(res.final_states)
        offset += chunk
        full = Waveform(name, unit, np.concatenate(t_parts), np.concatenate(x_parts))
        try:
            settled_at = switching_time(full, settle_band)
        except NotSettledError:
            continue
        op = solve_dc(circuit, SimOptions(temp=temp), states=states)
        return SettledResult(op, states, settled_at)
    raise NotSettledError(
        f"{circuit.title!r}: {probe} did not settle within {max_time} s")


# --------------------------------------------------------------------------- #
# Sweeps
# --------------------------------------------------------------------------- #

def _map_rows(fn: Callable, items: Sequence, jobs: int) -> list:
    """Apply ``fn`` to every item, optionally on a thread pool.

    Results always come back in input order, so the job count never changes
    the output.
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class MismatchRow:
    """One output-load point of a mismatch sweep.

    ``simulated`` and ``predicted`` are the relative output-current error
    ``(I_D2 - I_D1) / I_D1``; the prediction is the small-signal closed form
    ``k_factor * (R1/R2 - 1)``.  A row whose simulation failed carries the
    message in ``error`` and NaN in ``simulated``.
    """

    load2: float
    rel_delta_r: float
    simulated: float
    predicted: float
    error: str | None = None


@dataclass(frozen=True)
class MismatchTable:
    """Mismatch sweep result.

    ``k_factor`` is ``1 / (1 - V_DS1/VDD)`` measured on the matched-load
    baseline, and ``baseline_current`` the input current I_D1 there.
    """

    rows: tuple[MismatchRow, ...]
    k_factor: float
    baseline_current: float


def mismatch_sweep(config: MirrorConfig, load2_values: Iterable[float], *,
                   temp: float = T_REF, jobs: int = 1) -> MismatchTable:
    """Output-current error versus output-load value, simulated and predicted.

    The input branch keeps its nominal load (``config.r_load`` for resistive
    configurations, ``config.m0`` for memristive ones) while the output load
    steps through ``load2_values``.  Memristive loads are held at the stated
    memristance for the solve — the sweep isolates the effect of a load value,
    so the state is pinned rather than allowed to drift during settling.
    Non-convergent rows are flagged and the sweep continues.
    """
    values = [float(v) for v in load2_values]
    if not values:
        raise AnalysisError("mismatch sweep needs at least one output-load value")
    if any(v <= 0.0 for v in values):
        raise AnalysisError("output-load values must be positive")
    memristive = config.kind.has_memristors
    base = config.m0 if memristive else config.r_load
    path = "Y2.m0" if memristive else "R2.r_nominal"
    circuit = mirror_circuit(config)
    opts = SimOptions(temp=temp)
    base_op = solve_dc(with_override(circuit, path, base), opts)
    vdd = config.vdd_value
    v_ds1 = float(base_op.node_voltages[circuit.node_index("d1")])
    k_factor = 1.0 / (1.0 - v_ds1 / vdd)
    i_d1_base = base_op.device_currents["M1"]

    def row(value: float) -> MismatchRow:
        rel = (value - base) / base
        predicted = k_factor * (base / value - 1.0)
        try:
            op = solve_dc(with_override(circuit, path, value), opts)
        except (ElaborationError, SimulationError) as exc:
            return MismatchRow(value, rel, math.nan, predicted, error=str(exc))
        i1 = op.device_currents["M1"]
        i2 = op.device_currents["M2"]
        return MismatchRow(value, rel, (i2 - i1) / i1, predicted)

    return MismatchTable(tuple(_map_rows(row, values, jobs)), k_factor, i_d1_base)


@dataclass(frozen=True)
class TemperatureRow:
    """Mirror currents at one temperature (kelvin)."""

    temp: float
    i_in: float
    i_out: float


def temperature_sweep(config: MirrorConfig, temps: Iterable[float], *,
                      jobs: int = 1) -> tuple[TemperatureRow, ...]:
    """Settled mirror currents across operating temperatures.

    Every device is re-evaluated at each temperature through its own law
    (threshold shift, mobility exponent, resistor tempco).  Memristive
    configurations run a settled transient per point; resistive ones are a
    DC solve.  Simulation failures propagate — a temperature row has no
    meaningful partial result.
    """
    points = [float(T) for T in temps]
    if not points:
        raise AnalysisError("temperature sweep needs at least one temperature")
    if any(T <= 0.0 for T in points):
        raise AnalysisError("temperatures are kelvin values and must be positive")
    circuit = mirror_circuit(config)

    def row(T: float) -> TemperatureRow:
        settled = settled_transient(circuit, temp=T)
        return TemperatureRow(T, settled.op.device_currents["M1"],
                              settled.op.device_currents["M2"])

    return tuple(_map_rows(row, points, jobs))


@dataclass(frozen=True)
class ParameterRow:
    """Output current and output-node voltage at one parameter value."""

    value: float
    i_out: float
    v_out: float


def parameter_sweep(config: MirrorConfig, param_path: str,
                    values: Iterable[float], *, temp: float | None = None,
                    jobs: int = 1) -> tuple[ParameterRow, ...]:
    """Settled ``(I_out, V_out)`` while one named parameter steps through
    ``values``.

    ``param_path`` is an ``ELEMENT.field`` path with the usual schematic
    aliases (``T2.width``, ``T2.vth0``, ``source.vbias``, ...).  Unknown paths
    and invalid values fail fast, before any simulation starts.
    """
    points = [float(v) for v in values]
    if not points:
        raise AnalysisError("parameter sweep needs at least one value")
    circuit = mirror_circuit(config)
    with_override(circuit, param_path, points[0])  # fail fast on bad paths
    out_node = circuit.node_index("d2")

    def row(value: float) -> ParameterRow:
        override = with_override(circuit, param_path, value)
        settled = settled_transient(override, temp=temp)
        return ParameterRow(value, settled.op.device_currents["M2"],
                            float(settled.op.node_voltages[out_node]))

    return tuple(_map_rows(row, points, jobs))


# --------------------------------------------------------------------------- #
# Hysteresis
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class HysteresisTrace:
    """Current-voltage trajectory of a sine-driven two-terminal loop.

    ``area`` is the unsigned area enclosed in the I-V plane by the final
    cycle (A*V).  The two lobes of a pinched loop are integrated per
    half-plane so they add instead of cancelling; a drive-proportional
    (memoryless) device encloses no area.  ``cycle_start`` indexes where
    that final cycle begins in the stored arrays.
    """

    t: np.ndarray
    voltage: np.ndarray
    current: np.ndarray
    area: float
    cycle_start: int


def _loop_area(v: np.ndarray, i: np.ndarray) -> float:
    """Unsigned I-V loop area, one closed cycle given as sample points.

    Integrates ``i dv`` separately over the v >= 0 and v < 0 half-planes.
    A pinched loop crosses between half-planes only at v = 0, where the
    connecting segment contributes nothing, so each partial integral is the
    signed area of one lobe and their magnitudes add without cancellation.
    """
    dv = np.diff(v, append=v[:1])          # closing segment back to the start
    mid_i = 0.5 * (i + np.roll(i, -1))
    mid_v = 0.5 * (v + np.roll(v, -1))
    segments = mid_i * dv
    positive = float(np.sum(segments[mid_v >= 0.0]))
    negative = float(np.sum(segments[mid_v < 0.0]))
    return abs(positive) + abs(negative)


def hysteresis_trace(params: MemristorParams | ResistorParams, drive: SourceSpec,
                     cycles: int = 3, samples_per_cycle: int = 2000, *,
                     initial_fraction: float = 0.5,
                     temp: float = T_REF) -> HysteresisTrace:
    """Drive a single two-terminal device with a sine and trace its I-V loop.

    The harness is a source-device loop: the device hangs directly across the
    drive.  Memristor parameters start at ``initial_fraction`` of the boundary
    travel; resistor parameters run in the identical harness and bound the
    numerical noise floor (their loop area is zero up to integration error).
    The loop area is measured on the last cycle, after the earlier cycles
    have washed out the initial state.
    """
    if drive.kind != "sine":
        raise AnalysisError("hysteresis needs a sine drive")
    if cycles < 1:
        raise AnalysisError(f"need at least one drive cycle, got {cycles}")
    if samples_per_cycle < 2 * _MIN_SAMPLES_PER_PERIOD:
        raise AnalysisError(
            f"need >= {2 * _MIN_SAMPLES_PER_PERIOD} samples per cycle "
            f"to resolve the loop, got {samples_per_cycle}")
    if isinstance(params, MemristorParams):
        if not 0.0 <= initial_fraction <= 1.0:
            raise AnalysisError(
                f"initial_fraction must lie in [0, 1], got {initial_fraction}")
        device = BoundMemristor("Y1", 1, 0, params, initial_fraction * params.length)
        current_probe = "i(Y1)"
    elif isinstance(params, ResistorParams):
        device = BoundResistor("R1", 1, 0, params)
        current_probe = "i(R1)"
    else:
        raise AnalysisError(
            "hysteresis harness takes memristor or resistor parameters")
    circuit = Circuit(
        title="sine-driven device loop",
        node_names=["0", "in"],
        devices=[BoundSource("V1", 1, 0, drive), device],
        temp=temp,
    )
    dt = 1.0 / (drive.frequency * samples_per_cycle)
    opts = SimOptions(dt=dt, t_stop=cycles / drive.frequency, temp=temp)
    result = run_transient(circuit, opts, ["v(in)", current_probe])
    voltage = result.waveform("v(in)").values
    current = result.waveform(current_probe).values
    t = result.waveform("v(in)").t
    start = len(voltage) - (samples_per_cycle + 1)
    area = _loop_area(voltage[start:], current[start:])
    return HysteresisTrace(t=t, voltage=voltage, current=current,
                           area=area, cycle_start=start)


# --------------------------------------------------------------------------- #
# Power, area, and the cross-configuration report
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ConfigReport:
    """One mirror configuration summarized: currents, power, leakage, area.

    ``power_w`` is the supply power ``VDD*(I_in + I_out)`` plus the supply
    share of the leakage estimates; ``subthreshold_w`` counts only devices
    that the square law puts in cutoff (a conducting channel's current is
    already inside I_in/I_out), while ``gate_w`` sums the tunneling estimate
    at every gate.  ``thd`` is the output-current distortion under the
    standard sine drive (None when not measured).  A configuration whose
    simulation failed carries the message in ``error`` and NaN elsewhere.
    """

    kind: str
    i_in: float
    i_out: float
    power_w: float
    subthreshold_w: float
    gate_w: float
    area_m2: float
    thd: float | None = None
    error: str | None = None

    @property
    def power_mw(self) -> float:
        return 1e3 * self.power_w

    @property
    def area_um2(self) -> float:
        return 1e12 * self.area_m2

    @property
    def thd_percent(self) -> float | None:
        return None if self.thd is None else 100.0 * self.thd


@dataclass(frozen=True)
class AnalysisReport:
    """The four built-in configurations compared side by side."""

    rows: tuple[ConfigReport, ...]
    notes: tuple[str, ...]


def _device_area(device) -> float:
    """Layout footprint of one device (m^2); sources occupy no area."""
    if isinstance(device, (BoundResistor, BoundMemristor)):
        return device.params.footprint_w * device.params.footprint_l
    if isinstance(device, BoundMosfet):
        return device.params.width * device.params.length
    return 0.0


def power_and_area(config: MirrorConfig, settled_op: OperatingPoint, *,
                   temp: float = T_REF, thd: float | None = None) -> ConfigReport:
    """Supply power, leakage breakdown, and total footprint at an operating
    point.

    ``settled_op`` must come from the same configuration (typically via
    :func:`settled_transient`).  At a zero-current operating point the power
    reduces to the leakage-only contribution.
    """
    circuit = mirror_circuit(config)
    vdd = config.vdd_value
    volts = settled_op.node_voltages
    i_in = settled_op.device_currents["M1"]
    i_out = settled_op.device_currents["M2"]
    sub_total = 0.0
    gate_total = 0.0
    for device in circuit.devices:
        if not isinstance(device, BoundMosfet):
            continue
        vgs = float(volts[device.n_g] - volts[device.n_s])
        vds = float(volts[device.n_d] - volts[device.n_s])
        if mosfet_current(vgs, vds, device.params, temp) == 0.0:
            sub_total += subthreshold_leakage(vgs, vds, device.params, temp)
        gate_total += gate_leakage(vgs, device.params)
    area = sum(_device_area(d) for d in circuit.devices)
    power = vdd * (i_in + i_out) + vdd * (sub_total + gate_total)
    return ConfigReport(
        kind=config.kind.value,
        i_in=i_in,
        i_out=i_out,
        power_w=power,
        subthreshold_w=vdd * sub_total,
        gate_w=vdd * gate_total,
        area_m2=area,
        thd=thd,
    )


_STATE_SETTLE_TIME = 6.0     # s; long enough to pin memristive loads
_THD_DRIVE_PERIODS = 10
_THD_SAMPLES_PER_PERIOD = 200

REPORT_NOTES = (
    "thd and power compare the four configurations under one shared device "
    "model; read them as orderings between rows, not foundry-exact values",
    "area is the plain sum of device footprints (resistor 2x10 um, "
    "memristor 45x90 nm, transistor W x L); report it alongside, not in "
    "place of, a layout estimate",
)
"""Caveats attached to every emitted report table."""


def _with_source_spec(circuit: Circuit, name: str, spec: SourceSpec) -> Circuit:
    """Copy of ``circuit`` with one source's drive replaced wholesale."""
    clone = copy.deepcopy(circuit)
    clone.device(name).spec = spec
    return clone


def _settled_load_states(circuit: Circuit, temp: float) -> dict[str, float]:
    """Memristor states after the supply has pinned the loads (empty when the
    circuit has none)."""
    if not any(isinstance(d, BoundMemristor) for d in circuit.devices):
        return {}
    settle = run_transient(
        circuit, SimOptions(dt=1e-3, t_stop=_STATE_SETTLE_TIME, temp=temp),
        ["i(M2)"])
    return dict(settle.final_states)


def _config_thd(circuit: Circuit, config: MirrorConfig,
                states: dict[str, float], temp: float, amplitude: float,
                frequency: float, n_harmonics: int) -> ThdResult:
    """Output-current distortion under the standard sine supply drive.

    The sine rides on ``vdd + amplitude`` so its floor stays at the nominal
    supply and the mirror never leaves normal operation over the cycle.
    """
    sine = SourceSpec(kind="sine", dc_value=config.vdd_value + amplitude,
                      amplitude=amplitude, frequency=frequency)
    driven = _with_source_spec(circuit, "V1", sine)
    opts = SimOptions(dt=1.0 / (frequency * _THD_SAMPLES_PER_PERIOD),
                      t_stop=_THD_DRIVE_PERIODS / frequency, temp=temp)
    result = run_transient(driven, opts, ["i(M2)"],
                           initial_states=states or None)
    return compute_thd(result.waveform("i(M2)"), frequency, n_harmonics)


def distortion_trace(config: MirrorConfig, *, circuit: Circuit | None = None,
                     temp: float = T_REF, amplitude: float = 2.5,
                     frequency: float = 50.0,
                     n_harmonics: int = 49) -> ThdResult:
    """Settle a mirror configuration, then measure the harmonic content of
    its output current under the standard sine supply drive.

    ``circuit`` lets a caller pass an already-elaborated (possibly
    parameter-overridden) instance of the same configuration.
    """
    if circuit is None:
        circuit = mirror_circuit(config)
    states = _settled_load_states(circuit, temp)
    return _config_thd(circuit, config, states, temp, amplitude, frequency,
                       n_harmonics)


def config_report(config: MirrorConfig, *, temp: float = T_REF,
                  amplitude: float = 2.5, frequency: float = 50.0,
                  n_harmonics: int = 49) -> ConfigReport:
    """One summary row for a configuration: settled currents, power, leakage,
    footprint, and output-current distortion.

    The configuration is settled first (memristive loads run a
    ``_STATE_SETTLE_TIME`` transient so their state is pinned, resistive ones
    solve directly), then measured.  A failure is captured in the row's
    ``error`` field rather than raised, so report tables always assemble.
    """
    try:
        circuit = mirror_circuit(config)
        states = _settled_load_states(circuit, temp)
        op = solve_dc(circuit, SimOptions(temp=temp), states=states or None)
        thd = _config_thd(circuit, config, states, temp, amplitude,
                          frequency, n_harmonics).thd
        return power_and_area(config, op, temp=temp, thd=thd)
    except (SimulationError, ElaborationError, DeviceError, AnalysisError) as exc:
        return ConfigReport(kind=config.kind.value, i_in=math.nan,
                            i_out=math.nan, power_w=math.nan,
                            subthreshold_w=math.nan, gate_w=math.nan,
                            area_m2=math.nan, error=str(exc))


def table1_report(vdd: float | None = None, r_load: float = 38e3,
                  m0: float = 5e3, temp: float = T_REF, *,
                  amplitude: float = 2.5, frequency: float = 50.0,
                  n_harmonics: int = 49, jobs: int = 1) -> AnalysisReport:
    """Side-by-side distortion/power/area report over all four mirror kinds.

    One :func:`config_report` row per configuration, in declaration order;
    rows that fail are flagged but the report is still emitted.  ``vdd=None``
    keeps each kind's per-topology default supply.
    """

    def row_for(kind: MirrorKind) -> ConfigReport:
        return config_report(MirrorConfig(kind=kind, vdd=vdd, r_load=r_load,
                                          m0=m0),
                             temp=temp, amplitude=amplitude,
                             frequency=frequency, n_harmonics=n_harmonics)

    rows = _map_rows(row_for, list(MirrorKind), jobs)
    return AnalysisReport(tuple(rows), REPORT_NOTES)


# --------------------------------------------------------------------------- #
# Mobility calibration
# --------------------------------------------------------------------------- #

def calibrate_mobility(target: float = 1.4, *, vdd: float = 2.5,
                       rel_tol: float = 0.01,
                       bracket: tuple[float, float] = (2e-15, 2e-13),
                       dt: float = 1e-3, settle_band: float = 0.01,
                       max_iters: int = 40) -> float:
    """Dopant mobility that makes the memristive mirror switch in ``target``
    seconds at supply ``vdd``.

    Switching time falls monotonically with mobility, so a log-scale
    bisection on the bracket converges; each probe is a settled transient of
    the two-memristor configuration measured with :func:`switching_time` on
    the output current.  Raises :class:`AnalysisError` when the target lies
    outside what the bracket can reach (including targets shorter than the
    simulation can resolve).
    """
    if target <= 0.0:
        raise AnalysisError(f"switching-time target must be positive, got {target}")
    if rel_tol <= 0.0:
        raise AnalysisError(f"rel_tol must be positive, got {rel_tol}")
    lo, hi = bracket
    if not 0.0 < lo < hi:
        raise AnalysisError(f"mobility bracket must satisfy 0 < lo < hi, got {bracket}")
    config = MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS, vdd=vdd)
    # Runs are capped well past the target; anything still unsettled there is
    # simply "slower than target" as far as the bisection is concerned.
    cap = max(6.0, 6.0 * target)

    def switching_for(mobility: float) -> float:
        params = replace(MEMRISTOR_DEFAULTS, mobility=mobility, polarity=-1)
        circuit = mirror_circuit(config, params)
        try:
            return settled_transient(circuit, dt=dt, settle_band=settle_band,
                                     max_time=cap).settle_time
        except NotSettledError:
            return math.inf

    s_lo = switching_for(lo)
    s_hi = switching_for(hi)
    if not s_hi <= target <= s_lo:
        raise AnalysisError(
            f"switching-time target {target} s is outside the range "
            f"[{s_hi:.4g}, {s_lo:.4g}] s reachable on the mobility bracket "
            f"[{lo:.3g}, {hi:.3g}]")
    for endpoint, s_end in ((lo, s_lo), (hi, s_hi)):
        if math.isfinite(s_end) and abs(s_end - target) <= rel_tol * target:
            return float(endpoint)
    for _ in range(max_iters):
        mid = math.sqrt(lo * hi)
        s_mid = switching_for(mid)
        if math.isfinite(s_mid) and abs(s_mid - target) <= rel_tol * target:
            return float(mid)
        if s_mid > target:
            lo = mid
        else:
            hi = mid
    raise AnalysisError(
        "mobility calibration did not converge; switching time is too "
        "insensitive to mobility near the target")
