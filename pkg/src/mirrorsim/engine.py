"""Numerical core: MNA assembly, Newton-Raphson DC solve, and fixed-step
backward-Euler transient simulation with coupled memristor state updates.

Unknown vector layout: index 0 is the ground node (pinned to 0 V by a trivial
row), indices 1..N-1 are node voltages, and the remaining entries are voltage
source branch currents (positive into the source's + terminal, the usual
SPICE sign convention, so a supply delivering power reads negative).

The dense linear solves go through :func:`numpy.linalg.solve` (LAPACK LU with
partial pivoting); circuits here have fewer than ten nodes, so no sparse
machinery is warranted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .constants import T_REF
from .devices import (
    MemristorState,
    memristance,
    memristor_dwdt,
    mosfet_current,
    mosfet_linearized,
    resistor_value,
    source_value,
)
from .netlist import (
    BoundMemristor,
    BoundMosfet,
    BoundResistor,
    BoundSource,
    Circuit,
)

__all__ = [
    "SimulationError",
    "SingularMatrixError",
    "NonConvergenceError",
    "UnknownProbeError",
    "SimOptions",
    "OperatingPoint",
    "Waveform",
    "TransientResult",
    "assemble_system",
    "solve_dc",
    "run_transient",
]

# default number of fixed steps when SimOptions.dt is not given
_DEFAULT_STEPS = 10_000

# outer fixed-point iterations coupling the nodal solve to the state update
_MAX_STATE_ITERS = 60

# Newton voltage-step limit on nodes touching a MOSFET terminal
_DAMP_LIMIT = 0.5


class SimulationError(Exception):
    """Base class for solver failures."""


class SingularMatrixError(SimulationError):
    pass


class NonConvergenceError(SimulationError):
    """Newton or state-coupling iteration failed to converge.

    ``trace`` holds one (iteration, max |dV|, KCL residual) triple per Newton
    iteration (residual is NaN on iterations where it was not evaluated);
    ``time`` is the transient timestamp for failures inside run_transient.
    """

    def __init__(self, message: str, trace=None, time: float | None = None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.time = time


class UnknownProbeError(SimulationError):
    pass


@dataclass(frozen=True)
class SimOptions:
    """Solver settings; defaults suit the second-scale circuits in this repo.

    ``temp=None`` defers to the circuit's own temperature (which the `.temp`
    directive sets); passing a value overrides it.  ``dt=None`` picks
    ``t_stop / 10000``.
    """

    abstol: float = 1e-9
    reltol: float = 1e-6
    vntol: float = 1e-6
    max_newton_iters: int = 100
    gmin: float = 1e-12
    dt: float | None = None
    t_stop: float | None = None
    temp: float | None = None
    source_steps: int = 10

    def __post_init__(self) -> None:
        if self.abstol <= 0.0 or self.reltol <= 0.0 or self.vntol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be >= 1")
        if self.gmin <= 0.0:
            raise ValueError("gmin must be positive")
        if self.dt is not None and self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_stop is not None and self.t_stop <= 0.0:
            raise ValueError("t_stop must be positive")
        if self.dt is not None and self.t_stop is not None and self.t_stop < self.dt:
            raise ValueError("t_stop must be >= dt")
        if self.temp is not None and self.temp <= 0.0:
            raise ValueError("temp must be positive kelvin")
        if self.source_steps < 1:
            raise ValueError("source_steps must be >= 1")


@dataclass
class OperatingPoint:
    """Converged DC solution.

    ``node_voltages[i]`` pairs with ``circuit.node_names[i]`` (ground at 0);
    ``device_currents`` maps every device name to its branch current — loads
    positive from n_pos to n_neg, MOSFETs positive into the drain, sources
    positive into the + terminal.
    """

    node_voltages: np.ndarray
    source_currents: dict[str, float]
    device_currents: dict[str, float]
    kcl_residual: float
    newton_iterations: int


@dataclass
class Waveform:
    name: str
    unit: str
    t: np.ndarray
    values: np.ndarray


@dataclass
class TransientResult:
    waveforms: list[Waveform]
    final_states: dict[str, float]
    dt: float

    def waveform(self, name: str) -> Waveform:
        wanted = name.replace(" ", "").lower()
        for w in self.waveforms:
            if w.name.replace(" ", "").lower() == wanted:
                return w
        raise UnknownProbeError(f"no recorded waveform {name!r}")


# --------------------------------------------------------------------------- #
# system assembly
# --------------------------------------------------------------------------- #

class _Plan:
    """Per-circuit scratch state: index maps and preallocated arrays."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.n_nodes = len(circuit.node_names)
        self.sources = [d for d in circuit.devices if isinstance(d, BoundSource)]
        self.resistors = [d for d in circuit.devices if isinstance(d, BoundResistor)]
        self.memristors = [d for d in circuit.devices if isinstance(d, BoundMemristor)]
        self.mosfets = [d for d in circuit.devices if isinstance(d, BoundMosfet)]
        self.branch_index = {
            s.name: self.n_nodes + k for k, s in enumerate(self.sources)
        }
        self.dim = self.n_nodes + len(self.sources)
        damped = {n for m in self.mosfets for n in (m.n_d, m.n_g, m.n_s)}
        self.damped_nodes = sorted(n for n in damped if n != 0)
        self.matrix = np.zeros((self.dim, self.dim))
        self.rhs = np.zeros(self.dim)
        if not any(0 in self._terminals(d) for d in circuit.devices):
            raise SingularMatrixError(
                "no device terminal touches ground; the nodal system is "
                "floating (gmin would mask the singularity)"
            )

    @staticmethod
    def _terminals(device) -> tuple[int, ...]:
        if isinstance(device, BoundMosfet):
            return (device.n_d, device.n_g, device.n_s, device.n_b)
        return (device.n_pos, device.n_neg)

    def initial_states(self) -> dict[str, float]:
        return {m.name: m.w0 for m in self.memristors}

    def _conductances(self, states: dict[str, float], temp: float):
        """(node+, node-, conductance) triples for resistors and memristors."""
        out = []
        for r in self.resistors:
            out.append((r.n_pos, r.n_neg, 1.0 / resistor_value(r.params, temp)))
        for m in self.memristors:
            res = memristance(MemristorState(states[m.name]), m.params)
            out.append((m.n_pos, m.n_neg, 1.0 / res))
        return out

    def assemble(self, guess, states, temp, gmin, source_scale, source_time):
        g_mat, rhs = self.matrix, self.rhs
        g_mat[:] = 0.0
        rhs[:] = 0.0
        g_mat[0, 0] = 1.0  # ground row pins v0 = 0 exactly
        for n in range(1, self.n_nodes):
            g_mat[n, n] += gmin

        def stamp_g(a: int, b: int, g: float) -> None:
            if a:
                g_mat[a, a] += g
            if b:
                g_mat[b, b] += g
            if a and b:
                g_mat[a, b] -= g
                g_mat[b, a] -= g

        for a, b, g in self._conductances(states, temp):
            stamp_g(a, b, g)

        for f in self.mosfets:
            vgs = guess[f.n_g] - guess[f.n_s]
            vds = guess[f.n_d] - guess[f.n_s]
            i0, gm, gds = mosfet_linearized(vgs, vds, f.params, temp)
            ieq = i0 - gm * vgs - gds * vds
            d, g, s = f.n_d, f.n_g, f.n_s
            if d:
                g_mat[d, d] += gds
                if g:
                    g_mat[d, g] += gm
                if s:
                    g_mat[d, s] -= gm + gds
                rhs[d] -= ieq
            if s:
                g_mat[s, s] += gm + gds
                if g:
                    g_mat[s, g] -= gm
                if d:
                    g_mat[s, d] -= gds
                rhs[s] += ieq
            stamp_g(d, s, gmin)  # keeps a cutoff channel weakly anchored

        for src in self.sources:
            br = self.branch_index[src.name]
            p, n = src.n_pos, src.n_neg
            if p:
                g_mat[p, br] += 1.0
                g_mat[br, p] += 1.0
            if n:
                g_mat[n, br] -= 1.0
                g_mat[br, n] -= 1.0
            rhs[br] = source_scale * source_value(src.spec, source_time)
        return g_mat, rhs

    def device_current(self, device, x, states, temp) -> float:
        """Branch current of one device at solution ``x`` (see OperatingPoint)."""
        if isinstance(device, BoundResistor):
            g = 1.0 / resistor_value(device.params, temp)
            return g * (x[device.n_pos] - x[device.n_neg])
        if isinstance(device, BoundMemristor):
            res = memristance(MemristorState(states[device.name]), device.params)
            return (x[device.n_pos] - x[device.n_neg]) / res
        if isinstance(device, BoundMosfet):
            vgs = x[device.n_g] - x[device.n_s]
            vds = x[device.n_d] - x[device.n_s]
            return mosfet_current(vgs, vds, device.params, temp)
        if isinstance(device, BoundSource):
            return x[self.branch_index[device.name]]
        raise TypeError(f"unknown device {device!r}")

    def kcl_residual(self, x, states, temp) -> float:
        """Largest net device current into any non-ground node (A)."""
        sums = np.zeros(self.n_nodes)
        for dev in self.circuit.devices:
            i = self.device_current(dev, x, states, temp)
            if isinstance(dev, BoundMosfet):
                if dev.n_d:
                    sums[dev.n_d] -= i
                if dev.n_s:
                    sums[dev.n_s] += i
            else:
                if dev.n_pos:
                    sums[dev.n_pos] -= i
                if dev.n_neg:
                    sums[dev.n_neg] += i
        if self.n_nodes == 1:
            return 0.0
        return float(np.max(np.abs(sums[1:])))

    # ---------------------------------------------------------------- Newton

    def newton(self, x0, states, temp, opts, source_scale=1.0, source_time=None,
               time_label: float | None = None):
        """Newton-Raphson to the dual tolerance: per-node voltage deltas below
        vntol + reltol*|V| and device-KCL residual below abstol."""
        x = np.array(x0, dtype=float)
        trace: list[tuple[int, float, float]] = []
        n = self.n_nodes
        for it in range(1, opts.max_newton_iters + 1):
            g_mat, rhs = self.assemble(
                x, states, temp, opts.gmin, source_scale, source_time
            )
            try:
                x_new = np.linalg.solve(g_mat, rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularMatrixError(
                    f"singular nodal matrix while solving {self.circuit.title!r}"
                ) from exc
            dv = x_new[:n] - x[:n]
            max_dv = float(np.max(np.abs(dv))) if n > 1 else 0.0
            v_ok = bool(
                np.all(np.abs(dv) < opts.vntol + opts.reltol * np.abs(x_new[:n]))
            )
            for node in self.damped_nodes:
                dv[node] = min(max(dv[node], -_DAMP_LIMIT), _DAMP_LIMIT)
            x[:n] += dv
            x[n:] = x_new[n:]
            if v_ok:
                residual = self.kcl_residual(x, states, temp)
                trace.append((it, max_dv, residual))
                if residual < opts.abstol:
                    return x, it, trace
            else:
                trace.append((it, max_dv, math.nan))
        suffix = "" if time_label is None else f" at t={time_label:.9g} s"
        raise NonConvergenceError(
            f"Newton did not converge within {opts.max_newton_iters} "
            f"iterations{suffix} (last max |dV|={trace[-1][1]:.3g} V)",
            trace=trace,
            time=time_label,
        )

    def operating_point(self, x, states, temp, iterations) -> OperatingPoint:
        currents = {
            d.name: self.device_current(d, x, states, temp)
            for d in self.circuit.devices
        }
        return OperatingPoint(
            node_voltages=np.array(x[: self.n_nodes]),
            source_currents={s.name: float(x[self.branch_index[s.name]])
                             for s in self.sources},
            device_currents=currents,
            kcl_residual=self.kcl_residual(x, states, temp),
            newton_iterations=iterations,
        )


def _effective_temp(circuit: Circuit, opts: SimOptions) -> float:
    return circuit.temp if opts.temp is None else opts.temp


def assemble_system(circuit: Circuit, guess, states: dict[str, float] | None = None,
                    temp: float | None = None, *, gmin: float = 1e-12,
                    source_scale: float = 1.0, source_time: float | None = None):
    """Linearized MNA system (matrix, rhs) at ``guess``.

    ``guess`` must have one entry per node (ground included, index 0) plus one
    per voltage source.  Memristor resistances are frozen at ``states``
    (initial states when omitted); ``gmin`` lands on every non-ground node
    diagonal.  Row/column 0 is the trivial ground pin.
    """
    plan = _Plan(circuit)
    if len(guess) != plan.dim:
        raise ValueError(f"guess must have {plan.dim} entries, got {len(guess)}")
    if states is None:
        states = plan.initial_states()
    if temp is None:
        temp = circuit.temp
    g_mat, rhs = plan.assemble(
        np.asarray(guess, dtype=float), states, temp, gmin, source_scale, source_time
    )
    return g_mat.copy(), rhs.copy()


# --------------------------------------------------------------------------- #
# DC operating point
# --------------------------------------------------------------------------- #

def _solve_dc_raw(plan: _Plan, opts: SimOptions, states, temp,
                  source_time: float | None = None, x0=None):
    """Newton from a cold start, falling back to source stepping on failure."""
    start = np.zeros(plan.dim) if x0 is None else np.array(x0, dtype=float)
    try:
        return plan.newton(start, states, temp, opts, 1.0, source_time)
    except NonConvergenceError:
        if opts.source_steps < 2:
            raise
    x = np.zeros(plan.dim)
    total = 0
    trace: list[tuple[int, float, float]] = []
    for k in range(1, opts.source_steps + 1):
        scale = k / opts.source_steps
        try:
            x, its, step_trace = plan.newton(x, states, temp, opts, scale, source_time)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"source stepping stalled at scale {scale:.2f}: {exc}",
                trace=exc.trace,
            ) from exc
        total += its
        trace = step_trace
    return x, total, trace


def solve_dc(circuit: Circuit, opts: SimOptions | None = None, *,
             states: dict[str, float] | None = None,
             source_time: float | None = None) -> OperatingPoint:
    """DC operating point with memristor states frozen (at their initial
    values unless ``states`` overrides them).

    Sine sources contribute their t=0 value unless ``source_time`` picks
    another instant.  Raises :class:`NonConvergenceError` (after a source
    stepping retry) or :class:`SingularMatrixError`.
    """
    opts = opts or SimOptions()
    plan = _Plan(circuit)
    if not plan.sources:
        raise SimulationError("circuit has no voltage source")
    if states is None:
        states = plan.initial_states()
    temp = _effective_temp(circuit, opts)
    x, iters, _ = _solve_dc_raw(plan, opts, states, temp, source_time)
    return plan.operating_point(x, states, temp, iters)


# --------------------------------------------------------------------------- #
# probes
# --------------------------------------------------------------------------- #

_PROBE_RE = re.compile(r"^([viwm])\((.+)\)$", re.IGNORECASE)


def _build_probe(plan: _Plan, spec: str):
    """Returns (canonical name, unit, sampler(x, states, temp) -> float)."""
    m = _PROBE_RE.match(spec.replace(" ", ""))
    if not m:
        raise UnknownProbeError(
            f"malformed probe {spec!r}; expected v(node), i(dev), w(dev) or m(dev)"
        )
    kind, target = m.group(1).lower(), m.group(2)
    circuit = plan.circuit
    if kind == "v":
        name = target.lower()
        if name not in circuit.node_names:
            raise UnknownProbeError(f"unknown node {target!r} in probe {spec!r}")
        idx = circuit.node_names.index(name)
        return f"v({name})", "V", lambda x, states, temp: float(x[idx])
    dev_name = target.upper()
    dev = next((d for d in circuit.devices if d.name == dev_name), None)
    if dev is None:
        raise UnknownProbeError(f"unknown device {target!r} in probe {spec!r}")
    if kind == "i":
        return (
            f"i({dev_name})",
            "A",
            lambda x, states, temp: float(plan.device_current(dev, x, states, temp)),
        )
    if not isinstance(dev, BoundMemristor):
        raise UnknownProbeError(
            f"probe {spec!r} needs a memristor, {dev_name} is not one"
        )
    if kind == "w":
        return f"w({dev_name})", "m", lambda x, states, temp: states[dev_name]
    return (
        f"m({dev_name})",
        "ohm",
        lambda x, states, temp: memristance(MemristorState(states[dev_name]), dev.params),
    )


# --------------------------------------------------------------------------- #
# transient
# --------------------------------------------------------------------------- #

def run_transient(circuit: Circuit, opts: SimOptions, probes: list[str], *,
                  initial_states: dict[str, float] | None = None) -> TransientResult:
    """Fixed-step backward-Euler transient.

    Every step couples the Newton nodal solve (memristances frozen at the
    iterate's states) to the implicit state update
    ``w_next = w_prev + dt * dwdt(w_next, i_next)`` through an outer fixed
    point, declared converged when no memristor state moves more than
    ``reltol * L``; states are clamped to [0, L].  Sample k sits at t = k*dt,
    sources evaluated at the same instant; sample 0 is the DC solution with
    sources at t = 0.  ``initial_states`` replaces the netlist's initial
    memristor states, letting one run continue where another settled.
    """
    if opts.t_stop is None:
        raise ValueError("run_transient needs opts.t_stop")
    dt = opts.dt if opts.dt is not None else opts.t_stop / _DEFAULT_STEPS
    n_steps = int(math.floor(opts.t_stop / dt + 1e-9))
    if n_steps < 1:
        raise ValueError("t_stop shorter than one step")

    plan = _Plan(circuit)
    if not plan.sources:
        raise SimulationError("circuit has no voltage source")
    temp = _effective_temp(circuit, opts)
    probe_list = [_build_probe(plan, p) for p in probes]

    times = np.arange(n_steps + 1) * dt
    data = [np.empty(n_steps + 1) for _ in probe_list]

    states = plan.initial_states()
    if initial_states is not None:
        for name, w in initial_states.items():
            key = name.upper()
            if key not in states:
                raise SimulationError(f"no memristor named {name!r} to initialize")
            mem = next(m for m in plan.memristors if m.name == key)
            if not 0.0 <= w <= mem.params.length:
                raise SimulationError(
                    f"initial state {w} for {key} outside [0, {mem.params.length}]"
                )
            states[key] = float(w)
    x, _, _ = _solve_dc_raw(plan, opts, states, temp, source_time=0.0)
    for buf, (_, _, sample) in zip(data, probe_list):
        buf[0] = sample(x, states, temp)

    mem_list = plan.memristors
    for k in range(1, n_steps + 1):
        t = float(times[k])
        w_prev = states
        w_cur = dict(states)
        for _ in range(_MAX_STATE_ITERS):
            x, _, _ = plan.newton(x, w_cur, temp, opts, 1.0, t, time_label=t)
            if not mem_list:
                break
            done = True
            w_next = {}
            for mem in mem_list:
                i = plan.device_current(mem, x, w_cur, temp)
                rate = memristor_dwdt(MemristorState(w_cur[mem.name]), mem.params, i)
                w = w_prev[mem.name] + dt * rate
                w = min(max(w, 0.0), mem.params.length)
                w_next[mem.name] = w
                if abs(w - w_cur[mem.name]) >= opts.reltol * mem.params.length:
                    done = False
            w_cur = w_next
            if done:
                break
        else:
            raise NonConvergenceError(
                f"memristor state coupling did not settle at t={t:.9g} s",
                time=t,
            )
        states = w_cur
        for buf, (_, _, sample) in zip(data, probe_list):
            buf[k] = sample(x, states, temp)

    waveforms = [
        Waveform(name=name, unit=unit, t=times.copy(), values=buf)
        for (name, unit, _), buf in zip(probe_list, data)
    ]
    return TransientResult(waveforms=waveforms, final_states=states, dt=dt)
