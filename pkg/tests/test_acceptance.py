"""Acceptance gate: one test per shipped guarantee, each at its stated
tolerance, each emitting a single PASS/FAIL verdict line (collected into the
terminal summary by ``conftest``).

Criterion 4's closed-form clause is expected to fail, and is left red on
purpose.  The first-order prediction it checks against,
``delta_i/i = K*(R1/R2 - 1)`` with ``K = 1/(1 - V_DS1/V_DD)``, models the
output branch as load-dominated.  With these device parameters the output
transistor is saturated: its output resistance ``1/(lambda*I_D)`` (about
530 kOhm) — not the 15–23 kOhm load — sets the sensitivity, so the
simulated deviation is 20–30x smaller than the formula at every grid point
(closing the gap would need lambda of roughly 14/V versus the modeled
0.05/V).  The test states the clause faithfully and stays red rather than
bending the formula or the tolerance; the companion clause of the same
criterion (memristive and resistive curves within 1%) passes.
"""

import math

import numpy as np
import pytest

import conftest
import oracles
from mirrorsim.analysis import (
    calibrate_mobility,
    compute_thd,
    distortion_trace,
    hysteresis_trace,
    mismatch_sweep,
    power_and_area,
    settled_transient,
    temperature_sweep,
)
from mirrorsim.cli import main
from mirrorsim.constants import T_REF, ZERO_CELSIUS
from mirrorsim.devices import (
    CALIBRATED_MOBILITY,
    MEMRISTOR_DEFAULTS,
    MemristorParams,
    MemristorState,
    MosfetParams,
    SourceSpec,
    gate_leakage,
    memristance,
    subthreshold_leakage,
    thermal_voltage,
)
from mirrorsim.engine import SimOptions, Waveform, run_transient, solve_dc
from mirrorsim.netlist import (
    MirrorConfig,
    MirrorKind,
    builtin_mirror,
    mirror_circuit,
    parse,
    print_netlist,
)


def verdict(number, name, passed, detail):
    """Record one acceptance-criterion outcome and enforce it."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:02d} ({name}): {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def sine_wave(f0=1.0, samples_per_period=200, periods=10):
    dt = 1.0 / (f0 * samples_per_period)
    t = np.arange(0, periods * samples_per_period + 1) * dt
    return Waveform("x", "V", t, np.sin(2 * math.pi * f0 * t))


def square_wave(f0=1.0, samples_per_period=2000, periods=10):
    dt = 1.0 / (f0 * samples_per_period)
    t = np.arange(0, periods * samples_per_period + 1) * dt
    return Waveform("x", "V", t, np.sign(np.sin(2 * math.pi * f0 * t)))


@pytest.fixture(scope="module")
def settled_2m():
    """One settled memristive mirror shared by the criteria that need it."""
    circuit = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    return settled_transient(circuit)


def test_criterion_01_hysteresis_pinching():
    params = MemristorParams(polarity=-1)
    f0 = 5.0

    def trace_at(freq):
        drive = SourceSpec(kind="sine", dc_value=0.0, amplitude=2.5,
                           frequency=freq)
        return hysteresis_trace(params, drive)

    traces = {m: trace_at(m * f0) for m in (1, 2, 10, 100)}

    # |i| at every voltage zero-crossing (linear interpolation between the
    # bracketing samples, plus any sample landing exactly on zero)
    worst_pinch = 0.0
    for trace in traces.values():
        v, i = trace.voltage, trace.current
        crossings = np.nonzero(v[:-1] * v[1:] < 0.0)[0]
        frac = v[crossings] / (v[crossings] - v[crossings + 1])
        at_crossing = i[crossings] + frac * (i[crossings + 1] - i[crossings])
        exact = i[np.abs(v) < 1e-12]
        candidates = np.concatenate([np.abs(at_crossing), np.abs(exact)])
        worst_pinch = max(worst_pinch, float(candidates.max()))
    pinched = worst_pinch < 1e-9

    areas = [traces[m].area for m in (1, 2, 10)]
    shrinking = areas[0] > areas[1] > areas[2]

    # at 100*f0 the loop collapses onto a straight line through the origin
    hf = traces[100]
    basis = np.column_stack([hf.voltage, np.ones_like(hf.voltage)])
    coef, *_ = np.linalg.lstsq(basis, hf.current, rcond=None)
    residual = float(np.abs(hf.current - basis @ coef).max())
    peak = float(np.abs(hf.current).max())
    collapsed = residual < 0.01 * peak

    verdict(1, "hysteresis pinching", pinched and shrinking and collapsed,
            f"max |i| at zero-crossings {worst_pinch:.2e} A; loop areas "
            f"{areas[0]:.2e} > {areas[1]:.2e} > {areas[2]:.2e} A*V; "
            f"line-fit residual at 100*f0 {100 * residual / peak:.3f}% of peak")


def test_criterion_02_switching_calibration(settled_2m):
    mobility = calibrate_mobility()
    matches_shipped = math.isclose(mobility, CALIBRATED_MOBILITY, rel_tol=1e-9)

    times = {2.5: settled_2m.settle_time}
    for vdd in (2.0, 3.0):
        circuit = mirror_circuit(
            MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS, vdd=vdd))
        times[vdd] = settled_transient(circuit).settle_time

    on_target = abs(times[2.5] - 1.4) <= 0.05 * 1.4
    monotone = times[2.0] > times[2.5] > times[3.0]

    verdict(2, "switching-time calibration",
            matches_shipped and on_target and monotone,
            f"calibrated mobility {mobility:.6e} m^2/(V*s); switching at "
            f"2.0/2.5/3.0 V = {times[2.0]:.3f}/{times[2.5]:.3f}/"
            f"{times[3.0]:.3f} s (target 1.4 +/- 5% at 2.5 V)")


def test_criterion_03_mirror_fidelity(settled_2m):
    op_r = solve_dc(mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_RESISTORS)))
    errors = {}
    for label, op in (("2r", op_r), ("2m", settled_2m.op)):
        i_in = abs(op.device_currents["M1"])
        i_out = abs(op.device_currents["M2"])
        errors[label] = abs(i_out - i_in) / i_in
    ok = all(err < 1e-3 for err in errors.values())
    verdict(3, "mirror fidelity", ok,
            f"|i_out - i_in|/i_in = {errors['2r']:.2e} (resistive), "
            f"{errors['2m']:.2e} (memristive, settled); bound 1e-3")


def test_criterion_04_mismatch_linearity():
    base = 19e3
    deltas = [round(-0.20 + 0.05 * k, 2) for k in range(9)]
    grid = [base * (1.0 + d) for d in deltas]
    table_r = mismatch_sweep(
        MirrorConfig(kind=MirrorKind.TWO_RESISTORS, r_load=base), grid)
    table_m = mismatch_sweep(
        MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS, m0=base), grid)

    # clause 1: simulated current deviation within 5% of the closed-form
    # first-order prediction K*(R1/R2 - 1)
    prediction_gaps = [
        abs(row.simulated - row.predicted) / abs(row.predicted)
        for row in table_r.rows if row.rel_delta_r != 0.0
    ]
    closed_form_ok = max(prediction_gaps) < 0.05

    # clause 2: the memristive circuit traces the resistive curve
    curve_gaps = [
        abs(rr.simulated - rm.simulated) / max(abs(rr.simulated), 1e-30)
        for rr, rm in zip(table_r.rows, table_m.rows)
        if rr.rel_delta_r != 0.0
    ]
    curves_agree = max(curve_gaps) < 0.01

    verdict(4, "mismatch linearity", closed_form_ok and curves_agree,
            f"closed-form clause: max |sim-pred|/|pred| = "
            f"{max(prediction_gaps):.3f} (needs < 0.05, K = "
            f"{table_r.k_factor:.4f}); curve-agreement clause: max relative "
            f"gap {max(curve_gaps):.2e} (needs < 0.01) — red by design, "
            f"analysis in this module's docstring")


def test_criterion_05_thd_correctness():
    pure = compute_thd(sine_wave(), 1.0, 49).thd
    pure_ok = pure < 1e-6

    thd49 = compute_thd(square_wave(), 1.0, 49).thd
    oracle49 = oracles.o_square_wave_thd(49)
    oracle_ok = abs(thd49 - oracle49) / oracle49 < 1e-4

    thd199 = compute_thd(square_wave(), 1.0, 199).thd
    square_ok = abs(100 * thd199 - 48.34) <= 0.5

    thd_r = distortion_trace(
        MirrorConfig(kind=MirrorKind.TWO_RESISTORS), temp=T_REF).thd
    thd_m = distortion_trace(
        MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS), temp=T_REF).thd
    ordered = thd_m <= thd_r * (1 + 1e-6)
    in_band = all(0.005 <= x <= 0.05 for x in (thd_r, thd_m))

    verdict(5, "thd correctness",
            pure_ok and oracle_ok and square_ok and ordered and in_band,
            f"pure sine {pure:.1e}; square vs oracle rel "
            f"{abs(thd49 - oracle49) / oracle49:.1e} at 49 harmonics, "
            f"{100 * thd199:.2f}% at 199 (target 48.34 +/- 0.5); mirror THD "
            f"memristive {100 * thd_m:.4f}% <= resistive {100 * thd_r:.4f}%, "
            f"both in [0.5%, 5%]")


def test_criterion_06_power_parity(settled_2m):
    config_r = MirrorConfig(kind=MirrorKind.TWO_RESISTORS)
    config_m = MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS)
    op_r = solve_dc(mirror_circuit(config_r))
    row_r = power_and_area(config_r, op_r)
    row_m = power_and_area(config_m, settled_2m.op)
    gap = abs(row_r.power_w - row_m.power_w) / row_r.power_w
    verdict(6, "power parity", gap < 0.01,
            f"steady-state power {row_r.power_mw:.6f} mW (resistive) vs "
            f"{row_m.power_mw:.6f} mW (memristive), gap {100 * gap:.4f}% "
            f"(bound 1%)")


def test_criterion_07_area_ordering(settled_2m):
    ops = {}
    for kind in MirrorKind:
        config = MirrorConfig(kind=kind)
        op = (settled_2m.op if kind is MirrorKind.TWO_MEMRISTORS
              else settled_transient(mirror_circuit(config)).op)
        ops[kind.value] = power_and_area(config, op)
    nmos_ok = ops["2m"].area_m2 < 0.5 * ops["2r"].area_m2
    pmos_ok = ops["pmos-m"].area_m2 < 0.5 * ops["pmos-r"].area_m2
    from mirrorsim.analysis import REPORT_NOTES
    flagged = any("footprint" in note for note in REPORT_NOTES)
    verdict(7, "area ordering", nmos_ok and pmos_ok and flagged,
            f"memristive footprints {ops['2m'].area_um2:.4f} / "
            f"{ops['pmos-m'].area_um2:.4f} um^2 vs resistive "
            f"{ops['2r'].area_um2:.4f} / {ops['pmos-r'].area_um2:.4f} um^2 "
            f"(each under half); report carries the footprint-sum caveat")


def test_criterion_08_temperature_behavior():
    temps = [ZERO_CELSIUS + c for c in range(0, 101, 10)]
    rows_r = temperature_sweep(
        MirrorConfig(kind=MirrorKind.TWO_RESISTORS), temps)
    rows_m = temperature_sweep(
        MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS), temps, jobs=2)

    def spread(rows):
        i = [row.i_out for row in rows]
        monotone = all(a > b for a, b in zip(i, i[1:]))
        return monotone, (max(i) - min(i)) / max(i)

    mono_r, var_r = spread(rows_r)
    mono_m, var_m = spread(rows_m)
    verdict(8, "temperature behavior", mono_r and mono_m and var_m < var_r,
            f"i_out falls monotonically 0-100 C in both circuits; total "
            f"variation {100 * var_m:.2f}% (memristive) < {100 * var_r:.2f}% "
            f"(resistive)")


def test_criterion_09_formula_oracles():
    rng = np.random.default_rng(20260819)
    worst = 0.0

    def track(value, reference):
        nonlocal worst
        scale = max(abs(reference), 1e-300)
        worst = max(worst, abs(value - reference) / scale)

    for _ in range(100):
        temp = rng.uniform(150.0, 450.0)
        track(thermal_voltage(temp), oracles.o_thermal_voltage(temp))

        r_on = rng.uniform(50.0, 10e3)
        r_off = r_on * rng.uniform(2.0, 100.0)
        length = rng.uniform(1e-9, 1e-7)
        w = rng.uniform(0.0, 1.0) * length
        mem = MemristorParams(r_on=r_on, r_off=r_off, length=length)
        track(memristance(MemristorState(w=w), mem),
              oracles.o_memristance(w, length, r_on, r_off))

        fet = MosfetParams(
            vth0=rng.uniform(0.3, 0.6), k_prime=rng.uniform(50e-6, 300e-6),
            n_sub=rng.uniform(1.1, 2.0), t_ox=rng.uniform(2e-9, 6e-9),
            phi_ox=rng.uniform(2.8, 3.5), width=rng.uniform(0.1e-6, 2e-6),
            length=rng.uniform(0.1e-6, 1e-6))
        vgs, vds = rng.uniform(0.0, 0.4), rng.uniform(0.05, 2.5)
        track(subthreshold_leakage(vgs, vds, fet, temp),
              oracles.o_subthreshold(
                  vgs, vds, vth0=fet.vth0, vth_tc=fet.vth_tc,
                  k_prime=fet.k_prime, mobility_exp=fet.mobility_exp,
                  n_sub=fet.n_sub, width=fet.width, length=fet.length,
                  temp=temp))

        vox = rng.uniform(0.1, 0.9 * fet.phi_ox)
        track(gate_leakage(vox, fet),
              oracles.o_gate_leakage(
                  vox, phi_ox=fet.phi_ox, m_ox=fet.m_ox, t_ox=fet.t_ox,
                  width=fet.width, length=fet.length))

    verdict(9, "formula oracles", worst < 1e-12,
            f"thermal voltage, memristance, subthreshold and gate leakage vs "
            f"independent transcriptions on a 100-point random grid: worst "
            f"relative error {worst:.2e} (bound 1e-12)")


def test_criterion_10_solver_soundness():
    divider = ("* divider\nV1 in 0 DC 2.5\nR1 in mid 1k\nR2 mid 0 1k\n.end\n")
    ladder = ("* ladder\nV1 in 0 DC 1\nR1 in a 200\nR2 a b 300\n"
              "R3 b 0 500\n.end\n")
    from mirrorsim.netlist import elaborate

    worst_linear = 0.0
    residuals = []

    op = solve_dc(elaborate(parse(divider)))
    worst_linear = max(worst_linear, abs(op.node_voltages[2] - 1.25) / 1.25)
    residuals.append(op.kcl_residual)

    op = solve_dc(elaborate(parse(ladder)))
    v = op.node_voltages
    worst_linear = max(worst_linear,
                       abs(v[2] - 0.8) / 0.8, abs(v[3] - 0.5) / 0.5)
    residuals.append(op.kcl_residual)

    for kind in MirrorKind:
        residuals.append(
            solve_dc(mirror_circuit(MirrorConfig(kind=kind))).kcl_residual)

    finals = {}
    for dt in (1e-3, 5e-4):
        circuit = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
        result = run_transient(circuit, SimOptions(dt=dt, t_stop=1.0),
                               ["m(Y2)"])
        finals[dt] = result.waveforms[0].values[-1]
    halving = abs(finals[1e-3] - finals[5e-4]) / finals[5e-4]

    ok = worst_linear < 1e-9 and max(residuals) < 1e-9 and halving < 1e-3
    verdict(10, "solver soundness", ok,
            f"linear circuits vs analytic: worst rel {worst_linear:.1e}; "
            f"max KCL residual {max(residuals):.1e} A over 6 solutions; "
            f"step-halving moves the mid-transition memristance by "
            f"{100 * halving:.4f}% (bound 0.1%)")


def test_criterion_11_front_end(tmp_path, capsys):
    stable = all(
        print_netlist(parse(print_netlist(builtin_mirror(
            MirrorConfig(kind=kind)))))
        == print_netlist(builtin_mirror(MirrorConfig(kind=kind)))
        for kind in MirrorKind)

    bad = tmp_path / "bad.cir"
    bad.write_text("* bad\nR1 a\n.end\n", encoding="utf-8")
    walkup = tmp_path / "walkup.cir"
    walkup.write_text(
        "* walkup\nV1 vdd 0 DC 1e6\nR1 vdd d 1\nM1 d d 0 0 NCH\n"
        ".model NCH NMOS (vth0=0.45 kp=170u lambda=0.05)\n.end\n",
        encoding="utf-8")
    codes = (
        main(["run", str(bad)]),
        main(["run", str(walkup)]),
        main(["run", str(tmp_path / "absent.cir")]),
    )
    capsys.readouterr()  # swallow the CLI diagnostics
    codes_ok = codes == (1, 2, 3)

    verdict(11, "front-end", stable and codes_ok,
            f"print/parse/print identity holds on all four built-in "
            f"netlists; exit codes (parse, non-convergence, io) = {codes}")
