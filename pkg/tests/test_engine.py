"""Engine tests: MNA stamps, DC solve against analytic and scalar oracles,
error paths, and backward-Euler transient behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorsim.devices import (
    MemristorState,
    joglekar_window,
    memristance,
    mosfet_kprime,
    mosfet_vth,
    resistor_value,
    state_for_memristance,
)
from mirrorsim.engine import (
    NonConvergenceError,
    SimOptions,
    SimulationError,
    SingularMatrixError,
    UnknownProbeError,
    assemble_system,
    run_transient,
    solve_dc,
)
from mirrorsim.netlist import (
    BoundResistor,
    BoundSource,
    Circuit,
    MirrorConfig,
    MirrorKind,
    ResistorParams,
    SourceSpec,
    elaborate,
    mirror_circuit,
    parse,
)

GMIN = 1e-12


def _circuit(text: str) -> Circuit:
    return elaborate(parse(text))


# --------------------------------------------------------------------------- #
# assembly stamps
# --------------------------------------------------------------------------- #

def test_single_resistor_diagonal_includes_gmin():
    cir = _circuit("V1 1 0 DC 2.5\nR1 1 0 1k\n")
    g_mat, _ = assemble_system(cir, np.zeros(3))
    assert g_mat[1][1] == 1e-3 + GMIN


def test_memristor_stamps_identically_to_equal_resistor():
    res = _circuit("V1 a 0 DC 1\nR1 a 0 5k\n")
    mem = _circuit(
        "V1 a 0 DC 1\n"
        "Y1 a 0 MEM m0=5k\n"
        ".model MEM MEMRISTOR (ron=100 roff=38k l=10n uv=2e-14 p=1 pol=-1)\n"
    )
    g_res, rhs_res = assemble_system(res, np.zeros(3))
    g_mem, rhs_mem = assemble_system(mem, np.zeros(3))
    assert g_mem == pytest.approx(g_res, rel=1e-12)
    assert rhs_mem == pytest.approx(rhs_res)


def test_cutoff_mosfet_stamps_only_gmin_scale_terms():
    # all nodes at 0 V: vgs = 0 < vth, the device contributes nothing but gmin
    cir = _circuit(
        "V1 d 0 DC 1\nV2 g 0 DC 0\nM1 d g 0 0 NCH\n.model NCH NMOS (vth0=0.45)\n"
    )
    g_mat, rhs = assemble_system(cir, np.zeros(5))
    d = cir.node_index("d")
    g = cir.node_index("g")
    # drain node: node gmin + channel gmin only
    assert g_mat[d][d] == pytest.approx(2 * GMIN, rel=1e-12)
    assert g_mat[d][g] == 0.0
    assert rhs[d] == 0.0
    assert rhs[g] == 0.0


def test_assemble_checks_guess_dimension():
    cir = _circuit("V1 1 0 DC 2.5\nR1 1 0 1k\n")
    with pytest.raises(ValueError):
        assemble_system(cir, np.zeros(2))


def test_source_scale_ramps_the_rhs():
    cir = _circuit("V1 1 0 DC 2.5\nR1 1 0 1k\n")
    _, rhs_full = assemble_system(cir, np.zeros(3))
    _, rhs_half = assemble_system(cir, np.zeros(3), source_scale=0.5)
    assert rhs_half == pytest.approx(0.5 * rhs_full)


# --------------------------------------------------------------------------- #
# DC: linear circuits
# --------------------------------------------------------------------------- #

def test_divider_matches_analytic():
    cir = _circuit("V1 top 0 DC 2.5\nR1 top mid 1k\nR2 mid 0 1k\n")
    op = solve_dc(cir)
    v_mid = op.node_voltages[cir.node_index("mid")]
    assert abs(v_mid - 1.25) / 1.25 < 1e-9
    # SPICE sign: a delivering source reads negative branch current (the
    # tolerance leaves room for the ~2.5e-12 A the gmin diagonals draw)
    assert op.source_currents["V1"] == pytest.approx(-1.25e-3, rel=1e-8)
    assert op.kcl_residual < 1e-9


@settings(deadline=None, max_examples=60)
@given(
    rs=st.lists(st.floats(min_value=100.0, max_value=500.0), min_size=2, max_size=4),
    vdd=st.floats(min_value=0.5, max_value=5.0),
)
def test_series_ladder_matches_voltage_divider_formula(rs, vdd):
    lines = [f"V1 n0 0 DC {vdd!r}"]
    for k, r in enumerate(rs):
        bottom = "0" if k == len(rs) - 1 else f"n{k + 1}"
        lines.append(f"R{k + 1} n{k} {bottom} {r!r}")
    op = solve_dc(_circuit("\n".join(lines) + "\n"))
    cir = _circuit("\n".join(lines) + "\n")
    total = sum(rs)
    # the ideal divider is displaced only by the gmin node shunts: each of
    # the len(rs) non-ground nodes leaks at most gmin*vdd, seen at a tap
    # through a transfer resistance of at most the total ladder resistance
    tol = len(rs) * SimOptions().gmin * total * vdd
    below = total
    for k in range(len(rs)):
        expected = vdd * below / total  # analytic tap voltage, no linear algebra
        got = op.node_voltages[cir.node_index(f"n{k}")]
        assert abs(got - expected) < tol
        below -= rs[k]


def test_temp_directive_scales_resistance():
    cir = _circuit("V1 a 0 DC 2.5\nR1 a 0 1k\n.temp 100\n")
    op = solve_dc(cir)
    r_hot = resistor_value(ResistorParams(r_nominal=1e3), temp=373.15)
    assert op.device_currents["R1"] == pytest.approx(2.5 / r_hot, rel=1e-9)


def test_options_temp_overrides_circuit_temp():
    cir = _circuit("V1 a 0 DC 2.5\nR1 a 0 1k\n.temp 100\n")
    op = solve_dc(cir, SimOptions(temp=300.15))
    assert op.device_currents["R1"] == pytest.approx(2.5e-3, rel=1e-9)


# --------------------------------------------------------------------------- #
# DC: the mirror against an independent scalar oracle
# --------------------------------------------------------------------------- #

def _diode_vgs_by_bisection(vdd, r, params, temp=300.15):
    """Input-branch fixed point (vdd - v)/r = id(v, v) solved by bisection."""
    vth = mosfet_vth(params, temp)
    beta = mosfet_kprime(params, temp) * params.width / params.length

    def gap(v):
        veff = v - vth
        drain = 0.5 * beta * veff * veff * (1.0 + params.lam * v) if veff > 0 else 0.0
        return (vdd - v) / r - drain

    lo, hi = vth, vdd
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_mirror_dc_matches_scalar_fixed_point():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_RESISTORS))
    op = solve_dc(cir)
    v_star = _diode_vgs_by_bisection(2.5, 38e3, cir.device("M1").params)
    v_d1 = op.node_voltages[cir.node_index("d1")]
    # the oracle has no gmin; its ~2e-12 A draw displaces d1 by ~1e-8 relative
    assert v_d1 == pytest.approx(v_star, rel=1e-7)
    assert v_d1 == pytest.approx(0.994141, abs=5e-7)  # frozen
    i_in = op.device_currents["R1"]
    assert i_in == pytest.approx((2.5 - v_star) / 38e3, rel=1e-7)
    assert i_in == pytest.approx(39.6279e-6, rel=1e-5)  # frozen


def test_mirror_duplicates_input_current():
    for kind in (MirrorKind.TWO_RESISTORS, MirrorKind.TWO_MEMRISTORS):
        op = solve_dc(mirror_circuit(MirrorConfig(kind=kind)))
        i1, i2 = op.device_currents["M1"], op.device_currents["M2"]
        assert abs(i2 - i1) / i1 < 1e-3
        # equal loads and matched devices make the two KCL rows identical,
        # so the duplication is in fact exact here
        assert abs(i2 - i1) / i1 < 1e-12


def test_kcl_residual_below_abstol_for_all_builtin_mirrors():
    for kind in MirrorKind:
        op = solve_dc(mirror_circuit(MirrorConfig(kind=kind)))
        assert op.kcl_residual < 1e-9


def test_pmos_mirror_operating_point():
    op = solve_dc(mirror_circuit(MirrorConfig(kind=MirrorKind.PMOS_RESISTOR)))
    # frozen: PMOS input branch delivers ~34.2 uA, output mirrors ~33.8 uA
    assert op.device_currents["MP1"] == pytest.approx(-34.210e-6, rel=1e-3)
    assert op.device_currents["R2"] == pytest.approx(33.816e-6, rel=1e-3)


def test_dc_freezes_memristor_state_at_initial_value():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    op = solve_dc(cir)
    y2 = cir.device("Y2")
    m0 = memristance(MemristorState(y2.w0), y2.params)
    v_drop = op.node_voltages[cir.node_index("vdd")] - op.node_voltages[
        cir.node_index("d2")
    ]
    assert op.device_currents["Y2"] == pytest.approx(v_drop / m0, rel=1e-12)


def test_solve_dc_accepts_frozen_state_overrides():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    y2 = cir.device("Y2")
    w_target = state_for_memristance(19e3, y2.params).w
    op = solve_dc(cir, states={"Y1": y2.w0, "Y2": w_target})
    v_drop = op.node_voltages[cir.node_index("vdd")] - op.node_voltages[
        cir.node_index("d2")
    ]
    assert op.device_currents["Y2"] == pytest.approx(v_drop / 19e3, rel=1e-9)


# --------------------------------------------------------------------------- #
# DC: failure modes
# --------------------------------------------------------------------------- #

def test_no_ground_path_is_singular_up_front():
    params = ResistorParams(r_nominal=1e3)
    floating = Circuit(
        "floating",
        ["0", "a", "b"],
        [
            BoundSource("V1", 1, 2, SourceSpec(kind="dc", dc_value=1.0)),
            BoundResistor("R1", 1, 2, params),
        ],
    )
    with pytest.raises(SingularMatrixError):
        solve_dc(floating)


def test_parallel_voltage_sources_are_singular():
    cir = _circuit("V1 a 0 DC 2.5\nV2 a 0 DC 1.0\nR1 a 0 1k\n")
    with pytest.raises(SingularMatrixError):
        solve_dc(cir)


def test_circuit_without_source_is_rejected():
    params = ResistorParams(r_nominal=1e3)
    cir = Circuit("r only", ["0", "a"], [BoundResistor("R1", 1, 0, params)])
    with pytest.raises(SimulationError):
        solve_dc(cir)


def test_nonconvergence_carries_iteration_trace():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_RESISTORS))
    with pytest.raises(NonConvergenceError) as exc:
        solve_dc(cir, SimOptions(max_newton_iters=1, source_steps=1))
    err = exc.value
    assert len(err.trace) == 1
    iteration, max_dv, _ = err.trace[0]
    assert iteration == 1 and max_dv > 0.0


def test_source_stepping_failure_reports_the_stalled_scale():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_RESISTORS))
    with pytest.raises(NonConvergenceError) as exc:
        solve_dc(cir, SimOptions(max_newton_iters=3, source_steps=10))
    assert "source stepping" in str(exc.value)


def test_sim_options_validation():
    with pytest.raises(ValueError):
        SimOptions(abstol=0.0)
    with pytest.raises(ValueError):
        SimOptions(reltol=-1e-6)
    with pytest.raises(ValueError):
        SimOptions(dt=0.0)
    with pytest.raises(ValueError):
        SimOptions(dt=2.0, t_stop=1.0)
    with pytest.raises(ValueError):
        SimOptions(max_newton_iters=0)
    with pytest.raises(ValueError):
        SimOptions(temp=0.0)
    with pytest.raises(ValueError):
        SimOptions(source_steps=0)


# --------------------------------------------------------------------------- #
# transient
# --------------------------------------------------------------------------- #

def test_dc_source_transient_is_constant_and_equals_dc():
    cir = _circuit("V1 a 0 DC 2.0\nR1 a 0 1k\n")
    op = solve_dc(cir)
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=0.02), ["v(a)", "i(R1)"])
    v = res.waveform("v(a)").values
    i = res.waveform("i(R1)").values
    assert v == pytest.approx(np.full_like(v, op.node_voltages[1]), rel=1e-12)
    assert i == pytest.approx(np.full_like(i, op.device_currents["R1"]), rel=1e-12)


def test_waveform_grid_is_uniform_and_starts_at_zero():
    cir = _circuit("V1 a 0 DC 2.0\nR1 a 0 1k\n")
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=0.01), ["v(a)"])
    t = res.waveform("v(a)").t
    assert t[0] == 0.0
    assert len(t) == 11
    assert np.diff(t) == pytest.approx(np.full(10, 1e-3), rel=1e-12)
    assert res.waveform("v(a)").unit == "V"


def test_default_dt_is_ten_thousandth_of_t_stop():
    cir = _circuit("V1 a 0 DC 2.0\nR1 a 0 1k\n")
    res = run_transient(cir, SimOptions(t_stop=1.0), ["v(a)"])
    assert res.dt == pytest.approx(1e-4)
    assert len(res.waveform("v(a)").t) == 10_001


def test_first_sample_is_the_dc_solution_with_sources_at_t0():
    cir = _circuit("V1 a 0 SIN(2.0 1.0 50)\nR1 a 0 1k\n")
    res = run_transient(cir, SimOptions(dt=1e-4, t_stop=0.01), ["v(a)"])
    assert res.waveform("v(a)").values[0] == pytest.approx(2.0, rel=1e-12)


def test_sine_source_is_sampled_at_step_times():
    cir = _circuit("V1 a 0 SIN(2.0 1.0 50)\nR1 a 0 1k\n")
    res = run_transient(cir, SimOptions(dt=1e-4, t_stop=0.02), ["v(a)"])
    wave = res.waveform("v(a)")
    expected = 2.0 + 1.0 * np.sin(2 * np.pi * 50 * wave.t)
    assert wave.values == pytest.approx(expected, abs=1e-9)


def test_slow_memristor_stays_near_frozen_state_current():
    cir = _circuit(
        "V1 in 0 DC 0.001\n"
        "R1 in mid 1k\n"
        "Y1 mid 0 MEM m0=19k\n"
        ".model MEM MEMRISTOR (ron=100 roff=38k l=10n uv=2e-14 p=1 pol=1)\n"
    )
    res = run_transient(cir, SimOptions(dt=1e-4, t_stop=0.05), ["i(Y1)"])
    i = res.waveform("i(Y1)").values
    expected = 0.001 / (1e3 + 19e3)
    assert np.max(np.abs(i - expected)) / expected < 1e-3


def test_memristor_mirror_settles_toward_roff():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=3.0), ["i(Y2)", "m(Y2)"])
    m = res.waveform("m(Y2)").values
    i = res.waveform("i(Y2)").values
    assert m[0] == pytest.approx(5e3, rel=1e-9)
    assert m[-1] == pytest.approx(38e3, rel=1e-2)
    # output current starts high and settles to the resistor-mirror value
    assert i[0] > 4 * i[-1]
    assert i[-1] == pytest.approx(39.63e-6, rel=1e-3)
    assert np.all(np.diff(m) >= 0.0)


def test_states_clamp_to_the_device_length():
    # strong drive walks w to the upper boundary; the clamp must hold
    cir = _circuit(
        "V1 in 0 DC 5\n"
        "R1 in mid 1k\n"
        "Y1 mid 0 MEM m0=19k\n"
        ".model MEM MEMRISTOR (ron=100 roff=38k l=10n uv=1e-12 p=0 pol=1)\n"
    )
    res = run_transient(cir, SimOptions(dt=1e-4, t_stop=0.2), ["w(Y1)"])
    w = res.waveform("w(Y1)").values
    assert np.all(w <= 10e-9 + 1e-24)
    assert np.all(w >= 0.0)
    assert w[-1] == pytest.approx(10e-9, rel=1e-12)


def test_step_halving_changes_final_memristance_by_under_point1_percent():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    coarse = run_transient(cir, SimOptions(dt=5e-4, t_stop=2.0), ["m(Y2)"])
    fine = run_transient(cir, SimOptions(dt=2.5e-4, t_stop=2.0), ["m(Y2)"])
    m_coarse = coarse.waveform("m(Y2)").values[-1]
    m_fine = fine.waveform("m(Y2)").values[-1]
    assert abs(m_coarse - m_fine) / m_fine < 1e-3


def test_charge_consistency_on_a_half_sine_pulse():
    cir = _circuit(
        "V1 in 0 SIN(0 1 0.5)\n"
        "R1 in mid 1k\n"
        "Y1 mid 0 MEM m0=19k\n"
        ".model MEM MEMRISTOR (ron=100 roff=38k l=10n uv=1e-13 p=1 pol=1)\n"
    )
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=1.0), ["i(Y1)", "w(Y1)"])
    i = res.waveform("i(Y1)").values
    w = res.waveform("w(Y1)").values
    t = res.waveform("i(Y1)").t
    params = cir.device("Y1").params
    window = np.array(
        [joglekar_window(min(max(x, 0.0), 1.0), params.window_p)
         for x in w / params.length]
    )
    drive = i * window
    integral = float(np.sum(0.5 * (drive[1:] + drive[:-1]) * np.diff(t)))
    predicted = params.polarity * params.mobility * (params.r_on / params.length) * integral
    assert w[-1] - w[0] == pytest.approx(predicted, rel=1e-2)


def test_transient_continuation_matches_a_single_run():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    opts_half = SimOptions(dt=1e-3, t_stop=0.5)
    first = run_transient(cir, opts_half, ["m(Y2)"])
    second = run_transient(
        cir, opts_half, ["m(Y2)"], initial_states=first.final_states
    )
    whole = run_transient(cir, SimOptions(dt=1e-3, t_stop=1.0), ["m(Y2)"])
    assert second.final_states["Y2"] == pytest.approx(
        whole.final_states["Y2"], rel=1e-9
    )


def test_initial_state_overrides_are_validated():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    opts = SimOptions(dt=1e-3, t_stop=0.01)
    with pytest.raises(SimulationError):
        run_transient(cir, opts, ["m(Y2)"], initial_states={"Y9": 1e-9})
    with pytest.raises(SimulationError):
        run_transient(cir, opts, ["m(Y2)"], initial_states={"Y2": 2e-8})


def test_transient_requires_t_stop():
    cir = _circuit("V1 a 0 DC 1\nR1 a 0 1k\n")
    with pytest.raises(ValueError):
        run_transient(cir, SimOptions(dt=1e-3), ["v(a)"])


# --------------------------------------------------------------------------- #
# probes
# --------------------------------------------------------------------------- #

def test_unknown_probe_names_fail_before_simulating():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    opts = SimOptions(dt=1e-3, t_stop=0.01)
    for bad in ("v(nope)", "i(NOPE)", "w(M1)", "m(R9)", "z(a)", "v a"):
        with pytest.raises(UnknownProbeError):
            run_transient(cir, opts, [bad])


def test_probe_names_are_case_insensitive_and_canonical():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=0.01), ["V(D2)", "I(y2)"])
    assert res.waveform("v(d2)").name == "v(d2)"
    assert res.waveform("i(Y2)").unit == "A"
    with pytest.raises(UnknownProbeError):
        res.waveform("v(d1)")


def test_memristance_probe_reports_ohms():
    cir = mirror_circuit(MirrorConfig(kind=MirrorKind.TWO_MEMRISTORS))
    res = run_transient(cir, SimOptions(dt=1e-3, t_stop=0.01), ["m(Y2)", "w(Y2)"])
    m = res.waveform("m(Y2)")
    w = res.waveform("w(Y2)")
    assert m.unit == "ohm" and w.unit == "m"
    params = cir.device("Y2").params
    reconstructed = memristance(MemristorState(w.values[-1]), params)
    assert m.values[-1] == pytest.approx(reconstructed, rel=1e-12)
