import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinlogic import experiments as ex
from spinlogic import gatesim as gs
from spinlogic.errors import BelowContrast, CalibrationMissing
from spinlogic.lattice import lattice_alpha_for_angle
from spinlogic.negf import LeadSpec, transmission


def same_up_to_phase(a, b, tol=1e-10):
    k = np.argmax(np.abs(b))
    ph = a.flat[k] / b.flat[k]
    return abs(abs(ph) - 1) < tol and np.max(np.abs(a - ph * b)) < tol


# -- contrast -------------------------------------------------------------------

def test_classify_contrast_examples():
    assert ex.classify_contrast({"hi": 1.0, "lo": 0.01}) == ("hi", pytest.approx(100.0))
    with pytest.raises(BelowContrast) as err:
        ex.classify_contrast({"hi": 1.0, "lo": 0.5})
    assert err.value.contrast == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ex.classify_contrast({"a": 1.0, "b": 0.0}, threshold=1.0)
    assert ex.classify_contrast({"a": 1.0, "b": 0.0}) == ("a", float("inf"))
    # a designated channel that is not the largest is reported as below contrast
    with pytest.raises(BelowContrast):
        ex.classify_contrast({"a": 1.0, "b": 0.01}, designation="b")


def test_classify_contrast_accepts_port_currents():
    pc = ex.PortCurrents(0, "up", {(0, "up"): 0.9, (0, "down"): 0.01, (1, "up"): 0.02,
                                   (1, "down"): 0.0})
    assert ex.classify_contrast(pc) == ((0, "up"), pytest.approx(45.0))
    with pytest.raises(ValueError):
        ex.PortCurrents(0, "up", {(0, "up"): -0.1})


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=6), st.floats(1e-3, 1e3))
def test_contrast_scale_invariant(values, scale):
    cur = {i: v for i, v in enumerate(values)}
    big = {i: v * scale for i, v in enumerate(values)}
    try:
        a = ex.classify_contrast(cur, threshold=1.0001)
    except BelowContrast as e:
        with pytest.raises(BelowContrast) as e2:
            ex.classify_contrast(big, threshold=1.0001)
        assert e2.value.contrast == pytest.approx(e.contrast)
        return
    b = ex.classify_contrast(big, threshold=1.0001)
    assert a[0] == b[0] and a[1] == pytest.approx(b[1])


# -- compilation ------------------------------------------------------------------

GATE_REFERENCE = {
    "hadamard_spin": gs.make_gate("hadamard_spin").matrix,
    "hadamard_pseudospin": gs.make_gate("hadamard_pseudospin").matrix,
    "hadamard_both": np.kron(gs.H2, gs.H2),
    "pauli_x_spin": gs.make_gate("pauli_x_spin").matrix,
    "pauli_z_spin": gs.make_gate("pauli_z_spin").matrix,
    "cnot_pseudospin_controls_spin": gs.make_gate("cnot_pseudospin_controls_spin").matrix,
    **{f"oracle_{c}": gs.oracle_unitary(c).matrix for c in gs.ORACLES},
    **{f"mark_{t}": gs.sign_flip(t).matrix for t in gs.TARGETS},
}


@pytest.mark.parametrize("name", sorted(GATE_REFERENCE))
def test_gate_stages_match_gatesim(name):
    assert same_up_to_phase(ex.stages_unitary(ex.gate_stages(name)), GATE_REFERENCE[name])


def test_inverter_matches_at_probability_level():
    hw_u = ex.stages_unitary(ex.gate_stages("pseudospin_not"))
    ref = gs.make_gate("pseudospin_not").matrix
    assert np.allclose(np.abs(hw_u) ** 2, np.abs(ref) ** 2, atol=1e-12)


def test_coupler_matrix_is_the_slab_matrix():
    # tunnelling through the wall (slab transmission) is the channel crossing
    slab = np.array([[1j, 1], [1, 1j]]) / np.sqrt(2)
    assert np.allclose(ex.COUPLER_MATRIX, slab @ gs.X2, atol=1e-15)


@pytest.mark.parametrize("case", gs.ORACLES)
def test_dj_circuit_compiles_exactly(case):
    stages = ex.compile_circuit(ex.circuit_gates("dj", case))
    ref = np.eye(4, dtype=complex)
    for g in gs.deutsch_jozsa_circuit(case):
        ref = g.matrix @ ref
    raw = ex.stages_unitary(sum((ex.gate_stages(g) for g in ex.circuit_gates("dj", case)),
                                []))
    assert same_up_to_phase(raw, ref)
    # simplification only drops phases acting on basis inputs or before detection
    psi = np.zeros(4)
    psi[gs.basis_index(0, "down")] = 1
    assert np.allclose(np.abs(ex.stages_unitary(stages) @ psi) ** 2,
                       np.abs(ref @ psi) ** 2, atol=1e-12)


@pytest.mark.parametrize("target", gs.TARGETS)
def test_grover_circuit_compiles_exactly(target):
    gates = ex.circuit_gates("grover", target)
    raw = ex.stages_unitary(sum((ex.gate_stages(g) for g in gates), []))
    ref = np.eye(4, dtype=complex)
    for g in gs.grover_circuit(target):
        ref = g.matrix @ ref
    assert same_up_to_phase(raw, ref)
    out = ex.ideal_output(ex.compile_circuit(gates), 0, "up")
    assert out == pytest.approx(gs.run_grover(target).probabilities, abs=1e-12)


def test_simplify_merges_and_trims():
    c, p = ex.Stage("coupler"), ex.Stage("phase", angle=0.4)
    out = ex.simplify([p, c, p, p, c, p])
    assert [s.kind for s in out] == ["coupler", "phase", "coupler"]
    assert out[1].angle == pytest.approx(0.8)
    assert ex.simplify([c, ex.Stage("phase", angle=2 * np.pi), c]) == [c, c]


# -- NEGF experiments -----------------------------------------------------------

@pytest.mark.parametrize("case,verdict", [("f0", "constant"), ("f1", "constant"),
                                          ("f2", "balanced"), ("f3", "balanced")])
def test_dj_experiment(case, verdict):
    rep = ex.run_dj_experiment(case)
    assert rep.negf_verdict == rep.gatesim_verdict == verdict
    assert rep.contrast >= 10
    assert rep.passed
    assert rep.details["device_columns"] <= 800


@pytest.mark.parametrize("target", gs.TARGETS)
def test_grover_experiment(target):
    rep = ex.run_grover_experiment(target)
    port, spin = gs.grover_outcome(target)
    assert rep.negf_verdict == [port, spin] == rep.gatesim_verdict
    assert rep.details["dominant_share"] >= 0.9
    assert rep.passed


@pytest.mark.parametrize("experiment,key", [("dj", "f0"), ("dj", "f2"), ("dj", "f3"),
                                            ("grover", "01"), ("grover", "10")])
def test_negf_argmax_matches_gatesim(experiment, key):
    hw = ex.Hardware()
    stages = ex.compile_circuit(ex.circuit_gates(experiment, key))
    spin_in = "down" if experiment == "dj" else "up"
    pc = ex.PortCurrents.from_record(ex.run_circuit(stages, hw), 0, spin_in)
    ideal = ex.ideal_output(stages, 0, spin_in)
    negf = np.array([pc.T[(p, s)] for p in (0, 1) for s in ("up", "down")])
    if experiment == "dj":  # the measured qubit is the pseudo-spin
        negf, ideal = negf.reshape(2, 2).sum(1), ideal.reshape(2, 2).sum(1)
    assert np.argmax(negf) == np.argmax(ideal)


def test_nand_experiment():
    reps = {(p, s): ex.run_nand_experiment(p, s) for p, s in ex.NAND_INPUTS}
    assert reps[(0, "up")].negf_verdict == 1
    for key, rep in reps.items():
        assert rep.negf_verdict == rep.gatesim_verdict
        assert rep.contrast >= 10
        assert rep.details["high_input"] == "0up"
        assert rep.details["spin_flip_up_to_port1_down"] < 1e-6
        assert rep.passed


@pytest.mark.parametrize("case", ["f0", "f2"])
def test_verdict_invariant_under_potential_shift(case):
    base = ex.run_dj_experiment(case)
    hw = ex.Hardware().shifted(0.25)
    rep = ex.run_dj_experiment(case, ex.ExperimentConfig("dj", case=case, hardware=hw))
    assert rep.negf_verdict == base.negf_verdict
    assert rep.details["currents"] == pytest.approx(base.details["currents"], abs=1e-8)


def mirror(stage):
    if stage.kind == "phase":
        return dataclasses.replace(stage, angle=-stage.angle)
    if stage.kind == "rotate" and stage.channel is not None:
        return dataclasses.replace(stage, channel=1 - stage.channel)
    return stage


@pytest.mark.parametrize("experiment,key,spin", [("dj", "f2", "down"), ("dj", "f3", "down"),
                                                 ("grover", "01", "up")])
def test_verdict_invariant_under_channel_swap(experiment, key, spin):
    hw = ex.Hardware()
    stages = ex.compile_circuit(ex.circuit_gates(experiment, key))
    a = ex.PortCurrents.from_record(ex.run_circuit(stages, hw), 0, spin)
    swapped = [mirror(s) for s in stages]
    b = ex.PortCurrents.from_record(ex.run_circuit(swapped, hw), 1, spin)
    for (p, s), v in a.T.items():
        assert b.T[(1 - p, s)] == pytest.approx(v, abs=2e-3)
    da = max(a.T, key=a.T.get)
    db = max(b.T, key=b.T.get)
    assert db == (1 - da[0], da[1])


def test_calibration_missing_and_overrides():
    hw = ex.Hardware(auto_calibrate=False)
    with pytest.raises(CalibrationMissing):
        ex.run_dj_experiment("f1", ex.ExperimentConfig("dj", case="f1", hardware=hw))
    ref = ex.Hardware()
    keys = [("z", np.pi, 25), ("y", np.pi / 2, 25), ("y", np.pi, 25)]
    alphas = tuple((k, ex.rashba_alpha(ref, *k)) for k in keys)
    hw = ex.Hardware(auto_calibrate=False, alphas=alphas)
    rep = ex.run_dj_experiment("f1", ex.ExperimentConfig("dj", case="f1", hardware=hw))
    assert rep.details["currents"] == ex.run_dj_experiment("f1").details["currents"]


def test_config_validation():
    with pytest.raises(ValueError):
        ex.ExperimentConfig("teleport")
    with pytest.raises(ValueError):
        ex.ExperimentConfig("init_sweep", alpha_range=(0.0, 6e-10))
    with pytest.raises(ValueError):
        ex.ExperimentConfig("init_sweep", steps=1)
    with pytest.raises(ValueError):
        ex.ExperimentConfig("dj", threshold=0.5)


# -- beam splitter and interferometer ---------------------------------------------

def test_designed_coupler_splits_evenly():
    hw = ex.Hardware()
    cp = ex.design_coupler(hw)
    assert cp.barrier == pytest.approx(0.0827, abs=5e-4)
    s, c = ex.coupler_split(hw, cp.length)
    assert s == pytest.approx(0.5, abs=0.05) and c == pytest.approx(0.5, abs=0.05)
    assert s + c == pytest.approx(1.0, abs=1e-3)


def test_beamsplitter_check():
    rep = ex.run_beamsplitter_check()
    assert rep.passed, rep.checks
    assert rep.details["slab_negf"]["T"] == pytest.approx(0.5, abs=0.05)


def test_well_design_hits_phase():
    hw = ex.Hardware()
    for phi in (np.pi / 2, np.pi):
        depth = ex.design_well(hw, phi)
        assert depth > 0
        assert np.exp(1j * ex.well_phase(hw, depth)) == pytest.approx(np.exp(1j * phi),
                                                                      abs=1e-9)


@pytest.fixture(scope="module")
def sweep():
    return ex.run_init_sweep(steps=5)


def test_init_sweep(sweep):
    points, rep = sweep
    assert rep.passed, rep.checks
    assert rep.details["rms"] < 0.05
    assert points[0].negf.T[(1, "up")] >= 0.95
    assert points[-1].negf.T[(0, "up")] >= 0.95


def test_init_sweep_midpoint(sweep):
    points, _ = sweep
    mid = points[2]
    assert mid.theta == pytest.approx(np.pi, abs=0.01)  # alpha grid is linear, Theta is not
    for v in mid.negf.T.values():
        assert v == pytest.approx(0.25, abs=0.05)


def test_init_sweep_total_conserved(sweep):
    points, _ = sweep
    totals = [p.negf.total for p in points]
    assert np.ptp(totals) < 1e-3


def test_interferometer_period_four_pi():
    hw = ex.Hardware()
    grid = hw.spec().grid
    leads = [LeadSpec("left", 0), LeadSpec("left", 1), LeadSpec("right", 0),
             LeadSpec("right", 1)]
    curves = []
    for theta in (np.pi / 2, np.pi / 2 + 4 * np.pi):
        alpha = lattice_alpha_for_angle(theta, 50, grid)
        rec = transmission(ex.interferometer_device(hw, alpha, 50), leads, hw.E)
        curves.append(ex.PortCurrents.from_record(rec, 0, "up").T)
    for k in curves[0]:
        assert curves[1][k] == pytest.approx(curves[0][k], abs=0.05)


def test_transmission_curve_devices():
    hw = ex.Hardware()
    cfg = ex.ExperimentConfig("transmission", n_energies=3)
    Es = cfg.energy_grid()
    wire = ex.transmission_curve(hw, Es, "wire")
    assert all(r.total("L0", "R0", "up") == pytest.approx(1.0, abs=1e-6) for r in wire)
    with pytest.raises(ValueError):
        ex.transmission_curve(hw, Es, "prism")
