import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinlogic import gatesim as gs
from spinlogic.errors import Inconclusive, UnknownGate

KINDS = ("hadamard_spin", "hadamard_pseudospin", "pauli_x_spin", "pauli_z_spin", "ry",
         "rz", "cnot_pseudospin_controls_spin", "phase_on_pseudospin1", "pseudospin_not")
S2 = 1 / np.sqrt(2)


def same_up_to_phase(a, b, tol=1e-12):
    k = np.argmax(np.abs(b))
    ph = a.flat[k] / b.flat[k]
    return abs(abs(ph) - 1) < tol and np.max(np.abs(a - ph * b)) < tol


def test_rz_zero_is_identity():
    assert np.array_equal(gs.make_gate("rz", 0.0).matrix, np.eye(4))


def test_hadamard_decomposition():
    assert np.max(np.abs(1j * gs.ry(np.pi / 2) @ gs.rz(np.pi) - gs.H2)) < 1e-12
    assert np.max(np.abs(1j * gs.ry(np.pi) @ gs.rz(np.pi) - gs.X2)) < 1e-12


def test_hadamard_spin_on_down():
    out = gs.TwoQubitState.basis(0, "down").apply(gs.make_gate("hadamard_spin"))
    assert out.amplitudes == pytest.approx([S2, -S2, 0, 0])


def test_gate_actions():
    psi = gs.TwoQubitState.basis(1, "down")
    assert gs.make_gate("cnot_pseudospin_controls_spin").matrix @ psi.amplitudes == \
        pytest.approx([0, 0, 1, 0])
    assert gs.make_gate("cnot_pseudospin_controls_spin").matrix[:2, :2] == \
        pytest.approx(np.eye(2))
    ph = gs.make_gate("phase_on_pseudospin1", np.pi / 2).matrix
    assert np.diag(ph) == pytest.approx([1, 1, 1j, 1j])
    inv = gs.make_gate("pseudospin_not").matrix
    assert np.abs(inv) == pytest.approx(np.kron(gs.X2.real, np.eye(2)))
    with pytest.raises(UnknownGate):
        gs.make_gate("toffoli")


def test_oracles():
    for s in ("up", "down"):
        for p in (0, 1):
            psi = gs.TwoQubitState.basis(p, s).amplitudes
            assert gs.oracle_unitary("f0").matrix @ psi == pytest.approx(psi)
    f2 = gs.oracle_unitary("f2").matrix
    assert same_up_to_phase(f2 @ gs.TwoQubitState.basis(1, "down").amplitudes,
                            gs.TwoQubitState.basis(1, "up").amplitudes)
    assert f2 @ gs.TwoQubitState.basis(0, "down").amplitudes == pytest.approx([0, 1, 0, 0])
    f1 = gs.oracle_unitary("f1").matrix
    assert same_up_to_phase(f1 @ gs.TwoQubitState.basis(0, "up").amplitudes,
                            gs.TwoQubitState.basis(0, "down").amplitudes)
    # |x>|y> -> |x>|y xor f(x)> for all basis states
    for case in gs.ORACLES:
        f = gs.oracle_function(case)
        U = gs.oracle_unitary(case).matrix
        for x in (0, 1):
            for y in (0, 1):
                out = U @ gs.TwoQubitState.basis(x, ("up", "down")[y]).amplitudes
                assert abs(out[2 * x + (y ^ f(x))]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gs.oracle_unitary("f4")


@pytest.mark.parametrize("case", gs.ORACLES)
def test_oracle_involution(case):
    U = gs.oracle_unitary(case).matrix
    assert same_up_to_phase(U @ U, np.eye(4))


@pytest.mark.parametrize("case,verdict", [("f0", "constant"), ("f1", "constant"),
                                          ("f2", "balanced"), ("f3", "balanced")])
def test_deutsch_jozsa(case, verdict):
    state, got = gs.run_deutsch_jozsa(case)
    assert got == verdict
    assert gs.is_constant(case) == (verdict == "constant")
    p = state.pseudo_probability(0 if verdict == "constant" else 1)
    assert p == pytest.approx(1.0, abs=1e-12)


def test_inconclusive():
    psi = gs.TwoQubitState(np.array([1, 0, 1, 0]) * S2)
    with pytest.raises(Inconclusive):
        gs.classify_pseudospin(psi)


@pytest.mark.parametrize("target,port,spin", [("00", 0, "up"), ("01", 0, "down"),
                                              ("10", 1, "up"), ("11", 1, "down")])
def test_grover(target, port, spin):
    state = gs.run_grover(target)
    assert gs.grover_outcome(target) == (port, spin)
    assert state.probability(port, spin) == pytest.approx(1.0, abs=1e-12)


def test_grover_is_a_permutation():
    P = np.array([gs.run_grover(t).probabilities for t in gs.TARGETS])
    assert np.allclose(P, np.eye(4), atol=1e-12)


def test_diffusion_definition():
    D = gs.diffusion().matrix
    s = np.full(4, 0.5)
    assert np.allclose(D, 2 * np.outer(s, s) - np.eye(4), atol=1e-12)


@pytest.mark.parametrize("p,s,bit", [(0, "up", 1), (0, "down", 0), (1, "up", 0),
                                     (1, "down", 0)])
def test_nand_table(p, s, bit):
    assert gs.run_nand(p, s) == bit


def test_state_validation():
    with pytest.raises(ValueError):
        gs.TwoQubitState(np.array([1, 1, 0, 0]))
    with pytest.raises(ValueError):
        gs.TwoQubitState.basis(2, "up")
    with pytest.raises(ValueError):
        gs.GateUnitary(np.ones((4, 4)))
    with pytest.raises(ValueError):
        gs.GateUnitary(np.eye(2))
    st_ = gs.TwoQubitState.basis(0, "up")
    with pytest.raises(ValueError):
        st_.amplitudes[0] = 0


gate_st = st.tuples(st.sampled_from(KINDS), st.floats(-2 * np.pi, 2 * np.pi))


@settings(max_examples=50, deadline=None)
@given(gate_st)
def test_gates_unitary(g):
    U = gs.make_gate(*g).matrix
    assert gs.unitarity_error(U) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(gate_st, min_size=1, max_size=100),
       st.sampled_from([0, 1]), st.sampled_from(["up", "down"]))
def test_norm_preserved(gates, p, s):
    state = gs.run_sequence(gs.TwoQubitState.basis(p, s), [gs.make_gate(*g) for g in gates])
    assert abs(state.norm - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(gs.ORACLES), st.lists(st.floats(0, 2 * np.pi), min_size=4,
                                              max_size=4))
def test_dj_blind_to_global_phases(case, phases):
    state = gs.TwoQubitState.basis(0, "down")
    for g, ph in zip(gs.deutsch_jozsa_circuit(case), phases):
        state = gs.TwoQubitState(np.exp(1j * ph) * state.apply(g).amplitudes)
    expect = "constant" if gs.is_constant(case) else "balanced"
    assert gs.classify_pseudospin(state) == expect
