"""Ideal two-qubit reference simulator.

The first qubit is the pseudo-spin (which channel the electron travels in),
the second its spin.  Amplitudes are ordered ``|0 up>, |0 down>, |1 up>,
|1 down>``.  Spin rotations follow ``R_a(phi) = exp(-i phi sigma_a / 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Inconclusive, UnknownGate

NORM_TOL = 1e-12
BASIS = ("0up", "0down", "1up", "1down")
ORACLES = ("f0", "f1", "f2", "f3")
TARGETS = ("00", "01", "10", "11")

I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def ry(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


@dataclass(frozen=True)
class TwoQubitState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {n!r} is not 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def basis(cls, pseudo: int, spin: str) -> "TwoQubitState":
        a = np.zeros(4, dtype=complex)
        a[basis_index(pseudo, spin)] = 1.0
        return cls(a)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability(self, pseudo: int, spin: str) -> float:
        return float(self.probabilities[basis_index(pseudo, spin)])

    def pseudo_probability(self, pseudo: int) -> float:
        p = self.probabilities
        return float(p[2 * pseudo] + p[2 * pseudo + 1])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def apply(self, gate: "GateUnitary") -> "TwoQubitState":
        return TwoQubitState(gate.matrix @ self.amplitudes)


@dataclass(frozen=True)
class GateUnitary:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("gate must be 4x4")
        err = unitarity_error(m)
        if err > NORM_TOL:
            raise ValueError(f"gate {self.label!r} is not unitary (error {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "GateUnitary") -> "GateUnitary":
        return GateUnitary(self.matrix @ other.matrix, f"{self.label}*{other.label}")


def unitarity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


def basis_index(pseudo: int, spin: str) -> int:
    if pseudo not in (0, 1):
        raise ValueError("pseudo-spin must be 0 or 1")
    if spin not in ("up", "down"):
        raise ValueError("spin must be 'up' or 'down'")
    return 2 * pseudo + (0 if spin == "up" else 1)


def on_spin(u: np.ndarray) -> np.ndarray:
    return np.kron(I2, u)


def on_pseudo(u: np.ndarray) -> np.ndarray:
    return np.kron(u, I2)


def controlled_spin(u: np.ndarray, control: int = 1) -> np.ndarray:
    """Apply ``u`` to the spin only in channel ``control``."""
    on, off = (P1, P0) if control == 1 else (P0, P1)
    return np.kron(off, I2) + np.kron(on, u)


def make_gate(kind: str, phi: float = 0.0) -> GateUnitary:
    """Named gate on the pseudo-spin/spin register.

    ``phi`` is the angle of ``ry``, ``rz`` (spin rotations applied in both
    channels) and ``phase_on_pseudospin1``.
    """
    if kind == "hadamard_spin":
        m = on_spin(H2)
    elif kind == "hadamard_pseudospin":
        m = on_pseudo(H2)
    elif kind == "pauli_x_spin":
        m = on_spin(X2)
    elif kind == "pauli_z_spin":
        m = on_spin(Z2)
    elif kind == "ry":
        m = on_spin(ry(phi))
    elif kind == "rz":
        m = on_spin(rz(phi))
    elif kind == "cnot_pseudospin_controls_spin":
        m = controlled_spin(X2, 1)
    elif kind == "phase_on_pseudospin1":
        m = on_pseudo(np.diag([1.0, np.exp(1j * phi)]))
    elif kind == "pseudospin_not":
        # two identical symmetric splitters with per-path phases
        bs = np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2)
        m = on_pseudo(bs @ bs)
    else:
        raise UnknownGate(kind)
    return GateUnitary(m, kind if kind not in ("ry", "rz", "phase_on_pseudospin1")
                       else f"{kind}({phi:.6g})")


def oracle_unitary(case: str) -> GateUnitary:
    """Oracle |x>|y> -> |x>|y xor f(x)> with pseudo-spin x and spin y."""
    if case == "f0":
        m = np.eye(4, dtype=complex)
    elif case == "f1":
        m = on_spin(X2)
    elif case == "f2":
        m = controlled_spin(X2, 1)
    elif case == "f3":
        m = controlled_spin(X2, 0)
    else:
        raise ValueError(f"unknown oracle case {case!r}")
    return GateUnitary(m, f"oracle_{case}")


def oracle_function(case: str):
    return {"f0": lambda x: 0, "f1": lambda x: 1,
            "f2": lambda x: x, "f3": lambda x: 1 - x}[case]


def is_constant(case: str) -> bool:
    f = oracle_function(case)
    return f(0) == f(1)


def deutsch_jozsa_circuit(case: str) -> list[GateUnitary]:
    h_p = make_gate("hadamard_pseudospin")
    return [make_gate("hadamard_spin"), h_p, oracle_unitary(case), h_p]


def classify_pseudospin(state: TwoQubitState, threshold: float = 0.99) -> str:
    if state.pseudo_probability(0) > threshold:
        return "constant"
    if state.pseudo_probability(1) > threshold:
        return "balanced"
    raise Inconclusive(
        f"P(pseudo-spin 0) = {state.pseudo_probability(0):.6f} is not decisive")


def run_sequence(state: TwoQubitState, gates) -> TwoQubitState:
    for g in gates:
        state = state.apply(g)
    return state


def run_deutsch_jozsa(case: str) -> tuple[TwoQubitState, str]:
    """Deutsch-Jozsa from |0 down>; pseudo-spin 0 at the end means constant."""
    state = run_sequence(TwoQubitState.basis(0, "down"), deutsch_jozsa_circuit(case))
    return state, classify_pseudospin(state)


def target_index(target: str) -> int:
    if target not in TARGETS:
        raise ValueError(f"unknown Grover target {target!r}")
    return int(target, 2)


def sign_flip(target: str) -> GateUnitary:
    d = np.ones(4, dtype=complex)
    d[target_index(target)] = -1.0
    return GateUnitary(np.diag(d), f"mark_{target}")


def diffusion() -> GateUnitary:
    hh = np.kron(H2, H2)
    mid = -np.eye(4, dtype=complex)
    mid[0, 0] = 1.0
    return GateUnitary(hh @ mid @ hh, "diffusion")


def grover_circuit(target: str) -> list[GateUnitary]:
    hh = GateUnitary(np.kron(H2, H2), "hadamard_both")
    return [hh, sign_flip(target), diffusion()]


def run_grover(target: str) -> TwoQubitState:
    """One Grover iteration from |0 up>; exact for two qubits."""
    return run_sequence(TwoQubitState.basis(0, "up"), grover_circuit(target))


def grover_outcome(target: str) -> tuple[int, str]:
    """(port, spin) at which the marked string is read out."""
    k = target_index(target)
    return k >> 1, ("up", "down")[k & 1]


def run_nand(pseudo_in: int, spin_in: str, threshold: float = 0.99) -> int:
    """Detector at (port 1, spin up) after the double-splitter inverter."""
    state = TwoQubitState.basis(pseudo_in, spin_in).apply(make_gate("pseudospin_not"))
    return int(state.probability(1, "up") > threshold)
