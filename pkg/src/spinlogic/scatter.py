"""Closed-form electron-wave scattering at potential steps and slabs.

The electron wave in a region of constant potential obeys a Helmholtz-type
equation with propagation constant ``gamma = sqrt(2 m* (E - V)) / hbar``.
Interfaces and slabs are described by 2x2 current-amplitude scattering
matrices laid out as ``[[t11, r12], [r21, t22]]``.  Only propagating media
(E > V) are handled here; tunnelling geometries are left to the NEGF engine.

Phases follow the engineering convention ``exp(j(wt - gamma x))``, so a
wave crossing a slab of thickness ``l`` picks up ``exp(-j theta)`` with
``theta = gamma_2 l cos(theta_2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import EV, HBAR, M0
from .errors import EvanescentMedium, NonUnitary, TotalInternalReflection

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Medium:
    """Region of uniform potential.

    Parameters
    ----------
    effective_mass : float
        Effective mass in units of the free-electron mass.
    potential : float
        Potential energy V in eV.
    """

    effective_mass: float = 0.05
    potential: float = 0.0

    def __post_init__(self):
        if not self.effective_mass > 0:
            raise ValueError("effective_mass must be positive")

    def kinetic(self, E: float) -> float:
        """E - V in eV, raising if the medium is not propagating."""
        dE = E - self.potential
        if not dE > 0:
            raise EvanescentMedium(
                f"E = {E} eV does not exceed V = {self.potential} eV")
        return dE

    def gamma(self, E: float) -> float:
        """Propagation constant in 1/m."""
        return np.sqrt(2.0 * self.effective_mass * M0 * self.kinetic(E) * EV) / HBAR


@dataclass(frozen=True)
class ScatterMatrix2:
    t11: complex
    r12: complex
    r21: complex
    t22: complex

    @classmethod
    def from_array(cls, m) -> "ScatterMatrix2":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.t11, self.r12], [self.r21, self.t22]], dtype=complex)

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m @ m.conj().T - np.eye(2))))

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return self.unitarity_error() < tol

    @property
    def reflectance(self) -> float:
        return abs(self.r21) ** 2

    @property
    def transmittance(self) -> float:
        return abs(self.t11) ** 2


@dataclass(frozen=True)
class SlabSpec:
    """Barrier slab of thickness ``length`` (m) embedded in ``outer``."""

    outer: Medium
    barrier: Medium
    length: float
    angle: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("slab length must be positive")
        if not 0.0 <= self.angle < np.pi / 2:
            raise ValueError("incidence angle must lie in [0, pi/2)")


@dataclass(frozen=True)
class PortProbabilities:
    p0_up: float
    p0_down: float
    p1_up: float
    p1_down: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p0_up, self.p0_down, self.p1_up, self.p1_down)

    @property
    def total(self) -> float:
        return sum(self.as_tuple())


def effective_index(medium: Medium, reference: Medium, E: float) -> float:
    """Electron-wave refractive index of ``medium`` relative to ``reference``."""
    m_r = medium.effective_mass / reference.effective_mass
    dE_r = medium.kinetic(E) / reference.kinetic(E)
    return float(np.sqrt(m_r * dE_r))


def admittance(medium: Medium, E: float) -> float:
    """Y = 1/gamma in metres (the wave analogue of intrinsic impedance)."""
    return float(1.0 / medium.gamma(E))


def snell_angle(medium1: Medium, medium2: Medium, E: float, theta1: float) -> float:
    g1, g2 = medium1.gamma(E), medium2.gamma(E)
    s = g1 * np.sin(theta1) / g2
    if s > 1.0 + 1e-15:
        raise TotalInternalReflection(
            f"gamma1 sin(theta1) / gamma2 = {s:.6g} exceeds 1")
    return float(np.arcsin(min(s, 1.0)))


def interface_matrix(medium1: Medium, medium2: Medium, E: float,
                     theta1: float = 0.0) -> ScatterMatrix2:
    """Current scattering matrix of a single potential step.

    The transmission entries use ``2 sqrt(Y1 Y2 cos1 cos2)``, which is what
    the current-amplitude ratio ``t_psi^2 Y1 cos2 / (Y2 cos1)`` gives and
    keeps the matrix unitary at oblique incidence.
    """
    theta2 = snell_angle(medium1, medium2, E, theta1)
    y1, y2 = admittance(medium1, E), admittance(medium2, E)
    c1, c2 = np.cos(theta1), np.cos(theta2)
    denom = y2 * c1 + y1 * c2
    t = 2.0 * np.sqrt(y1 * y2 * c1 * c2) / denom
    r12 = (y2 * c1 - y1 * c2) / denom
    return ScatterMatrix2(complex(t), complex(r12), complex(-r12), complex(t))


def slab_phase(slab: SlabSpec, E: float) -> float:
    """Phase accumulated across the slab, gamma_2 l cos(theta_2)."""
    theta2 = snell_angle(slab.outer, slab.barrier, E, slab.angle)
    return float(slab.barrier.gamma(E) * slab.length * np.cos(theta2))


def slab_matrix(slab: SlabSpec, E: float) -> ScatterMatrix2:
    """Scattering matrix of a symmetric slab from the multiple-reflection sum."""
    s0 = interface_matrix(slab.outer, slab.barrier, E, slab.angle)
    r0 = s0.r21.real
    z = np.exp(-1j * slab_phase(slab, E))
    denom = 1.0 - r0**2 * z**2
    r = -r0 * (1.0 - z**2) / denom
    t = (1.0 - r0**2) * z / denom
    return ScatterMatrix2(complex(t), complex(r), complex(r), complex(t))


def quarter_phase_length(barrier: Medium, E: float, n: int = 1) -> float:
    """Slab thickness giving exp(-j theta) = j at normal incidence."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return float((4 * n - 1) * np.pi / (2.0 * barrier.gamma(E)))


def fifty_fifty_barrier(E: float, V1: float) -> float:
    """Barrier potential V2 for which a quarter-phase slab splits 50/50.

    Solves (E-V1) - (E-V2) = 2 sqrt((E-V1)(E-V2)) for the root with
    E > V2, i.e. (E-V2) = (3 - 2 sqrt 2)(E-V1).
    """
    dE1 = E - V1
    if not dE1 > 0:
        raise EvanescentMedium(f"E = {E} eV does not exceed V1 = {V1} eV")
    return float(E - (3.0 - 2.0 * np.sqrt(2.0)) * dE1)


def coincidence_probability(S: ScatterMatrix2, tol: float = UNITARY_TOL) -> float:
    """Probability that two fermions entering opposite ports leave apart."""
    err = S.unitarity_error()
    if err >= tol:
        raise NonUnitary(f"|S S^dagger - I|_max = {err:.3g}")
    return float(abs(S.t11 * S.t22 - S.r12 * S.r21) ** 2)


def interferometer_probabilities(theta: float, input_port: int = 0,
                                 input_spin: str = "up") -> PortProbabilities:
    """Output port/spin probabilities of a two-splitter interferometer.

    The spin in arm 1 precesses by ``theta`` between the splitters.  With
    no precession the pair of splitters inverts the port; at
    ``theta = 2 pi`` the spinor sign flip restores it.  Probabilities are
    unit-normalized.
    """
    if input_port not in (0, 1):
        raise ValueError("input_port must be 0 or 1")
    if input_spin not in ("up", "down"):
        raise ValueError("input_spin must be 'up' or 'down'")
    same0 = np.sin(theta / 4.0) ** 4
    same1 = np.cos(theta / 4.0) ** 4
    flip = 0.25 * np.sin(theta / 2.0) ** 2
    if input_port == 1:
        same0, same1 = same1, same0
    if input_spin == "up":
        return PortProbabilities(same0, flip, same1, flip)
    return PortProbabilities(flip, same0, flip, same1)
