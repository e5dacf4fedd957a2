"""Coherent spin-resolved transport with non-equilibrium Green's functions.

Leads are semi-infinite continuations of one channel (``channel_width``
rows) attached to the left or right face of the device.  Their surface
Green's function is obtained by Lopez-Sancho decimation.  The device Green's
function is computed by recursive (block tridiagonal) elimination over
columns, so only the corner blocks needed for transmission are formed.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .constants import E_CHARGE, EV, H_PLANCK
from .errors import GeometryError, NoBracket, NoConvergence, SingularMatrix
from .lattice import (DeviceSpec, Lead, Rashba, RegionMap, SpinBlockMatrix,
                      assemble_hamiltonian, build_device)

ETA = 1e-6  # eV
SPINS = ("up", "down")
FACES = ("left", "right")


@dataclass(frozen=True)
class LeadSpec:
    face: str
    channel: int = 0
    spin_filter: str = "none"

    def __post_init__(self):
        if self.face not in FACES:
            raise ValueError(f"face must be one of {FACES}")
        if self.spin_filter not in ("none", "up", "down"):
            raise ValueError("spin_filter must be 'none', 'up' or 'down'")

    @property
    def label(self) -> str:
        return f"{self.face[0].upper()}{self.channel}"


@dataclass
class SelfEnergy:
    """Lead self-energy on the orbitals ``orbitals`` of a face column."""

    lead: LeadSpec
    matrix: np.ndarray
    orbitals: np.ndarray
    energy: float

    @property
    def gamma(self) -> np.ndarray:
        return 1j * (self.matrix - self.matrix.conj().T)


@dataclass
class TransmissionRecord:
    """Port and spin resolved transmissions at one energy.

    ``T[(in_port, in_spin, out_port, out_spin)]`` with ports given by lead
    labels such as ``"L0"`` or ``"R1"``.
    """

    energy: float
    ports: list
    T: dict = field(default_factory=dict)
    open_modes: dict = field(default_factory=dict)

    def get(self, in_port, in_spin, out_port, out_spin) -> float:
        return self.T[(in_port, in_spin, out_port, out_spin)]

    def total(self, in_port, out_port, in_spin=None) -> float:
        """Transmission summed over output spin (and input spin if None)."""
        ins = SPINS if in_spin is None else (in_spin,)
        return float(sum(self.T[(in_port, s, out_port, o)] for s in ins for o in SPINS))

    def outgoing(self, in_port, in_spin) -> float:
        return float(sum(self.T[(in_port, in_spin, p, o)] for p in self.ports for o in SPINS))

    def rows(self):
        for (ip, isp, op, osp), v in sorted(self.T.items(), key=_row_key):
            yield self.energy, ip, isp, op, osp, v


def _row_key(item):
    (ip, isp, op, osp), _ = item
    return (ip, SPINS.index(isp), op, SPINS.index(osp))


@dataclass(frozen=True)
class IVPoint:
    V: float
    I: float


# -- leads --------------------------------------------------------------------

def surface_green(h00: np.ndarray, h01: np.ndarray, z,
                  tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    """Surface Green's function of a semi-infinite periodic lead.

    ``h01`` couples a cell to the next cell *into* the lead.  Lopez-Sancho
    decimation; each iteration doubles the effective lead length.  The
    result is polished by Newton steps on the surface Dyson equation
    ``(z - h00) g - h01 g h10 g = 1``, which restores full precision where
    ``z - h00`` is nearly singular (mid-band energies at tiny eta).  If the
    plain iteration fails there, it is restarted at a larger broadening and
    the Newton steps carry the result back to ``z``.
    """
    try:
        return _polish_surface(_decimate(h00, h01, z, tol, max_iter), h00, h01, z)
    except NoConvergence:
        scale = max(np.abs(h00).max(), np.abs(h01).max(), 1e-300)
        if z.imag >= 1e-6 * scale:
            raise
        g0 = _decimate(h00, h01, z.real + 1e-6j * scale, tol, max_iter)
        g = _polish_surface(g0, h00, h01, z, steps=12)
        if not surface_residual(g, h00, h01, z) < 1e-12:
            raise
        return g


def _decimate(h00, h01, z, tol, max_iter):
    n = h00.shape[0]
    eye = np.eye(n)
    eps_s = h00.astype(complex).copy()
    eps = eps_s.copy()
    alpha = h01.astype(complex).copy()
    beta = h01.conj().T.astype(complex).copy()
    for _ in range(max_iter):
        g = np.linalg.inv(z * eye - eps)
        agb = alpha @ g @ beta
        bga = beta @ g @ alpha
        eps_s = eps_s + agb
        eps = eps + agb + bga
        alpha = alpha @ g @ alpha
        beta = beta @ g @ beta
        if max(np.abs(alpha).max(), np.abs(beta).max()) < tol:
            return np.linalg.inv(z * eye - eps_s)
    raise NoConvergence(f"decimation did not converge in {max_iter} iterations")


def surface_residual(g: np.ndarray, h00: np.ndarray, h01: np.ndarray, z: complex) -> float:
    """Max-norm of ``(z - h00) g - h01 g h10 g - 1`` relative to its terms."""
    n = h00.shape[0]
    zh = z * np.eye(n) - h00
    F = zh @ g - h01 @ g @ h01.conj().T @ g - np.eye(n)
    scale = max(np.abs(g).max() * max(np.abs(zh).max(), np.abs(h01).max()), 1.0)
    return float(np.abs(F).max() / scale)


def _polish_surface(g, h00, h01, z, steps: int = 4):
    n = h00.shape[0]
    eye = np.eye(n)
    h10 = h01.conj().T
    zh = z * eye - h00
    best, best_res = g, surface_residual(g, h00, h01, z)
    for _ in range(steps):
        if best_res < 1e-14:
            break
        F = zh @ g - h01 @ g @ h10 @ g - eye
        # derivative along D: (z - h00 - h01 g h10) D - h01 D (h10 g)
        J = np.kron(eye, zh - h01 @ g @ h10) - np.kron((h10 @ g).T, h01)
        try:
            d = np.linalg.solve(J, -F.reshape(-1, order="F"))
        except np.linalg.LinAlgError:
            break
        g = g + d.reshape(n, n, order="F")
        res = surface_residual(g, h00, h01, z)
        if not res < best_res:
            break
        best, best_res = g, res
    return best


def lead_orbitals(spec: DeviceSpec, lead: LeadSpec) -> np.ndarray:
    rows = np.asarray(spec.channel_rows(lead.channel))
    return np.ravel(np.column_stack([2 * rows, 2 * rows + 1]))


def _spin_projector(n_sites: int, spin: str) -> np.ndarray:
    p = np.zeros(2 * n_sites)
    p[SPINS.index(spin)::2] = 1.0
    return p


def lead_self_energy(lead: LeadSpec, spec: DeviceSpec, E: float,
                     eta: float = ETA) -> SelfEnergy:
    """Self-energy of a single-channel lead attached to a face of ``spec``.

    The lead continues the channel's rows with plain hopping and no
    spin-orbit term; its on-site energy is ``4t + band_offset``.
    """
    W = spec.channel_width
    t = spec.hopping
    h00 = (4 * t + spec.band_offset) * np.eye(W) - t * (np.eye(W, k=1) + np.eye(W, k=-1))
    h01 = -t * np.eye(W)
    gs = surface_green(h00, h01, E + 1j * eta)
    # device boundary couples to the lead surface with -t; Sigma = tau^+ g tau
    sigma_orb = t * t * gs
    sigma = np.kron(sigma_orb, np.eye(2))
    if lead.spin_filter != "none":
        p = _spin_projector(W, lead.spin_filter)
        sigma = sigma * np.outer(p, p)
    return SelfEnergy(lead, sigma, lead_orbitals(spec, lead), E)


# -- Green's functions --------------------------------------------------------

def _embed(sigmas: Sequence[SelfEnergy], face: str, b: int) -> np.ndarray:
    out = np.zeros((b, b), dtype=complex)
    for s in sigmas:
        if s.lead.face == face:
            out[np.ix_(s.orbitals, s.orbitals)] += s.matrix
    return out


def green_retarded(H: SpinBlockMatrix, sigmas: Sequence[SelfEnergy], E: float,
                   eta: float = ETA) -> np.ndarray:
    """Full retarded Green's function by block-tridiagonal inversion.

    Returns the dense ``(N, N)`` matrix, so this is meant for small devices
    and consistency checks; transport only needs :func:`corner_blocks`.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    nx, b = H.nx, H.block_size
    A = _diag_blocks(H, sigmas, E, eta)
    Al = [-H.lower[i] for i in range(nx - 1)]  # A[i+1, i]
    Au = [-H.upper(i) for i in range(nx - 1)]  # A[i, i+1]
    gL = [_inv(A[0])]
    for i in range(1, nx):
        gL.append(_inv(A[i] - Al[i - 1] @ gL[i - 1] @ Au[i - 1]))
    G = np.zeros((nx, nx, b, b), dtype=complex)
    G[nx - 1, nx - 1] = gL[nx - 1]
    for i in range(nx - 2, -1, -1):
        G[i, i] = gL[i] + gL[i] @ Au[i] @ G[i + 1, i + 1] @ Al[i] @ gL[i]
    for j in range(nx):
        for i in range(j - 1, -1, -1):
            G[i, j] = -gL[i] @ Au[i] @ G[i + 1, j]
    for i in range(nx):
        for j in range(i - 1, -1, -1):
            G[i, j] = -G[i, j + 1] @ Al[j] @ gL[j]
    return G.transpose(0, 2, 1, 3).reshape(nx * b, nx * b)


def _inv(m: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc


def _diag_blocks(H: SpinBlockMatrix, sigmas, E, eta) -> list:
    b = H.block_size
    z = (E + 1j * eta) * np.eye(b)
    A = [z - H.diag[i] for i in range(H.nx)]
    A[0] = A[0] - _embed(sigmas, "left", b)
    A[-1] = A[-1] - _embed(sigmas, "right", b)
    return A


def corner_blocks(H: SpinBlockMatrix, sigmas: Sequence[SelfEnergy], E: float,
                  eta: float = ETA) -> dict:
    """Blocks G[first, first], G[last, first], G[first, last], G[last, last]."""
    nx = H.nx
    A = _diag_blocks(H, sigmas, E, eta)
    if nx == 1:
        g = _inv(A[0])
        return {("L", "L"): g, ("R", "L"): g, ("L", "R"): g, ("R", "R"): g}
    # forward sweep: left-connected g and propagator to column 0
    g = _inv(A[0])
    prop = g
    for i in range(1, nx):
        Li, Ui = H.lower[i - 1], H.upper(i - 1)
        g = _inv(A[i] - Li @ g @ Ui)
        prop = g @ Li @ prop
    G_RR, G_RL = g, prop
    # backward sweep: right-connected g and propagator to the last column
    g = _inv(A[nx - 1])
    prop = g
    for i in range(nx - 2, -1, -1):
        Li, Ui = H.lower[i], H.upper(i)
        g = _inv(A[i] - Ui @ g @ Li)
        prop = g @ Ui @ prop
    G_LL, G_LR = g, prop
    return {("L", "L"): G_LL, ("R", "L"): G_RL, ("L", "R"): G_LR, ("R", "R"): G_RR}


# -- transmission -------------------------------------------------------------

def _check_leads(leads: Sequence[LeadSpec]):
    faces = {l.face for l in leads}
    if faces != {"left", "right"}:
        raise GeometryError("need at least one left and one right lead")
    labels = [l.label for l in leads]
    if len(set(labels)) != len(labels):
        raise GeometryError(f"duplicate leads {labels}")


def _solve(device: RegionMap, leads: Sequence[LeadSpec], E: float, eta: float,
           H: Optional[SpinBlockMatrix] = None, device_eta: float = 0.0):
    _check_leads(leads)
    H = assemble_hamiltonian(device) if H is None else H
    sigmas = [lead_self_energy(l, device.spec, E, eta) for l in leads]
    corners = corner_blocks(H, sigmas, E, device_eta)
    return sigmas, corners


def _sub(corners, sq: SelfEnergy, sp_: SelfEnergy) -> np.ndarray:
    key = (sq.lead.face[0].upper(), sp_.lead.face[0].upper())
    return corners[key][np.ix_(sq.orbitals, sp_.orbitals)]


def transmission(device: RegionMap, leads: Sequence[LeadSpec], E: float,
                 eta: float = ETA, H: Optional[SpinBlockMatrix] = None,
                 device_eta: float = 0.0) -> TransmissionRecord:
    """T_{q<-p} = Tr(Gamma_q G Gamma_p G^dagger), resolved in spin on both sides.

    Spin resolution projects the broadening of each lead onto one spin.
    ``eta`` regularizes the lead surface Green's functions; ``device_eta``
    is an optional absorbing broadening inside the device (each unit of it
    removes roughly ``2 eta L / (hbar v)`` of the flux).  Entries with the
    same lead on both sides are reflection probabilities from the Fisher-Lee
    amplitude ``r = -1 + i Gamma^1/2 G Gamma^1/2``, so for every input the
    outgoing row sums to the number of open modes.
    """
    sigmas, corners = _solve(device, leads, E, eta, H, device_eta)
    rec = TransmissionRecord(E, [s.lead.label for s in sigmas])
    W = device.spec.channel_width
    proj = {s: _spin_projector(W, s) for s in SPINS}
    for sp_ in sigmas:
        gp = sp_.gamma
        rec.open_modes[sp_.lead.label] = open_mode_count(sp_)
        for sq in sigmas:
            M = _sub(corners, sq, sp_)
            if sq is sp_:
                _reflection(rec, sp_, M)
                continue
            gq = sq.gamma
            for s_in in SPINS:
                gp_s = gp * np.outer(proj[s_in], proj[s_in])
                inner = M @ gp_s @ M.conj().T
                for s_out in SPINS:
                    gq_s = gq * np.outer(proj[s_out], proj[s_out])
                    val = np.trace(gq_s @ inner).real
                    rec.T[(sp_.lead.label, s_in, sq.lead.label, s_out)] = float(val)
    return rec


def _psd_sqrt(m: np.ndarray):
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    keep = w > 1e-4 * max(w.max(), 1e-300)
    root = (v * np.sqrt(w)) @ v.conj().T
    proj = v[:, keep] @ v[:, keep].conj().T
    return root, proj


def _reflection(rec: TransmissionRecord, sigma: SelfEnergy, M: np.ndarray):
    """Same-lead entries: R = |r|^2 with r = -1 + i Gamma^1/2 G Gamma^1/2."""
    label = sigma.lead.label
    g = sigma.gamma
    roots = {}
    for k, s in enumerate(SPINS):
        roots[s] = _psd_sqrt(_spin_block(g, k))
    for ki, s_in in enumerate(SPINS):
        root_in, proj_in = roots[s_in]
        for ko, s_out in enumerate(SPINS):
            root_out, _ = roots[s_out]
            r = 1j * root_out @ M[ko::2, ki::2] @ root_in
            if ki == ko:
                r = r - proj_in
            rec.T[(label, s_in, label, s_out)] = float(np.sum(np.abs(r) ** 2))


def open_mode_count(sigma: SelfEnergy, threshold: float = 1e-4) -> int:
    """Number of propagating lead modes per spin.

    Evanescent modes only pick up broadening of order eta; open modes carry
    2 t sin(ka), so eigenvalues of Gamma are compared with ``threshold * t``.
    """
    g = _spin_block(sigma.gamma, 0)
    w = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    t = abs(sigma.matrix).max() or 1.0
    return int(np.sum(w > threshold * t))


def _spin_block(m: np.ndarray, s: int) -> np.ndarray:
    return m[s::2, s::2]


def _mode_vector(sigma: SelfEnergy):
    g = _spin_block(sigma.gamma, 0)
    g = 0.5 * (g + g.conj().T)
    w, v = np.linalg.eigh(g)
    u = v[:, -1]
    ph = np.sum(u)
    u = u * (np.conj(ph) / abs(ph))
    return float(w[-1]), u


def transmission_amplitudes(device: RegionMap, leads: Sequence[LeadSpec], E: float,
                            eta: float = ETA) -> dict:
    """Spin 2x2 amplitude matrices ``t[(out, in)]`` between single-mode leads.

    Rows index the outgoing spin, columns the incoming spin.  Each lead's
    transverse mode is fixed to a real vector with positive sum, so
    relative phases between ports on the same face are meaningful.
    """
    sigmas, corners = _solve(device, leads, E, eta)
    modes = {}
    for s in sigmas:
        if open_mode_count(s) != 1:
            raise GeometryError(f"lead {s.lead.label} is not single-mode at E = {E}")
        modes[s.lead.label] = _mode_vector(s)
    out = {}
    for sp_ in sigmas:
        gp, up = modes[sp_.lead.label]
        for sq in sigmas:
            gq, uq = modes[sq.lead.label]
            M = _sub(corners, sq, sp_)
            amp = np.empty((2, 2), dtype=complex)
            for so in (0, 1):
                for si in (0, 1):
                    amp[so, si] = np.sqrt(gq * gp) * (uq.conj() @ M[so::2, si::2] @ up)
            out[(sq.lead.label, sp_.lead.label)] = amp
    return out


def worker_count(default: Optional[int] = None) -> int:
    env = os.environ.get("SPINLOGIC_THREADS")
    if env:
        return max(1, int(env))
    return default or (os.cpu_count() or 1)


def transmission_sweep(device: RegionMap, leads: Sequence[LeadSpec],
                       energies: Iterable[float], eta: float = ETA,
                       workers: Optional[int] = None, device_eta: float = 0.0) -> list:
    """Transmission at many energies; each energy is an independent job."""
    energies = list(energies)
    H = assemble_hamiltonian(device)
    job = lambda E: transmission(device, leads, E, eta, H, device_eta)
    n = worker_count(workers)
    if n == 1 or len(energies) < 2:
        return [job(E) for E in energies]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(job, energies))


def landauer_current(device: RegionMap, leads: Sequence[LeadSpec], V: float,
                     E_F: Optional[float] = None, n_points: int = 21,
                     source: str = "L0", drain: str = "R0", eta: float = ETA,
                     transmission_fn: Optional[Callable[[float], float]] = None) -> IVPoint:
    """Zero-temperature Landauer current from ``source`` to ``drain``.

    I = (e/h) * integral of T(E) over [E_F, E_F + eV], trapezoidal rule,
    with T summed over spins.  ``transmission_fn`` overrides the NEGF
    evaluation of T(E).
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if V == 0:
        return IVPoint(0.0, 0.0)
    E_F = device.energy if E_F is None else E_F
    energies = np.linspace(E_F, E_F + V, n_points)
    if transmission_fn is None:
        recs = transmission_sweep(device, leads, energies, eta)
        T = np.array([r.total(source, drain) for r in recs])
    else:
        T = np.array([transmission_fn(E) for E in energies])
    integral = np.trapezoid(T, energies) if hasattr(np, "trapezoid") else np.trapz(T, energies)
    return IVPoint(float(V), float(E_CHARGE / H_PLANCK * integral * EV))


# -- Rashba calibration -------------------------------------------------------

def rotation_angle(amp: np.ndarray, axis: str) -> float:
    """Rotation angle in [0, 2 pi) of a spin transfer matrix.

    ``amp`` is proportional to R_axis(theta) = exp(-i theta sigma_axis / 2).
    """
    if axis == "y":
        c, s = amp[0, 0], amp[1, 0]
        half = np.arctan2(abs(s), abs(c))
        if (s * np.conj(c)).real < 0:
            half = np.pi - half
        return float(2 * half)
    if axis == "z":
        return float(np.angle(amp[1, 1] / amp[0, 0]) % (2 * np.pi))
    raise ValueError(f"unknown axis {axis!r}")


def spin_flip_fraction(rec: TransmissionRecord, in_port="L0", out_port="R0") -> float:
    up = rec.get(in_port, "up", out_port, "up")
    down = rec.get(in_port, "up", out_port, "down")
    return down / (up + down)


@dataclass
class RashbaProbe:
    """Single-channel test bench: plain buffers around an L-site Rashba region."""

    length: int
    template: DeviceSpec
    axis: str = "y"
    buffer: int = 5
    energy: Optional[float] = None

    def device(self, alpha: float) -> RegionMap:
        tpl = self.template
        spec = DeviceSpec.single_channel(
            self.length + 2 * self.buffer, tpl.channel_width, tpl.grid.a, tpl.grid.m_eff,
            band_offset=tpl.band_offset,
            segments=(Lead(self.buffer), Rashba(self.length, 0, alpha, self.axis),
                      Lead(self.buffer)))
        return build_device(spec, self.energy)

    def leads(self):
        return [LeadSpec("left", 0), LeadSpec("right", 0)]

    def angle(self, alpha: float) -> float:
        dev = self.device(alpha)
        amp = transmission_amplitudes(dev, self.leads(), dev.energy)[("R0", "L0")]
        return rotation_angle(amp, self.axis)

    def flip_fraction(self, alpha: float) -> float:
        dev = self.device(alpha)
        return spin_flip_fraction(transmission(dev, self.leads(), dev.energy))


def solve_unwrapped(angle: Callable[[float], float], target: float, window,
                    scan_points: int = 33, xtol: float = 1e-22) -> float:
    """Parameter in ``window`` at which the continuous angle reaches ``target``.

    ``angle`` may return values wrapped to any 2 pi interval.  The scan is
    unwrapped starting from the branch of the first point closest to zero,
    the first bracketing interval is refined with Brent's method.
    """
    xs = np.linspace(window[0], window[1], scan_points)
    raw = np.array([angle(x) for x in xs])
    unwrapped = np.unwrap(raw)
    unwrapped += np.angle(np.exp(1j * raw[0])) - unwrapped[0]
    hits = np.nonzero((unwrapped[:-1] - target) * (unwrapped[1:] - target) <= 0)[0]
    if len(hits) == 0:
        raise NoBracket(
            f"angle {target:.4g} rad not reached over {tuple(window)} "
            f"(range {unwrapped.min():.4g}..{unwrapped.max():.4g})")
    k = hits[0]
    ref = 0.5 * (unwrapped[k] + unwrapped[k + 1])

    def f(x):
        a = angle(x)
        a += 2 * np.pi * np.round((ref - a) / (2 * np.pi))
        return a - target

    lo, hi = xs[k], xs[k + 1]
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    return float(brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))


def calibrate_alpha(target: float, L: int, template: Optional[DeviceSpec] = None,
                    axis: str = "y", window=(0.0, 5e-10), tol: float = 1e-4,
                    scan_points: int = 33, energy: Optional[float] = None) -> float:
    """Rashba parameter (eV m) rotating the spin by ``target`` over ``L`` sites.

    The rotation angle measured from NEGF amplitudes is unwrapped along a
    coarse scan of ``window`` and the bracketing interval is then refined.
    For ``axis="y"`` the result also satisfies
    |flip fraction - sin^2(target/2)| < ``tol``.
    """
    if template is None:
        template = DeviceSpec.single_channel(1)
    if target == 0:
        return 0.0
    probe = RashbaProbe(L, template, axis, energy=energy)
    alpha = solve_unwrapped(probe.angle, target, window, scan_points)
    if axis == "y":
        frac = probe.flip_fraction(alpha)
        if abs(frac - np.sin(target / 2) ** 2) >= tol:
            raise NoConvergence(f"flip fraction {frac:.6f} misses target by >= {tol}")
    return alpha
