"""Square-grid device geometry and the spin-resolved tight-binding Hamiltonian.

A device is a ribbon of ``nx`` columns (transport direction x) and ``ny``
rows.  In the two-channel layout the rows are

    [channel 0 | wall | channel 1]

where the wall rows sit at a large potential that decouples the channels.
Segments are laid out left to right starting at column 0; a ``Coupler``
lowers the wall to a finite barrier over its length, a ``Barrier`` raises
the potential of one channel (phase shifter) and a ``Rashba`` segment adds
spin-orbit hopping terms to one or both channels.

Orbital index of (ix, iy, spin) is ``2 * (ix * ny + iy) + spin`` so that the
Hamiltonian is block tridiagonal over columns with blocks of size ``2 ny``.
Hopping blocks are stored for the hop ``i -> j`` with ``j = i + x`` (or
``+ y``), i.e. the matrix element ``H[j, i]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .constants import EV, HBAR, M0
from .errors import GeometryError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

RASHBA_AXES = ("y", "z")


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    a: float = 1e-9
    m_eff: float = 0.05

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("grid spacing must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be >= 1")
        if not self.m_eff > 0:
            raise ValueError("m_eff must be positive")

    @property
    def t(self) -> float:
        return hopping_energy(self)


# -- segments -----------------------------------------------------------------

@dataclass(frozen=True)
class Lead:
    """Plain contact buffer; electrically identical to ``PlainWire``."""

    length: int
    kind = "lead"


@dataclass(frozen=True)
class PlainWire:
    length: int
    kind = "plain"


@dataclass(frozen=True)
class Coupler:
    """Window in the inter-channel wall held at ``barrier`` eV.

    ``taper`` columns at each end (inside ``length``) ramp the window from
    ``taper_height`` (default: the wall potential) down to ``barrier``.  The
    ramp is adiabatic for the guided mode: the potential is chosen so that
    the lowest transverse eigenvalue of the cross-section follows a
    raised-cosine profile, which spreads the change of mode shape evenly
    over the taper and suppresses reflection.
    """

    length: int
    barrier: float
    taper: int = 0
    taper_height: Optional[float] = None
    kind = "coupler"


@dataclass(frozen=True)
class Barrier:
    """Potential step of ``height`` eV added to one channel (None: both).

    ``taper`` columns at each end (inside ``length``) ramp the height up
    from zero with a raised-cosine profile.
    """

    length: int
    channel: Optional[int]
    height: float
    taper: int = 0
    kind = "barrier"


@dataclass(frozen=True)
class Rashba:
    """Spin-orbit region rotating the spin of x-moving electrons.

    ``axis="y"`` is the field-along-z configuration (sigma_y on x-bonds);
    ``axis="z"`` the field-along-y configuration (sigma_z on x-bonds).
    ``transverse`` adds the sigma_x y-bond term of the full 2D Rashba
    Hamiltonian (axis ``"y"`` only).  ``compensate`` raises the on-site
    energy by the band-bottom lowering the spin-orbit term causes, so the
    region acts as a pure spin rotation without an orbital phase.
    """

    length: int
    channel: Optional[int]
    alpha: float
    axis: str = "y"
    transverse: bool = False
    compensate: bool = True
    kind = "rashba"


Segment = Union[Lead, PlainWire, Coupler, Barrier, Rashba]


@dataclass(frozen=True)
class DeviceSpec:
    grid: GridSpec
    channel_width: int = 10
    wall_potential: float = 100.0
    band_offset: float = 0.0  # band edge; segment potentials are measured from it
    segments: tuple = ()
    wall_width: int = 3
    n_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def two_channel(cls, nx: int, channel_width: int = 10, wall_width: int = 3,
                    a: float = 1e-9, m_eff: float = 0.05, **kw) -> "DeviceSpec":
        ny = 2 * channel_width + wall_width
        return cls(GridSpec(nx, ny, a, m_eff), channel_width=channel_width,
                   wall_width=wall_width, n_channels=2, **kw)

    @classmethod
    def single_channel(cls, nx: int, channel_width: int = 10, a: float = 1e-9,
                       m_eff: float = 0.05, **kw) -> "DeviceSpec":
        return cls(GridSpec(nx, channel_width, a, m_eff), channel_width=channel_width,
                   wall_width=0, n_channels=1, **kw)

    def channel_rows(self, channel: int) -> range:
        if channel == 0:
            return range(0, self.channel_width)
        if channel == 1 and self.n_channels == 2:
            start = self.channel_width + self.wall_width
            return range(start, start + self.channel_width)
        raise GeometryError(f"no channel {channel!r} in a {self.n_channels}-channel device")

    @property
    def wall_rows(self) -> range:
        if self.n_channels == 1:
            return range(0)
        return range(self.channel_width, self.channel_width + self.wall_width)

    @property
    def hopping(self) -> float:
        return hopping_energy(self.grid)

    def subband_edges(self, n_max: int = 3) -> np.ndarray:
        """Hard-wall transverse subband bottoms of one channel, in eV."""
        t = self.hopping
        n = np.arange(1, n_max + 1)
        return self.band_offset + 2 * t * (1 - np.cos(n * np.pi / (self.channel_width + 1)))

    def default_energy(self) -> float:
        """Injection energy 0.05 t above the first subband bottom."""
        return float(self.subband_edges(1)[0] + 0.05 * self.hopping)


@dataclass
class RegionMap:
    """Compiled device: site potentials and directed hopping blocks."""

    spec: DeviceSpec
    potential: np.ndarray  # (nx, ny) eV, excludes 4t and band offset
    hop_x: np.ndarray  # (nx-1, ny, 2, 2): block H[(ix+1, iy), (ix, iy)]
    hop_y: np.ndarray  # (nx, ny-1, 2, 2): block H[(ix, iy+1), (ix, iy)]
    energy: float
    segment_columns: list = field(default_factory=list)

    @property
    def grid(self) -> GridSpec:
        return self.spec.grid

    @property
    def t(self) -> float:
        return self.spec.hopping

    def channel_rows(self, channel: int) -> range:
        return self.spec.channel_rows(channel)

    def with_potential_shift(self, shift: float) -> "RegionMap":
        return RegionMap(self.spec, self.potential + shift, self.hop_x, self.hop_y,
                         self.energy + shift, list(self.segment_columns))

    def bonds_hermitian_paired(self) -> bool:
        """Reverse hops are the conjugate transpose by construction."""
        h = assemble_hamiltonian(self)
        return h.hermiticity_error() == 0.0


class SpinBlockMatrix:
    """Hermitian block-tridiagonal Hamiltonian over columns.

    ``diag[i]`` is the ``(2 ny, 2 ny)`` block of column ``i`` and ``lower[i]``
    the coupling block ``H[i+1, i]``.
    """

    def __init__(self, diag: np.ndarray, lower: np.ndarray, nx: int, ny: int):
        self.diag = diag
        self.lower = lower
        self.nx = nx
        self.ny = ny
        self.diag.setflags(write=False)
        self.lower.setflags(write=False)

    @property
    def block_size(self) -> int:
        return 2 * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        n = self.nx * self.block_size
        return (n, n)

    def upper(self, i: int) -> np.ndarray:
        """Block H[i, i+1]."""
        return self.lower[i].conj().T

    def to_sparse(self) -> sp.csr_matrix:
        n = self.nx
        blocks = [[None] * n for _ in range(n)]
        for i in range(n):
            blocks[i][i] = sp.csr_matrix(self.diag[i])
            if i + 1 < n:
                blocks[i + 1][i] = sp.csr_matrix(self.lower[i])
                blocks[i][i + 1] = sp.csr_matrix(self.upper(i))
        return sp.bmat(blocks, format="csr")

    def to_dense(self) -> np.ndarray:
        b = self.block_size
        out = np.zeros(self.shape, dtype=complex)
        for i in range(self.nx):
            out[i * b:(i + 1) * b, i * b:(i + 1) * b] = self.diag[i]
            if i + 1 < self.nx:
                out[(i + 1) * b:(i + 2) * b, i * b:(i + 1) * b] = self.lower[i]
                out[i * b:(i + 1) * b, (i + 1) * b:(i + 2) * b] = self.upper(i)
        return out

    def hermiticity_error(self) -> float:
        return float(max(np.max(np.abs(d - d.conj().T)) for d in self.diag))


# -- physics helpers ----------------------------------------------------------

def hopping_energy(grid: GridSpec) -> float:
    """t = hbar^2 / (2 m* a^2) in eV."""
    return float(HBAR**2 / (2.0 * grid.m_eff * M0 * grid.a**2) / EV)


def precession_angle(alpha: float, L: float, m_eff: float = 0.05) -> float:
    """Ballistic Rashba precession angle 2 m* alpha L / hbar^2 (alpha in eV m)."""
    if not L > 0:
        raise ValueError("L must be positive")
    return float(2.0 * m_eff * M0 * alpha * EV * L / HBAR**2)


def lattice_precession_angle(alpha: float, n_bonds: int, grid: GridSpec) -> float:
    """Exact precession of the discretized spin-orbit hopping over n bonds."""
    return float(2 * n_bonds * np.arctan(alpha / (2 * grid.a * hopping_energy(grid))))


def lattice_alpha_for_angle(theta: float, n_bonds: int, grid: GridSpec) -> float:
    """Inverse of :func:`lattice_precession_angle`."""
    return float(2 * grid.a * hopping_energy(grid) * np.tan(theta / (2 * n_bonds)))


def rashba_hop(t: float, alpha: float, a: float, sigma: np.ndarray) -> np.ndarray:
    return -t * SIGMA_0 + 1j * (alpha / (2 * a)) * sigma


# -- compilation --------------------------------------------------------------

def _check_spec(spec: DeviceSpec, E: float):
    g = spec.grid
    if spec.channel_width < 1:
        raise GeometryError("channel_width must be >= 1")
    expected = spec.channel_width if spec.n_channels == 1 else \
        2 * spec.channel_width + spec.wall_width
    if spec.n_channels not in (1, 2):
        raise GeometryError("n_channels must be 1 or 2")
    if spec.n_channels == 2 and spec.wall_width < 1:
        raise GeometryError("two-channel devices need wall_width >= 1")
    if g.ny != expected:
        raise GeometryError(f"grid.ny = {g.ny} but channels and wall need {expected} rows")
    total = sum(s.length for s in spec.segments)
    if total > g.nx:
        raise GeometryError(f"segments span {total} columns, grid has {g.nx}")
    if spec.n_channels == 2 and not spec.wall_potential + spec.band_offset > E:
        raise GeometryError(
            f"wall potential {spec.wall_potential} eV is open at E = {E} eV")


def build_device(spec: DeviceSpec, energy: Optional[float] = None) -> RegionMap:
    """Compile a :class:`DeviceSpec` into per-site potentials and hopping blocks.

    ``energy`` is the operating energy used for validation (default
    :meth:`DeviceSpec.default_energy`).
    """
    E = spec.default_energy() if energy is None else float(energy)
    _check_spec(spec, E)
    g = spec.grid
    nx, ny = g.nx, g.ny
    t = spec.hopping
    pot = np.zeros((nx, ny))
    wall = list(spec.wall_rows)
    if wall:
        pot[:, wall] = spec.wall_potential
    hop_x = np.broadcast_to(-t * SIGMA_0, (max(nx - 1, 0), ny, 2, 2)).copy()
    hop_y = np.broadcast_to(-t * SIGMA_0, (nx, max(ny - 1, 0), 2, 2)).copy()

    cols = []
    c0 = 0
    for seg in spec.segments:
        if seg.length < 1:
            raise GeometryError(f"segment {seg!r} has non-positive length")
        c1 = c0 + seg.length
        cols.append((c0, c1, seg))
        if seg.kind not in ("lead", "plain") and (c0 == 0 or c1 == nx):
            raise GeometryError(
                f"{seg.kind} segment touches a lead face; leads need a plain column")
        if seg.kind == "coupler":
            if spec.n_channels != 2:
                raise GeometryError("coupler needs a two-channel device")
            if not seg.barrier < spec.wall_potential:
                raise GeometryError("coupler barrier must be below the wall potential")
            pot[c0:c1, wall] = coupler_profile(spec, seg)[:, None]
        elif seg.kind == "barrier":
            prof = seg.height * taper_profile(seg.length, seg.taper)
            for r in _rows(spec, seg.channel):
                pot[c0:c1, r] += prof
        elif seg.kind == "rashba":
            _apply_rashba(spec, seg, c0, c1, pot, hop_x, hop_y)
        c0 = c1
    return RegionMap(spec, pot, hop_x, hop_y, E, cols)


def taper_profile(length: int, taper: int) -> np.ndarray:
    """Weights in [0, 1] rising as sin^2 over ``taper`` columns at each end."""
    if taper < 0 or 2 * taper > length:
        raise GeometryError(f"taper {taper} does not fit in {length} columns")
    w = np.ones(length)
    if taper:
        ramp = np.sin(0.5 * np.pi * (np.arange(taper) + 0.5) / taper) ** 2
        w[:taper] = ramp
        w[length - taper:] = ramp[::-1]
    return w


def cross_section_ground(spec: DeviceSpec, window: float) -> float:
    """Lowest transverse eigenvalue (eV) of a two-channel cross-section."""
    t = spec.hopping
    ny = spec.grid.ny
    pot = np.zeros(ny)
    pot[list(spec.wall_rows)] = window
    h = np.diag(pot + 2 * t) - t * (np.eye(ny, k=1) + np.eye(ny, k=-1))
    return float(np.linalg.eigvalsh(h)[0])


def coupler_profile(spec: DeviceSpec, seg: Coupler) -> np.ndarray:
    """Window potential of each column of a coupler segment."""
    top = spec.wall_potential if seg.taper_height is None else seg.taper_height
    if not seg.barrier <= top <= spec.wall_potential:
        raise GeometryError("taper height must lie between the barrier and the wall")
    w = taper_profile(seg.length, seg.taper)
    prof = np.full(seg.length, float(seg.barrier))
    if seg.taper == 0 or top == seg.barrier:
        return prof
    e_top = cross_section_ground(spec, top)
    e_bot = cross_section_ground(spec, seg.barrier)
    for k in range(seg.taper):
        e = e_top + (e_bot - e_top) * w[k]
        v = brentq(lambda v: cross_section_ground(spec, v) - e, seg.barrier, top,
                   xtol=1e-13)
        prof[k] = prof[seg.length - 1 - k] = v
    return prof


def _rows(spec: DeviceSpec, channel: Optional[int]) -> list[int]:
    if channel is None:
        chans = range(spec.n_channels)
    else:
        chans = [channel]
    rows: list[int] = []
    for c in chans:
        rows.extend(spec.channel_rows(c))
    return rows


def _apply_rashba(spec, seg: Rashba, c0, c1, pot, hop_x, hop_y):
    if seg.axis not in RASHBA_AXES:
        raise GeometryError(f"unknown Rashba axis {seg.axis!r}")
    if not np.isfinite(seg.alpha):
        raise GeometryError("Rashba alpha must be finite")
    g = spec.grid
    t = spec.hopping
    beta = seg.alpha / (2 * g.a)
    rows = _rows(spec, seg.channel)
    sigma = SIGMA_Y if seg.axis == "y" else SIGMA_Z
    hx = rashba_hop(t, seg.alpha, g.a, sigma)
    last = min(c1, hop_x.shape[0])
    hop_x[c0:last, rows] = hx
    t_prime = np.hypot(t, beta)
    shift = 2 * (t_prime - t)
    if seg.transverse and seg.axis == "y":
        hy = -t * SIGMA_0 - 1j * beta * SIGMA_X
        for c in ([seg.channel] if seg.channel is not None else range(spec.n_channels)):
            ch = list(spec.channel_rows(c))
            hop_y[c0:c1, ch[:-1]] = hy
        shift += 2 * (t_prime - t) * np.cos(np.pi / (spec.channel_width + 1))
    if seg.compensate:
        for r in rows:
            pot[c0:c1, r] += shift


def assemble_hamiltonian(region: RegionMap) -> SpinBlockMatrix:
    """Block-tridiagonal spin Hamiltonian of a compiled device."""
    spec = region.spec
    nx, ny = spec.grid.nx, spec.grid.ny
    t = spec.hopping
    b = 2 * ny
    diag = np.zeros((nx, b, b), dtype=complex)
    onsite = region.potential + 4 * t + spec.band_offset
    idx = np.arange(ny)
    for s in (0, 1):
        diag[:, 2 * idx + s, 2 * idx + s] = onsite
    # intra-column y hops
    for iy in range(ny - 1):
        blk = region.hop_y[:, iy]  # (nx, 2, 2): H[iy+1, iy]
        j, i = 2 * (iy + 1), 2 * iy
        diag[:, j:j + 2, i:i + 2] = blk
        diag[:, i:i + 2, j:j + 2] = np.conj(np.swapaxes(blk, 1, 2))
    lower = np.zeros((max(nx - 1, 0), b, b), dtype=complex)
    for iy in range(ny):
        lower[:, 2 * iy:2 * iy + 2, 2 * iy:2 * iy + 2] = region.hop_x[:, iy]
    return SpinBlockMatrix(diag, lower, nx, ny)
