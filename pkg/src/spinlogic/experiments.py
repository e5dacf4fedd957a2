"""End-to-end device experiments judged against the ideal reference.

Gates are compiled into hardware stages laid out along the two-channel
ribbon:

* ``coupler``: a tapered wall window tuned to split 50/50.  Its measured
  transfer matrix is ``[[1, i], [i, 1]] / sqrt 2`` (straight, cross).
* ``phase``: a relative phase on channel 1, realized by a shallow tapered
  potential well in whichever channel needs to advance.
* ``rotate``: a Rashba region rotating the spin about y or z in one or both
  channels.

Phase stages commute with spin rotations, so all phases between two
couplers are merged into one well.  Phases before the first coupler act on
a single injected port and phases after the last coupler are invisible to
port/spin resolved contacts; both are dropped.

Stage geometries (coupler length, well depths, Rashba strengths) are
calibrated once per hardware configuration with small NEGF test benches and
cached.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import gatesim as gs
from . import scatter
from .errors import BelowContrast, CalibrationMissing, GeometryError
from .lattice import (Barrier, Coupler, DeviceSpec, Lead, PlainWire,
                      Rashba, RegionMap, build_device, lattice_precession_angle)
from .negf import (ETA, SPINS, LeadSpec, TransmissionRecord, calibrate_alpha,
                   solve_unwrapped, transmission, transmission_amplitudes,
                   transmission_sweep)

DEFAULT_THRESHOLD = 10.0
ALPHA_WINDOW = (0.0, 5e-10)
PORTS = (0, 1)


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class Hardware:
    """Device and stage parameters shared by all experiments.

    ``None`` entries are designed or calibrated on first use.  ``alphas``
    holds Rashba overrides as ``((axis, angle_rad, length), alpha)`` pairs.
    """

    channel_width: int = 10
    wall_width: int = 3
    wall_potential: float = 100.0
    a: float = 1e-9
    m_eff: float = 0.05
    band_offset: float = 0.0
    energy: Optional[float] = None
    eta: float = ETA
    coupler_barrier: Optional[float] = None
    coupler_length: Optional[int] = None
    coupler_taper: int = 30
    coupler_taper_height: Optional[float] = None
    phase_length: int = 60
    phase_taper: int = 20
    rashba_length: int = 25
    buffer: int = 5
    alphas: tuple = ()
    auto_calibrate: bool = True

    def spec(self, nx: int = 1, segments=()) -> DeviceSpec:
        return DeviceSpec.two_channel(
            nx, self.channel_width, self.wall_width, self.a, self.m_eff,
            wall_potential=self.wall_potential, band_offset=self.band_offset,
            segments=segments)

    def single_spec(self, nx: int = 1, segments=()) -> DeviceSpec:
        return DeviceSpec.single_channel(nx, self.channel_width, self.a, self.m_eff,
                                         band_offset=self.band_offset, segments=segments)

    @property
    def E(self) -> float:
        return self.spec().default_energy() if self.energy is None else self.energy

    @property
    def window_barrier(self) -> float:
        """Coupler window potential above the band edge: the 50/50 slab barrier."""
        if self.coupler_barrier is not None:
            return self.coupler_barrier
        return scatter.fifty_fifty_barrier(self.E, self.band_offset) - self.band_offset

    def shifted(self, c: float) -> "Hardware":
        """Same device with every potential and the energy raised by ``c``.

        Segment potentials are measured from the band edge, so only the band
        offset and the energy move.
        """
        return replace(self, band_offset=self.band_offset + c, energy=self.E + c)


@dataclass
class ExperimentConfig:
    experiment: str
    case: str = "f0"
    target: str = "00"
    pseudo_in: int = 0
    spin_in: str = "up"
    alpha_range: tuple = (0.0, None)
    steps: int = 9
    sweep_length: int = 50
    threshold: float = DEFAULT_THRESHOLD
    hardware: Hardware = field(default_factory=Hardware)
    e_min: Optional[float] = None
    e_max: Optional[float] = None
    n_energies: int = 21
    device: str = "coupler"
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in ("dj", "grover", "nand", "init_sweep",
                                   "beamsplitter_check", "transmission"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        lo, hi = self.alpha_range
        for v in (lo, hi):
            if v is not None and not ALPHA_WINDOW[0] <= v <= ALPHA_WINDOW[1]:
                raise ValueError(f"alpha {v} outside {ALPHA_WINDOW} eV m")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if not self.threshold > 1:
            raise ValueError("threshold must exceed 1")
        if self.n_energies < 1:
            raise ValueError("n_energies must be >= 1")

    def energy_grid(self) -> np.ndarray:
        """Energies of a transmission sweep (defaults span the first subband)."""
        spec = self.hardware.spec()
        edge, t = spec.subband_edges(1)[0], spec.hopping
        lo = edge + 0.01 * t if self.e_min is None else self.e_min
        hi = edge + 0.1 * t if self.e_max is None else self.e_max
        return np.linspace(lo, hi, self.n_energies)


@dataclass
class PortCurrents:
    """Transmission into each (port, spin) for one injected (port, spin).

    In linear response each entry is proportional to the current collected
    by an ideal spin-resolving contact on that port.
    """

    in_port: int
    in_spin: str
    T: dict

    def __post_init__(self):
        for k, v in self.T.items():
            if v < 0:
                if v < -1e-9:
                    raise ValueError(f"negative transmission {v} at {k}")
                self.T[k] = 0.0

    @classmethod
    def from_record(cls, rec: TransmissionRecord, in_port: int, in_spin: str):
        src = f"L{in_port}"
        T = {(p, s): rec.get(src, in_spin, f"R{p}", s) for p in PORTS for s in SPINS}
        return cls(in_port, in_spin, T)

    def port_total(self, port: int) -> float:
        return float(sum(self.T[(port, s)] for s in SPINS))

    @property
    def total(self) -> float:
        return float(sum(self.T.values()))

    def as_dict(self) -> dict:
        return {f"p{p}_{s}": self.T[(p, s)] for p in PORTS for s in SPINS}


@dataclass
class VerdictReport:
    experiment: str
    negf_verdict: object
    gatesim_verdict: object
    analytic_verdict: object = None
    contrast: Optional[float] = None
    threshold: float = DEFAULT_THRESHOLD
    details: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def verdicts_agree(self) -> bool:
        ok = self.negf_verdict is not None and self.negf_verdict == self.gatesim_verdict
        if self.analytic_verdict is not None:
            ok = ok and self.analytic_verdict == self.gatesim_verdict
        return ok

    @property
    def passed(self) -> bool:
        contrast_ok = self.contrast is None or self.contrast >= self.threshold
        return bool(self.verdicts_agree and contrast_ok and all(self.checks.values()))

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "negf_verdict": self.negf_verdict,
            "gatesim_verdict": self.gatesim_verdict,
            "analytic_verdict": self.analytic_verdict,
            "contrast": self.contrast,
            "threshold": self.threshold,
            "checks": dict(self.checks),
            "details": self.details,
            "pass": self.passed,
        }


def classify_contrast(currents: Mapping, threshold: float = DEFAULT_THRESHOLD,
                      designation=None):
    """Verdict ``designation`` (default: the largest entry) and its contrast.

    The contrast is the designated current over the largest other one.
    Raises :class:`BelowContrast` when it falls short of ``threshold``.
    """
    if not threshold > 1:
        raise ValueError("threshold must exceed 1")
    if isinstance(currents, PortCurrents):
        currents = currents.T
    if len(currents) < 2:
        raise ValueError("need at least two channels to compare")
    if designation is None:
        designation = max(currents, key=lambda k: currents[k])
    high = currents[designation]
    low = max(v for k, v in currents.items() if k != designation)
    contrast = float(high / low) if low > 0 else float("inf")
    if not contrast >= threshold:
        raise BelowContrast(contrast, threshold)
    return designation, contrast


def _contrast(currents: Mapping, designation) -> float:
    high = currents[designation]
    low = max(v for k, v in currents.items() if k != designation)
    return float(high / low) if low > 0 else float("inf")


# -- stages and compilation ---------------------------------------------------

@dataclass(frozen=True)
class Stage:
    kind: str  # "coupler" | "phase" | "rotate"
    channel: Optional[int] = None
    axis: str = ""
    angle: float = 0.0


COUPLER_MATRIX = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)


def stage_unitary(stage: Stage) -> np.ndarray:
    """Ideal 4x4 action of a hardware stage."""
    if stage.kind == "coupler":
        return gs.on_pseudo(COUPLER_MATRIX)
    if stage.kind == "phase":
        return gs.on_pseudo(np.diag([1.0, np.exp(1j * stage.angle)]))
    if stage.kind == "rotate":
        r = gs.ry(stage.angle) if stage.axis == "y" else gs.rz(stage.angle)
        if stage.channel is None:
            return gs.on_spin(r)
        return gs.controlled_spin(r, stage.channel)
    raise ValueError(f"unknown stage kind {stage.kind!r}")


def stages_unitary(stages: Sequence[Stage]) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for st in stages:
        u = stage_unitary(st) @ u
    return u


def _rot(channel, axis, angle):
    return Stage("rotate", channel, axis, angle)


def _phase(angle):
    return Stage("phase", angle=angle)


def _phase_fix(stages: list, target: np.ndarray) -> list:
    """Append the channel phase that turns ``stages`` into ``target``.

    Only valid for gates that are diagonal in the pseudo-spin.
    """
    d = target @ stages_unitary(stages).conj().T
    d0, d1 = d[0, 0], d[2, 2]
    ideal = np.diag([d0, d0, d1, d1])
    if np.max(np.abs(d - ideal)) > 1e-12 or abs(abs(d0) - 1) > 1e-12:
        raise ValueError("gate is not reachable by a channel phase")
    phi = float(np.angle(d1 / d0))
    return stages + ([_phase(phi)] if abs(phi) > 1e-14 else [])


def gate_stages(name: str) -> list:
    """Hardware stages realizing a named gate up to a global phase."""
    half, full = np.pi / 2, np.pi
    if name == "hadamard_spin":  # i Ry(pi/2) Rz(pi)
        return [_rot(None, "z", full), _rot(None, "y", half)]
    if name == "hadamard_pseudospin":
        return [_phase(-half), Stage("coupler"), _phase(-half)]
    if name == "hadamard_both":
        return gate_stages("hadamard_pseudospin") + gate_stages("hadamard_spin")
    if name == "pseudospin_not":
        return [Stage("coupler"), Stage("coupler")]
    if name == "pauli_x_spin":  # i Ry(pi) Rz(pi)
        return [_rot(None, "z", full), _rot(None, "y", full)]
    if name == "pauli_z_spin":
        return [_rot(None, "z", full)]
    if name == "oracle_f0":
        return []
    if name == "oracle_f1":
        return gate_stages("pauli_x_spin")
    if name in ("oracle_f2", "cnot_pseudospin_controls_spin", "oracle_f3"):
        ch = 0 if name == "oracle_f3" else 1
        target = gs.oracle_unitary("f3" if ch == 0 else "f2").matrix
        return _phase_fix([_rot(ch, "z", full), _rot(ch, "y", full)], target)
    if name.startswith("mark_"):
        t = name[5:]
        port, _ = gs.grover_outcome(t)
        return _phase_fix([_rot(port, "z", full)], gs.sign_flip(t).matrix)
    raise GeometryError(f"no hardware mapping for gate {name!r}")


def circuit_gates(experiment: str, key) -> list[str]:
    if experiment == "dj":
        return ["hadamard_spin", "hadamard_pseudospin", f"oracle_{key}",
                "hadamard_pseudospin"]
    if experiment == "grover":
        # diffusion = -(H x H) mark_00 (H x H); the sign is global
        return ["hadamard_both", f"mark_{key}", "hadamard_both", "mark_00",
                "hadamard_both"]
    if experiment == "nand":
        return ["pseudospin_not"]
    raise ValueError(f"no gate circuit for {experiment!r}")


def compile_circuit(gates: Sequence[str]) -> list:
    stages = []
    for g in gates:
        stages.extend(gate_stages(g))
    return simplify(stages)


def simplify(stages: Sequence[Stage]) -> list:
    """Merge phases between couplers; drop those before the first and after the last."""
    out = []
    acc = 0.0
    seen_coupler = False
    for st in stages:
        if st.kind == "phase":
            acc += st.angle
            continue
        if st.kind == "coupler":
            phi = float(np.angle(np.exp(1j * acc)))
            if seen_coupler and abs(phi) > 1e-12:
                out.append(_phase(phi))
            acc = 0.0
            seen_coupler = True
        out.append(st)
    return out


# -- calibration --------------------------------------------------------------

def _leads4(spin_filter_r1: str = "none"):
    return [LeadSpec("left", 0), LeadSpec("left", 1), LeadSpec("right", 0),
            LeadSpec("right", 1, spin_filter_r1)]


def coupler_split(hw: Hardware, length: int) -> tuple[float, float]:
    """(straight, cross) up-spin transmission of a bare coupler of ``length``."""
    b = hw.buffer
    seg = Coupler(length, hw.window_barrier, hw.coupler_taper, hw.coupler_taper_height)
    spec = hw.spec(length + 2 * b, (Lead(b), seg, Lead(b)))
    rec = transmission(build_device(spec, hw.E), _leads4(), hw.E, hw.eta)
    return rec.get("L0", "up", "R0", "up"), rec.get("L0", "up", "R1", "up")


@functools.lru_cache(maxsize=None)
def design_coupler(hw: Hardware, max_length: int = 400) -> Coupler:
    """Shortest integer-length coupler closest to a 50/50 split."""
    if hw.coupler_length is not None:
        return Coupler(hw.coupler_length, hw.window_barrier, hw.coupler_taper,
                       hw.coupler_taper_height)
    prev = None
    for L in range(max(2 * hw.coupler_taper, 1), max_length + 1):
        s, c = coupler_split(hw, L)
        f = c / (s + c)
        if f >= 0.5:
            if prev is not None and abs(prev[1] - 0.5) < abs(f - 0.5):
                L = prev[0]
            return Coupler(L, hw.window_barrier, hw.coupler_taper,
                           hw.coupler_taper_height)
        prev = (L, f)
    raise GeometryError(f"no 50/50 coupler up to {max_length} columns")


def well_phase(hw: Hardware, depth: float) -> float:
    """Phase advance (rad) of a tapered well of ``depth`` eV (negative: barrier)."""
    L, b = hw.phase_length, hw.buffer
    amps = []
    for h in (0.0, -depth):
        spec = hw.single_spec(L + 2 * b, (Lead(b), Barrier(L, 0, h, hw.phase_taper),
                                         Lead(b)))
        dev = build_device(spec, hw.E)
        amp = transmission_amplitudes(dev, [LeadSpec("left"), LeadSpec("right")],
                                      hw.E, hw.eta)[("R0", "L0")]
        amps.append(amp[0, 0])
    return float(np.angle(amps[1] / amps[0]))


@functools.lru_cache(maxsize=None)
def design_well(hw: Hardware, phi: float) -> float:
    """Depth (eV) of the phase-shifter well advancing the phase by ``phi`` in (0, pi]."""
    if not 0 < phi <= np.pi + 1e-12:
        raise ValueError("well phase must lie in (0, pi]")
    max_depth = 0.5 * hw.spec().hopping
    return solve_unwrapped(lambda d: well_phase(hw, d), phi, (0.0, max_depth), 41,
                           xtol=1e-15)


def _alpha_override(hw: Hardware, axis: str, angle: float, length: int):
    for (ax, ang, L), alpha in hw.alphas:
        if ax == axis and L == length and abs(ang - angle) < 1e-9:
            return alpha
    return None


@functools.lru_cache(maxsize=None)
def rashba_alpha(hw: Hardware, axis: str, angle: float, length: int) -> float:
    """Calibrated Rashba parameter for a rotation of ``angle`` over ``length`` sites."""
    alpha = _alpha_override(hw, axis, angle, length)
    if alpha is not None:
        return alpha
    if not hw.auto_calibrate:
        raise CalibrationMissing(
            f"no alpha for a {angle:.6g} rad {axis}-rotation over {length} sites")
    return calibrate_alpha(angle, length, hw.single_spec(), axis, ALPHA_WINDOW,
                           energy=hw.E)


def stage_segments(stages: Sequence[Stage], hw: Hardware) -> list:
    segs = []
    for st in stages:
        if st.kind == "coupler":
            segs.append(design_coupler(hw))
        elif st.kind == "phase":
            phi = float(np.angle(np.exp(1j * st.angle)))
            if phi == -np.pi:
                phi = np.pi
            channel = 1 if phi > 0 else 0
            depth = design_well(hw, abs(phi))
            segs.append(Barrier(hw.phase_length, channel, -depth, hw.phase_taper))
        elif st.kind == "rotate":
            angle = float(np.mod(st.angle, 4 * np.pi))
            if angle == 0:
                continue
            if angle > 2 * np.pi:
                # R(angle) = -R(angle - 2 pi); only allowed when global
                if st.channel is not None:
                    raise GeometryError("channel rotations above 2 pi need a phase fix")
                angle -= 2 * np.pi
            alpha = rashba_alpha(hw, st.axis, angle, hw.rashba_length)
            segs.append(Rashba(hw.rashba_length, st.channel, alpha, st.axis))
        else:
            raise ValueError(f"unknown stage kind {st.kind!r}")
    return segs


def build_circuit(stages: Sequence[Stage], hw: Hardware) -> RegionMap:
    b = hw.buffer
    segs = [Lead(b)] + stage_segments(stages, hw) + [Lead(b)]
    nx = sum(s.length for s in segs)
    return build_device(hw.spec(nx, segs), hw.E)


def run_circuit(stages: Sequence[Stage], hw: Hardware, spin_filter_r1: str = "none"
                ) -> TransmissionRecord:
    dev = build_circuit(stages, hw)
    return transmission(dev, _leads4(spin_filter_r1), hw.E, hw.eta)


def ideal_output(stages: Sequence[Stage], pseudo_in: int, spin_in: str) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[gs.basis_index(pseudo_in, spin_in)] = 1.0
    return np.abs(stages_unitary(stages) @ psi) ** 2


# -- experiments --------------------------------------------------------------

def _hw(cfg) -> Hardware:
    return cfg.hardware if cfg is not None else Hardware()


def _threshold(cfg) -> float:
    return cfg.threshold if cfg is not None else DEFAULT_THRESHOLD


def run_dj_experiment(case: str, cfg: Optional[ExperimentConfig] = None) -> VerdictReport:
    """Deutsch-Jozsa on the device; port 0 dominating means constant."""
    hw = _hw(cfg)
    _, ideal = gs.run_deutsch_jozsa(case)
    stages = compile_circuit(circuit_gates("dj", case))
    rec = run_circuit(stages, hw)
    pc = PortCurrents.from_record(rec, 0, "down")
    ports = {0: pc.port_total(0), 1: pc.port_total(1)}
    dominant = max(ports, key=ports.get)
    verdict = "constant" if dominant == 0 else "balanced"
    return VerdictReport(
        f"dj_{case}", verdict, ideal, contrast=_contrast(ports, dominant),
        threshold=_threshold(cfg),
        details={"case": case, "port_transmission": {str(k): v for k, v in ports.items()},
                 "currents": pc.as_dict(), "total": pc.total,
                 "device_columns": build_length(stages, hw)})


def build_length(stages, hw: Hardware) -> int:
    return 2 * hw.buffer + sum(s.length for s in stage_segments(stages, hw))


def run_grover_experiment(target: str, cfg: Optional[ExperimentConfig] = None
                          ) -> VerdictReport:
    """One Grover iteration on the device; the marked string exits at (port, spin)."""
    hw = _hw(cfg)
    state = gs.run_grover(target)
    k = int(np.argmax(state.probabilities))
    ideal = [k >> 1, SPINS[k & 1]]
    stages = compile_circuit(circuit_gates("grover", target))
    rec = run_circuit(stages, hw)
    pc = PortCurrents.from_record(rec, 0, "up")
    dominant = max(pc.T, key=pc.T.get)
    share = pc.T[dominant] / pc.total
    return VerdictReport(
        f"grover_{target}", [dominant[0], dominant[1]], ideal,
        contrast=_contrast(pc.T, dominant), threshold=_threshold(cfg),
        checks={"dominant_share>=0.9": bool(share >= 0.9)},
        details={"target": target, "currents": pc.as_dict(), "total": pc.total,
                 "dominant_share": share, "gatesim_p_marked":
                     state.probability(*gs.grover_outcome(target)),
                 "device_columns": build_length(stages, hw)})


NAND_INPUTS = ((0, "up"), (0, "down"), (1, "up"), (1, "down"))


def nand_currents(hw: Hardware) -> dict:
    """Detector current (port 1, up-filtered contact) for each input, plus spin leakage."""
    stages = compile_circuit(circuit_gates("nand", None))
    dev = build_circuit(stages, hw)
    filt = transmission(dev, _leads4("up"), hw.E, hw.eta)
    raw = transmission(dev, _leads4(), hw.E, hw.eta)
    det = {f"{p}{s}": filt.get(f"L{p}", s, "R1", "up") for p, s in NAND_INPUTS}
    flip = raw.get("L0", "up", "R1", "down")
    return {"detector": det, "spin_flip_up_to_port1_down": flip,
            "device_columns": dev.spec.grid.nx}


def run_nand_experiment(pseudo_in: int, spin_in: str,
                        cfg: Optional[ExperimentConfig] = None) -> VerdictReport:
    """Double-splitter gate read out by an up-spin contact on port 1.

    The output bit is 1 iff the detector current for this input is at least
    ``threshold`` times the largest current among the other inputs.
    """
    hw = _hw(cfg)
    data = nand_currents(hw)
    det = data["detector"]
    key = f"{pseudo_in}{spin_in}"
    contrast = _contrast(det, key)
    negf_bit = int(contrast >= _threshold(cfg))
    ideal_bit = gs.run_nand(pseudo_in, spin_in)
    # the "high" input must stand out; "low" inputs must sit below the high one
    high_key = max(det, key=det.get)
    c = _contrast(det, high_key)
    return VerdictReport(
        f"nand_{key}", negf_bit, ideal_bit, contrast=c, threshold=_threshold(cfg),
        checks={"spin_conserved": bool(data["spin_flip_up_to_port1_down"] < 1e-6)},
        details={"input": [pseudo_in, spin_in], "detector": det,
                 "high_input": high_key,
                 "spin_flip_up_to_port1_down": data["spin_flip_up_to_port1_down"],
                 "device_columns": data["device_columns"]})


def interferometer_device(hw: Hardware, alpha: float, length: int) -> RegionMap:
    b = hw.buffer
    cp = design_coupler(hw)
    segs = [Lead(b), cp, PlainWire(2), Rashba(length, 1, alpha, "y"), PlainWire(2),
            cp, Lead(b)]
    nx = sum(s.length for s in segs)
    return build_device(hw.spec(nx, segs), hw.E)


@dataclass
class SweepPoint:
    alpha: float
    theta: float
    negf: PortCurrents
    analytic: scatter.PortProbabilities


def run_init_sweep(alpha_range=(0.0, None), steps: int = 9,
                   cfg: Optional[ExperimentConfig] = None, length: Optional[int] = None
                   ) -> tuple[list, VerdictReport]:
    """Pseudo-spin initialization sweep of the arm-1 Rashba strength.

    ``alpha_range[1] = None`` means the calibrated 2 pi strength.  Returns
    the sweep points and a report whose endpoint checks apply to alpha = 0
    and alpha_2pi when they are part of the sweep.
    """
    hw = _hw(cfg)
    if length is None:
        length = cfg.sweep_length if cfg is not None else 50
    alpha_2pi = rashba_alpha(hw, "y", 2 * np.pi, length)
    lo, hi = alpha_range
    hi = alpha_2pi if hi is None else hi
    lo = 0.0 if lo is None else lo
    alphas = np.linspace(lo, hi, steps)
    points = []
    grid = hw.spec().grid
    for alpha in alphas:
        rec = transmission(interferometer_device(hw, alpha, length), _leads4(), hw.E,
                           hw.eta)
        theta = lattice_precession_angle(alpha, length, grid)
        points.append(SweepPoint(float(alpha), theta, PortCurrents.from_record(rec, 0, "up"),
                                 scatter.interferometer_probabilities(theta, 0, "up")))
    report = _sweep_report(points, alpha_2pi, _threshold(cfg))
    return points, report


def _sweep_report(points, alpha_2pi, threshold) -> VerdictReport:
    diffs = []
    totals = []
    for pt in points:
        num = np.array([pt.negf.T[(p, s)] for p in PORTS for s in SPINS])
        ana = np.array(pt.analytic.as_tuple())
        diffs.append(num - ana)
        totals.append(num.sum())
    rms = float(np.sqrt(np.mean(np.square(diffs))))
    checks = {"rms<0.05": rms < 0.05,
              "total_conserved_1e-3": float(np.ptp(totals)) < 1e-3 if len(totals) > 1 else True}
    negf_v, ideal_v = [], []
    contrasts = []
    for pt in points:
        if abs(pt.alpha) < 1e-30:
            key, expect = (1, "up"), "port1_up"
        elif abs(pt.alpha - alpha_2pi) <= 1e-6 * alpha_2pi:
            key, expect = (0, "up"), "port0_up"
        else:
            continue
        val = pt.negf.T[key]
        checks[f"{expect}>=0.95"] = bool(val >= 0.95)
        checks[f"{expect}_others<=0.05"] = bool(
            max(v for k, v in pt.negf.T.items() if k != key) <= 0.05)
        dom = max(pt.negf.T, key=pt.negf.T.get)
        negf_v.append(f"port{dom[0]}_{dom[1]}")
        ideal_v.append(expect)
        contrasts.append(_contrast(pt.negf.T, key))
    return VerdictReport(
        "init_sweep", negf_v, ideal_v, contrast=min(contrasts) if contrasts else None,
        threshold=threshold, checks=checks,
        details={"rms": rms, "alpha_2pi": alpha_2pi, "steps": len(points),
                 "max_total_deviation": float(np.ptp(totals)) if totals else 0.0})


def slab_split(hw: Hardware) -> dict:
    """Analytic 50/50 slab placed across a single-mode wire.

    The longitudinal kinetic energy above the first subband plays the role
    of E - V1 of the slab theory.
    """
    spec0 = hw.single_spec()
    eps1 = spec0.subband_edges(1)[0]
    E_long = hw.E - eps1
    V2 = scatter.fifty_fifty_barrier(E_long, 0.0)
    barrier = scatter.Medium(hw.m_eff, V2)
    l = scatter.quarter_phase_length(barrier, E_long)
    L = int(round(l / hw.a))
    b = hw.buffer
    spec = hw.single_spec(L + 2 * b, (Lead(b), Barrier(L, 0, V2), Lead(b)))
    rec = transmission(build_device(spec, hw.E), [LeadSpec("left"), LeadSpec("right")],
                       hw.E, hw.eta)
    return {"barrier_eV": V2, "length_m": l, "length_sites": L,
            "T": rec.get("L0", "up", "R0", "up"), "R": rec.get("L0", "up", "L0", "up")}


def run_beamsplitter_check(cfg: Optional[ExperimentConfig] = None) -> VerdictReport:
    """Analytic slab splitter versus its NEGF embeddings.

    Analytic side: the designed slab has |r|^2 = |t|^2 = 1/2, equals
    (1/sqrt 2)[[j, 1], [1, j]] and antibunches perfectly.  NEGF side: the
    same slab across a single-mode wire, and the wall-window coupler at the
    slab barrier, both split 0.5 +- 0.05.
    """
    hw = _hw(cfg)
    E = 1.0
    outer = scatter.Medium(hw.m_eff, 0.0)
    V2 = scatter.fifty_fifty_barrier(E, 0.0)
    barrier = scatter.Medium(hw.m_eff, V2)
    l = scatter.quarter_phase_length(barrier, E)
    S = scatter.slab_matrix(scatter.SlabSpec(outer, barrier, l), E)
    ideal = np.array([[1j, 1], [1, 1j]]) / np.sqrt(2)
    s_err = float(np.max(np.abs(S.matrix - ideal)))
    coin = scatter.coincidence_probability(S)
    analytic_ok = (abs(S.reflectance - 0.5) <= 1e-9 and abs(S.transmittance - 0.5) <= 1e-9
                   and s_err <= 1e-9 and abs(coin - 1) <= 1e-9)

    slab = slab_split(hw)
    cp = design_coupler(hw)
    straight, cross = coupler_split(hw, cp.length)
    checks = {
        "analytic_split_1e-9": bool(abs(S.reflectance - 0.5) <= 1e-9
                                    and abs(S.transmittance - 0.5) <= 1e-9),
        "analytic_matrix_1e-9": bool(s_err <= 1e-9),
        "coincidence_1e-9": bool(abs(coin - 1) <= 1e-9),
        "slab_negf_split_0.05": bool(abs(slab["T"] - 0.5) <= 0.05
                                     and abs(slab["R"] - 0.5) <= 0.05),
        "coupler_negf_split_0.05": bool(abs(straight - 0.5) <= 0.05
                                        and abs(cross - 0.5) <= 0.05),
    }
    negf_ok = checks["slab_negf_split_0.05"] and checks["coupler_negf_split_0.05"]
    return VerdictReport(
        "beamsplitter_check", "50-50" if negf_ok else "unbalanced", "50-50",
        analytic_verdict="50-50" if analytic_ok else "unbalanced",
        threshold=_threshold(cfg), checks=checks,
        details={"analytic": {"E_eV": E, "V2_eV": V2, "length_m": l,
                              "reflectance": S.reflectance,
                              "transmittance": S.transmittance,
                              "matrix_error": s_err, "coincidence": coin},
                 "slab_negf": slab,
                 "coupler_negf": {"barrier_eV": cp.barrier, "length_sites": cp.length,
                                  "taper": cp.taper, "straight": straight,
                                  "cross": cross}})


def transmission_curve(hw: Hardware, energies, device: str = "coupler") -> list:
    """T(E) records of a reference device: ``wire``, ``slab`` or ``coupler``."""
    b = hw.buffer
    if device == "coupler":
        cp = design_coupler(hw)
        dev = build_device(hw.spec(cp.length + 2 * b, (Lead(b), cp, Lead(b))), hw.E)
        leads = _leads4()
    elif device == "slab":
        s = slab_split(hw)
        L = s["length_sites"]
        dev = build_device(hw.single_spec(L + 2 * b, (Lead(b), Barrier(L, 0, s["barrier_eV"]),
                                                      Lead(b))), hw.E)
        leads = [LeadSpec("left"), LeadSpec("right")]
    elif device == "wire":
        dev = build_device(hw.single_spec(2 * b, (Lead(b), Lead(b))), hw.E)
        leads = [LeadSpec("left"), LeadSpec("right")]
    else:
        raise ValueError(f"unknown reference device {device!r}")
    return transmission_sweep(dev, leads, energies, hw.eta)
