"""Command-line front end: strict YAML configs, experiment dispatch, outputs.

Every run writes ``report.json``, its CSV curve files and ``manifest.json``
into the output directory.  Files are produced in a scratch directory and
moved into place only after the experiment finished, so a failed run leaves
no partial output.  Exit status is 0 iff the verdict report passes.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import shutil
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from . import experiments as ex
from .errors import ParseError, SpinLogicError, UnitError
from .negf import SPINS

SUBCOMMANDS = {"dj": "dj", "grover": "grover", "nand": "nand",
               "init-sweep": "init_sweep", "beamsplit": "beamsplitter_check",
               "transmission": "transmission"}
EXPERIMENT_NAMES = {**SUBCOMMANDS, **{v: v for v in SUBCOMMANDS.values()}}

UNITS = {
    "energy": {"eV": 1.0, "meV": 1e-3},
    "length": {"nm": 1e-9, "m": 1.0},
    "alpha": {"eV·m": 1.0, "eV*m": 1.0, "eV m": 1.0, "eVm": 1.0, "eV.m": 1.0},
}
ALL_UNITS = {u: dim for dim, table in UNITS.items() for u in table}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


@dataclass(frozen=True)
class Key:
    kind: str  # energy | length | alpha | int | float | str | bool | choice
    default: object = None
    choices: tuple = ()
    help: str = ""


SCHEMA = {
    "experiment": Key("choice", None, tuple(EXPERIMENT_NAMES), "experiment to run"),
    "case": Key("choice", "f0", ("f0", "f1", "f2", "f3"), "Deutsch-Jozsa oracle"),
    "target": Key("choice", "00", ("00", "01", "10", "11"), "Grover marked string"),
    "pseudo_in": Key("int", 0, help="NAND input port (0 or 1)"),
    "spin_in": Key("choice", "up", ("up", "down"), "NAND input spin"),
    "alpha_min": Key("alpha", 0.0, help="init-sweep start"),
    "alpha_max": Key("alpha", None, help="init-sweep end (default: calibrated 2 pi)"),
    "steps": Key("int", 9, help="init-sweep points"),
    "sweep_length": Key("length", 50e-9, help="interferometer Rashba arm length"),
    "threshold": Key("float", ex.DEFAULT_THRESHOLD, help="high/low contrast threshold"),
    "energy": Key("energy", None, help="operating energy (default: subband + 0.05 t)"),
    "eta": Key("energy", 1e-6, help="lead broadening"),
    "e_min": Key("energy", None, help="transmission sweep start"),
    "e_max": Key("energy", None, help="transmission sweep end"),
    "n_energies": Key("int", 21, help="transmission sweep points"),
    "device": Key("choice", "coupler", ("wire", "slab", "coupler"),
                  "transmission reference device"),
    "grid_spacing": Key("length", 1e-9, help="lattice constant"),
    "m_eff": Key("float", 0.05, help="effective mass / m0"),
    "channel_width": Key("length", 10e-9, help="width of each channel"),
    "wall_width": Key("length", 3e-9, help="inter-channel wall thickness"),
    "wall_potential": Key("energy", 100.0, help="wall height above the band edge"),
    "band_offset": Key("energy", 0.0, help="band edge offset"),
    "coupler_barrier": Key("energy", None,
                           help="coupler window above the band edge (default: 50/50 slab)"),
    "coupler_length": Key("length", None, help="coupler length (default: designed)"),
    "coupler_taper": Key("length", 30e-9, help="coupler taper per end"),
    "phase_length": Key("length", 60e-9, help="phase-shifter length"),
    "phase_taper": Key("length", 20e-9, help="phase-shifter taper per end"),
    "rashba_length": Key("length", 25e-9, help="Rashba gate stage length"),
    "buffer": Key("length", 5e-9, help="plain buffer at each contact"),
    "alpha_y_pi": Key("alpha", None, help="override: y rotation by pi"),
    "alpha_y_half_pi": Key("alpha", None, help="override: y rotation by pi/2"),
    "alpha_z_pi": Key("alpha", None, help="override: z rotation by pi"),
    "alpha_2pi": Key("alpha", None, help="override: interferometer 2 pi strength"),
    "auto_calibrate": Key("bool", True, help="calibrate missing alphas with NEGF"),
    "output_dir": Key("str", None, help="output directory"),
}


# -- parsing ------------------------------------------------------------------

def parse_quantity(value, kind: str, key: str = "", where: str = "") -> float:
    """Number with a mandatory unit suffix of dimension ``kind``, in SI-like units.

    Energies come back in eV, lengths in m and alphas in eV m.
    """
    prefix = f"{where}{key}: " if key else where
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise UnitError(f"{prefix}expected a quantity like '1.0 {_example(kind)}'")
    if isinstance(value, (int, float)):
        raise UnitError(f"{prefix}{value!r} has no unit; write e.g. "
                        f"'{value} {_example(kind)}'")
    m = _QUANTITY.match(value)
    if not m:
        raise UnitError(f"{prefix}cannot read quantity {value!r}")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        raise UnitError(f"{prefix}{value!r} has no unit; write e.g. "
                        f"'{m.group(1)} {_example(kind)}'")
    if unit == "eV/m" and kind == "alpha":
        raise UnitError(f"{prefix}Rashba strength takes eV·m, not eV/m")
    table = UNITS[kind]
    if unit not in table:
        dim = ALL_UNITS.get(unit)
        what = f"a {dim} unit" if dim else "an unknown unit"
        raise UnitError(f"{prefix}{unit!r} is {what}; expected one of {sorted(table)}")
    return number * table[unit]


def _example(kind: str) -> str:
    return {"energy": "eV", "length": "nm", "alpha": "eV·m"}[kind]


def _key_lines(text: str) -> dict:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value
            if isinstance(k, yaml.ScalarNode)}


def _coerce(key: str, value, where: str):
    spec = SCHEMA[key]
    if value is None:
        return None
    if spec.kind in UNITS:
        return parse_quantity(value, spec.kind, key, where)
    if spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, str) and re.fullmatch(r"[-+]?\d+", value.strip()):
                return int(value)
            raise ParseError(f"{where}{key}: expected an integer, got {value!r}")
        return value
    if spec.kind == "float":
        if isinstance(value, bool):
            raise ParseError(f"{where}{key}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ParseError(f"{where}{key}: expected a number, got {value!r}") from None
    if spec.kind == "bool":
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no"):
            return value.lower() in ("true", "yes")
        raise ParseError(f"{where}{key}: expected true or false, got {value!r}")
    if spec.kind == "choice":
        if not isinstance(value, str):
            hint = " (quote it)" if key == "target" else ""
            raise ParseError(f"{where}{key}: expected one of {list(spec.choices)}, "
                             f"got {value!r}{hint}")
        if value not in spec.choices:
            raise ParseError(f"{where}{key}: expected one of {list(spec.choices)}, "
                             f"got {value!r}")
        return value
    if spec.kind == "str":
        if not isinstance(value, str):
            raise ParseError(f"{where}{key}: expected a string, got {value!r}")
        return value
    raise AssertionError(spec.kind)


def load_raw(path) -> dict:
    """Strictly parse a config file into typed values (units converted)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ParseError(f"{path}{line}: invalid YAML: {getattr(exc, 'problem', exc)}") \
            from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a mapping of keys to values")
    lines = _key_lines(text)
    out = {}
    for key, value in data.items():
        where = f"{path}:{lines[key]}: " if key in lines else f"{path}: "
        if not isinstance(key, str) or key not in SCHEMA:
            raise ParseError(f"{where}unknown key {key!r}")
        out[key] = _coerce(key, value, where)
    return out


def _sites(value_m: float, a: float, key: str, allow_zero: bool = False) -> int:
    n = value_m / a
    k = int(round(n))
    if abs(n - k) > 1e-6 or k < (0 if allow_zero else 1):
        raise UnitError(f"{key}: {value_m * 1e9:.6g} nm is not a positive whole "
                        f"number of {a * 1e9:.6g} nm grid spacings")
    return k


def resolve(raw: dict) -> dict:
    """Materialize defaults for every schema key."""
    params = {k: s.default for k, s in SCHEMA.items()}
    params.update({k: v for k, v in raw.items()})
    if params["experiment"] is None:
        raise ParseError("experiment: missing (set it in the config or use a subcommand)")
    params["experiment"] = EXPERIMENT_NAMES[params["experiment"]]
    return params


def build_config(params: dict) -> ex.ExperimentConfig:
    """ExperimentConfig from resolved parameters (SI units)."""
    a = params["grid_spacing"]
    if not a > 0:
        raise UnitError("grid_spacing: must be positive")
    alphas = []
    L = _sites(params["rashba_length"], a, "rashba_length")
    Ls = _sites(params["sweep_length"], a, "sweep_length")
    for key, axis, angle, length in (("alpha_y_pi", "y", math.pi, L),
                                     ("alpha_y_half_pi", "y", math.pi / 2, L),
                                     ("alpha_z_pi", "z", math.pi, L),
                                     ("alpha_2pi", "y", 2 * math.pi, Ls)):
        if params[key] is not None:
            alphas.append(((axis, angle, length), params[key]))
    cl = params["coupler_length"]
    try:
        hw = ex.Hardware(
            channel_width=_sites(params["channel_width"], a, "channel_width"),
            wall_width=_sites(params["wall_width"], a, "wall_width"),
            wall_potential=params["wall_potential"], a=a, m_eff=params["m_eff"],
            band_offset=params["band_offset"], energy=params["energy"], eta=params["eta"],
            coupler_barrier=params["coupler_barrier"],
            coupler_length=None if cl is None else _sites(cl, a, "coupler_length"),
            coupler_taper=_sites(params["coupler_taper"], a, "coupler_taper", True),
            phase_length=_sites(params["phase_length"], a, "phase_length"),
            phase_taper=_sites(params["phase_taper"], a, "phase_taper", True),
            rashba_length=L, buffer=_sites(params["buffer"], a, "buffer"),
            alphas=tuple(alphas), auto_calibrate=params["auto_calibrate"])
        return ex.ExperimentConfig(
            params["experiment"], case=params["case"], target=params["target"],
            pseudo_in=params["pseudo_in"], spin_in=params["spin_in"],
            alpha_range=(params["alpha_min"], params["alpha_max"]),
            steps=params["steps"], sweep_length=Ls, threshold=params["threshold"],
            hardware=hw, e_min=params["e_min"], e_max=params["e_max"],
            n_energies=params["n_energies"], device=params["device"],
            output_dir=params["output_dir"])
    except ValueError as exc:
        if isinstance(exc, SpinLogicError):
            raise
        raise ParseError(str(exc)) from exc


def load_params(path, overrides: Optional[dict] = None) -> dict:
    """Resolved parameters from a config file merged with typed ``overrides``."""
    raw = load_raw(path) if path is not None else {}
    if overrides:
        exp_file = raw.get("experiment")
        exp_flag = overrides.get("experiment")
        if exp_file and exp_flag and EXPERIMENT_NAMES[exp_file] != EXPERIMENT_NAMES[exp_flag]:
            raise ParseError(f"experiment: config says {exp_file!r} "
                             f"but the command is {exp_flag!r}")
        raw.update(overrides)
    params = resolve(raw)
    if params["pseudo_in"] not in (0, 1):
        raise ParseError("pseudo_in: must be 0 or 1")
    return params


def parse_config(path, overrides: Optional[dict] = None) -> ex.ExperimentConfig:
    """Strict parse of a YAML config; ``overrides`` (already typed) win."""
    return build_config(load_params(path, overrides))


# -- output formatting --------------------------------------------------------

def fmt_float(x: float) -> str:
    """Scientific notation with 12 significant digits."""
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.11e}"


def to_json(obj, indent: int = 2, level: int = 0) -> str:
    """Deterministic JSON with fixed float formatting; key order as given."""
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = fmt_float(obj)
        return s if math.isfinite(float(obj)) else json.dumps(s)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: "
                 f"{to_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{to_json(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


TRANSMISSION_HEADER = ("E_eV", "in_port", "in_spin", "out_port", "out_spin", "T")
SWEEP_HEADER = ("alpha_eVm", "theta_rad", "p0_up", "p0_down", "p1_up", "p1_down",
                "analytic_p0_up", "analytic_p0_down", "analytic_p1_up",
                "analytic_p1_down")


def transmission_rows(records):
    for rec in records:
        for row in rec.rows():
            yield row


def sweep_rows(points):
    for pt in points:
        num = [pt.negf.T[(p, s)] for p in (0, 1) for s in SPINS]
        yield [pt.alpha, pt.theta] + num + list(pt.analytic.as_tuple())


# -- dispatch -----------------------------------------------------------------

@dataclass
class RunManifest:
    config_path: Optional[str]
    parameters: dict
    version: str
    outputs: list = field(default_factory=list)
    passed: bool = False

    def as_dict(self) -> dict:
        return {"config_path": self.config_path, "version": self.version,
                "parameters": self.parameters, "outputs": self.outputs,
                "pass": self.passed}


def _hardware_snapshot(cfg: ex.ExperimentConfig) -> dict:
    """Hardware parameters with designed and calibrated values filled in."""
    hw = cfg.hardware
    snap = {f.name: getattr(hw, f.name) for f in fields(hw) if f.name != "alphas"}
    snap["energy"] = hw.E
    snap["coupler_barrier"] = hw.window_barrier
    snap["alphas"] = [{"axis": ax, "angle_rad": ang, "length_sites": L, "alpha_eVm": v}
                      for (ax, ang, L), v in hw.alphas]
    if cfg.experiment in ("dj", "grover", "nand", "init_sweep", "beamsplitter_check") \
            or cfg.device == "coupler":
        snap["coupler_length"] = ex.design_coupler(hw).length
    return snap


def _calibrated_alphas(cfg: ex.ExperimentConfig) -> list:
    hw = cfg.hardware
    out = []
    for (axis, angle, L) in sorted(k for k in _used_rotations(cfg)):
        out.append({"axis": axis, "angle_rad": angle, "length_sites": L,
                    "alpha_eVm": ex.rashba_alpha(hw, axis, angle, L)})
    return out


def _used_rotations(cfg: ex.ExperimentConfig) -> set:
    hw = cfg.hardware
    keys = set()
    if cfg.experiment in ("dj", "grover", "nand"):
        key = {"dj": cfg.case, "grover": cfg.target, "nand": None}[cfg.experiment]
        for st in ex.compile_circuit(ex.circuit_gates(cfg.experiment, key)):
            if st.kind == "rotate":
                keys.add((st.axis, float(st.angle), hw.rashba_length))
    if cfg.experiment == "init_sweep":
        keys.add(("y", 2 * math.pi, cfg.sweep_length))
    return keys


def run_experiment(cfg: ex.ExperimentConfig):
    """Run ``cfg`` and return (report, {csv name: text})."""
    hw = cfg.hardware
    csvs = {}
    if cfg.experiment == "dj":
        report = ex.run_dj_experiment(cfg.case, cfg)
        rec = ex.run_circuit(ex.compile_circuit(ex.circuit_gates("dj", cfg.case)), hw)
        csvs["transmission.csv"] = csv_text(TRANSMISSION_HEADER, transmission_rows([rec]))
    elif cfg.experiment == "grover":
        report = ex.run_grover_experiment(cfg.target, cfg)
        rec = ex.run_circuit(ex.compile_circuit(ex.circuit_gates("grover", cfg.target)), hw)
        csvs["transmission.csv"] = csv_text(TRANSMISSION_HEADER, transmission_rows([rec]))
    elif cfg.experiment == "nand":
        report = ex.run_nand_experiment(cfg.pseudo_in, cfg.spin_in, cfg)
        rec = ex.run_circuit(ex.compile_circuit(ex.circuit_gates("nand", None)), hw, "up")
        csvs["transmission.csv"] = csv_text(TRANSMISSION_HEADER, transmission_rows([rec]))
    elif cfg.experiment == "init_sweep":
        points, report = ex.run_init_sweep(cfg.alpha_range, cfg.steps, cfg)
        csvs["init_sweep.csv"] = csv_text(SWEEP_HEADER, sweep_rows(points))
    elif cfg.experiment == "beamsplitter_check":
        report = ex.run_beamsplitter_check(cfg)
        recs = ex.transmission_curve(hw, [hw.E], "coupler")
        csvs["transmission.csv"] = csv_text(TRANSMISSION_HEADER, transmission_rows(recs))
    elif cfg.experiment == "transmission":
        recs = ex.transmission_curve(hw, cfg.energy_grid(), cfg.device)
        csvs["transmission.csv"] = csv_text(TRANSMISSION_HEADER, transmission_rows(recs))
        report = ex.VerdictReport("transmission", "computed", "computed",
                                  threshold=cfg.threshold,
                                  details={"device": cfg.device,
                                           "n_energies": len(recs)})
    else:
        raise ValueError(cfg.experiment)
    return report, csvs


def dispatch(cfg: ex.ExperimentConfig, out_dir, config_path: Optional[str] = None,
             params: Optional[dict] = None) -> RunManifest:
    """Run the experiment and atomically publish its outputs in ``out_dir``."""
    report, csvs = run_experiment(cfg)
    params = dict(params or {})
    params["hardware"] = _hardware_snapshot(cfg)
    params["calibrated_alphas"] = _calibrated_alphas(cfg)
    files = {"report.json": to_json(report.as_dict()) + "\n"}
    files.update(csvs)
    outputs = [{"file": name, "sha256": hashlib.sha256(text.encode()).hexdigest()}
               for name, text in sorted(files.items())]
    manifest = RunManifest(config_path, params, __version__, outputs, report.passed)
    files["manifest.json"] = to_json(manifest.as_dict()) + "\n"
    _publish(Path(out_dir), files)
    return manifest


def _publish(out_dir: Path, files: dict):
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".spinlogic-", dir=out_dir.parent))
    try:
        for name, text in files.items():
            with open(tmp / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        out_dir.mkdir(exist_ok=True)
        # manifest last, so its presence marks a complete run
        for name in sorted(files, key=lambda n: n == "manifest.json"):
            os.replace(tmp / name, out_dir / name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


# -- argument handling --------------------------------------------------------

def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlogic", description="Two-channel spin logic device experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMANDS) + ["run"]:
        p = sub.add_parser(name, help=("experiment from the config file" if name == "run"
                                       else f"run the {name} experiment"))
        p.add_argument("--config", "-c", help="YAML config file")
        p.add_argument("--out", "-o", help="output directory (default: ./out-<command>)")
        for key, spec in SCHEMA.items():
            if key in ("experiment", "output_dir"):
                continue
            unit = f" [{_example(spec.kind)}]" if spec.kind in UNITS else ""
            p.add_argument(_flag(key), dest=key, default=None,
                           metavar=spec.kind.upper(), help=f"{spec.help}{unit}")
    return parser


def _flag_overrides(args) -> dict:
    return {key: _coerce(key, getattr(args, key), "flag ")
            for key in SCHEMA if getattr(args, key, None) is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = _flag_overrides(args)
        if args.command != "run":
            overrides["experiment"] = SUBCOMMANDS[args.command]
        params = load_params(args.config, overrides)
        cfg = build_config(params)
    except ParseError as exc:
        print(f"spinlogic: config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.output_dir or f"out-{args.command}"
    snapshot = {k: params[k] for k in SCHEMA if k != "output_dir"}
    try:
        manifest = dispatch(cfg, out_dir, args.config, snapshot)
    except (SpinLogicError, ValueError) as exc:
        print(f"spinlogic: {cfg.experiment} failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    status = "PASS" if manifest.passed else "FAIL"
    print(f"{cfg.experiment}: {status} ({out_dir})")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
