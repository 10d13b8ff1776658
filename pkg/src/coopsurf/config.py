"""Scenario configuration: YAML loading, validation, presets."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np
import yaml

from .coupling import CS_GAMMA_KHZ, CS_WAVELENGTH_UM, FROM_BARE, FROM_SHIFTED
from .dielectric import (
    SAPPHIRE,
    ConstantPermittivity,
    LorentzPermittivity,
    Oscillator,
    TabulatedPermittivity,
)
from .errors import ConfigError
from .green_surface import REDUCED_SCALE, SommerfeldConfig

MODES = ("decay", "sweep", "table")
DRIVES = {"-z": (0.0, 0.0, -1.0), "+y": (0.0, 1.0, 0.0)}
NAMED_TABLES = {"sapphire": SAPPHIRE}


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    mode: str = "decay"
    n: List[int] = field(default_factory=lambda: [1])
    kd: List[float] = field(default_factory=lambda: [1.0])
    kh: Optional[List[float]] = field(default_factory=lambda: [1.0])
    kh_sweep: Optional[dict] = None  # {start, stop, num}
    d_hat: dict = field(default_factory=lambda: {"x": 0.0, "y": 0.0, "z": 1.0})
    surface: object = "none"
    wavelength: List[float] = field(default_factory=lambda: [CS_WAVELENGTH_UM])
    physical_gamma_khz: float = CS_GAMMA_KHZ
    delta_eff: float = 10.0
    drive_direction: str = "-z"
    detuning_convention: str = FROM_SHIFTED
    omega0: float = 1e-3
    time: dict = field(default_factory=lambda: {"t_max": 30.0, "points": 2000})
    fit_window: List[float] = field(default_factory=lambda: [0.0, 1.0])
    coupling_scale: float = 1.0
    include_free_space: bool = False
    sommerfeld: dict = field(default_factory=lambda: asdict(SommerfeldConfig()))
    output_dir: Optional[str] = None
    workers: Optional[int] = None

    # derived accessors

    def kh_values(self) -> np.ndarray:
        if self.kh_sweep is not None:
            s = self.kh_sweep
            return np.linspace(float(s["start"]), float(s["stop"]), int(s["num"]))
        return np.asarray(self.kh, dtype=float)

    def d_vector(self) -> tuple:
        return (float(self.d_hat["x"]), float(self.d_hat["y"]), float(self.d_hat["z"]))

    def drive_vector(self) -> tuple:
        return DRIVES[self.drive_direction]

    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, float(self.time["t_max"]), int(self.time["points"]))

    def sommerfeld_config(self) -> SommerfeldConfig:
        return SommerfeldConfig(**self.sommerfeld)

    def surface_model(self, base_dir: str = "."):
        return build_surface(self.surface, base_dir)

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def build_surface(spec, base_dir: str = "."):
    """Permittivity model from its config description, or None for no surface."""
    if spec is None or spec == "none":
        return None
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("surface must be 'none' or a mapping with a 'type' key", field="surface")
    kind = spec["type"]
    try:
        if kind == "constant":
            return ConstantPermittivity(complex(float(spec.get("re", 1.0)), float(spec.get("im", 0.0))))
        if kind == "lorentz":
            oscs = tuple(Oscillator(float(o["strength"]), float(o["resonance"]), float(o.get("damping", 0.0)))
                         for o in spec.get("oscillators", []))
            return LorentzPermittivity(float(spec.get("eps_inf", 1.0)), oscs)
        if kind == "table":
            if "name" in spec and "file" not in spec and "wavelengths" not in spec:
                if spec["name"] not in NAMED_TABLES:
                    raise ConfigError(f"unknown table {spec['name']!r}; known: {sorted(NAMED_TABLES)}",
                                      field="surface.name")
                return NAMED_TABLES[spec["name"]]
            if "file" in spec:
                path = spec["file"]
                if not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                if not os.path.exists(path):
                    raise ConfigError(f"permittivity table file not found: {path}", field="surface.file")
                data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
                lam, re, im = data[:, 0], data[:, 1], data[:, 2]
            else:
                lam = np.asarray(spec["wavelengths"], dtype=float)
                vals = np.asarray(spec["values"], dtype=float)
                re, im = vals[:, 0], vals[:, 1]
            return TabulatedPermittivity(tuple(lam), tuple(re + 1j * im), spec.get("name", "table"))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid {kind} surface: {exc}", field="surface") from exc
    raise ConfigError(f"unknown surface type {kind!r}", field="surface.type")


def _as_list(v, cast, name):
    if isinstance(v, (list, tuple)):
        items = list(v)
    else:
        items = [v]
    try:
        return [cast(x) for x in items]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}", field=name) from exc


def validate(cfg: ScenarioConfig, base_dir: str = ".") -> ScenarioConfig:
    """Normalise types and check cross-field constraints in place."""
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}", field="mode")
    cfg.n = _as_list(cfg.n, int, "n")
    if any(v < 1 for v in cfg.n):
        raise ConfigError("n must be >= 1", field="n")
    cfg.kd = _as_list(cfg.kd, float, "kd")
    if any(v <= 0 for v in cfg.kd):
        raise ConfigError("kd must be positive", field="kd")
    if (cfg.kh is None) == (cfg.kh_sweep is None):
        raise ConfigError("give exactly one of kh and kh_sweep", field="kh")
    if cfg.kh is not None:
        cfg.kh = _as_list(cfg.kh, float, "kh")
    else:
        s = cfg.kh_sweep
        if not isinstance(s, dict) or set(s) != {"start", "stop", "num"}:
            raise ConfigError("kh_sweep needs exactly start, stop, num", field="kh_sweep")
        cfg.kh_sweep = {"start": float(s["start"]), "stop": float(s["stop"]), "num": int(s["num"])}
        if cfg.kh_sweep["num"] < 1 or cfg.kh_sweep["stop"] < cfg.kh_sweep["start"]:
            raise ConfigError("kh_sweep range is empty", field="kh_sweep")
    if np.any(cfg.kh_values() <= 0):
        raise ConfigError("kh must be positive", field="kh")
    if not isinstance(cfg.d_hat, dict) or set(cfg.d_hat) != {"x", "y", "z"}:
        raise ConfigError("d_hat needs keys x, y, z", field="d_hat")
    cfg.d_hat = {k: float(cfg.d_hat[k]) for k in "xyz"}
    if np.linalg.norm(cfg.d_vector()) == 0:
        raise ConfigError("d_hat must be nonzero", field="d_hat")
    cfg.wavelength = _as_list(cfg.wavelength, float, "wavelength")
    if any(v <= 0 for v in cfg.wavelength):
        raise ConfigError("wavelength must be positive", field="wavelength")
    if cfg.drive_direction not in DRIVES:
        raise ConfigError(f"drive_direction must be one of {sorted(DRIVES)}", field="drive_direction")
    if cfg.detuning_convention not in (FROM_SHIFTED, FROM_BARE):
        raise ConfigError("detuning_convention must be from_shifted or from_bare", field="detuning_convention")
    for name in ("physical_gamma_khz", "delta_eff", "omega0", "coupling_scale"):
        try:
            setattr(cfg, name, float(getattr(cfg, name)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}", field=name) from exc
    if cfg.omega0 <= 0:
        raise ConfigError("omega0 must be positive", field="omega0")
    if cfg.coupling_scale <= 0:
        raise ConfigError("coupling_scale must be positive", field="coupling_scale")
    if not isinstance(cfg.time, dict) or set(cfg.time) != {"t_max", "points"}:
        raise ConfigError("time needs t_max and points", field="time")
    cfg.time = {"t_max": float(cfg.time["t_max"]), "points": int(cfg.time["points"])}
    if cfg.time["t_max"] <= 0 or cfg.time["points"] < 10:
        raise ConfigError("time grid needs t_max > 0 and >= 10 points", field="time")
    cfg.fit_window = _as_list(cfg.fit_window, float, "fit_window")
    if len(cfg.fit_window) != 2 or not 0 <= cfg.fit_window[0] < cfg.fit_window[1]:
        raise ConfigError("fit_window must be [start, stop] with 0 <= start < stop", field="fit_window")
    cfg.include_free_space = bool(cfg.include_free_space)
    try:
        base = asdict(SommerfeldConfig())
        base.update(cfg.sommerfeld or {})
        SommerfeldConfig(**base)
        cfg.sommerfeld = base
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sommerfeld: {exc}", field="sommerfeld") from exc
    if cfg.workers is not None:
        cfg.workers = int(cfg.workers)
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1", field="workers")
    build_surface(cfg.surface, base_dir)
    return cfg


_FIELDS = {f.name for f in fields(ScenarioConfig)}


def from_dict(data: dict, base_dir: str = ".") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}", field=unknown[0])
    data = dict(data)
    if "kh_sweep" in data and "kh" not in data:
        data["kh"] = None
    return validate(ScenarioConfig(**copy.deepcopy(data)), base_dir)


def _key_lines(text: str) -> dict:
    """Line number (1-based) of every top-level and nested key, as dotted paths."""
    out = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}{k.value}"
                out[path] = k.start_mark.line + 1
                walk(v, path + ".")

    if root is not None:
        walk(root, "")
    return out


def loads(text: str, base_dir: str = ".") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {exc}", line=None if mark is None else mark.line + 1) from exc
    try:
        return from_dict(data or {}, base_dir)
    except ConfigError as exc:
        lines = _key_lines(text)
        if exc.field and exc.line is None:
            key = exc.field
            while key and key not in lines:
                key = key.rpartition(".")[0]
            exc.line = lines.get(key)
        raise


def load(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text, os.path.dirname(os.path.abspath(path)))


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# -- presets --------------------------------------------------------------

TABLE1_KH = [0.05, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 5.0]
FIG7_WAVELENGTHS = [8.15, 10.15, 12.15, 14.15, 16.15]


def _reference(**kw) -> ScenarioConfig:
    base = dict(surface={"type": "table", "name": "sapphire"}, delta_eff=10.0,
                coupling_scale=REDUCED_SCALE)
    base.update(kw)
    return from_dict(base)


PRESETS = {
    "table1": lambda: _reference(name="table1", mode="table", n=[1], kh=TABLE1_KH),
    "fig4a": lambda: _reference(name="fig4a", n=[1, 5], kd=[1.0, 3.0, 10.0], kh=[0.25], include_free_space=True),
    "fig4b": lambda: _reference(name="fig4b", n=[1, 5], kd=[1.0, 3.0, 10.0], kh=[0.5], include_free_space=True),
    "fig4c": lambda: _reference(name="fig4c", n=[1, 5], kd=[1.0, 3.0, 10.0], kh=[2.5], include_free_space=True),
    "fig5": lambda: _reference(name="fig5", mode="sweep", n=[5], kd=[1.0],
                           kh_sweep={"start": 0.1, "stop": 6.0, "num": 60}),
    # wavelength scan at the fig4a height
    "fig7": lambda: _reference(name="fig7", n=[5], kd=[1.0], kh=[0.25], wavelength=FIG7_WAVELENGTHS),
}


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]()
