"""Experiment configuration: a YAML file of flat dotted keys in SI units (angles in degrees).

Nested mappings are accepted and flattened, so ``grid: {n_symbols: 64}`` and
``grid.n_symbols: 64`` mean the same thing. Required keys are ``seed`` and
``target.r_m``, ``target.theta_deg``, ``target.phi_deg``; everything else has a
desk-scale default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..channel import ClutterModel, Scatterer
from ..constants import SPEED_OF_LIGHT, TRIG_EPS
from ..geometry import ArrayGeometry, SphericalPoint
from ..kinematics import OfdmGrid, TargetState

_REQUIRED = object()

# key -> (expected type(s), default)
SCHEMA: dict[str, tuple[tuple[type, ...], Any]] = {
    "seed": ((int,), _REQUIRED),
    "grid.f0_hz": ((float, int), 28e9),
    "grid.delta_f_hz": ((float, int), 480e3),
    "grid.m_subcarriers": ((int,), 32),
    "grid.n_symbols": ((int,), 32),
    "grid.t_guard_s": ((float, int, type(None)), None),
    "array.spacing_m": ((float, int, type(None)), None),
    "hu.nx": ((int,), 8),
    "hu.nz": ((int,), 8),
    "ru.nx": ((int,), 16),
    "ru.nz": ((int,), 16),
    "tx.power_w": ((float, int), 1.0),
    "tx.rho": ((float, int), 1.0),
    "tx.aim_theta_deg": ((float, int, type(None)), None),
    "tx.aim_phi_deg": ((float, int, type(None)), None),
    "target.r_m": ((float, int), _REQUIRED),
    "target.theta_deg": ((float, int), _REQUIRED),
    "target.phi_deg": ((float, int), _REQUIRED),
    "target.v_r_mps": ((float, int), 0.0),
    "target.omega_theta_degps": ((float, int), 0.0),
    "target.omega_phi_degps": ((float, int), 0.0),
    "target.rcs_m2": ((float, int), 1.0),
    "target.swerling": ((bool,), True),
    "clutter.mode": ((str,), "none"),
    "clutter.beta_c": ((float, int), 0.0),
    "clutter.ctr_db": ((float, int, type(None)), None),
    "clutter.scatterers": ((list,), []),
    "sweep.snr_db": ((list,), [0.0, 10.0, 20.0]),
    "sweep.trials": ((int,), 50),
    "pipeline.suppression": ((bool,), True),
    "pipeline.channel_mode": ((str,), "six_d"),
    "pipeline.epsilon": ((float, int), TRIG_EPS),
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted key at fault."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _flatten(tree: Mapping, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in tree.items():
        path = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def _check_type(path: str, value, types) -> Any:
    # bool is an int subclass; never let it through as a number
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(path, f"expected {'/'.join(t.__name__ for t in types)}, got bool")
    if isinstance(value, str) and float in types:
        # PyYAML reads exponents without a sign ("28e9") as strings
        try:
            return float(value)
        except ValueError:
            pass
    if not isinstance(value, types):
        raise ConfigError(path, f"expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")
    return value


def _scatterers(raw: list) -> tuple[Scatterer, ...]:
    out = []
    for i, item in enumerate(raw):
        path = f"clutter.scatterers[{i}]"
        if not isinstance(item, Mapping):
            raise ConfigError(path, "expected a mapping with r_m, theta_deg, phi_deg")
        unknown = set(item) - {"r_m", "theta_deg", "phi_deg", "rcs_m2"}
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")
        try:
            pos = SphericalPoint(float(item["r_m"]), math.radians(item["theta_deg"]),
                                 math.radians(item["phi_deg"]))
            out.append(Scatterer(pos, float(item.get("rcs_m2", 1.0))))
        except KeyError as exc:
            raise ConfigError(f"{path}.{exc.args[0]}", "required key missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from None
    return tuple(out)


@dataclass(frozen=True)
class SimConfig:
    """Validated configuration. ``values`` keeps the file-unit flat keys with defaults applied."""

    values: Mapping[str, Any]
    grid: OfdmGrid = field(init=False, compare=False, repr=False)
    hu_geom: ArrayGeometry = field(init=False, compare=False, repr=False)
    ru_geom: ArrayGeometry = field(init=False, compare=False, repr=False)
    target: TargetState = field(init=False, compare=False, repr=False)
    clutter: ClutterModel = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        v = dict(self.values)
        unknown = sorted(set(v) - set(SCHEMA))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        for key, (types, default) in SCHEMA.items():
            if key not in v:
                if default is _REQUIRED:
                    raise ConfigError(key, "required key missing")
                v[key] = list(default) if isinstance(default, list) else default
            v[key] = _check_type(key, v[key], types)
        object.__setattr__(self, "values", v)
        self._build(v)

    def _build(self, v):
        set_ = lambda name, obj: object.__setattr__(self, name, obj)  # noqa: E731
        f0 = float(v["grid.f0_hz"])
        try:
            set_("grid", OfdmGrid(v["grid.m_subcarriers"], float(v["grid.delta_f_hz"]), f0,
                                  v["grid.n_symbols"], v["grid.t_guard_s"]))
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None
        spacing = v["array.spacing_m"]
        if spacing is None:
            spacing = SPEED_OF_LIGHT / (2 * f0)
        for prefix in ("hu", "ru"):
            try:
                geom = ArrayGeometry(v[f"{prefix}.nx"], v[f"{prefix}.nz"], float(spacing), f0)
            except ValueError as exc:
                path = "array.spacing_m" if "half-wavelength" in str(exc) else prefix
                raise ConfigError(path, str(exc)) from None
            set_(f"{prefix}_geom", geom)
        try:
            pos = SphericalPoint(float(v["target.r_m"]), math.radians(v["target.theta_deg"]),
                                 math.radians(v["target.phi_deg"]))
            set_("target", TargetState(pos, float(v["target.v_r_mps"]),
                                       math.radians(v["target.omega_theta_degps"]),
                                       math.radians(v["target.omega_phi_degps"]),
                                       float(v["target.rcs_m2"])))
        except ValueError as exc:
            raise ConfigError("target", str(exc)) from None
        mode = v["clutter.mode"]
        if mode not in ("none", "gaussian", "explicit"):
            raise ConfigError("clutter.mode", f"expected none, gaussian or explicit, got {mode!r}")
        try:
            set_("clutter", ClutterModel(mode, _scatterers(v["clutter.scatterers"]),
                                         float(v["clutter.beta_c"])))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("clutter", str(exc)) from None
        if v["pipeline.channel_mode"] not in ("six_d", "four_d", "exact"):
            raise ConfigError("pipeline.channel_mode", "expected six_d, four_d or exact")
        if v["sweep.trials"] < 1:
            raise ConfigError("sweep.trials", "must be >= 1")
        v["sweep.snr_db"] = [_check_type(f"sweep.snr_db[{i}]", snr, (float, int))
                             for i, snr in enumerate(v["sweep.snr_db"])]
        if not 0 < v["tx.rho"] <= 1:
            raise ConfigError("tx.rho", "power fraction must lie in (0, 1]")
        if v["pipeline.epsilon"] <= 0:
            raise ConfigError("pipeline.epsilon", "must be positive")

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def snr_db_list(self) -> list[float]:
        return [float(s) for s in self.values["sweep.snr_db"]]

    @property
    def trials(self) -> int:
        return self.values["sweep.trials"]

    @property
    def suppression(self) -> bool:
        return self.values["pipeline.suppression"]

    @property
    def channel_mode(self) -> str:
        return self.values["pipeline.channel_mode"]

    @property
    def epsilon(self) -> float:
        return float(self.values["pipeline.epsilon"])

    @property
    def swerling(self) -> bool:
        return self.values["target.swerling"]

    @property
    def clutter_ctr_db(self) -> float | None:
        return self.values["clutter.ctr_db"]

    @property
    def tx_power(self) -> float:
        return float(self.values["tx.power_w"])

    @property
    def tx_rho(self) -> float:
        return float(self.values["tx.rho"])

    @property
    def aim_theta(self) -> float:
        aim = self.values["tx.aim_theta_deg"]
        return self.target.position.theta if aim is None else math.radians(aim)

    @property
    def aim_phi(self) -> float:
        aim = self.values["tx.aim_phi_deg"]
        return self.target.position.phi if aim is None else math.radians(aim)

    def with_values(self, **updates) -> "SimConfig":
        """Copy with some flat keys replaced; pass keys with dots replaced by double underscores."""
        v = dict(self.values)
        v.update({k.replace("__", "."): val for k, val in updates.items()})
        return replace(self, values=v)

    def header_lines(self) -> list[str]:
        return [f"{k} = {self.values[k]!r}" for k in SCHEMA]


def config_from_mapping(data: Mapping) -> SimConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "configuration must be a mapping")
    return SimConfig(_flatten(data))


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return config_from_mapping(data or {})


def save_config(config: SimConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(dict(config.values), sort_keys=False))
