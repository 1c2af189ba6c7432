"""Experiment configuration: INI-style sections per module, validated into an ExperimentSpec."""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .. import noma
from ..channel import ChannelError
from ..netsim import Room, SimConfig, SimError

# scenario label -> (tuning_mode, fov_handover_avoidance)
SCENARIOS = {
    "none": ("none", False),
    "angle": ("angle", False),
    "fov": ("fov", False),
    "fov-ho": ("fov", True),
}
SCENARIO_ALIASES = {"no": "none", "phi": "angle", "fov+ho": "fov-ho"}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class RoomParams:
    width: float = 6.0
    depth: float = 6.0
    height: float = 3.0
    receiver_plane_height: float = 0.85
    led_power: float = 10.0
    led_spacing: float | None = None
    overlap: float = 0.1

    def build(self) -> Room:
        return Room.default(
            spacing=self.led_spacing,
            overlap=self.overlap,
            power=self.led_power,
            width=self.width,
            depth=self.depth,
            height=self.height,
            receiver_plane_height=self.receiver_plane_height,
        )


@dataclass(frozen=True)
class ExperimentSpec:
    base: SimConfig = field(default_factory=SimConfig)
    room: RoomParams = field(default_factory=RoomParams)
    users: tuple[int, ...] = tuple(range(2, 11))
    scenarios: tuple[str, ...] = ("none", "angle", "fov", "fov-ho")
    allocations: tuple[noma.AllocationScheme, ...] = (
        noma.AllocationScheme("static", 0.3),
        noma.AllocationScheme("static", 0.4),
        noma.AllocationScheme("grpa"),
    )
    repetitions: int = 20
    base_seed: int = 0
    ber_symbols: int = 100_000
    out_dir: Path = Path("results")
    jobs: int = 1
    record_wall_time: bool = False


# section -> key -> (type, default as written in a config file)
_SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "sim": {
        "time_step": ("float", "0.1"),
        "total_time": ("float", "100"),
        "walk_epoch": ("float", "1.0"),
        "max_speed": ("float", "2.0"),
        "fixed_semi_angle": ("float", "45"),
        "fixed_fov": ("float", "50"),
        "electrical_sinr": ("bool", "false"),
    },
    "noise": {
        "n0": ("float", "1e-21"),
        "bandwidth": ("float", "1e7"),
        "shot_coefficient": ("float", "0"),
        "thermal_variance": ("optfloat", "none"),
    },
    "room": {
        "width": ("float", "6"),
        "depth": ("float", "6"),
        "height": ("float", "3"),
        "receiver_plane_height": ("float", "0.85"),
        "led_power": ("float", "10"),
        "led_spacing": ("optfloat", "none"),
        "overlap": ("float", "0.1"),
    },
    "ber": {
        "symbols": ("int", "100000"),
    },
    "sweep": {
        "users": ("users", "2..10"),
        "scenarios": ("scenarios", "none,angle,fov,fov-ho"),
        "allocations": ("allocations", "static:0.3,static:0.4,grpa"),
        "repetitions": ("int", "20"),
        "seed": ("int", "0"),
        "out": ("str", "results"),
        "jobs": ("int", "1"),
        "record_wall_time": ("bool", "false"),
    },
}


def parse_users(text: str) -> tuple[int, ...]:
    """``"2..8"`` -> 2..8 inclusive; also accepts ``"2,4,6"`` and mixtures."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, _, hi = part.partition("..")
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(a, b + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("no user counts given")
    if any(n < 1 for n in out):
        raise ValueError("user counts must be >= 1")
    return tuple(sorted(set(out)))


def parse_scenario(text: str) -> str:
    name = text.strip().lower()
    name = SCENARIO_ALIASES.get(name, name)
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {text!r}; expected one of {sorted(SCENARIOS)}")
    return name


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "float":
        return float(raw)
    if kind == "optfloat":
        return None if raw.lower() in ("", "none") else float(raw)
    if kind == "int":
        return int(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "str":
        return raw
    if kind == "users":
        return parse_users(raw)
    if kind == "scenarios":
        return tuple(parse_scenario(s) for s in raw.split(",") if s.strip())
    if kind == "allocations":
        return tuple(noma.AllocationScheme.parse(s) for s in raw.split(",") if s.strip())
    raise AssertionError(kind)


def defaults_text() -> str:
    """All documented defaults, in config-file syntax."""
    buf = io.StringIO()
    for section, keys in _SCHEMA.items():
        buf.write(f"[{section}]\n")
        for key, (_, default) in keys.items():
            buf.write(f"{key} = {default}\n")
        buf.write("\n")
    return buf.getvalue()


def _read_values(text: str) -> dict[str, dict[str, object]]:
    parser = configparser.ConfigParser(interpolation=None, default_section="\x00unused")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {s: {k: d for k, (_, d) in keys.items()} for s, keys in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            raw[section][key] = value
    values: dict[str, dict[str, object]] = {}
    for section, keys in raw.items():
        values[section] = {}
        for key, value in keys.items():
            try:
                values[section][key] = _convert(_SCHEMA[section][key][0], value)
            except (ValueError, noma.NomaError) as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
    return values


def _build(values: dict[str, dict[str, object]]) -> ExperimentSpec:
    sim, nz, rm, sw = values["sim"], values["noise"], values["room"], values["sweep"]

    def guard(path, fn):
        try:
            return fn()
        except (SimError, noma.NomaError, ChannelError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None

    noise = guard("noise", lambda: noma.NoiseModel(
        n0=nz["n0"], bandwidth=nz["bandwidth"],
        shot_coefficient=nz["shot_coefficient"], thermal_variance=nz["thermal_variance"],
    ))
    base = guard("sim", lambda: SimConfig(
        time_step=sim["time_step"], total_time=sim["total_time"], walk_epoch=sim["walk_epoch"],
        max_speed=sim["max_speed"], fixed_semi_angle=sim["fixed_semi_angle"], fixed_fov=sim["fixed_fov"],
        electrical_sinr=sim["electrical_sinr"], noise=noise,
    ))
    room = RoomParams(**rm)
    guard("room", room.build)
    if values["ber"]["symbols"] < 0:
        raise ConfigError("ber.symbols: must be >= 0")
    if sw["repetitions"] < 1:
        raise ConfigError("sweep.repetitions: must be >= 1")
    if sw["jobs"] < 1:
        raise ConfigError("sweep.jobs: must be >= 1")
    if sw["seed"] < 0:
        raise ConfigError("sweep.seed: must be >= 0")
    if not sw["scenarios"]:
        raise ConfigError("sweep.scenarios: at least one scenario required")
    if not sw["allocations"]:
        raise ConfigError("sweep.allocations: at least one allocation required")
    return ExperimentSpec(
        base=base,
        room=room,
        users=sw["users"],
        scenarios=sw["scenarios"],
        allocations=sw["allocations"],
        repetitions=sw["repetitions"],
        base_seed=sw["seed"],
        ber_symbols=values["ber"]["symbols"],
        out_dir=Path(sw["out"]),
        jobs=sw["jobs"],
        record_wall_time=sw["record_wall_time"],
    )


def parse_config(path: str | Path | None = None, text: str | None = None) -> ExperimentSpec:
    """Load and validate a config file (or raw text); absent keys take defaults."""
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text()
    return _build(_read_values(text or ""))


def apply_overrides(
    spec: ExperimentSpec,
    seed: int | None = None,
    users: str | None = None,
    scenarios: list[str] | None = None,
    allocations: list[str] | None = None,
    out: str | None = None,
    jobs: int | None = None,
) -> ExperimentSpec:
    """Apply command-line flags on top of a parsed spec."""
    changes: dict[str, object] = {}
    try:
        if seed is not None:
            if seed < 0:
                raise ValueError("seed must be >= 0")
            changes["base_seed"] = seed
        if users is not None:
            changes["users"] = parse_users(users)
        if scenarios:
            changes["scenarios"] = tuple(dict.fromkeys(parse_scenario(s) for s in scenarios))
        if allocations:
            changes["allocations"] = tuple(dict.fromkeys(noma.AllocationScheme.parse(a) for a in allocations))
        if out is not None:
            changes["out_dir"] = Path(out)
        if jobs is not None:
            if jobs < 1:
                raise ValueError("jobs must be >= 1")
            changes["jobs"] = jobs
    except (ValueError, noma.NomaError) as exc:
        raise ConfigError(f"command line: {exc}") from None
    return replace(spec, **changes)
