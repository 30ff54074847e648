"""Scenario files: TOML with units spelled out in every key name."""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from cavopt.core import Limits
from cavopt.errors import ScenarioError
from cavopt.sim import Arrival, ScenarioConfig

BUILTIN = {"four-way": "four_way.toml"}

_TOP_KEYS = {"control_zone_length_m", "merging_zone_size_m", "standstill_gap_m",
             "time_headway_s", "conflict_separation_s", "limits", "lanes", "vehicles"}
_LIMIT_KEYS = {"vmin_mps": "vmin", "vmax_mps": "vmax", "umin_mps2": "umin", "umax_mps2": "umax"}


def _number(table: dict, key: str, where: str, default: float | None = None) -> float:
    if key not in table:
        if default is None:
            raise ScenarioError(f"{where}{key}: required field missing")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}{key}: expected a number, got {value!r}")
    value = float(value)
    if math.isnan(value):
        raise ScenarioError(f"{where}{key}: NaN is not allowed")
    return value


def _string(table: dict, key: str, where: str) -> str:
    value = table.get(key)
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"{where}{key}: expected a non-empty string, got {value!r}")
    return value


def parse_scenario(data: dict[str, Any]) -> ScenarioConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown field")
    lim_table = data.get("limits")
    if not isinstance(lim_table, dict):
        raise ScenarioError("limits: required table missing")
    bad = set(lim_table) - set(_LIMIT_KEYS)
    if bad:
        raise ScenarioError(f"limits.{sorted(bad)[0]}: unknown field")
    defaults = {"vmin_mps": 0.0, "vmax_mps": math.inf, "umin_mps2": -math.inf,
                "umax_mps2": math.inf}
    kwargs = {attr: _number(lim_table, key, "limits.", defaults[key])
              for key, attr in _LIMIT_KEYS.items()}
    try:
        limits = Limits(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"limits: {exc}") from None

    lanes_raw = data.get("lanes")
    if not isinstance(lanes_raw, list) or not lanes_raw:
        raise ScenarioError("lanes: at least one [[lanes]] entry required")
    lanes = []
    conflicts = set()
    for k, lane in enumerate(lanes_raw):
        name = _string(lane, "name", f"lanes[{k}].")
        lanes.append(name)
        others = lane.get("conflicts", [])
        if not isinstance(others, list) or not all(isinstance(o, str) for o in others):
            raise ScenarioError(f"lanes[{k}].conflicts: expected a list of lane names")
        for other in others:
            if other == name:
                raise ScenarioError(f"lanes[{k}].conflicts: a lane cannot conflict with itself")
            conflicts.add(frozenset((name, other)))
    if len(set(lanes)) != len(lanes):
        raise ScenarioError("lanes: duplicate lane name")
    for pair in conflicts:
        missing = pair - set(lanes)
        if missing:
            raise ScenarioError(f"lanes.conflicts: unknown lane {sorted(missing)[0]!r}")

    arrivals = []
    for k, veh in enumerate(data.get("vehicles", [])):
        where = f"vehicles[{k}]."
        merge = veh.get("merge_time_s")
        arrivals.append(Arrival(
            id=_string(veh, "id", where),
            lane=_string(veh, "lane", where),
            t0=_number(veh, "entry_time_s", where),
            v0=_number(veh, "entry_speed_mps", where),
            merge_time=None if merge is None else _number(veh, "merge_time_s", where),
        ))
    return ScenarioConfig(
        control_zone_length=_number(data, "control_zone_length_m", ""),
        merging_zone_size=_number(data, "merging_zone_size_m", ""),
        lanes=tuple(lanes), conflicts=frozenset(conflicts), limits=limits,
        arrivals=tuple(arrivals),
        standstill_gap=_number(data, "standstill_gap_m", "", 5.0),
        time_headway=_number(data, "time_headway_s", "", 0.5),
        conflict_separation=_number(data, "conflict_separation_s", "", 0.1),
    )


def loads_scenario(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc}") from None
    return parse_scenario(data)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a scenario file, or a bundled one via ``builtin:<name>``."""
    text_path = str(path)
    if text_path.startswith("builtin:"):
        name = text_path.split(":", 1)[1]
        if name not in BUILTIN:
            raise ScenarioError(f"unknown builtin scenario {name!r}; have {sorted(BUILTIN)}")
        text = resources.files("cavopt.data").joinpath(BUILTIN[name]).read_text("utf-8")
        return loads_scenario(text)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    return loads_scenario(text)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def dumps_scenario(cfg: ScenarioConfig) -> str:
    lim = cfg.limits
    lines = [
        f"control_zone_length_m = {_fmt(cfg.control_zone_length)}",
        f"merging_zone_size_m = {_fmt(cfg.merging_zone_size)}",
        f"standstill_gap_m = {_fmt(cfg.standstill_gap)}",
        f"time_headway_s = {_fmt(cfg.time_headway)}",
        f"conflict_separation_s = {_fmt(cfg.conflict_separation)}",
        "",
        "[limits]",
        f"vmin_mps = {_fmt(lim.vmin)}",
        f"vmax_mps = {_fmt(lim.vmax)}",
        f"umin_mps2 = {_fmt(lim.umin)}",
        f"umax_mps2 = {_fmt(lim.umax)}",
    ]
    for lane in cfg.lanes:
        others = sorted(o for o in cfg.lanes if o != lane and cfg.conflicting(lane, o))
        quoted = ", ".join(f'"{o}"' for o in others)
        lines += ["", "[[lanes]]", f'name = "{lane}"', f"conflicts = [{quoted}]"]
    for arr in cfg.arrivals:
        lines += ["", "[[vehicles]]", f'id = "{arr.id}"', f'lane = "{arr.lane}"',
                  f"entry_time_s = {_fmt(arr.t0)}", f"entry_speed_mps = {_fmt(arr.v0)}"]
        if arr.merge_time is not None:
            lines.append(f"merge_time_s = {_fmt(arr.merge_time)}")
    return "\n".join(lines) + "\n"
