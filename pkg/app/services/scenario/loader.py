"""
Scenario file parser.

Line-oriented `key = value` text. Top-level keys describe the scheme;
`[paths]`, `[adversary]` and `[balancer]` sections configure the rest.
`#` starts a comment. Every error carries the line it refers to.

    scheme = dual
    n = 5
    m = 4
    protection_paths = 3, 4

    [paths]
    base_delay = 0.01
    path.2.base_delay = 0.05

    [adversary]
    mode = two_link
    paths = 0, 1
"""

from collections.abc import Callable
from pathlib import Path
import re
from typing import Any

from pydantic import ValidationError

from app.core.log import logger

from .errors import ScenarioError
from .models import Scenario, unwrap_validation_error

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_SECTION = re.compile(r"^\[(?P<name>[a-z_]+)\]$")
_PATH_OVERRIDE = re.compile(r"^path\.(?P<index>\d+)\.(?P<key>[a-z_]+)$")


def _to_int(value: str) -> int:
    return int(value, 0)


def _to_float(value: str) -> float:
    return float(value)


def _to_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _to_int_list(value: str) -> tuple[int, ...]:
    items = [item.strip() for item in value.split(",")]
    if not all(items):
        raise ValueError(f"expected a comma-separated integer list, got {value!r}")
    return tuple(_to_int(item) for item in items)


def _to_str(value: str) -> str:
    return value


Converter = Callable[[str], Any]

_TOP_LEVEL: dict[str, Converter] = {
    "name": _to_str,
    "scheme": _to_str,
    "k": _to_int,
    "n": _to_int,
    "m": _to_int,
    "cycles": _to_int,
    "payload_size": _to_int,
    "field": _to_str,
    "protection_paths": _to_int_list,
    "rotate_protection": _to_bool,
    "t": _to_int,
    "d": _to_int_list,
    "p": _to_int_list,
    "round_interval": _to_float,
    "round_deadline": _to_float,
    "sender_id": _to_int,
    "seed": _to_int,
}

_SECTIONS: dict[str, dict[str, Converter]] = {
    "paths": {
        "base_delay": _to_float,
        "rate_capacity": _to_float,
        "delay_fn": _to_str,
        "slope": _to_float,
        "service_rate": _to_float,
        "jitter": _to_float,
    },
    "adversary": {
        "mode": _to_str,
        "path": _to_int,
        "paths": _to_int_list,
        "start_round": _to_int,
        "end_round": _to_int,
        "tamper_bit": _to_int,
        "seed": _to_int,
    },
    "balancer": {
        "enabled": _to_bool,
        "step_size": _to_float,
        "offered_load": _to_float,
        "probe_step": _to_float,
        "new_flows": _to_int,
        "flow_rounds": _to_int,
    },
}


class _Entries:
    """Parsed values keyed by qualified name, with their line numbers."""

    def __init__(self) -> None:
        self.values: dict[str, Any] = {}
        self.lines: dict[str, int] = {}

    def put(self, key: str, value: Any, line: int) -> None:
        if key in self.values:
            raise ScenarioError(
                f"duplicate key {key!r} (first set on line {self.lines[key]})", line
            )
        self.values[key] = value
        self.lines[key] = line

    def section(self, name: str) -> dict[str, Any]:
        prefix = f"{name}."
        return {
            key.removeprefix(prefix): value
            for key, value in self.values.items()
            if key.startswith(prefix)
        }


def _tokenize(text: str) -> _Entries:
    entries = _Entries()
    section: str | None = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _SECTION.match(line)
        if header:
            section = header.group("name")
            if section not in _SECTIONS:
                raise ScenarioError(f"unknown section [{section}]", number)
            entries.lines.setdefault(f"[{section}]", number)
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ScenarioError(f"expected 'key = value', got {line!r}", number)
        if not value:
            raise ScenarioError(f"missing value for {key!r}", number)
        converter = _converter_for(section, key, number)
        try:
            converted = converter(value)
        except ValueError as e:
            raise ScenarioError(f"invalid value for {key!r}: {e}", number) from None
        qualified = key if section is None else f"{section}.{key}"
        entries.put(qualified, converted, number)
    return entries


def _converter_for(section: str | None, key: str, line: int) -> Converter:
    if section is None:
        known = _TOP_LEVEL
    elif section == "paths" and (override := _PATH_OVERRIDE.match(key)):
        known = _SECTIONS["paths"]
        key = override.group("key")
    else:
        known = _SECTIONS[section]
    if key not in known:
        where = "top level" if section is None else f"[{section}]"
        raise ScenarioError(f"unknown key {key!r} at {where}", line)
    return known[key]


def _path_models(entries: _Entries, k: Any) -> list[dict[str, Any]] | None:
    paths = entries.section("paths")
    if not paths:
        return None
    if not isinstance(k, int) or k < 1:
        return None
    shared = {key: value for key, value in paths.items() if "." not in key}
    overrides: dict[int, dict[str, Any]] = {}
    for key, value in paths.items():
        match = _PATH_OVERRIDE.match(key)
        if match:
            index = int(match.group("index"))
            if index >= k:
                raise ScenarioError(
                    f"path index {index} outside 0..{k - 1}",
                    entries.lines[f"paths.{key}"],
                )
            overrides.setdefault(index, {})[match.group("key")] = value
    return [shared | overrides.get(index, {}) for index in range(k)]


def _assemble(entries: _Entries, name: str) -> dict[str, Any]:
    values = entries.values
    if "k" in values and "n" in values:
        raise ScenarioError("set either k or n, not both", entries.lines["n"])
    if "n" in values:
        entries.lines["k"] = entries.lines["n"]

    data: dict[str, Any] = {
        key: value
        for key, value in values.items()
        if "." not in key and key != "n"
    }
    data.setdefault("name", name)
    if "n" in values:
        data["k"] = values["n"]

    path_models = _path_models(entries, data.get("k"))
    if path_models is not None:
        data["path_models"] = path_models

    adversary = entries.section("adversary")
    if "path" in adversary:
        if "paths" in adversary:
            raise ScenarioError(
                "set either path or paths, not both", entries.lines["adversary.path"]
            )
        adversary["paths"] = (adversary.pop("path"),)
        entries.lines["adversary.paths"] = entries.lines["adversary.path"]
    if adversary:
        data["adversary"] = adversary

    balancer = entries.section("balancer")
    if balancer:
        data["balancer"] = balancer
    return data


def _location(entries: _Entries, candidates: list[str]) -> int | None:
    for candidate in candidates:
        if candidate in entries.lines:
            return entries.lines[candidate]
        section = candidate.split(".", 1)[0]
        if f"[{section}]" in entries.lines and "." in candidate:
            return entries.lines[f"[{section}]"]
        if f"[{candidate}]" in entries.lines:
            return entries.lines[f"[{candidate}]"]
    return None


def _candidates(loc: tuple[Any, ...], parameter: str | None) -> list[str]:
    keys: list[str] = []
    if parameter:
        keys.append(parameter)
    if not loc:
        return keys
    head = str(loc[0])
    if head == "path_models":
        if len(loc) >= 3:
            keys += [f"paths.path.{loc[1]}.{loc[2]}", f"paths.{loc[2]}"]
        keys.append("paths")
    elif len(loc) >= 2 and head in ("adversary", "balancer"):
        keys.append(f"{head}.{loc[1]}")
        keys.append(head)
    else:
        keys.append(head)
    return keys


def _translate(error: ValidationError, entries: _Entries) -> ScenarioError:
    detail = error.errors()[0]
    loc = tuple(detail.get("loc", ()))
    cause = unwrap_validation_error(error)
    if isinstance(cause, ValidationError):
        where = ".".join(str(part) for part in loc)
        message = f"{where}: {detail['msg']}" if where else detail["msg"]
        parameter = None
    else:
        message = str(cause)
        parameter = getattr(cause, "parameter", None)
    candidates = _candidates(loc, parameter)
    return ScenarioError(
        message,
        _location(entries, candidates),
        parameter=candidates[0] if candidates else None,
    )


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """
    Parse and validate scenario text.

    Raises:
        ScenarioError: syntax, range or consistency problem, with its line
    """
    entries = _tokenize(text)
    data = _assemble(entries, name)
    try:
        return Scenario(**data)
    except ValidationError as e:
        raise _translate(e, entries) from None


def load_scenario(path: Path) -> Scenario:
    """Read and validate a scenario file; the name defaults to the file stem."""
    scenario = parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)
    logger.debug(
        "Scenario loaded",
        path=str(path),
        scheme=scenario.scheme.value,
        k=scenario.k,
        m=scenario.m,
    )
    return scenario
