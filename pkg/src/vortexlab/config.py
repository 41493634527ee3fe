"""Plain-text run configuration for the command-line tools.

A configuration is a single text file of ``key = value`` lines.  Blank lines
and lines starting with ``#`` are ignored.  A key may repeat only when the
command's schema declares it repeatable (``vortex`` entries form a list this
way).  Every key is validated against the schema of the command it is used
with: unknown keys are rejected by name, values are type-checked and
range-checked before any computation starts, and omitted keys take the
documented defaults.

:func:`RunConfig.canonical_text` renders the fully resolved configuration
(defaults included) in a normalized form that parses back to an identical
configuration, so the manifest written next to command outputs is itself a
valid, complete input.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config_text", "COMMANDS"]

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")


def parse_config_text(text: str) -> tuple[tuple[str, str], ...]:
    """Split configuration text into ordered raw ``(key, value)`` pairs."""
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: key {key!r} has an empty value")
        pairs.append((key, value))
    return tuple(pairs)


def _parse_float(key: str, text: str) -> float:
    try:
        out = float(text)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {text!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"key {key!r}: value must be finite, got {text!r}")
    return out


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {text!r}") from None


def _split_list(key: str, text: str, n: int | None = None) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise ConfigError(f"key {key!r}: empty entry in list {text!r}")
    if n is not None and len(parts) != n:
        raise ConfigError(f"key {key!r}: expected {n} comma-separated values, got {len(parts)}")
    return parts


@dataclass(frozen=True)
class Field:
    """Schema entry for one configuration key."""

    kind: str  # "float" | "int" | "str" | "floats" | "ints" | "vortex"
    required: bool = False
    repeatable: bool = False
    default: Any = None
    choices: tuple[str, ...] | None = None
    check: Callable[[Any], str | None] | None = None

    def parse(self, key: str, text: str) -> Any:
        if self.kind == "float":
            value: Any = _parse_float(key, text)
        elif self.kind == "int":
            value = _parse_int(key, text)
        elif self.kind == "str":
            value = text
            if self.choices is not None and value not in self.choices:
                raise ConfigError(
                    f"key {key!r}: must be one of {', '.join(self.choices)}, got {value!r}")
        elif self.kind == "floats":
            value = tuple(_parse_float(key, p) for p in _split_list(key, text))
        elif self.kind == "ints":
            value = tuple(_parse_int(key, p) for p in _split_list(key, text))
        elif self.kind == "vortex":
            x, y, kappa = (_parse_float(key, p) for p in _split_list(key, text, 3))
            if kappa == 0.0:
                raise ConfigError(f"key {key!r}: vortex strength must be nonzero")
            value = (x, y, kappa)
        else:  # pragma: no cover - schema author error
            raise ConfigError(f"key {key!r}: unhandled kind {self.kind!r}")
        if self.check is not None:
            message = self.check(value)
            if message is not None:
                raise ConfigError(f"key {key!r}: {message}")
        return value

    def render(self, value: Any) -> list[str]:
        """Canonical value text, one string per line the key occupies."""
        if self.repeatable:
            return [", ".join(repr(float(c)) for c in entry) for entry in value]
        if self.kind == "float":
            return [repr(float(value))]
        if self.kind in ("int", "str"):
            return [str(value)]
        if self.kind == "floats":
            return [", ".join(repr(float(v)) for v in value)]
        if self.kind == "ints":
            return [", ".join(str(int(v)) for v in value)]
        raise ConfigError(f"unhandled kind {self.kind!r}")  # pragma: no cover


@dataclass(frozen=True)
class Schema:
    fields: Mapping[str, Field]
    post: Callable[[dict[str, Any]], None] | None = None


def _positive(label: str = "value") -> Callable[[Any], str | None]:
    return lambda v: None if v > 0 else f"{label} must be positive, got {v!r}"


def _min_value(bound: float) -> Callable[[Any], str | None]:
    return lambda v: None if v >= bound else f"value must be at least {bound!r}, got {v!r}"


def _epsilon_list(minimum: int) -> Callable[[Any], str | None]:
    def check(values: tuple[float, ...]) -> str | None:
        if len(values) < minimum:
            return f"need at least {minimum} values, got {len(values)}"
        if any(not 0.0 < e < 1.0 for e in values):
            return "every core size must lie in (0, 1)"
        if any(b >= a for a, b in zip(values, values[1:])):
            return "core sizes must be strictly descending"
        return None

    return check


def _positive_list(values: tuple[float, ...]) -> str | None:
    if not values:
        return "list must not be empty"
    if any(v <= 0 for v in values):
        return "every value must be positive"
    return None


def _post_simulate(v: dict[str, Any]) -> None:
    if v["dt"] > v["duration"]:
        raise ConfigError("key 'dt': time step exceeds the duration")


def _post_study(v: dict[str, Any]) -> None:
    if v["resolution_factor"] < 8.0:
        raise ConfigError(
            "key 'resolution_factor': the lattice spacing h = epsilon / factor "
            f"must satisfy h <= epsilon / 8; got factor {v['resolution_factor']!r}")
    if not v["energy_radius"] < v["radius"]:
        raise ConfigError("key 'energy_radius': the energy ball must fit inside the disk")
    for x, y, _ in v["vortex"]:
        if math.hypot(x, y) >= v["radius"]:
            raise ConfigError(f"key 'vortex': position ({x!r}, {y!r}) lies outside the disk")


def _post_mode(v: dict[str, Any]) -> None:
    if v["rhs"] != "manufactured" and v["alpha"] <= 3.0:
        raise ConfigError(
            "key 'alpha': power-law forcing needs a decay exponent above 3 "
            "for the solvability integral to converge")


def _post_ansatz(v: dict[str, Any]) -> None:
    if not v["far_radius"] < v["radius"]:
        raise ConfigError(
            "key 'far_radius': probe circle must lie strictly inside the domain "
            f"(far_radius {v['far_radius']!r} >= radius {v['radius']!r})")
    for x, y, _ in v["vortex"]:
        if math.hypot(x, y) >= v["radius"]:
            raise ConfigError(f"key 'vortex': position ({x!r}, {y!r}) lies outside the disk")


def _post_gap(v: dict[str, Any]) -> None:
    if any(ell < 2 for ell in v["harmonics"]):
        raise ConfigError("key 'harmonics': degrees below 2 are not orthogonal to the kernels")
    if any(r <= 10.0 for r in v["cutoffs"]):
        raise ConfigError("key 'cutoffs': every cutoff radius must exceed 10")


_VORTEX = Field("vortex", required=True, repeatable=True)

COMMANDS: Mapping[str, Schema] = MappingProxyType({
    "simulate-vortices": Schema(
        fields={
            "radius": Field("float", default=1.0, check=_positive("disk radius")),
            "vortex": _VORTEX,
            "duration": Field("float", required=True, check=_positive("duration")),
            "dt": Field("float", required=True, check=_positive("time step")),
        },
        post=_post_simulate,
    ),
    "convergence-study": Schema(
        fields={
            "radius": Field("float", default=0.4, check=_positive("disk radius")),
            "vortex": _VORTEX,
            "epsilons": Field("floats", required=True, check=_epsilon_list(3)),
            "resolution_factor": Field("float", default=8.0, check=_positive("factor")),
            "duration": Field("float", default=0.01, check=_positive("duration")),
            "cfl": Field("float", default=0.4,
                         check=lambda v: None if 0.0 < v <= 1.0 else "cfl must lie in (0, 1]"),
            "window": Field("float", default=0.1, check=_positive("tracking window")),
            "energy_radius": Field("float", default=0.2, check=_positive("energy radius")),
        },
        post=_post_study,
    ),
    "mode-solve": Schema(
        fields={
            "k": Field("int", required=True),
            "alpha": Field("float", default=5.0),
            "cutoff": Field("float", default=1000.0, check=_min_value(100.0)),
            "nodes": Field("int", default=2000, check=_min_value(200)),
            "rhs": Field("str", default="manufactured",
                         choices=("manufactured", "powerlaw", "orthogonal-powerlaw")),
        },
        post=_post_mode,
    ),
    "check-ansatz": Schema(
        fields={
            "radius": Field("float", default=1.0, check=_positive("disk radius")),
            "vortex": _VORTEX,
            "epsilons": Field("floats", required=True, check=_epsilon_list(2)),
            "far_radius": Field("float", default=0.3, check=_positive("probe radius")),
            "near_scale": Field("float", default=3.0, check=_min_value(1.0)),
            "probes": Field("int", default=16, check=_min_value(4)),
        },
        post=_post_ansatz,
    ),
    "transport-probe": Schema(
        fields={
            "epsilons": Field("floats", required=True, check=_epsilon_list(2)),
            "horizon": Field("float", default=0.25, check=_positive("horizon")),
            "amplitude": Field("float", default=1.0, check=_positive("amplitude")),
            "alpha": Field("float", default=-3.0,
                           check=lambda v: None if v < 0 else "decay exponent must be negative"),
        },
    ),
    "gap-test": Schema(
        fields={
            "cutoffs": Field("floats", default=(100.0, 1000.0, 10000.0), check=_positive_list),
            "samples": Field("int", default=100, check=_min_value(1)),
            "harmonics": Field("ints", default=(2, 3)),
            "nodes": Field("int", default=2400, check=_min_value(200)),
        },
        post=_post_gap,
    ),
})


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration bound to one command."""

    command: str
    values: Mapping[str, Any] = field(repr=False)

    @classmethod
    def load(cls, command: str, text: str) -> "RunConfig":
        if command not in COMMANDS:
            known = ", ".join(sorted(COMMANDS))
            raise ConfigError(f"unknown command {command!r} (known: {known})")
        schema = COMMANDS[command]
        values: dict[str, Any] = {}
        for key, raw in parse_config_text(text):
            spec = schema.fields.get(key)
            if spec is None:
                raise ConfigError(f"unknown key {key!r} for command {command!r}")
            parsed = spec.parse(key, raw)
            if spec.repeatable:
                values.setdefault(key, []).append(parsed)
            elif key in values:
                raise ConfigError(f"key {key!r} given more than once")
            else:
                values[key] = parsed
        for key, spec in schema.fields.items():
            if key not in values:
                if spec.required:
                    raise ConfigError(f"command {command!r} requires key {key!r}")
                values[key] = spec.default
            elif spec.repeatable:
                values[key] = tuple(values[key])
        if schema.post is not None:
            schema.post(values)
        return cls(command, MappingProxyType(values))

    @classmethod
    def from_file(cls, command: str, path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path!r}: {exc}") from None
        return cls.load(command, text)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def canonical_text(self) -> str:
        """Normalized ``key = value`` rendering, defaults resolved, schema order."""
        schema = COMMANDS[self.command]
        lines: list[str] = []
        for key, spec in schema.fields.items():
            value = self.values[key]
            if value is None:
                continue
            for rendered in spec.render(value):
                lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"
