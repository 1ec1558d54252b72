"""Run configuration: an INI document with a fixed set of sections and keys."""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field

from .basis import N_MAX, Band
from .errors import ConfigError
from .fields import SpaceGrid
from .scattering import Medium

SCHEMA = {
    "band": {"k_lo", "k_hi"},
    "basis": {"n", "n_list", "rule_order"},
    "grid": {"r", "n_per_axis"},
    "medium": {"center", "radius", "contrast", "plateau"},
    "run": {"source", "n_k", "seed", "output_dir", "function"},
}
SOURCES = ("manufactured", "solver")


@dataclass
class RunConfig:
    k_lo: float = 1.0
    k_hi: float = 2.0
    N: int = 4
    n_list: list = field(default_factory=lambda: [2, 4, 6, 8])
    rule_order: int = 24
    R: float = 1.0
    n_per_axis: int = 65
    center: tuple = (0.0, 0.0)
    radius: float = 0.5
    contrast: float = 0.5
    plateau: float = 0.2
    source: str = "manufactured"
    n_k: int = 8
    seed: int = 42
    output_dir: str = "out"
    function: str = "gaussian"

    @property
    def band(self) -> Band:
        return Band(self.k_lo, self.k_hi)

    @property
    def grid(self) -> SpaceGrid:
        return SpaceGrid(self.R, self.n_per_axis)

    @property
    def medium(self) -> Medium:
        return Medium(tuple(self.center), self.radius, self.contrast, self.plateau)

    def validate(self) -> "RunConfig":
        if not self.k_lo < self.k_hi:
            raise ConfigError(f"band degenerate: k_lo={self.k_lo}, k_hi={self.k_hi}")
        if self.k_lo <= 0:
            raise ConfigError("band.k_lo must be positive")
        if not 1 <= self.N <= N_MAX:
            raise ConfigError(f"basis.N must lie in 1..{N_MAX}")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("basis.n_list must be a strictly increasing list")
        if self.n_list[0] < 1 or self.n_list[-1] > N_MAX:
            raise ConfigError(f"basis.n_list entries must lie in 1..{N_MAX}")
        if self.rule_order < 1:
            raise ConfigError("basis.rule_order must be positive")
        if self.R <= 0:
            raise ConfigError("grid.R must be positive")
        if self.n_per_axis < 5:
            raise ConfigError("grid.n_per_axis must be at least 5")
        if len(self.center) != 2:
            raise ConfigError("medium.center needs two coordinates")
        if self.contrast < 0:
            raise ConfigError("medium.contrast must be nonnegative")
        if self.radius <= 0:
            raise ConfigError("medium.radius must be positive")
        if not 0 <= self.plateau < self.radius:
            raise ConfigError("medium.plateau must lie in [0, radius)")
        if max(abs(c) for c in self.center) + self.radius >= self.R:
            raise ConfigError("support touches boundary: the bump must lie strictly inside Omega")
        if self.source not in SOURCES:
            raise ConfigError(f"run.source must be one of {', '.join(SOURCES)}")
        if self.n_k < 3:
            raise ConfigError("run.n_k must be at least 3")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["center"] = list(self.center)
        return d


def _line_of(text: str, section: str, key: str):
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def _section_line(text, section):
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return i
    return "?"


def _floats(s):
    return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]


_CONVERT = {
    ("band", "k_lo"): ("k_lo", float),
    ("band", "k_hi"): ("k_hi", float),
    ("basis", "n"): ("N", int),
    ("basis", "n_list"): ("n_list", lambda s: [int(x) for x in s.split(",") if x.strip()]),
    ("basis", "rule_order"): ("rule_order", int),
    ("grid", "r"): ("R", float),
    ("grid", "n_per_axis"): ("n_per_axis", int),
    ("medium", "center"): ("center", lambda s: tuple(_floats(s))),
    ("medium", "radius"): ("radius", float),
    ("medium", "contrast"): ("contrast", float),
    ("medium", "plateau"): ("plateau", float),
    ("run", "source"): ("source", str.strip),
    ("run", "n_k"): ("n_k", int),
    ("run", "seed"): ("seed", int),
    ("run", "output_dir"): ("output_dir", str.strip),
    ("run", "function"): ("function", str.strip),
}


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse and validate; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    cfg = RunConfig(**(base.as_dict() if base else {}))
    cfg.center = tuple(cfg.center)
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}] (line {_section_line(text, section)})")
        for key, raw in parser.items(section):
            line = _line_of(text, sec, key)
            where = f"{sec}.{key}" + (f" (line {line})" if line else "")
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {where}")
            attr, conv = _CONVERT[(sec, key)]
            try:
                setattr(cfg, attr, conv(raw))
            except ValueError:
                raise ConfigError(f"invalid value {raw!r} for {where}") from None
    return cfg.validate()
