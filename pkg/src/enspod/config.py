"""Experiment configuration: a flat key = value text format.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
List-valued keys use comma separation.  Floats round-trip exactly (written
with shortest-round-trip repr).
"""

from dataclasses import dataclass, field, asdict


class ConfigError(ValueError):
    """Invalid or unparseable configuration."""


@dataclass
class ExperimentConfig:
    mesh: str = "data:offset_circles_coarse"
    nu: float = 1.0 / 50.0
    dt: float = 0.01
    T: float = 5.0
    eps: tuple = (0.001, -0.001)
    stride: int = 4
    R_list: tuple = (2, 3, 4, 5, 6)
    force: str = "offset_circles"
    out_dir: str = "out"
    threshold_41: float = 1.0
    threshold_42: float = 1.0
    seed: int = 0

    def validate(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.T < self.dt:
            raise ConfigError("T must be at least one time step")
        if self.nu <= 0:
            raise ConfigError("nu must be positive")
        if len(self.eps) < 1:
            raise ConfigError("at least one ensemble member (eps value) required")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if any(r < 1 for r in self.R_list):
            raise ConfigError("R values must be >= 1")
        return self

    @property
    def J(self):
        return len(self.eps)


_FLOAT_KEYS = {"nu", "dt", "T", "threshold_41", "threshold_42"}
_INT_KEYS = {"stride", "seed"}
_FLOAT_LIST_KEYS = {"eps"}
_INT_LIST_KEYS = {"R_list"}


def parse_config(text):
    values = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_LIST_KEYS:
                values[key] = tuple(float(v) for v in val.split(",") if v.strip())
            elif key in _INT_LIST_KEYS:
                values[key] = tuple(int(v) for v in val.split(",") if v.strip())
            elif key in ("mesh", "force", "out_dir"):
                values[key] = val
            else:
                raise ConfigError(f"line {ln}: unknown key '{key}'")
        except ValueError as exc:
            raise ConfigError(f"line {ln}: bad value for '{key}': {exc}") from exc
    return ExperimentConfig(**values).validate()


def serialize_config(cfg):
    out = []
    for key, value in asdict(cfg).items():
        if isinstance(value, tuple):
            out.append(f"{key} = {','.join(repr(v) for v in value)}")
        elif isinstance(value, float):
            out.append(f"{key} = {value!r}")
        else:
            out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
