"""Run configuration and its flat ``key=value`` file format."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .suites import DEFAULT_RESOLUTIONS, DEFAULT_TOLERANCES, SUITES

SUITE_CHOICES = SUITES + ("all",)


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, lineno: int | None = None):
        loc = f"{path or '<config>'}:{lineno}: " if lineno is not None else (f"{path}: " if path else "")
        super().__init__(loc + message)
        self.lineno = lineno


@dataclass
class RunConfig:
    suite: str = "all"
    seed: int = 0
    out: Path = Path("reports")
    parallel: bool = False
    resolutions: dict = field(default_factory=dict)  # overrides of DEFAULT_RESOLUTIONS
    tolerances: dict = field(default_factory=dict)   # overrides of DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.suite not in SUITE_CHOICES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITE_CHOICES)}")
        for k in self.resolutions:
            if k not in DEFAULT_RESOLUTIONS:
                raise ConfigError(f"unknown resolution {k!r}")
        for k in self.tolerances:
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {k!r}")

    def effective_resolutions(self) -> dict:
        return {**DEFAULT_RESOLUTIONS, **self.resolutions}

    def effective_tolerances(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.tolerances}

    def to_dict(self) -> dict:
        """Everything that affects the report body."""
        return {"suite": self.suite, "seed": self.seed, "resolutions": self.effective_resolutions(),
                "tolerances": self.effective_tolerances()}


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def parse_assignment(text: str, kind: type) -> tuple[str, float | int]:
    """``NAME=VALUE`` as used by ``--resolution`` and ``--tolerance``."""
    if "=" not in text:
        raise ValueError(f"expected NAME=VALUE, got {text!r}")
    k, v = (s.strip() for s in text.split("=", 1))
    return k, kind(v)


def loads_config(text: str, path: str | None = None) -> dict:
    """Parse a flat ``key=value`` file into keyword arguments for :class:`RunConfig`."""
    out: dict = {"resolutions": {}, "tolerances": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "suite":
                if value not in SUITE_CHOICES:
                    raise ValueError(f"unknown suite {value!r}")
                out["suite"] = value
            elif key == "seed":
                out["seed"] = int(value)
            elif key == "out":
                out["out"] = Path(value)
            elif key == "parallel":
                out["parallel"] = _parse_bool(value)
            elif key.startswith("resolution."):
                name = key.split(".", 1)[1]
                if name not in DEFAULT_RESOLUTIONS:
                    raise ValueError(f"unknown resolution {name!r}")
                out["resolutions"][name] = int(value)
            elif key.startswith("tolerance."):
                name = key.split(".", 1)[1]
                if name not in DEFAULT_TOLERANCES:
                    raise ValueError(f"unknown tolerance {name!r}")
                out["tolerances"][name] = float(value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(str(exc), path, lineno) from exc
    return out


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from exc
    return loads_config(text, str(p))
