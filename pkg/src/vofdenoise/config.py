"""Experiment configuration and its flat ``section.key = value`` text format.

Example::

    input = images/texture.pgm
    model = vo_f1l
    noise.looks = 4
    noise.seed = 7
    coeff.eta = 3
    solver.stop_policy = max_psnr

Blank lines and ``#`` comments are ignored. Empty values and ``none`` mean
"unset" for optional keys. Every key can also be passed on the command
line as ``--section.key=value``.
"""

from __future__ import annotations

import typing
from dataclasses import dataclass, field, fields
from pathlib import Path

from .coefficients import CoeffConfig
from .noise import NoiseSpec
from .solver import MODELS, SolverConfig

__all__ = [
    "ConfigError",
    "GaborConfig",
    "EmitConfig",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "serialize_config",
    "apply_overrides",
]


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass(frozen=True)
class GaborConfig:
    orientations: int = 4
    scales: int = 8
    u_low: float = 0.05
    u_high: float = 0.4
    radius: int | None = None


@dataclass(frozen=True)
class EmitConfig:
    denoised: bool = True
    noisy: bool = True
    gabor: bool = False
    csv: bool = True
    summary: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    input: str = ""
    reference: str | None = None
    model: str = "vo_f1l"
    output_dir: str = "out"
    # label used in file names and the summary; defaults to the input stem
    name: str | None = None
    noise: NoiseSpec | None = None
    coeff: CoeffConfig = field(default_factory=CoeffConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    gabor: GaborConfig = field(default_factory=GaborConfig)
    emit: EmitConfig = field(default_factory=EmitConfig)

    @property
    def reference_path(self) -> str | None:
        """Ground truth: explicit reference, else the clean input when noise is synthesized."""
        if self.reference:
            return self.reference
        return self.input if self.noise is not None else None

    @property
    def label(self) -> str:
        return self.name or Path(self.input).stem

    @property
    def looks(self) -> int | None:
        return None if self.noise is None else self.noise.looks

    def validate(self) -> "ExperimentConfig":
        if not self.input:
            raise ConfigError("input: required")
        if self.model not in MODELS:
            raise ConfigError(f"model: must be one of {', '.join(MODELS)}, got {self.model!r}")
        if self.model == "vo_fpl" and self.solver.p is None:
            raise ConfigError("solver.p: required when model = vo_fpl")
        if self.solver.stop_policy == "max_psnr" and self.reference_path is None:
            raise ConfigError(
                "solver.stop_policy: max_psnr needs a reference image "
                "(set reference or noise.looks)"
            )
        return self


_SECTIONS = {
    "noise": NoiseSpec,
    "coeff": CoeffConfig,
    "solver": SolverConfig,
    "gabor": GaborConfig,
    "emit": EmitConfig,
}
_TOP_LEVEL = ("input", "reference", "model", "output_dir", "name")


def _convert(key: str, text: str, hint):
    text = text.strip()
    args = typing.get_args(hint)
    if type(None) in args:
        if text == "" or text.lower() == "none":
            return None
        hint = next(a for a in args if a is not type(None))
    try:
        if hint is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {hint.__name__}") from None


def _hints(cls):
    return typing.get_type_hints(cls)


def _build_section(name: str, cls, values: dict[str, str]):
    hints = _hints(cls)
    kwargs = {}
    for key, text in values.items():
        if key not in hints or not any(f.name == key and f.init for f in fields(cls)):
            raise ConfigError(f"{name}.{key}: unknown key")
        kwargs[key] = _convert(f"{name}.{key}", text, hints[key])
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _split(pairs: dict[str, str]):
    top: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {}
    for key, value in pairs.items():
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in _SECTIONS:
                raise ConfigError(f"{key}: unknown section {section!r}")
            sections.setdefault(section, {})[sub] = value
        elif key in _TOP_LEVEL:
            top[key] = value
        else:
            raise ConfigError(f"{key}: unknown key")
    return top, sections


def _from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    top, sections = _split(pairs)
    hints = _hints(ExperimentConfig)
    kwargs = {k: _convert(k, v, hints[k]) for k, v in top.items()}
    for name, cls in _SECTIONS.items():
        if name not in sections:
            continue
        values = sections[name]
        if name == "noise" and values.get("looks", "").strip().lower() in ("", "none"):
            if any(v.strip().lower() not in ("", "none") for v in values.values()):
                raise ConfigError("noise.looks: required when other noise keys are set")
            kwargs[name] = None
            continue
        kwargs[name] = _build_section(name, cls, values)
    return ExperimentConfig(**kwargs)


def _parse_lines(text: str, source: str = "<config>") -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        pairs[key] = value.strip()
    return pairs


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse config text. Missing keys keep their defaults."""
    return _from_pairs(_parse_lines(text, source))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(cfg: ExperimentConfig) -> dict[str, str]:
    pairs = {key: _format(getattr(cfg, key)) for key in _TOP_LEVEL}
    for name, cls in _SECTIONS.items():
        obj = getattr(cfg, name)
        for f in fields(cls):
            if not f.init:
                continue
            pairs[f"{name}.{f.name}"] = "" if obj is None else _format(getattr(obj, f.name))
    return pairs


def serialize_config(cfg: ExperimentConfig) -> str:
    """Full config text (every key), readable back by :func:`parse_config`."""
    return "".join(f"{key} = {value}\n" for key, value in _flatten(cfg).items())


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    """Return ``cfg`` with dotted-key string overrides applied."""
    if not overrides:
        return cfg
    pairs = _flatten(cfg)
    if cfg.noise is None:
        for f in fields(NoiseSpec):
            pairs.pop(f"noise.{f.name}", None)
    for key in overrides:
        if "." not in key and key not in _TOP_LEVEL:
            raise ConfigError(f"{key}: unknown key")
    pairs.update(overrides)
    return _from_pairs(pairs)
