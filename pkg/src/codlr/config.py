"""Training configuration, presets and the flat ``key = value`` text format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .lookup import ALL_COMPOSITIONS
from .ndmath import ACTIVATIONS
from .scorers import SCORERS


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class TrainConfig:
    scorer: str = "transe"
    mode: str = "codlr"  # "codlr" or "plain"
    dim: int = 100
    dict_size: int = 7
    composition: str = "sum"
    lam: float = 0.001
    batch_size: int = 256
    learning_rate: float = 0.001
    epochs: int = 400
    activation: str = "relu"
    seed: int = 0
    label_smoothing: float = 0.0
    eval_every: int = 0
    per_relation_mlp: bool = False

    @property
    def codlr(self) -> bool:
        return self.mode == "codlr"

    def validate(self) -> "TrainConfig":
        checks = [
            ("scorer", self.scorer in SCORERS, f"must be one of {SCORERS}"),
            ("mode", self.mode in ("codlr", "plain"), "must be 'codlr' or 'plain'"),
            ("dim", self.dim >= 1, "must be positive"),
            ("dict_size", self.dict_size >= (2 if self.codlr else 1), "must be >= 2 in codlr mode"),
            ("composition", self.composition in ALL_COMPOSITIONS, f"must be one of {ALL_COMPOSITIONS}"),
            ("lambda", 0.0 <= self.lam < 1.0, "must lie in [0, 1)"),
            ("batch_size", self.batch_size >= 1, "must be positive"),
            ("learning_rate", self.learning_rate > 0, "must be positive"),
            ("epochs", self.epochs >= 0, "must be non-negative"),
            ("activation", self.activation in ACTIVATIONS, f"must be one of {sorted(ACTIVATIONS)}"),
            ("label_smoothing", 0.0 <= self.label_smoothing < 1.0, "must lie in [0, 1)"),
            ("eval_every", self.eval_every >= 0, "must be non-negative"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(key, f"{msg} (got {getattr(self, _FIELD.get(key, key))!r})")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{_KEY.get(f.name, f.name)} = {v}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


# text key <-> attribute name where they differ
_FIELD = {"lambda": "lam"}
_KEY = {v: k for k, v in _FIELD.items()}


def _coerce(key: str, raw: str, typ: type):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {typ.__name__}") from None


_TYPES = {f.name: f.type for f in fields(TrainConfig)}
_PY_TYPES = {"str": str, "int": int, "float": float, "bool": bool}


def parse_assignments(items, base: TrainConfig | None = None) -> TrainConfig:
    """Apply ``key=value`` strings on top of ``base``; unknown keys are rejected."""
    changes = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item, "expected key = value")
        key, raw = (x.strip() for x in item.split("=", 1))
        name = _FIELD.get(key, key)
        if name not in _TYPES:
            raise ConfigError(key, "unknown key")
        changes[name] = _coerce(key, raw, _PY_TYPES[_TYPES[name]])
    return (base or TrainConfig()).replace(**changes)


def parse_text(text: str, base: TrainConfig | None = None) -> TrainConfig:
    items = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            items.append(line)
    return parse_assignments(items, base)


def load_config(path, base: TrainConfig | None = None) -> TrainConfig:
    with open(path, encoding="utf-8") as f:
        return parse_text(f.read(), base)


# Best hyperparameters reported for the extended models.
PRESETS: dict[str, TrainConfig] = {
    "codlr-transe-fb15k237": TrainConfig("transe", "codlr", 100, 7, "sum", 0.001, 256, 0.001, 400),
    "codlr-distmult-fb15k237": TrainConfig("distmult", "codlr", 200, 5, "corr", 0.1, 1024, 0.00015, 400),
    "codlr-transe-wn18rr": TrainConfig("transe", "codlr", 100, 5, "corr", 0.01, 128, 0.00018, 400),
    "codlr-distmult-wn18rr": TrainConfig("distmult", "codlr", 500, 3, "mult", 0.000005, 16, 0.0002, 120),
}


def preset(name: str) -> TrainConfig:
    try:
        return PRESETS[name].replace()
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
