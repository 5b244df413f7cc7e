"""Configuration dataclasses and the flat key=value config file.

Precedence when assembling a run configuration: built-in defaults, then
config-file values, then explicit flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import ContractError, UsageError

GATE_LEARNED = "learned"
GATE_FIXED = "fixed"  # beta fixed at 0.5 (gate-removal ablation)
ENCODER_GRGCN = "grgcn"
ENCODER_MLP = "mlp"  # self-transform only (graph-removal ablation)
DENSIFY_OURS = "ours"
DENSIFY_GS = "gs"  # global threshold on raw features
DENSIFY_FN = "fn"  # fixed neighbor count on raw features
DENSIFY_OFF = "off"


@dataclass
class EncoderConfig:
    layers: int = 2
    hidden_dim: int = 500
    input_dim: int = 0  # set from the feature matrix
    activation: str = "tanh"  # tanh | relu
    gate: str = GATE_LEARNED
    mode: str = ENCODER_GRGCN

    def __post_init__(self):
        if self.layers < 1 or self.hidden_dim < 1:
            raise ContractError("encoder needs layers >= 1 and hidden_dim >= 1")
        if self.activation not in ("tanh", "relu"):
            raise ContractError(f"unknown activation {self.activation!r}")


@dataclass
class DecoderConfig:
    kernels: int = 300
    kernel_width: int = 5
    dropout_input: float = 0.2
    dropout_features: float = 0.2
    dropout_proj: float = 0.2
    shuffle: bool = True

    def __post_init__(self):
        if self.kernels < 1 or self.kernel_width < 1:
            raise ContractError("decoder needs kernels >= 1 and kernel_width >= 1")
        for rate in (self.dropout_input, self.dropout_features, self.dropout_proj):
            if not (0.0 <= rate < 1.0):
                raise ContractError("dropout rates must lie in [0, 1)")


@dataclass
class DensifierConfig:
    m: int = 5  # target degree (5 ConceptNet, 3 ATOMIC)
    period: int = 100  # refresh every this many epochs (100 CN, 500 ATOMIC)
    mode: str = DENSIFY_OURS
    gs_threshold: float = 0.95
    fn_neighbors: int = 5

    def __post_init__(self):
        if self.m < 0 or self.period < 1:
            raise ContractError("densifier needs m >= 0 and period >= 1")


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 256
    lr: float = 3e-4
    lr_patience: int = 3  # halve after this many non-improving validations
    lr_floor: float = 1e-6
    sample_size: int = 50_000
    label_smoothing: float = 0.1
    seed: int = 0
    val_interval: int = 25  # epochs between validation checks

    def __post_init__(self):
        if min(self.epochs, 1) < 0 or self.batch_size < 1 or self.sample_size < 1:
            raise ContractError("train config values must be positive")
        if not (0.0 <= self.label_smoothing < 0.5):
            raise ContractError("label smoothing must lie in [0, 0.5)")


@dataclass
class RunConfig:
    """Everything a training or evaluation run needs, merged from defaults,
    config file, and CLI flags."""

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    densifier: DensifierConfig = field(default_factory=DensifierConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    threads: int = 1

    def echo(self) -> str:
        parts = []
        for section_name in ("encoder", "decoder", "densifier", "train"):
            section = getattr(self, section_name)
            for f in fields(section):
                parts.append(f"{section_name}.{f.name}={getattr(section, f.name)}")
        parts.append(f"threads={self.threads}")
        return " ".join(parts)


# keys accepted in config files, mapped to (section, field, parser)
_KEYS = {}
for _section, _cls in (("encoder", EncoderConfig), ("decoder", DecoderConfig),
                       ("densifier", DensifierConfig), ("train", TrainConfig)):
    for _f in fields(_cls):
        _KEYS[_f.name] = (_section, _f.name, _f.type)
# common aliases matching the CLI flag names
_KEYS["m"] = ("densifier", "m", "int")
_KEYS["densify_period"] = ("densifier", "period", "int")
_KEYS["dim"] = ("encoder", "hidden_dim", "int")
_KEYS["layers"] = ("encoder", "layers", "int")
_KEYS["lr"] = ("train", "lr", "float")


def _parse_value(raw: str, typename: str):
    t = str(typename)
    if "int" in t:
        return int(raw)
    if "float" in t:
        return float(raw)
    if "bool" in t:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise UsageError(f"bad boolean value {raw!r}")
    return raw


def load_config_file(path: str) -> dict:
    """Parse a flat key=value file into {(section, field): value}.

    Blank lines and lines starting with ``#`` are ignored; unknown keys are
    a usage error naming the key.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            section, fname, typename = _KEYS[key]
            out[(section, fname)] = _parse_value(raw, typename)
    return out


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    for (section, fname), value in overrides.items():
        setattr(getattr(cfg, section), fname, value)
    return cfg
