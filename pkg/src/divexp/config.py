"""Experiment configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from fractions import Fraction

DOMAINS = ("gridworld", "mountaincar", "acrobot")


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 25
    n: int = 40
    r: int = 5
    delta: float = 0.05
    alpha: float = 0.3
    split: Fraction = Fraction(1, 5)  # train share; the test share is 1 - split
    seed: int = 0
    domain: str = "gridworld"
    gamma: float = 0.8
    support_floor: float = 1e-6
    es_population: int = 40
    es_generations: int = 60
    es_step: float = 0.5
    es_temperature: float = 40.0  # preferences are divided by this, so step / temperature sets the trust region
    es_objective: str = "bound"
    mix_base: str = "initial"  # mix candidates with the starting policy or with the incumbent
    fqi_iterations: int = 60
    fqi_ridge: float = 1e-6
    fqi_gamma: float = 0.99
    fqi_order: int = 3

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta: must lie in (0, 0.5), got {self.delta}")
        if self.d < 1:
            raise ValueError(f"d: must be >= 1, got {self.d}")
        if self.r < 1:
            raise ValueError(f"r: must be >= 1, got {self.r}")
        if self.n < self.r:
            raise ValueError(f"n: must be >= r, got n={self.n}, r={self.r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha: must lie in [0, 1], got {self.alpha}")
        if not 0 < self.split < 1:
            raise ValueError(f"split: train share must lie in (0, 1), got {self.split}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma: must lie in (0, 1], got {self.gamma}")
        if self.domain not in DOMAINS:
            raise ValueError(f"domain: must be one of {DOMAINS}, got {self.domain!r}")
        if self.es_objective not in ("mean", "bound"):
            raise ValueError(f"es_objective: must be 'mean' or 'bound', got {self.es_objective!r}")
        if self.mix_base not in ("initial", "incumbent"):
            raise ValueError(f"mix_base: must be 'initial' or 'incumbent', got {self.mix_base!r}")
        if not 0.0 < self.support_floor < 0.2:
            raise ValueError(f"support_floor: out of range, got {self.support_floor}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        """Short hash of every field except the seed."""
        text = "\n".join(line for line in dump_config(self).splitlines() if not line.startswith("seed "))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


GRIDWORLD_DEFAULT = ExperimentConfig()
CONTROL_DEFAULTS = {
    "mountaincar": ExperimentConfig(domain="mountaincar", alpha=0.9, d=10),
    "acrobot": ExperimentConfig(domain="acrobot", alpha=0.9, d=10),
}


def _parse_split(text: str) -> Fraction:
    parts = [Fraction(p.strip()) for p in text.split(",")]
    if len(parts) == 2 and parts[0] + parts[1] != 1:
        raise ValueError("split: train and test shares must sum to 1")
    if len(parts) not in (1, 2):
        raise ValueError("split: expected 'train' or 'train,test'")
    return parts[0]


def parse_config(text: str) -> ExperimentConfig:
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"{key}: unknown config key")
        kind = fields[key].type
        try:
            if key == "split":
                values[key] = _parse_split(value)
            elif kind == "int":
                values[key] = int(value)
            elif kind == "float":
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ValueError(f"{key}: invalid value {value!r} ({exc})") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "split":
            value = f"{value},{1 - value}"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        fh.write(dump_config(cfg))
