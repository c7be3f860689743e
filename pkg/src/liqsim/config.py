"""Experiment configuration: defaults, file/flag loading, validation.

Config files are flat ``key = value`` text; every key is optional and
unknown keys are rejected by name. Flags passed by the CLI win over file
values. Emitted run metadata records which values come from the published
experiment settings and which are artifact design decisions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .agents import Strategy
from .game import ClearingRule


class ConfigError(ValueError):
    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"config field '{field}': {message}")


# Provenance of each default, recorded in run metadata.
PAPER_DEFAULT_FIELDS = {
    "n_agents",
    "fraction_large",
    "cap_small",
    "cap_large",
    "episodes",
    "alpha",
    "epsilon",
    "repeat_penalty",
    "greedy_penalty_rate",
}
DESIGN_DEFAULT_FIELDS = {
    "gamma",
    "smoothing_window",
    "carryover",
    "next_state_mode",
    "tie_break",
    "hit_threshold",
    "clearing_rule",
    "strategy",
    "master_seed",
    "n_workers",
    "backend",
    "export_qtables",
    "output_dir",
}


@dataclass
class ExperimentConfig:
    n_agents: int = 1300
    fraction_large: float = 0.33
    cap_small: int = 10
    cap_large: int = 40
    episodes: int = 10000
    clearing_rule: ClearingRule = ClearingRule.MINFILL
    strategy: Strategy = Strategy.DIFF
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.2
    repeat_penalty: float = 0.1
    greedy_penalty_rate: float = 0.2
    smoothing_window: int = 100
    carryover: bool = False
    next_state_mode: str = "residual"
    tie_break: str = "auto"
    hit_threshold: float = 0.7
    master_seed: int = 0
    n_workers: int = 1
    backend: str = "auto"
    export_qtables: bool = False
    output_dir: str = "runs"

    def validate(self) -> "ExperimentConfig":
        if self.n_agents < 1:
            raise ConfigError("n_agents", f"must be >= 1, got {self.n_agents}")
        if not 0.0 <= self.fraction_large <= 1.0:
            raise ConfigError(
                "fraction_large", f"must lie in [0, 1], got {self.fraction_large}"
            )
        if self.cap_small < 1:
            raise ConfigError("cap_small", f"must be >= 1, got {self.cap_small}")
        if self.cap_large < 1:
            raise ConfigError("cap_large", f"must be >= 1, got {self.cap_large}")
        if self.episodes < 0:
            raise ConfigError("episodes", f"must be >= 0, got {self.episodes}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha", f"must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma", f"must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon", f"must lie in [0, 1], got {self.epsilon}")
        if self.repeat_penalty < 0:
            raise ConfigError("repeat_penalty", "must be non-negative")
        if self.greedy_penalty_rate < 0:
            raise ConfigError("greedy_penalty_rate", "must be non-negative")
        if self.smoothing_window < 1:
            raise ConfigError("smoothing_window", "must be >= 1")
        if self.next_state_mode not in ("terminal", "residual", "fresh_draw"):
            raise ConfigError(
                "next_state_mode",
                f"must be terminal, residual or fresh_draw, got {self.next_state_mode!r}",
            )
        if self.tie_break not in ("auto", "uniform", "low", "high"):
            raise ConfigError(
                "tie_break",
                f"must be auto, uniform, low or high, got {self.tie_break!r}",
            )
        if not 0.0 <= self.hit_threshold <= 1.0:
            raise ConfigError("hit_threshold", "must lie in [0, 1]")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be a 64-bit non-negative integer")
        if self.n_workers < 1:
            raise ConfigError("n_workers", "must be >= 1")
        if self.backend not in ("auto", "python", "cython"):
            raise ConfigError("backend", f"unknown backend {self.backend!r}")
        return self

    def run_name(self) -> str:
        return f"{self.clearing_rule.value}_{self.strategy.value}_seed{self.master_seed}"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["clearing_rule"] = self.clearing_rule.value
        d["strategy"] = self.strategy.value
        return d


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(field_name: str, raw: object) -> object:
    """Convert a raw string (or already-typed value) to the field's type."""
    default = getattr(ExperimentConfig(), field_name)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if field_name == "clearing_rule":
            return ClearingRule.parse(text)
        if field_name == "strategy":
            return Strategy.parse(text)
        if isinstance(default, bool):
            low = text.lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(f"expected a boolean, got {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(field_name, str(exc)) from None


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"line {lineno}", f"expected 'key = value', got {stripped!r}"
            )
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, object] | None = None,
    require_seed: bool = False,
) -> ExperimentConfig:
    """Build a validated config from an optional file plus overrides.

    Overrides (CLI flags) win over file values. With require_seed, a
    master_seed must have been given explicitly by one of the two sources.
    """
    raw: dict[str, object] = {}
    if path is not None:
        raw.update(parse_config_text(Path(path).read_text()))
    raw.update(overrides or {})

    seed_given = "master_seed" in raw
    if require_seed and not seed_given:
        raise ConfigError("master_seed", "required when strict reproducibility is set")

    kwargs = {}
    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown config key")
        kwargs[key] = _coerce(key, value)
    return ExperimentConfig(**kwargs).validate()


def default_provenance(config: ExperimentConfig, given_keys: set[str]) -> dict[str, str]:
    """Label each field: explicitly set, published default, or design default."""
    out = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in given_keys:
            out[f.name] = "user"
        elif f.name in PAPER_DEFAULT_FIELDS:
            out[f.name] = "paper-default"
        else:
            out[f.name] = "design-default"
    return out
