"""Input validation helpers shared by the estimators and the config loader."""

from __future__ import annotations

import math
from typing import Any, Iterable, Mapping

from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "ConfigError",
    "IntegrityError",
    "NotFittedError",
    "check_is_fitted",
    "check_fraction",
    "check_choice",
    "check_weights",
    "check_positive_int",
]


class ConfigError(ValueError):
    """Invalid configuration or estimator parameter."""


class IntegrityError(RuntimeError):
    """Inputs that contradict each other (dangling ids, degenerate groups)."""


def check_fraction(name: str, value: Any, *, low: float = 0.0, high: float = 1.0) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if math.isnan(value) or not low <= value <= high:
        raise ConfigError(f"{name} must lie in [{low}, {high}], got {value}")
    return value


def check_choice(name: str, value: Any, choices: Iterable[str]) -> str:
    choices = tuple(choices)
    if value not in choices:
        raise ConfigError(f"{name} must be one of {choices}, got {value!r}")
    return value


def check_positive_int(name: str, value: Any, *, allow_zero: bool = False) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return value


def check_weights(weights: Mapping[str, float]) -> dict[str, float]:
    out = {}
    for key, w in weights.items():
        w = float(w)
        if not math.isfinite(w) or w < 0:
            raise ConfigError(f"attribute weight for {key!r} must be finite and non-negative, got {w}")
        out[key] = w
    return out
