"""Environment registry.

Names: "breakout", "freeway", and "chain:<n>" for an n-state corridor.
"""

from __future__ import annotations

from ..errors import ConfigurationError
from .base import Env, EnvSpec, StepResult
from .breakout import BreakoutEnv
from .chain import ChainEnv, chain_optimal_q
from .freeway import FreewayEnv

__all__ = [
    "Env",
    "EnvSpec",
    "StepResult",
    "BreakoutEnv",
    "FreewayEnv",
    "ChainEnv",
    "chain_optimal_q",
    "make_env",
    "env_names",
]

_GAMES = {"breakout": BreakoutEnv, "freeway": FreewayEnv}


def make_env(name: str, seed) -> Env:
    if name in _GAMES:
        return _GAMES[name](seed)
    if name.startswith("chain:"):
        raw = name.split(":", 1)[1]
        try:
            n = int(raw)
        except ValueError:
            raise ConfigurationError(f"bad chain length {raw!r} in {name!r}") from None
        return ChainEnv(n, seed)
    raise ConfigurationError(
        f"unknown environment {name!r}; expected one of "
        f"{sorted(_GAMES)} or chain:<n>"
    )


def env_names() -> list[str]:
    """Names of the fixed (non-parameterized) environments."""
    return sorted(_GAMES)
