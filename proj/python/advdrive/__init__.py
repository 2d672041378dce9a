"""Budgeted adversarial attacks on a left-turn driving policy.

Thin wrapper over the C++ core. ``run`` drives the same subcommands as the
``advdrive`` executable.
"""

from ._core import (
    OBSERVATION_SIZE,
    ConfigError,
    EnvConfig,
    IntersectionEnv,
    Victim,
    attack_efficiency,
    config_text,
    evaluate,
    load_victim,
    perturb,
    run,
    train_victim,
    untrained_victim,
    victim_from_json,
)

__all__ = [
    "OBSERVATION_SIZE",
    "ConfigError",
    "EnvConfig",
    "IntersectionEnv",
    "Victim",
    "attack_efficiency",
    "config_text",
    "evaluate",
    "load_victim",
    "perturb",
    "run",
    "train_victim",
    "untrained_victim",
    "victim_from_json",
]
