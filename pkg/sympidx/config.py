"""Tunable tolerances and defaults (get/set through the environment)."""

import math
import os

from sympidx.errors import ConfigError

ENV_PREFIX = 'SYMPIDX_'

DEFAULT_CONFIG = [
    ('symplectic_tol', '1e-8', 'Max |MᵀJ₀M − J₀| entry for a certified symplectic matrix'),
    ('rank_tol', '1e-9', 'Smallest singular value still counted as rank'),
    ('circle_tol', '1e-8', 'Distance from |λ| = 1 that still tags an eigenvalue unit-circle'),
    ('cluster_tol', '1e-8', 'Relative distance at which eigenvalues are merged into one cluster'),
    ('krein_cond_tol', '1e-10', 'Smallest relative Krein form eigenvalue before the eigenspace is ill-conditioned'),
    ('angle_tol', '1e-9', 'Principal-angle tolerance for subspace equality and containment'),
    ('degeneracy_tol', '1e-6', 'Distance from 1 at which an endpoint eigenvalue counts as degenerate'),
    ('integrality_tol', '1e-6', 'Largest accepted distance of a Conley–Zehnder value from an integer'),
    ('continuity_gauge', '0.2', 'Largest principal angle (rad) between consecutive loop samples'),
    ('frame_step_gauge', '0.5', 'Largest relative operator-norm step between consecutive frames'),
    ('phase_step_limit', repr(math.pi / 2), 'Largest accepted ρ-phase step between samples (rad)'),
    ('refinement_budget', '20', 'Bisection rounds before unwrapping gives up'),
    ('default_samples', '512', 'Frames per generated path'),
    ('extension_steps', '64', 'Frames in the normal-form extension oracle'),
    ('resymplectify_threshold', '1e-9', 'Generated frames above this residual are corrected and logged'),
    ('load_tol', '1e-8', 'Symplectic tolerance applied when loading documents'),
    ('frame_identity_tol', '1e-12', 'Max deviation of frames[0] from the identity'),
    ('max_denominator', '1000', 'Largest denominator accepted for flat-model velocities'),
    ('artifact_dir', 'artifacts', 'Directory for reproducing documents of failed verify cases'),
    ('log_level', 'INFO', 'Logging level for diagnostics on standard error'),
]

_DEFAULTS = {key: value for key, value, _ in DEFAULT_CONFIG}


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper()


def get_config(key: str, default: str = None) -> str | None:
    """Get a config value by key. The environment wins over the table."""
    override = os.environ.get(env_name(key))
    if override is not None:
        return override
    return _DEFAULTS.get(key, default)


def set_config(key: str, value: str) -> None:
    """Override a value for this process (CLI flags land here)."""
    if key not in _DEFAULTS:
        raise ConfigError(f"Unknown config key '{key}'")
    os.environ[env_name(key)] = str(value)


def get_float(key: str, default: float = None) -> float:
    raw = get_config(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{env_name(key)}={raw!r} is not a number") from None


def get_int(key: str, default: int = None) -> int:
    raw = get_config(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{env_name(key)}={raw!r} is not an integer") from None


def get_all_config() -> list[dict]:
    """All entries with their effective values, for `sympidx config`."""
    return [
        {'key': key, 'value': get_config(key), 'default': value,
         'description': description, 'env': env_name(key)}
        for key, value, description in DEFAULT_CONFIG
    ]
