"""Tests for configuration lookup and overrides."""

import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import pytest

from sympidx.config import DEFAULT_CONFIG, env_name, get_all_config, get_config, get_float, get_int, set_config
from sympidx.errors import ConfigError


def _clear_overrides():
    for key, _, _ in DEFAULT_CONFIG:
        os.environ.pop(env_name(key), None)


def setup_function():
    """Drop environment overrides before each test."""
    _clear_overrides()


def teardown_function():
    _clear_overrides()


def test_defaults():
    assert get_float('symplectic_tol') == 1e-8
    assert get_float('rank_tol') == 1e-9
    assert get_int('refinement_budget') == 20
    assert get_int('default_samples') == 512
    assert get_config('artifact_dir') == 'artifacts'


def test_environment_wins():
    os.environ['SYMPIDX_CIRCLE_TOL'] = '1e-6'
    assert get_float('circle_tol') == 1e-6


def test_set_config_overrides_for_process():
    set_config('extension_steps', '32')
    assert get_int('extension_steps') == 32


def test_set_config_rejects_unknown_key():
    with pytest.raises(ConfigError):
        set_config('no_such_key', '1')


def test_unknown_key_returns_caller_default():
    assert get_config('no_such_key', 'fallback') == 'fallback'
    assert get_float('no_such_key', 2.5) == 2.5


def test_invalid_number_raises_config_error():
    os.environ['SYMPIDX_RANK_TOL'] = 'tiny'
    with pytest.raises(ConfigError) as exc:
        get_float('rank_tol')
    assert 'SYMPIDX_RANK_TOL' in str(exc.value)
    assert exc.value.exit_code == 2


def test_invalid_integer_raises_config_error():
    os.environ['SYMPIDX_REFINEMENT_BUDGET'] = '2.5'
    with pytest.raises(ConfigError):
        get_int('refinement_budget')


def test_get_all_config_lists_every_key():
    os.environ['SYMPIDX_LOG_LEVEL'] = 'DEBUG'
    entries = {e['key']: e for e in get_all_config()}
    assert set(entries) == {key for key, _, _ in DEFAULT_CONFIG}
    assert entries['log_level']['value'] == 'DEBUG'
    assert entries['log_level']['default'] == 'INFO'
    assert entries['log_level']['env'] == 'SYMPIDX_LOG_LEVEL'
    assert all(e['description'] for e in entries.values())
