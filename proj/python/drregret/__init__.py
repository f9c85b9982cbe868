"""Distributional regret analysis for moment-robust LQR."""

import json as _json

from . import _drregret as _core
from ._drregret import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    Error,
    InvalidInput,
    IoError,
    __version__,
    dare,
    empirical_cvar,
    empirical_var,
    riccati,
    sample,
    w2_empirical,
    w2_gaussian,
    worst_case_cvar_general,
    worst_case_cvar_linear,
    worst_case_cvar_quadratic,
)


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def default_config():
    return _json.loads(_core.default_config())


def normalize_config(config):
    return _json.loads(_core.normalize_config(_text(config)))


def state_covariances(config=None):
    return _core.state_covariances(_text(config))


def pseudo_regret(config=None):
    return _core.pseudo_regret(_text(config))


def bound_sweep(config=None):
    return _core.bound_sweep(_text(config))


def simulate(config=None):
    report, costs_true, costs_worst = _core.simulate(_text(config))
    return _json.loads(report), costs_true, costs_worst


def validate(config=None):
    return _json.loads(_core.validate(_text(config)))
