"""Experiment configuration files.

A config is a flat ``key = value`` document (INI syntax; the ``[experiment]``
section header is optional). Recognised keys:

==================  =========================================================
``T``               slots per episode (required)
``d_lb``, ``d_ub``  demand bounds in kWh (required)
``delta_max``       per-slot discharge limit in kWh (default: ``d_ub``)
``c``               storage capacity in kWh, used by ``cr`` and ``oracle``
                    (default: first capacity rate times ``T * (d_lb+d_ub)/2``)
``capacity_rates``  comma-separated capacity over mean episode energy
                    (default: ``0.05, 0.1, 0.15, 0.2``)
``policies``        comma-separated policy names (default: all)
``epsilon``         adaptive ratio tolerance (default: ``1e-6``)
``seed``            synthetic trace seed (default: ``0``)
``rhc_window``      look-ahead slots of the RHC baselines (default: ``5``)
``slot_minutes``    slot length (default: ``15``)
``window_start``    start of the on-peak window, ``HH:MM`` (required for
                    trace ingestion and generation)
``adaptive_method`` ``fractional`` (default) or ``bisection``
``lp_method``       ``highs`` (default) or ``simplex``
==================  =========================================================
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from ..core import ProblemInstance, validate_instance
from ..exceptions import InvalidInstance
from ..online import BASELINE_KINDS, DEFAULT_EPSILON

ONLINE_POLICIES = ("offline", "pcr", "adaptive")
ALL_POLICIES = ONLINE_POLICIES + BASELINE_KINDS
SECTION = "experiment"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instance: ProblemInstance
    policies: tuple = ALL_POLICIES
    capacity_rates: tuple = (0.05, 0.1, 0.15, 0.2)
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    rhc_window: int = 5
    slot_minutes: int = 15
    window_start: str | None = None
    adaptive_method: str = "fractional"
    lp_method: str = "highs"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_instance(self.instance)
        if not self.policies:
            raise ConfigError("policies must be nonempty")
        unknown = [p for p in self.policies if p not in ALL_POLICIES]
        if unknown:
            raise ConfigError(f"unknown policies {unknown}; choose from {ALL_POLICIES}")
        if not self.capacity_rates or any(not 0 < r <= 1 for r in self.capacity_rates):
            raise ConfigError("capacity rates must be nonempty and lie in (0, 1]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.rhc_window < 1:
            raise ConfigError("rhc_window must be at least 1")
        if self.adaptive_method not in ("fractional", "bisection"):
            raise ConfigError(f"adaptive_method must be fractional or bisection, got {self.adaptive_method!r}")
        if self.lp_method not in ("highs", "simplex"):
            raise ConfigError(f"lp_method must be highs or simplex, got {self.lp_method!r}")

    def instance_for_rate(self, rate, mean_energy) -> ProblemInstance:
        return self.instance.replace(c=rate * mean_energy)


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _names(text):
    return tuple(x.strip() for x in text.replace(";", ",").split(",") if x.strip())


def parse_config(text: str) -> ExperimentConfig:
    if not text.lstrip().startswith("["):
        text = f"[{SECTION}]\n{text}"
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if SECTION not in cp:
        raise ConfigError(f"missing [{SECTION}] section")
    raw = dict(cp[SECTION])
    try:
        T = int(raw.pop("T"))
        d_lb = float(raw.pop("d_lb"))
        d_ub = float(raw.pop("d_ub"))
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        delta_max = float(raw.pop("delta_max", d_ub))
        rates = _floats(raw.pop("capacity_rates", "0.05, 0.1, 0.15, 0.2"))
        c = raw.pop("c", None)
        c = float(c) if c is not None else (rates[0] if rates else 0.1) * T * 0.5 * (d_lb + d_ub)
        kwargs = dict(
            instance=ProblemInstance(T, c, delta_max, d_lb, d_ub),
            capacity_rates=rates,
            epsilon=float(raw.pop("epsilon", DEFAULT_EPSILON)),
            seed=int(raw.pop("seed", 0)),
            rhc_window=int(raw.pop("rhc_window", 5)),
            slot_minutes=int(raw.pop("slot_minutes", 15)),
            window_start=raw.pop("window_start", None),
            adaptive_method=raw.pop("adaptive_method", "fractional").strip(),
            lp_method=raw.pop("lp_method", "highs").strip(),
        )
        if "policies" in raw:
            kwargs["policies"] = _names(raw.pop("policies"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    try:
        return ExperimentConfig(extra=raw, **kwargs)
    except InvalidInstance as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
