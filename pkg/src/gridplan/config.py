"""Run configuration: INI file, ``GRIDPLAN_*`` environment overrides, then command-line flags.

Keys are addressed as ``section.key``. The environment variable for a key
is ``GRIDPLAN_<SECTION>_<KEY>`` in upper case, e.g. ``GRIDPLAN_RISK_LAMBDA``.
Precedence, lowest first: built-in defaults, config file, environment, flags.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .network import JOINT, MODES
from .reformulate import DET, METHODS, MDRO, SP
from .scenario import ABLATIONS

EXPERIMENTS = ("solve", "vss", "evpi", "oos", "risk_sweep", "kappa_sweep", "gen_data", "export_lp")
NO_ABLATION = "none"
ENV_PREFIX = "GRIDPLAN_"

DEFAULTS: dict[str, dict[str, str]] = {
    "paths": {"network": "", "scenarios": "", "output": "gridplan_run"},
    "run": {"method": SP, "experiment": "solve", "mode": JOINT, "ablation": NO_ABLATION,
            "reduction_goal": "", "jobs": "1"},
    "risk": {"lambda": "1.0", "alpha": "0.95"},
    "mdro": {"kappa": "1.0", "normalize_distances": "false", "separate_duals": "false",
             "kappas": "1, 10, 100"},
    "wdro": {"norm_order": "1.0", "k_nominal": "", "radius": "", "seed": "0"},
    "scm": {"enabled": "false", "eps1": "0.01", "eps2": "0.3"},
    "solver": {"backend": "highs", "time_limit_s": "", "mip_gap": "1e-4"},
    "oos": {"partitions": "20", "seed": "0", "in_fraction": "0.5"},
    "sweep": {"grid": "1:0.7, 0.5:0.7, 0:0.7"},
    "data": {"seed": "0", "n_scenarios": "5", "n_rep_days": "5", "hours_per_day": "24",
             "days_per_rep": "73"},
}


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _opt_float(s: str) -> float | None:
    return None if s.strip() == "" else float(s)


def _opt_int(s: str) -> int | None:
    return None if s.strip() == "" else int(s)


def parse_grid(text: str) -> list[tuple[float, float]]:
    """``"1:0.7, 0.5:0.7"`` -> ``[(1.0, 0.7), (0.5, 0.7)]``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        lam, _, alpha = item.partition(":")
        if not alpha:
            raise ConfigError(f"grid entry {item!r} must be lambda:alpha")
        out.append((float(lam), float(alpha)))
    return out


def parse_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


@dataclass(frozen=True)
class RunConfig:
    raw: dict[str, dict[str, str]]

    def get(self, key: str) -> str:
        section, _, name = key.partition(".")
        return self.raw[section][name]

    # typed views -------------------------------------------------------
    @property
    def method(self) -> str:
        return self.get("run.method")

    @property
    def experiment(self) -> str:
        return self.get("run.experiment")

    @property
    def mode(self) -> str:
        return self.get("run.mode")

    @property
    def ablation(self) -> str:
        return self.get("run.ablation")

    @property
    def reduction_goal(self) -> float | None:
        return _opt_float(self.get("run.reduction_goal"))

    @property
    def jobs(self) -> int:
        return int(self.get("run.jobs"))

    @property
    def lam(self) -> float:
        return float(self.get("risk.lambda"))

    @property
    def alpha(self) -> float:
        return float(self.get("risk.alpha"))

    @property
    def scm_enabled(self) -> bool:
        return _bool(self.get("scm.enabled"))

    def method_kwargs(self) -> dict:
        """Keyword settings for :func:`gridplan.reformulate.build_method`."""
        kw = {}
        if self.method == MDRO or self.experiment == "kappa_sweep":
            kw.update(kappa=float(self.get("mdro.kappa")),
                      normalize_distances=_bool(self.get("mdro.normalize_distances")),
                      separate_duals=_bool(self.get("mdro.separate_duals")))
        if self.method == "wdro":
            kw.update(L=float(self.get("wdro.norm_order")), k_nominal=_opt_int(self.get("wdro.k_nominal")),
                      radius=_opt_float(self.get("wdro.radius")), seed=int(self.get("wdro.seed")))
        return kw

    def to_dict(self) -> dict[str, dict[str, str]]:
        return {s: dict(sorted(v.items())) for s, v in sorted(self.raw.items())}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def validate(self) -> None:
        try:
            self._validate()
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def _validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"run.method must be one of {METHODS}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"run.experiment must be one of {EXPERIMENTS}")
        if self.mode not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}")
        if self.ablation not in (NO_ABLATION,) + ABLATIONS:
            raise ConfigError(f"run.ablation must be one of {(NO_ABLATION,) + ABLATIONS}")
        if self.experiment in ("vss", "evpi") and self.method != SP:
            raise ConfigError(f"{self.experiment} requires run.method = {SP}")
        if self.experiment == "kappa_sweep" and self.method != MDRO:
            raise ConfigError(f"kappa_sweep requires run.method = {MDRO}")
        if self.experiment in ("vss", "evpi", "oos", "risk_sweep", "kappa_sweep") and self.method == DET:
            raise ConfigError(f"{self.experiment} needs a scenario-based method")
        if not 0 <= self.lam <= 1 or not 0 <= self.alpha < 1:
            raise ConfigError("risk.lambda must be in [0, 1] and risk.alpha in [0, 1)")
        g = self.reduction_goal
        if g is not None and not 0 <= g <= 1:
            raise ConfigError("run.reduction_goal must be in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("run.jobs must be >= 1")
        for key in ("scm.eps1", "scm.eps2"):
            if not 0 <= float(self.get(key)) <= 1:
                raise ConfigError(f"{key} must be in [0, 1]")
        _bool(self.get("scm.enabled"))
        if self.experiment == "oos":
            if int(self.get("oos.partitions")) < 1:
                raise ConfigError("oos.partitions must be >= 1")
            if not 0 < float(self.get("oos.in_fraction")) < 1:
                raise ConfigError("oos.in_fraction must be in (0, 1)")
        if self.experiment == "risk_sweep" and not parse_grid(self.get("sweep.grid")):
            raise ConfigError("sweep.grid is empty")
        if self.experiment == "kappa_sweep" and not parse_list(self.get("mdro.kappas")):
            raise ConfigError("mdro.kappas is empty")
        if float(self.get("mdro.kappa")) < 0:
            raise ConfigError("mdro.kappa must be >= 0")
        mg = float(self.get("solver.mip_gap"))
        if mg <= 0:
            raise ConfigError("solver.mip_gap must be positive")
        tl = _opt_float(self.get("solver.time_limit_s"))
        if tl is not None and tl <= 0:
            raise ConfigError("solver.time_limit_s must be positive")
        self.method_kwargs()
        for key in ("data.seed", "data.n_scenarios", "data.n_rep_days", "data.hours_per_day",
                    "data.days_per_rep", "oos.seed", "oos.partitions"):
            int(self.get(key))


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None,
                overrides: dict[str, str] | None = None) -> RunConfig:
    """Merge defaults, file, environment, and explicit ``section.key`` overrides."""
    raw = {s: dict(v) for s, v in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in raw:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if key not in raw[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                raw[section][key] = value
    env = os.environ if env is None else env
    for section, keys in raw.items():
        for key in keys:
            name = f"{ENV_PREFIX}{section}_{key}".upper()
            if name in env:
                keys[key] = env[name]
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in raw or key not in raw[section]:
            raise ConfigError(f"unknown key {dotted}")
        raw[section][key] = str(value)
    cfg = RunConfig(raw)
    cfg.validate()
    return cfg
