"""Flat key = value experiment configuration.

Config files are plain text: one `key = value` per line, `#` starts a
comment, blank lines are skipped, keys are case-sensitive.  Unknown keys are
rejected so typos fail loudly.  Recognized keys:

    kind            recurrence | localization | verify | lemma
    weight          weight descriptor, e.g. power(0.3), linear, table(2,2,4)
    epsilon         site-coefficient exponent (default 0.05)
    horizon         steps per trajectory (>= 1)
    trajectories    number of trajectories (>= 1)
    seed            master seed (nonnegative integer)
    targets         comma-separated sites whose hitting times are recorded
    min_returns     returns-to-origin threshold for recurrence stats (default 10)
    checkpoints     geometric range checkpoints per trajectory (default 8)
    out             output CSV path
    record_dir      where binary trajectory records are written / read
    workers         parallel worker processes (default 1)
    drift_samples   verify: states sampled per trajectory for the drift check
    stop_site       verify: stopped-bound target site v (default 20)
    lemma_k_list    comma-separated sizes, e.g. 16,64,256,1024,4096
    lemma_alpha     growth exponent in (0, 1/2)
    lemma_epsilon   tail exponent (> 0)
    lemma_restarts  random restarts per size (default 8)
    lemma_budget    sweep budget per start (default 200)

Which keys are required depends on `kind`; validation reports every missing
or malformed entry at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .martingale import DEFAULT_EPSILON
from .weights import WeightError, make_weight

KINDS = ("recurrence", "localization", "verify", "lemma")

_KNOWN_KEYS = {
    "kind", "weight", "epsilon", "horizon", "trajectories", "seed", "targets",
    "min_returns", "checkpoints", "out", "record_dir", "workers",
    "drift_samples", "stop_site",
    "lemma_k_list", "lemma_alpha", "lemma_epsilon", "lemma_restarts",
    "lemma_budget",
}


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse flat `key = value` lines into a dict."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass
class ExperimentConfig:
    kind: str = ""
    weight: str = "constant"
    epsilon: float = DEFAULT_EPSILON
    horizon: int = 1
    trajectories: int = 1
    seed: int = 0
    targets: tuple[int, ...] = ()
    min_returns: int = 10
    checkpoints: int = 8
    out: str | None = None
    record_dir: str | None = None
    workers: int = 1
    drift_samples: int = 10
    stop_site: int = 20
    lemma_k_list: tuple[int, ...] = ()
    lemma_alpha: float = 0.4
    lemma_epsilon: float = 0.05
    lemma_restarts: int = 8
    lemma_budget: int = 200
    errors: list[str] = field(default_factory=list, repr=False)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(parse_kv_text(text))

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    @classmethod
    def from_dict(cls, kv: dict[str, str]) -> "ExperimentConfig":
        unknown = sorted(set(kv) - _KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls()
        err = cfg.errors.append

        def get_int(key, default, minimum=None):
            if key not in kv:
                return default
            try:
                v = int(kv[key])
            except ValueError:
                err(f"{key}: expected integer, got {kv[key]!r}")
                return default
            if minimum is not None and v < minimum:
                err(f"{key}: must be >= {minimum}, got {v}")
            return v

        def get_float(key, default, positive=False):
            if key not in kv:
                return default
            try:
                v = float(kv[key])
            except ValueError:
                err(f"{key}: expected number, got {kv[key]!r}")
                return default
            if positive and not v > 0.0:
                err(f"{key}: must be positive, got {v}")
            return v

        def get_int_list(key):
            if key not in kv or not kv[key]:
                return ()
            try:
                return tuple(int(p) for p in kv[key].split(","))
            except ValueError:
                err(f"{key}: expected comma-separated integers, got {kv[key]!r}")
                return ()

        cfg.kind = kv.get("kind", "")
        if cfg.kind not in KINDS:
            err(f"kind: must be one of {', '.join(KINDS)}; got {cfg.kind!r}")
        cfg.weight = kv.get("weight", cfg.weight)
        try:
            make_weight(cfg.weight)
        except WeightError as exc:
            err(f"weight: {exc}")
        cfg.epsilon = get_float("epsilon", cfg.epsilon, positive=True)
        cfg.horizon = get_int("horizon", cfg.horizon, minimum=1)
        cfg.trajectories = get_int("trajectories", cfg.trajectories, minimum=1)
        cfg.seed = get_int("seed", cfg.seed, minimum=0)
        cfg.targets = get_int_list("targets")
        cfg.min_returns = get_int("min_returns", cfg.min_returns, minimum=1)
        cfg.checkpoints = get_int("checkpoints", cfg.checkpoints, minimum=2)
        cfg.out = kv.get("out") or None
        cfg.record_dir = kv.get("record_dir") or None
        cfg.workers = get_int("workers", cfg.workers, minimum=1)
        cfg.drift_samples = get_int("drift_samples", cfg.drift_samples, minimum=1)
        cfg.stop_site = get_int("stop_site", cfg.stop_site, minimum=1)
        cfg.lemma_k_list = get_int_list("lemma_k_list")
        cfg.lemma_alpha = get_float("lemma_alpha", cfg.lemma_alpha)
        cfg.lemma_epsilon = get_float("lemma_epsilon", cfg.lemma_epsilon, positive=True)
        cfg.lemma_restarts = get_int("lemma_restarts", cfg.lemma_restarts, minimum=1)
        cfg.lemma_budget = get_int("lemma_budget", cfg.lemma_budget, minimum=1)

        if cfg.kind == "lemma":
            if not cfg.lemma_k_list:
                err("lemma_k_list: required for kind = lemma")
            elif any(k < 0 for k in cfg.lemma_k_list):
                err("lemma_k_list: sizes must be nonnegative")
            if not (0.0 < cfg.lemma_alpha < 0.5):
                err(f"lemma_alpha: must lie in (0, 1/2), got {cfg.lemma_alpha}")
        if cfg.errors:
            raise ConfigError("; ".join(cfg.errors))
        return cfg
