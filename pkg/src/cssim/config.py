"""Scenario configuration: a versioned JSON key-value document.

Unknown keys are rejected and every value is checked before anything runs.
None of the defaults come from a deployed system; they are sized for runs
that finish in seconds.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

CONFIG_VERSION = 1
PROFILES = ("run", "test")
ATTACK_NAMES = ("evade", "collide")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttackConfig:
    evade: bool = False
    collide: bool = False
    images: int = 100
    edit_fraction: float = 0.05
    max_delta: int = 32
    max_queries: int = 10_000


@dataclass(frozen=True)
class ScenarioConfig:
    version: int = CONFIG_VERSION
    seed: int = 0
    profile: str = "run"
    threshold: int = 10
    synthetic_rate: float = 0.05
    accounts: int = 50
    uploads_per_account: int = 200
    db_size: int = 100
    benign_size: int = 400
    image_side: int = 256
    # account mix: a heavy group uploads db images often, a light group rarely
    heavy_fraction: float = 0.2
    heavy_match_rate: float = 0.3
    light_fraction: float = 0.2
    light_match_rate: float = 0.03
    corpus_dir: Optional[str] = None
    jobs: int = 1
    attacks: AttackConfig = field(default_factory=AttackConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def check(cond, msg):
            if not cond:
                raise ConfigError(msg)

        check(self.version == CONFIG_VERSION, f"unsupported config version {self.version}")
        check(isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer")
        check(self.profile in PROFILES, f"profile must be one of {PROFILES}")
        check(isinstance(self.threshold, int) and self.threshold >= 1, "threshold must be >= 1")
        for name in ("synthetic_rate", "heavy_fraction", "heavy_match_rate", "light_fraction", "light_match_rate"):
            v = getattr(self, name)
            check(isinstance(v, (int, float)) and 0.0 <= v <= 1.0, f"{name} must lie in [0, 1]")
        check(self.heavy_fraction + self.light_fraction <= 1.0, "heavy_fraction + light_fraction exceeds 1")
        for name in ("accounts", "uploads_per_account", "db_size", "benign_size"):
            v = getattr(self, name)
            check(isinstance(v, int) and v >= 0, f"{name} must be a non-negative integer")
        check(isinstance(self.image_side, int) and self.image_side >= 8, "image_side must be >= 8")
        check(isinstance(self.jobs, int) and self.jobs >= 1, "jobs must be >= 1")
        check(self.accounts == 0 or self.uploads_per_account == 0 or self.db_size + self.benign_size > 0,
              "uploads need a non-empty corpus")
        a = self.attacks
        check(isinstance(a.images, int) and a.images >= 0, "attacks.images must be >= 0")
        check(0.0 <= a.edit_fraction <= 1.0, "attacks.edit_fraction must lie in [0, 1]")
        check(isinstance(a.max_delta, int) and 0 <= a.max_delta <= 255, "attacks.max_delta must lie in 0..255")
        check(isinstance(a.max_queries, int) and a.max_queries >= 0, "attacks.max_queries must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> ScenarioConfig:
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "version" not in doc:
            raise ConfigError("config is missing the 'version' field")
        kw = dict(doc)
        if "attacks" in kw:
            att = kw["attacks"]
            if not isinstance(att, dict):
                raise ConfigError("attacks must be an object")
            aknown = {f.name for f in dataclasses.fields(AttackConfig)}
            bad = set(att) - aknown
            if bad:
                raise ConfigError(f"unknown attacks keys: {sorted(bad)}")
            kw["attacks"] = AttackConfig(**att)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)
