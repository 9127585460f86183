"""Run configuration shared by the command line and the experiment scripts."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields

from .diagnostics import MEETING_CONSTANT
from .errors import DomainError
from .modulus import EPS, ITER_CAP
from .uniformizer import L_MIN_FRACTION

CONFIG_VERSION = "1"
THREADS_ENV = "CARPET_MODULUS_THREADS"


@dataclass(frozen=True)
class Config:
    seed: int = 0
    h: float = 1 / 64
    eps: float = EPS
    iter_cap: int = int(ITER_CAP)
    meeting_constant: float = MEETING_CONSTANT
    decay_constant: float = 1.0
    convention: str = "closed"
    l_min_fraction: float = L_MIN_FRACTION
    version: str = CONFIG_VERSION

    def __post_init__(self):
        for name in ("h", "eps", "iter_cap", "meeting_constant", "decay_constant", "l_min_fraction"):
            if not getattr(self, name) > 0:
                raise DomainError(f"config field {name} must be positive")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")
        if self.convention not in ("open", "closed"):
            raise DomainError("convention must be 'open' or 'closed'")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown config fields {sorted(extra)}")
        return cls(**d)

    def replace(self, **kw) -> "Config":
        d = self.to_json()
        d.update({k: v for k, v in kw.items() if v is not None})
        return Config(**d)


def thread_cap() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n
