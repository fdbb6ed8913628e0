"""Experiment configuration and deterministic RNG derivation.

Every random quantity in the package is drawn from a numpy Generator whose
seed is derived from an explicit integer path (master seed, experiment id,
trial index, sub-stream index, ...).  Two runs with the same config produce
bit-identical streams, and the stream of one trial never depends on how many
other trials ran or in which order.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Iterable, Optional

import numpy as np

__all__ = ["rng_from_path", "stable_id", "ExperimentConfig"]


def stable_id(name: str) -> int:
    """Map a string to a stable 60-bit integer (used as a seed-path entry)."""
    h = hashlib.sha256(name.encode("utf8")).digest()
    return int.from_bytes(h[:8], "big") >> 4


def rng_from_path(*path: int) -> np.random.Generator:
    """Counter-style RNG derivation: independent of call order and parallelism.

    ``rng_from_path(master, exp, trial)`` always yields the same stream, so a
    pool of workers evaluating trials in any order reproduces a serial run.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(path))))


@dataclass
class ExperimentConfig:
    """Flat bag of knobs that fully determines one experiment run."""

    experiment: str = ""
    dim: int = 5
    offspring: str = "geometric"  # geometric | poisson | binary | dirac1
    jump: str = "axis"            # uniform on the 2d unit vectors
    seed: int = 12345
    trials: int = 200
    spine_len: int = 256
    budget: int = 200_000
    long: bool = False
    workers: int = 1
    out: str = "out"
    extra: Dict[str, Any] = field(default_factory=dict)

    def seed_path(self, *suffix: int) -> tuple:
        return (self.seed, stable_id(self.experiment), *suffix)

    def rng(self, *suffix: int) -> np.random.Generator:
        return rng_from_path(*self.seed_path(*suffix))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d

    @classmethod
    def from_sources(cls, defaults: Optional[Dict[str, Any]] = None,
                     config_file: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """Build a config from embedded defaults, a key=value file and CLI flags.

        Later sources win.  Unknown keys land in ``extra`` so experiments may
        declare their own knobs without touching this class.
        """
        merged: Dict[str, Any] = dict(defaults or {})
        if config_file:
            merged.update(parse_config_file(config_file))
        if overrides:
            merged.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__ if f != "extra"}
        kwargs = {k: v for k, v in merged.items() if k in known}
        extra = {k: v for k, v in merged.items() if k not in known}
        cfg = cls(**kwargs)
        cfg.extra = extra
        return cfg


def _coerce(value: str) -> Any:
    v = value.strip()
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def parse_config_file(path: str) -> Dict[str, Any]:
    """Parse a flat ``key = value`` text file; '#' starts a comment."""
    out: Dict[str, Any] = {}
    with open(path, "r", encoding="utf8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = _coerce(value)
    return out


def canonical_json(obj: Any) -> str:
    """Deterministic JSON rendering (sorted keys, repr-exact floats)."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def _json_default(o: Any):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, frozenset):
        return sorted(o)
    raise TypeError(f"not serializable: {type(o)}")
