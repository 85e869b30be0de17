"""Experiment configuration: parsing, validation and component builders.

Configs are INI-style text, one ``key = value`` per line, grouped by
``[section]`` headers (dotted section names such as ``[learner.oracle]``
are allowed).  Values are Python literals when they parse as one
(``3``, ``0.5``, ``[[0.1, 0.2]]``, ``true``), plain strings otherwise.

::

    [experiment]
    horizon = 1000
    seed = 42

    [process]
    kind = deterministic_geometric
    ratio = -1/3

    [target]
    kind = interval_union
    intervals = [[0, 1]]

    [space]
    kind = binary

    [learner]
    base = nn
"""
from __future__ import annotations

import ast
import configparser
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..exceptions import ConfigError, InvalidInputError, OnlineReduceError
from ..learners import MemorizationLearner, NearestNeighborLearner, OracleLearner
from ..processes import (DyadicCellLabel, IntervalUnion, Process, QuantizedStep, Threshold,
                         parse_partition)
from ..reductions import BinaryToCountable, CountableToGeneral, GeneralToBinary, OneVsRestOnline
from ..value_space import ValueSpace, parse_space

CHAINS = ("finite", "countable", "general", "to_binary")
BASES = ("nn", "memorization", "oracle")


def derive_seed(master: int, label: str, index: int = 0) -> int:
    """Seed of the substream ``(master, label, index)``; stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(label.encode()), int(index)])
    return int(ss.generate_state(1)[0])


def _parse_value(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


@dataclass
class ExperimentConfig:
    horizon: int
    seed: int = 0
    process: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)
    space: dict = field(default_factory=lambda: {"kind": "binary"})
    learner: dict = field(default_factory=lambda: {"base": "nn"})
    checks: dict = field(default_factory=dict)
    output: Optional[str] = None
    name: str = "experiment"

    def __post_init__(self):
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigError(f"horizon must be an integer >= 1, got {self.horizon!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    @property
    def checkpoints(self) -> list:
        """Geometric schedule 1, 2, 4, ... up to the horizon, plus the horizon."""
        cps, t = [], 1
        while t < self.horizon:
            cps.append(t)
            t *= 2
        cps.append(self.horizon)
        return cps

    @property
    def chain(self) -> list:
        raw = self.learner.get("chain")
        if raw in (None, "", "none"):
            return []
        items = raw.split(",") if isinstance(raw, str) else list(raw)
        out = []
        for item in items:
            item = str(item).strip()
            if item == "full":
                out.extend(["countable", "general"])
            elif item in CHAINS:
                out.append(item)
            else:
                raise ConfigError(f"unknown chain element {item!r}")
        return out


def parse_config(text: str, name: str = "experiment") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections = {}
    for sec in cp.sections():
        head, _, sub = sec.partition(".")
        bucket = sections.setdefault(head, {})
        for key, raw in cp.items(sec):
            bucket[f"{sub}.{key}" if sub else key] = _parse_value(raw)
    unknown = set(sections) - {"experiment", "process", "target", "space", "learner", "checks"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    exp = sections.get("experiment", {})
    if "horizon" not in exp:
        raise ConfigError("[experiment] horizon is required")
    return ExperimentConfig(
        horizon=exp["horizon"], seed=exp.get("seed", 0), output=exp.get("output"),
        name=str(exp.get("name", name)),
        process=sections.get("process", {}), target=sections.get("target", {}),
        space=sections.get("space", {"kind": "binary"}),
        learner=sections.get("learner", {"base": "nn"}), checks=sections.get("checks", {}))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, name=path.stem)


# builders ---------------------------------------------------------------------------

def _wrap(fn, what):
    try:
        return fn()
    except ConfigError:
        raise
    except (OnlineReduceError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad {what} config: {exc}") from exc


def build_process(cfg: ExperimentConfig) -> Process:
    params = dict(cfg.process)
    params.setdefault("kind", "iid_uniform")
    params["seed"] = derive_seed(cfg.seed, "process")
    return _wrap(lambda: Process(**params), "process")


def build_target(cfg: ExperimentConfig):
    p = dict(cfg.target)
    kind = p.pop("kind", None)

    def make():
        if kind == "interval_union":
            return IntervalUnion(tuple(map(tuple, p["intervals"])), p.get("closed"))
        if kind == "threshold":
            return Threshold(float(p["a"]), bool(p.get("closed", False)))
        if kind == "dyadic_cell_label":
            return DyadicCellLabel(float(p.get("a", 0.0)))
        if kind == "quantized_step":
            return QuantizedStep(tuple(p["breakpoints"]), tuple(p["labels"]))
        raise ConfigError(f"unknown target kind {kind!r}")
    return _wrap(make, "target")


def build_space(spec: dict) -> ValueSpace:
    p = dict(spec)
    kind = p.pop("kind", "binary")

    def make():
        if kind == "binary":
            return ValueSpace.binary()
        if kind == "countable":
            return ValueSpace.countable()
        if kind == "finite":
            return ValueSpace.finite(int(p["k"]))
        if kind == "real_interval":
            return ValueSpace.real_interval(p.get("lo", 0.0), p.get("hi", 1.0), p.get("loss", "absolute"))
        raise ConfigError(f"unknown space kind {kind!r}")
    return _wrap(make, "space")


def _base_space(cfg: ExperimentConfig, space: ValueSpace) -> ValueSpace:
    chain = cfg.chain
    if not chain:
        return space
    if chain[0] in ("finite", "countable"):
        return ValueSpace.binary()
    if chain[0] == "general":
        return ValueSpace.countable()
    spec = cfg.learner.get("base_space")
    if spec is None:
        raise ConfigError("chain 'to_binary' needs learner base_space")
    return _wrap(lambda: parse_space(str(spec)), "base_space")


def build_learner(cfg: ExperimentConfig, space: ValueSpace, target):
    lp = cfg.learner
    base_name = lp.get("base", "nn")
    if base_name not in BASES:
        raise ConfigError(f"unknown base learner {base_name!r}")
    chain = cfg.chain
    bspace = _base_space(cfg, space)
    if base_name == "nn":
        est = NearestNeighborLearner(space=bspace)
    elif base_name == "memorization":
        est = MemorizationLearner(space=bspace)
    else:
        steps = lp.get("oracle.error_steps", lp.get("error_steps", ()))
        steps = (steps,) if isinstance(steps, int) else tuple(steps or ())
        est = OracleLearner(target=target, error_schedule=frozenset(steps), space=bspace)
    current = bspace
    seed = derive_seed(cfg.seed, "learner")
    for step in chain:
        if step == "finite":
            if current.kind != "binary" or space.kind != "finite":
                raise ConfigError("chain 'finite' maps a binary learner to a finite space")
            est = OneVsRestOnline(estimator=est, n_classes=space.k)
            current = space
        elif step == "countable":
            if current.kind != "binary":
                raise ConfigError("chain 'countable' needs a binary learner underneath")
            est = BinaryToCountable(estimator=est, mode=lp.get("mode", "exact"),
                                    m_max=lp.get("m_max", 16), n_replicas=lp.get("n_replicas", 1000),
                                    random_state=seed)
            current = ValueSpace.countable()
        elif step == "general":
            if current.kind != "countable":
                raise ConfigError("chain 'general' needs a countable learner underneath")
            est = CountableToGeneral(estimator=est, space=space, n_levels=lp.get("n_levels", 8),
                                     output=lp.get("output", "consistent"))
            current = space
        elif step == "to_binary":
            if space.kind != "binary":
                raise ConfigError("chain 'to_binary' produces a binary learner")
            y0, y1 = lp.get("y0"), lp.get("y1")
            est = GeneralToBinary(estimator=est, space=current, y0=y0, y1=y1)
            _wrap(est._ensure_state, "learner")
            current = space
    if current != space:
        raise ConfigError(f"learner chain produces {current!r}, config space is {space!r}")
    return est


def build_partition(cfg: ExperimentConfig, target):
    spec = cfg.checks.get("partition")
    if spec is None:
        a = target.a if isinstance(target, Threshold) else 0.0
        spec = f"dyadic:{a!r}"
    return _wrap(lambda: parse_partition(str(spec)), "partition")


__all__ = ["ExperimentConfig", "parse_config", "load_config", "derive_seed", "build_process",
           "build_target", "build_space", "build_learner", "build_partition", "InvalidInputError"]
