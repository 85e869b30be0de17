"""Predict-then-observe experiment loop, per-step bound monitors and sweeps."""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from ..exceptions import OnlineReduceError
from ..learners import NearestNeighborLearner, OracleLearner
from ..processes import Threshold
from ..reductions import BinaryToCountable, CountableToGeneral, OneVsRestOnline, ball_bound_level
from .config import (ExperimentConfig, build_learner, build_partition, build_process, build_space,
                     build_target)

CSV_HEADER = "T,avg_loss,mistakes,new_cells,distinct_labels,replicas,violations"


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


@dataclass(frozen=True)
class CurveRow:
    T: int
    avg_loss: float
    mistakes: int
    new_cells: int
    distinct_labels: int
    replicas: int
    violations: int

    def to_csv(self) -> str:
        return ",".join(_fmt(getattr(self, k)) for k in CSV_HEADER.split(","))


@dataclass
class LossCurve:
    name: str
    rows: list = field(default_factory=list)
    violation_log: list = field(default_factory=list)
    losses: Optional[list] = None

    @property
    def violations(self) -> int:
        return self.rows[-1].violations if self.rows else 0

    @property
    def final(self) -> CurveRow:
        return self.rows[-1]

    def at(self, T: int) -> CurveRow:
        for row in self.rows:
            if row.T == T:
                return row
        raise KeyError(T)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            buf.write(row.to_csv() + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


# per-step monitors ----------------------------------------------------------------
# Each monitor sees the step after prediction and before the label is learned,
# and returns the names of the bounds that failed.

class _LevelMonitor:
    """Quantization bound per level and ball-intersection bound of the composed rule."""

    def __init__(self, learner: CountableToGeneral, space):
        self.learner, self.space = learner, space

    def __call__(self, t, x, y, pred, loss):
        sp, lr = self.space, self.learner
        indices, eps = lr.last_indices_, lr.eps_
        failed = []
        for i, e in zip(indices, eps):
            level_pred = sp.dense_point(i) if i >= 1 else sp.default_label
            wrong = int(i != sp.quantize(e, y))
            if sp.loss(level_pred, y) > e + sp.ell_bar * wrong:
                failed.append("quantization")
                break
        k = min(ball_bound_level(sp, indices, y, eps), t)
        if k >= 1 and loss > 2 * sp.c_ell * eps[k - 1]:
            failed.append("ball")
        return failed


class _ErrorRateMonitor:
    """Countable mistake only when the replicas' subset-averaged error is >= 1/8.

    Also tracks the cumulative form ``mistakes <= 8 * sum(e_t)``.
    """

    def __init__(self, stack: BinaryToCountable, label_of):
        self.stack, self.label_of = stack, label_of
        self.mistakes = 0
        self.err_sum = 0.0

    def __call__(self, t, x, y, pred, loss):
        target = self.label_of(y)
        e = self.stack.replica_error_rate(x, target)
        miss = int(self.stack.predict_one(x) != target)
        self.mistakes += miss
        self.err_sum += e
        failed = []
        if miss > int(e >= 0.125):
            failed.append("error_rate")
        if self.mistakes > 8 * self.err_sum:
            failed.append("error_rate_cumulative")
        return failed


class _UnionMonitor:
    def __init__(self, learner: OneVsRestOnline):
        self.learner = learner

    def __call__(self, t, x, y, pred, loss):
        votes = self.learner.replica_predictions(x)
        replica_miss = sum(int(v != int(y == c)) for c, v in enumerate(votes, start=1))
        return ["union"] if int(pred != y) > replica_miss else []


class _NewCellMonitor:
    def __init__(self, partition):
        self.partition = partition
        self.seen = set()
        self.mistakes = 0

    def __call__(self, t, x, y, pred, loss):
        self.seen.add(self.partition.cell(x))
        self.mistakes += int(pred != y)
        return ["new_cell"] if self.mistakes > len(self.seen) else []


class _ComplementMonitor:
    """A shadow NN learns the complemented labels; from step 2 on it errs exactly when NN does."""

    def __init__(self):
        self.shadow = NearestNeighborLearner()

    def __call__(self, t, x, y, pred, loss):
        shadow_pred = self.shadow.predict_one(x)
        self.shadow.learn_one(x, 1 - y)
        if t >= 2 and int(shadow_pred != 1 - y) != int(pred != y):
            return ["complement"]
        return []


def _quantizer_chain(learner):
    """Yield ``(countable stack, label map)`` pairs with an oracle base."""
    if isinstance(learner, BinaryToCountable):
        yield learner, (lambda y: y)
    elif isinstance(learner, CountableToGeneral):
        for level, e in zip(learner.levels_, learner.eps_):
            if isinstance(level, BinaryToCountable):
                sp = learner.space
                yield level, (lambda y, e=e: sp.quantize(e, y))


def _monitors(cfg: ExperimentConfig, learner, space, target, partition):
    learner._ensure_state()
    mons = []
    if isinstance(learner, CountableToGeneral):
        mons.append(_LevelMonitor(learner, space))
    for stack, label_of in _quantizer_chain(learner):
        stack._ensure_state()
        if isinstance(stack.replicas_[0], OracleLearner) and stack.mode == "exact":
            mons.append(_ErrorRateMonitor(stack, label_of))
    if isinstance(learner, OneVsRestOnline):
        mons.append(_UnionMonitor(learner))
    plain_nn = isinstance(learner, NearestNeighborLearner) and space.kind == "binary"
    if plain_nn and isinstance(target, Threshold):
        mons.append(_NewCellMonitor(partition))
    if plain_nn and cfg.checks.get("complement", False):
        mons.append(_ComplementMonitor())
    return mons


def run_experiment(config: ExperimentConfig, keep_log: bool = False) -> LossCurve:
    """Run the configured learner for ``config.horizon`` steps.

    Rows are recorded at ``config.checkpoints``; ``avg_loss`` is the exactly
    rounded sum of the per-step losses divided by ``T``.  Every applicable
    per-step bound is checked on every step; failures are counted in the
    ``violations`` column and described in ``violation_log``.
    """
    process = build_process(config)
    target = build_target(config)
    space = build_space(config.space)
    learner = build_learner(config, space, target)
    partition = build_partition(config, target)
    monitors = _monitors(config, learner, space, target, partition)
    checkpoints = set(config.checkpoints)

    curve = LossCurve(name=config.name)
    losses = []
    cells, labels = set(), set()
    mistakes = 0
    for t in range(1, config.horizon + 1):
        x = process.next_input(t)
        y = space.check_label(target(x))
        pred = learner.predict_one(x)
        loss = float(space.loss(pred, y))
        for mon in monitors:
            for name in mon(t, x, y, pred, loss):
                curve.violation_log.append((t, name))
        learner.learn_one(x, y)
        losses.append(loss)
        mistakes += int(pred != y)
        cells.add(partition.cell(x))
        labels.add(y)
        if t in checkpoints:
            curve.rows.append(CurveRow(
                T=t, avg_loss=math.fsum(losses) / t, mistakes=mistakes, new_cells=len(cells),
                distinct_labels=len(labels), replicas=learner.n_replicas_,
                violations=len(curve.violation_log)))
    if keep_log:
        curve.losses = losses
    return curve


# sweeps ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepFailure:
    name: str
    error: str

    @property
    def violations(self) -> int:
        return 0


def _run_row(cfg):
    try:
        return run_experiment(cfg)
    except (OnlineReduceError, ValueError, TypeError, KeyError) as exc:
        return SweepFailure(cfg.name, f"{type(exc).__name__}: {exc}")


def sweep(configs, jobs: int = 1) -> list:
    """Run independent configs, ``jobs`` at a time; output order follows input order.

    A config that raises yields a ``SweepFailure`` in its slot instead of
    aborting the sweep.
    """
    configs = list(configs)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        raise ValueError(f"jobs must be an integer >= 1, got {jobs!r}")
    if jobs == 1 or len(configs) <= 1:
        return [_run_row(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(jobs, len(configs))) as pool:
        return list(pool.map(_run_row, configs))


__all__ = ["CSV_HEADER", "CurveRow", "LossCurve", "SweepFailure", "run_experiment", "sweep"]
