"""Input processes, target functions, partitions and trace diagnostics."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._validation import check_positive_int
from .exceptions import EndOfTrace, InvalidInputError
from .learners import NearestNeighborLearner

_CHUNK = 4096


# processes --------------------------------------------------------------------

@dataclass
class Process:
    """Generator of the input sequence ``X_1, X_2, ...``.

    Kinds and their parameters:

    ``iid_uniform``              ``lo``, ``hi``
    ``iid_discrete``             ``support``, ``weights`` (uniform if omitted)
    ``deterministic_geometric``  ``ratio``: ``X_t = ratio ** t``, as an exact
                                 ``Fraction`` (float powers underflow)
    ``fixed_sequence``           ``points``
    ``file_trace``               ``path``: one decimal number per line

    Stochastic kinds draw from ``numpy.random.default_rng(seed)``; the same
    seed always yields the same sequence.
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    support: Sequence[float] = ()
    weights: Optional[Sequence[float]] = None
    ratio: object = "-1/3"
    points: Sequence[float] = ()
    path: Optional[str] = None
    seed: int = 0
    _cache: list = field(default_factory=list, init=False, repr=False, compare=False)
    _rng: object = field(default=None, init=False, repr=False, compare=False)

    KINDS = ("iid_uniform", "iid_discrete", "deterministic_geometric", "fixed_sequence", "file_trace")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidInputError(f"unknown process kind {self.kind!r}")
        if self.kind == "iid_uniform" and not self.lo < self.hi:
            raise InvalidInputError("iid_uniform needs lo < hi")
        if self.kind == "iid_discrete":
            if len(self.support) == 0:
                raise InvalidInputError("iid_discrete needs a nonempty support")
            w = np.ones(len(self.support)) if self.weights is None else np.asarray(self.weights, float)
            if w.shape != (len(self.support),) or (w < 0).any() or w.sum() <= 0:
                raise InvalidInputError("bad iid_discrete weights")
            self._cdf = np.cumsum(w / w.sum())
        if self.kind == "deterministic_geometric":
            self._ratio = _as_fraction(self.ratio)
            if not 0 < abs(self._ratio) < 1:
                raise InvalidInputError("geometric ratio must satisfy 0 < |r| < 1")
        if self.kind == "file_trace":
            if self.path is None:
                raise InvalidInputError("file_trace needs a path")
            self.points = tuple(read_trace(self.path))

    def _extend(self, t):
        if self._rng is None:
            self._rng = np.random.default_rng(self.seed)
        while len(self._cache) < t:
            u = self._rng.random(_CHUNK)
            if self.kind == "iid_uniform":
                vals = self.lo + (self.hi - self.lo) * u
            else:
                idx = np.minimum(np.searchsorted(self._cdf, u, side="right"), len(self.support) - 1)
                vals = np.asarray(self.support, float)[idx]
            self._cache.extend(vals.tolist())

    def next_input(self, t: int) -> float:
        t = check_positive_int(t, "t")
        if self.kind in ("iid_uniform", "iid_discrete"):
            self._extend(t)
            return self._cache[t - 1]
        if self.kind == "deterministic_geometric":
            return self._ratio ** t
        if t > len(self.points):
            raise EndOfTrace(f"trace has {len(self.points)} points, step {t} requested")
        return float(self.points[t - 1])

    def sample(self, T: int) -> list:
        return [self.next_input(t) for t in range(1, T + 1)]


def _as_fraction(r) -> Fraction:
    # floats are read as the nearest simple rational: 0.333... -> 1/3
    if isinstance(r, str):
        return Fraction(r.replace("\u2212", "-").strip())
    if isinstance(r, float):
        return Fraction(r).limit_denominator(10 ** 9)
    return Fraction(r)


def next_input(gen: Process, t: int) -> float:
    return gen.next_input(t)


def read_trace(path) -> list:
    out = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(float(line))
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{n}: not a number: {line!r}") from exc
    return out


# targets ------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalUnion:
    """Indicator of a finite union of pairwise disjoint closed intervals.

    ``closed`` optionally gives ``(left_closed, right_closed)`` per interval.
    """

    intervals: tuple
    closed: Optional[tuple] = None

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        flags = tuple((True, True) for _ in ivs) if self.closed is None else tuple(
            (bool(l), bool(r)) for l, r in self.closed)
        if len(flags) != len(ivs):
            raise InvalidInputError("one closedness pair per interval")
        object.__setattr__(self, "closed", flags)
        for a, b in ivs:
            if a > b:
                raise InvalidInputError(f"empty interval [{a}, {b}]")
        order = sorted(range(len(ivs)), key=lambda i: ivs[i])
        for i, j in zip(order, order[1:]):
            (a1, b1), (a2, _) = ivs[i], ivs[j]
            if b1 > a2 or (b1 == a2 and flags[i][1] and flags[j][0]):
                raise InvalidInputError(f"intervals {ivs[i]} and {ivs[j]} overlap")

    def __call__(self, x) -> int:
        for (a, b), (lc, rc) in zip(self.intervals, self.closed):
            if (a < x or (lc and a == x)) and (x < b or (rc and x == b)):
                return 1
        return 0


@dataclass(frozen=True)
class Complement:
    target: object

    def __call__(self, x) -> int:
        return 1 - self.target(x)


@dataclass(frozen=True)
class UnionOf:
    targets: tuple

    def __call__(self, x) -> int:
        return int(any(f(x) for f in self.targets))


@dataclass(frozen=True)
class Threshold:
    """``1(x < a)``, or ``1(x <= a)`` when ``closed``."""

    a: float
    closed: bool = False

    def __call__(self, x) -> int:
        return int(x <= self.a) if self.closed else int(x < self.a)


@dataclass(frozen=True)
class DyadicCellLabel:
    """Natural-number id of the cell of ``dyadic_around(a)`` containing ``x``."""

    a: float

    def __call__(self, x) -> int:
        return cell_to_natural(dyadic_cell(self.a, x))


@dataclass(frozen=True)
class QuantizedStep:
    """Piecewise-constant target: ``labels[j]`` on the j-th piece cut by ``breakpoints``.

    Pieces are ``(-inf, b_1), [b_1, b_2), ..., [b_n, inf)``.
    """

    breakpoints: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(self.breakpoints) + 1:
            raise InvalidInputError("need len(breakpoints) + 1 labels")
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise InvalidInputError("breakpoints must be sorted")

    def __call__(self, x):
        return self.labels[bisect.bisect_right(self.breakpoints, x)]


# partitions ---------------------------------------------------------------------

def _floor_log2(d: Fraction) -> int:
    # exact floor(log2(d)) for d > 0
    e = d.numerator.bit_length() - d.denominator.bit_length()
    if Fraction(2) ** e > d:
        e -= 1
    elif Fraction(2) ** (e + 1) <= d:
        e += 1
    return e


def dyadic_cell(a: float, x: float) -> tuple:
    """Cell of ``{a} + [a+2^i, a+2^(i+1)) + (a-2^(i+1), a-2^i]`` containing ``x``.

    Returns ``("center", 0)``, ``("right", i)`` or ``("left", i)``; the
    arithmetic is exact on the binary values of ``a`` and ``x``.
    """
    d = Fraction(x) - Fraction(a)
    if d == 0:
        return ("center", 0)
    # x - a in [2^i, 2^(i+1)) on the right, a - x in [2^i, 2^(i+1)) on the left
    side = "right" if d > 0 else "left"
    i = _floor_log2(abs(d))
    return (side, i)


def dyadic_cell_bounds(a: float, cell: tuple):
    """``(lo, hi, lo_closed, hi_closed)`` of a dyadic cell, as Fractions."""
    side, i = cell
    a = Fraction(a)
    if side == "center":
        return a, a, True, True
    w = Fraction(2) ** i
    if side == "right":
        return a + w, a + 2 * w, True, False
    return a - 2 * w, a - w, False, True


def cell_to_natural(cell: tuple) -> int:
    side, i = cell
    if side == "center":
        return 0
    z = 2 * i if i >= 0 else -2 * i - 1
    return 2 * z + (1 if side == "right" else 2)


@dataclass(frozen=True)
class DyadicPartition:
    a: float

    def cell(self, x):
        return dyadic_cell(self.a, x)


@dataclass(frozen=True)
class GridPartition:
    width: float
    origin: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidInputError("grid width must be positive")

    def cell(self, x):
        return math.floor((x - self.origin) / self.width)


def parse_partition(spec: str):
    """``dyadic:<a>`` or ``grid:<width>``."""
    head, _, arg = spec.partition(":")
    try:
        if head == "dyadic":
            return DyadicPartition(float(arg) if arg else 0.0)
        if head == "grid":
            return GridPartition(float(arg))
    except ValueError as exc:
        raise InvalidInputError(f"bad partition spec {spec!r}") from exc
    raise InvalidInputError(f"bad partition spec {spec!r}")


# diagnostics ----------------------------------------------------------------------

def smv_audit(trace: Sequence[float], partition, checkpoints: Sequence[int]) -> list:
    """Distinct partition cells visited by the first ``T`` points, per checkpoint.

    Returns ``[(T, cells, cells / T), ...]``.
    """
    cps = list(checkpoints)
    if cps != sorted(cps) or (cps and (cps[0] < 1 or cps[-1] > len(trace))):
        raise InvalidInputError("checkpoints must be ascending within [1, len(trace)]")
    seen = set()
    out = []
    it = iter(cps)
    nxt = next(it, None)
    for t, x in enumerate(trace, start=1):
        if nxt is None:
            break
        seen.add(partition.cell(x))
        while nxt is not None and nxt == t:
            out.append((t, len(seen), len(seen) / t))
            nxt = next(it, None)
    return out


@dataclass
class NewCellReport:
    mistakes: list
    new_cells: list
    bound_holds: bool


def nn_mistakes(trace: Sequence[float], target, space=None) -> list:
    """Per-step 0/1 mistakes of 1-NN on a binary target."""
    nn = NearestNeighborLearner(space=space)
    out = []
    for x in trace:
        y = target(x)
        out.append(int(nn.predict_one(x) != y))
        nn.learn_one(x, y)
    return out


def mistake_vs_newcell_check(trace: Sequence[float], target: Threshold) -> NewCellReport:
    """Cumulative NN mistakes against first visits of ``dyadic_around(a)`` cells.

    A mistake at step ``t >= 2`` forces ``x_t`` into a cell no earlier point
    visited; step 1 always opens a new cell, so ``mistakes(T) <= new_cells(T)``
    for every prefix.
    """
    if not isinstance(target, Threshold):
        raise InvalidInputError("mistake_vs_newcell_check needs a threshold target")
    part = DyadicPartition(target.a)
    seen = set()
    mistakes, cells = [], []
    m = c = 0
    for miss, x in zip(nn_mistakes(trace, target), trace):
        cell = part.cell(x)
        if cell not in seen:
            seen.add(cell)
            c += 1
        m += miss
        mistakes.append(m)
        cells.append(c)
    holds = all(a <= b for a, b in zip(mistakes, cells))
    return NewCellReport(mistakes, cells, holds)


@dataclass
class ClosureReport:
    steps: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def closure_check(trace: Sequence[float], targets: Sequence) -> ClosureReport:
    """Per-step complement symmetry and union subadditivity of NN mistakes.

    NN's representant ignores labels, so it is computed once.  Complement
    symmetry is checked from step 2 on: step 1 predicts the fixed default
    label, which cannot be symmetric.
    """
    if len(targets) < 2:
        raise InvalidInputError("closure_check needs at least two targets")
    nn = NearestNeighborLearner()
    reps = []
    for x in trace:
        reps.append(nn.representant(x))
        nn.learn_one(x, 0)

    def mistakes(f):
        out = []
        for t, (x, r) in enumerate(zip(trace, reps)):
            pred = 0 if r is None else f(trace[r - 1])
            out.append(int(pred != f(x)))
        return out

    per_target = [mistakes(f) for f in targets]
    complements = [mistakes(Complement(f)) for f in targets]
    union = mistakes(UnionOf(tuple(targets)))
    report = ClosureReport(steps=len(trace))
    for t in range(len(trace)):
        for j, (m, mc) in enumerate(zip(per_target, complements)):
            if t >= 1 and m[t] != mc[t]:
                report.violations.append((t + 1, "complement", j))
        if union[t] > sum(m[t] for m in per_target):
            report.violations.append((t + 1, "union", None))
    return report
