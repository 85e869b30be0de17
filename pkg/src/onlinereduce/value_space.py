"""Output spaces with bounded near-metric losses.

A :class:`ValueSpace` bundles a loss function with the geometry the
reductions need: a dense sequence ``y^1, y^2, ...``, the quantizer
``h_eps(y) = min{i : loss(y^i, y) < eps}`` and exact "ball regions"

    region(i, eps) = B(y^i, eps) minus the union of B(y^j, eps), j < i

where ``B(c, eps) = {y : loss(c, y) < eps}``.  For a fixed ``eps`` the
regions partition the space and ``y`` lies in ``region(quantize(y), eps)``.

Built-in kinds
--------------
``binary``        labels {0, 1}, indicator loss
``finite``        labels {1..k}, indicator loss
``countable``     labels {0, 1, 2, ...}, indicator loss
``real_interval`` floats in [lo, hi], absolute or squared loss
``custom``        user supplied loss and dense sequence (no exact regions)
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, Optional, Sequence

import portion

from .exceptions import CapabilityError, DensityError, InvalidInputError

N_CAP = 2 ** 20

KINDS = ("binary", "finite", "countable", "real_interval", "custom")

# Sentinel region meaning "every label" for indicator losses with eps > 1.
ALL = None


@dataclass(frozen=True)
class ValueSpace:
    """Immutable descriptor of an output space ``(Y, loss)``.

    Use the constructors :meth:`binary`, :meth:`finite`, :meth:`countable`,
    :meth:`real_interval` and :meth:`custom` rather than calling the class
    directly.
    """

    kind: str
    k: int = 0
    lo: float = 0.0
    hi: float = 1.0
    loss_kind: str = "indicator"
    custom_loss: Optional[Callable[[Any, Any], float]] = field(default=None, compare=False)
    custom_dense: Optional[Callable[[int], Any]] = field(default=None, compare=False)
    custom_c_ell: float = 1.0
    custom_ell_bar: float = 1.0
    custom_default: Any = None
    custom_name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown value space kind {self.kind!r}")
        if self.kind == "finite" and self.k < 2:
            raise InvalidInputError("finite space needs k >= 2")
        if self.kind == "real_interval":
            if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
                raise InvalidInputError(f"bad interval bounds [{self.lo}, {self.hi}]")
            if self.loss_kind not in ("absolute", "squared"):
                raise InvalidInputError(f"unknown loss kind {self.loss_kind!r}")
        if self.kind == "custom":
            if self.custom_loss is None or self.custom_dense is None:
                raise InvalidInputError("custom space needs a loss and a dense sequence")
            if not 0 < self.custom_ell_bar < math.inf:
                raise InvalidInputError("custom space needs 0 < ell_bar < inf")

    # constructors -------------------------------------------------------
    @classmethod
    def binary(cls) -> "ValueSpace":
        return cls("binary")

    @classmethod
    def finite(cls, k: int) -> "ValueSpace":
        return cls("finite", k=int(k))

    @classmethod
    def countable(cls) -> "ValueSpace":
        return cls("countable")

    @classmethod
    def real_interval(cls, lo: float = 0.0, hi: float = 1.0, loss: str = "absolute") -> "ValueSpace":
        return cls("real_interval", lo=float(lo), hi=float(hi), loss_kind=loss)

    @classmethod
    def custom(cls, loss, dense_seq, *, c_ell, ell_bar, default_label, name="custom") -> "ValueSpace":
        return cls("custom", loss_kind="custom", custom_loss=loss, custom_dense=dense_seq,
                   custom_c_ell=float(c_ell), custom_ell_bar=float(ell_bar),
                   custom_default=default_label, custom_name=name)

    # constants ------------------------------------------------------------
    @property
    def is_indicator(self) -> bool:
        return self.kind in ("binary", "finite", "countable")

    @property
    def c_ell(self) -> float:
        if self.kind == "custom":
            return self.custom_c_ell
        return 2.0 if self.loss_kind == "squared" else 1.0

    @property
    def ell_bar(self) -> float:
        if self.kind == "custom":
            return self.custom_ell_bar
        if self.kind == "real_interval":
            width = self.hi - self.lo
            return width * width if self.loss_kind == "squared" else width
        return 1.0

    @property
    def default_label(self):
        if self.kind == "binary" or self.kind == "countable":
            return 0
        if self.kind == "finite":
            return 1
        if self.kind == "real_interval":
            return self.dense_point(1)
        return self.custom_default

    def __repr__(self):
        if self.kind == "finite":
            return f"ValueSpace.finite({self.k})"
        if self.kind == "real_interval":
            return f"ValueSpace.real_interval({self.lo!r}, {self.hi!r}, loss={self.loss_kind!r})"
        if self.kind == "custom":
            return f"ValueSpace.custom({self.custom_name!r})"
        return f"ValueSpace.{self.kind}()"

    # labels ---------------------------------------------------------------
    def check_label(self, y):
        """Return ``y`` in canonical form or raise :class:`InvalidInputError`."""
        if self.kind == "custom":
            return y
        if self.kind == "real_interval":
            if isinstance(y, bool) or not isinstance(y, numbers.Real):
                raise InvalidInputError(f"{y!r} is not a real label")
            y = float(y)
            if not self.lo <= y <= self.hi:
                raise InvalidInputError(f"{y!r} outside [{self.lo}, {self.hi}]")
            return y
        if isinstance(y, bool) or not isinstance(y, numbers.Integral):
            raise InvalidInputError(f"{y!r} is not a {self.kind} label")
        y = int(y)
        if self.kind == "binary" and y not in (0, 1):
            raise InvalidInputError(f"{y} is not a bit")
        if self.kind == "finite" and not 1 <= y <= self.k:
            raise InvalidInputError(f"{y} outside classes 1..{self.k}")
        if self.kind == "countable" and y < 0:
            raise InvalidInputError(f"{y} is not a natural number")
        return y

    def loss(self, y1, y2) -> float:
        y1, y2 = self.check_label(y1), self.check_label(y2)
        if self.kind == "custom":
            return float(self.custom_loss(y1, y2))
        if self.is_indicator:
            return 0.0 if y1 == y2 else 1.0
        d = abs(y1 - y2)
        return d * d if self.loss_kind == "squared" else d

    def farthest_label(self, y):
        """A label with maximal loss from ``y`` (used by error-injecting oracles)."""
        y = self.check_label(y)
        if self.kind == "binary":
            return 1 - y
        if self.kind == "finite":
            return 2 if y == 1 else 1
        if self.kind == "countable":
            return y + 1
        if self.kind == "real_interval":
            return self.lo if y - self.lo >= self.hi - y else self.hi
        raise CapabilityError("no farthest-label rule for custom spaces")

    # dense sequence -------------------------------------------------------
    def dense_point(self, i: int):
        if isinstance(i, bool) or not isinstance(i, numbers.Integral) or i < 1:
            raise InvalidInputError(f"dense index must be a natural >= 1, got {i!r}")
        i = int(i)
        if self.kind == "binary":
            return min(i - 1, 1)
        if self.kind == "finite":
            return min(i, self.k)
        if self.kind == "countable":
            return i - 1
        if self.kind == "real_interval":
            g = i.bit_length()  # generation: indices 2^(g-1) .. 2^g - 1
            j = i - (1 << (g - 1)) + 1
            return self._gen_point(g, j)
        return self.custom_dense(i)

    def _gen_point(self, g: int, j: int) -> float:
        return self.lo + (self.hi - self.lo) * (2 * j - 1) / 2.0 ** g

    # quantizer ------------------------------------------------------------
    def quantize(self, eps: float, y, n_cap: int = N_CAP) -> int:
        eps = _check_eps(eps)
        y = self.check_label(y)
        if self.is_indicator:
            if eps > 1.0:
                return 1
            return {"binary": y + 1, "finite": y, "countable": y + 1}[self.kind]
        if self.kind == "real_interval":
            return self._quantize_interval(eps, y)
        for i in range(1, n_cap + 1):
            if self.loss(self.dense_point(i), y) < eps:
                return i
        raise DensityError(f"no dense point within {eps} of {y!r} among the first {n_cap}")

    def _quantize_interval(self, eps: float, y: float) -> int:
        r = math.sqrt(eps) if self.loss_kind == "squared" else eps
        width = self.hi - self.lo
        g = 1
        while True:
            n = 1 << (g - 1)
            step = width / n
            j_lo = max(1, math.floor((y - r - self.lo) / step + 0.5) - 1)
            j_hi = min(n, math.ceil((y + r - self.lo) / step + 0.5) + 1)
            for j in range(j_lo, j_hi + 1):
                if self.loss(self._gen_point(g, j), y) < eps:
                    return n + j - 1
            g += 1

    # ball regions ---------------------------------------------------------
    def ball_region(self, i: int, eps: float):
        """Exact region ``B(y^i, eps)`` minus all earlier balls.

        Returns a ``portion.Interval`` for real intervals, otherwise a
        frozenset of labels or :data:`ALL`.
        """
        eps = _check_eps(eps)
        y_i = self.dense_point(i)
        if self.is_indicator:
            if eps > 1.0:
                return ALL if i == 1 else frozenset()
            # repeated tail of the enumeration: earlier index already owns y_i
            return frozenset([y_i]) if self.quantize(eps, y_i) == i else frozenset()
        if self.kind == "real_interval":
            return _interval_regions(self, eps, i)
        raise CapabilityError("exact ball regions are only available for built-in spaces")

    def intersect_nonempty(self, constraints: Sequence[tuple]):
        """Whether the ball regions ``(index, eps)`` share a label.

        Returns ``(nonempty, witness)``; ``witness`` is ``None`` when empty.
        """
        if not constraints:
            raise InvalidInputError("need at least one (index, eps) constraint")
        regions = [self.ball_region(i, eps) for i, eps in constraints]
        if self.kind == "real_interval":
            inter = reduce(lambda a, b: a & b, regions)
            if inter.empty:
                return False, None
            return True, _simplest_point(self, inter[0])
        inter = ALL
        for reg in regions:
            inter = reg if inter is ALL else (inter if reg is ALL else inter & reg)
        if inter is ALL:
            return True, self.default_label
        if not inter:
            return False, None
        return True, min(inter)

    def probe_intersection(self, constraints: Sequence[tuple], n_points: int = 10_000):
        """Approximate intersection test by scanning the first dense points.

        Membership of ``y`` in ``region(i, eps)`` is tested as
        ``quantize(eps, y) == i``.  A ``True`` answer is always correct; a
        ``False`` answer only means no member was found among the probes.
        """
        for p in range(1, n_points + 1):
            y = self.dense_point(p)
            if all(self.quantize(eps, y, n_cap=max(n_points, i)) == i for i, eps in constraints):
                return True, y
        return False, None


def _check_eps(eps) -> float:
    eps = float(eps)
    if not eps > 0 or math.isnan(eps):
        raise InvalidInputError(f"eps must be positive, got {eps!r}")
    return eps


_REGION_CACHE: dict = {}


def _simplest_point(space: ValueSpace, atom) -> float:
    # earliest dense-sequence generation with a point in the atom, else any member
    width = space.hi - space.lo
    for g in range(1, 64):
        step = width / (1 << (g - 1))
        j0 = math.ceil((atom.lower - space.lo) / step + 0.5)
        for j in (j0 - 1, j0, j0 + 1):
            if 1 <= j <= 1 << (g - 1):
                y = space._gen_point(g, j)
                if y in atom:
                    return y
    mid = (atom.lower + atom.upper) / 2.0
    if mid in atom:
        return float(mid)
    return float(atom.upper if atom.right == portion.CLOSED else atom.lower)


def _float_ball(space: ValueSpace, c: float, eps: float):
    """``{y in [lo, hi] : loss(c, y) < eps}`` as a closed interval of floats.

    The endpoints are the extreme floats passing the loss predicate, so
    membership agrees exactly with :meth:`ValueSpace.quantize`.
    """
    inside = (lambda y: (c - y) * (c - y) < eps) if space.loss_kind == "squared" else (
        lambda y: abs(c - y) < eps)
    ends = []
    for bound in (space.lo, space.hi):
        if inside(bound):
            ends.append(bound)
            continue
        a, b = c, bound  # inside, outside: bisect down to adjacent floats
        while True:
            m = (a + b) / 2.0
            if m == a or m == b:
                break
            a, b = (m, b) if inside(m) else (a, m)
        ends.append(a)
    return portion.closed(*ends)


def _interval_regions(space: ValueSpace, eps: float, i: int):
    # per (space, eps): regions list and the running union of balls
    key = (space, eps)
    regions, covered = _REGION_CACHE.get(key, ([], portion.empty()))
    if len(regions) >= i:
        return regions[i - 1]
    while len(regions) < i:
        ball = _float_ball(space, space.dense_point(len(regions) + 1), eps)
        regions.append(ball - covered)
        covered = covered | ball
    _REGION_CACHE[key] = (regions, covered)
    return regions[i - 1]


# functional aliases ---------------------------------------------------------

def loss(space: ValueSpace, y1, y2) -> float:
    return space.loss(y1, y2)


def dense_point(space: ValueSpace, i: int):
    return space.dense_point(i)


def quantize(space: ValueSpace, eps: float, y, n_cap: int = N_CAP) -> int:
    return space.quantize(eps, y, n_cap=n_cap)


def intersect_nonempty(space: ValueSpace, constraints):
    return space.intersect_nonempty(constraints)


def parse_space(spec: str) -> ValueSpace:
    """Parse ``binary``, ``finite:4``, ``countable`` or ``real:0:1:squared``."""
    parts = spec.strip().split(":")
    head = parts[0].lower()
    try:
        if head == "binary" and len(parts) == 1:
            return ValueSpace.binary()
        if head == "countable" and len(parts) == 1:
            return ValueSpace.countable()
        if head == "finite" and len(parts) == 2:
            return ValueSpace.finite(int(parts[1]))
        if head in ("real", "real_interval") and len(parts) in (1, 3, 4):
            lo, hi = (float(parts[1]), float(parts[2])) if len(parts) > 1 else (0.0, 1.0)
            loss_kind = parts[3] if len(parts) == 4 else "absolute"
            return ValueSpace.real_interval(lo, hi, loss_kind)
    except ValueError as exc:
        raise InvalidInputError(f"bad space spec {spec!r}: {exc}") from exc
    raise InvalidInputError(f"bad space spec {spec!r}")
