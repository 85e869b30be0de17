"""Wrappers turning a learner for one output space into a learner for another.

``GeneralToBinary``
    a learner over ``(Y, loss)`` used for binary classification through two
    labels ``y0 != y1``.
``OneVsRestOnline``
    ``k`` binary replicas, one per class, combined by argmax.
``BinaryToCountable``
    binary replicas trained on ``1(y in sigma)`` for a uniformly random
    label subset ``sigma``; predicts the smallest label whose consistency
    score ``p(i)`` exceeds 3/4.  Exact mode enumerates every subset of the
    observed labels; Monte Carlo mode keeps ``n_replicas`` sampled subsets.
``CountableToGeneral``
    one countable learner per accuracy level ``eps_k = 2**-k`` trained on
    quantized labels; outputs the dense point of the deepest level whose
    ball regions are mutually consistent.
"""
from __future__ import annotations

import copy
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, clone

from ._validation import check_input, check_positive_int, is_exact_scalar
from .exceptions import CapabilityError, CapacityError, InvalidInputError
from .learners import OnlineLearnerMixin
from .value_space import ValueSpace

THRESHOLD = 0.75


def _bind_label_map(estimator, fn):
    """Compose ``fn`` after every nested ``label_map`` parameter of ``estimator``."""
    params = estimator.get_params(deep=True)
    keys = [k for k in params if k == "label_map" or k.endswith("__label_map")]
    if keys:
        estimator.set_params(**{k: _Composed(params[k], fn) for k in keys})
    return estimator


class _Composed:
    def __init__(self, inner, outer):
        self.inner, self.outer = inner, outer

    def __call__(self, y):
        return self.outer(y if self.inner is None else self.inner(y))


class _Indicator:
    # picklable one-vs-rest label map
    def __init__(self, cls):
        self.cls = cls

    def __call__(self, y):
        return int(y == self.cls)


class _Quantizer:
    def __init__(self, space, eps):
        self.space, self.eps = space, eps

    def __call__(self, y):
        return self.space.quantize(self.eps, y)


class _BitToLabel:
    def __init__(self, y0, y1):
        self.y0, self.y1 = y0, y1

    def __call__(self, b):
        return self.y1 if b else self.y0


class GeneralToBinary(OnlineLearnerMixin, BaseEstimator):
    """Binary classifier from a learner over a general value space.

    The base learner sees labels ``y0``/``y1`` in place of bits 0/1; the
    output is 0 when the base prediction is at least as close to ``y0`` as
    to ``y1``.  If ``loss(y0, y1) = delta``, a binary mistake implies a base
    loss of at least ``delta / (2 c_ell)``.
    """

    def __init__(self, estimator=None, space: Optional[ValueSpace] = None, y0=None, y1=None):
        self.estimator = estimator
        self.space = space
        self.y0 = y0
        self.y1 = y1

    def _reset(self):
        if self.space.loss(self.y0, self.y1) <= 0:
            raise InvalidInputError("y0 and y1 must be distinct labels")
        self.estimator_ = _bind_label_map(clone(self.estimator), _BitToLabel(self.y0, self.y1))

    @property
    def space_(self):
        return ValueSpace.binary()

    def _learn(self, x, y):
        self.estimator_.learn_one(x, self.y1 if y else self.y0)

    def _predict(self, x):
        pred = self.estimator_.predict_one(x)
        return 0 if self.space.loss(pred, self.y0) <= self.space.loss(pred, self.y1) else 1


class OneVsRestOnline(OnlineLearnerMixin, BaseEstimator):
    """Classes ``1..n_classes`` from one binary replica per class.

    Ties in the argmax go to the smallest class, so an all-zero vote
    predicts class 1.
    """

    def __init__(self, estimator=None, n_classes: int = 2):
        self.estimator = estimator
        self.n_classes = n_classes

    def _reset(self):
        k = check_positive_int(self.n_classes, "n_classes", minimum=2)
        self.estimators_ = []
        for cls in range(1, k + 1):
            est = _bind_label_map(clone(self.estimator), _Indicator(cls))
            self.estimators_.append(est)

    @property
    def space_(self):
        return ValueSpace.finite(self.n_classes)

    @property
    def n_replicas_(self):
        self._ensure_state()
        return sum(e.n_replicas_ for e in self.estimators_)

    def replica_predictions(self, x):
        self._ensure_state()
        return [e.predict_one(x) for e in self.estimators_]

    def _predict(self, x):
        votes = self.replica_predictions(x)
        return 1 + int(np.argmax(votes))

    def _learn(self, x, y):
        for cls, est in enumerate(self.estimators_, start=1):
            est.learn_one(x, int(y == cls))


class _SigmaView:
    """Membership mapping of one Monte Carlo replica, drawn lazily per label."""

    __slots__ = ("stack", "j")

    def __init__(self, stack, j):
        self.stack, self.j = stack, j

    def get(self, label, default=None):
        return int(self.stack._sigma(label)[self.j])


class BinaryToCountable(OnlineLearnerMixin, BaseEstimator):
    """Countable classifier built from copies of a binary learner.

    Parameters
    ----------
    estimator : binary online learner
        Cloned once per replica.
    mode : {"exact", "mc"}
        ``exact`` keeps one replica per assignment of bits to the observed
        labels (``2**m`` replicas for ``m`` labels).  ``mc`` keeps
        ``n_replicas`` replicas with independently drawn random subsets.
    m_max : int, default=16
        Exact mode refuses to track more distinct labels than this.
    n_replicas : int, default=1000
        Number of sampled subsets in Monte Carlo mode.
    random_state : int, default=0
        Seed of the subset draws.  Bit ``B_i`` of every replica depends only
        on ``(random_state, i)``, so replays are bit-reproducible whatever
        the query order.
    """

    def __init__(self, estimator=None, mode: str = "exact", m_max: int = 16,
                 n_replicas: int = 1000, random_state: int = 0):
        self.estimator = estimator
        self.mode = mode
        self.m_max = m_max
        self.n_replicas = n_replicas
        self.random_state = random_state

    @property
    def space_(self):
        return ValueSpace.countable()

    def _reset(self):
        if self.mode not in ("exact", "mc"):
            raise InvalidInputError(f"mode must be 'exact' or 'mc', got {self.mode!r}")
        self.labels_ = []
        self._pos = {}
        self._cache = None
        if self.mode == "exact":
            check_positive_int(self.m_max, "m_max", minimum=0)
            self.replicas_ = [clone(self.estimator)]
            self._aware = getattr(self.replicas_[0], "label_aware", False)
            self._codes = np.zeros(1, dtype=np.int64)
            if self._aware:
                self.replicas_[0].membership = {}
        else:
            n = check_positive_int(self.n_replicas, "n_replicas")
            self._sigma_bits = {}
            self.replicas_ = [clone(self.estimator) for _ in range(n)]
            self._aware = getattr(self.replicas_[0], "label_aware", False)
            if self._aware:
                for j, r in enumerate(self.replicas_):
                    r.membership = _SigmaView(self, j)

    @property
    def n_replicas_(self):
        self._ensure_state()
        return sum(r.n_replicas_ for r in self.replicas_)

    @property
    def n_labels_(self):
        self._ensure_state()
        return len(self.labels_)

    # subset bookkeeping ----------------------------------------------------
    def _sigma(self, label):
        bits = self._sigma_bits.get(label)
        if bits is None:
            rng = np.random.default_rng([int(self.random_state), int(label)])
            bits = rng.integers(0, 2, size=len(self.replicas_), dtype=np.int8)
            self._sigma_bits[label] = bits
        return bits

    def _bits(self, label):
        """Per-replica subset bit of ``label``, or None if not yet assigned."""
        if self.mode == "mc":
            return self._sigma(label)
        pos = self._pos.get(label)
        if pos is None:
            return None
        return ((self._codes >> pos) & 1).astype(np.int8)

    def _spawn(self, label):
        m = len(self.labels_)
        if m + 1 > self.m_max:
            raise CapacityError(
                f"exact mode tracks at most m_max={self.m_max} distinct labels; use mode='mc'")
        twins = [copy.deepcopy(r) for r in self.replicas_]
        if self._aware:
            for r in self.replicas_:
                r.membership = {**r.membership, label: 0}
            for r in twins:
                r.membership = {**r.membership, label: 1}
        self.replicas_.extend(twins)
        self._codes = np.concatenate([self._codes, self._codes + (1 << m)])
        self._pos[label] = m
        self.labels_.append(label)

    # predictions -------------------------------------------------------------
    def _replica_probs(self, x):
        key = (self.n_seen_, x if is_exact_scalar(x) else None)
        if self._cache is not None and key[1] is not None and self._cache[0] == key:
            return self._cache[1]
        if self.mode == "exact":
            probs = np.array([r.predict_proba_one(x) for r in self.replicas_])
        else:
            probs = np.array([r.predict_one(x) for r in self.replicas_], dtype=float)
        self._cache = (key, probs)
        return probs

    def _extended_probs(self, x, label):
        # exact mode, label-aware replicas, label without an assigned bit:
        # P[pred = 1] with the label's bit forced to 0 and to 1
        q0, q1 = [], []
        for r in self.replicas_:
            base = r.membership
            r.membership = {**base, label: 0}
            q0.append(r.predict_proba_one(x))
            r.membership = {**base, label: 1}
            q1.append(r.predict_proba_one(x))
            r.membership = base
        return np.array(q0), np.array(q1)

    def p_score(self, x, i) -> float:
        """Consistency score ``p(i)`` of the hypothesis "the label of x is i"."""
        self._ensure_state()
        x = check_input(x)
        probs = self._replica_probs(x)
        bits = self._bits(i)
        if bits is not None:
            return float(np.mean(probs * bits + (1.0 - probs) * (1 - bits)))
        if not self._aware:
            # the bit of an unseen label is independent of every prediction
            return 0.5
        q0, q1 = self._extended_probs(x, i)
        return float(np.mean((q1 + (1.0 - q0)) / 2.0))

    def candidates(self, x):
        """Observed labels, plus the true label when the replicas can name it."""
        self._ensure_state()
        cands = set(self.labels_)
        if self._aware:
            cands.update(self.replicas_[0].extra_candidates(x))
        return sorted(cands)

    def scores(self, x):
        """``{label: p(label)}`` over every label that can exceed 1/2."""
        self._ensure_state()
        x = check_input(x)
        return {i: self.p_score(x, i) for i in self.candidates(x)}

    def _predict(self, x):
        for i, p in sorted(self.scores(x).items()):
            if p > THRESHOLD:
                return i
        return 0

    def replica_error_rate(self, x, y) -> float:
        """Subset-averaged binary error of the replicas on ``(x, y)``.

        This is the quantity ``e_t``: whenever ``e_t < 1/8`` the countable
        prediction is correct.
        """
        self._ensure_state()
        x = check_input(x)
        bits = self._bits(y)
        if bits is not None:
            probs = self._replica_probs(x)
            return float(np.mean(np.abs(probs - bits)))
        if not self._aware:
            return 0.5
        q0, q1 = self._extended_probs(x, y)
        return float(np.mean((q0 + (1.0 - q1)) / 2.0))

    def _learn(self, x, y):
        if isinstance(y, bool) or not isinstance(y, (int, np.integer)) or y < 0:
            raise InvalidInputError(f"countable labels are naturals, got {y!r}")
        y = int(y)
        if self.mode == "exact" and y not in self._pos:
            self._spawn(y)
        elif self.mode == "mc" and y not in self._pos:
            self._pos[y] = len(self.labels_)
            self.labels_.append(y)
        bits = self._bits(y)
        for r, b in zip(self.replicas_, bits):
            r.learn_one(x, int(b))
        self._cache = None


class CountableToGeneral(OnlineLearnerMixin, BaseEstimator):
    """Learner over a general value space from countable learners.

    Level ``k`` (``eps_k = 2**-k``, ``k = 1..n_levels``) trains a clone of
    ``estimator`` on quantized labels ``quantize(eps_k, y)``.  Each level's
    index prediction ``i_k`` names a ball region; the output is the dense
    point ``y^{i_p}`` of the deepest level ``p <= min(t, n_levels)`` such
    that the regions of levels ``1..p`` intersect.

    A level index of 0 (the countable fallback answer) names no region; a
    level-1 index of 0 maps to the space's default label.

    With ``output="consistent"`` (default) the dense point is returned only
    when it lies in every region of levels ``1..p``; otherwise a member of
    that intersection is returned.  Then, whenever levels ``1..k`` are all
    correct, the loss is below ``2 c_ell eps_k``.  ``output="center"``
    always returns the dense point ``y^{i_p}``, for which that bound can
    fail (the dense point may lie outside the deeper regions).
    """

    def __init__(self, estimator=None, space: Optional[ValueSpace] = None, n_levels: int = 8,
                 allow_approximate: bool = False, n_probe: int = 10_000, output: str = "consistent"):
        self.estimator = estimator
        self.space = space
        self.n_levels = n_levels
        self.allow_approximate = allow_approximate
        self.n_probe = n_probe
        self.output = output

    def _reset(self):
        K = check_positive_int(self.n_levels, "n_levels")
        if self.space is None:
            raise InvalidInputError("CountableToGeneral needs a value space")
        if self.output not in ("consistent", "center"):
            raise InvalidInputError(f"output must be 'consistent' or 'center', got {self.output!r}")
        self.eps_ = [2.0 ** -k for k in range(1, K + 1)]
        self.levels_ = []
        for k, eps in enumerate(self.eps_, start=1):
            est = _bind_label_map(clone(self.estimator), _Quantizer(self.space, eps))
            params = est.get_params(deep=True)
            seeds = [key for key in params if key == "random_state" or key.endswith("__random_state")]
            for key in seeds:
                seed = params[key] if params[key] is not None else 0
                derived = int(np.random.SeedSequence([int(seed), k]).generate_state(1)[0])
                est.set_params(**{key: derived})
            self.levels_.append(est)
        self.last_indices_ = []
        self.last_p_hat_ = 0
        self.approximate_ = False

    @property
    def n_replicas_(self):
        self._ensure_state()
        return sum(e.n_replicas_ for e in self.levels_)

    def _consistent(self, constraints):
        """``(nonempty, witness)`` for the intersection of the given regions."""
        try:
            return self.space.intersect_nonempty(constraints)
        except CapabilityError:
            if not self.allow_approximate:
                raise
            self.approximate_ = True
            return self.space.probe_intersection(constraints, self.n_probe)

    def level_indices(self, x):
        self._ensure_state()
        return [int(e.predict_one(x)) for e in self.levels_]

    def _predict(self, x):
        indices = self.level_indices(x)
        t = self.n_seen_ + 1
        p_cap = min(t, len(indices))
        p_hat, witness = 1, None
        for p in range(2, p_cap + 1):
            if any(i < 1 for i in indices[:p]):
                break
            ok, w = self._consistent([(indices[k], self.eps_[k]) for k in range(p)])
            if not ok:
                break
            p_hat, witness = p, w
        self.last_indices_ = indices
        self.last_p_hat_ = p_hat
        i = indices[p_hat - 1]
        if i < 1:
            return self.space.default_label
        center = self.space.dense_point(i)
        if self.output == "center":
            return center
        constraints = [(indices[k], self.eps_[k]) for k in range(p_hat)]
        if self._member(center, constraints):
            return center
        if witness is None:
            ok, witness = self._consistent(constraints)
            if not ok:
                # the level-1 region is empty: nothing better than its center
                return center
        return witness

    def _member(self, y, constraints):
        # y lies in region (i, eps) exactly when it quantizes to i
        n_cap = max(self.n_probe, max(i for i, _ in constraints))
        return all(self.space.quantize(eps, y, n_cap=n_cap) == i for i, eps in constraints)

    def _learn(self, x, y):
        y = self.space.check_label(y)
        for eps, est in zip(self.eps_, self.levels_):
            est.learn_one(x, self.space.quantize(eps, y))


# functional interface -----------------------------------------------------------

def general_to_binary_wrap(base, space: ValueSpace, y0, y1) -> GeneralToBinary:
    if space.loss(y0, y1) <= 0:
        raise InvalidInputError("y0 and y1 must be distinct labels")
    return GeneralToBinary(estimator=base, space=space, y0=y0, y1=y1)


def binary_to_finitek_wrap(base, k: int) -> OneVsRestOnline:
    check_positive_int(k, "k", minimum=2)
    return OneVsRestOnline(estimator=base, n_classes=k)


def compute_p_exact(stack: BinaryToCountable, x, i) -> float:
    if stack.mode != "exact":
        raise InvalidInputError("stack is not in exact mode")
    return stack.p_score(x, i)


def compute_p_mc(stack: BinaryToCountable, x, i) -> float:
    if stack.mode != "mc":
        raise InvalidInputError("stack is not in Monte Carlo mode")
    return stack.p_score(x, i)


def binary_to_countable_predict(stack: BinaryToCountable, x) -> int:
    return stack.predict_one(x)


def representant_shortcut_predict(rule, history_labels, x) -> int:
    """Label of the rule's representant, read from ``history_labels``.

    ``rule`` must have observed the same inputs as ``history_labels``; its
    own labels are never consulted.
    """
    idx = rule.representant(x)
    return 0 if idx is None else history_labels[idx - 1]


def countable_to_general_wrap(countable, space: ValueSpace, K: int) -> CountableToGeneral:
    return CountableToGeneral(estimator=countable, space=space, n_levels=K)


def compose_full_stack(binary, space: ValueSpace, K: int = 8, mode: str = "exact",
                       m_max: int = 16, n_replicas: int = 1000, random_state: int = 0) -> CountableToGeneral:
    """Binary learner -> countable (random subsets) -> general (eps levels).

    Nothing in the construction depends on the input process.
    """
    countable = BinaryToCountable(estimator=binary, mode=mode, m_max=m_max,
                                  n_replicas=n_replicas, random_state=random_state)
    return CountableToGeneral(estimator=countable, space=space, n_levels=K)


def ball_bound_level(space: ValueSpace, indices, y, eps_list) -> int:
    """Largest ``k`` such that levels ``1..k`` all predicted ``quantize(eps, y)``."""
    k = 0
    for i, eps in zip(indices, eps_list):
        if i != space.quantize(eps, y):
            break
        k += 1
    return k
