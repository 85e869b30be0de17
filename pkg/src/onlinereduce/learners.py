"""Online learning rules following the predict-then-observe protocol.

Every learner is a scikit-learn estimator (``get_params``/``set_params``,
``sklearn.base.clone`` gives a fresh copy) with two streaming primitives:

``predict_one(x)``
    prediction for the next input, a pure function of the history so far.
``learn_one(x, y)``
    record the revealed label.  Call it once after each prediction.

``partial_fit``, ``fit``, ``predict`` and ``predict_sequential`` are thin
batch wrappers over these primitives.
"""
from __future__ import annotations

import bisect
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_input, check_stream, input_key, is_exact_scalar
from .value_space import ValueSpace


class OnlineLearnerMixin:
    """Batch helpers and lazy state initialization for streaming learners.

    Subclasses implement ``_reset``, ``_predict`` and ``_learn``.  Fitted
    state lives in attributes with a trailing underscore and is created on
    first use, so an unfitted learner predicts from an empty history.
    """

    #: set on learners whose prediction may depend on a label membership
    #: assignment supplied by an enclosing reduction (see ``OracleLearner``)
    label_aware = False

    def _ensure_state(self):
        if not hasattr(self, "n_seen_"):
            self.n_seen_ = 0
            self._reset()

    def predict_one(self, x):
        self._ensure_state()
        return self._predict(check_input(x))

    def learn_one(self, x, y):
        self._ensure_state()
        self._learn(check_input(x), y)
        self.n_seen_ += 1
        return self

    def predict_proba_one(self, x) -> float:
        """Probability of predicting 1; only meaningful for binary learners."""
        return float(self.predict_one(x))

    @property
    def space_(self) -> ValueSpace:
        return self.space if getattr(self, "space", None) is not None else ValueSpace.binary()

    @property
    def n_replicas_(self) -> int:
        return 1

    def partial_fit(self, X, y):
        X, y = check_stream(X, y)
        for xi, yi in zip(X, y):
            self.learn_one(xi, yi)
        return self

    def fit(self, X, y):
        self.reset()
        return self.partial_fit(X, y)

    def reset(self):
        self.n_seen_ = 0
        self._reset()
        return self

    def predict(self, X):
        """Predict every point of ``X`` from the current history, without learning."""
        return [self.predict_one(x) for x in check_stream(X)]

    def predict_sequential(self, X, y):
        """Progressive validation: predict each point, then learn its label."""
        X, y = check_stream(X, y)
        preds = []
        for xi, yi in zip(X, y):
            preds.append(self.predict_one(xi))
            self.learn_one(xi, yi)
        return preds


class NearestNeighborLearner(OnlineLearnerMixin, BaseEstimator):
    """1-nearest-neighbor rule with ties broken toward the oldest point.

    Parameters
    ----------
    space : ValueSpace, default=None
        Output space; only its ``default_label`` is used, returned while the
        history is empty.  ``None`` means binary.
    metric : callable, default=None
        Distance ``metric(a, b)``.  ``None`` uses Euclidean distance, with an
        ``O(log n)`` sorted index for scalar inputs.

    Examples
    --------
    >>> nn = NearestNeighborLearner()
    >>> nn.partial_fit([0.0, 1.0], [0, 1]).predict_one(0.5)
    0
    """

    def __init__(self, space: Optional[ValueSpace] = None, metric: Optional[Callable] = None):
        self.space = space
        self.metric = metric

    def _reset(self):
        self.labels_ = []
        self._points = []
        # scalar fast path: sorted distinct values and their first index
        self._sorted = []
        self._first = {}

    def _learn(self, x, y):
        self.labels_.append(y)
        self._points.append(x)
        if self.metric is None and is_exact_scalar(x) and x not in self._first:
            self._first[x] = len(self.labels_)
            bisect.insort(self._sorted, x)

    def representant(self, x) -> Optional[int]:
        """1-based index of the nearest past input (oldest on ties), or None."""
        self._ensure_state()
        x = check_input(x)
        if not self.labels_:
            return None
        if self.metric is None and is_exact_scalar(x):
            return self._scalar_representant(x)
        if self.metric is None:
            dist = np.linalg.norm(np.vstack(self._points) - x, axis=1)
            return int(np.argmin(dist)) + 1
        dist = [self.metric(x, p) for p in self._points]
        return int(np.argmin(dist)) + 1

    def _scalar_representant(self, x) -> int:
        hit = self._first.get(x)
        if hit is not None:
            return hit
        keys = self._sorted
        pos = bisect.bisect_left(keys, x)
        best_d, best_i = None, None
        # walk outward while the rounded distance stays equal: exact tie semantics
        j = pos - 1
        if j >= 0:
            d = abs(x - keys[j])
            best_d, best_i = d, self._first[keys[j]]
            j -= 1
            while j >= 0 and abs(x - keys[j]) == d:
                best_i = min(best_i, self._first[keys[j]])
                j -= 1
        j = pos
        if j < len(keys):
            d = abs(x - keys[j])
            if best_d is None or d < best_d:
                best_d, best_i = d, self._first[keys[j]]
            elif d == best_d:
                best_i = min(best_i, self._first[keys[j]])
            j += 1
            while j < len(keys) and abs(x - keys[j]) == d and d == best_d:
                best_i = min(best_i, self._first[keys[j]])
                j += 1
        return best_i

    def _predict(self, x):
        idx = self.representant(x)
        return self.space_.default_label if idx is None else self.labels_[idx - 1]


class MemorizationLearner(OnlineLearnerMixin, BaseEstimator):
    """Recall the label of an exactly repeated input, else the default label."""

    def __init__(self, space: Optional[ValueSpace] = None):
        self.space = space

    def _reset(self):
        self.labels_ = []
        self._first = {}

    def _learn(self, x, y):
        self.labels_.append(y)
        self._first.setdefault(input_key(x), len(self.labels_))

    def representant(self, x) -> Optional[int]:
        self._ensure_state()
        return self._first.get(input_key(check_input(x)))

    def _predict(self, x):
        idx = self.representant(x)
        return self.space_.default_label if idx is None else self.labels_[idx - 1]


class OracleLearner(OnlineLearnerMixin, BaseEstimator):
    """Test double that knows the target and errs on a prescribed schedule.

    At step ``t`` (1-based) it predicts ``label_map(target(x))``, or a label
    at maximal loss from it when the step is scheduled as an error.

    Inside a binary-to-countable reduction the enclosing stack assigns
    ``membership``, a mapping ``label -> bit`` describing the replica's
    random label subset; the oracle then predicts the subset-membership bit
    of the true label.  When the true label has no assigned bit yet the
    prediction is a fair coin, reported by ``predict_proba_one`` as 0.5.

    Parameters
    ----------
    target : callable
        The target function ``x -> label``.
    error_schedule : collection of int or callable, default=()
        Steps at which to err, or ``schedule(t, membership) -> bool``.
    space : ValueSpace, default=None
        Output space used to pick the erroneous label; ``None`` means binary.
    label_map : callable, default=None
        Applied to ``target(x)``; reductions use it to quantize labels.
    """

    label_aware = True

    def __init__(self, target=None, error_schedule=(), space=None, label_map=None):
        self.target = target
        self.error_schedule = error_schedule
        self.space = space
        self.label_map = label_map

    def _reset(self):
        if not hasattr(self, "membership"):
            self.membership = None

    def _learn(self, x, y):
        pass

    def true_label(self, x):
        y = self.target(x)
        return self.label_map(y) if self.label_map is not None else y

    def extra_candidates(self, x):
        return (self.true_label(check_input(x)),)

    def _errs(self, t):
        sched = self.error_schedule
        if callable(sched):
            return bool(sched(t, self.membership))
        return t in sched

    def predict_proba_one(self, x) -> float:
        self._ensure_state()
        x = check_input(x)
        if self.membership is None:
            return float(self._predict(x))
        bit = self.membership.get(self.true_label(x))
        if bit is None:
            return 0.5
        return float(1 - bit if self._errs(self.n_seen_ + 1) else bit)

    def _predict(self, x):
        y = self.true_label(x)
        if self.membership is not None:
            bit = self.membership.get(y)
            if bit is None:
                # unknown coin: only probabilistic predictions make sense here
                return 0
            return 1 - bit if self._errs(self.n_seen_ + 1) else bit
        if self._errs(self.n_seen_ + 1):
            return self.space_.farthest_label(y)
        return y


# functional constructors ------------------------------------------------------

def nn_predict(learner: NearestNeighborLearner, x):
    return learner.predict_one(x)


def memorization_predict(learner: MemorizationLearner, x):
    return learner.predict_one(x)


def oracle_learner(target, error_schedule=(), space=None) -> OracleLearner:
    return OracleLearner(target=target, error_schedule=error_schedule, space=space)
