import math
import random

import pytest
from sklearn.base import clone

from onlinereduce import (BinaryToCountable, CountableToGeneral, GeneralToBinary, NearestNeighborLearner,
                          OneVsRestOnline, OracleLearner, ValueSpace, compose_full_stack)
from onlinereduce.exceptions import CapacityError, InvalidInputError
from onlinereduce.reductions import (ball_bound_level, binary_to_countable_predict, binary_to_finitek_wrap,
                                     compute_p_exact, compute_p_mc, countable_to_general_wrap,
                                     general_to_binary_wrap, representant_shortcut_predict)

UNIT = ValueSpace.real_interval(0, 1)


def labelled_trace(seed, T, n_labels, offset=0):
    rng = random.Random(seed)
    xs = [rng.random() for _ in range(T)]
    return xs, [offset + min(int(x * n_labels), n_labels - 1) for x in xs]


def lookup(xs, ys):
    return dict(zip(xs, ys)).__getitem__


# general -> binary ----------------------------------------------------------------

def test_general_to_binary_decisions():
    g = general_to_binary_wrap(NearestNeighborLearner(space=UNIT), UNIT, 0.0, 1.0)
    assert g.predict_one(0.3) == 0  # base predicts the midpoint: tie goes to 0
    g.learn_one(0.0, 1)
    assert g.estimator_.predict_one(0.0) == 1.0 and g.predict_one(0.0) == 1
    g = GeneralToBinary(NearestNeighborLearner(space=UNIT), UNIT, 0.25, 0.75).partial_fit([0.0], [0])
    assert g.estimator_.predict_one(0.1) == 0.25 and g.predict_one(0.1) == 0


def test_general_to_binary_rejects_equal_labels():
    with pytest.raises(InvalidInputError):
        general_to_binary_wrap(NearestNeighborLearner(space=UNIT), UNIT, 0.5, 0.5)


def test_general_to_binary_maps_oracle_labels():
    g = GeneralToBinary(OracleLearner(target=lambda x: int(x > 0.5), space=UNIT), UNIT, 0.2, 0.9)
    assert g.predict_one(0.7) == 1 and g.predict_one(0.1) == 0


# one-vs-rest ----------------------------------------------------------------------

def test_ovr_all_zero_votes_predict_class_one():
    assert binary_to_finitek_wrap(NearestNeighborLearner(), 4).predict_one(0.5) == 1


def test_ovr_unique_vote():
    ovr = OneVsRestOnline(NearestNeighborLearner(), n_classes=4).partial_fit([0.5], [3])
    assert ovr.replica_predictions(0.5) == [0, 0, 1, 0]
    assert ovr.predict_one(0.5) == 3


def test_ovr_eventually_exact_on_clusters():
    centers = {1: 0.0, 2: 10.0, 3: 20.0, 4: 30.0}
    rng = random.Random(0)
    ovr = OneVsRestOnline(NearestNeighborLearner(), n_classes=4)
    losses = []
    for _ in range(400):
        y = rng.randint(1, 4)
        x = centers[y] + rng.uniform(-1, 1)
        losses.append(int(ovr.predict_one(x) != y))
        ovr.learn_one(x, y)
    assert sum(losses[50:]) == 0


def test_ovr_union_bound(rng):
    ovr = OneVsRestOnline(NearestNeighborLearner(), n_classes=4)
    for _ in range(500):
        x = rng.random()
        y = 1 + min(int(x * 4), 3)
        votes = ovr.replica_predictions(x)
        assert int(ovr.predict_one(x) != y) <= sum(int(v != int(y == c)) for c, v in enumerate(votes, 1))
        ovr.learn_one(x, y)


def test_ovr_n_classes_validated():
    with pytest.raises(InvalidInputError):
        OneVsRestOnline(NearestNeighborLearner(), n_classes=1).predict_one(0.0)


# binary -> countable ---------------------------------------------------------------

def test_p_exact_oracle_discrimination():
    xs, ys = labelled_trace(1, 60, 5, offset=3)
    stack = BinaryToCountable(OracleLearner(target=lookup(xs, ys)), m_max=8)
    for x, y in zip(xs, ys):
        assert compute_p_exact(stack, x, y) == 1.0
        assert all(compute_p_exact(stack, x, j) == 0.5 for j in stack.labels_ if j != y)
        assert binary_to_countable_predict(stack, x) == y
        stack.learn_one(x, y)


def test_p_exact_constant_base_is_half():
    stack = BinaryToCountable(NearestNeighborLearner())
    assert compute_p_exact(stack, 0.3, 4) == 0.5


def test_oracle_predicts_seen_label():
    stack = BinaryToCountable(OracleLearner(target=lambda x: 7)).partial_fit([0.1], [7])
    assert stack.predict_one(0.9) == 7


def test_empty_history_predicts_zero():
    assert BinaryToCountable(NearestNeighborLearner()).predict_one(0.2) == 0


def test_capacity_error():
    stack = BinaryToCountable(NearestNeighborLearner(), m_max=3)
    stack.partial_fit([0.1, 0.2, 0.3], [1, 2, 3])
    with pytest.raises(CapacityError):
        stack.learn_one(0.4, 4)


def test_countable_labels_validated():
    with pytest.raises(InvalidInputError):
        BinaryToCountable(NearestNeighborLearner()).learn_one(0.1, -2)


def test_mode_checks():
    with pytest.raises(InvalidInputError):
        compute_p_mc(BinaryToCountable(NearestNeighborLearner()), 0.1, 1)
    with pytest.raises(InvalidInputError):
        compute_p_exact(BinaryToCountable(NearestNeighborLearner(), mode="mc"), 0.1, 1)
    with pytest.raises(InvalidInputError):
        BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=0).predict_one(0.1)


def test_p_mc_oracle():
    xs, ys = [0.1, 0.6], [2, 5]
    stack = BinaryToCountable(OracleLearner(target=lookup(xs, ys)), mode="mc", n_replicas=10_000,
                              random_state=7).partial_fit(xs, ys)
    assert compute_p_mc(stack, 0.1, 2) == 1.0
    assert abs(compute_p_mc(stack, 0.1, 5) - 0.5) <= 0.015


def test_p_mc_single_replica_is_bernoulli():
    stack = BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=1).partial_fit([0.1], [3])
    assert compute_p_mc(stack, 0.1, 4) in (0.0, 1.0)


def test_mc_bits_independent_of_query_order():
    a = BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=64, random_state=5)
    b = clone(a)
    a.p_score(0.1, 9)
    a.partial_fit([0.1, 0.2], [3, 9])
    b.partial_fit([0.1, 0.2], [3, 9])
    assert [a.p_score(0.15, i) for i in (3, 9)] == [b.p_score(0.15, i) for i in (3, 9)]


def test_exact_mc_agreement_small():
    xs, ys = labelled_trace(2, 80, 4)
    exact = BinaryToCountable(NearestNeighborLearner())
    mc = BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=2000, random_state=1)
    tol = 4 * math.sqrt(0.25 / 2000)
    diffs = []
    for t, (x, y) in enumerate(zip(xs, ys)):
        diffs += [abs(exact.p_score(x, i) - mc.p_score(x, i)) for i in sorted(set(ys[:t]))]
        exact.learn_one(x, y)
        mc.learn_one(x, y)
    assert sum(d <= tol for d in diffs) >= 0.99 * len(diffs)


def _membership_schedule(trigger_labels):
    # err exactly when every trigger label is in the replica's subset
    def sched(t, membership):
        return all(membership.get(j) == 1 for j in trigger_labels)
    return sched


@pytest.mark.parametrize("triggers, e_expected", [((0,), 0.5), ((0, 1, 2), 0.125), ((0, 1, 2, 3), 0.0625)])
def test_error_rate_bound(triggers, e_expected):
    xs, ys = labelled_trace(3, 120, 5)
    f = lookup(xs, ys)
    stack = BinaryToCountable(OracleLearner(target=f, error_schedule=_membership_schedule(triggers)), m_max=8)
    stack.partial_fit(xs[:40], ys[:40])  # all 5 labels have been observed
    assert set(stack.labels_) == set(range(5))
    mistakes, err = 0, 0.0
    for x, y in zip(xs[40:], ys[40:]):
        e = stack.replica_error_rate(x, y)
        assert e == e_expected
        miss = int(stack.predict_one(x) != y)
        assert miss <= int(e >= 1 / 8)
        mistakes += miss
        err += e
        assert mistakes <= 8 * err
        stack.learn_one(x, y)


def test_representant_shortcut():
    nn = NearestNeighborLearner().partial_fit([0.0, 1.0], [0, 0])
    assert representant_shortcut_predict(nn, [5, 9], 0.2) == 5
    assert representant_shortcut_predict(NearestNeighborLearner(), [], 0.2) == 0


@pytest.mark.parametrize("seed", range(3))
def test_transport_equality(seed):
    xs, ys = labelled_trace(seed, 400, 6, offset=1)
    stack = BinaryToCountable(NearestNeighborLearner(), m_max=8)
    native = NearestNeighborLearner(space=ValueSpace.countable())
    shadow = NearestNeighborLearner()
    for t, (x, y) in enumerate(zip(xs, ys)):
        p = stack.predict_one(x)
        assert p == native.predict_one(x) == representant_shortcut_predict(shadow, ys[:t], x)
        stack.learn_one(x, y)
        native.learn_one(x, y)
        shadow.learn_one(x, 0)


# countable -> general ----------------------------------------------------------------

def test_single_level_is_quantized_predictor():
    base = BinaryToCountable(NearestNeighborLearner())
    g = countable_to_general_wrap(base, UNIT, 1)
    lvl = clone(base)
    rng = random.Random(4)
    for _ in range(100):
        x, y = rng.random(), rng.choice([0.1, 0.6, 0.95])
        i = lvl.predict_one(x)
        assert g.predict_one(x) == (UNIT.dense_point(i) if i else UNIT.default_label)
        g.learn_one(x, y)
        lvl.learn_one(x, UNIT.quantize(0.5, y))


def test_perfect_level_oracles_bound():
    f = lambda x: 0.1 + 0.8 * (x > 0.4) + 0.05 * (x > 0.8)  # noqa: E731
    K = 6
    g = CountableToGeneral(OracleLearner(target=f), space=UNIT, n_levels=K)
    rng = random.Random(5)
    for t in range(1, 200):
        x = rng.random()
        assert UNIT.loss(g.predict_one(x), f(x)) <= 2 * 2.0 ** -min(t, K)
        g.learn_one(x, f(x))


@pytest.mark.parametrize("loss", ["absolute", "squared"])
def test_full_stack_oracle_bound(loss):
    sp = ValueSpace.real_interval(0, 1, loss)
    f = lambda x: [0.1, 0.45, 0.9][min(int(x * 3), 2)]  # noqa: E731
    K = 5
    stack = compose_full_stack(OracleLearner(target=f), sp, K=K, m_max=8)
    rng = random.Random(6)
    for t in range(1, 150):
        x = rng.random()
        pred = stack.predict_one(x)
        assert sp.loss(pred, f(x)) <= 2 * sp.c_ell * 2.0 ** -min(t, K)
        k = ball_bound_level(sp, stack.last_indices_, f(x), stack.eps_)
        assert k == K
        stack.learn_one(x, f(x))


def test_full_stack_on_binary_space_is_nn():
    rng = random.Random(8)
    stack = compose_full_stack(NearestNeighborLearner(), ValueSpace.binary(), K=3)
    nn = NearestNeighborLearner()
    for _ in range(1000):
        x = rng.random()
        y = int(0.3 < x < 0.7)
        assert stack.predict_one(x) == nn.predict_one(x)
        stack.learn_one(x, y)
        nn.learn_one(x, y)


def test_levels_get_distinct_seeds():
    g = CountableToGeneral(BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=8,
                                             random_state=3), space=UNIT, n_levels=3)
    g.predict_one(0.1)
    seeds = {lvl.random_state for lvl in g.levels_}
    assert len(seeds) == 3


def test_custom_space_needs_approximation():
    sp = ValueSpace.custom(lambda a, b: abs(a - b), UNIT.dense_point, c_ell=1, ell_bar=1,
                           default_label=0.5)
    g = CountableToGeneral(OracleLearner(target=lambda x: 0.3), space=sp, n_levels=3,
                           allow_approximate=True, n_probe=256)
    g.partial_fit([0.1, 0.2], [0.3, 0.3])
    assert abs(g.predict_one(0.15) - 0.3) <= 2 * 2.0 ** -3
    assert g.approximate_


def test_general_rejects_unknown_output_rule():
    g = CountableToGeneral(NearestNeighborLearner(space=ValueSpace.countable()),
                           space=ValueSpace.real_interval(0, 1), output="middle")
    with pytest.raises(InvalidInputError):
        g.predict_one(0.3)
