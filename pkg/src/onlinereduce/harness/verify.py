"""Self-contained property checks with fixed seeds.

Each check builds its own fixtures and returns ``(passed, detail)``.
``verify_suite(scope)`` runs the checks of one module (or all of them)
and reports every result with its anchor, a short name for the
statement being exercised.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction

from ..learners import MemorizationLearner, NearestNeighborLearner, OracleLearner
from ..processes import (DyadicPartition, IntervalUnion, Process, Threshold, closure_check,
                         dyadic_cell, dyadic_cell_bounds, mistake_vs_newcell_check, nn_mistakes,
                         smv_audit)
from ..reductions import (BinaryToCountable, GeneralToBinary, OneVsRestOnline, compose_full_stack)
from ..value_space import ValueSpace
from .config import ExperimentConfig
from .run import run_experiment, sweep

SCOPES = ("value_space", "learners", "reductions", "processes", "harness")


@dataclass(frozen=True)
class CheckResult:
    name: str
    scope: str
    anchor: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.scope}.{self.name}  [{self.anchor}]  {self.detail}"


_REGISTRY = []


def check(scope, anchor):
    def deco(fn):
        _REGISTRY.append((scope, fn.__name__, anchor, fn))
        return fn
    return deco


# value_space ----------------------------------------------------------------------

@check("value_space", "near-metric axioms")
def loss_axioms():
    spaces = [ValueSpace.binary(), ValueSpace.finite(4), ValueSpace.countable(),
              ValueSpace.real_interval(0, 1, "absolute"), ValueSpace.real_interval(0, 1, "squared")]
    rng = random.Random(0)
    n = 0
    for sp in spaces:
        pts = [sp.dense_point(i) for i in range(1, 12)]
        if sp.kind == "real_interval":
            pts += [rng.random() for _ in range(10)]
        for a in pts:
            for b in pts:
                if sp.loss(a, b) != sp.loss(b, a) or (sp.loss(a, b) == 0) != (a == b):
                    return False, f"{sp!r}: symmetry/discernibility at {a}, {b}"
                if sp.loss(a, b) > sp.ell_bar:
                    return False, f"{sp!r}: loss above ell_bar at {a}, {b}"
                for c in pts[:8]:
                    n += 1
                    if sp.loss(a, c) > sp.c_ell * (sp.loss(b, a) + sp.loss(b, c)) + 1e-15:
                        return False, f"{sp!r}: relaxed triangle at {a}, {b}, {c}"
    return True, f"{n} triples"


@check("value_space", "quantizer picks the least index within eps")
def quantizer_minimality():
    sp = ValueSpace.real_interval(0, 1)
    rng = random.Random(1)
    for _ in range(300):
        y, eps = rng.random(), 2.0 ** -rng.randint(1, 8)
        i = sp.quantize(eps, y)
        if not sp.loss(sp.dense_point(i), y) < eps:
            return False, f"quantize({eps}, {y}) = {i} is not within eps"
        if any(sp.loss(sp.dense_point(j), y) < eps for j in range(1, i)):
            return False, f"quantize({eps}, {y}) = {i} is not minimal"
    return True, "300 random labels"


@check("value_space", "ball regions partition the value space")
def ball_partition():
    for loss in ("absolute", "squared"):
        sp = ValueSpace.real_interval(0, 1, loss)
        for eps in (0.5, 0.25, 0.125):
            for n in range(0, 65):
                y = n / 64
                q = sp.quantize(eps, y)
                owners = [i for i in range(1, 2 * q + 64) if y in sp.ball_region(i, eps)]
                if owners != [q]:
                    return False, f"{loss} eps={eps}: {y} lies in regions {owners}"
    return True, "dyadic grid of 65 labels, 3 levels, 2 losses"


# learners -------------------------------------------------------------------------

@check("learners", "nearest neighbor ties go to the oldest point")
def nn_tie_rule():
    nn = NearestNeighborLearner()
    nn.partial_fit([1.0, -1.0, 3.0], [1, 0, 1])
    ok = nn.representant(0.0) == 1 and nn.predict_one(0.0) == 1 and nn.representant(2.0) == 1
    return ok, f"representant(0.0) = {nn.representant(0.0)}"


@check("learners", "memorization recalls exact repeats only")
def memorization_recall():
    m = MemorizationLearner()
    m.partial_fit([0.5, 0.25, 0.5], [1, 0, 0])
    ok = m.predict_one(0.5) == 1 and m.predict_one(0.3) == 0
    return ok, "first occurrence recalled"


# reductions ---------------------------------------------------------------------

def _label_trace(seed, T, n_labels):
    rng = random.Random(seed)
    xs = [rng.random() for _ in range(T)]
    return xs, [min(int(x * n_labels), n_labels - 1) for x in xs]


@check("reductions", "representant rules are transported unchanged")
def transport_equality():
    for seed in range(3):
        xs, ys = _label_trace(seed, 300, 6)
        stack = BinaryToCountable(NearestNeighborLearner(), mode="exact", m_max=8)
        native = NearestNeighborLearner(space=ValueSpace.countable())
        for t, (x, y) in enumerate(zip(xs, ys), start=1):
            a, b = stack.predict_one(x), native.predict_one(x)
            if a != b:
                return False, f"seed {seed} step {t}: stack {a} != native {b}"
            stack.learn_one(x, y)
            native.learn_one(x, y)
    return True, "3 seeds x 300 steps, exact match"


@check("reductions", "oracle discrimination: p(true) = 1, p(wrong) = 1/2")
def oracle_discrimination():
    xs, ys = _label_trace(7, 200, 6)
    target = {x: y for x, y in zip(xs, ys)}.__getitem__
    stack = BinaryToCountable(OracleLearner(target=target), mode="exact", m_max=8)
    for t, (x, y) in enumerate(zip(xs, ys), start=1):
        if stack.p_score(x, y) != 1.0:
            return False, f"step {t}: p(true) = {stack.p_score(x, y)}"
        for j in stack.labels_:
            if j != y and stack.p_score(x, j) != 0.5:
                return False, f"step {t}: p({j}) = {stack.p_score(x, j)}"
        if stack.predict_one(x) != y:
            return False, f"step {t}: wrong prediction"
        stack.learn_one(x, y)
    return True, "200 steps, exact"


@check("reductions", "Monte Carlo scores agree with exact enumeration")
def exact_mc_agreement():
    M = 4000
    tol = 4 * math.sqrt(0.25 / M)
    xs, ys = _label_trace(11, 120, 5)
    exact = BinaryToCountable(NearestNeighborLearner(), mode="exact", m_max=8)
    mc = BinaryToCountable(NearestNeighborLearner(), mode="mc", n_replicas=M, random_state=3)
    close = total = 0
    for t, (x, y) in enumerate(zip(xs, ys)):
        for i in sorted(set(ys[:t])):
            total += 1
            close += abs(exact.p_score(x, i) - mc.p_score(x, i)) <= tol
        exact.learn_one(x, y)
        mc.learn_one(x, y)
    frac = close / total
    return frac >= 0.99, f"{close}/{total} pairs within {tol:.3f}"


@check("reductions", "one-vs-rest errs only if some replica errs")
def ovr_union_bound():
    rng = random.Random(5)
    ovr = OneVsRestOnline(NearestNeighborLearner(), n_classes=4)
    for t in range(1, 501):
        x = rng.random()
        y = 1 + min(int(x * 4), 3)
        pred = ovr.predict_one(x)
        miss = sum(int(v != int(y == c)) for c, v in enumerate(ovr.replica_predictions(x), 1))
        if int(pred != y) > miss:
            return False, f"step {t}"
        ovr.learn_one(x, y)
    return True, "500 steps, k = 4"


@check("reductions", "binary mistake forces base loss of delta / (2 c_ell)")
def general_to_binary_gap():
    sp = ValueSpace.real_interval(0, 1, "squared")
    y0, y1 = 0.2, 0.8
    delta = sp.loss(y0, y1)
    rng = random.Random(2)
    wrapped = GeneralToBinary(NearestNeighborLearner(space=sp), space=sp, y0=y0, y1=y1)
    for t in range(1, 301):
        x = rng.random()
        b = int(x > 0.37)
        pred = wrapped.predict_one(x)
        base_pred = wrapped.estimator_.predict_one(x)
        if pred != b and sp.loss(base_pred, y1 if b else y0) < delta / (2 * sp.c_ell):
            return False, f"step {t}"
        wrapped.learn_one(x, b)
    return True, "300 steps, squared loss"


@check("reductions", "composed stack loss stays within 2 c_ell eps_K with a perfect base")
def full_stack_oracle():
    sp = ValueSpace.real_interval(0, 1)
    K = 5
    rng = random.Random(9)
    f = lambda x: [0.1, 0.45, 0.9][min(int(x * 3), 2)]  # noqa: E731
    stack = compose_full_stack(OracleLearner(target=f), sp, K=K, m_max=8)
    for t in range(1, 201):
        x = rng.random()
        loss = sp.loss(stack.predict_one(x), f(x))
        if loss > 2 * sp.c_ell * 2.0 ** -min(t, K):
            return False, f"step {t}: loss {loss}"
        stack.learn_one(x, f(x))
    return True, f"200 steps, K = {K}"


# processes ----------------------------------------------------------------------

@check("processes", "counterexample: an error at each step")
def counterexample_totality():
    trace = Process("deterministic_geometric", ratio="-1/3").sample(1000)
    miss = nn_mistakes(trace, IntervalUnion(((0, 1),)))
    ok = sum(miss[1:]) == 999
    return ok, f"{sum(miss)} mistakes in 1000 steps"


@check("processes", "dyadic cells partition the line")
def partition_totality():
    rng = random.Random(4)
    for _ in range(2000):
        a = rng.uniform(-2, 2)
        x = a + rng.choice([-1, 1]) * 2.0 ** rng.uniform(-30, 5) if rng.random() < 0.95 else a
        lo, hi, lc, hc = dyadic_cell_bounds(a, dyadic_cell(a, x))
        fx = Fraction(x)
        inside = (lo < fx or (lc and lo == fx)) and (fx < hi or (hc and fx == hi))
        if not inside:
            return False, f"a={a} x={x} not inside its cell"
    return True, "2000 random points"


@check("processes", "a mistake means a new partition cell")
def mistake_new_cell():
    reports = [mistake_vs_newcell_check(Process("deterministic_geometric").sample(2000), Threshold(0.0))]
    for seed in range(3):
        reports.append(mistake_vs_newcell_check(Process("iid_uniform", seed=seed).sample(2000),
                                                Threshold(0.5)))
    ok = all(r.bound_holds for r in reports)
    return ok, f"final mistakes {[r.mistakes[-1] for r in reports]}"


@check("processes", "consistency is stable by complement and finite union")
def closure_identities():
    targets = [IntervalUnion(((0.1, 0.2),)), IntervalUnion(((0.35, 0.6),)), IntervalUnion(((0.8, 0.95),))]
    bad = []
    for seed in range(3):
        bad += closure_check(Process("iid_uniform", seed=seed).sample(1000), targets).violations
    return not bad, f"{len(bad)} violations"


@check("processes", "sublinear visits of an iid process")
def smv_decreasing():
    trace = Process("iid_uniform", seed=0).sample(10_000)
    rows = smv_audit(trace, DyadicPartition(0.5), [100, 1000, 10_000])
    ratios = [r[2] for r in rows]
    return all(a > b for a, b in zip(ratios, ratios[1:])), f"ratios {ratios}"


# harness ------------------------------------------------------------------------

def _cfg(**kw):
    base = dict(horizon=500, seed=42, process={"kind": "iid_uniform"},
                target={"kind": "interval_union", "intervals": [[0.1, 0.3], [0.4, 0.55], [0.7, 0.9]]},
                learner={"base": "nn"})
    base.update(kw)
    return ExperimentConfig(**base)


@check("harness", "reproducible from the master seed")
def reproducibility():
    a, b = run_experiment(_cfg()).to_csv(), run_experiment(_cfg()).to_csv()
    return a == b, "byte-identical CSV" if a == b else "CSV differs"


@check("harness", "average loss is cumulative loss over T")
def checkpoint_exactness():
    curve = run_experiment(_cfg(), keep_log=True)
    for row in curve.rows:
        if math.fsum(curve.losses[:row.T]) / row.T != row.avg_loss:
            return False, f"T={row.T}"
    return True, f"{len(curve.rows)} checkpoints"


@check("harness", "sweep matches sequential runs")
def sweep_determinism():
    cfgs = [_cfg(seed=s, horizon=200) for s in (1, 2, 1)]
    seq = [c.to_csv() for c in sweep(cfgs, jobs=1)]
    par = [c.to_csv() for c in sweep(cfgs, jobs=2)]
    return seq == par and seq[0] == seq[2], "jobs=1 and jobs=2 agree"


# driver -------------------------------------------------------------------------

def verify_suite(scope: str = "all") -> list:
    """Run the checks of ``scope`` (a module name or ``"all"``)."""
    if scope != "all" and scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; choose from all, {', '.join(SCOPES)}")
    results = []
    for sc, name, anchor, fn in _REGISTRY:
        if scope not in ("all", sc):
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, sc, anchor, bool(passed), detail, time.perf_counter() - t0))
    return results
