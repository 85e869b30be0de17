from fractions import Fraction

import pytest

from onlinereduce.exceptions import EndOfTrace, InvalidInputError
from onlinereduce.processes import (DyadicCellLabel, DyadicPartition, GridPartition, IntervalUnion,
                                    Process, QuantizedStep, Threshold, cell_to_natural, closure_check,
                                    dyadic_cell, dyadic_cell_bounds, mistake_vs_newcell_check, next_input,
                                    nn_mistakes, parse_partition, read_trace, smv_audit)


def test_geometric_process():
    p = Process("deterministic_geometric", ratio="-1/3")
    assert next_input(p, 1) == Fraction(-1, 3) and next_input(p, 2) == Fraction(1, 9)
    assert p.next_input(2000) != 0


def test_fixed_sequence_exhausts():
    p = Process("fixed_sequence", points=[0.1, 0.2])
    assert p.sample(2) == [0.1, 0.2]
    with pytest.raises(EndOfTrace):
        p.next_input(3)


def test_iid_reproducible():
    a, b = Process("iid_uniform", seed=3), Process("iid_uniform", seed=3)
    assert a.next_input(1) == b.next_input(1)
    assert a.sample(5000) == b.sample(5000)
    assert Process("iid_uniform", seed=4).next_input(1) != a.next_input(1)


def test_iid_discrete_support():
    p = Process("iid_discrete", support=[1.0, 2.0], weights=[0, 1], seed=0)
    assert set(p.sample(100)) == {2.0}


def test_file_trace(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text("0.5\n\n-1e-3\n")
    assert read_trace(path) == [0.5, -0.001]
    assert Process("file_trace", path=str(path)).sample(2) == [0.5, -0.001]
    path.write_text("0.5\nabc\n")
    with pytest.raises(InvalidInputError):
        read_trace(path)


@pytest.mark.parametrize("kwargs", [
    {"kind": "brownian"}, {"kind": "iid_uniform", "lo": 1, "hi": 0},
    {"kind": "deterministic_geometric", "ratio": 2}, {"kind": "iid_discrete"},
    {"kind": "file_trace"},
])
def test_process_validation(kwargs):
    with pytest.raises(InvalidInputError):
        Process(**kwargs)


def test_targets():
    f = IntervalUnion(((0, 0.3), (0.6, 1)))
    assert [f(x) for x in (0.0, 0.3, 0.45, 0.6, 1.0, 1.1)] == [1, 1, 0, 1, 1, 0]
    g = IntervalUnion(((0, 1),), closed=((False, True),))
    assert g(0.0) == 0 and g(1.0) == 1
    assert Threshold(0.0)(0.0) == 0 and Threshold(0.0, closed=True)(0.0) == 1
    q = QuantizedStep((0.5,), (2, 7))
    assert q(0.4) == 2 and q(0.5) == 7
    assert DyadicCellLabel(0.0)(0.0) == 0


def test_interval_union_rejects_overlap():
    with pytest.raises(InvalidInputError):
        IntervalUnion(((0, 0.5), (0.4, 1)))
    with pytest.raises(InvalidInputError):
        IntervalUnion(((0, 0.5), (0.5, 1)))
    IntervalUnion(((0, 0.5), (0.5, 1)), closed=((True, False), (True, True)))


def test_dyadic_cell_examples():
    assert dyadic_cell(0, 0) == ("center", 0)
    assert dyadic_cell(0, 1.5) == ("right", 0)
    assert dyadic_cell(0, -0.3) == ("left", -2)
    assert dyadic_cell_bounds(0, ("left", -2)) == (Fraction(-1, 2), Fraction(-1, 4), False, True)
    assert dyadic_cell(0, 1.0) == ("right", 0) and dyadic_cell(0, -0.25) == ("left", -2)


def test_dyadic_cells_distinct_for_tiny_points():
    cells = {dyadic_cell(0, Fraction(-1, 3) ** t) for t in range(1, 3000)}
    assert len(cells) == 2999


def test_cell_to_natural_injective():
    cells = [("center", 0)] + [(s, i) for s in ("left", "right") for i in range(-50, 50)]
    assert len({cell_to_natural(c) for c in cells}) == len(cells)


def test_partitions():
    assert parse_partition("dyadic:0.5") == DyadicPartition(0.5)
    assert parse_partition("grid:0.1").cell(0.25) == 2
    assert GridPartition(1.0).cell(-0.5) == -1
    for bad in ("dyadic:x", "grid:0", "voronoi"):
        with pytest.raises(InvalidInputError):
            parse_partition(bad)


def test_smv_audit_examples():
    assert smv_audit([0.5] * 100, GridPartition(0.1), [100]) == [(100, 1, 0.01)]
    fresh = [float(t) for t in range(100)]
    assert smv_audit(fresh, GridPartition(1.0), [100]) == [(100, 100, 1.0)]
    trace = Process("iid_uniform", seed=1).sample(10_000)
    ratios = [r for _, _, r in smv_audit(trace, DyadicPartition(0.5), [100, 1000, 10_000])]
    assert ratios[0] > ratios[1] > ratios[2]


def test_smv_audit_rejects_bad_checkpoints():
    with pytest.raises(InvalidInputError):
        smv_audit([0.1, 0.2], GridPartition(1.0), [3])


def test_counterexample_every_step_wrong():
    trace = Process("deterministic_geometric").sample(1000)
    miss = nn_mistakes(trace, IntervalUnion(((0, 1),)))
    assert sum(miss[1:]) == 999


def test_mistake_vs_newcell_geometric():
    rep = mistake_vs_newcell_check(Process("deterministic_geometric").sample(20), Threshold(0.0))
    assert rep.bound_holds
    assert rep.mistakes[-1] >= 19 and rep.new_cells[-1] == 20


def test_mistake_vs_newcell_single_cell():
    trace = [0.3] + [0.6 + 0.001 * k for k in range(200)]
    rep = mistake_vs_newcell_check(trace, Threshold(0.5))
    assert rep.bound_holds and rep.mistakes[-1] <= 2


@pytest.mark.parametrize("seed", range(3))
def test_mistake_vs_newcell_iid(seed):
    rep = mistake_vs_newcell_check(Process("iid_uniform", seed=seed).sample(10_000), Threshold(0.37))
    assert rep.bound_holds


def test_mistake_vs_newcell_needs_threshold():
    with pytest.raises(InvalidInputError):
        mistake_vs_newcell_check([0.1], IntervalUnion(((0, 1),)))


def test_closure_check():
    trace = Process("iid_uniform", seed=0).sample(1000)
    assert closure_check(trace, [IntervalUnion(((0, 0.5),)), IntervalUnion(((0.7, 0.8),))]).ok
    assert closure_check(trace, [IntervalUnion(((0, 0.3),)), IntervalUnion(((0.6, 1),))]).ok
    with pytest.raises(InvalidInputError):
        closure_check(trace, [IntervalUnion(((0, 0.3),))])
