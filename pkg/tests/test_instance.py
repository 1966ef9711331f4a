import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.instance import (
    BudgetExceeded,
    InstanceError,
    Kind,
    classical_value_bruteforce,
    format_instance,
    instance_from_json,
    make_instance,
    objective_by_indicator,
    objective_of_assignment,
    parse_instance,
    smooth_constant,
)


def test_parse_triangle(tri3):
    assert tri3.k == 3 and tri3.num_vars == 3
    assert len(tri3.constraints) == 3
    assert all(c.kind is Kind.INEQUATION and c.c == 0 for c in tri3.constraints)
    assert tri3.is_homogeneous


def test_parse_single_equation():
    inst = parse_instance("lin2k 2 2\nE 1 2 5 0\n")
    (con,) = inst.constraints
    assert (con.i, con.j, con.w, con.c, con.kind) == (1, 2, 5.0, 0, Kind.EQUATION)


def test_reversed_pair_is_oriented():
    (con,) = parse_instance("lin2k 3 2\nI 2 1 1 1\n").constraints
    assert (con.i, con.j, con.w, con.c, con.kind) == (1, 2, 1.0, 2, Kind.INEQUATION)


def test_duplicates_merge_by_weight_only_for_identical_keys():
    inst = parse_instance("lin2k 3 2\nI 1 2 1 0\nI 2 1 2 0\nI 1 2 1 1\nE 1 2 1 0\n")
    weights = {(c.c, c.kind): c.w for c in inst.constraints}
    assert weights == {(0, Kind.INEQUATION): 3.0, (1, Kind.INEQUATION): 1.0, (0, Kind.EQUATION): 1.0}


def test_comments_and_blank_lines():
    inst = parse_instance(b"# header next\n\nlin2k 3 2  # k N\nI 1 2 1 0 # edge\n")
    assert len(inst.constraints) == 1


@pytest.mark.parametrize(
    "text, line",
    [
        ("lin2 3 2\n", 1),
        ("lin2k 3 2\nI 1 3 1 0\n", 2),
        ("lin2k 3 2\nI 1 2 -1 0\n", 2),
        ("lin2k 3 2\n\nI 1 2 1 3\n", 3),
        ("lin2k 3 2\nI 1 1 1 0\n", 2),
        ("lin2k 3 2\nX 1 2 1 0\n", 2),
        ("", 1),
    ],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(InstanceError) as err:
        parse_instance(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_smooth_constant():
    assert smooth_constant(3) == pytest.approx(3.0)
    for k in (2, 4, 6, 10):
        assert smooth_constant(k) == pytest.approx(4.0)
    # squared diameter of the root polygon, by brute force over pairs of roots
    for k in range(2, 12):
        roots = np.exp(2j * np.pi * np.arange(k) / k)
        assert smooth_constant(k) == pytest.approx(np.max(np.abs(roots[:, None] - roots[None, :]) ** 2))


def test_bruteforce_values(tri3, tri2):
    assert classical_value_bruteforce(tri3) == 3.0
    assert classical_value_bruteforce(tri2) == 2.0
    assert classical_value_bruteforce(parse_instance("lin2k 2 2\nE 1 2 5 0\n")) == 5.0


def test_objective_examples(tri3):
    assert objective_of_assignment(tri3, [0, 1, 2]) == 3.0
    single = parse_instance("lin2k 3 2\nI 1 2 1 0\n")
    assert objective_of_assignment(single, [0, 0], smooth=True) == pytest.approx(0.0)
    assert objective_of_assignment(single, [0, 1], smooth=True) == pytest.approx(1.0)


def test_assignment_length_checked(tri3):
    with pytest.raises(InstanceError):
        objective_of_assignment(tri3, [0, 1])


def test_budget_guard():
    inst = make_instance(10, 8, [(1, 2, 1.0, 0, "I")])
    with pytest.raises(BudgetExceeded):
        classical_value_bruteforce(inst)


def _bruteforce_full(inst, smooth=False):
    return max(
        objective_of_assignment(inst, a, smooth) for a in itertools.product(range(inst.k), repeat=inst.num_vars)
    )


@st.composite
def instances(draw, ks=(2, 3, 4, 5), max_n=4, homogeneous=False):
    k = draw(st.sampled_from(ks))
    n = draw(st.integers(2, max_n))
    pair = st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda p: p[0] != p[1])
    cons = draw(
        st.lists(
            st.tuples(
                pair,
                st.floats(0.0, 3.0),
                st.just(0) if homogeneous else st.integers(0, k - 1),
                st.sampled_from(["E", "I"]),
            ),
            max_size=8,
        )
    )
    return make_instance(k, n, [(i, j, w, c, kd) for (i, j), w, c, kd in cons])


@settings(max_examples=60, deadline=None)
@given(instances(), st.data())
def test_indicator_identity_matches_direct_count(inst, data):
    a = data.draw(st.lists(st.integers(0, inst.k - 1), min_size=inst.num_vars, max_size=inst.num_vars))
    assert objective_by_indicator(inst, a) == pytest.approx(objective_of_assignment(inst, a), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(instances(ks=(2, 3)), st.data())
def test_smooth_equals_standard_for_small_k(inst, data):
    a = data.draw(st.lists(st.integers(0, inst.k - 1), min_size=inst.num_vars, max_size=inst.num_vars))
    assert objective_of_assignment(inst, a, smooth=True) == pytest.approx(objective_of_assignment(inst, a), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(instances(), st.randoms(use_true_random=False))
def test_bruteforce_permutation_invariant_and_pinned(inst, rnd):
    perm = list(range(1, inst.num_vars + 1))
    rnd.shuffle(perm)
    val = classical_value_bruteforce(inst)
    assert classical_value_bruteforce(inst.permuted(perm)) == pytest.approx(val)
    assert val == pytest.approx(_bruteforce_full(inst))


@settings(max_examples=30, deadline=None)
@given(instances(homogeneous=True))
def test_all_equal_assignment_fails_every_inequation(inst):
    only_ineq = make_instance(inst.k, inst.num_vars, [(c.i, c.j, c.w, 0, "I") for c in inst.constraints])
    assert objective_of_assignment(only_ineq, [0] * inst.num_vars) == 0.0


@settings(max_examples=30, deadline=None)
@given(instances())
def test_text_and_json_round_trip(inst):
    assert parse_instance(format_instance(inst)) == inst
    assert instance_from_json(inst.to_json()) == inst
