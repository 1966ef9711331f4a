import numpy as np
import pytest

from artifact.gwb_group import (
    BudgetExceeded,
    GwbStructure,
    build_representation,
    enumerate_group,
    f_table,
    rep_of_word,
    strong_isometry_check,
    vector_to_unitary,
    verify_representation,
)

from conftest import unit


def test_f_table_examples():
    f = f_table(3, 3)
    assert f[0, 1, 0] == 1  # f_{1,2,0}
    assert f[0, 0, 0] == 0  # f_{1,1,0}
    # f_{2,1,t} = 1 through the case i >= j, t = -1, which is t = 1 only at k = 2
    assert f[1, 0, 2] == 1 and f[1, 0, 1] == 0
    assert f_table(3, 2)[1, 0, 1] == 1


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (3, 3), (4, 5), (5, 4)])
def test_f_table_symmetry(n, k):
    f = f_table(n, k)
    for t in range(k):
        assert np.array_equal(f[:, :, t], f[:, :, (-t) % k].T)
    assert np.all(np.diagonal(f[:, :, 0]) == 0)


def test_f_table_k2_diagonal_cancels():
    f = f_table(4, 2)
    assert np.all(np.diagonal(f[:, :, 1]) == 0)
    assert np.all(f[:, :, 1][~np.eye(3, dtype=bool)] == 1)


def _inclusive_table(n, k):
    m = n - 1
    f = np.zeros((m, m, k), dtype=np.int64)
    for i in range(m):
        for j in range(m):
            if i != j:
                f[i, j, 0] = 1
            if i <= j:
                f[i, j, 1 % k] = 1
            if i >= j:
                f[i, j, (-1) % k] = 1
    return f


def test_inclusive_k2_reading_breaks_centrality():
    g = GwbStructure(3, 2)
    g.f = _inclusive_table(3, 2)
    everything = g.all_elements()
    r = g.r_elements[0]
    left = g.encode(*g.multiply((r.b, r.s, r.alpha), everything))
    right = g.encode(*g.multiply(everything, (r.b, r.s, r.alpha)))
    assert not np.array_equal(left, right)


def test_action_examples():
    g = GwbStructure(2, 3)
    e = (np.int64(0), np.int64(0), np.int64(0))
    assert tuple(map(int, g.act_J(*e))) == (1, 0, 0)
    once = tuple(map(int, g.act_p(*e, 0)))
    assert once == (0, 0, 1 << g.pos(0, 0))
    twice = tuple(map(int, g.act_p(*once, 0)))
    assert twice == (1, 0, 0)


def test_word_multiplication_is_associative():
    g = GwbStructure(3, 3)
    rng = np.random.default_rng(0)
    elems = g.all_elements()
    idx = rng.integers(0, elems[0].size, size=(3, 200))
    a, b, c = ((elems[0][i], elems[1][i], elems[2][i]) for i in idx)
    lhs = g.multiply(g.multiply(a, b), c)
    rhs = g.multiply(a, g.multiply(b, c))
    assert np.array_equal(g.encode(*lhs), g.encode(*rhs))


@pytest.mark.parametrize(
    "n,k,order_g,order_gwb",
    [(2, 2, 16, 8), (2, 3, 48, 24), (2, 4, 128, 64), (3, 2, 64, 16), (3, 3, 384, 96), (4, 2, 256, 32)],
)
def test_group_orders(n, k, order_g, order_gwb):
    rep = enumerate_group(n, k)
    assert rep.order_g == rep.expected_order_g == order_g
    assert rep.order_quotient == rep.expected_order_quotient == order_gwb
    assert rep.ok, rep.failed_relators


def test_group_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_group(6, 6)


@pytest.mark.parametrize("n,k,dim", [(2, 2, 4), (2, 3, 12), (3, 3, 48), (2, 4, 32), (3, 2, 8)])
def test_representation_relations(n, k, dim):
    rep = build_representation(n, k)
    assert rep.dim == dim
    report = verify_representation(rep)
    assert report.worst() <= 1e-10


def test_k2_generators_are_hermitian_involutions():
    rep = build_representation(2, 2)
    for s in rep.sigma:
        assert np.allclose(s @ s, np.eye(4))
        assert np.allclose(s, s.conj().T)
    assert np.allclose(rep.sigma[0] @ rep.sigma[1], -rep.sigma[1] @ rep.sigma[0])


def test_relators_map_to_identity():
    rep = build_representation(3, 3)
    for name, word in rep.structure.relators():
        assert np.abs(rep_of_word(rep, word) - np.eye(rep.dim)).max() <= 1e-10, name


def test_representation_budget():
    with pytest.raises(BudgetExceeded):
        build_representation(4, 5)


def test_vector_to_unitary():
    rep = build_representation(2, 3)
    assert np.array_equal(vector_to_unitary(rep, [1.0, 0.0]), rep.sigma[0])
    u = vector_to_unitary(rep, np.array([1.0, 1.0]) / np.sqrt(2))
    assert np.abs(u.conj().T @ u - np.eye(rep.dim)).max() < 1e-9
    # a combination need not have order k
    assert np.abs(np.linalg.matrix_power(u, 3) - np.eye(rep.dim)).max() > 1e-3
    with pytest.raises(ValueError):
        vector_to_unitary(rep, [1.0, 1.0])


def test_strong_isometry_examples():
    rep = build_representation(2, 3)
    rng = np.random.default_rng(1)
    x = unit(rng, 2)
    assert strong_isometry_check(rep, x, x).max() < 1e-12
    y = np.array([-x[1], x[0]])
    ux, uy = vector_to_unitary(rep, x), vector_to_unitary(rep, y)
    assert abs(np.trace(ux.conj().T @ uy)) / rep.dim < 1e-12
    y = np.array([np.cos(2 * np.pi / 3), np.sin(2 * np.pi / 3)])
    x = np.array([1.0, 0.0])
    ux, uy = vector_to_unitary(rep, x), vector_to_unitary(rep, y)
    tr2 = np.trace(np.linalg.matrix_power(ux, 2).conj().T @ np.linalg.matrix_power(uy, 2)) / rep.dim
    assert tr2 == pytest.approx(0.25, abs=1e-9)


@pytest.mark.parametrize("n,k", [(2, 3), (3, 3), (2, 4), (3, 2)])
def test_strong_isometry_random_pairs(n, k):
    rep = build_representation(n, k)
    rng = np.random.default_rng(n * 10 + k)
    for _ in range(30):
        assert strong_isometry_check(rep, unit(rng, n), unit(rng, n)).max() <= 1e-9
