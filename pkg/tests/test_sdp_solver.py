import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.instance import NonHomogeneousInstance, classical_value_bruteforce, make_instance, parse_instance
from artifact.sdp_solver import (
    MaxIterations,
    build_sdp,
    gram_vectors,
    sdp_value_certificate,
    solve_instance,
    solve_sdp,
)

from conftest import random_homogeneous


def test_build_sdp_triangle(tri3):
    sdp = build_sdp(tri3)
    assert sdp.lower_bound == pytest.approx(-0.5)
    x = np.full((3, 3), -0.5) + 1.5 * np.eye(3)
    # (2/3) sum (1 - X_ij) at X_ij = -1/2 is 3
    assert sdp.objective(x) == pytest.approx(3.0)
    assert sdp.objective(np.eye(3)) == pytest.approx(2.0)


def test_build_sdp_single_equation():
    sdp = build_sdp(parse_instance("lin2k 3 2\nE 1 2 1 0\n"))
    for x12 in (-0.5, 0.0, 0.7, 1.0):
        x = np.array([[1.0, x12], [x12, 1.0]])
        assert sdp.objective(x) == pytest.approx((1 + 2 * x12) / 3)


def test_build_sdp_rejects_shifts():
    with pytest.raises(NonHomogeneousInstance):
        build_sdp(parse_instance("lin2k 3 2\nE 1 2 1 1\n"))


def test_k2_bound_is_vacuous():
    assert build_sdp(parse_instance("lin2k 2 2\nI 1 2 1 0\n")).lower_bound == -1.0


def test_triangle_k3(tri3):
    sol = solve_instance(tri3, 1e-9)
    assert sol.converged
    assert sol.sdp_value == pytest.approx(3.0, abs=1e-5)
    off = sol.x[np.triu_indices(3, 1)]
    assert np.allclose(off, -0.5, atol=1e-6)


def _grid_triangle_k2(steps=720):
    # three planar unit vectors; fix the first at angle 0
    th = np.linspace(0, 2 * np.pi, steps, endpoint=False)
    a, b = np.meshgrid(th, th, indexing="ij")
    val = 0.5 * ((1 - np.cos(a)) + (1 - np.cos(b)) + (1 - np.cos(a - b)))
    return val.max()


def test_triangle_k2_matches_grid_search(tri2):
    sol = solve_instance(tri2, 1e-9)
    assert sol.sdp_value == pytest.approx(2.25, abs=1e-5)
    assert _grid_triangle_k2() == pytest.approx(2.25, abs=1e-4)


def test_single_inequation():
    sol = solve_instance(parse_instance("lin2k 3 2\nI 1 2 1 0\n"), 1e-9)
    assert sol.sdp_value == pytest.approx(1.0, abs=1e-6)
    assert sol.x[0, 1] == pytest.approx(-0.5, abs=1e-6)


def test_empty_instance_has_zero_value():
    sol = solve_instance(parse_instance("lin2k 3 3\n"))
    assert sol.sdp_value == pytest.approx(0.0, abs=1e-7)


def test_certificate_identity_and_violation(tri3):
    sdp = build_sdp(tri3)
    cert = sdp_value_certificate(np.eye(3), sdp)
    assert cert.diag_residual == 0 and cert.bound_residual == 0 and cert.psd_residual == 0
    assert cert.objective_from_x == pytest.approx(3 * 2 / 3)
    bad = np.eye(3)
    bad[0, 0] = 0.9
    assert sdp_value_certificate(bad, sdp).diag_residual == pytest.approx(0.1)


def test_certificate_of_solver_output(tri3):
    sdp = build_sdp(tri3)
    sol = solve_sdp(sdp, 1e-8)
    cert = sdp_value_certificate(sol, sdp)
    assert cert.feasible(1e-8)
    assert cert.value_gap <= 1e-9


def test_gram_vectors_reproduce_x(tri3):
    sol = solve_instance(tri3, 1e-9)
    assert np.allclose(np.linalg.norm(sol.vectors, axis=1), 1.0)
    assert np.abs(sol.lam - sol.x).max() < 1e-8


def test_gram_vectors_clip_small_negative_eigenvalues():
    x = np.array([[1.0, 1.0 + 1e-12], [1.0 + 1e-12, 1.0]])
    v = gram_vectors(x)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
    assert v[0] @ v[1] == pytest.approx(1.0)


def test_max_iterations_returns_best(tri3):
    with pytest.raises(MaxIterations) as err:
        solve_sdp(build_sdp(tri3), 1e-12, max_iter=3)
    assert not err.value.best.converged
    sol = solve_sdp(build_sdp(tri3), 1e-12, max_iter=3, raise_on_failure=False)
    assert not sol.converged and sol.iterations == 3


def _cvxpy_value(inst, strict=True):
    cp = pytest.importorskip("cvxpy")
    sdp = build_sdp(inst, strict)
    x = cp.Variable((inst.num_vars, inst.num_vars), symmetric=True)
    cons = [x >> 0, cp.diag(x) == 1]
    cons += [x[i, j] >= sdp.lower_bound for i, j in sdp.bounded_pairs]
    prob = cp.Problem(cp.Maximize(sdp.const + cp.sum(cp.multiply(sdp.coef, x))), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def test_matches_independent_conic_solver():
    rng = np.random.default_rng(11)
    for _ in range(12):
        inst = random_homogeneous(rng, n_max=7)
        for strict in (True, False):
            ours = solve_instance(inst, 1e-9, strict).sdp_value
            assert ours == pytest.approx(_cvxpy_value(inst, strict), abs=1e-6)


def test_relaxation_bounds_classical_optimum():
    rng = np.random.default_rng(3)
    for _ in range(25):
        inst = random_homogeneous(rng)
        assert solve_instance(inst, 1e-8).sdp_value >= classical_value_bruteforce(inst) - 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_permutation_and_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    inst = random_homogeneous(rng, n_max=5)
    base = solve_instance(inst, 1e-9).sdp_value
    perm = list(rng.permutation(inst.num_vars) + 1)
    assert solve_instance(inst.permuted(perm), 1e-9).sdp_value == pytest.approx(base, abs=1e-6)
    scaled = make_instance(inst.k, inst.num_vars, [(c.i, c.j, scale * c.w, 0, c.kind) for c in inst.constraints])
    assert solve_instance(scaled, 1e-9).sdp_value == pytest.approx(scale * base, abs=1e-6 * max(1.0, scale))
