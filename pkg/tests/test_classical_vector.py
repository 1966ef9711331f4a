import numpy as np
import pytest
from scipy import integrate

from artifact.classical_vector import (
    classical_extraction_mc,
    extract_assignment,
    tracial_objective,
    vector_rel_bin_masses,
    vector_rel_integral,
    vector_rel_mc,
    vector_rel_pdf,
)
from artifact.gwb_group import build_representation, vector_to_unitary
from artifact.instance import classical_value_bruteforce, objective_of_assignment, parse_instance
from artifact.relative_distribution import DomainError
from artifact.sdp_solver import solve_instance
from artifact.unitary_core import round_matrix

EDGES = np.linspace(0, 2 * np.pi, 65)


def _pair(lam):
    return np.array([1.0, 0.0], dtype=complex), np.array([lam, np.sqrt(1 - abs(lam) ** 2)], dtype=complex)


@pytest.mark.parametrize("lam", [0.0, 0.5, 0.9, 0.7j, -0.3 + 0.4j])
def test_pdf_integrates_to_one(lam):
    assert abs(vector_rel_integral(lam) - 1.0) < 1e-8
    assert np.all(vector_rel_pdf(lam, np.linspace(0, 2 * np.pi, 50)) > 0)


def test_pdf_at_zero_is_uniform():
    assert np.allclose(vector_rel_pdf(0.0, np.linspace(0, 6, 20)), 1 / (2 * np.pi))


def test_pdf_domain():
    with pytest.raises(DomainError):
        vector_rel_pdf(1.0, 0.0)
    with pytest.raises(DomainError):
        vector_rel_pdf(1.3, 0.0)


def test_pdf_against_two_dimensional_quadrature():
    # arg(conj(alpha) beta) for a complex Gaussian pair with correlation lam, by direct integration
    # over |alpha|, |beta| and the relative phase of the bivariate normal density
    lam = 0.6

    def joint(phi, r1, r2):
        z = r1 * r2 * lam * np.cos(phi)
        return r1 * r2 / (np.pi**2 * (1 - lam**2)) * np.exp(-(r1**2 + r2**2 - 2 * z) / (1 - lam**2)) * 2 * np.pi

    for phi in (0.0, 1.0, 2.5):
        val = integrate.dblquad(lambda r2, r1: joint(phi, r1, r2), 0, 8, 0, 8, epsabs=1e-11)[0]
        assert val == pytest.approx(float(vector_rel_pdf(lam, phi)), rel=1e-6)


@pytest.mark.parametrize("lam", [0.0, 0.5, 0.9])
def test_mc_histogram_matches_pdf(lam):
    a, b = _pair(lam)
    est = vector_rel_mc(a, b, 10**5, seed=1, threads=2)
    assert est.histogram.rebinned(64).tv_distance(vector_rel_bin_masses(lam, EDGES)) < 0.02
    moment = vector_rel_integral(lam, lambda th: np.exp(1j * th))
    assert abs(est.first_moment - moment) < 4 * est.stderr + 1e-12


def test_mc_thread_invariance():
    a, b = _pair(0.3)
    one = vector_rel_mc(a, b, 30000, seed=5, threads=1)
    many = vector_rel_mc(a, b, 30000, seed=5, threads=4)
    assert np.array_equal(one.histogram.masses, many.histogram.masses)


def test_scalar_operators_recover_assignment(tri3):
    om = np.exp(2j * np.pi / 3)
    assignment = [0, 1, 2]
    # one-dimensional operators: larger scalar blocks can tie between roots
    ops = [np.eye(1) * om**a for a in assignment]
    assert tracial_objective(tri3, ops) == pytest.approx(objective_of_assignment(tri3, assignment))
    res = classical_extraction_mc(ops, tri3, 50, seed=0)
    assert res.mean == pytest.approx(3.0)
    for row in res.assignments_sample:
        # up to a global shift
        assert len({(a - r) % 3 for a, r in zip(assignment, row)}) == 1


def test_extract_assignment_tie_breaks_to_smallest():
    pow_diag = np.ones((1, 3, 2), dtype=complex)
    roots = np.array([0, 0])
    assert extract_assignment(pow_diag, roots, 3).tolist() == [0]


def test_classical_extraction_on_triangle_k2(tri2):
    sol = solve_instance(tri2)
    rep = build_representation(3, 2)
    ops = [round_matrix(vector_to_unitary(rep, x), 2) for x in sol.vectors]
    res = classical_extraction_mc(ops, tri2, 3000, seed=2, threads=2)
    assert res.order_k_residual < 1e-10
    assert res.mean <= classical_value_bruteforce(tri2) + 1e-12
    assert res.ratio >= 0.87 - 3 * res.stderr / res.tracial_value


def test_shifted_tracial_objective():
    inst = parse_instance("lin2k 3 2\nE 1 2 1 1\n")
    om = np.exp(2j * np.pi / 3)
    assert tracial_objective(inst, [np.eye(3), om * np.eye(3)]) == pytest.approx(1.0)
    assert tracial_objective(inst, [np.eye(3), np.eye(3)]) == pytest.approx(0.0, abs=1e-12)


def test_extraction_rejects_bad_operators(tri3):
    with pytest.raises(ValueError):
        classical_extraction_mc([np.eye(2)] * 2, tri3, 10)
    with pytest.raises(ValueError):
        classical_extraction_mc([np.diag([1, 1j])] * 3, tri3, 10)
