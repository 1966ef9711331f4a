"""SDP vectors to rounded order-k unitaries, with expected objective values.

Three routes are offered for homogeneous instances:

* ``analytic``: the large-dimension Haar rounding, evaluated through the
  Cauchy integral of the cut fidelity at each pair correlation.
* ``gwb``: the finite GWB representation with a uniformly random global
  phase, evaluated exactly through the weight measure of each pair.
* ``gwb-mc``: the same rounding sampled and scored on the actual matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fidelity_ratios import DiagonalPolynomial, cut_integral, fid_closed_form, smooth_integral
from .gwb_group import GwbRep, vector_to_unitary
from .instance import CspInstance, Kind, NonHomogeneousInstance, smooth_constant
from .sdp_solver import GramSolution
from .unitary_core import (
    TWO_PI,
    round_matrix,
    sample_blocks,
    spectral_decompose,
    weight_atoms,
)

GRAM_TOL = 1e-6


class InfeasibleGram(ValueError):
    pass


class OutsideHull(ValueError):
    pass


@dataclass
class RoundingRun:
    method: str
    expected_value: float
    contributions: list[float]
    lam: dict[tuple[int, int], complex]
    stderr: float = 0.0
    samples: int = 0
    extras: dict = field(default_factory=dict)


def _check_gram(inst: CspInstance, vectors: np.ndarray) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[0] != inst.num_vars:
        raise InfeasibleGram(f"need {inst.num_vars} Gram vectors, got shape {v.shape}")
    if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > GRAM_TOL):
        raise InfeasibleGram("Gram vectors must have unit norm")
    return v


def _vectors_of(gram: GramSolution | np.ndarray) -> np.ndarray:
    return gram.vectors if isinstance(gram, GramSolution) else np.asarray(gram, dtype=float)


def _require_homogeneous(inst: CspInstance) -> None:
    if not inst.is_homogeneous:
        raise NonHomogeneousInstance("rounding analysis is for homogeneous instances")


def _edge_value(kind: Kind, w: float, p_equal: float) -> float:
    return w * p_equal if kind is Kind.EQUATION else w * (1.0 - p_equal)


def expected_value_analytic(inst: CspInstance, gram: GramSolution | np.ndarray) -> RoundingRun:
    """Each pair is satisfied as an equation with probability cut_integral(k, lambda_ij)."""
    _require_homogeneous(inst)
    v = _check_gram(inst, _vectors_of(gram))
    lam_lb = -1.0 / (inst.k - 1)
    contrib, lams = [], {}
    for con in inst.constraints:
        lam = float(np.clip(v[con.i - 1] @ v[con.j - 1], -1.0, 1.0))
        if lam < lam_lb - GRAM_TOL:
            raise InfeasibleGram(f"<x_{con.i}, x_{con.j}> = {lam} is below {lam_lb}")
        lams[(con.i, con.j)] = lam
        contrib.append(_edge_value(con.kind, con.w, float(cut_integral(inst.k, lam))))
    return RoundingRun("analytic", float(np.sum(contrib)), contrib, lams)


def _unitaries(inst: CspInstance, v: np.ndarray, rep: GwbRep) -> list[np.ndarray]:
    if rep.k != inst.k:
        raise ValueError(f"representation has k = {rep.k}, instance has k = {inst.k}")
    if rep.n != v.shape[1]:
        raise ValueError(f"representation has n = {rep.n} generators, vectors have length {v.shape[1]}")
    return [vector_to_unitary(rep, x) for x in v]


def gwb_pair_measure(ux: np.ndarray, uy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weight-measure atoms (theta, mass) of a pair of unitaries."""
    return weight_atoms(spectral_decompose(ux), spectral_decompose(uy))


def expected_value_gwb_exact(inst: CspInstance, gram: GramSolution | np.ndarray, rep: GwbRep) -> RoundingRun:
    """Phase-averaged rounding on U_{x_i}: each pair scores sum_atoms mass * fid_k(theta)."""
    _require_homogeneous(inst)
    v = _check_gram(inst, _vectors_of(gram))
    us = _unitaries(inst, v, rep)
    spectra = [spectral_decompose(u) for u in us]
    poly = DiagonalPolynomial.cut(inst.k)
    contrib, lams, moments = [], {}, {}
    for con in inst.constraints:
        th, ms = weight_atoms(spectra[con.i - 1], spectra[con.j - 1])
        p_equal = float(np.sum(ms * fid_closed_form(poly, th).real))
        lams[(con.i, con.j)] = float(v[con.i - 1] @ v[con.j - 1])
        moments[(con.i, con.j)] = {
            n: complex(np.sum(ms * np.exp(1j * n * th))) for n in range(-(inst.k - 1), inst.k)
        }
        contrib.append(_edge_value(con.kind, con.w, p_equal))
    return RoundingRun("gwb", float(np.sum(contrib)), contrib, lams, extras={"moments": moments})


def _trace_objective(inst: CspInstance, rounded: Sequence[np.ndarray]) -> float:
    """Tracial objective with P(equal) = (1/k) sum_s tr((X_i^s)^* X_j^s)."""
    k = inst.k
    d = rounded[0].shape[0]
    powers = []
    for x in rounded:
        stack = [np.eye(d, dtype=complex)]
        for _ in range(k - 1):
            stack.append(stack[-1] @ x)
        powers.append(stack)
    total = 0.0
    for con in inst.constraints:
        px, py = powers[con.i - 1], powers[con.j - 1]
        p_equal = sum(np.vdot(px[s], py[s]).real for s in range(k)) / (k * d)
        total += _edge_value(con.kind, con.w, p_equal)
    return total


def expected_value_gwb_mc(
    inst: CspInstance,
    gram: GramSolution | np.ndarray,
    rep: GwbRep,
    samples: int,
    seed=None,
    threads: int = 1,
) -> RoundingRun:
    """Sample zeta on the circle, round zeta U_{x_i} to order k, score the rounded matrices."""
    _require_homogeneous(inst)
    v = _check_gram(inst, _vectors_of(gram))
    us = _unitaries(inst, v, rep)
    k = inst.k

    def block(rng, count):
        vals, worst = [], 0.0
        for zeta_phase in rng.uniform(0.0, TWO_PI, count):
            zeta = np.exp(1j * zeta_phase)
            rounded = [round_matrix(zeta * u, k) for u in us]
            for x in rounded:
                worst = max(worst, float(np.abs(np.linalg.matrix_power(x, k) - np.eye(x.shape[0])).max()))
            vals.append(_trace_objective(inst, rounded))
        return np.array(vals), worst

    parts = sample_blocks(block, samples, seed, threads)
    vals = np.concatenate([p[0] for p in parts])
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    lams = {(con.i, con.j): float(v[con.i - 1] @ v[con.j - 1]) for con in inst.constraints}
    return RoundingRun(
        "gwb-mc", mean, [], lams, stderr=stderr, samples=samples,
        extras={"order_k_residual": max(p[1] for p in parts)},
    )


# --------------------------------------------------------------------------- #
# smooth instances


def in_root_hull(lam: complex, k: int, tol: float = 1e-9) -> bool:
    """lambda lies in the convex hull of the k-th roots of unity."""
    normals = np.exp(1j * np.pi * (2 * np.arange(k) + 1) / k)
    return bool(np.all((lam * normals.conj()).real <= np.cos(np.pi / k) + tol))


def lam_from_unitaries(mats: Sequence[np.ndarray]) -> dict[tuple[int, int], complex]:
    d = mats[0].shape[0]
    return {
        (i + 1, j + 1): complex(np.vdot(mats[i], mats[j]) / d)
        for i in range(len(mats))
        for j in range(i + 1, len(mats))
    }


def _reduced_lam(inst: CspInstance, lam) -> list[complex]:
    out = []
    for con in inst.constraints:
        if isinstance(lam, dict):
            val = complex(lam[(con.i, con.j)])
        else:
            val = complex(np.asarray(lam)[con.i - 1, con.j - 1])
        if not in_root_hull(val, inst.k):
            raise OutsideHull(f"lambda_{con.i}{con.j} = {val} is outside the root polygon")
        # X_j -> omega^{-c} X_j turns the constraint homogeneous
        out.append(val * np.exp(-2j * np.pi * con.c / inst.k))
    return out


def smooth_unitary_objective(inst: CspInstance, lam) -> float:
    """Smooth objective of the unitary solution: 1 - |X_j - omega^c X_i|^2 / a_k per equation."""
    a_k = smooth_constant(inst.k)
    total = 0.0
    for con, val in zip(inst.constraints, _reduced_lam(inst, lam)):
        dist = (2.0 - 2.0 * val.real) / a_k
        total += con.w * (1.0 - dist if con.kind is Kind.EQUATION else dist)
    return total


def expected_value_smooth(inst: CspInstance, lam) -> RoundingRun:
    """Expected smooth objective after Haar rounding, from pair correlations in the root polygon."""
    a_k = smooth_constant(inst.k)
    contrib, lams = [], {}
    for con, val in zip(inst.constraints, _reduced_lam(inst, lam)):
        si = smooth_integral(inst.k, val)
        lams[(con.i, con.j)] = val
        if con.kind is Kind.EQUATION:
            contrib.append(con.w * (1.0 - 2.0 / a_k + si / a_k))
        else:
            contrib.append(con.w * (2.0 / a_k - si / a_k))
    return RoundingRun("smooth", float(np.sum(contrib)), contrib, lams)
