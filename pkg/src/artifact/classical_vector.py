"""Relative angle of Gaussian projections of two complex vectors, and tracial-to-classical rounding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .instance import CspInstance, Kind, _values
from .relative_distribution import DEFAULT_BINS, AngularHistogram, DomainError
from .unitary_core import TWO_PI, haar_unitaries, sample_blocks

ARGMAX_TIE = 1e-12


def vector_rel_pdf(lam: complex, theta):
    """Density of arg(conj(<r, a>) <r, b>) for r standard complex Gaussian and <a, b> = lam."""
    lam = complex(lam)
    r = abs(lam)
    if r > 1.0 + 1e-12:
        raise DomainError("|lambda| must be at most 1")
    if r >= 1.0:
        raise DomainError("|lambda| = 1 is a point mass at arg(lambda); no density")
    theta = np.asarray(theta, dtype=float)
    u = r * np.cos(theta - np.angle(lam))
    root = np.sqrt(1.0 - u * u)
    return (1.0 - r * r) / (TWO_PI * root**2) * (u / root * np.arccos(-u) + 1.0)


def vector_rel_integral(lam: complex, fn=None) -> complex:
    """Adaptive quadrature of fn(theta) * pdf over [0, 2 pi); fn defaults to 1."""
    fn = fn or (lambda th: 1.0)
    re = integrate.quad(lambda th: np.real(fn(th) * vector_rel_pdf(lam, th)), 0.0, TWO_PI, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    im = integrate.quad(lambda th: np.imag(fn(th) * vector_rel_pdf(lam, th)), 0.0, TWO_PI, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    return complex(re, im)


def vector_rel_bin_masses(lam: complex, edges: np.ndarray) -> np.ndarray:
    return np.array(
        [integrate.quad(lambda th: vector_rel_pdf(lam, th), lo, hi, epsabs=1e-13)[0] for lo, hi in zip(edges[:-1], edges[1:])]
    )


@dataclass
class VectorRelEstimate:
    histogram: AngularHistogram
    first_moment: complex
    stderr: float
    samples: int


def vector_rel_mc(a, b, samples: int, seed=None, bins: int = DEFAULT_BINS, threads: int = 1) -> VectorRelEstimate:
    """theta = arg(conj(alpha) beta) with alpha = <r, a>, beta = <r, b> and r ~ CN(0, I)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")

    def block(rng, count):
        r = (rng.standard_normal((count, a.size)) + 1j * rng.standard_normal((count, a.size))) / np.sqrt(2.0)
        alpha = r.conj() @ a
        beta = r.conj() @ b
        return np.mod(np.angle(alpha.conj() * beta), TWO_PI)

    theta = np.concatenate(sample_blocks(block, samples, seed, threads, block=10_000))
    hist = AngularHistogram.empty(bins)
    hist.add(theta, np.ones_like(theta), samples)
    z = np.exp(1j * theta)
    stderr = float(np.sqrt(np.mean(np.abs(z - z.mean()) ** 2) / max(samples - 1, 1)))
    return VectorRelEstimate(hist, complex(z.mean()), stderr, samples)


# --------------------------------------------------------------------------- #
# tracial to classical rounding


def tracial_objective(inst: CspInstance, ops: Sequence[np.ndarray]) -> float:
    """Objective of order-k operators with P(x_j = omega^c x_i) = (1/k) sum_s omega^{-cs} tr(X_i^{-s} X_j^s)."""
    k = inst.k
    d = ops[0].shape[0]
    powers = [_powers(x, k) for x in ops]
    total = 0.0
    for con in inst.constraints:
        px, py = powers[con.i - 1], powers[con.j - 1]
        p_equal = sum(np.exp(-2j * np.pi * con.c * s / k) * np.vdot(px[s], py[s]) for s in range(k)).real / (k * d)
        total += con.w * (p_equal if con.kind is Kind.EQUATION else 1.0 - p_equal)
    return float(total)


def _powers(x: np.ndarray, k: int) -> np.ndarray:
    out = [np.eye(x.shape[0], dtype=complex)]
    for _ in range(k - 1):
        out.append(out[-1] @ x)
    return np.array(out)


@dataclass
class ExtractionResult:
    mean: float
    stderr: float
    tracial_value: float
    ratio: float
    samples: int
    assignments_sample: np.ndarray
    order_k_residual: float


def extract_assignment(pow_diag: np.ndarray, roots_exp: np.ndarray, k: int) -> np.ndarray:
    """argmax_t Re sum_s omega^{-ts} tr(R^{-s} X_i^s), ties to the smallest t.

    ``pow_diag[i, s, m]`` is (V^* X_i^s V)_{mm} and R = V diag(omega^{roots_exp}) V^*.
    """
    s = np.arange(k)
    om = np.exp(2j * np.pi / k)
    d = pow_diag.shape[-1]
    # tr(R^{-s} X^s) = (1/d) sum_m omega^{-s e_m} (V^* X^s V)_mm
    tr = np.einsum("ism,sm->is", pow_diag, om ** (-np.outer(s, roots_exp))) / d
    score = (tr[:, None, :] * om ** (-np.outer(s, s))[None, :, :]).sum(axis=-1).real
    best = score.max(axis=1, keepdims=True)
    return np.argmax(score >= best - ARGMAX_TIE, axis=1)


def classical_extraction_mc(
    ops: Sequence[np.ndarray],
    inst: CspInstance,
    samples: int,
    seed=None,
    threads: int = 1,
) -> ExtractionResult:
    """Round an order-k operator solution to a classical assignment with a random order-k R.

    R = V diag(omega^{e_m}) V^* with V Haar and independent uniform e_m.
    """
    k = inst.k
    ops = [np.asarray(x, dtype=complex) for x in ops]
    if len(ops) != inst.num_vars:
        raise ValueError(f"need {inst.num_vars} operators, got {len(ops)}")
    d = ops[0].shape[0]
    if d > 512:
        raise ValueError("operator dimension must be at most 512")
    residual = max(float(np.abs(np.linalg.matrix_power(x, k) - np.eye(d)).max()) for x in ops)
    if residual > 1e-8:
        raise ValueError(f"operators are not of order {k} (residual {residual:.2e})")
    powers = np.array([_powers(x, k) for x in ops])  # (N, k, d, d)

    def block(rng, count):
        vs = haar_unitaries(count, d, rng)
        exps = rng.integers(0, k, size=(count, d))
        out = np.zeros((count, inst.num_vars), dtype=np.int64)
        for idx in range(count):
            v = vs[idx]
            pow_diag = np.einsum("ma,isab,bm->ism", v.conj().T, powers, v)
            out[idx] = extract_assignment(pow_diag, exps[idx], k)
        return out

    assign = np.concatenate(sample_blocks(block, samples, seed, threads))
    vals = _values(inst, assign, smooth=False)
    trace_val = tracial_objective(inst, ops)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    ratio = mean / trace_val if trace_val > 0 else 1.0
    return ExtractionResult(mean, stderr, trace_val, ratio, samples, assign[: min(samples, 10)], residual)
