"""Unitary matrices: Haar sampling, spectral data, order-k rounding, weight measures."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np
from scipy.linalg import schur

TWO_PI = 2 * np.pi
DEFAULT_BLOCK = 250

T = TypeVar("T")


class NotUnitary(ValueError):
    pass


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for worker/sample block ``index`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def root_seed(seed) -> int:
    """Integer root for stream splitting; a Generator contributes one draw."""
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(2**63))
    if seed is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    return int(seed)


def sample_blocks(
    fn: Callable[[np.random.Generator, int], T],
    samples: int,
    seed,
    threads: int = 1,
    block: int = DEFAULT_BLOCK,
) -> list[T]:
    """Run ``fn(rng, count)`` over fixed blocks of the sample range.

    Block b always draws from ``stream(root, b)`` and results come back in
    block order, so the outcome does not depend on ``threads``.
    """
    root = root_seed(seed)
    sizes = [min(block, samples - start) for start in range(0, samples, block)]
    jobs = [(stream(root, b), m) for b, m in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [fn(rng, m) for rng, m in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def haar_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-distributed d x d unitary: QR of a Ginibre matrix with R's diagonal made positive."""
    rng = as_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_unitaries(count: int, d: int, seed=None) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape (count, d, d)."""
    rng = as_rng(seed)
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2))


@dataclass(frozen=True)
class SpectralUnitary:
    """U = sum_s e^{i phases[s]} projections[s], phases ascending in [0, 2 pi)."""

    u: np.ndarray
    phases: np.ndarray
    projections: tuple[np.ndarray, ...]
    vectors: np.ndarray  # orthonormal eigenvectors, columns
    vector_cluster: np.ndarray  # cluster index of each column

    @property
    def dim(self) -> int:
        return self.u.shape[0]


def spectral_decompose(u: np.ndarray, cluster_tol: float = 1e-8) -> SpectralUnitary:
    u = np.asarray(u, dtype=complex)
    if unitarity_residual(u) > 1e-8:
        raise NotUnitary("matrix is not unitary to 1e-8")
    t, z = schur(u, output="complex")
    off = t - np.diag(np.diagonal(t))
    if np.linalg.norm(off) > 1e-7:
        raise NotUnitary(f"Schur form is not diagonal (residual {np.linalg.norm(off):.2e})")
    ev = np.diagonal(t)
    ev = ev / np.abs(ev)
    ph = np.mod(np.angle(ev), TWO_PI)
    order = np.argsort(ph)
    ph, z = ph[order], z[:, order]
    labels = np.zeros(len(ph), dtype=np.int64)
    reps = [ph[0]]
    for idx in range(1, len(ph)):
        if ph[idx] - ph[idx - 1] > cluster_tol:
            reps.append(ph[idx])
        labels[idx] = len(reps) - 1
    # wrap-around: a cluster straddling 0 and 2 pi is one eigenspace
    if len(reps) > 1 and TWO_PI - ph[-1] + ph[0] <= cluster_tol:
        labels[labels == len(reps) - 1] = 0
        reps.pop()
    phases = np.array(
        [np.mod(np.angle(np.mean(np.exp(1j * ph[labels == c]))), TWO_PI) for c in range(len(reps))]
    )
    projs = tuple(z[:, labels == c] @ z[:, labels == c].conj().T for c in range(len(reps)))
    return SpectralUnitary(u, phases, projs, z, labels)


def nearest_root_index(phase, k: int):
    """Index t of the k-th root nearest e^{i phase}; midpoints round counterclockwise."""
    return np.floor(np.asarray(phase) * k / TWO_PI + 0.5).astype(np.int64) % k


def round_to_order_k(spec: SpectralUnitary, k: int) -> np.ndarray:
    """Closest order-k unitary: each eigenphase snapped to the nearest k-th root."""
    idx = nearest_root_index(spec.phases, k)
    roots = np.exp(2j * np.pi * idx / k)
    d = spec.dim
    out = np.zeros((d, d), dtype=complex)
    for root, proj in zip(roots, spec.projections):
        out += root * proj
    return out


def round_matrix(u: np.ndarray, k: int) -> np.ndarray:
    return round_to_order_k(spectral_decompose(u), k)


@dataclass(frozen=True)
class WeightMeasure:
    thetas: np.ndarray
    masses: np.ndarray

    def characteristic(self, n: int) -> complex:
        return complex(np.sum(self.masses * np.exp(1j * n * self.thetas)))

    def expectation(self, fn) -> complex:
        return complex(np.sum(self.masses * fn(self.thetas)))


def merge_atoms(
    thetas: np.ndarray, masses: np.ndarray, tol: float = 1e-9, mass_floor: float = 1e-14
) -> WeightMeasure:
    """Merge atoms closer than ``tol`` (cyclically) and drop round-off masses below ``mass_floor``."""
    keep = masses > mass_floor
    thetas, masses = thetas[keep], masses[keep]
    thetas = np.mod(thetas, TWO_PI)
    thetas = np.where(TWO_PI - thetas <= tol, 0.0, thetas)
    order = np.argsort(thetas)
    th, ms = thetas[order], masses[order]
    keep_t, keep_m = [], []
    for t, m in zip(th, ms):
        if keep_t and t - keep_t[-1] <= tol:
            keep_m[-1] += m
        else:
            keep_t.append(t)
            keep_m.append(m)
    return WeightMeasure(np.array(keep_t), np.array(keep_m))


def weight_atoms(a: SpectralUnitary, b: SpectralUnitary) -> tuple[np.ndarray, np.ndarray]:
    """Unmerged atoms: one per pair of eigenvectors, mass |<v_s, w_t>|^2 / d."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    ov = np.abs(a.vectors.conj().T @ b.vectors) ** 2 / a.dim
    pa = a.phases[a.vector_cluster]
    pb = b.phases[b.vector_cluster]
    th = np.mod(pb[None, :] - pa[:, None], TWO_PI)
    return th.ravel(), ov.ravel()


def weight_measure(a: SpectralUnitary, b: SpectralUnitary, tol: float = 1e-9) -> WeightMeasure:
    """Atoms at psi_t - phi_s with mass tr(Pi_{A,s} Pi_{B,t}) (normalised trace)."""
    th, ms = weight_atoms(a, b)
    return merge_atoms(th, ms, tol)


def eig_unitary(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases and orthonormal eigenvectors of a unitary via complex Schur."""
    t, z = schur(u, output="complex")
    ev = np.diagonal(t)
    return np.mod(np.angle(ev / np.abs(ev)), TWO_PI), z


def normalized_trace(m: np.ndarray) -> complex:
    return complex(np.trace(m) / m.shape[0])
