"""Relative distributions of unitary pairs and the wrapped Cauchy limit."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .gwb_group import GwbRep, vector_to_unitary
from .unitary_core import TWO_PI, eig_unitary, haar_unitaries, root_seed, sample_blocks, stream

DEFAULT_BINS = 256


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class WrappedCauchy:
    """W(theta0, gamma); gamma = inf is the uniform law and gamma = 0 a point mass."""

    theta0: float
    gamma: float

    @property
    def is_dirac(self) -> bool:
        return self.gamma == 0.0

    @property
    def is_uniform(self) -> bool:
        return np.isinf(self.gamma)

    @property
    def rho(self) -> float:
        return 0.0 if self.is_uniform else float(np.exp(-self.gamma))

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.is_uniform:
            return np.full(theta.shape, 1.0 / TWO_PI)
        if self.is_dirac:
            raise DomainError("point mass has no density")
        # rho form of sinh(g) / (2 pi (cosh g - cos)); stays finite as gamma grows
        r = self.rho
        return (1.0 - r * r) / (TWO_PI * (1.0 + r * r - 2.0 * r * np.cos(theta - self.theta0)))

    def characteristic(self, n: int) -> complex:
        if n == 0:
            return 1.0 + 0j
        return complex(self.rho ** abs(n) * np.exp(1j * n * self.theta0))

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        """Probability of each [edges[i], edges[i+1]) from the Fourier series of the CDF."""
        edges = np.asarray(edges, dtype=float)
        width = np.diff(edges) / TWO_PI
        if self.is_dirac:
            t = np.mod(self.theta0, TWO_PI)
            out = np.zeros(len(edges) - 1)
            out[min(np.searchsorted(edges, t, side="right") - 1, len(out) - 1)] = 1.0
            return out
        r = self.rho
        if r == 0.0:
            return width
        nmax = int(np.ceil(np.log(1e-16 * (1 - r)) / np.log(r))) + 1
        n = np.arange(1, max(nmax, 1) + 1)
        phase = edges[:, None] - self.theta0
        prim = (r**n / (np.pi * n) * np.sin(n * phase)).sum(axis=1)
        return width + np.diff(prim)


def delta_lambda(lam: complex) -> WrappedCauchy:
    """Delta_lambda = W(arg lambda, -ln |lambda|)."""
    lam = complex(lam)
    r = abs(lam)
    if r > 1.0 + 1e-12:
        raise DomainError("|lambda| must be at most 1")
    theta0 = float(np.mod(np.angle(lam), TWO_PI)) if r > 0 else 0.0
    if r >= 1.0 - 1e-15:
        return WrappedCauchy(theta0, 0.0)
    if r == 0.0:
        return WrappedCauchy(0.0, np.inf)
    return WrappedCauchy(theta0, -np.log(r))


@dataclass
class AngularHistogram:
    edges: np.ndarray
    masses: np.ndarray
    samples: int

    @classmethod
    def empty(cls, bins: int = DEFAULT_BINS) -> "AngularHistogram":
        return cls(np.linspace(0.0, TWO_PI, bins + 1), np.zeros(bins), 0)

    def add(self, thetas: np.ndarray, masses: np.ndarray, samples: int = 1) -> None:
        idx = np.minimum((np.mod(thetas, TWO_PI) / TWO_PI * len(self.masses)).astype(np.int64), len(self.masses) - 1)
        self.masses += np.bincount(idx, weights=masses, minlength=len(self.masses))
        self.samples += samples

    def normalized(self) -> np.ndarray:
        total = self.masses.sum()
        return self.masses / total if total > 0 else self.masses

    def rebinned(self, bins: int) -> "AngularHistogram":
        factor = len(self.masses) // bins
        if factor * bins != len(self.masses):
            raise ValueError("bin count must divide the current bin count")
        return AngularHistogram(
            np.linspace(0.0, TWO_PI, bins + 1), self.masses.reshape(bins, factor).sum(axis=1), self.samples
        )

    def tv_distance(self, bin_probs: np.ndarray) -> float:
        return float(0.5 * np.abs(self.normalized() - bin_probs).sum())


@dataclass
class RelativeEstimate:
    histogram: AngularHistogram
    moments: dict[int, complex] = field(default_factory=dict)
    stderr: dict[int, float] = field(default_factory=dict)
    samples: int = 0


def _block_stats(a, b, n_max, bins, rng, count):
    d = a.shape[0]
    hist = np.zeros(bins)
    sums = np.zeros(n_max, dtype=complex)
    sqs = np.zeros(n_max)
    ns = np.arange(1, n_max + 1)
    for u in haar_unitaries(count, d, rng):
        pa, va = eig_unitary(u @ a)
        pb, vb = eig_unitary(u @ b)
        mass = (np.abs(va.conj().T @ vb) ** 2 / d).ravel()
        theta = np.mod(pb[None, :] - pa[:, None], TWO_PI).ravel()
        idx = np.minimum((theta / TWO_PI * bins).astype(np.int64), bins - 1)
        hist += np.bincount(idx, weights=mass, minlength=bins)
        vals = np.exp(1j * ns[:, None] * theta[None, :]) @ mass
        sums += vals
        sqs += np.abs(vals) ** 2
    return hist, sums, sqs


def estimate_relative_distribution(
    a: np.ndarray,
    b: np.ndarray,
    samples: int,
    seed=None,
    n_max: int = 5,
    bins: int = DEFAULT_BINS,
    threads: int = 1,
) -> RelativeEstimate:
    """Monte Carlo over Haar U of the weight measure of (UA, UB).

    Reports chi_hat(n) for |n| <= n_max with the standard error of the
    complex mean, sqrt(E|X - mean|^2 / (samples - 1)).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    if samples < 1:
        raise ValueError("samples must be positive")
    parts = sample_blocks(
        lambda rng, m: _block_stats(a, b, n_max, bins, rng, m), samples, seed, threads
    )
    hist = AngularHistogram(np.linspace(0.0, TWO_PI, bins + 1), sum(p[0] for p in parts), samples)
    sums = sum(p[1] for p in parts)
    sqs = sum(p[2] for p in parts)
    est = RelativeEstimate(hist, samples=samples)
    est.moments[0] = 1.0 + 0j
    est.stderr[0] = 0.0
    for n in range(1, n_max + 1):
        mean = sums[n - 1] / samples
        var = max(sqs[n - 1] / samples - abs(mean) ** 2, 0.0)
        est.moments[n] = complex(mean)
        est.moments[-n] = complex(np.conj(mean))
        est.stderr[n] = est.stderr[-n] = float(np.sqrt(var / max(samples - 1, 1)))
    return est


# --------------------------------------------------------------------------- #
# Third moment at finite dimension


def chi3_exact(diag: np.ndarray) -> complex:
    """The printed closed form lambda^3 + (tr D^3 + lambda^3 - 2 tr(D^2)/d)/(d^2 - 1).

    Normalised traces throughout. This disagrees with the Weingarten value
    (for D = I, d = 2 it gives 4/3 instead of 1); see ``chi3_corrected``.
    """
    dv = np.asarray(diag, dtype=complex)
    d = dv.size
    lam, t2, t3 = dv.mean(), (dv**2).mean(), (dv**3).mean()
    return complex(lam**3 + (t3 + lam**3 - 2 * t2 / d) / (d * d - 1))


def chi3_corrected(diag: np.ndarray) -> complex:
    """lambda^3 + (tr D^3 + lambda^3 - 2 lambda tr D^2)/(d^2 - 1), normalised traces."""
    dv = np.asarray(diag, dtype=complex)
    d = dv.size
    lam, t2, t3 = dv.mean(), (dv**2).mean(), (dv**3).mean()
    return complex(lam**3 + (t3 + lam**3 - 2 * lam * t2) / (d * d - 1))


def chi3_weingarten(diag: np.ndarray) -> complex:
    """E_U tr(U^{-3} (U D)^3) evaluated exactly with second-order Weingarten calculus."""
    dv = np.asarray(diag, dtype=complex)
    d = dv.size
    if d < 2:
        return complex(dv[0] ** 3)
    eye = np.eye(d)
    # slots of E U_{i1 j1} U_{i2 j2} conj(U_{k1 l1}) conj(U_{k2 l2})
    i_slot, j_slot, k_slot, l_slot = "ac", "bd", "eg", "fh"
    moment = np.zeros((d,) * 8)
    for sig in itertools.permutations(range(2)):
        for tau in itertools.permutations(range(2)):
            wg = 1.0 / (d * d - 1) if sig == tau else -1.0 / (d * (d * d - 1))
            subs = [i_slot[r] + k_slot[sig[r]] for r in range(2)]
            subs += [j_slot[r] + l_slot[tau[r]] for r in range(2)]
            moment += wg * np.einsum(",".join(subs) + "->abcdefgh", eye, eye, eye, eye)
    # tr(U* U* D U D U D) = sum conj(U_ba) conj(U_cb) U_ce U_ea D_c D_e D_a
    total = np.einsum("ceeabacb,c,e,a->", moment, dv, dv, dv)
    return complex(total / d)


# --------------------------------------------------------------------------- #
# Cauchy-law convergence and the finite-dimensional check


@dataclass
class ConvergenceRow:
    m: int
    n: int
    empirical: complex
    theoretical: complex
    deviation: float
    stderr: float
    envelope: float

    @property
    def within(self) -> bool:
        return self.deviation <= self.envelope


def bias_allowance(d: int, m: int) -> float:
    return 8.0 / (np.pi * d * m)


def cauchy_law_convergence_report(
    a: np.ndarray,
    b: np.ndarray,
    tensor_factors: list[int],
    samples: int,
    seed=None,
    n_max: int = 5,
    bins: int = DEFAULT_BINS,
    threads: int = 1,
) -> tuple[list[ConvergenceRow], dict[int, RelativeEstimate]]:
    """Compare chi_hat of (A x I_m, B x I_m) with lambda^n, lambda = tr(A* B)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = a.shape[0]
    if d * max(tensor_factors) > 512:
        raise ValueError("d * m must be at most 512")
    lam = complex(np.trace(a.conj().T @ b) / d)
    law = delta_lambda(lam)
    root = root_seed(seed)
    rows, estimates = [], {}
    for idx, m in enumerate(tensor_factors):
        eye = np.eye(m)
        est = estimate_relative_distribution(
            np.kron(a, eye), np.kron(b, eye), samples, stream(root, idx), n_max, bins, threads
        )
        estimates[m] = est
        for n in range(1, n_max + 1):
            theo = law.characteristic(n)
            dev = abs(est.moments[n] - theo)
            env = 3 * est.stderr[n] + bias_allowance(d, m)
            rows.append(ConvergenceRow(m, n, est.moments[n], theo, dev, est.stderr[n], env))
    return rows, estimates


def base_pair(lam: float) -> tuple[np.ndarray, np.ndarray]:
    """A = I and B = diag(e^{i phi}, e^{-i phi}) with tr(A* B) = cos phi = lam (d = 2)."""
    if not -1.0 <= lam <= 1.0:
        raise DomainError("lambda must be real in [-1, 1]")
    phi = np.arccos(lam)
    return np.eye(2, dtype=complex), np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def algebraic_relative_check(rep: GwbRep, x, y) -> dict[int, float]:
    """|tr(U_x^{-n} U_y^n) - <x,y>^{|n|}| for |n| < k."""
    ux = vector_to_unitary(rep, x)
    uy = vector_to_unitary(rep, y)
    lam = float(np.dot(x, y))
    out = {}
    for n in range(-(rep.k - 1), rep.k):
        m = np.linalg.matrix_power(ux.conj().T, n) @ np.linalg.matrix_power(uy, n) if n >= 0 else (
            np.linalg.matrix_power(ux, -n) @ np.linalg.matrix_power(uy.conj().T, -n)
        )
        out[n] = float(abs(np.trace(m) / rep.dim - lam ** abs(n)))
    return out
