"""Canonical SDP relaxation of homogeneous Lin-2-k and a dense primal-dual interior-point solver.

The relaxation is

    max  sum_E (w/k)(1 + (k-1) X_ij) + sum_I w((k-1)/k)(1 - X_ij)
    s.t. X_ii = 1,  X_ij >= -1/(k-1),  X PSD.

Each entry bound is written X_ij - s_p = -1/(k-1) with a scalar slack
s_p >= 0, so the cone is one N x N PSD block times a nonnegative orthant.
Search directions are HKM with a Mehrotra predictor-corrector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import CspInstance, Kind, NonHomogeneousInstance

DEFAULT_TOL = 1e-7
MAX_ORDER = 200


class MaxIterations(RuntimeError):
    def __init__(self, message: str, best: "GramSolution"):
        super().__init__(message)
        self.best = best


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class CanonicalSdp:
    """Objective const + sum_{i<j} coef[i, j] X_ij over the bounded elliptope."""

    k: int
    n: int
    coef: np.ndarray  # strictly upper triangular
    const: float
    bounded_pairs: tuple[tuple[int, int], ...]  # 0-based, i < j

    @property
    def lower_bound(self) -> float:
        return -1.0 / (self.k - 1)

    def objective(self, x: np.ndarray) -> float:
        return float(self.const + np.sum(self.coef * x))


@dataclass
class GramSolution:
    x: np.ndarray
    vectors: np.ndarray
    sdp_value: float
    dual_value: float
    duality_gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool = True
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def lam(self) -> np.ndarray:
        """Inner products <x_i, x_j> of the unit Gram vectors."""
        return self.vectors @ self.vectors.T


def build_sdp(inst: CspInstance, strict_bounds: bool = True) -> CanonicalSdp:
    """Objective and bounds of the canonical relaxation.

    With ``strict_bounds`` every pair carries the entry bound; otherwise only
    pairs that appear in some constraint do.
    """
    if not inst.is_homogeneous:
        raise NonHomogeneousInstance("the canonical SDP needs every shift c = 0")
    k, n = inst.k, inst.num_vars
    coef = np.zeros((n, n))
    const = 0.0
    for con in inst.constraints:
        i, j = con.i - 1, con.j - 1
        if con.kind is Kind.EQUATION:
            const += con.w / k
            coef[i, j] += con.w * (k - 1) / k
        else:
            const += con.w * (k - 1) / k
            coef[i, j] -= con.w * (k - 1) / k
    if strict_bounds:
        pairs = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        pairs = tuple(sorted({(con.i - 1, con.j - 1) for con in inst.constraints}))
    return CanonicalSdp(k, n, coef, const, pairs)


# --------------------------------------------------------------------------- #
# interior point


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _schur_solver(m: np.ndarray):
    """Solve with the Jacobi-scaled Cholesky factor; least squares once that breaks down."""
    m = _sym(m)
    dg = np.diag(m)
    if not np.all(np.isfinite(m)) or np.any(dg <= 0):
        raise NumericalFailure("Schur complement has a nonpositive diagonal")
    scale = 1.0 / np.sqrt(dg)
    ms = m * scale[:, None] * scale[None, :]
    try:
        chol = np.linalg.cholesky(ms)
    except np.linalg.LinAlgError:
        return lambda rhs: scale * np.linalg.lstsq(ms, scale * rhs, rcond=None)[0]
    return lambda rhs: scale * np.linalg.solve(chol.T, np.linalg.solve(chol, scale * rhs))


def _max_step_psd(x: np.ndarray, dx: np.ndarray) -> float:
    try:
        lc = np.linalg.cholesky(x)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("iterate lost positive definiteness") from exc
    li = np.linalg.solve(lc, dx)
    lam_min = np.linalg.eigvalsh(_sym(np.linalg.solve(lc, li.T)))[0]
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _max_step_orthant(s: np.ndarray, ds: np.ndarray) -> float:
    neg = ds < 0
    return float(np.min(-s[neg] / ds[neg])) if np.any(neg) else np.inf


class _Problem:
    """Row m of the equality system reads <A_m, X> + g_m s = b_m with A_m = (E_ij + E_ji)/2."""

    def __init__(self, sdp: CanonicalSdp):
        n = sdp.n
        pairs = sdp.bounded_pairs
        self.n = n
        self.nb = len(pairs)
        self.rows_i = np.array(list(range(n)) + [p[0] for p in pairs], dtype=np.int64)
        self.rows_j = np.array(list(range(n)) + [p[1] for p in pairs], dtype=np.int64)
        self.b = np.concatenate([np.ones(n), np.full(self.nb, sdp.lower_bound)])
        # minimise <C, X>, C the negated symmetric objective
        self.c = -0.5 * (sdp.coef + sdp.coef.T)
        self.const = sdp.const

    def a_op(self, x: np.ndarray) -> np.ndarray:
        return x[self.rows_i, self.rows_j]

    def at_op(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.rows_i, self.rows_j), 0.5 * y)
        np.add.at(out, (self.rows_j, self.rows_i), 0.5 * y)
        return out

    def g_op(self, s: np.ndarray) -> np.ndarray:
        return np.concatenate([np.zeros(self.n), -s])

    def gt_op(self, y: np.ndarray) -> np.ndarray:
        return -y[self.n:]

    def schur(self, zi: np.ndarray, x: np.ndarray, s_over_t: np.ndarray) -> np.ndarray:
        i, j = self.rows_i, self.rows_j
        m = 0.25 * (
            zi[j[:, None], i[None, :]] * x[j[None, :], i[:, None]]
            + zi[j[:, None], j[None, :]] * x[i[None, :], i[:, None]]
            + zi[i[:, None], i[None, :]] * x[j[None, :], j[:, None]]
            + zi[i[:, None], j[None, :]] * x[i[None, :], j[:, None]]
        )
        m[self.n:, self.n:] += np.diag(s_over_t)
        return m


def solve_sdp(
    sdp: CanonicalSdp,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100,
    raise_on_failure: bool = True,
) -> GramSolution:
    """Primal-dual path following from the infeasible start X = I, s = 1, Z = I, t = 1."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sdp.n > MAX_ORDER:
        raise ValueError(f"matrix order {sdp.n} exceeds desk-scale bound {MAX_ORDER}")
    pr = _Problem(sdp)
    n, nb = pr.n, pr.nb
    x, z = np.eye(n), np.eye(n)
    s, t = np.ones(nb), np.ones(nb)
    y = np.zeros(n + nb)
    nu = n + nb
    bnorm = 1.0 + np.linalg.norm(pr.b)
    cnorm = 1.0 + np.linalg.norm(pr.c)
    history: list[float] = []
    best = None

    for it in range(1, max_iter + 1):
        rp = pr.b - pr.a_op(x) - pr.g_op(s)
        rd = pr.c - z - pr.at_op(y)
        rds = -t - pr.gt_op(y)
        pobj = float(np.sum(pr.c * x))
        dobj = float(pr.b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / bnorm
        dinf = np.sqrt(np.linalg.norm(rd) ** 2 + np.linalg.norm(rds) ** 2) / cnorm
        history.append(max(gap, pinf, dinf))
        best = (x.copy(), y.copy(), pobj, dobj, gap, pinf, dinf, it)
        if gap <= tol and pinf <= tol and dinf <= tol:
            return _finish(sdp, best, history, converged=True)

        mu = (np.sum(x * z) + s @ t) / nu
        try:
            zi = _sym(np.linalg.inv(z))
            solve_m = _schur_solver(pr.schur(zi, x, s / t))
        except (np.linalg.LinAlgError, NumericalFailure) as exc:
            if raise_on_failure:
                raise NumericalFailure(f"Schur complement factorization failed at iteration {it}") from exc
            return _finish(sdp, best, history, converged=False)

        def direction(sig_mu, corr_x=None, corr_s=None):
            # dX = sig_mu Zi - X - sym(Zi dZ X) [- corr], dZ = rd - A^T dy
            base = sig_mu * zi - x - _sym(zi @ rd @ x)
            base_s = sig_mu / t - s - (s / t) * rds
            if corr_x is not None:
                base = base - corr_x
                base_s = base_s - corr_s
            rhs = rp - pr.a_op(base) - pr.g_op(base_s)
            dy = solve_m(rhs)
            dz = rd - pr.at_op(dy)
            dt = rds - pr.gt_op(dy)
            dx = base + _sym(zi @ pr.at_op(dy) @ x)
            ds = base_s + (s / t) * pr.gt_op(dy)
            return dx, dy, dz, ds, dt

        def steps(dx, dz, ds, dt):
            ap = min(_max_step_psd(x, dx), _max_step_orthant(s, ds))
            ad = min(_max_step_psd(z, dz), _max_step_orthant(t, dt))
            return min(1.0, 0.95 * ap), min(1.0, 0.95 * ad)

        dx, dy, dz, ds, dt = direction(0.0)
        ap, ad = steps(dx, dz, ds, dt)
        mu_aff = (np.sum((x + ap * dx) * (z + ad * dz)) + (s + ap * ds) @ (t + ad * dt)) / nu
        sigma = min(1.0, (mu_aff / mu) ** 3)
        dx, dy, dz, ds, dt = direction(sigma * mu, _sym(zi @ dz @ dx), ds * dt / t)
        ap, ad = steps(dx, dz, ds, dt)

        x = _sym(x + ap * dx)
        s = s + ap * ds
        y = y + ad * dy
        z = _sym(z + ad * dz)
        t = t + ad * dt

    sol = _finish(sdp, best, history, converged=False)
    if raise_on_failure:
        raise MaxIterations(f"no convergence in {max_iter} iterations (residual {history[-1]:.2e})", sol)
    return sol


def gram_vectors(x: np.ndarray) -> np.ndarray:
    """Rows of a symmetric PSD square root of X, renormalised to unit length."""
    evals, evecs = np.linalg.eigh(_sym(x))
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    norms = np.linalg.norm(root, axis=1)
    if np.any(norms == 0):
        raise NumericalFailure("zero row in the Gram factor")
    return root / norms[:, None]


def _finish(sdp, best, history, converged) -> GramSolution:
    x, y, pobj, dobj, gap, pinf, dinf, it = best
    return GramSolution(
        x=x,
        vectors=gram_vectors(x) if sdp.n else np.zeros((0, 0)),
        sdp_value=sdp.const - pobj,
        dual_value=sdp.const - dobj,
        duality_gap=gap,
        primal_residual=pinf,
        dual_residual=dinf,
        iterations=it,
        converged=converged,
        history=history,
    )


@dataclass(frozen=True)
class Certificate:
    objective_from_x: float
    reported_value: float
    diag_residual: float
    bound_residual: float
    psd_residual: float

    @property
    def value_gap(self) -> float:
        return abs(self.objective_from_x - self.reported_value)

    def feasible(self, tol: float) -> bool:
        return max(self.diag_residual, self.bound_residual, self.psd_residual) <= tol


def sdp_value_certificate(sol: GramSolution | np.ndarray, sdp: CanonicalSdp) -> Certificate:
    """Recompute the objective from X and measure every feasibility residual (all pairs bounded)."""
    if isinstance(sol, GramSolution):
        x, reported = sol.x, sol.sdp_value
    else:
        x = np.asarray(sol, dtype=float)
        reported = sdp.objective(x)
    n = x.shape[0]
    iu = np.triu_indices(n, 1)
    return Certificate(
        objective_from_x=sdp.objective(x),
        reported_value=reported,
        diag_residual=float(np.max(np.abs(np.diag(x) - 1.0))) if n else 0.0,
        bound_residual=float(np.max(np.clip(sdp.lower_bound - x[iu], 0.0, None), initial=0.0)),
        psd_residual=float(max(0.0, -np.linalg.eigvalsh(_sym(x))[0])) if n else 0.0,
    )


def solve_instance(inst: CspInstance, tol: float = DEFAULT_TOL, strict_bounds: bool = True) -> GramSolution:
    return solve_sdp(build_sdp(inst, strict_bounds), tol)
