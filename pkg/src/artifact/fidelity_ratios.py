"""Fidelity functions, the Cauchy-law integral formulas and approximation ratios."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import bernoulli

from .instance import smooth_constant
from .unitary_core import nearest_root_index

PI2 = np.pi**2

# B_{2m} / (2m+1)! for the series Li2(z) = sum_n B_n u^{n+1}/(n+1)!, u = -log(1-z).
_BERN = bernoulli(40)
_BERN_COEF = np.array(
    [_BERN[2 * m] / np.prod(np.arange(1.0, 2 * m + 2)) for m in range(1, 20)]
)
_SMALL_TERMS = 60  # direct series at |z| <= 1/2 reaches 2^-60 / 60^2


class DomainError(ValueError):
    pass


# --------------------------------------------------------------------------- #
# Dilogarithm


def _dilog_small(z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    zn = np.ones_like(z)
    for n in range(1, _SMALL_TERMS + 1):
        zn = zn * z
        out = out + zn / (n * n)
    return out


def _dilog_bernoulli(z: np.ndarray) -> np.ndarray:
    # Valid for Re z <= 1/2 and |z| <= 1, where |u| < 1.72 < 2 pi.
    u = -np.log1p(-z)
    u2 = u * u
    acc = np.zeros_like(u)
    for coef in _BERN_COEF[::-1]:
        acc = acc * u2 + coef
    return u - u2 / 4.0 + u * u2 * acc


def _dilog_left(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = np.abs(z) <= 0.5
    out[small] = _dilog_small(z[small])
    out[~small] = _dilog_bernoulli(z[~small])
    return out


def dilog(z):
    """Li2(z) = sum_{n>=1} z^n / n^2 on the closed unit disc.

    |z| <= 1/2 uses the defining series. Re z > 1/2 is reflected through
    Li2(z) + Li2(1-z) = pi^2/6 - log(z) log(1-z). What remains is summed
    as a Bernoulli series in -log(1-z).
    """
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise DomainError("dilog is implemented on |z| <= 1 only")
    out = np.empty_like(z)
    one = z == 1.0
    out[one] = PI2 / 6.0
    right = (z.real > 0.5) & ~one
    left = ~right & ~one
    out[left] = _dilog_left(z[left])
    zr = z[right]
    out[right] = PI2 / 6.0 - np.log(zr) * np.log1p(-zr) - _dilog_left(1.0 - zr)
    return complex(out[0]) if scalar else out


# --------------------------------------------------------------------------- #
# Polynomials and fidelity


@dataclass(frozen=True)
class DiagonalPolynomial:
    """P(x, y) = sum_{s,t} c[s, t] (x*)^s y^t with indices mod k.

    Only the diagonal c[t, t] enters the fidelity; the full matrix is
    kept so that the piecewise oracle can confirm the off-diagonal part
    integrates to zero.
    """

    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = np.diag(c)
        if c.shape != (self.k, self.k):
            raise ValueError(f"coefficients must be length {self.k} or {self.k}x{self.k}")
        object.__setattr__(self, "coeffs", c)

    @property
    def diag(self) -> np.ndarray:
        return np.diag(self.coeffs).copy()

    @classmethod
    def cut(cls, k: int) -> "DiagonalPolynomial":
        """P_k = (1/k) sum_t (x*)^t y^t, the indicator of x = y."""
        return cls(k, np.full(k, 1.0 / k))

    @classmethod
    def smooth(cls, k: int) -> "DiagonalPolynomial":
        """x* y + x y*, which on order-k unitaries is c_{1,1} = c_{k-1,k-1} = 1."""
        c = np.zeros(k, dtype=complex)
        c[1 % k] += 1.0
        c[(k - 1) % k] += 1.0
        return cls(k, c)


def fid_closed_form(P: DiagonalPolynomial, theta):
    """sum_t c_tt omega^{t m} (1 + (omega^t - 1) r) with k theta / 2 pi = m + r."""
    k = P.k
    x = np.mod(np.asarray(theta, dtype=float), 2 * np.pi) * k / (2 * np.pi)
    m = np.floor(x)
    r = x - m
    t = np.arange(k)
    om = np.exp(2j * np.pi * t / k)
    terms = P.diag * om ** m[..., None] * (1.0 + (om - 1.0) * r[..., None])
    return terms.sum(axis=-1)


def fid_numeric_oracle(P: DiagonalPolynomial, theta: float) -> complex:
    """(1/2pi) int sum c_st rho(e^{i phi})^{-s} rho(e^{i(phi+theta)})^t d phi, exactly.

    Both rounded factors are constant between consecutive breakpoints, so
    the integral is a finite sum of interval length times integrand.
    """
    k = P.k
    two_pi = 2 * np.pi
    mids = (2 * np.arange(k) + 1) * np.pi / k
    cuts = np.concatenate([[0.0, two_pi], mids, np.mod(mids - theta, two_pi)])
    cuts = np.unique(np.clip(cuts, 0.0, two_pi))
    lengths = np.diff(cuts)
    centers = 0.5 * (cuts[:-1] + cuts[1:])
    a = nearest_root_index(centers, k)
    b = nearest_root_index(centers + theta, k)
    s = np.arange(k)
    om = np.exp(2j * np.pi / k)
    # integrand per interval: sum_{s,t} c_st omega^{-s a} omega^{t b}
    left = om ** (-np.outer(a, s))
    right = om ** (np.outer(b, s))
    vals = np.einsum("is,st,it->i", left, P.coeffs, right)
    return complex((lengths * vals).sum() / two_pi)


def fourier_coefficient(P: DiagonalPolynomial, n: int) -> complex:
    """int_0^{2pi} fid_P(theta) e^{-i n theta} d theta in closed form."""
    k = P.k
    if n == 0:
        return complex(2 * np.pi * P.coeffs[0, 0])
    return complex(2 * k**2 / (np.pi * n**2) * np.sin(np.pi * n / k) ** 2 * P.coeffs[n % k, n % k])


def fourier_coefficient_quadrature(P: DiagonalPolynomial, n: int, nodes: int = 64) -> complex:
    """The same coefficient by Gauss-Legendre on each linear piece of fid_P."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    k = P.k
    total = 0j
    for m in range(k):
        lo, hi = 2 * np.pi * m / k, 2 * np.pi * (m + 1) / k
        th = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        vals = fid_closed_form(P, th) * np.exp(-1j * n * th)
        total += 0.5 * (hi - lo) * np.sum(w * vals)
    return complex(total)


# --------------------------------------------------------------------------- #
# Integrals against the wrapped Cauchy law


def cut_integral(k: int, lam):
    """int fid_k d Delta_lambda for real lambda via dilogarithms."""
    lam = np.asarray(lam, dtype=float)
    om = np.exp(2j * np.pi / k)
    val = 1.0 / k + k / PI2 * (dilog(lam.ravel()) - dilog(lam.ravel() * om)).real
    return val.reshape(lam.shape) if lam.shape else float(val[0])


def _series_terms(lam_abs: float, cmax: float, tol: float = 1e-13) -> int | None:
    if lam_abs == 0.0:
        return 1
    if lam_abs >= 0.999:
        return None
    gap = 1.0 - lam_abs
    n = 1
    while lam_abs ** (n + 1) / ((n + 1) ** 2 * gap) * max(cmax, 1.0) > tol * gap:
        n *= 2
        if n > 10**6:
            return None
    return n


def _cauchy_series(P: DiagonalPolynomial, lam: complex, nterms: int) -> complex:
    k = P.k
    n = np.arange(1, nterms + 1)
    d = P.diag
    weight = np.sin(np.pi * n / k) ** 2 / n.astype(float) ** 2
    powers = lam**n
    return complex(
        d[0] + k**2 / PI2 * np.sum(weight * (d[n % k] * powers + d[(-n) % k] * np.conj(powers)))
    )


def _cauchy_dilog(P: DiagonalPolynomial, lam: complex) -> complex:
    # sum_{n = t mod k} z^n / n^2 = (1/k) sum_s omega^{-ts} Li2(z omega^s)
    k = P.k
    d = P.diag
    s = np.arange(k)
    om = np.exp(2j * np.pi * s / k)
    li = dilog(lam * om)
    li_c = dilog(np.conj(lam) * om)
    total = 0.0j
    for t in range(1, k):
        proj = np.exp(-2j * np.pi * t * s / k)
        sin2 = np.sin(np.pi * t / k) ** 2
        total += sin2 * (d[t] * (proj @ li) + d[(-t) % k] * (proj @ li_c)) / k
    return complex(d[0] + k**2 / PI2 * total)


def cauchy_integral(P: DiagonalPolynomial, lam: complex) -> complex:
    """int fid_P d Delta_lambda.

    c_00 + (k^2/pi^2) sum_{n>=1} sin^2(pi n/k)/n^2 (c_nn lambda^n + c_{-n,-n} conj(lambda)^n).
    The series is truncated with a geometric tail bound; near |lambda| = 1
    the sum is regrouped into dilogarithms by residue class mod k.
    """
    lam = complex(lam)
    if abs(lam) > 1.0 + 1e-12:
        raise DomainError("|lambda| must be at most 1")
    nterms = _series_terms(abs(lam), float(np.abs(P.diag).max()))
    if nterms is None:
        return _cauchy_dilog(P, lam)
    return _cauchy_series(P, lam, nterms)


def _smooth_sum_li2(k: int, lam) -> np.ndarray:
    """Re sum_{n>0, n = +-1 mod k} lambda^n / n^2 via k dilogarithms."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    s = np.arange(k)
    om = np.exp(2j * np.pi * s / k)
    li = dilog((lam[:, None] * om[None, :]).ravel()).reshape(lam.size, k)
    return (2.0 / k) * (li @ np.cos(2 * np.pi * s / k)).real


def _smooth_integral_fast(k: int, lam) -> np.ndarray:
    return 2 * k**2 / PI2 * np.sin(np.pi / k) ** 2 * _smooth_sum_li2(k, lam)


def smooth_integral(k: int, lam: complex) -> float:
    """int fid^S d Delta_lambda for P^S = x* y + x y*, k >= 3.

    Computed from the residue-class series and from the dilogarithm
    regrouping; the two must agree.
    """
    if k < 3:
        raise DomainError("smooth integral needs k >= 3")
    lam = complex(lam)
    if abs(lam) > 1.0 + 1e-12:
        raise DomainError("|lambda| must be at most 1")
    via_li2 = float(_smooth_integral_fast(k, lam)[0])
    nterms = _series_terms(abs(lam), 2.0)
    if nterms is None:
        return via_li2
    via_series = cauchy_integral(DiagonalPolynomial.smooth(k), lam).real
    if abs(via_series - via_li2) > 1e-9:
        raise ArithmeticError(f"smooth integral forms disagree: {via_series} vs {via_li2}")
    return via_li2


# --------------------------------------------------------------------------- #
# Ratio functions


def maxkcut_branch(k: int, lam):
    """Rounded over relaxed value of an inequation edge at real correlation lambda."""
    lam = np.asarray(lam, dtype=float)
    return k * (1.0 - cut_integral(k, lam)) / ((k - 1) * (1.0 - lam))


def hom_equation_branch(k: int, lam):
    """Rounded over relaxed value of an equation edge at real correlation lambda."""
    lam = np.asarray(lam, dtype=float)
    return k * cut_integral(k, lam) / (1.0 + (k - 1) * lam)


def smooth_inequation_branch(k: int, lam):
    lam = np.asarray(lam, dtype=complex)
    si = _smooth_integral_fast(k, lam.ravel()).reshape(lam.shape)
    return (1.0 - si / 2.0) / (1.0 - lam.real)


def smooth_equation_branch(k: int, lam):
    lam = np.asarray(lam, dtype=complex)
    a = smooth_constant(k) / 2.0 - 1.0
    si = _smooth_integral_fast(k, lam.ravel()).reshape(lam.shape)
    return (a + si / 2.0) / (a + lam.real)


@dataclass(frozen=True)
class RatioResult:
    value: float
    argmin: complex
    branch: str


def ratio_maxkcut(k: int) -> float:
    if k < 3:
        raise DomainError("ratio formulas need k >= 3")
    return float(maxkcut_branch(k, -1.0 / (k - 1)))


def _refine_1d(fun, xs, vals, i, tol):
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    if 0 < i < len(xs) - 1:
        res = minimize_scalar(fun, bracket=(lo, xs[i], hi), method="golden", tol=tol)
        if lo <= res.x <= hi and res.fun <= vals[i]:
            return float(res.x), float(res.fun)
    return float(xs[i]), float(vals[i])


def ratio_homogeneous(k: int, grid: int = 10**4, refine_tol: float = 1e-10) -> RatioResult:
    """Minimum of the Max-k-Cut endpoint value and the equation branch."""
    if k < 3:
        raise DomainError("ratio formulas need k >= 3")
    lo = -1.0 / (k - 1)
    excl = 1e-9 / (k - 1)
    # The equation branch numerator must stay positive where we cut out the pole.
    near = np.linspace(lo, lo + 2 * excl, 5)
    if np.any(cut_integral(k, near) <= 0):
        raise ArithmeticError("equation branch numerator vanishes at the pole")
    xs = np.linspace(lo, 1.0, grid, endpoint=False)
    xs = xs[xs >= lo + excl]
    vals = hom_equation_branch(k, xs)
    i = int(np.argmin(vals))

    def fun(x):
        return float(hom_equation_branch(k, x))

    x_eq, v_eq = _refine_1d(fun, xs, vals, i, refine_tol)
    v_cut = ratio_maxkcut(k)
    if v_cut <= v_eq:
        return RatioResult(v_cut, complex(lo), "inequation")
    return RatioResult(v_eq, complex(x_eq), "equation")


def _fan_point(k: int, s: int, u, v):
    a = np.exp(2j * np.pi * s / k)
    b = np.exp(2j * np.pi * (s + 1) / k)
    return u * ((1 - v) * a + v * b)


def ratio_smooth(
    k: int,
    simplex_grid: int = 200,
    refine_tol: float = 1e-10,
    vertex_guard: float = 1e-9,
) -> RatioResult:
    """Minimum of both smooth branches over the root simplex Omega_k.

    Omega_k is covered by k triangles (0, omega^s, omega^{s+1}), each
    parametrised by (u, v) in [0, 1]^2 with u radial. Points whose
    denominator is below ``vertex_guard`` are skipped (0/0 at vertices).
    """
    if k < 3:
        raise DomainError("ratio formulas need k >= 3")
    a = smooth_constant(k) / 2.0 - 1.0
    g = np.linspace(0.0, 1.0, simplex_grid)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    best = RatioResult(np.inf, 0j, "")
    branches = {
        "inequation": (smooth_inequation_branch, lambda z: 1.0 - z.real),
        "equation": (smooth_equation_branch, lambda z: a + z.real),
    }
    for s in range(k):
        lam = _fan_point(k, s, uu, vv)
        for name, (branch, denom) in branches.items():
            ok = denom(lam) > vertex_guard
            vals = np.full(lam.shape, np.inf)
            vals[ok] = branch(k, lam[ok])
            idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
            if not np.isfinite(vals[idx]):
                continue

            def fun(p, s=s, branch=branch, denom=denom):
                z = _fan_point(k, s, p[0], p[1])
                if denom(np.asarray(z)) <= vertex_guard:
                    return np.inf
                return float(branch(k, np.array([z]))[0])

            res = minimize(
                fun,
                x0=[uu[idx], vv[idx]],
                method="Nelder-Mead",
                bounds=[(0.0, 1.0), (0.0, 1.0)],
                options={"xatol": refine_tol, "fatol": refine_tol, "maxiter": 2000},
            )
            if res.fun < vals[idx]:
                cand = RatioResult(float(res.fun), complex(_fan_point(k, s, *res.x)), name)
            else:
                cand = RatioResult(float(vals[idx]), complex(lam[idx]), name)
            if cand.value < best.value:
                best = cand
    return best


@dataclass(frozen=True)
class MonotonicityReport:
    k: int
    monotone: bool
    worst_decrease: float
    f_at_one: float
    min_second_difference: float
    g_minus_one: float
    g_zero: float

    @property
    def ok(self) -> bool:
        return (
            self.monotone
            and abs(self.f_at_one - 1.0) <= 1e-9
            and self.min_second_difference >= -1e-8
            and self.g_minus_one < self.g_zero
        )


def monotonicity_check(k: int, grid: int = 10**4, h: float = 1e-3) -> MonotonicityReport:
    """Numerical check that g = (1 - f)/(1 - lambda) increases and f is convex."""
    xs = np.linspace(-1.0, 1.0 - 1e-6, grid)
    f = cut_integral(k, xs)
    gv = (1.0 - f) / (1.0 - xs)
    steps = np.diff(gv)
    inner = xs[(xs - h >= -1.0) & (xs + h <= 1.0)]
    second = (cut_integral(k, inner + h) - 2 * cut_integral(k, inner) + cut_integral(k, inner - h)) / h**2
    f_one = _cut_integral_at_one_series(k)
    g_at = lambda x: float((1.0 - cut_integral(k, x)) / (1.0 - x))
    return MonotonicityReport(
        k=k,
        monotone=bool(np.all(steps >= -1e-9)),
        worst_decrease=float(min(steps.min(), 0.0)),
        f_at_one=f_one,
        min_second_difference=float(second.min()),
        g_minus_one=g_at(-1.0),
        g_zero=g_at(0.0),
    )


def _cut_integral_at_one_series(k: int, terms: int = 10**6) -> float:
    """f(1) = 1/k + (k/pi^2) sum_n (1 - cos(2 pi n/k))/n^2 by direct summation.

    The 1/n^2 tail past N is added by Euler-Maclaurin; the cosine tail
    has zero mean over each period and is below k/N^2.
    """
    n_max = terms - terms % k
    n = np.arange(1, n_max + 1, dtype=float)
    partial = np.sum((1.0 - np.cos(2 * np.pi * n / k)) / n**2)
    tail = 1.0 / n_max - 1.0 / (2 * n_max**2) + 1.0 / (6 * n_max**3)
    return 1.0 / k + k / PI2 * (partial + tail)


ProblemName = Literal["maxkcut", "homlin", "smooth"]


def ratio_for(problem: ProblemName, k: int, **kw) -> RatioResult:
    if problem == "maxkcut":
        return RatioResult(ratio_maxkcut(k), complex(-1.0 / (k - 1)), "inequation")
    if problem == "homlin":
        return ratio_homogeneous(k, **kw)
    if problem == "smooth":
        return ratio_smooth(k, **kw)
    raise ValueError(f"unknown problem {problem!r}")
