"""Fourier computations on the circle and the two-torus.

Fields on T^2 built from a 1D function concentrated on the diagonal only
depend on ``f_hat(k+m)``, so they are stored along antidiagonals:
``coeffs[j + J, k + K]`` holds the mode ``(k, m = j - k)``, and entries
with ``|m| > K`` are masked to zero.  A field with ``J = 2K`` is a general
dense field in this layout.

Conventions: the heat multiplier is ``exp(-4 pi^2 (k^2 + m^2) t)``,
``l2_norm`` is ``sum |psi_hat|^2`` and ``h1_seminorm`` is
``sum 4 pi^2 (k^2 + m^2) |psi_hat|^2`` (both squared norms).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .testfns import TestFn1D, TestFunctionError

FOUR_PI2 = 4.0 * np.pi**2
CUTOFF_RTOL = 1e-3


class CutoffWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class MollifierParams:
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"mollifier width must lie in (0, 1), got {self.eps}")


class SpectralField2D:
    def __init__(self, coeffs, K: int):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[1] != 2 * K + 1 or coeffs.shape[0] % 2 != 1:
            raise ValueError("coefficient array must have shape (2J+1, 2K+1)")
        self.K = int(K)
        self.J = (coeffs.shape[0] - 1) // 2
        self.coeffs = coeffs
        self.coeffs = np.where(self.mask, coeffs, 0.0)

    @property
    def k(self) -> np.ndarray:
        return np.broadcast_to(np.arange(-self.K, self.K + 1)[None, :], self.coeffs.shape)

    @property
    def j(self) -> np.ndarray:
        return np.broadcast_to(np.arange(-self.J, self.J + 1)[:, None], self.coeffs.shape)

    @property
    def m(self) -> np.ndarray:
        return self.j - self.k

    @property
    def mask(self) -> np.ndarray:
        return np.abs(self.m) <= self.K

    @property
    def radius2(self) -> np.ndarray:
        return (self.k**2 + self.m**2).astype(np.float64)

    @classmethod
    def from_dense(cls, dense) -> "SpectralField2D":
        """From a square array indexed [k + K, m + K]."""
        dense = np.asarray(dense, dtype=complex)
        K = (dense.shape[0] - 1) // 2
        out = cls(np.zeros((4 * K + 1, 2 * K + 1), dtype=complex), K)
        k, m = out.k, out.m
        ok = out.mask
        out.coeffs[ok] = dense[k[ok] + K, m[ok] + K]
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((2 * self.K + 1, 2 * self.K + 1), dtype=complex)
        ok = self.mask & (np.abs(self.j) <= 2 * self.K)
        dense[self.k[ok] + self.K, self.m[ok] + self.K] = self.coeffs[ok]
        return dense

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        flipped = np.conj(self.coeffs[::-1, ::-1])
        return bool(np.allclose(self.coeffs, flipped, rtol=0, atol=tol * max(1.0, np.abs(self.coeffs).max())))

    def multiply(self, mult) -> "SpectralField2D":
        return SpectralField2D(self.coeffs * mult, self.K)

    def __sub__(self, other: "SpectralField2D") -> "SpectralField2D":
        if (self.J, self.K) != (other.J, other.K):
            raise ValueError("fields live on different cutoffs")
        return SpectralField2D(self.coeffs - other.coeffs, self.K)

    def __add__(self, other: "SpectralField2D") -> "SpectralField2D":
        if (self.J, self.K) != (other.J, other.K):
            raise ValueError("fields live on different cutoffs")
        return SpectralField2D(self.coeffs + other.coeffs, self.K)

    def laplacian(self) -> "SpectralField2D":
        return self.multiply(-FOUR_PI2 * self.radius2)

    def evaluate(self, x, y) -> np.ndarray:
        """Real field on the tensor grid x (rows) by y (columns)."""
        dense = self.to_dense()
        modes = np.arange(-self.K, self.K + 1)
        ex = np.exp(2j * np.pi * np.multiply.outer(np.asarray(x, float), modes))
        ey = np.exp(2j * np.pi * np.multiply.outer(np.asarray(y, float), modes))
        return (ex @ dense @ ey.T).real


def random_field(rng: np.random.Generator, K: int, decay: float = 1.0) -> SpectralField2D:
    """Random real, symmetric, mean-zero dense field with |coef| ~ (1 + |k| + |m|)^-decay."""
    side = 2 * K + 1
    a = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
    a = 0.5 * (a + np.conj(a[::-1, ::-1]))
    a = 0.5 * (a + a.T)
    k = np.arange(-K, K + 1)
    a /= (1.0 + np.abs(k)[:, None] + np.abs(k)[None, :]) ** decay
    a[K, K] = 0.0
    return SpectralField2D.from_dense(a)


# -- mollifier and Poisson solves ----------------------------------------------------


def mollifier_hat(eps: float, k, m) -> np.ndarray:
    """Transform of the product box kernel: sin(2 pi k eps) sin(2 pi m eps) / (4 pi^2 eps^2 k m)."""
    MollifierParams(eps)
    return np.sinc(2.0 * np.asarray(k) * eps) * np.sinc(2.0 * np.asarray(m) * eps)


def _require_mean_zero(f: TestFn1D) -> None:
    if abs(f.hat(0)) > 1e-14:
        raise TestFunctionError("Poisson solve needs a mean-zero test function")


def _antidiagonal_shell(f: TestFn1D, K: int) -> SpectralField2D:
    J = f.band
    if K < J:
        raise ValueError(f"cutoff K={K} is below the band {J} of the test function")
    return SpectralField2D(np.zeros((2 * J + 1, 2 * K + 1), dtype=complex), K)


def diagonal_source(f: TestFn1D, K: int, eps: float | None = None) -> SpectralField2D:
    """Transform of (f' (x) delta) * iota_eps, i.e. 2 pi i (k+m) f_hat(k+m) iota_hat(k, m)."""
    out = _antidiagonal_shell(f, K)
    j, k, m = out.j, out.k, out.m
    vals = 2j * np.pi * j * f.hat(j)
    if eps is not None:
        vals = vals * mollifier_hat(eps, k, m)
    return SpectralField2D(vals, K)


def poisson_solve_mollified(f: TestFn1D, eps: float | None, K: int) -> SpectralField2D:
    """psi_hat(k, m) = -i (k+m) f_hat(k+m) iota_hat(k, m) / (2 pi (k^2 + m^2)), zero at the origin."""
    _require_mean_zero(f)
    src = diagonal_source(f, K, eps)
    r2 = src.radius2
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(r2 > 0, src.coeffs / (-FOUR_PI2 * r2), 0.0)
    return SpectralField2D(psi, K)


def poisson_solve_diagonal(f: TestFn1D, K: int) -> SpectralField2D:
    return poisson_solve_mollified(f, None, K)


def heat_semigroup(field: SpectralField2D, t: float) -> SpectralField2D:
    if t < 0:
        raise ValueError("heat semigroup needs t >= 0")
    return field.multiply(np.exp(-FOUR_PI2 * field.radius2 * t))


def l2_norm(field: SpectralField2D) -> float:
    return float(np.sum(np.abs(field.coeffs) ** 2))


def h1_seminorm(field: SpectralField2D) -> float:
    return float(np.sum(FOUR_PI2 * field.radius2 * np.abs(field.coeffs) ** 2))


def inner(f: SpectralField2D, g: SpectralField2D) -> float:
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def heat_gap_functional(g: SpectralField2D, t: float) -> float:
    """(1/2) <g, g - P_t g>."""
    return 0.5 * inner(g, g - heat_semigroup(g, t))


# -- small-time constant -----------------------------------------------------------------


def _with_cutoff_check(fn, K: int, check: bool, what: str) -> float:
    val = fn(K)
    if check:
        val2 = fn(2 * K)
        if abs(val2 - val) > CUTOFF_RTOL * abs(val2):
            warnings.warn(f"{what}: doubling K={K} moves the value by {abs(val2 / val - 1):.2e}", CutoffWarning, stacklevel=3)
    return val


def smalltime_ratio(f: TestFn1D, t: float, K: int = 4096, check: bool = True) -> float:
    """||P_t psi_f - psi_f||^2 / t^{3/2} on the modes |k|, |m| <= K."""
    if t <= 0:
        raise ValueError("t must be positive")
    _require_mean_zero(f)

    def value(K):
        psi = poisson_solve_diagonal(f, K)
        return l2_norm(heat_semigroup(psi, t) - psi) / t**1.5

    return _with_cutoff_check(value, K, check, "smalltime_ratio")


def dirichlet_form(f: TestFn1D) -> float:
    """<f, -Delta f> = sum 4 pi^2 k^2 |f_hat(k)|^2."""
    return f.dirichlet()


def kappa_integrand(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(x == 0, np.pi**2, -np.expm1(-(np.pi**2) * x * x) / (x * x))
    return q * q


def kappa(epsabs: float = 1e-10, X: float = 1.0e4) -> float:
    """(1 / 8 pi^4) int_R ((1 - exp(-pi^2 x^2)) / x^2)^2 dx by adaptive quadrature plus an exact x^-4 tail."""
    f = lambda x: float(kappa_integrand(x))  # noqa: E731
    pieces = [(0.0, 1.0), (1.0, 10.0), (10.0, X)]
    total = 0.0
    for a, b in pieces:
        val, err = integrate.quad(f, a, b, epsabs=epsabs / 8, epsrel=1e-13, limit=500)
        if not np.isfinite(val) or err > epsabs:
            raise ArithmeticError(f"kappa quadrature did not converge on [{a}, {b}] (error estimate {err:.2e})")
        total += val
    # beyond X the factor (1 - exp(-pi^2 x^2))^2 equals 1 in double precision
    total += 1.0 / (3.0 * X**3)
    return 2.0 * total / (8.0 * np.pi**4)


def kappa_closed_form() -> float:
    """(sqrt 2 - 1) / (3 sqrt pi), from int (1 - e^{-a y^2})^2 y^-4 dy = (4/3) sqrt(pi) (2 - sqrt 2) a^{3/2}."""
    return (math.sqrt(2.0) - 1.0) / (3.0 * math.sqrt(math.pi))


def smalltime_limit(f: TestFn1D) -> float:
    """Limit of smalltime_ratio as t -> 0: 2 sqrt(2) kappa <f, -Delta f>."""
    return 2.0 * math.sqrt(2.0) * kappa_closed_form() * dirichlet_form(f)


# -- long-time energy ----------------------------------------------------------------------


def a_coefficient(u: int, V: int | None = None) -> float:
    """(1/|u|) sum over |v| <= V with v = u mod 2 of 2 u^2 / (u^2 + v^2)."""
    u = int(u)
    if u == 0:
        raise ValueError("a(u) is defined for u != 0")
    V = 100_000 * abs(u) if V is None else int(V)
    if V < 10 * abs(u):
        raise ValueError("need V >= 10 |u|")
    start = -V if (V - u) % 2 == 0 else -V + 1
    v = np.arange(start, V + 1, 2, dtype=np.float64)
    return math.fsum(2.0 * u * u / (u * u + v * v)) / abs(u)


def a_coefficient_closed(u: int) -> float:
    """Infinite-V value through sum_v u^2 / (u^2 + v^2) = pi u coth(pi u), split by parity of v."""
    u = abs(int(u))
    if u == 0:
        raise ValueError("a(u) is defined for u != 0")
    every = math.pi * u / math.tanh(math.pi * u)
    even = 0.5 * math.pi * u / math.tanh(0.5 * math.pi * u)
    same_parity = even if u % 2 == 0 else every - even
    return 2.0 * same_parity / u


def a_plateau(u_max: int = 64) -> float:
    return a_coefficient_closed(u_max)


def longtime_energy(f: TestFn1D, K: int = 512, check: bool = False) -> float:
    """S(f) = sum over |k|, |m| <= K, (k, m) != 0 of (k+m)^2 |f_hat(k+m)|^2 / (k^2 + m^2)."""
    _require_mean_zero(f)

    def value(K):
        return h1_seminorm(poisson_solve_diagonal(f, K))

    return _with_cutoff_check(value, K, check, "longtime_energy")


def longtime_energy_from_a(f: TestFn1D, V: int | None = None) -> float:
    """sum_u a(u) |u| |f_hat(u)|^2, the same series regrouped along antidiagonals."""
    _require_mean_zero(f)
    total = 0.0
    for u in range(-f.band, f.band + 1):
        c = abs(f.hat(u)) ** 2
        if u and c:
            a = a_coefficient_closed(u) if V is None else a_coefficient(u, V)
            total += a * abs(u) * c
    return total


# -- mollifier convergence -----------------------------------------------------------------


def mollifier_gap(f: TestFn1D, eps: float, K: int = 4096) -> float:
    """h1(psi^eps - psi^{eps/2})."""
    return h1_seminorm(poisson_solve_mollified(f, eps, K) - poisson_solve_mollified(f, eps / 2, K))


def lemma41_fit(f: TestFn1D, eps_list=(0.2, 0.1, 0.05, 0.025), K: int = 4096) -> dict:
    """Log-log slope of h1(psi^eps - psi^{eps/2}) in eps, and the constant C in <= C eps ||f'||^2."""
    eps = np.asarray(eps_list, dtype=np.float64)
    gaps = np.array([mollifier_gap(f, e, K) for e in eps])
    slope, _ = np.polyfit(np.log(eps), np.log(gaps), 1)
    C = float(np.max(gaps / (eps * f.dirichlet())))
    return {"slope": float(slope), "C": C, "eps": eps.tolist(), "gaps": gaps.tolist()}
