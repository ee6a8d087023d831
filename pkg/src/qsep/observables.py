"""Fluctuation fields and finite-difference operators on lattice configurations.

Notation: ``eta`` is an occupancy vector on sites ``0..n-1``, ``eb = eta - 1/2``
is the centred configuration, and a 2D test function ``f`` enters through its
lattice grid ``F[i, j] = f(i/n, j/n)``.  Bond ``x`` joins sites ``x`` and
``x1 = x+1 mod n``.

The drift of ``Q^n(f)`` under the generator carries a constant ``kappa0``
relating it to ``sum_x n xi(f; x)``; it is not assumed but measured once by
exhaustive comparison with ``generator_apply`` (see ``calibrate_kappa0``).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .sep import all_configurations, as_configuration, generator_apply
from .testfns import TestFn1D, TestFn2D, TestFunctionError, random_trig_2d

CALIBRATION_TOL = 1e-9
KAPPA0_CANDIDATES = (1.0, 2.0)
DIAGONAL_CONVENTIONS = ("literal", "literal-offdiag", "bond")


class CalibrationError(RuntimeError):
    pass


def _centered(config, n: int | None = None) -> np.ndarray:
    return as_configuration(config, n).astype(np.float64) - 0.5


def _grid2d(f, n: int) -> np.ndarray:
    if isinstance(f, TestFn2D):
        return f.grid(n)
    F = np.asarray(f, dtype=np.float64)
    if F.shape != (n, n):
        raise ValueError(f"grid has shape {F.shape}, expected {(n, n)}")
    return F


# -- fields ---------------------------------------------------------------------


def density_field(config, f: TestFn1D) -> float:
    """Y^n(f) = n^{-1/2} sum_x (eta(x) - 1/2) f(x)."""
    eb = _centered(config)
    n = eb.size
    return math.fsum(eb * f.grid(n)) / math.sqrt(n)


def quadratic_sum(config, f) -> float:
    """n^{-1} sum over ordered pairs x != y of eb(x) eb(y) f(x, y), with no symmetry check.

    ``f`` may be a TestFn2D or a raw (n, n) grid.  Antisymmetric inputs give
    zero because the ordered-pair sum cancels them term by term.
    """
    eb = _centered(config)
    n = eb.size
    F = _grid2d(f, n)
    terms = np.outer(eb, eb) * F
    np.fill_diagonal(terms, 0.0)
    # pair (x,y) with (y,x) before summing so antisymmetric parts cancel exactly
    upper = np.triu(terms, 1) + np.triu(terms.T, 1)
    return math.fsum(upper.ravel()) / n


def quadratic_field(config, f: TestFn2D) -> float:
    """Q^n(f) for a symmetric test function."""
    f.require_symmetric()
    return quadratic_sum(config, f)


def _bond_coefficients(F: np.ndarray):
    n = F.shape[0]
    x = np.arange(n)
    x1 = (x + 1) % n
    a = F[x1, x] - F[x, x]
    b = F[x1, x1] - F[x, x1]
    return x1, a, b


def xi_all(config, f) -> np.ndarray:
    """xi^n(f; x) for every bond x.

    xi(x) = (eta(x) - eta(x1)) * sum_{z != x, x1} eb(z) (f(z, x1) - f(z, x)).
    """
    eb = _centered(config)
    n = eb.size
    F = _grid2d(f, n)
    x1, _, _ = _bond_coefficients(F)
    u = F.T @ eb  # u[j] = sum_z F[z, j] eb[z]
    x = np.arange(n)
    inner = (u[x1] - u) - eb * (F[x, x1] - F[x, x]) - eb[x1] * (F[x1, x1] - F[x1, x])
    return (eb - eb[x1]) * inner


def xi(config, f, x: int) -> float:
    eb = _centered(config)
    n = eb.size
    if not 0 <= x < n:
        raise ValueError(f"site {x} outside 0..{n - 1}")
    F = _grid2d(f, n)
    x1 = (x + 1) % n
    z = np.array([i for i in range(n) if i not in (x, x1)], dtype=np.int64)
    s = eb[x] - eb[x1]
    return float(s * math.fsum(eb[z] * (F[z, x1] - F[z, x])))


def drift_field(config, f: TestFn2D, kappa0: float | None = None) -> float:
    """kappa0 * sum_x n xi(f; x), the drift of Q^n(f) under the generator."""
    f.require_symmetric()
    k0 = calibrate_kappa0() if kappa0 is None else kappa0
    eb = _centered(config)
    n = eb.size
    return k0 * n * math.fsum(xi_all(config, f))


def bond_indicator(config, x: int) -> int:
    """c_x(eta) = (eta(x) - eta(x+1))^2."""
    eta = as_configuration(config)
    return int((int(eta[x]) - int(eta[(x + 1) % eta.size])) ** 2)


def bond_indicators(config) -> np.ndarray:
    eta = as_configuration(config).astype(np.int64)
    return (eta - np.roll(eta, -1)) ** 2


def a_field_integrand(config, f: TestFn1D) -> float:
    """sum_x eb(x) eb(x+1) f'(x/n), the integrand of A^n_t(f)."""
    eb = _centered(config)
    n = eb.size
    return math.fsum(eb * np.roll(eb, -1) * f.derivative().grid(n))


# -- discrete operators ------------------------------------------------------------


def laplacian_symbol(k, n: int) -> np.ndarray:
    """Eigenvalue of Delta_n on exp(2 pi i k x): -2 n^2 (1 - cos(2 pi k / n))."""
    k = np.asarray(k, dtype=np.float64)
    return -2.0 * n**2 * (1.0 - np.cos(2.0 * np.pi * k / n))


def discrete_laplacian_1d(f: TestFn1D, n: int) -> TestFn1D:
    """Delta_n f(x) = n^2 (f(x+1/n) + f(x-1/n) - 2 f(x)), exact on trigonometric polynomials."""
    return TestFn1D(f.coef * laplacian_symbol(f.modes, n), name=f"lap_{n}({f.name})")


def discrete_laplacian_2d(f: TestFn2D, n: int) -> TestFn2D:
    lam = laplacian_symbol(f.modes, n)
    return TestFn2D(f.coef * (lam[:, None] + lam[None, :]), name=f"lap_{n}({f.name})")


def diag_restriction(f: TestFn2D) -> TestFn1D:
    return f.diag()


def bond_curvature(f: TestFn2D, n: int) -> np.ndarray:
    """B_n f(x) = -2 n^2 (f(x,x) + f(x1,x1) - 2 f(x,x1)), second difference across a bond."""
    F = f.grid(n)
    x = np.arange(n)
    x1 = (x + 1) % n
    return -2.0 * n**2 * (F[x, x] + F[x1, x1] - 2.0 * F[x, x1])


# -- decomposition of the drift ----------------------------------------------------


def rhs_terms(config, f: TestFn2D, convention: str) -> tuple[float, float]:
    """(bulk, diagonal) parts of the drift decomposition under a named convention.

    ``literal``        bulk over all pairs, diagonal -(1/2n) sum c_x Delta_n diag(f)(x)
    ``literal-offdiag``  bulk over x != z, same diagonal term
    ``bond``           bulk over x != z, diagonal -(1/2n) sum (c_x - 1/2) B_n f(x)
    """
    if convention not in DIAGONAL_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {DIAGONAL_CONVENTIONS}")
    eb = _centered(config)
    n = eb.size
    L = discrete_laplacian_2d(f, n).grid(n)
    pair = np.outer(eb, eb) * L
    if convention == "literal":
        bulk = math.fsum(pair.ravel()) / n
    else:
        np.fill_diagonal(pair, 0.0)
        bulk = math.fsum(pair.ravel()) / n
    c = bond_indicators(config).astype(np.float64)
    if convention == "bond":
        diag = -math.fsum((c - 0.5) * bond_curvature(f, n)) / (2.0 * n)
    else:
        diag = -math.fsum(c * discrete_laplacian_1d(f.diag(), n).grid(n)) / (2.0 * n)
    return bulk, diag


def rhs_decomposition(config, f: TestFn2D, convention: str | None = None) -> float:
    f.require_symmetric()
    conv = calibrate_diagonal_convention() if convention is None else convention
    bulk, diag = rhs_terms(config, f, conv)
    return bulk + diag


def _calibration_functions() -> list[TestFn2D]:
    from .testfns import suite_2d

    rng = np.random.default_rng(20240607)
    return list(suite_2d().values()) + [random_trig_2d(rng, K=2) for _ in range(3)]


def _generator_of_q(f: TestFn2D, n: int) -> np.ndarray:
    return np.array([generator_apply(lambda e: quadratic_sum(e, f), eta) for eta in all_configurations(n)])


@lru_cache(maxsize=None)
def calibrate_kappa0(n: int = 4) -> float:
    """Pick kappa0 in {1, 2} so that kappa0 sum_x n xi matches L_n Q^n on every configuration."""
    fs = _calibration_functions()
    worst = {k: 0.0 for k in KAPPA0_CANDIDATES}
    for f in fs:
        target = _generator_of_q(f, n)
        raw = np.array([n * math.fsum(xi_all(eta, f)) for eta in all_configurations(n)])
        for k in KAPPA0_CANDIDATES:
            worst[k] = max(worst[k], float(np.max(np.abs(k * raw - target))))
    good = [k for k in KAPPA0_CANDIDATES if worst[k] <= CALIBRATION_TOL]
    if len(good) != 1:
        raise CalibrationError(f"kappa0 calibration failed at n={n}: max deviations {worst}")
    return good[0]


@lru_cache(maxsize=None)
def calibrate_diagonal_convention(n: int = 6) -> str:
    """Return the first diagonal convention that reproduces drift_field exactly at size n."""
    fs = _calibration_functions()
    configs = all_configurations(n)
    deviations = {}
    for conv in DIAGONAL_CONVENTIONS:
        worst = 0.0
        for f in fs:
            for eta in configs:
                worst = max(worst, abs(sum(rhs_terms(eta, f, conv)) - drift_field(eta, f)))
        deviations[conv] = worst
        if worst <= CALIBRATION_TOL:
            return conv
    raise CalibrationError(f"no diagonal convention reproduces the drift at n={n}: {deviations}")


# -- bounds ------------------------------------------------------------------------


def _bond_differences(f, n: int) -> np.ndarray:
    """D[z, x] = f(z, x1) - f(z, x) with the z in {x, x1} entries zeroed."""
    F = _grid2d(f, n)
    x = np.arange(n)
    x1 = (x + 1) % n
    D = F[:, x1] - F[:, x]
    D[x, x] = 0.0
    D[x1, x] = 0.0
    return D


def c1(f, n: int) -> float:
    """A priori bound |xi| <= c1: (1/2) sup n |f(z, x1) - f(z, x)|."""
    return 0.5 * n * float(np.max(np.abs(_bond_differences(f, n))))


def c2(f, n: int) -> float:
    """max_x n sum_{z != x, x1} (f(z, x1) - f(z, x))^2, so that E xi^2 <= c2 / n."""
    D = _bond_differences(f, n)
    return n * float(np.max(np.sum(D**2, axis=0)))


def xi_second_moment(f, n: int) -> np.ndarray:
    """Exact E[xi(f; x)^2] under the Bernoulli(1/2) product measure, per bond x."""
    D = _bond_differences(f, n)
    return np.sum(D**2, axis=0) / 8.0
