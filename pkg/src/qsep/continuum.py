"""Spectral simulation of the stationary Ornstein-Uhlenbeck field and its quadratic functionals.

The field is ``Y(x) = sum_k Yhat_k exp(2 pi i k x)`` with ``Yhat_{-k} = conj(Yhat_k)``.
Non-zero modes follow

    dYhat_k = -4 pi^2 k^2 Yhat_k dt + (1/sqrt 2) (2 pi i k) d omega_k,     E|d omega_k|^2 = dt,

and have stationary variance ``E|Yhat_k|^2 = 1/4``.  The mean mode ``Yhat_0``
feels neither the Laplacian nor the noise.  Under white noise of variance
1/4 it is a frozen N(0, 1/4) variable, which is also what the lattice
density field does (particle number is conserved).  It is kept by default
(``mean_mode=True``).

States are batched: ``modes`` has shape (replicas, K+1), column k holding
``Yhat_k`` for k = 0..K.

Quadratic functionals for a real symmetric g on T^2:

    Q(g) = sum_{k,m} conj(ghat(k,m)) (Yhat_k Yhat_m - E[Yhat_k Yhat_m])
    dW(h) = sqrt 2 sum_m H_m d omega_m,   H_m = sum_k conj(hhat(k,m)) (2 pi i m) Yhat_k
    d<W(h)> = 2 sum_m |H_m|^2 dt = 2 int Y(g_x)^2 dx dt,   g_x(z) = d_2 h(z, x)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    FOUR_PI2,
    SpectralField2D,
    diagonal_source,
    heat_semigroup,
    kappa_closed_form,
    longtime_energy,
    poisson_solve_diagonal,
)
from .testfns import TestFn1D, TestFn2D

SQRT2 = math.sqrt(2.0)
Q_VARIANCE_CONSTANT = 1.0 / 8.0  # Var Q(g) = (1/8) ||g||^2 for symmetric g


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian, E|Z|^2 = 1."""
    z = rng.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) / SQRT2


@dataclass
class OUState:
    modes: np.ndarray
    time: float = 0.0
    mean_mode: bool = True

    @property
    def K(self) -> int:
        return self.modes.shape[1] - 1

    @property
    def replicas(self) -> int:
        return self.modes.shape[0]

    def full(self) -> np.ndarray:
        """Modes k = -K..K, shape (replicas, 2K+1)."""
        return np.concatenate([np.conj(self.modes[:, :0:-1]), self.modes], axis=1)

    def Y(self, f: TestFn1D) -> np.ndarray:
        """Y(f) = sum_k Yhat_k conj(fhat(k)) for each replica."""
        k = np.arange(1, self.K + 1)
        if f.band > self.K:
            raise ValueError(f"test function band {f.band} exceeds the field cutoff {self.K}")
        val = 2.0 * np.real(self.modes[:, 1:] @ np.conj(f.hat(k)))
        return val + np.real(self.modes[:, 0]) * np.real(f.hat(0))

    def copy(self) -> "OUState":
        return OUState(self.modes.copy(), self.time, self.mean_mode)


def ou_stationary_sample(K: int, rng: np.random.Generator, replicas: int = 1, mean_mode: bool = True) -> OUState:
    if K < 1:
        raise ValueError("K must be >= 1")
    modes = 0.5 * _complex_normal(rng, (replicas, K + 1))
    modes[:, 0] = 0.5 * rng.standard_normal(replicas) if mean_mode else 0.0
    return OUState(modes, 0.0, mean_mode)


def ou_rates(K: int) -> np.ndarray:
    """lambda_k = 4 pi^2 k^2 for k = 0..K."""
    return FOUR_PI2 * np.arange(K + 1, dtype=np.float64) ** 2


def ou_step_moments(K: int, dt: float):
    """Per-mode decay, innovation variance (1/4)(1 - e^{-2 lambda dt}), and the noise moments.

    Returns (decay, innov_var, var_I, cov_I) where I = int_0^dt e^{-lambda (dt - r)} d omega_r,
    var_I = E|I|^2 and cov_I = E[I conj(Delta omega)].
    """
    lam = ou_rates(K)
    decay = np.exp(-lam * dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_I = np.where(lam > 0, -np.expm1(-2.0 * lam * dt) / (2.0 * lam), dt)
        cov_I = np.where(lam > 0, -np.expm1(-lam * dt) / lam, dt)
    innov_var = 0.5 * (2.0 * np.pi * np.arange(K + 1)) ** 2 * var_I
    return decay, innov_var, var_I, cov_I


def ou_step_exact(state: OUState, dt: float, rng: np.random.Generator, return_noise: bool = False):
    """Exact transition over dt; optionally also return the Brownian increments d omega_k (k >= 1)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    K, R = state.K, state.replicas
    decay, _, var_I, cov_I = ou_step_moments(K, dt)
    decay, var_I, cov_I = decay[1:], var_I[1:], cov_I[1:]
    dw = math.sqrt(dt) * _complex_normal(rng, (R, K))
    resid = np.sqrt(np.maximum(var_I - cov_I**2 / dt, 0.0))
    I = (cov_I / dt) * dw + resid * _complex_normal(rng, (R, K))
    k = np.arange(1, K + 1)
    new = state.modes.copy()
    new[:, 1:] = decay * new[:, 1:] + (1j * 2.0 * np.pi * k / SQRT2) * I
    out = OUState(new, state.time + dt, state.mean_mode)
    return (out, dw) if return_noise else out


# -- quadratic functionals ---------------------------------------------------------------


def _as_field(g, K: int) -> SpectralField2D:
    if isinstance(g, SpectralField2D):
        field = g
    elif isinstance(g, TestFn2D):
        g.require_symmetric()
        field = SpectralField2D.from_dense(g.coef)
    else:
        raise TypeError("expected a TestFn2D or SpectralField2D")
    if field.K > K:
        k, m = field.k, field.m
        outside = (np.abs(k) > K) | (np.abs(m) > K)
        if np.any(np.abs(field.coeffs[outside]) > 0):
            raise ValueError(f"test function band exceeds the field cutoff K={K}")
    return field


def _rows(field: SpectralField2D, K: int):
    """Yield (j, k, m, coef) for each non-empty antidiagonal, restricted to |k|, |m| <= K."""
    kk = np.arange(-field.K, field.K + 1)
    for row, j in enumerate(range(-field.J, field.J + 1)):
        c = field.coeffs[row]
        m = j - kk
        ok = (np.abs(kk) <= K) & (np.abs(m) <= K) & (c != 0)
        if np.any(ok):
            yield j, kk[ok], m[ok], c[ok]


def wick_quadratic(state: OUState, g) -> np.ndarray:
    """Q(g) per replica, centred so that E Q(g) = 0."""
    K = state.K
    field = _as_field(g, K)
    Yf = state.full()
    out = np.zeros(state.replicas)
    for j, k, m, c in _rows(field, K):
        out += np.real((Yf[:, k + K] * Yf[:, m + K]) @ np.conj(c))
        if j == 0:
            live = k != 0 if not state.mean_mode else np.ones_like(k, dtype=bool)
            out -= 0.25 * float(np.real(np.sum(np.conj(c[live]))))
    return out


def wick_product(state: OUState, f1: TestFn1D, f2: TestFn1D) -> np.ndarray:
    """Y(f1) Y(f2) - (1/4) <f1, f2>, the product-form Wick square."""
    K = max(f1.K, f2.K)
    k = np.arange(-K, K + 1)
    live = np.ones(k.size, bool) if state.mean_mode else k != 0
    ip = float(np.real(np.sum((f1.hat(k) * np.conj(f2.hat(k)))[live])))
    return state.Y(f1) * state.Y(f2) - 0.25 * ip


def gradient_coefficients(state: OUState, h) -> np.ndarray:
    """H_m = sum_k conj(hhat(k, m)) (2 pi i m) Yhat_k, shape (replicas, 2K+1) over m = -K..K."""
    K = state.K
    field = _as_field(h, K)
    Yf = state.full()
    H = np.zeros((state.replicas, 2 * K + 1), dtype=complex)
    for _, k, m, c in _rows(field, K):
        H[:, m + K] += Yf[:, k + K] * (np.conj(c) * (2j * np.pi * m))
    return H


def g_energy(state: OUState, h) -> np.ndarray:
    """int Y(g_x)^2 dx with g_x(z) = d_2 h(z, x); equals sum_m |H_m|^2.

    Symmetry of h is not needed here, so product functions f1 (x) f2 are accepted.
    """
    if isinstance(h, TestFn2D) and not h.is_symmetric:
        field = SpectralField2D.from_dense(h.coef)
        K = state.K
        Yf = state.full()
        H = np.zeros((state.replicas, 2 * K + 1), dtype=complex)
        for _, k, m, c in _rows(field, K):
            H[:, m + K] += Yf[:, k + K] * (np.conj(c) * (2j * np.pi * m))
    else:
        H = gradient_coefficients(state, h)
    return np.sum(np.abs(H) ** 2, axis=1)


def qv_rate(state: OUState, h) -> np.ndarray:
    """d<W(h)>/dt = 2 sum_m |H_m|^2."""
    return 2.0 * g_energy(state, h)


def martingale_increment(H: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """sqrt 2 sum_m H_m d omega_m, using H_{-m} = conj(H_m) and d omega_{-m} = conj(d omega_m)."""
    K = dw.shape[1]
    return 2.0 * SQRT2 * np.real(np.sum(H[:, K + 1 :] * dw, axis=1))


# -- paths ----------------------------------------------------------------------------------


@dataclass
class ContinuumPath:
    state: OUState
    dt: float
    W: np.ndarray = None
    QV: np.ndarray = None
    drift: np.ndarray = None
    A_eps: np.ndarray = None
    q0: np.ndarray = None
    steps: int = 0
    _last_q: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        R = self.state.replicas
        for name in ("W", "QV", "drift", "A_eps"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(R))

    @property
    def time(self) -> float:
        return self.state.time


def martingale_step(path: ContinuumPath, f: TestFn2D, rng: np.random.Generator, dt: float | None = None) -> ContinuumPath:
    """Advance one left-point step of W(f) and its quadratic variation, with an exact OU move."""
    dt = path.dt if dt is None else dt
    if path.q0 is None:
        path.q0 = wick_quadratic(path.state, f)
    H = gradient_coefficients(path.state, f)
    path.QV += 2.0 * np.sum(np.abs(H) ** 2, axis=1) * dt
    path.drift += wick_quadratic(path.state, f.laplacian()) * dt
    path.state, dw = ou_step_exact(path.state, dt, rng, return_noise=True)
    path.W += martingale_increment(H, dw)
    path.steps += 1
    return path


def pathwise_residual(path: ContinuumPath, f: TestFn2D) -> np.ndarray:
    """Q_t(f) - Q_0(f) - int_0^t Q_s(Delta f) ds - W_t(f), which shrinks with dt."""
    return wick_quadratic(path.state, f) - path.q0 - path.drift - path.W


def mollified_source(f: TestFn1D, eps: float, K: int) -> SpectralField2D:
    """(f' (x) delta) * iota_eps on the modes |k|, |m| <= K."""
    return diagonal_source(f, K, eps)


def a_eps_step(path: ContinuumPath, f: TestFn1D, eps: float, rng: np.random.Generator, dt: float | None = None) -> ContinuumPath:
    """Trapezoidal step of A^eps_t(f) = int_0^t Q_s((f' (x) delta) * iota_eps) ds."""
    dt = path.dt if dt is None else dt
    g = mollified_source(f, eps, path.state.K)
    if path._last_q is None:
        path._last_q = wick_quadratic(path.state, g)
    path.state = ou_step_exact(path.state, dt, rng)
    q = wick_quadratic(path.state, g)
    path.A_eps += 0.5 * dt * (path._last_q + q)
    path._last_q = q
    path.steps += 1
    return path


# -- exact oracles ------------------------------------------------------------------------


def _mode_mask(field: SpectralField2D, mean_mode: bool) -> np.ndarray:
    m = field.mask.copy()
    if not mean_mode:
        m &= (field.k != 0) & (field.m != 0)
    return m


def q_variance(g: SpectralField2D, mean_mode: bool = True) -> float:
    """Var Q(g) = (1/8) sum |ghat|^2 for symmetric g."""
    return Q_VARIANCE_CONSTANT * float(np.sum(np.abs(g.coeffs[_mode_mask(g, mean_mode)]) ** 2))


def exact_var_A(f: TestFn1D, t: float, K: int = 512, eps: float | None = None, mean_mode: bool = True) -> float:
    """Var int_0^t Q_s(g) ds with g = (f' (x) delta) * iota_eps, from Cov(Q_s(g), Q_0(g)) = (1/8) sum |ghat|^2 e^{-lambda s}."""
    g = diagonal_source(f, K, eps)
    mask = _mode_mask(g, mean_mode) & (g.radius2 > 0)
    lam = FOUR_PI2 * g.radius2[mask]
    x = lam * t
    # 2 (x - 1 + e^{-x}) / lambda^2, written to stay accurate for small x
    kern = np.where(x > 1e-4, 2.0 * (x + np.expm1(-x)) / lam**2, t * t * (1.0 - x / 3.0 + x * x / 12.0))
    return Q_VARIANCE_CONSTANT * float(np.sum(np.abs(g.coeffs[mask]) ** 2 * kern))


def longtime_prediction(f: TestFn1D, K: int = 512) -> float:
    """lim Var A_t(f) / t = 2 * (1/8) * S(f) = S(f) / 4."""
    return 2.0 * Q_VARIANCE_CONSTANT * longtime_energy(f, K)


def smalltime_prediction(f: TestFn1D) -> float:
    """lim Var A_t(f) / t^{3/2} as t -> 0, equal to (2 + sqrt 2) (kappa/4) <f, -Delta f>."""
    return (2.0 + SQRT2) * kappa_closed_form() / 4.0 * f.dirichlet()


def stated_smalltime_amplitude(f: TestFn1D) -> float:
    """(kappa/4) <f, -Delta f>."""
    return kappa_closed_form() / 4.0 * f.dirichlet()


def y_autocovariance(f: TestFn1D, lag: float) -> float:
    """E[Y_0(f) Y_lag(f)] = (1/4) sum_{k != 0} |fhat(k)|^2 e^{-4 pi^2 k^2 lag} (+ the frozen mean mode)."""
    k = f.modes
    return 0.25 * float(np.sum(np.abs(f.coef) ** 2 * np.exp(-FOUR_PI2 * k**2 * lag)))


# -- Monte Carlo estimators -----------------------------------------------------------------


@dataclass
class VarianceEstimate:
    mean: float
    var: float
    se_mean: float
    se_var: float
    replicas: int

    @classmethod
    def from_samples(cls, x) -> "VarianceEstimate":
        x = np.asarray(x, dtype=np.float64)
        R = x.size
        mu = float(np.mean(x))
        d = x - mu
        var = float(np.sum(d * d) / (R - 1))
        m4 = float(np.mean(d**4))
        se_var = math.sqrt(max(m4 - var * var, 0.0) / R)
        return cls(mu, var, math.sqrt(var / R), se_var, R)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _rms_gap(lam: np.ndarray, a: float, b: float) -> np.ndarray:
    """sqrt of the mean of (1 - e^{-lam r})^2 over r in [a, b]."""
    r = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    vals = np.expm1(-np.multiply.outer(lam, r)) ** 2
    return np.sqrt(0.5 * vals @ _GL_W)


def duhamel_grid(t: float, K: int, steps: int) -> np.ndarray:
    """Lags r = t - s from t down to 0, geometric so that short lags (fast modes) are resolved."""
    lam_max = FOUR_PI2 * 2.0 * K * K
    r_min = min(t, 0.1 / lam_max)
    r = t * np.geomspace(1.0, r_min / t, steps) if r_min < t else np.linspace(t, 0.0, steps + 1)[:-1]
    return np.append(r, 0.0)


def a_duhamel_samples(
    f: TestFn1D, t: float, K: int, replicas: int, rng: np.random.Generator,
    steps: int = 48, batch: int = 1000, mean_mode: bool = True,
) -> np.ndarray:
    """Samples of A_t(f) = Q_0(P_t psi - psi) + int_0^t dW_s(P_{t-s} psi - psi).

    The martingale term uses left-point evaluation on a geometric lag grid.  On
    each step the kernel factor (1 - e^{-lambda r}) is replaced by its RMS over
    the step, which keeps the variance of the stochastic integral exact for
    any grid.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    psi = poisson_solve_diagonal(f, K)
    initial = heat_semigroup(psi, t) - psi
    lags = duhamel_grid(t, K, steps)
    lam = FOUR_PI2 * psi.radius2
    kernels = []
    for b, a in zip(lags[:-1], lags[1:]):
        gap = _rms_gap(lam.ravel(), a, b).reshape(lam.shape)
        kernels.append((b - a, psi.multiply(-gap)))
    out = []
    for start in range(0, replicas, batch):
        R = min(batch, replicas - start)
        state = ou_stationary_sample(K, rng, R, mean_mode)
        acc = wick_quadratic(state, initial)
        for ds, h in kernels:
            H = gradient_coefficients(state, h)
            state, dw = ou_step_exact(state, ds, rng, return_noise=True)
            acc += martingale_increment(H, dw)
        out.append(acc)
    return np.concatenate(out)


def a_duhamel_stats(f: TestFn1D, t: float, K: int, replicas: int, rng: np.random.Generator, **kw) -> VarianceEstimate:
    return VarianceEstimate.from_samples(a_duhamel_samples(f, t, K, replicas, rng, **kw))


def fbm_rescale_check(
    f: TestFn1D, eps_list, replicas: int, rng: np.random.Generator, K: int = 512,
    ts=(0.5, 1.0, 2.0), tol: float = 0.15,
) -> dict:
    """Variance of eps^{-3/4} A_{eps t}(f) against c t^{3/2}, per eps.

    Increments of A are stationary (Y is), so Cov(A_s, A_t) follows from the
    variance function: (V(s) + V(t) - V(|t - s|)) / 2.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be decreasing")
    rows = []
    for eps in eps_list:
        est = {t: a_duhamel_stats(f, eps * t, K, replicas, rng) for t in ts}
        scale = eps ** -1.5
        V = {t: est[t].var * scale for t in ts}
        c = float(np.mean([V[t] / t**1.5 for t in ts]))
        ratio = V[2.0] / V[1.0] if 2.0 in V and 1.0 in V else float("nan")
        # disjoint increments over [0, 1] and [1, 2]
        inc_cov = 0.5 * (V[2.0] - 2.0 * V[1.0]) if 2.0 in V and 1.0 in V else float("nan")
        fbm_inc = 0.5 * c * (2.0**1.5 - 2.0)
        cov_pairs = []
        for s in ts:
            for u in ts:
                if s < u and (u - s) in V:
                    mc = 0.5 * (V[s] + V[u] - V[u - s])
                    form = 0.5 * c * (s**1.5 + u**1.5 - (u - s) ** 1.5)
                    cov_pairs.append((s, u, mc, form))
        rows.append({
            "eps": eps,
            "var": {str(t): V[t] for t in ts},
            "se": {str(t): est[t].se_var * scale for t in ts},
            "c": c,
            "ratio_2_1": ratio,
            "ratio_ok": bool(abs(ratio / 2.0**1.5 - 1.0) <= 0.10),
            "increment_cov": inc_cov,
            "increment_cov_fbm": fbm_inc,
            "increments_positive": bool(inc_cov > 0),
            "cov_pairs": [list(p) for p in cov_pairs],
            "cov_ok": bool(all(abs(mc / form - 1.0) <= tol for _, _, mc, form in cov_pairs)),
        })
    return {"rows": rows, "predicted_c": smalltime_prediction(f), "stated_c": stated_smalltime_amplitude(f)}


def y_autocovariance_mc(f: TestFn1D, lag: float, K: int, replicas: int, rng: np.random.Generator, batch: int = 20000):
    """Monte Carlo E[Y_0(f) Y_lag(f)] with its standard error."""
    prods = []
    for start in range(0, replicas, batch):
        R = min(batch, replicas - start)
        s0 = ou_stationary_sample(K, rng, R)
        s1 = ou_step_exact(s0, lag, rng)
        prods.append(s0.Y(f) * s1.Y(f))
    p = np.concatenate(prods)
    return float(np.mean(p)), float(np.std(p, ddof=1) / math.sqrt(p.size))
