"""Path functionals of the lattice process, integrated exactly over the event partition.

Between two events the configuration is frozen, so every time integral is a
finite sum of (rate x interval length).  The kernels below walk the event log
once, keep ``v = F eb`` up to date in O(n) per effective swap, and accumulate
with Neumaier compensation.  Values at a sampling time ``t`` include every
event with time <= t.

For a symmetric 2D test function f:

    W_t   = Q_t - Q_0 - int_0^t kappa0 sum_x n xi_s(x) ds
    QV_t  = int_0^t sum_x (kappa0 xi_s(x))^2 ds
    log M^theta_t = theta (Q_t - Q_0) - int_0^t sum_x n^2 (exp(theta kappa0 xi_s(x) / n) - 1) ds

A swap across bond x moves Q by exactly kappa0 xi(x) / n, which is where the
QV and compensator rates come from.  For a 1D test function,
``A_t = int_0^t sum_x eb(x) eb(x+1) f'(x/n) ds``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .observables import c2, calibrate_kappa0
from .rng import make_rng
from .sep import EventLog, LatticeParams, sample_stationary, simulate
from .testfns import TestFn1D, TestFn2D

EXPONENT_LIMIT = 700.0
C_H = 0.25
TAG = "martingale-check"


class NumericalError(ArithmeticError):
    pass


@dataclass
class PathFunctionalSeries:
    kind: str
    times: np.ndarray
    values: np.ndarray
    theta: float | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite values in {self.kind} series")


def _check_grid(grid, horizon: float) -> np.ndarray:
    g = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    if g.size == 0:
        raise ValueError("sampling grid is empty")
    if np.any(np.diff(g) < 0):
        raise ValueError("sampling grid must be sorted")
    if g[0] < 0 or g[-1] > horizon * (1 + 1e-12):
        raise ValueError("sampling grid must lie in [0, horizon]")
    return g


# -- numba kernels -------------------------------------------------------------------


@njit(cache=True)
def _nadd(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(cache=True)
def _bond_rates(eb, v, F, a, b, kappa0, thetas, out_comp):
    """Return (drift rate, QV rate); fill compensator rates per theta."""
    n = eb.size
    drift_s = 0.0
    drift_c = 0.0
    qv_s = 0.0
    qv_c = 0.0
    nt = thetas.size
    for j in range(nt):
        out_comp[j] = 0.0
    for x in range(n):
        x1 = x + 1 if x + 1 < n else 0
        s = eb[x] - eb[x1]
        if s == 0.0:
            continue
        xi = s * ((v[x1] - v[x]) - eb[x] * a[x] - eb[x1] * b[x])
        jump = kappa0 * xi
        drift_s, drift_c = _nadd(drift_s, drift_c, xi)
        qv_s, qv_c = _nadd(qv_s, qv_c, jump * jump)
        for j in range(nt):
            out_comp[j] += math.expm1(thetas[j] * jump / n)
    n2 = float(n) * float(n)
    for j in range(nt):
        out_comp[j] *= n2
    return kappa0 * n * (drift_s + drift_c), qv_s + qv_c


@njit(cache=True)
def _quadratic_kernel(eb0, times, bonds, grid, F, kappa0, thetas):
    n = eb0.size
    G = grid.size
    nt = thetas.size
    m = times.size
    eb = eb0.copy()
    v = F @ eb
    x_idx = np.arange(n)
    x1_idx = (x_idx + 1) % n
    a = np.empty(n)
    b = np.empty(n)
    for x in range(n):
        x1 = x1_idx[x]
        a[x] = F[x, x1] - F[x, x]
        b[x] = F[x1, x1] - F[x1, x]
    trace = 0.0
    for x in range(n):
        trace += F[x, x]

    out_q = np.empty(G)
    out_drift = np.empty(G)
    out_qv = np.empty(G)
    out_comp = np.empty((nt, G))

    comp_rate = np.empty(nt)
    drift_rate, qv_rate = _bond_rates(eb, v, F, a, b, kappa0, thetas, comp_rate)
    di_s = 0.0
    di_c = 0.0
    qv_s = 0.0
    qv_c = 0.0
    cp_s = np.zeros(nt)
    cp_c = np.zeros(nt)
    t_prev = 0.0
    gi = 0
    for e in range(m + 1):
        t_ev = times[e] if e < m else np.inf
        while gi < G and grid[gi] < t_ev:
            dt = grid[gi] - t_prev
            di_s, di_c = _nadd(di_s, di_c, drift_rate * dt)
            qv_s, qv_c = _nadd(qv_s, qv_c, qv_rate * dt)
            for j in range(nt):
                cp_s[j], cp_c[j] = _nadd(cp_s[j], cp_c[j], comp_rate[j] * dt)
            t_prev = grid[gi]
            q = 0.0
            for x in range(n):
                q += eb[x] * v[x]
            out_q[gi] = (q - 0.25 * trace) / n
            out_drift[gi] = di_s + di_c
            out_qv[gi] = qv_s + qv_c
            for j in range(nt):
                out_comp[j, gi] = cp_s[j] + cp_c[j]
            gi += 1
        if e == m:
            break
        dt = t_ev - t_prev
        di_s, di_c = _nadd(di_s, di_c, drift_rate * dt)
        qv_s, qv_c = _nadd(qv_s, qv_c, qv_rate * dt)
        for j in range(nt):
            cp_s[j], cp_c[j] = _nadd(cp_s[j], cp_c[j], comp_rate[j] * dt)
        t_prev = t_ev
        x = bonds[e]
        x1 = x1_idx[x]
        delta = eb[x] - eb[x1]
        if delta != 0.0:
            eb[x] -= delta
            eb[x1] += delta
            for z in range(n):
                v[z] += delta * (F[z, x1] - F[z, x])
            drift_rate, qv_rate = _bond_rates(eb, v, F, a, b, kappa0, thetas, comp_rate)
    return out_q, out_drift, out_qv, out_comp


@njit(cache=True)
def _a_rate(eb, g):
    n = eb.size
    s = 0.0
    for x in range(n):
        x1 = x + 1 if x + 1 < n else 0
        s += eb[x] * eb[x1] * g[x]
    return s


@njit(cache=True)
def _a_kernel(eb0, times, bonds, grid, g, resync):
    """A_t = int sum_x eb(x) eb(x+1) g(x) ds with O(1) updates per swap."""
    n = eb0.size
    G = grid.size
    m = times.size
    eb = eb0.copy()
    rate = _a_rate(eb, g)
    out = np.empty(G)
    acc_s = 0.0
    acc_c = 0.0
    t_prev = 0.0
    gi = 0
    since = 0
    for e in range(m + 1):
        t_ev = times[e] if e < m else np.inf
        while gi < G and grid[gi] < t_ev:
            acc_s, acc_c = _nadd(acc_s, acc_c, rate * (grid[gi] - t_prev))
            t_prev = grid[gi]
            out[gi] = acc_s + acc_c
            gi += 1
        if e == m:
            break
        acc_s, acc_c = _nadd(acc_s, acc_c, rate * (t_ev - t_prev))
        t_prev = t_ev
        x = bonds[e]
        x1 = x + 1 if x + 1 < n else 0
        delta = eb[x] - eb[x1]
        if delta != 0.0:
            xm = x - 1 if x > 0 else n - 1
            x2 = x1 + 1 if x1 + 1 < n else 0
            # only the bonds (xm, x) and (x1, x2) change; bond (x, x1) is symmetric
            rate -= eb[xm] * eb[x] * g[xm] + eb[x1] * eb[x2] * g[x1]
            eb[x] -= delta
            eb[x1] += delta
            rate += eb[xm] * eb[x] * g[xm] + eb[x1] * eb[x2] * g[x1]
            since += 1
            if since >= resync:
                rate = _a_rate(eb, g)
                since = 0
    return out


# -- path functionals ------------------------------------------------------------------


def theta_max(f: TestFn2D, n: int, horizon: float, c_h: float = C_H) -> float:
    """sqrt(c_H / (2 T c2(f)))."""
    return math.sqrt(c_h / (2.0 * horizon * c2(f, n)))


def quadratic_functionals(log: EventLog, f: TestFn2D, grid, thetas=(), check_theta: bool = True) -> dict:
    """W, QV and (for each theta) M^theta along one event log."""
    f.require_symmetric()
    g = _check_grid(grid, log.horizon)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if check_theta and thetas.size:
        tmax = theta_max(f, log.n, log.horizon)
        bad = np.abs(thetas) > tmax
        if np.any(bad):
            raise ValueError(f"|theta| = {np.abs(thetas[bad]).max():.4g} exceeds theta_max = {tmax:.4g}")
    kappa0 = calibrate_kappa0()
    F = np.ascontiguousarray(f.grid(log.n), dtype=np.float64)
    eb0 = log.initial.astype(np.float64) - 0.5
    q, drift, qv, comp = _quadratic_kernel(eb0, log.times, log.bonds, g, F, kappa0, thetas)
    q0 = (math.fsum(eb0 * (F @ eb0)) - 0.25 * math.fsum(np.diag(F))) / log.n
    out = {
        "Q": PathFunctionalSeries("Q", g, q),
        "W": PathFunctionalSeries("W", g, q - q0 - drift),
        "QV": PathFunctionalSeries("QV", g, qv),
    }
    for j, th in enumerate(thetas.tolist()):
        expo = th * (q - q0) - comp[j]
        if np.any(np.abs(expo) > EXPONENT_LIMIT):
            raise NumericalError(f"exponential martingale exponent exceeds {EXPONENT_LIMIT} (theta={th})")
        out[f"M[{th:g}]"] = PathFunctionalSeries("M_theta", g, np.exp(expo), theta=th)
    return out


def path_W(log: EventLog, f: TestFn2D, grid) -> PathFunctionalSeries:
    return quadratic_functionals(log, f, grid)["W"]


def path_QV(log: EventLog, f: TestFn2D, grid) -> PathFunctionalSeries:
    return quadratic_functionals(log, f, grid)["QV"]


def exponential_martingale(log: EventLog, f: TestFn2D, theta: float, grid, check_theta: bool = True) -> PathFunctionalSeries:
    res = quadratic_functionals(log, f, grid, thetas=[theta], check_theta=check_theta)
    return res[f"M[{float(theta):g}]"]


def path_A(log: EventLog, f: TestFn1D, grid, resync: int | None = None) -> PathFunctionalSeries:
    g = _check_grid(grid, log.horizon)
    gd = np.ascontiguousarray(f.derivative().grid(log.n), dtype=np.float64)
    eb0 = log.initial.astype(np.float64) - 0.5
    vals = _a_kernel(eb0, log.times, log.bonds, g, gd, resync or max(log.n, 64))
    return PathFunctionalSeries("A", g, vals)


# -- ensembles ---------------------------------------------------------------------------


@dataclass
class EnsembleReport:
    statistic: str
    t: float
    n: int
    f_id: str
    replicas: int
    mean: float
    se: float
    target: float
    z: float
    passed: bool

    @classmethod
    def from_samples(cls, statistic, t, n, f_id, samples, target=0.0):
        x = np.asarray(samples, dtype=np.float64)
        r = x.size
        if r < 2:
            raise ValueError("an ensemble statistic needs at least 2 replicas")
        mean = math.fsum(x) / r
        se = float(np.std(x, ddof=1)) / math.sqrt(r)
        z = (mean - target) / se if se > 0 else (0.0 if mean == target else math.inf)
        return cls(statistic, float(t), int(n), f_id, r, mean, se, float(target), float(z), bool(abs(z) <= 3.0))


@dataclass
class EnsembleConfig:
    n: int = 64
    horizon: float = 0.5
    replicas: int = 2000
    theta: float = 0.1
    grid_points: int = 5
    f2d: tuple = ("cos_sum", "cos_prod")
    f1d: tuple = ("cos", "sin", "mixed")
    workers: int = 1

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.grid_points + 1)[1:]


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    seed: int
    reports: list[EnsembleReport]
    samples: dict = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "t", "n", "f_id", "replicas", "mean", "se", "z", "pass"])
        for r in self.reports:
            w.writerow([r.statistic, repr(r.t), r.n, r.f_id, r.replicas, repr(r.mean), repr(r.se), repr(r.z), int(r.passed)])
        return buf.getvalue()

    def manifest(self) -> dict:
        cfg = asdict(self.config)
        cfg["f2d"], cfg["f1d"] = list(cfg["f2d"]), list(cfg["f1d"])
        return {"config": cfg, "seed": int(self.seed), "stream_tag": TAG, "kappa0": calibrate_kappa0()}

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _replica(args):
    cfg, seed, r, f2, f1 = args
    try:
        rng = make_rng(seed, r, TAG)
        params = LatticeParams(cfg.n, cfg.horizon)
        log = simulate(params, sample_stationary(cfg.n, rng), rng, seed=seed, stream_id=r)
        grid = cfg.grid()
        out = {}
        for fid, f in f2.items():
            res = quadratic_functionals(log, f, grid, thetas=[cfg.theta])
            out[("W", fid)] = res["W"].values
            out[("QV", fid)] = res["QV"].values
            out[("M", fid)] = res[f"M[{cfg.theta:g}]"].values
        for fid, f in f1.items():
            out[("A", fid)] = path_A(log, f, grid).values
        return out
    except Exception as exc:  # attach replica index
        raise RuntimeError(f"replica {r} failed: {exc}") from exc


def ensemble_run(cfg: EnsembleConfig, seed: int, f2: dict[str, TestFn2D], f1: dict[str, TestFn1D]) -> EnsembleResult:
    """Run independent replicas on split streams and evaluate the martingale battery."""
    if cfg.replicas < 2:
        raise ValueError("replicas must be >= 2 (standard errors are undefined otherwise)")
    for fid, f in f2.items():
        tmax = theta_max(f, cfg.n, cfg.horizon)
        if abs(cfg.theta) > tmax:
            raise ValueError(f"theta={cfg.theta} exceeds theta_max={tmax:.4g} for {fid}")
    jobs = [(cfg, seed, r, f2, f1) for r in range(cfg.replicas)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_replica, jobs, chunksize=max(1, cfg.replicas // (4 * cfg.workers))))
    else:
        results = [_replica(j) for j in jobs]
    keys = results[0].keys()
    samples = {k: np.stack([res[k] for res in results]) for k in keys}
    grid = cfg.grid()
    reports = []
    for fid in f2:
        W, QV, M = samples[("W", fid)], samples[("QV", fid)], samples[("M", fid)]
        for i, t in enumerate(grid):
            reports.append(EnsembleReport.from_samples("W", t, cfg.n, fid, W[:, i]))
            reports.append(EnsembleReport.from_samples("W2-QV", t, cfg.n, fid, W[:, i] ** 2 - QV[:, i]))
            reports.append(EnsembleReport.from_samples(f"M[{cfg.theta:g}]", t, cfg.n, fid, M[:, i], target=1.0))
            if i > 0:
                inc = (W[:, i] - W[:, i - 1]) * np.sign(W[:, i - 1])
                reports.append(EnsembleReport.from_samples("dW*sign(W_s)", t, cfg.n, fid, inc))
    for fid in f1:
        A = samples[("A", fid)]
        for i, t in enumerate(grid):
            reports.append(EnsembleReport.from_samples("A", t, cfg.n, fid, A[:, i]))
    return EnsembleResult(cfg, seed, reports, samples)
