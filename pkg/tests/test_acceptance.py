"""End-to-end acceptance criteria, each at its stated tolerance.

Each check appends one PASS/FAIL line to the "acceptance criteria" section
of the pytest terminal summary.  Two stated targets disagree with the exact
oracles computed here; those tests carry a strict xfail, so they show FAIL in
the summary while the suite stays green, and they turn red if they ever
start to pass.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SMALL_CONFIGS
from qsep import cli
from qsep import continuum as C
from qsep import martingale as M
from qsep import observables as O
from qsep import spectral as S
from qsep.rng import make_rng
from qsep.sep import LatticeParams, all_configurations, generator_apply, sample_stationary, simulate
from qsep.testfns import cos_mode, suite_1d, suite_2d

SEED = 20240607
COS = cos_mode(1)


def record(label, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
    return passed


# -- 1, 2: exact lattice identities -----------------------------------------------------------


def test_c01_generator_drift_identity():
    kappa0 = O.calibrate_kappa0()
    worst = 0.0
    for n in (4, 6, 8):
        configs = all_configurations(n)
        for f in suite_2d().values():
            for eta in configs:
                gen = generator_apply(lambda e: O.quadratic_field(e, f), eta)
                worst = max(worst, abs(O.drift_field(eta, f) - gen))
    ok = worst <= 1e-9
    record("1 generator/drift identity", ok, f"max |drift - L Q| = {worst:.2e} over n in 4,6,8 (tol 1e-9), calibrated kappa0 = {kappa0:g}")
    assert ok


def test_c02_decomposition_n6():
    conv = O.calibrate_diagonal_convention()
    worst = max(abs(O.rhs_decomposition(eta, f) - O.drift_field(eta, f)) for f in suite_2d().values() for eta in all_configurations(6))
    ok = worst <= 1e-9
    record("2 drift decomposition n=6", ok, f"max residual {worst:.2e} on 64 configurations (tol 1e-9), diagonal convention '{conv}'")
    assert ok


# -- 3: martingale battery --------------------------------------------------------------------


@pytest.fixture(scope="module")
def battery():
    cfg = M.EnsembleConfig(n=64, horizon=0.5, replicas=2000, theta=0.1, grid_points=1, f1d=())
    return M.ensemble_run(cfg, SEED, suite_2d(), {})


def test_c03_martingale_battery(battery):
    parts = []
    for r in battery.reports:
        parts.append(f"{r.statistic}[{r.f_id}] z={r.z:+.2f}")
    ok = battery.all_passed
    record("3 martingale battery n=64 T=0.5 R=2000", ok, "; ".join(parts) + " (|z| <= 3)")
    assert ok


# -- 4, 5, 6: spectral constants -----------------------------------------------------------


def test_c04_kappa():
    q, cf = S.kappa(), S.kappa_closed_form()
    ok = abs(q - cf) <= 1e-8 and abs(q - 0.07790) < 5e-6
    record("4 kappa", ok, f"quadrature {q:.12f}, closed form {cf:.12f}, diff {abs(q - cf):.1e} (tol 1e-8)")
    assert ok


def test_c05_mollifier_exponent():
    fits = {fid: S.lemma41_fit(f) for fid, f in suite_1d().items()}
    ok = all(abs(v["slope"] - 1) <= 0.2 for v in fits.values())
    detail = ", ".join(f"{fid} {v['slope']:.3f}" for fid, v in fits.items())
    record("5 mollifier gap exponent", ok, f"slopes {detail} (target 1 +- 0.2)")
    assert ok


@pytest.fixture(scope="module")
def smalltime():
    return S.smalltime_ratio(COS, 1e-4, K=4096), S.smalltime_ratio(COS, 1e-5, K=4096)


@pytest.mark.xfail(strict=True, reason="stated limit kappa*<f,-Lap f> is smaller than the exact limit by 2*sqrt(2)")
def test_c06a_smalltime_ratio_stated_limit(smalltime):
    r4, _ = smalltime
    stated = S.kappa_closed_form() * COS.dirichlet()
    ok = abs(r4 / stated - 1) <= 0.02
    record("6a small-time ratio vs stated limit", ok,
           f"ratio(t=1e-4) = {r4:.4f}, stated kappa*2pi^2 = {stated:.4f} (tol 2%); exact limit 2*sqrt(2)*kappa*2pi^2 = {S.smalltime_limit(COS):.4f}")
    assert ok


def test_c06b_smalltime_ratio_stable(smalltime):
    r4, r5 = smalltime
    ok = abs(r4 / r5 - 1) <= 0.03
    record("6b small-time ratio t-stability", ok, f"ratio(1e-4) = {r4:.4f}, ratio(1e-5) = {r5:.4f}, rel diff {abs(r4 / r5 - 1):.2%} (tol 3%)")
    assert ok


# -- 7: small-time scaling of Var A_t ---------------------------------------------------------

TS = np.array([1e-4, 3e-4, 1e-3, 3e-3, 1e-2])


@pytest.fixture(scope="module")
def smalltime_scan():
    vars_, ses = [], []
    for i, t in enumerate(TS):
        est = C.a_duhamel_stats(COS, float(t), 512, 10_000, make_rng(SEED, i, "acceptance:smalltime"))
        vars_.append(est.var)
        ses.append(est.se_var)
    v = np.array(vars_)
    slope, _ = np.polyfit(np.log(TS), np.log(v), 1)
    amp = float(np.exp(np.mean(np.log(v) - 1.5 * np.log(TS))))
    return {"var": v, "se": np.array(ses), "slope": float(slope), "amp": amp}


def test_c07a_smalltime_exponent(smalltime_scan):
    s = smalltime_scan["slope"]
    exact = [C.exact_var_A(COS, float(t), 512) for t in TS]
    ratios = ", ".join(f"{v / e:.3f}" for v, e in zip(smalltime_scan["var"], exact))
    ok = abs(s - 1.5) <= 0.1
    record("7a Var A_t exponent (K=512, R=1e4)", ok, f"fitted exponent {s:.3f} (target 1.5 +- 0.1); MC/exact per t: {ratios}")
    assert ok


@pytest.mark.xfail(strict=True, reason="stated amplitude (kappa/4)<f,-Lap f> is (2+sqrt 2) times smaller than the exact one")
def test_c07b_smalltime_amplitude(smalltime_scan):
    amp = smalltime_scan["amp"]
    stated = C.stated_smalltime_amplitude(COS)
    ok = abs(amp / stated - 1) <= 0.15
    record("7b Var A_t amplitude vs stated", ok,
           f"fitted amplitude {amp:.4f}, stated (kappa/4)*2pi^2 = {stated:.4f} (tol 15%); exact (2+sqrt2)(kappa/4)*2pi^2 = {C.smalltime_prediction(COS):.4f}")
    assert ok


# -- 8: long-time variance --------------------------------------------------------------------


def test_c08_longtime_variance():
    t, K = 5.0, 256
    est = C.a_duhamel_stats(COS, t, K, 2000, make_rng(SEED, 0, "acceptance:longtime"))
    pred = C.longtime_prediction(COS, K)
    ratio = est.var / t / pred
    plateau = S.a_plateau()
    ok = abs(ratio - 1) <= 0.10
    record("8 long-time Var A_t / t (t=5, K=256, R=2000)", ok,
           f"measured {est.var / t:.4f} +- {est.se_var / t:.4f}, prediction S/4 = {pred:.4f}, ratio {ratio:.3f} (tol 10%); "
           f"a-plateau measured {plateau:.6f} vs stated pi/2 = {math.pi / 2:.6f}")
    assert ok


# -- 9: lattice vs continuum ------------------------------------------------------------------


@pytest.fixture(scope="module")
def lattice_A():
    n, T, R = 128, 1.0, 2000
    fs = suite_1d()
    out = {fid: np.empty(R) for fid in fs}
    for r in range(R):
        rng = make_rng(SEED, r, "acceptance:lattice")
        log = simulate(LatticeParams(n, T), sample_stationary(n, rng), rng)
        for fid, f in fs.items():
            out[fid][r] = M.path_A(log, f, [T]).values[0]
    return out


def test_c09a_quadratic_field_variance():
    n = 128
    parts, ok = [], True
    for j, (fid, g) in enumerate(suite_2d().items()):
        est = cli.lattice_q_variance(g, n, 40_000, make_rng(SEED, j, "acceptance:Q"))
        ratio = est.var / (g.l2_sq() / 8)
        ok &= 0.9 <= ratio <= 1.1
        parts.append(f"{fid} {ratio:.3f} +- {est.se_var / (g.l2_sq() / 8):.3f}")
    record("9a Var Q^n / Var Q at n=128", ok, ", ".join(parts) + " (range [0.9, 1.1])")
    assert ok


def test_c09b_a_field_variance(lattice_A):
    parts, ok = [], True
    for fid, f in suite_1d().items():
        est = C.VarianceEstimate.from_samples(lattice_A[fid])
        exact = C.exact_var_A(f, 1.0, K=512)
        ratio = est.var / exact
        ok &= 0.85 <= ratio <= 1.15
        parts.append(f"{fid} {ratio:.3f} +- {est.se_var / exact:.3f}")
    record("9b Var A_T^n / Var A_T at n=128, T=1 (R=2000)", ok, ", ".join(parts) + " (range [0.85, 1.15])")
    assert ok


# -- 10: OU stationarity ----------------------------------------------------------------------


def test_c10_ou_stationarity():
    rng = make_rng(SEED, 0, "acceptance:ou")
    state = C.ou_stationary_sample(16, rng, replicas=100_000)
    y2 = state.Y(COS) ** 2
    m, se = y2.mean(), y2.std(ddof=1) / math.sqrt(y2.size)
    z0 = (m - 0.25 * COS.l2_sq()) / se
    zs = []
    for j, lag in enumerate((1e-3, 1e-2, 5e-2)):
        est, se_l = C.y_autocovariance_mc(COS, lag, 16, 100_000, make_rng(SEED, 1 + j, "acceptance:ou"))
        zs.append((lag, (est - math.exp(-4 * math.pi**2 * lag) / 8) / se_l))
    ok = abs(z0) <= 3 and all(abs(z) <= 3 for _, z in zs)
    lags = ", ".join(f"lag {lag:g} z={z:+.2f}" for lag, z in zs)
    record("10 OU stationarity", ok, f"E[Y(f)^2] z={z0:+.2f}; autocovariance {lags} (|z| <= 3)")
    assert ok


# -- 11: determinism --------------------------------------------------------------------------


def test_c11_determinism(tmp_path):
    def tree(p):
        return {q.relative_to(p).as_posix(): q.read_bytes() for q in sorted(p.rglob("*")) if q.is_file()}

    same = {}
    for command, cfg in sorted(SMALL_CONFIGS.items()):
        a, b = tmp_path / command / "a", tmp_path / command / "b"
        cli.run(command, cfg, a, seed=11)
        cli.run(command, cfg, b, seed=11)
        same[command] = tree(a) == tree(b) and (a / "manifest.json").exists()
    ok = all(same.values())
    record("11 determinism", ok, ", ".join(f"{c} {'identical' if s else 'DIFFERENT'}" for c, s in same.items()))
    assert ok
