import math

import numpy as np
import pytest

from qsep import observables as O
from qsep.martingale import (
    EnsembleConfig,
    EnsembleReport,
    NumericalError,
    ensemble_run,
    exponential_martingale,
    path_A,
    quadratic_functionals,
    theta_max,
)
from qsep.rng import make_rng
from qsep.sep import EventLog, LatticeParams, sample_stationary, simulate
from qsep.testfns import cos_mode, random_trig_2d, suite_1d, suite_2d

COS_SUM = suite_2d()["cos_sum"]
COS_PROD = suite_2d()["cos_prod"]


def brute(log, f, t, theta=0.0):
    """Piecewise-constant integrals recomputed from scratch at every event."""
    n = log.n
    eta = log.initial.copy()
    q0 = O.quadratic_field(eta, f)
    s, drift, qv, comp = 0.0, 0.0, 0.0, 0.0
    for time, b in list(zip(log.times, log.bonds)) + [(np.inf, None)]:
        end = min(time, t)
        dt = end - s
        if dt > 0:
            xs = O.xi_all(eta, f)
            drift += dt * O.drift_field(eta, f)
            qv += dt * np.sum((2 * xs) ** 2)
            comp += dt * n**2 * np.sum(np.expm1(theta * 2 * xs / n))
        if time > t:
            break
        eta[b], eta[(b + 1) % n] = eta[(b + 1) % n], eta[b]
        s = time
    q = O.quadratic_field(eta, f)
    return q - q0 - drift, qv, math.exp(theta * (q - q0) - comp)


def short_log(n=8, horizon=0.01, seed=0):
    rng = make_rng(seed)
    return simulate(LatticeParams(n, horizon), sample_stationary(n, rng), rng)


def test_matches_brute_force():
    for seed in range(3):
        log = short_log(seed=seed)
        grid = [0.003, 0.007, 0.01]
        for f in (COS_SUM, COS_PROD):
            res = quadratic_functionals(log, f, grid, thetas=[0.05], check_theta=False)
            for i, t in enumerate(grid):
                w, qv, m = brute(log, f, t, 0.05)
                assert res["W"].values[i] == pytest.approx(w, abs=1e-10)
                assert res["QV"].values[i] == pytest.approx(qv, rel=1e-12)
                assert res["M[0.05]"].values[i] == pytest.approx(m, rel=1e-10)


def test_no_events_gives_linear_drift():
    eta = np.array([1, 0, 0, 1, 1, 0])
    log = EventLog(6, 0.2, np.empty(0), np.empty(0, np.int64), eta)
    w = quadratic_functionals(log, COS_SUM, [0.1, 0.2])["W"].values
    d = O.drift_field(eta, COS_SUM)
    np.testing.assert_allclose(w, [-0.1 * d, -0.2 * d], atol=1e-14)


def test_grid_refinement_invariance():
    log = short_log(n=12, horizon=0.02, seed=4)
    coarse = quadratic_functionals(log, COS_PROD, [0.01, 0.02])
    fine = quadratic_functionals(log, COS_PROD, np.linspace(0, 0.02, 41)[1:])
    for key in ("W", "QV"):
        assert fine[key].values[19] == pytest.approx(coarse[key].values[0], abs=1e-13)
        assert fine[key].values[-1] == pytest.approx(coarse[key].values[1], abs=1e-13)


def test_w_zero_at_origin():
    log = short_log(seed=5)
    res = quadratic_functionals(log, COS_SUM, [0.0, 0.01])
    assert log.times[0] > 0.0
    assert abs(res["W"].values[0]) < 1e-15  # Q_0 recomputed in a different summation order
    assert res["QV"].values[0] == 0.0


def test_theta_zero_is_one():
    log = short_log(seed=6)
    m = exponential_martingale(log, COS_SUM, 0.0, [0.005, 0.01])
    np.testing.assert_array_equal(m.values, 1.0)


def test_theta_derivative_is_w():
    log = short_log(n=10, horizon=0.02, seed=7)
    h = 1e-5
    mp = exponential_martingale(log, COS_PROD, h, [0.02], check_theta=False).values[0]
    mm = exponential_martingale(log, COS_PROD, -h, [0.02], check_theta=False).values[0]
    w = quadratic_functionals(log, COS_PROD, [0.02])["W"].values[0]
    assert (mp - mm) / (2 * h) == pytest.approx(w, abs=1e-6)


def test_theta_max_value_and_refusal():
    # c2 for both suite functions gives theta_max slightly above 0.1 at n=64, T=0.5
    for f in (COS_SUM, COS_PROD):
        tm = theta_max(f, 64, 0.5)
        assert 0.1 < tm < 0.13
    log = short_log(seed=8)
    with pytest.raises(ValueError, match="theta_max"):
        exponential_martingale(log, COS_SUM, 10.0, [0.01])


def test_overflow_raises():
    log = short_log(n=16, horizon=0.05, seed=9)
    with pytest.raises(NumericalError):
        exponential_martingale(log, COS_SUM, 5e4, [0.05], check_theta=False)


def test_grid_outside_horizon_rejected():
    log = short_log(seed=10)
    with pytest.raises(ValueError):
        quadratic_functionals(log, COS_SUM, [0.02])


def test_path_a_brute_force_and_linearity():
    log = short_log(n=9, horizon=0.01, seed=11)
    f = suite_1d()["mixed"]
    grid = np.linspace(0, 0.01, 50)[1:]
    vals = path_A(log, f, grid).values
    eta = log.initial.copy()
    ref, s = [], 0.0
    acc = 0.0
    events = list(zip(log.times, log.bonds))
    k = 0
    for t in grid:
        while k < len(events) and events[k][0] <= t:
            acc += (events[k][0] - s) * O.a_field_integrand(eta, f)
            b = events[k][1]
            eta[b], eta[(b + 1) % 9] = eta[(b + 1) % 9], eta[b]
            s = events[k][0]
            k += 1
        ref.append(acc + (t - s) * O.a_field_integrand(eta, f))
    np.testing.assert_allclose(vals, ref, atol=1e-12)


def test_path_a_resync_irrelevant():
    log = short_log(n=32, horizon=0.01, seed=12)
    a = path_A(log, cos_mode(1), [0.005, 0.01], resync=1).values
    b = path_A(log, cos_mode(1), [0.005, 0.01], resync=10**9).values
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_small_ensemble_battery():
    cfg = EnsembleConfig(n=16, horizon=0.1, replicas=300, theta=0.1, grid_points=2)
    res = ensemble_run(cfg, 123, suite_2d(), {"cos": cos_mode(1)})
    assert len(res.reports) == 2 * (3 * 2 + 1) + 2
    fails = [r for r in res.reports if not r.passed]
    assert len(fails) <= 1  # 16 nominal 3-sigma tests
    assert res.to_csv().splitlines()[0] == "statistic,t,n,f_id,replicas,mean,se,z,pass"


def test_ensemble_deterministic():
    cfg = EnsembleConfig(n=8, horizon=0.05, replicas=5, grid_points=2)
    a = ensemble_run(cfg, 7, {"cos_sum": COS_SUM}, {})
    b = ensemble_run(cfg, 7, {"cos_sum": COS_SUM}, {})
    assert a.to_csv() == b.to_csv()


def test_ensemble_refuses_one_replica():
    with pytest.raises(ValueError, match="replicas"):
        ensemble_run(EnsembleConfig(replicas=1), 0, {"cos_sum": COS_SUM}, {})


def test_ensemble_refuses_large_theta():
    with pytest.raises(ValueError, match="theta_max"):
        ensemble_run(EnsembleConfig(replicas=2, theta=1.0), 0, {"cos_sum": COS_SUM}, {})


def test_report_statistics():
    r = EnsembleReport.from_samples("W", 1.0, 8, "f", [1.0, -1.0, 2.0, -2.0])
    assert r.mean == 0.0 and r.z == 0.0 and r.passed
    with pytest.raises(ValueError):
        EnsembleReport.from_samples("W", 1.0, 8, "f", [1.0])


def test_martingale_random_function_mean_zero():
    f = random_trig_2d(make_rng(13), K=2)
    W = []
    for r in range(400):
        rng = make_rng(14, r)
        log = simulate(LatticeParams(12, 0.05), sample_stationary(12, rng), rng)
        W.append(quadratic_functionals(log, f, [0.05])["W"].values[0])
    W = np.array(W)
    assert abs(W.mean()) <= 3 * W.std(ddof=1) / np.sqrt(W.size)
