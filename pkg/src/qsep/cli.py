"""Command-line harness: ``qsep <command> --config cfg.json --out DIR [--seed U64]``.

Every command validates its JSON config against a dataclass (unknown keys
are rejected), derives all random streams from ``(seed, command, replica)``,
and writes a ``manifest.json`` even when it fails.  Exit codes: 0 pass,
1 statistical failure, 2 configuration error, 3 numerical error.

Outputs are deterministic functions of the config bytes and the seed.  Wall
time is only recorded when ``--timing`` is given, since it would otherwise
break byte-identical reruns.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import continuum as C
from . import martingale as M
from . import observables as O
from . import spectral as S
from .rng import check_seed, make_rng
from .sep import LatticeParams, sample_fixed_density, sample_stationary, simulate
from .testfns import resolve_1d, resolve_2d

EXIT_OK, EXIT_STAT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# -- configs ------------------------------------------------------------------------


def _require(cond: bool, name: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _check_suite(names, resolver, field_name):
    _require(isinstance(names, list) and len(names) > 0, field_name, "must be a non-empty list")
    for nm in names:
        try:
            resolver(nm)
        except KeyError as exc:
            raise ConfigError(f"{field_name}: {exc.args[0]}") from None


@dataclass
class SepSimulateConfig:
    n: int = 16
    horizon: float = 0.1
    replicas: int = 2
    initial: str = "stationary"
    samples: int = 5
    f1d: list = field(default_factory=lambda: ["cos", "sin", "mixed"])
    f2d: list = field(default_factory=lambda: ["cos_sum", "cos_prod"])

    def validate(self):
        _require(isinstance(self.n, int) and self.n >= 2, "n", "must be an integer >= 2")
        _require(self.horizon > 0, "horizon", "must be positive")
        _require(isinstance(self.replicas, int) and self.replicas >= 1, "replicas", "must be an integer >= 1")
        _require(self.initial in ("stationary", "half"), "initial", "must be 'stationary' or 'half'")
        _require(isinstance(self.samples, int) and self.samples >= 1, "samples", "must be an integer >= 1")
        _check_suite(self.f1d, resolve_1d, "f1d")
        _check_suite(self.f2d, resolve_2d, "f2d")


@dataclass
class MartingaleCheckConfig:
    n: int = 64
    horizon: float = 0.5
    replicas: int = 2000
    theta: float = 0.1
    grid_points: int = 5
    workers: int = 0  # 0 = available parallelism
    f1d: list = field(default_factory=lambda: ["cos", "sin", "mixed"])
    f2d: list = field(default_factory=lambda: ["cos_sum", "cos_prod"])

    def validate(self):
        _require(isinstance(self.n, int) and self.n >= 2, "n", "must be an integer >= 2")
        _require(self.horizon > 0, "horizon", "must be positive")
        _require(isinstance(self.replicas, int) and self.replicas >= 2, "replicas", "must be an integer >= 2 (standard errors need two replicas)")
        _require(isinstance(self.grid_points, int) and self.grid_points >= 1, "grid_points", "must be an integer >= 1")
        _require(isinstance(self.workers, int) and self.workers >= 0, "workers", "must be an integer >= 0 (0 = all cores)")
        _check_suite(self.f1d, resolve_1d, "f1d")
        _check_suite(self.f2d, resolve_2d, "f2d")
        for fid in self.f2d:
            tmax = M.theta_max(resolve_2d(fid), self.n, self.horizon)
            _require(abs(self.theta) <= tmax, "theta", f"|theta|={abs(self.theta)} exceeds theta_max={tmax:.6g} for {fid}")


@dataclass
class SpectralReportConfig:
    K_smalltime: int = 4096
    smalltime_ts: list = field(default_factory=lambda: [1e-4, 1e-5])
    K_lemma41: int = 4096
    eps: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    K_longtime: int = 512
    a_us: list = field(default_factory=lambda: [1, 2, 3, 4, 8, 16, 64, 256])
    f1d: list = field(default_factory=lambda: ["cos", "sin", "mixed"])

    def validate(self):
        for nm in ("K_smalltime", "K_lemma41", "K_longtime"):
            v = getattr(self, nm)
            _require(isinstance(v, int) and v >= 1, nm, "must be an integer >= 1")
        _require(all(t > 0 for t in self.smalltime_ts) and self.smalltime_ts, "smalltime_ts", "must be positive times")
        _require(self.eps and all(0 < e < 1 for e in self.eps), "eps", "must lie in (0, 1)")
        _require(self.a_us and all(isinstance(u, int) and u != 0 for u in self.a_us), "a_us", "must be non-zero integers")
        _check_suite(self.f1d, resolve_1d, "f1d")


@dataclass
class OuSimulateConfig:
    K: int = 16
    replicas: int = 100000
    lags: list = field(default_factory=lambda: [0.001, 0.01, 0.05])
    path_replicas: int = 10000
    dt: float = 0.001
    horizon: float = 0.5
    f1d: list = field(default_factory=lambda: ["cos", "sin", "mixed"])
    f2d: list = field(default_factory=lambda: ["cos_sum", "cos_prod"])

    def validate(self):
        _require(isinstance(self.K, int) and self.K >= 1, "K", "must be an integer >= 1")
        _require(isinstance(self.replicas, int) and self.replicas >= 2, "replicas", "must be an integer >= 2")
        _require(isinstance(self.path_replicas, int) and self.path_replicas >= 2, "path_replicas", "must be an integer >= 2")
        _require(all(l > 0 for l in self.lags), "lags", "must be positive")
        _require(self.dt > 0, "dt", "must be positive")
        _require(self.horizon >= self.dt, "horizon", "must be at least dt")
        _check_suite(self.f1d, resolve_1d, "f1d")
        _check_suite(self.f2d, resolve_2d, "f2d")


@dataclass
class AfieldScanConfig:
    K: int = 512
    ts: list = field(default_factory=lambda: [1e-4, 3e-4, 1e-3, 3e-3, 1e-2])
    replicas: int = 10000
    steps: int = 48
    longtime_t: float = 5.0
    longtime_K: int = 256
    longtime_replicas: int = 2000
    eps_scan: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    eps_ts: list = field(default_factory=lambda: [0.01, 0.02])
    eps_K: int = 64
    eps_dt: float = 0.0005
    eps_replicas: int = 2000
    f1d: list = field(default_factory=lambda: ["cos"])

    def validate(self):
        for nm in ("K", "longtime_K", "eps_K"):
            v = getattr(self, nm)
            _require(isinstance(v, int) and v >= 1, nm, "must be an integer >= 1")
        for nm in ("replicas", "longtime_replicas", "eps_replicas"):
            v = getattr(self, nm)
            _require(isinstance(v, int) and v >= 2, nm, "must be an integer >= 2")
        _require(isinstance(self.steps, int) and self.steps >= 2, "steps", "must be an integer >= 2")
        _require(self.ts and all(t > 0 for t in self.ts), "ts", "must be positive")
        _require(self.longtime_t > 0, "longtime_t", "must be positive")
        _require(all(0 < e < 1 for e in self.eps_scan), "eps_scan", "must lie in (0, 1)")
        _require(all(t > 0 for t in self.eps_ts), "eps_ts", "must be positive")
        _require(self.eps_dt > 0, "eps_dt", "must be positive")
        _check_suite(self.f1d, resolve_1d, "f1d")


@dataclass
class CompareConfig:
    lattice: dict = field(default_factory=lambda: {"n": 128, "horizon": 1.0, "replicas": 1000, "q_samples": 20000})
    continuum: dict = field(default_factory=lambda: {"K": 512, "replicas": 20000})
    f1d: list = field(default_factory=lambda: ["cos", "sin", "mixed"])
    f2d: list = field(default_factory=lambda: ["cos_sum", "cos_prod"])

    def validate(self):
        _require(isinstance(self.lattice, dict), "lattice", "must be an object")
        _require(isinstance(self.continuum, dict), "continuum", "must be an object")
        allowed_l = {"n", "horizon", "replicas", "q_samples"}
        allowed_c = {"K", "replicas"}
        for k in self.lattice:
            _require(k in allowed_l, f"lattice.{k}", "unknown key")
        for k in self.continuum:
            _require(k in allowed_c, f"continuum.{k}", "unknown key")
        _require(set(self.lattice) == allowed_l, "lattice", f"needs keys {sorted(allowed_l)}")
        _require(set(self.continuum) == allowed_c, "continuum", f"needs keys {sorted(allowed_c)}")
        L = self.lattice
        _require(isinstance(L["n"], int) and L["n"] >= 2, "lattice.n", "must be an integer >= 2")
        _require(L["horizon"] > 0, "lattice.horizon", "must be positive")
        _require(isinstance(L["replicas"], int) and L["replicas"] >= 2, "lattice.replicas", "must be an integer >= 2")
        _require(isinstance(L["q_samples"], int) and L["q_samples"] >= 2, "lattice.q_samples", "must be an integer >= 2")
        _require(isinstance(self.continuum["K"], int) and self.continuum["K"] >= 1, "continuum.K", "must be an integer >= 1")
        _require(isinstance(self.continuum["replicas"], int) and self.continuum["replicas"] >= 2, "continuum.replicas", "must be an integer >= 2")
        _check_suite(self.f1d, resolve_1d, "f1d")
        _check_suite(self.f2d, resolve_2d, "f2d")


def load_config(cls, raw: dict):
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    raw = dict(raw)
    raw.pop("seed", None)
    names = {f.name for f in dataclasses.fields(cls)}
    for k in raw:
        if k not in names:
            raise ConfigError(f"{k}: unknown configuration key")
    defaults = cls()
    for k, v in raw.items():
        want = type(getattr(defaults, k))
        if want is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if want is int and isinstance(v, bool) or not isinstance(v, want):
            raise ConfigError(f"{k}: expected {want.__name__}, got {type(v).__name__}")
        raw[k] = v
    cfg = cls(**raw)
    cfg.validate()
    return cfg


# -- commands --------------------------------------------------------------------------


def cmd_sep_simulate(cfg: SepSimulateConfig, seed: int, out: Path) -> dict:
    f1 = {k: resolve_1d(k) for k in cfg.f1d}
    f2 = {k: resolve_2d(k) for k in cfg.f2d}
    grid = np.linspace(0.0, cfg.horizon, cfg.samples + 1)
    rows = []
    counts = []
    for r in range(cfg.replicas):
        rng = make_rng(seed, r, "sep-simulate")
        eta0 = sample_stationary(cfg.n, rng) if cfg.initial == "stationary" else sample_fixed_density(cfg.n, cfg.n // 2, rng)
        log = simulate(LatticeParams(cfg.n, cfg.horizon), eta0, rng, seed=seed, stream_id=r)
        log.to_csv(out / f"events_r{r:04d}.csv")
        counts.append(len(log))
        for t in grid:
            eta = log.state_at(t)
            for fid, f in f1.items():
                rows.append((r, t, "Y", fid, O.density_field(eta, f)))
                rows.append((r, t, "A-integrand", fid, O.a_field_integrand(eta, f)))
            for fid, f in f2.items():
                rows.append((r, t, "Q", fid, O.quadratic_field(eta, f)))
                rows.append((r, t, "drift", fid, O.drift_field(eta, f)))
                rows.append((r, t, "QV-integrand", fid, float(np.sum((O.calibrate_kappa0() * O.xi_all(eta, f)) ** 2))))
    _write_csv(out / "fields.csv", ["replica", "time", "kind", "f_id", "value"], rows)
    return {
        "criteria": {},
        "results": {"event_counts": counts, "expected_events": cfg.n**3 * cfg.horizon, "kappa0": O.calibrate_kappa0()},
    }


def cmd_martingale_check(cfg: MartingaleCheckConfig, seed: int, out: Path) -> dict:
    workers = cfg.workers or len(os.sched_getaffinity(0))
    ecfg = M.EnsembleConfig(cfg.n, cfg.horizon, cfg.replicas, cfg.theta, cfg.grid_points, tuple(cfg.f2d), tuple(cfg.f1d), workers)
    res = M.ensemble_run(ecfg, seed, {k: resolve_2d(k) for k in cfg.f2d}, {k: resolve_1d(k) for k in cfg.f1d})
    (out / "report.csv").write_text(res.to_csv(), encoding="utf-8")
    crit = {f"{r.statistic}|{r.f_id}|t={r.t:g}": r.passed for r in res.reports}
    return {"criteria": crit, "results": {"kappa0": O.calibrate_kappa0(), "all_passed": res.all_passed}}


def cmd_spectral_report(cfg: SpectralReportConfig, seed: int, out: Path) -> dict:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", S.CutoffWarning)
        kap = S.kappa()
        kcf = S.kappa_closed_form()
        f1 = {k: resolve_1d(k) for k in cfg.f1d}
        a_vals = [[u, S.a_coefficient(u)] for u in cfg.a_us]
        plateau = S.a_plateau()
        S_vals = [[fid, S.longtime_energy(f, cfg.K_longtime, check=True)] for fid, f in f1.items()]
        fits = {fid: S.lemma41_fit(f, cfg.eps, cfg.K_lemma41) for fid, f in f1.items()}
        cos = resolve_1d("cos")
        ratios = [[t, S.smalltime_ratio(cos, t, cfg.K_smalltime)] for t in cfg.smalltime_ts]
    report = {
        "kappa": kap,
        "kappa_closed_form": kcf,
        "a": a_vals,
        "a_plateau": plateau,
        "a_plateau_stated": math.pi / 2,
        "a_plateau_discrepancy": bool(abs(plateau - math.pi / 2) > 0.01),
        "S": S_vals,
        "S_from_a": [[fid, S.longtime_energy_from_a(f)] for fid, f in f1.items()],
        "lemma41_fit": {"C": max(v["C"] for v in fits.values()), "slope": float(np.mean([v["slope"] for v in fits.values()])), "per_f": fits},
        "smalltime_ratios": ratios,
        "smalltime_stated_limit": kap * cos.dirichlet(),
        "smalltime_exact_limit": S.smalltime_limit(cos),
        "cutoff_warnings": [str(w.message) for w in caught],
    }
    _json_dump(report, out / "spectral.json")
    r0 = ratios[0][1]
    crit = {
        "kappa_matches_closed_form": abs(kap - kcf) <= 1e-8,
        "mollifier_slopes_in_[0.8,1.2]": all(0.8 <= v["slope"] <= 1.2 for v in fits.values()),
        "smalltime_stated_limit_within_2pct": abs(r0 / report["smalltime_stated_limit"] - 1) <= 0.02,
        "smalltime_t_stable_3pct": all(abs(v / r0 - 1) <= 0.03 for _, v in ratios),
    }
    return {"criteria": crit, "results": {"kappa": kap}, "numeric_warnings": report["cutoff_warnings"]}


def cmd_ou_simulate(cfg: OuSimulateConfig, seed: int, out: Path) -> dict:
    rng = make_rng(seed, 0, "ou-simulate")
    state = C.ou_stationary_sample(cfg.K, rng, cfg.replicas)
    rows, crit = [], {}
    for fid in cfg.f1d:
        f = resolve_1d(fid)
        y2 = state.Y(f) ** 2
        target = 0.25 * float(np.sum(np.abs(f.coef) ** 2))
        est = C.VarianceEstimate.from_samples(y2)
        z = (est.mean - target) / est.se_mean
        rows.append(("E[Y^2]", fid, 0.0, est.mean, est.se_mean, target, z))
        crit[f"E[Y^2]|{fid}"] = abs(z) <= 3
        for j, lag in enumerate(cfg.lags):
            mc, se = C.y_autocovariance_mc(f, lag, cfg.K, cfg.replicas, make_rng(seed, 1 + j, "ou-simulate"))
            target = C.y_autocovariance(f, lag)
            z = (mc - target) / se
            rows.append(("autocov", fid, lag, mc, se, target, z))
            crit[f"autocov|{fid}|lag={lag:g}"] = abs(z) <= 3
    for fid in cfg.f2d:
        g = resolve_2d(fid)
        q = C.wick_quadratic(state, g)
        est = C.VarianceEstimate.from_samples(q)
        target = C.Q_VARIANCE_CONSTANT * g.l2_sq()
        z = (est.var - target) / est.se_var
        rows.append(("Var Q", fid, 0.0, est.var, est.se_var, target, z))
        crit[f"VarQ|{fid}"] = abs(z) <= 3
        prng = make_rng(seed, 1000, f"ou-simulate:{fid}")
        path = C.ContinuumPath(C.ou_stationary_sample(cfg.K, prng, cfg.path_replicas), cfg.dt)
        nsteps = int(round(cfg.horizon / cfg.dt))
        for _ in range(nsteps):
            C.martingale_step(path, g, prng)
        for name, x, target in (("E[W]", path.W, 0.0), ("E[W^2-QV]", path.W**2 - path.QV, 0.0)):
            m, se = float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))
            z = (m - target) / se
            rows.append((name, fid, nsteps * cfg.dt, m, se, target, z))
            crit[f"{name}|{fid}"] = abs(z) <= 3
    _write_csv(out / "ou.csv", ["statistic", "f_id", "t", "estimate", "se", "target", "z"], rows)
    return {"criteria": crit, "results": {}}


def cmd_afield_scan(cfg: AfieldScanConfig, seed: int, out: Path) -> dict:
    rows, eps_rows, crit = [], [], {}
    stream = 0
    for fid in cfg.f1d:
        f = resolve_1d(fid)
        vs = []
        for t in cfg.ts:
            est = C.a_duhamel_stats(f, t, cfg.K, cfg.replicas, make_rng(seed, stream, "afield-scan"), steps=cfg.steps)
            stream += 1
            pred = C.exact_var_A(f, t, cfg.K)
            rows.append((fid, t, est.var, est.se_var, pred, est.var / pred))
            vs.append(est.var)
        slope, icpt = np.polyfit(np.log(cfg.ts), np.log(vs), 1)
        amp = float(np.exp(icpt))
        stated = C.stated_smalltime_amplitude(f)
        crit[f"smalltime_exponent|{fid}"] = bool(abs(slope - 1.5) <= 0.1)
        crit[f"smalltime_amplitude_vs_stated|{fid}"] = bool(abs(amp / stated - 1) <= 0.15)
        t = cfg.longtime_t
        est = C.a_duhamel_stats(f, t, cfg.longtime_K, cfg.longtime_replicas, make_rng(seed, stream, "afield-scan"), steps=cfg.steps)
        stream += 1
        pred = C.longtime_prediction(f, cfg.longtime_K) * t
        rows.append((fid, t, est.var, est.se_var, pred, est.var / pred))
        crit[f"longtime_10pct|{fid}"] = bool(abs(est.var / pred - 1) <= 0.10)
        for eps in cfg.eps_scan:
            prng = make_rng(seed, stream, "afield-scan")
            stream += 1
            path = C.ContinuumPath(C.ou_stationary_sample(cfg.eps_K, prng, cfg.eps_replicas), cfg.eps_dt)
            done = 0
            for te in sorted(cfg.eps_ts):
                while done < int(round(te / cfg.eps_dt)):
                    C.a_eps_step(path, f, eps, prng)
                    done += 1
                est = C.VarianceEstimate.from_samples(path.A_eps)
                eps_rows.append((fid, te, eps, est.var, est.se_var, C.exact_var_A(f, te, cfg.eps_K, eps=eps)))
    _write_csv(out / "duhamel.csv", ["f_id", "t", "var", "se", "prediction", "ratio"], rows)
    _write_csv(out / "afield_eps.csv", ["f_id", "t", "eps", "var", "se", "exact"], eps_rows)
    plateau = S.a_plateau()
    return {"criteria": crit, "results": {"a_plateau": plateau, "a_plateau_stated": math.pi / 2}}


def lattice_q_variance(f, n: int, samples: int, rng) -> C.VarianceEstimate:
    """Var Q^n(f) under the Bernoulli(1/2) product measure, by direct sampling."""
    F = f.grid(n)
    eb = rng.integers(0, 2, size=(samples, n)).astype(np.float64) - 0.5
    q = (np.einsum("ri,ij,rj->r", eb, F, eb) - 0.25 * np.trace(F)) / n
    return C.VarianceEstimate.from_samples(q)


def cmd_compare(cfg: CompareConfig, seed: int, out: Path) -> dict:
    L, Cc = cfg.lattice, cfg.continuum
    rows, crit = [], {}
    for j, fid in enumerate(cfg.f2d):
        g = resolve_2d(fid)
        lat = lattice_q_variance(g, L["n"], L["q_samples"], make_rng(seed, j, "compare:Q"))
        cont = C.Q_VARIANCE_CONSTANT * g.l2_sq()
        ratio = lat.var / cont
        rows.append(("VarQ", fid, lat.var, lat.se_var, cont, ratio, "[0.9,1.1]"))
        crit[f"VarQ|{fid}"] = bool(0.9 <= ratio <= 1.1)
    f1 = {k: resolve_1d(k) for k in cfg.f1d}
    A = {k: [] for k in f1}
    for r in range(L["replicas"]):
        rng = make_rng(seed, r, "compare:A")
        log = simulate(LatticeParams(L["n"], L["horizon"]), sample_stationary(L["n"], rng), rng, seed=seed, stream_id=r)
        for fid, f in f1.items():
            A[fid].append(M.path_A(log, f, [L["horizon"]]).values[0])
    for j, (fid, f) in enumerate(f1.items()):
        lat = C.VarianceEstimate.from_samples(A[fid])
        cont = C.a_duhamel_stats(f, L["horizon"], Cc["K"], Cc["replicas"], make_rng(seed, j, "compare:continuum"))
        exact = C.exact_var_A(f, L["horizon"], Cc["K"])
        ratio = lat.var / cont.var
        rows.append(("VarA", fid, lat.var, lat.se_var, cont.var, ratio, "[0.85,1.15]"))
        rows.append(("VarA_exact", fid, lat.var, lat.se_var, exact, lat.var / exact, "[0.85,1.15]"))
        crit[f"VarA|{fid}"] = bool(0.85 <= ratio <= 1.15)
    _write_csv(out / "compare.csv", ["statistic", "f_id", "lattice", "lattice_se", "continuum", "ratio", "tolerance"], rows)
    complete = {r[1] for r in rows} >= set(cfg.f1d) | set(cfg.f2d)
    crit["suite_complete"] = bool(complete)
    return {"criteria": crit, "results": {}}


COMMANDS = {
    "sep-simulate": (SepSimulateConfig, cmd_sep_simulate),
    "martingale-check": (MartingaleCheckConfig, cmd_martingale_check),
    "spectral-report": (SpectralReportConfig, cmd_spectral_report),
    "ou-simulate": (OuSimulateConfig, cmd_ou_simulate),
    "afield-scan": (AfieldScanConfig, cmd_afield_scan),
    "compare": (CompareConfig, cmd_compare),
}


def run(command: str, raw_config: dict, out: Path, seed: int | None = None, timing: bool = False) -> int:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "version": __version__, "config": raw_config, "status": "started"}
    started = time.perf_counter()
    code = EXIT_OK
    try:
        if seed is None:
            seed = raw_config.get("seed", 0) if isinstance(raw_config, dict) else 0
        seed = check_seed(seed)
        manifest["seed"] = seed
        cls, fn = COMMANDS[command]
        cfg = load_config(cls, raw_config)
        manifest["resolved_config"] = dataclasses.asdict(cfg)
        result = fn(cfg, seed, out)
        manifest.update(result)
        crit = result.get("criteria", {})
        manifest["all_passed"] = all(crit.values())
        if result.get("numeric_warnings"):
            code = EXIT_NUMERIC
            manifest["status"] = "numerical warning"
        elif not manifest["all_passed"]:
            code = EXIT_STAT
            manifest["status"] = "statistical failure"
        else:
            manifest["status"] = "pass"
    except (ConfigError, ValueError, TypeError) as exc:
        code = EXIT_CONFIG
        manifest["status"] = "configuration error"
        manifest["error"] = str(exc)
    except ArithmeticError as exc:
        code = EXIT_NUMERIC
        manifest["status"] = "numerical error"
        manifest["error"] = str(exc)
    manifest["exit_code"] = code
    manifest["wall_clock_seconds"] = round(time.perf_counter() - started, 3) if timing else None
    _json_dump(_jsonable(manifest), out / "manifest.json")
    if "error" in manifest:
        print(f"qsep {command}: {manifest['error']}", file=sys.stderr)
    return code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(obj)
    return obj


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="qsep", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit), overrides the config")
    p.add_argument("--timing", action="store_true", help="record wall-clock time in the manifest")
    args = p.parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _json_dump({"command": args.command, "version": __version__, "status": "configuration error",
                    "error": f"config: {exc}", "exit_code": EXIT_CONFIG}, out / "manifest.json")
        print(f"qsep {args.command}: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, raw, Path(args.out), args.seed, args.timing)


if __name__ == "__main__":
    sys.exit(main())
