import pytest

# tiny configs for every CLI command, shared by the CLI and acceptance tests
SMALL_CONFIGS = {
    "sep-simulate": {"n": 16, "horizon": 0.1, "replicas": 2, "samples": 2},
    "martingale-check": {"n": 12, "horizon": 0.05, "replicas": 40, "theta": 0.05, "grid_points": 2, "workers": 1},
    "spectral-report": {"K_smalltime": 256, "smalltime_ts": [1e-2, 5e-3], "K_lemma41": 256, "K_longtime": 256, "a_us": [1, 2]},
    "ou-simulate": {"K": 4, "replicas": 4000, "lags": [0.01], "path_replicas": 500, "dt": 0.005, "horizon": 0.02},
    "afield-scan": {
        "K": 16, "ts": [1e-3, 1e-2], "replicas": 300, "steps": 12, "longtime_t": 1.0, "longtime_K": 8,
        "longtime_replicas": 300, "eps_scan": [0.2], "eps_ts": [0.005], "eps_K": 4, "eps_dt": 0.001, "eps_replicas": 200,
    },
    "compare": {"lattice": {"n": 16, "horizon": 0.05, "replicas": 20, "q_samples": 500}, "continuum": {"K": 8, "replicas": 200}},
}

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_configs():
    return SMALL_CONFIGS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
