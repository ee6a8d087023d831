"""Symmetric simple exclusion on the discrete circle with n sites.

Sites are integer indices ``0..n-1`` (macroscopic position ``i/n``); bond
``x`` is the unordered pair ``{x, x+1 mod n}``.  Each bond carries a rate
``n**2`` clock; the simulator runs the equivalent single clock of rate
``n**3`` and picks the bond uniformly.  Swaps between equal occupancies are
logged like any other event.
"""

from __future__ import annotations

import io
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .rng import as_rng


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeParams:
    n: int
    horizon: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ParameterError(f"horizon must be positive and finite, got {self.horizon!r}")

    @property
    def total_rate(self) -> float:
        return float(self.n) ** 3


def as_configuration(eta, n: int | None = None) -> np.ndarray:
    eta = np.asarray(eta)
    if eta.ndim != 1:
        raise ParameterError("a configuration is a one-dimensional occupancy vector")
    if n is not None and eta.size != n:
        raise ParameterError(f"configuration has {eta.size} sites, expected {n}")
    if eta.size < 2:
        raise ParameterError("a configuration needs at least 2 sites")
    if not np.all((eta == 0) | (eta == 1)):
        raise ParameterError("occupancies must be 0 or 1")
    return eta.astype(np.int8)


def all_configurations(n: int) -> np.ndarray:
    """All 2**n configurations, row i is the binary expansion of i (site 0 = least significant)."""
    idx = np.arange(2**n)[:, None]
    return ((idx >> np.arange(n)[None, :]) & 1).astype(np.int8)


def sample_stationary(n: int, rng) -> np.ndarray:
    """Product Bernoulli(1/2) measure."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    return as_rng(rng).integers(0, 2, size=n, dtype=np.int8)


def sample_fixed_density(n: int, ell: int, rng) -> np.ndarray:
    """Uniform configuration with exactly ``ell`` particles."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0 <= ell <= n:
        raise ParameterError(f"particle number must lie in [0, {n}], got {ell}")
    eta = np.zeros(n, dtype=np.int8)
    eta[as_rng(rng).choice(n, size=ell, replace=False)] = 1
    return eta


def apply_swap(config, x: int) -> np.ndarray:
    eta = np.array(config, dtype=np.int8, copy=True)
    n = eta.size
    if not 0 <= x < n:
        raise ParameterError(f"bond {x} outside 0..{n - 1}")
    y = (x + 1) % n
    eta[x], eta[y] = eta[y], eta[x]
    return eta


def generator_apply(F: Callable[[np.ndarray], float], config, n: int | None = None) -> float:
    """(L_n F)(eta) = n^2 sum over bonds of F(eta^{x,x+1}) - F(eta)."""
    eta = as_configuration(config, n)
    n = eta.size
    base = F(eta)
    return float(n) ** 2 * float(np.sum([F(apply_swap(eta, x)) - base for x in range(n)]))


def transition_rates(n: int) -> dict[tuple[int, int], Fraction]:
    """Exact off-diagonal rates between configuration indices (bit-encoded)."""
    rates: dict[tuple[int, int], Fraction] = {}
    for i in range(2**n):
        for x in range(n):
            y = (x + 1) % n
            if ((i >> x) & 1) != ((i >> y) & 1):
                j = i ^ (1 << x) ^ (1 << y)
                rates[(i, j)] = rates.get((i, j), Fraction(0)) + Fraction(n * n)
    return rates


# -- event logs -----------------------------------------------------------------


@dataclass
class EventLog:
    n: int
    horizon: float
    times: np.ndarray
    bonds: np.ndarray
    initial: np.ndarray
    seed: int | None = None
    stream_id: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.bonds = np.asarray(self.bonds, dtype=np.int64)
        self.initial = as_configuration(self.initial, self.n)
        if self.times.shape != self.bonds.shape:
            raise ParameterError("times and bonds must have the same length")

    def __len__(self) -> int:
        return self.times.size

    @property
    def params(self) -> LatticeParams:
        return LatticeParams(self.n, self.horizon)

    def validate(self) -> None:
        if self.times.size:
            if np.any(np.diff(self.times) <= 0):
                raise ParameterError("event times must be strictly increasing")
            if self.times[0] < 0 or self.times[-1] > self.horizon:
                raise ParameterError("event times must lie in [0, horizon]")
            if self.bonds.min() < 0 or self.bonds.max() >= self.n:
                raise ParameterError("bond label out of range")

    def state_at(self, t: float) -> np.ndarray:
        """Configuration at time t (right-continuous: events at exactly t are applied)."""
        k = int(np.searchsorted(self.times, t, side="right"))
        return replay(self.initial, self.bonds[:k])

    def final(self) -> np.ndarray:
        return replay(self.initial, self.bonds)

    def header(self) -> dict:
        return {
            "n": int(self.n),
            "horizon": float(self.horizon),
            "seed": None if self.seed is None else int(self.seed),
            "stream_id": None if self.stream_id is None else int(self.stream_id),
            "initial_occupancy": [int(v) for v in self.initial],
        }

    def to_csv(self, path=None) -> str:
        """CSV with a one-line JSON header comment; times written with 17 significant digits."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        buf.write("time,bond\n")
        for t, b in zip(self.times.tolist(), self.bonds.tolist()):
            buf.write(f"{t:.17g},{b}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "EventLog":
        text = Path(source).read_text(encoding="utf-8") if not str(source).startswith("#") else str(source)
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ParameterError("event log CSV must start with a '# {json}' header line")
        head = json.loads(lines[0][2:])
        if lines[1].strip() != "time,bond":
            raise ParameterError("expected column header 'time,bond'")
        rows = [ln.split(",") for ln in lines[2:] if ln.strip()]
        times = np.array([float(r[0]) for r in rows], dtype=np.float64)
        bonds = np.array([int(r[1]) for r in rows], dtype=np.int64)
        return cls(
            n=head["n"],
            horizon=head["horizon"],
            times=times,
            bonds=bonds,
            initial=np.array(head["initial_occupancy"], dtype=np.int8),
            seed=head.get("seed"),
            stream_id=head.get("stream_id"),
        )


def replay(initial, bonds) -> np.ndarray:
    eta = np.array(initial, dtype=np.int8, copy=True)
    n = eta.size
    for x in np.asarray(bonds, dtype=np.int64).tolist():
        y = x + 1 if x + 1 < n else 0
        eta[x], eta[y] = eta[y], eta[x]
    return eta


def _event_times(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    mean = rate * horizon
    chunk = int(mean + 8.0 * np.sqrt(mean) + 16)
    gaps = rng.standard_exponential(chunk) / rate
    times = np.cumsum(gaps)
    while times[-1] <= horizon:
        more = np.cumsum(rng.standard_exponential(chunk) / rate) + times[-1]
        times = np.concatenate([times, more])
    return times[: int(np.searchsorted(times, horizon, side="right"))]


def simulate(params: LatticeParams, initial, rng, seed: int | None = None, stream_id: int | None = None) -> EventLog:
    """Exact trajectory on [0, horizon] as an event log.

    Draw order is fixed (all exponential gaps first, then all bond labels),
    so a given generator state always yields the same log.
    """
    rng = as_rng(rng)
    eta0 = as_configuration(initial, params.n)
    times = _event_times(params.total_rate, params.horizon, rng)
    bonds = rng.integers(0, params.n, size=times.size, dtype=np.int64)
    return EventLog(params.n, params.horizon, times, bonds, eta0, seed=seed, stream_id=stream_id)


def detailed_balance_defect(n: int, ell: int) -> Fraction:
    """Largest |pi(i) q(i,j) - pi(j) q(j,i)| for the uniform law on Omega_{n,ell}; exact."""
    states = [i for i in range(2**n) if bin(i).count("1") == ell]
    pi = Fraction(1, len(states))
    rates = transition_rates(n)
    worst = Fraction(0)
    members = set(states)
    for i, j in itertools.product(states, states):
        if i == j:
            continue
        qij = rates.get((i, j), Fraction(0))
        qji = rates.get((j, i), Fraction(0))
        worst = max(worst, abs(pi * qij - pi * qji))
        if qij and j not in members:
            raise AssertionError("dynamics left the fixed-particle-number sector")
    return worst
