"""Trigonometric test functions on the circle and the two-torus.

A test function is held by its Fourier coefficients,

    f(x)   = sum_k      fhat[k]   exp(2 pi i k x),            |k| <= K
    f(x,y) = sum_{k,m}  fhat[k,m] exp(2 pi i (k x + m y)),    |k|,|m| <= K

stored densely with the zero mode at index ``K``.  Real-valuedness is the
Hermitian constraint ``fhat[-k] = conj(fhat[k])``; it is checked on
construction.  Derivatives are exact in Fourier space and lattice grids are
cached per ``n``.
"""

from __future__ import annotations

import json
from functools import cached_property
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
_TOL = 1e-12


class TestFunctionError(ValueError):
    __test__ = False


def _check_hermitian(coef: np.ndarray) -> None:
    flipped = np.conj(coef[tuple(slice(None, None, -1) for _ in range(coef.ndim))])
    scale = max(1.0, float(np.max(np.abs(coef)))) if coef.size else 1.0
    if not np.allclose(coef, flipped, rtol=0.0, atol=_TOL * scale):
        raise TestFunctionError("coefficients violate Hermitian symmetry (function would be complex)")


class TestFn1D:
    __test__ = False  # keep pytest from collecting this class

    def __init__(self, coef, name: str = ""):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim != 1 or coef.size % 2 != 1:
            raise TestFunctionError("1D coefficient array must have odd length 2K+1")
        _check_hermitian(coef)
        self.coef = coef
        self.coef.setflags(write=False)
        self.name = name
        self._grids: dict[int, np.ndarray] = {}

    @classmethod
    def from_modes(cls, modes: dict[int, complex], name: str = "", K: int | None = None):
        band = max((abs(k) for k in modes), default=0)
        K = max(band, 1) if K is None else K
        if K < band:
            raise TestFunctionError("cutoff smaller than the band of the given modes")
        coef = np.zeros(2 * K + 1, dtype=complex)
        for k, c in modes.items():
            coef[k + K] += c
        return cls(coef, name)

    @property
    def K(self) -> int:
        return (self.coef.size - 1) // 2

    @property
    def band(self) -> int:
        nz = np.nonzero(np.abs(self.coef) > 0)[0]
        return int(np.max(np.abs(nz - self.K))) if nz.size else 0

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def hat(self, k) -> np.ndarray:
        k = np.asarray(k)
        out = np.zeros(k.shape, dtype=complex)
        ok = np.abs(k) <= self.K
        out[ok] = self.coef[k[ok] + self.K]
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * TWO_PI * np.multiply.outer(x, self.modes))
        return (phase @ self.coef).real

    def derivative(self) -> "TestFn1D":
        return TestFn1D(self.coef * (1j * TWO_PI * self.modes), name=f"d({self.name})")

    def grid(self, n: int) -> np.ndarray:
        """Values at the lattice sites i/n, cached."""
        if n not in self._grids:
            g = self(np.arange(n) / n)
            g.setflags(write=False)
            self._grids[n] = g
        return self._grids[n]

    @property
    def mean(self) -> float:
        return float(self.coef[self.K].real)

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.coef) ** 2))

    def dirichlet(self) -> float:
        """<f, -Delta f> = sum 4 pi^2 k^2 |fhat(k)|^2."""
        return float(np.sum((TWO_PI * self.modes) ** 2 * np.abs(self.coef) ** 2))

    def scaled(self, c: float) -> "TestFn1D":
        return TestFn1D(self.coef * c, name=f"{c}*{self.name}")

    def shifted(self, h: float) -> "TestFn1D":
        return TestFn1D(self.coef * np.exp(1j * TWO_PI * self.modes * h), name=f"{self.name}(.+{h})")

    def __repr__(self) -> str:
        return f"TestFn1D(name={self.name!r}, K={self.K}, band={self.band})"


class TestFn2D:
    __test__ = False

    def __init__(self, coef, name: str = ""):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim != 2 or coef.shape[0] != coef.shape[1] or coef.shape[0] % 2 != 1:
            raise TestFunctionError("2D coefficient array must be square with odd side 2K+1")
        _check_hermitian(coef)
        self.coef = coef
        self.coef.setflags(write=False)
        self.name = name
        self._grids: dict[int, np.ndarray] = {}

    @classmethod
    def from_modes(cls, modes: dict[tuple[int, int], complex], name: str = "", K: int | None = None):
        band = max((max(abs(k), abs(m)) for k, m in modes), default=0)
        K = max(band, 1) if K is None else K
        if K < band:
            raise TestFunctionError("cutoff smaller than the band of the given modes")
        coef = np.zeros((2 * K + 1, 2 * K + 1), dtype=complex)
        for (k, m), c in modes.items():
            coef[k + K, m + K] += c
        return cls(coef, name)

    @classmethod
    def product(cls, f1: TestFn1D, f2: TestFn1D, name: str = "") -> "TestFn2D":
        K = max(f1.K, f2.K)
        a, b = f1.hat(np.arange(-K, K + 1)), f2.hat(np.arange(-K, K + 1))
        return cls(np.outer(a, b), name or f"{f1.name}(x)*{f2.name}(y)")

    @property
    def K(self) -> int:
        return (self.coef.shape[0] - 1) // 2

    @property
    def band(self) -> int:
        nz = np.argwhere(np.abs(self.coef) > 0)
        return int(np.max(np.abs(nz - self.K))) if nz.size else 0

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def is_symmetric(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coef))))
        return bool(np.allclose(self.coef, self.coef.T, rtol=0.0, atol=_TOL * scale))

    def require_symmetric(self) -> None:
        if not self.is_symmetric:
            raise TestFunctionError(f"test function {self.name!r} is not symmetric in (x, y)")

    def __call__(self, x, y) -> np.ndarray:
        """Evaluate on the tensor grid x (rows) by y (columns)."""
        ex = np.exp(1j * TWO_PI * np.multiply.outer(np.asarray(x, float), self.modes))
        ey = np.exp(1j * TWO_PI * np.multiply.outer(np.asarray(y, float), self.modes))
        return (ex @ self.coef @ ey.T).real

    def grid(self, n: int) -> np.ndarray:
        if n not in self._grids:
            s = np.arange(n) / n
            g = self(s, s)
            g.setflags(write=False)
            self._grids[n] = g
        return self._grids[n]

    def d1(self) -> "TestFn2D":
        return TestFn2D(self.coef * (1j * TWO_PI * self.modes)[:, None], name=f"d1({self.name})")

    def d2(self) -> "TestFn2D":
        return TestFn2D(self.coef * (1j * TWO_PI * self.modes)[None, :], name=f"d2({self.name})")

    def laplacian(self) -> "TestFn2D":
        k = self.modes
        return TestFn2D(-(TWO_PI**2) * (k[:, None] ** 2 + k[None, :] ** 2) * self.coef, name=f"lap({self.name})")

    def diag(self) -> TestFn1D:
        """x -> f(x, x); band doubles."""
        K = self.K
        out = np.zeros(4 * K + 1, dtype=complex)
        k = self.modes
        np.add.at(out, (k[:, None] + k[None, :]).ravel() + 2 * K, self.coef.ravel())
        return TestFn1D(out, name=f"diag({self.name})")

    def symmetrized(self) -> "TestFn2D":
        return TestFn2D(0.5 * (self.coef + self.coef.T), name=f"sym({self.name})")

    def antisymmetrized(self) -> "TestFn2D":
        return TestFn2D(0.5 * (self.coef - self.coef.T), name=f"asym({self.name})")

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.coef) ** 2))

    def __repr__(self) -> str:
        return f"TestFn2D(name={self.name!r}, K={self.K}, band={self.band})"


# -- JSON interface ---------------------------------------------------------


def load_testfn(source) -> TestFn1D | TestFn2D:
    """Read ``{"coeffs": [[k, re, im], ...]}`` (1D) or ``[[k, m, re, im], ...]`` (2D).

    ``source`` is a path, a JSON string or an already-parsed dict.  Every
    listed mode must have its Hermitian partner listed; 2D functions must be
    symmetric.
    """
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        doc = json.loads(Path(source).read_text())
    else:
        doc = json.loads(source)
    rows = doc.get("coeffs")
    if not rows:
        raise TestFunctionError("missing or empty 'coeffs' list")
    width = {len(r) for r in rows}
    if width == {3}:
        modes: dict = {}
        for k, re, im in rows:
            if int(k) != k:
                raise TestFunctionError(f"non-integer mode {k}")
            modes[int(k)] = modes.get(int(k), 0) + complex(re, im)
        return TestFn1D.from_modes(modes, name=doc.get("name", ""))
    if width == {4}:
        modes2: dict = {}
        for k, m, re, im in rows:
            if int(k) != k or int(m) != m:
                raise TestFunctionError(f"non-integer mode ({k}, {m})")
            key = (int(k), int(m))
            modes2[key] = modes2.get(key, 0) + complex(re, im)
        f = TestFn2D.from_modes(modes2, name=doc.get("name", ""))
        f.require_symmetric()
        return f
    raise TestFunctionError("coefficient rows must all have 3 (1D) or 4 (2D) entries")


def dump_testfn(f: TestFn1D | TestFn2D) -> dict:
    rows = []
    if isinstance(f, TestFn1D):
        for k, c in zip(f.modes, f.coef):
            if c != 0:
                rows.append([int(k), float(c.real), float(c.imag)])
    else:
        for i, k in enumerate(f.modes):
            for j, m in enumerate(f.modes):
                c = f.coef[i, j]
                if c != 0:
                    rows.append([int(k), int(m), float(c.real), float(c.imag)])
    return {"name": f.name, "coeffs": rows}


# -- standard suite -----------------------------------------------------------


def cos_mode(k: int = 1) -> TestFn1D:
    return TestFn1D.from_modes({k: 0.5, -k: 0.5}, name=f"cos(2pi*{k}x)" if k != 1 else "cos(2pi x)")


def sin_mode(k: int = 1) -> TestFn1D:
    return TestFn1D.from_modes({k: -0.5j, -k: 0.5j}, name=f"sin(2pi*{k}x)" if k != 1 else "sin(2pi x)")


def suite_1d() -> dict[str, TestFn1D]:
    mixed = TestFn1D.from_modes({1: 0.5, -1: 0.5, 2: -0.25j, -2: 0.25j}, name="cos(2pi x)+0.5 sin(4pi x)")
    return {"cos": cos_mode(1), "sin": sin_mode(1), "mixed": mixed}


def suite_2d() -> dict[str, TestFn2D]:
    diag = TestFn2D.from_modes({(1, 1): 0.5, (-1, -1): 0.5}, name="cos(2pi(x+y))")
    prod = TestFn2D.product(cos_mode(1), cos_mode(1)).symmetrized()
    prod.name = "cos(2pi x)cos(2pi y)"
    return {"cos_sum": diag, "cos_prod": prod}


def resolve_1d(name: str) -> TestFn1D:
    s = suite_1d()
    if name not in s:
        raise KeyError(f"unknown 1D test function {name!r}; known: {sorted(s)}")
    return s[name]


def resolve_2d(name: str) -> TestFn2D:
    s = suite_2d()
    if name not in s:
        raise KeyError(f"unknown 2D test function {name!r}; known: {sorted(s)}")
    return s[name]


def random_trig_1d(rng: np.random.Generator, K: int = 3, mean_zero: bool = True) -> TestFn1D:
    modes = {}
    for k in range(0 if not mean_zero else 1, K + 1):
        c = complex(rng.normal(), rng.normal()) / (1 + k)
        if k == 0:
            c = complex(c.real, 0.0)
        modes[k] = modes.get(k, 0) + c
        if k:
            modes[-k] = np.conj(c)
    return TestFn1D.from_modes(modes, name="random", K=K)


def random_trig_2d(rng: np.random.Generator, K: int = 2, symmetric: bool = True) -> TestFn2D:
    side = 2 * K + 1
    a = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
    a = 0.5 * (a + np.conj(a[::-1, ::-1]))
    if symmetric:
        a = 0.5 * (a + a.T)
    return TestFn2D(a, name="random")
