"""One-dimensional monotone profiles and desingularization certificates.

A :class:`Profile1D` represents a scalar function of one variable on a grid,
optionally backed by exact callables. It is the common currency for
desingularization functions, gradient-floor profiles ``a``, gradient-cap
profiles ``b`` and the per-level ``alpha``/``beta`` curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass(frozen=True)
class Profile1D:
    """Scalar function of one variable, sampled on an increasing grid.

    If ``fn``/``dfn`` are given they are used directly (exact evaluation);
    otherwise values are interpolated monotonically from the grid.
    """

    grid: np.ndarray
    values: np.ndarray
    deriv_values: Optional[np.ndarray] = None
    fn: Optional[Callable] = None
    dfn: Optional[Callable] = None
    name: str = ""
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1D arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.fn is None:
            object.__setattr__(self, "_interp", PchipInterpolator(grid, values, extrapolate=True))

    def __call__(self, t):
        if self.fn is not None:
            return self.fn(np.asarray(t, dtype=float)) if np.ndim(t) else float(self.fn(t))
        out = self._interp(t)
        return float(out) if np.ndim(t) == 0 else out

    def derivative(self, t):
        if self.dfn is not None:
            return self.dfn(np.asarray(t, dtype=float)) if np.ndim(t) else float(self.dfn(t))
        if self.deriv_values is not None:
            dinterp = PchipInterpolator(self.grid, self.deriv_values, extrapolate=True)
            out = dinterp(t)
        else:
            out = self._interp.derivative()(t)
        return float(out) if np.ndim(t) == 0 else out

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))


def power_law_profile(coefficient: float, exponent: float, rho: float,
                      n_grid: int = 129, name: str = "") -> Profile1D:
    """Profile ``t -> coefficient * t**exponent`` on ``[0, rho)``, exact."""
    if coefficient <= 0 or exponent <= 0:
        raise ValueError("power law profile needs positive coefficient and exponent")
    grid = np.concatenate([[0.0], np.geomspace(rho * 2.0 ** (-40), rho, n_grid - 1)])
    c, e = float(coefficient), float(exponent)
    vals = c * grid ** e

    def fn(t):
        return c * np.asarray(t, dtype=float) ** e

    def dfn(t):
        t = np.asarray(t, dtype=float)
        return c * e * np.where(t > 0, t, np.nan) ** (e - 1.0)

    return Profile1D(grid=grid, values=vals, fn=fn, dfn=dfn,
                     name=name or f"{c:g}*t^{e:g}")


def profile_from_callable(fn: Callable, lo: float, hi: float, n_grid: int = 257,
                          dfn: Optional[Callable] = None, include_zero: bool = False,
                          name: str = "") -> Profile1D:
    """Sample ``fn`` on a geometric grid of ``(lo, hi]`` into a profile."""
    grid = np.geomspace(lo, hi, n_grid)
    if include_zero:
        grid = np.concatenate([[0.0], grid])
    vals = np.array([fn(t) for t in grid], dtype=float)
    return Profile1D(grid=grid, values=vals, fn=fn, dfn=dfn, name=name)


@dataclass(frozen=True)
class KLCertificate:
    """Desingularization triple: radius ``rho``, box ``U``, profile ``psi``.

    ``psi`` must be strictly increasing with ``psi(0) == 0`` and positive
    derivative on ``(0, rho)``; it reparametrizes field values so that the
    composed gradient has norm at least one off the zero locus.
    """

    rho: float
    U: Optional[np.ndarray]  # (n, 2) lo/hi bounds or None for "whole domain"
    psi: Profile1D
    source: str = "user"  # user | power_law_fit | built_from_a

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.U is not None:
            U = np.asarray(self.U, dtype=float)
            if U.ndim != 2 or U.shape[1] != 2 or np.any(U[:, 0] >= U[:, 1]):
                raise ValueError("U must be an (n, 2) box with lo < hi")
            object.__setattr__(self, "U", U)
        psi0 = self.psi(0.0) if self.psi.grid[0] <= 0.0 else float(self.psi.values[0])
        if abs(psi0) > 1e-12:
            raise ValueError("psi(0) must vanish")
        # positive derivative on a sample of (0, rho)
        ts = np.geomspace(self.rho * 1e-9, self.rho * 0.999, 64)
        if np.any(np.asarray(self.psi.derivative(ts)) <= 0):
            raise ValueError("psi derivative must be positive on (0, rho)")

    def g(self, fval):
        """Desingularized value psi(f)."""
        return self.psi(fval)


def power_law_certificate(coefficient: float, exponent: float, rho: float,
                          U: Optional[np.ndarray] = None,
                          source: str = "user") -> KLCertificate:
    psi = power_law_profile(coefficient, exponent, rho)
    return KLCertificate(rho=rho, U=U, psi=psi, source=source)
