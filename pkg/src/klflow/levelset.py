"""Level-set sampling and per-level gradient extrema profiles.

Levels of ``f`` intersected with a compact box are populated by Newton
projection along the gradient from a stratified seed grid, then spread
tangentially by predictor-corrector continuation. Per-level extrema of
``|grad f|`` feed the integrability analysis downstream: ``alpha = 1/min``,
``beta = 1/max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .fields import ScalarField


class LevelSetError(ValueError):
    pass


@dataclass(frozen=True)
class CompactBox:
    """Axis-aligned compact box given by center and per-axis half-widths."""

    center: np.ndarray
    halfwidth: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        h = np.asarray(self.halfwidth, dtype=float)
        if c.shape != h.shape or np.any(h <= 0):
            raise LevelSetError("halfwidth must be positive and match center")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "halfwidth", h)

    @classmethod
    def from_bounds(cls, box) -> "CompactBox":
        box = np.asarray(box, dtype=float)
        return cls(center=box.mean(axis=1), halfwidth=(box[:, 1] - box[:, 0]) / 2.0)

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def lo(self):
        return self.center - self.halfwidth

    @property
    def hi(self):
        return self.center + self.halfwidth

    @property
    def diameter(self) -> float:
        return float(2.0 * np.linalg.norm(self.halfwidth))

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all(np.abs(pts - self.center) <= self.halfwidth + 1e-12, axis=1)

    def bounds(self):
        return np.stack([self.lo, self.hi], axis=1)


@dataclass(frozen=True)
class LevelSetProfile:
    K: CompactBox
    levels: np.ndarray       # decreasing, geometric
    n_samples: np.ndarray    # per level
    min_grad: np.ndarray
    max_grad: np.ndarray
    coverage: np.ndarray     # converged fraction of seeded patches
    unreliable: bool = False

    @property
    def alpha(self):
        """Reciprocal sampled infimum of |grad f|; under-estimates alpha."""
        with np.errstate(divide="ignore"):
            return np.where(self.min_grad > 0, 1.0 / self.min_grad, np.inf)

    @property
    def beta(self):
        with np.errstate(divide="ignore"):
            return np.where(self.max_grad > 0, 1.0 / self.max_grad, np.inf)

    @property
    def empty_levels(self):
        return self.n_samples == 0

    def nonempty(self):
        keep = ~self.empty_levels
        return self.levels[keep], self.alpha[keep], self.beta[keep]


def _newton_project(field: ScalarField, X: np.ndarray, t: float, K: CompactBox,
                    max_iter: int = 60, tol_rel: float = 1e-9,
                    grad_floor: float = 1e-14):
    """Vectorized Newton projection of seeds onto the level ``f = t``."""
    X = np.array(X, dtype=float)
    alive = np.ones(len(X), dtype=bool)
    for _ in range(max_iter):
        fv = np.asarray(field.f(X))
        done = np.abs(fv - t) <= tol_rel * t
        work = alive & ~done
        if not np.any(work):
            break
        g = np.asarray(field.grad(X[work]))
        gn2 = (g ** 2).sum(axis=1)
        ok = gn2 > grad_floor ** 2
        step = np.zeros_like(g)
        step[ok] = ((fv[work][ok] - t) / gn2[ok])[:, None] * g[ok]
        X[work] = X[work] - step
        dead = np.zeros(len(X), dtype=bool)
        dead_idx = np.where(work)[0][~ok]
        dead[dead_idx] = True
        # also kill runaways
        dead |= np.any(np.abs(X - K.center) > 4 * K.halfwidth, axis=1)
        alive &= ~dead
    fv = np.asarray(field.f(X))
    good = alive & (np.abs(fv - t) <= tol_rel * t) & K.contains(X)
    return X[good], good


def _dedup(points: np.ndarray, resolution: float) -> np.ndarray:
    if len(points) == 0:
        return points
    keys = np.round(points / resolution).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


@dataclass
class LevelSample:
    points: np.ndarray
    n_seeds: int
    n_converged: int
    message: str = ""

    @property
    def coverage(self) -> float:
        return self.n_converged / self.n_seeds if self.n_seeds else 0.0


def _sample_level_info(field: ScalarField, t: float, K: CompactBox, budget: int,
                       rng: np.random.Generator, seeds_per_axis: int = 32) -> LevelSample:
    n = K.dimension
    if t <= 0:
        raise LevelSetError("level must be positive")
    # stratified seed grid
    per_axis = seeds_per_axis if n <= 2 else max(8, int(round(32 ** (2.0 / n))))
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(K.lo, K.hi)]
    seeds = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    seeds = seeds + (K.halfwidth / per_axis) * (rng.random(seeds.shape) - 0.5)

    converged, good = _newton_project(field, seeds, t, K)
    sample = LevelSample(points=np.empty((0, n)), n_seeds=len(seeds),
                         n_converged=int(good.sum()))
    if len(converged) == 0:
        sample.message = f"no seed converged onto level {t:g} inside K"
        return sample

    resolution = 1e-4 * K.diameter
    points = _dedup(converged, resolution)
    # tangential predictor-corrector spreading to cover components
    step = K.diameter / 64.0
    rounds = 0
    while len(points) < budget and rounds < 64:
        rounds += 1
        base = points if len(points) <= budget else points[:budget]
        g = np.asarray(field.grad(base))
        gn = np.linalg.norm(g, axis=1, keepdims=True)
        gn[gn == 0] = 1.0
        u = g / gn
        v = rng.standard_normal(base.shape)
        v -= (v * u).sum(axis=1, keepdims=True) * u
        vn = np.linalg.norm(v, axis=1, keepdims=True)
        vn[vn == 0] = 1.0
        pred = base + step * v / vn
        corr, _ = _newton_project(field, pred, t, K)
        merged = _dedup(np.vstack([points, corr]), resolution)
        if len(merged) == len(points):
            step *= 0.5
            if step < 4 * resolution:
                break
        points = merged
    if len(points) > budget:
        points = points[rng.permutation(len(points))[:budget]]
        points = points[np.lexsort(points.T[::-1])]
    sample.points = points
    return sample


def sample_level(field: ScalarField, t: float, K: CompactBox, budget: int,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Points of ``f^{-1}(t)`` inside ``K``, up to ``budget`` of them."""
    rng = rng or np.random.default_rng(0)
    return _sample_level_info(field, t, K, budget, rng).points


def gradient_extrema(field: ScalarField, points) -> tuple[float, float]:
    """Sampled extrema of ``|grad f|``: inner estimates of inf and sup."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0:
        raise LevelSetError("gradient_extrema needs a nonempty point list")
    gn = np.asarray(field.grad_norm(points))
    return float(gn.min()), float(gn.max())


def build_profile(field: ScalarField, K: CompactBox, rho: float, m: int,
                  budget: int, rng: Optional[np.random.Generator] = None) -> LevelSetProfile:
    """Per-level gradient extrema on the geometric grid ``rho * 2**-j``."""
    if rho <= 0:
        raise LevelSetError("rho must be positive")
    rng = rng or np.random.default_rng(0)
    levels = rho * 2.0 ** (-np.arange(m))
    # coarse estimate of max f on K, to flag hopeless levels early
    coarse = np.stack(np.meshgrid(*[np.linspace(lo, hi, 16)
                                    for lo, hi in zip(K.lo, K.hi)],
                                  indexing="ij"), axis=-1).reshape(-1, K.dimension)
    f_max = float(np.max(np.asarray(field.f(coarse))))

    n_samples = np.zeros(m, dtype=int)
    min_grad = np.full(m, np.nan)
    max_grad = np.full(m, np.nan)
    coverage = np.zeros(m)
    for j, t in enumerate(levels):
        if t >= f_max:
            continue  # flagged empty; never interpolated over
        info = _sample_level_info(field, t, K, budget, rng)
        coverage[j] = info.coverage
        if len(info.points) == 0:
            continue
        n_samples[j] = len(info.points)
        min_grad[j], max_grad[j] = gradient_extrema(field, info.points)

    unreliable = float(np.mean(n_samples == 0)) > 0.2
    return LevelSetProfile(K=K, levels=levels, n_samples=n_samples,
                           min_grad=min_grad, max_grad=max_grad,
                           coverage=coverage, unreliable=unreliable)
