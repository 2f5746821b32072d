import numpy as np
import pytest

from klflow.levelset import (CompactBox, LevelSetError, build_profile,
                             gradient_extrema, sample_level)


def test_compact_box_round_trip():
    bounds = np.array([[-1.0, 3.0], [0.0, 2.0]])
    K = CompactBox.from_bounds(bounds)
    assert np.allclose(K.center, [1.0, 1.0])
    assert np.allclose(K.halfwidth, [2.0, 1.0])
    assert np.allclose(K.bounds(), bounds)
    assert K.contains(np.array([0.0, 0.5]))[0]
    assert not K.contains(np.array([0.0, 2.5]))[0]
    assert K.diameter == pytest.approx(2 * np.sqrt(5.0))


def test_compact_box_validation():
    with pytest.raises(LevelSetError):
        CompactBox(center=np.zeros(2), halfwidth=np.array([1.0, 0.0]))
    with pytest.raises(LevelSetError):
        CompactBox(center=np.zeros(2), halfwidth=np.ones(3))


def test_sample_level_circle(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    pts = sample_level(quadratic.field, 0.25, K, budget=100)
    assert len(pts) >= 50
    assert np.allclose(quadratic.field.f(pts), 0.25, rtol=1e-8)
    assert np.allclose(np.linalg.norm(pts, axis=1), 0.5, rtol=1e-8)
    # the sampler should spread around the whole circle
    angles = np.sort(np.arctan2(pts[:, 1], pts[:, 0]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    assert gaps.max() < 1.0


def test_sample_level_requires_positive_level(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    with pytest.raises(LevelSetError):
        sample_level(quadratic.field, 0.0, K, budget=10)


def test_sample_level_empty_when_level_above_range(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.full(2, 0.1))
    pts = sample_level(quadratic.field, 0.25, K, budget=50)
    assert len(pts) == 0


def test_gradient_extrema_circle(quadratic):
    # |grad f| = 2 sqrt(f) is constant on each level
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    pts = sample_level(quadratic.field, 0.16, K, budget=80)
    lo, hi = gradient_extrema(quadratic.field, pts)
    assert lo == pytest.approx(0.8, rel=1e-8)
    assert hi == pytest.approx(0.8, rel=1e-8)
    with pytest.raises(LevelSetError):
        gradient_extrema(quadratic.field, np.empty((0, 2)))


def test_build_profile_quadratic(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    profile = build_profile(quadratic.field, K, rho=0.5, m=10, budget=60)
    assert not profile.unreliable
    levels, alpha, beta = profile.nonempty()
    assert len(levels) == 10
    # alpha = beta = 1 / (2 sqrt(t)) on a circular level
    assert np.allclose(alpha, 1.0 / (2.0 * np.sqrt(levels)), rtol=1e-6)
    assert np.allclose(beta, alpha, rtol=1e-6)
    assert np.all(np.diff(profile.levels) < 0)


def test_build_profile_strip_extrema_differ(strip):
    # on the strip every level y = sqrt(t) has constant |grad| = 2 sqrt(t),
    # so alpha and beta agree; use an anisotropic composite instead
    from klflow.fields import field_from_expression
    field = field_from_expression("x1^2 + 4*x2^2", 2)
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    profile = build_profile(field, K, rho=0.5, m=8, budget=120)
    levels, alpha, beta = profile.nonempty()
    assert np.all(alpha >= beta)           # 1/min >= 1/max
    assert np.all(alpha > beta * 1.5)      # genuinely anisotropic


def test_build_profile_flags_unreachable_levels(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.full(2, 0.2))
    profile = build_profile(quadratic.field, K, rho=4.0, m=5, budget=40)
    # levels 4, 2, 1, 0.5 exceed max f on K (~0.08): flagged empty
    assert profile.unreliable
    assert profile.empty_levels[:4].all()


def test_build_profile_rejects_bad_rho(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    with pytest.raises(LevelSetError):
        build_profile(quadratic.field, K, rho=-1.0, m=4, budget=10)
