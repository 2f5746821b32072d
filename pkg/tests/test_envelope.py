import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klflow.desing import DesingError
from klflow.envelope import (EnvelopeError, SemicontinuousProfile,
                             build_envelope, comb_profile,
                             integrable_majorant_for_alpha, moreau_envelope)
from klflow.levelset import CompactBox, build_profile


def _flat(r0=1.0, kind="lower"):
    return SemicontinuousProfile(
        r0=r0, kind=kind,
        evaluator=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        grid=np.geomspace(r0 * 2.0 ** (-14), r0, 100))


def test_profile_validation():
    grid = np.geomspace(1e-3, 1.0, 10)
    ones = lambda t: np.ones_like(np.asarray(t, dtype=float))
    with pytest.raises(EnvelopeError):
        SemicontinuousProfile(r0=1.0, kind="sideways", evaluator=ones, grid=grid)
    with pytest.raises(EnvelopeError):
        SemicontinuousProfile(r0=-1.0, kind="lower", evaluator=ones, grid=grid)
    with pytest.raises(EnvelopeError):
        SemicontinuousProfile(r0=1.0, kind="lower", evaluator=ones,
                              grid=np.array([0.0, 1.0]))  # grid must be > 0
    with pytest.raises(EnvelopeError):
        SemicontinuousProfile(r0=1.0, kind="lower",
                              evaluator=lambda t: np.zeros_like(np.asarray(t)),
                              grid=grid)  # values must be positive


def test_moreau_envelope_is_below_and_tight_for_constants():
    u = _flat()
    e = moreau_envelope(u, lam=0.01, interval=(0.25, 1.0))
    ts = np.linspace(0.25, 1.0, 50)
    assert np.all(e(ts) <= 1.0 + 1e-12)
    assert np.allclose(e(ts), 1.0)


def test_moreau_envelope_sees_grid_dips():
    dip_at = 0.5
    def ev(t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        out[np.isclose(t, dip_at, rtol=0, atol=1e-13)] = 0.3
        return out
    grid = np.unique(np.concatenate([np.geomspace(1e-3, 1.0, 64), [dip_at]]))
    u = SemicontinuousProfile(r0=1.0, kind="lower", evaluator=ev, grid=grid)
    e = moreau_envelope(u, lam=1e-4, interval=(0.25, 1.0))
    assert e(dip_at) <= 0.3 + 1e-12
    # far from the dip the envelope recovers the baseline
    assert e(0.9) == pytest.approx(1.0, abs=1e-6)


def test_moreau_envelope_argument_validation():
    u = _flat()
    with pytest.raises(EnvelopeError):
        moreau_envelope(u, lam=-1.0, interval=(0.25, 1.0))
    with pytest.raises(EnvelopeError):
        moreau_envelope(u, lam=0.1, interval=(1.0, 0.25))


def test_build_envelope_recovers_continuous_profile():
    u = SemicontinuousProfile(
        r0=1.0, kind="lower",
        evaluator=lambda t: 1.0 + np.asarray(t, dtype=float),
        grid=np.geomspace(2.0 ** (-10), 1.0, 120))
    res = build_envelope(u, budget=40)
    assert res.side_violation <= 1e-12
    assert np.max(np.abs(res.w_values - res.u_values)) <= 1e-6
    assert res.targets_met


def test_build_envelope_lower_comb():
    u = comb_profile(1.0, "lower", rng=np.random.default_rng(7))
    res = build_envelope(u, budget=10)
    assert res.side_violation <= 1e-9         # w stays below u everywhere
    assert res.l1_gap < np.pi ** 2 / 3.0
    # the envelope dives under every dip tooth
    for t in u.grid:
        assert res.w(t) <= u(t) + 1e-9


def test_build_envelope_upper_comb():
    u = comb_profile(1.0, "upper", rng=np.random.default_rng(8))
    res = build_envelope(u, budget=10)
    assert res.side_violation <= 1e-9         # w stays above u everywhere
    for t in u.grid:
        assert res.w(t) >= u(t) - 1e-9


def test_build_envelope_gap_shrinks_with_budget():
    for kind, seed in (("lower", 3), ("upper", 4)):
        u = comb_profile(1.0, kind, rng=np.random.default_rng(seed))
        gaps = [build_envelope(u, budget=b).l1_gap for b in (4, 8, 16)]
        assert gaps[0] > gaps[1] > gaps[2]


def test_build_envelope_is_continuous_at_knots():
    u = comb_profile(1.0, "lower", rng=np.random.default_rng(9))
    res = build_envelope(u, budget=8)
    # interpolated values from the left/right of each knot agree
    for piece in res.pieces[1:]:
        knot = piece.a_hi
        left = res.w(knot * (1 - 1e-12))
        right = res.w(knot * (1 + 1e-12))
        assert left == pytest.approx(right, rel=1e-9)


def test_build_envelope_rejects_negative_budget():
    with pytest.raises(EnvelopeError):
        build_envelope(_flat(), budget=-1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000),
       kind=st.sampled_from(["lower", "upper"]))
def test_envelope_side_property(seed, kind):
    u = comb_profile(1.0, kind, rng=np.random.default_rng(seed))
    res = build_envelope(u, budget=6)
    assert res.side_violation <= 1e-9
    assert np.all(res.w_values > 0)


def test_integrable_majorant_for_alpha(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    profile = build_profile(quadratic.field, K, rho=0.5, m=12, budget=60)
    a = integrable_majorant_for_alpha(profile)
    ts = np.geomspace(1e-6, 0.4, 60)
    av = np.asarray(a(ts))
    assert np.all(av > 0)
    # a must stay below the true gradient floor 2 sqrt(t) (up to sampling
    # slack on the alpha profile itself)
    assert np.all(av <= 2.0 * np.sqrt(ts) * (1 + 1e-6))


def test_integrable_majorant_rejects_divergent_alpha(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    levels = 0.5 * 2.0 ** (-np.arange(12, dtype=float))
    from klflow.levelset import LevelSetProfile
    profile = LevelSetProfile(K=K, levels=levels,
                              n_samples=np.full(12, 10),
                              min_grad=levels ** 2.0,   # alpha = t^-2 diverges
                              max_grad=levels ** 0.5,
                              coverage=np.ones(12))
    with pytest.raises(DesingError):
        integrable_majorant_for_alpha(profile)
