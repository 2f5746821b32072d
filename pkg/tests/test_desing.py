import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klflow.desing import (DesingError, build_psi_from_a, classify_point,
                           fit_lojasiewicz_exponent, integrability_verdict,
                           no_curve_diagnostic, oracle_1d, trichotomy_verdict,
                           verify_certificate)
from klflow.levelset import CompactBox, LevelSetProfile
from klflow.profiles import power_law_certificate

RHO = 0.5
LEVELS = RHO * 2.0 ** (-np.arange(24, dtype=float))


# ---------------------------------------------------------------------------
# certificate verification
# ---------------------------------------------------------------------------

def test_verify_exact_certificate(quadratic):
    rep = verify_certificate(quadratic.field, quadratic.known_certificate)
    assert rep.passed
    assert rep.worst_margin >= -1e-9
    assert rep.n_checked >= 1000


def test_verify_detects_invalid_certificate(quadratic):
    # psi = sqrt(t)/2 halves the derivative, so psi'(f) |grad f| = 1/2
    bad = power_law_certificate(0.5, 0.5, 1.0)
    rep = verify_certificate(quadratic.field, bad)
    assert not rep.passed
    assert rep.worst_margin == pytest.approx(-0.5, abs=1e-6)
    assert len(rep.failing_points) > 0


# ---------------------------------------------------------------------------
# integrability verdicts
# ---------------------------------------------------------------------------

def test_integrable_tail_with_closed_form():
    v = integrability_verdict(LEVELS, LEVELS ** -0.5, RHO)
    assert v.verdict == "integrable"
    assert v.tail_exponent == pytest.approx(0.5, abs=0.02)
    # trapezoid quadrature on the geometric level grid carries a few percent
    assert v.integral == pytest.approx(2.0 * math.sqrt(RHO), rel=0.05)


def test_divergent_tail():
    v = integrability_verdict(LEVELS, LEVELS ** -2.0, RHO)
    assert v.verdict == "divergent"
    assert v.integral == math.inf
    assert v.tail_exponent == pytest.approx(2.0, abs=0.02)


def test_borderline_reciprocal_is_divergent():
    # u = 1/t sits exactly on the exponent boundary; the non-shrinking
    # trapezoid increments identify the divergence
    v = integrability_verdict(LEVELS, 1.0 / LEVELS, RHO)
    assert v.verdict == "divergent"
    assert v.tail_exponent == pytest.approx(1.0, abs=0.02)


def test_dead_zone_with_shrinking_increments_is_inconclusive():
    v = integrability_verdict(LEVELS, LEVELS ** -0.98, RHO)
    assert v.verdict == "inconclusive"


def test_too_few_points_inconclusive():
    v = integrability_verdict(LEVELS[:5], LEVELS[:5] ** -0.5, RHO)
    assert v.verdict == "inconclusive"


@settings(max_examples=30, deadline=None)
@given(q=st.floats(0.1, 2.0))
def test_tail_exponent_recovery(q):
    if abs(q - 1.0) < 0.08:
        return
    v = integrability_verdict(LEVELS, LEVELS ** -q, RHO)
    assert v.tail_exponent == pytest.approx(q, abs=0.02)
    assert v.verdict == ("integrable" if q < 1 else "divergent")


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------

def test_fit_exponent_quadratic(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    fit = fit_lojasiewicz_exponent(quadratic.field, K, rho=0.5)
    assert fit.theta == pytest.approx(0.5, abs=0.01)
    assert fit.C == pytest.approx(2.0, rel=0.02)
    assert fit.certificate is not None
    rep = verify_certificate(quadratic.field, fit.certificate)
    assert rep.worst_margin >= -1e-3


def test_fit_exponent_quartic():
    from klflow.fields import get_zoo_entry
    field = get_zoo_entry("quartic").field
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    fit = fit_lojasiewicz_exponent(field, K, rho=0.5)
    assert fit.theta == pytest.approx(0.75, abs=0.01)
    assert fit.C == pytest.approx(4.0, rel=0.02)


def test_fit_exponent_distance_field():
    from klflow.fields import get_zoo_entry
    field = get_zoo_entry("distance").field
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    fit = fit_lojasiewicz_exponent(field, K, rho=0.5)
    assert fit.theta == pytest.approx(0.0, abs=0.01)
    assert fit.C == pytest.approx(1.0, rel=0.02)


def test_fit_exponent_no_admissible_samples(quadratic):
    K = CompactBox(center=np.array([10.0, 10.0]), halfwidth=np.ones(2))
    with pytest.raises(DesingError):
        fit_lojasiewicz_exponent(quadratic.field, K, rho=0.5, n_points=50)


# ---------------------------------------------------------------------------
# building psi from a gradient floor
# ---------------------------------------------------------------------------

def test_build_psi_from_power_law_floor(quadratic):
    # a(t) = 2 sqrt(t) gives psi(t) = sqrt(t) exactly
    cert = build_psi_from_a(lambda t: 2.0 * math.sqrt(t), rho=1.0)
    ts = np.geomspace(1e-8, 0.99, 40)
    assert np.allclose(cert.psi(ts), np.sqrt(ts), rtol=1e-4)
    assert np.allclose(cert.psi.derivative(ts), 0.5 / np.sqrt(ts), rtol=1e-12)
    assert cert.psi(0.0) == 0.0
    assert cert.source == "built_from_a"
    rep = verify_certificate(quadratic.field, cert)
    assert rep.worst_margin >= -1e-6


def test_build_psi_rejects_divergent_floor():
    with pytest.raises(DesingError):
        build_psi_from_a(lambda t: t, rho=1.0)  # int 1/t diverges


# ---------------------------------------------------------------------------
# trichotomy and point classification
# ---------------------------------------------------------------------------

def test_trichotomy_synthetic_profiles():
    good, _, _ = trichotomy_verdict(LEVELS, LEVELS ** -0.5, LEVELS ** -0.5, RHO)
    bad, _, _ = trichotomy_verdict(LEVELS, LEVELS ** -1.0, LEVELS ** -0.5, RHO)
    ugly, _, _ = trichotomy_verdict(LEVELS, LEVELS ** -1.0, LEVELS ** -1.0, RHO)
    assert (good, bad, ugly) == ("good", "bad", "ugly")


def test_classify_point_quadratic_is_good(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    pc = classify_point(quadratic.field, np.zeros(2), K, rho=0.5,
                        m=12, budget=60)
    assert pc.verdict == "good"
    assert pc.simple_nondegenerate
    assert pc.alpha_integral == pytest.approx(math.sqrt(0.5), rel=0.05)
    assert pc.fitted_exponent.theta == pytest.approx(0.5, abs=0.02)


def test_classify_point_requires_zero_locus_point(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    with pytest.raises(DesingError):
        classify_point(quadratic.field, np.array([0.5, 0.0]), K, rho=0.5)


def test_classify_point_with_injected_profile(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    profile = LevelSetProfile(K=K, levels=LEVELS,
                              n_samples=np.full(len(LEVELS), 10),
                              min_grad=LEVELS ** 1.0,          # alpha = t^-1
                              max_grad=LEVELS ** 0.5,          # beta = t^-1/2
                              coverage=np.ones(len(LEVELS)))
    pc = classify_point(quadratic.field, np.zeros(2), K, rho=RHO,
                        profile=profile, fit_exponent=False)
    assert pc.verdict == "bad"
    assert pc.beta_integral == pytest.approx(2.0 * math.sqrt(RHO), rel=0.05)


def test_classify_point_unreliable_profile_is_inconclusive(quadratic):
    K = CompactBox(center=np.zeros(2), halfwidth=np.ones(2))
    profile = LevelSetProfile(K=K, levels=LEVELS,
                              n_samples=np.zeros(len(LEVELS), dtype=int),
                              min_grad=np.full(len(LEVELS), np.nan),
                              max_grad=np.full(len(LEVELS), np.nan),
                              coverage=np.zeros(len(LEVELS)), unreliable=True)
    pc = classify_point(quadratic.field, np.zeros(2), K, rho=RHO,
                        profile=profile, fit_exponent=False)
    assert pc.verdict == "inconclusive"


# ---------------------------------------------------------------------------
# no-curve obstruction diagnostic
# ---------------------------------------------------------------------------

class _SyntheticCurve:
    def __init__(self, s, points, f_values):
        self.s = np.asarray(s, dtype=float)
        self.points = np.asarray(points, dtype=float)
        self.f_values = np.asarray(f_values, dtype=float)


def test_no_curve_contradiction_detected():
    # 1-Lipschitz curve whose f hits zero linearly although int 1/b diverges
    s = np.linspace(0.0, 1.0, 200)
    pts = np.stack([s, np.zeros_like(s)], axis=1)
    fv = np.maximum(0.25 * (1.0 - s), 0.0)
    rep = no_curve_diagnostic(None, lambda t: t, _SyntheticCurve(s, pts, fv),
                              rho=0.5)
    assert rep.lemma_applicable
    assert rep.speed_ok
    assert rep.bound_violated
    assert rep.f_approaches_zero
    assert "contradiction" in rep.message


def test_no_curve_lemma_not_applicable_for_integrable_reciprocal():
    s = np.linspace(0.0, 1.0, 50)
    pts = np.stack([s, np.zeros_like(s)], axis=1)
    fv = 0.25 * (1.0 - s) ** 2 + 1e-9
    rep = no_curve_diagnostic(None, lambda t: 2.0 * math.sqrt(t),
                              _SyntheticCurve(s, pts, fv), rho=0.5)
    assert not rep.lemma_applicable
    assert "does not apply" in rep.message


def test_no_curve_speed_check():
    s = np.linspace(0.0, 1.0, 50)
    pts = np.stack([3.0 * s, np.zeros_like(s)], axis=1)  # speed 3 > 1
    fv = np.full_like(s, 0.1)
    rep = no_curve_diagnostic(None, lambda t: t, _SyntheticCurve(s, pts, fv),
                              rho=0.5)
    assert not rep.speed_ok


def test_no_curve_gradient_bound_along_true_flow(quadratic):
    # along the descending flow of f = r^2 we have |grad f| = 2 sqrt(f) = b(f)
    from klflow.flow import Clock, integrate, reparametrize_clock
    traj = integrate(quadratic.field, np.array([0.4, 0.1]), Clock.LEVEL)
    arc = reparametrize_clock(traj, Clock.ARCLENGTH)
    rep = no_curve_diagnostic(quadratic.field,
                              lambda t: 2.0 * math.sqrt(t) + 1e-12, arc,
                              rho=0.5)
    assert rep.gradient_bound_ok
    assert rep.speed_ok
    assert not rep.lemma_applicable  # int 1/(2 sqrt t) converges
    # the exact flow saturates the inequality: the defect is zero up to
    # quadrature error of the arc length
    assert rep.worst_defect == pytest.approx(0.0, abs=1e-3)


# ---------------------------------------------------------------------------
# one-dimensional oracle
# ---------------------------------------------------------------------------

def test_oracle_1d_square():
    prof = oracle_1d(lambda x: x * x, eps=1.0)
    ts = np.geomspace(1e-6, 0.5, 50)
    assert np.allclose(prof(ts), 0.5 / np.sqrt(ts), rtol=1e-3)
    # the integral over (0, T) is the inverse function sqrt(T)
    dense = np.geomspace(1e-12, 0.5, 4000)
    integral = np.trapezoid(prof(dense), dense)
    assert integral == pytest.approx(math.sqrt(0.5), rel=1e-2)


def test_oracle_1d_requires_monotone_input():
    with pytest.raises(DesingError):
        oracle_1d(lambda x: -x, eps=1.0)
