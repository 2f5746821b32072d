import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klflow.profiles import (KLCertificate, Profile1D, power_law_certificate,
                             power_law_profile, profile_from_callable)


def test_power_law_values_and_derivative_exact():
    p = power_law_profile(2.0, 0.5, 1.0)
    ts = np.array([0.04, 0.25, 0.81])
    assert np.allclose(p(ts), 2.0 * np.sqrt(ts), rtol=0, atol=1e-15)
    assert np.allclose(p.derivative(ts), 1.0 / np.sqrt(ts), rtol=0, atol=1e-15)
    assert p(0.0) == 0.0
    assert p.strictly_increasing


def test_profile_scalar_vs_array_calls():
    p = power_law_profile(1.0, 1.0, 1.0)
    assert isinstance(p(0.5), float)
    assert p(np.array([0.5])).shape == (1,)


def test_interpolated_profile_matches_samples():
    grid = np.linspace(0.0, 1.0, 50)
    vals = grid ** 3
    p = Profile1D(grid=grid, values=vals)
    assert np.allclose(p(grid), vals)
    # derivative approximates 3 t^2 away from the ends
    ts = np.linspace(0.2, 0.8, 13)
    assert np.allclose(p.derivative(ts), 3 * ts ** 2, rtol=1e-2)


def test_profile_rejects_bad_grids():
    with pytest.raises(ValueError):
        Profile1D(grid=np.array([0.0, 0.0, 1.0]), values=np.zeros(3))
    with pytest.raises(ValueError):
        Profile1D(grid=np.array([0.0, 1.0]), values=np.zeros(3))


def test_profile_from_callable():
    p = profile_from_callable(np.sqrt, 1e-6, 1.0, include_zero=True)
    assert p(0.25) == 0.5


def test_certificate_requires_vanishing_at_zero():
    grid = np.linspace(0.0, 1.0, 10)
    bad = Profile1D(grid=grid, values=grid + 1.0)
    with pytest.raises(ValueError):
        KLCertificate(rho=1.0, U=None, psi=bad)


def test_certificate_requires_positive_derivative():
    grid = np.linspace(0.0, 1.0, 10)
    bad = Profile1D(grid=grid, values=-grid)
    with pytest.raises(ValueError):
        KLCertificate(rho=1.0, U=None, psi=bad)


def test_certificate_box_validation():
    with pytest.raises(ValueError):
        power_law_certificate(1.0, 0.5, 1.0, U=np.array([[1.0, -1.0]]))
    cert = power_law_certificate(1.0, 0.5, 1.0, U=np.array([[-1.0, 1.0]]))
    assert cert.g(0.25) == 0.5


@settings(max_examples=50, deadline=None)
@given(coeff=st.floats(0.1, 10.0), expo=st.floats(0.1, 2.0),
       rho=st.floats(0.01, 10.0))
def test_power_law_certificate_always_valid(coeff, expo, rho):
    cert = power_law_certificate(coeff, expo, rho)
    assert cert.psi(0.0) == 0.0
    ts = np.geomspace(rho * 1e-6, rho * 0.99, 20)
    assert np.all(np.diff(cert.psi(ts)) > 0)
    assert np.all(cert.psi.derivative(ts) > 0)
