import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klflow.fields import (CirclePrimitive, DomainSpec, FieldError,
                           PointPrimitive, SegmentPrimitive, compose_with_psi,
                           field_from_expression, get_zoo_entry, iter_zoo,
                           load_field_file, make_distance_power_field,
                           make_morse_field, make_transnormal_field, zoo_names)
from klflow.profiles import power_law_profile


def test_domain_spec_validation():
    with pytest.raises(FieldError):
        DomainSpec(box=np.array([[1.0, -1.0]]))
    with pytest.raises(FieldError):
        DomainSpec(box=np.array([0.0, 1.0]))


def test_domain_boundary_distance_and_contains():
    dom = DomainSpec(box=np.array([[-2.0, 2.0], [-1.0, 1.0]]))
    assert dom.boundary_distance(np.array([0.0, 0.0])) == 1.0
    assert dom.boundary_distance(np.array([1.5, 0.0])) == 0.5
    assert dom.contains(np.array([0.0, 0.0]))
    assert not dom.contains(np.array([3.0, 0.0]))


def test_quadratic_values_and_gradient():
    field = get_zoo_entry("quadratic").field
    x = np.array([0.3, -0.4])
    assert field.f(x) == pytest.approx(0.25, abs=1e-15)
    assert np.allclose(field.grad(x), 2 * x)
    # |grad f| = 2 sqrt(f)
    pts = np.random.default_rng(1).uniform(-1, 1, (50, 2))
    assert np.allclose(field.grad_norm(pts), 2 * np.sqrt(field.f(pts)), atol=1e-12)


def test_distance_field_unit_gradient():
    field = get_zoo_entry("distance").field
    pts = np.random.default_rng(2).uniform(-1, 1, (50, 2))
    pts = pts[np.linalg.norm(pts, axis=1) > 1e-3]
    assert np.allclose(field.grad_norm(pts), 1.0, atol=1e-12)


def test_gradient_extended_by_zero_on_locus():
    field = get_zoo_entry("quadratic").field
    assert np.allclose(field.grad(np.zeros(2)), 0.0)
    disk = get_zoo_entry("disk").field
    assert np.allclose(disk.grad(np.array([0.5, 0.0])), 0.0)  # interior of Z


def test_segment_distance_field():
    field = make_distance_power_field(
        2.0, SegmentPrimitive(a=np.array([-1.0, 0.0]), b=np.array([1.0, 0.0])))
    assert field.f(np.array([0.0, 0.5])) == pytest.approx(0.25)
    assert field.f(np.array([2.0, 0.0])) == pytest.approx(1.0)
    field.check_gradient(np.random.default_rng(0))


def test_circle_field_two_sided():
    field = get_zoo_entry("circle").field
    assert field.f(np.array([0.5, 0.0])) == pytest.approx(0.25)
    assert field.f(np.array([2.0, 0.0])) == pytest.approx(1.0)
    g = field.grad(np.array([0.5, 0.0]))
    assert g[0] < 0  # inside the circle, descending flow pushes outward


def test_invalid_power_rejected():
    with pytest.raises(FieldError):
        make_distance_power_field(0.0, PointPrimitive(center=np.zeros(2)))


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.5, 4.0), x=st.floats(-1.9, 1.9), y=st.floats(-1.9, 1.9))
def test_distance_power_field_values(p, x, y):
    field = make_distance_power_field(p, PointPrimitive(center=np.zeros(2)))
    pt = np.array([x, y])
    assert field.f(pt) == pytest.approx(np.linalg.norm(pt) ** p, rel=1e-12, abs=1e-12)


def test_morse_field_euclidean():
    field = make_morse_field(2, 2)
    assert field.f(np.array([1.0, 1.0])) == pytest.approx(1.0)
    assert np.allclose(field.grad(np.array([1.0, 1.0])), [1.0, 1.0])
    # certificate: psi(t) = sqrt(2 t), since |grad| = sqrt(2 f)
    assert field.certificate.psi(0.5) == pytest.approx(1.0, rel=1e-12)


def test_morse_field_saddle_positive_part():
    field = make_morse_field(1, 2)
    assert field.f(np.array([0.5, 1.0])) == 0.0
    assert np.allclose(field.grad(np.array([0.5, 1.0])), 0.0)
    assert field.f(np.array([1.0, 0.5])) == pytest.approx(0.375)


def test_morse_field_with_metric_certificate():
    metric = lambda x: np.diag([4.0, 4.0])  # grad shrinks by 4, C ~ 1/16
    field = make_morse_field(2, 2, metric=metric)
    g = field.grad(np.array([1.0, 0.0]))
    assert np.allclose(g, [0.25, 0.0])
    rep = field.certificate
    # psi'(f) |grad f| >= 1 must hold: |grad| = |x|/4 = sqrt(2 f)/4
    ts = np.geomspace(1e-6, 0.9, 50)
    margins = np.asarray(rep.psi.derivative(ts)) * np.sqrt(2 * ts) / 4.0
    assert np.all(margins >= 1.0 - 1e-9)


def test_morse_field_rejects_bad_metric():
    with pytest.raises(FieldError):
        make_morse_field(2, 2, metric=lambda x: np.diag([1.0, -1.0]),
                         grid_per_axis=3)


def test_transnormal_field_exact_square():
    field = make_transnormal_field(lambda t: 4.0 * t)
    pts = np.random.default_rng(3).uniform(-1.4, 1.4, (100, 2))
    r2 = (pts ** 2).sum(axis=1)
    assert np.allclose(field.f(pts), r2, rtol=1e-9)
    assert np.allclose(field.grad_norm(pts) ** 2, 4 * field.f(pts), rtol=1e-8)


def test_transnormal_field_rejects_nonintegrable_b():
    with pytest.raises(FieldError):
        make_transnormal_field(lambda t: t ** 2)  # int b^-1/2 diverges at 0


def test_transnormal_certificate_is_radial_reach():
    field = make_transnormal_field(lambda t: 4.0 * t)
    # psi(t) = r(t) = sqrt(t) for b = 4t
    assert field.certificate.psi(0.49) == pytest.approx(0.7, rel=1e-6)


def test_field_from_expression_matches_symbolic_gradient():
    field = field_from_expression("x1^2 + 3*x2^4", 2)
    x = np.array([0.5, -0.5])
    assert field.f(x) == pytest.approx(0.25 + 3 * 0.0625)
    assert np.allclose(field.grad(x), [1.0, 4 * 3 * (-0.5) ** 3])
    field.check_gradient(np.random.default_rng(0))


def test_field_from_expression_with_metric():
    field = field_from_expression("x1^2 + x2^2", 2,
                                  metric_exprs=[["2", "0"], ["0", "2"]])
    assert np.allclose(field.grad(np.array([1.0, 1.0])), [1.0, 1.0])
    field.check_gradient(np.random.default_rng(0))


def test_load_field_file(tmp_path):
    path = tmp_path / "field.toml"
    path.write_text(
        'name = "parab"\n'
        "dimension = 2\n"
        'f = "x1^2 + x2^2"\n'
        "box = [[-1.0, 1.0], [-1.0, 1.0]]\n"
        "rho = 0.5\n"
        "[psi]\ncoefficient = 1.0\nexponent = 0.5\n")
    field = load_field_file(path)
    assert field.name == "parab"
    assert field.f(np.array([0.5, 0.5])) == pytest.approx(0.5)
    assert field.certificate.rho == 0.5


def test_compose_with_psi_unitizes_gradient():
    field = get_zoo_entry("quadratic").field
    composed = compose_with_psi(field, power_law_profile(1.0, 0.5, 1.0))
    pts = np.random.default_rng(4).uniform(-1, 1, (30, 2))
    pts = pts[np.linalg.norm(pts, axis=1) > 1e-2]
    assert np.allclose(composed.grad_norm(pts), 1.0, atol=1e-10)


def test_strip_boundary_distance_excludes_zero_locus():
    entry = get_zoo_entry("strip")
    dom = entry.field.domain
    # the bottom edge y=0 is the zero locus, not the frontier
    assert dom.boundary_distance(np.array([0.0, 0.1])) == pytest.approx(1.9)
    assert dom.boundary_distance(np.array([1.5, 1.0])) == pytest.approx(0.5)


def test_zoo_lookup_and_cache():
    names = zoo_names()
    assert "quadratic" in names and "strip" in names
    assert get_zoo_entry("quadratic") is get_zoo_entry("quadratic")
    with pytest.raises(FieldError):
        get_zoo_entry("nope")


def test_zoo_gradients_all_consistent():
    rng = np.random.default_rng(5)
    for entry in iter_zoo():
        entry.field.check_gradient(rng, n_points=100)
        assert entry.known_certificate is not None
