"""Scalar fields with analytic gradients over boxed domains.

All evaluators are vectorized: points have shape ``(n,)`` or ``(m, n)``,
values come back as scalars or ``(m,)`` arrays, gradients as ``(n,)`` or
``(m, n)``. Evaluation is pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
import sympy as sp
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .profiles import KLCertificate, Profile1D, power_law_certificate


class FieldError(ValueError):
    pass


def _atleast_2d(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return (x[None, :] if single else x), single


@dataclass(frozen=True)
class DomainSpec:
    """Boxed domain with a distance to its frontier inside the completion.

    ``boundary_distance`` measures how far a point is from leaving the
    domain; by default that is the distance to the box faces. The zero
    locus is *not* part of the frontier.
    """

    box: np.ndarray  # (n, 2) lo/hi per axis
    boundary_distance: Optional[Callable] = None
    zero_locus_distance: Optional[Callable] = None

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2:
            raise FieldError("box must have shape (n, 2)")
        if np.any(box[:, 0] >= box[:, 1]):
            raise FieldError("box must satisfy lo < hi on every axis")
        object.__setattr__(self, "box", box)
        if self.boundary_distance is None:
            object.__setattr__(self, "boundary_distance", self._box_frontier_distance)

    @property
    def dimension(self) -> int:
        return self.box.shape[0]

    @property
    def scale(self) -> float:
        return float(np.max(self.box[:, 1] - self.box[:, 0]))

    def _box_frontier_distance(self, x):
        pts, single = _atleast_2d(x)
        lo, hi = self.box[:, 0], self.box[:, 1]
        d = np.minimum(pts - lo, hi - pts).min(axis=1)
        return float(d[0]) if single else d

    def contains(self, x, margin: float = 0.0):
        pts, single = _atleast_2d(x)
        lo, hi = self.box[:, 0], self.box[:, 1]
        ok = np.all((pts >= lo + margin) & (pts <= hi - margin), axis=1)
        return bool(ok[0]) if single else ok

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        lo, hi = self.box[:, 0], self.box[:, 1]
        return lo + (hi - lo) * rng.random((m, self.dimension))


@dataclass(frozen=True)
class ScalarField:
    """Nonnegative scalar field with an analytic (Riemannian) gradient.

    ``grad`` already incorporates the inverse metric; gradient norms used
    throughout the package are Euclidean norms of this vector, matching the
    Morse-with-metric construction.
    """

    domain: DomainSpec
    f: Callable
    grad: Callable
    metric: Optional[Callable] = None
    hess: Optional[Callable] = None
    certificate: Optional[KLCertificate] = None
    name: str = ""

    def grad_norm(self, x):
        g = np.asarray(self.grad(x), dtype=float)
        return np.linalg.norm(g, axis=-1)

    def check_gradient(self, rng: np.random.Generator, n_points: int = 200,
                       rtol: float = 1e-4, f_floor: float = 1e-4) -> float:
        """Worst relative deviation of grad vs central finite differences."""
        h = 1e-6 * self.domain.scale
        worst = 0.0
        tried = 0
        while tried < 50 * n_points:
            pts = self.domain.sample(rng, n_points)
            fv = np.asarray(self.f(pts))
            keep = (fv > f_floor) & self.domain.contains(pts, margin=2 * h)
            pts = pts[keep]
            tried += n_points
            if len(pts) == 0:
                continue
            g = np.asarray(self.grad(pts))
            fd = np.empty_like(g)
            for i in range(self.domain.dimension):
                e = np.zeros(self.domain.dimension)
                e[i] = h
                fd[:, i] = (np.asarray(self.f(pts + e)) - np.asarray(self.f(pts - e))) / (2 * h)
            if self.metric is not None:
                # analytic grad is metric^{-1} times the euclidean differential
                for j, p in enumerate(pts):
                    fd[j] = np.linalg.solve(np.asarray(self.metric(p)), fd[j])
            scale = np.maximum(np.linalg.norm(g, axis=1), 1e-12)
            worst = max(worst, float(np.max(np.linalg.norm(g - fd, axis=1) / scale)))
            if len(pts) >= n_points // 2:
                break
        if worst > rtol:
            raise FieldError(f"gradient check failed: worst relative error {worst:.3e}")
        return worst


@dataclass(frozen=True)
class FieldZooEntry:
    name: str
    field: ScalarField
    known_certificate: Optional[KLCertificate] = None
    known_exponent: Optional[float] = None
    notes: str = ""


# ---------------------------------------------------------------------------
# geometric primitives for distance fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointPrimitive:
    center: np.ndarray


@dataclass(frozen=True)
class CirclePrimitive:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class SegmentPrimitive:
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class DiskPrimitive:
    center: np.ndarray
    radius: float


def _dist_point(pts, c):
    v = pts - c
    d = np.linalg.norm(v, axis=1)
    u = np.zeros_like(v)
    nz = d > 0
    u[nz] = v[nz] / d[nz, None]
    return d, u


def _dist_circle(pts, c, R):
    v = pts - c
    r = np.linalg.norm(v, axis=1)
    d = np.abs(r - R)
    u = np.zeros_like(v)
    nz = r > 0
    u[nz] = np.sign(r - R)[nz, None] * v[nz] / r[nz, None]
    # at the exact center the nearest-point direction is not unique; any
    # unit vector realizes the distance
    u[~nz, 0] = -1.0
    return d, u


def _dist_segment(pts, a, b):
    ab = b - a
    L2 = float(ab @ ab)
    t = np.clip((pts - a) @ ab / L2, 0.0, 1.0)
    proj = a + t[:, None] * ab
    v = pts - proj
    d = np.linalg.norm(v, axis=1)
    u = np.zeros_like(v)
    nz = d > 0
    u[nz] = v[nz] / d[nz, None]
    return d, u


def _dist_disk(pts, c, R):
    v = pts - c
    r = np.linalg.norm(v, axis=1)
    d = np.maximum(r - R, 0.0)
    u = np.zeros_like(v)
    nz = d > 0
    u[nz] = v[nz] / r[nz, None]
    return d, u


def make_distance_power_field(p: float, primitive, box=None,
                              rho: float = 1.0) -> ScalarField:
    """Field ``x -> d(x, Z)**p`` for a geometric primitive ``Z``."""
    if p <= 0:
        raise FieldError("p must be positive")
    if isinstance(primitive, CirclePrimitive) and primitive.radius == 0:
        primitive = PointPrimitive(center=primitive.center)  # degenerate, relabel
    if isinstance(primitive, DiskPrimitive) and primitive.radius == 0:
        primitive = PointPrimitive(center=primitive.center)

    if isinstance(primitive, PointPrimitive):
        c = np.asarray(primitive.center, dtype=float)
        n = len(c)
        dist = lambda pts: _dist_point(pts, c)
        label = "point"
    elif isinstance(primitive, CirclePrimitive):
        c = np.asarray(primitive.center, dtype=float)
        n = len(c)
        R = float(primitive.radius)
        dist = lambda pts: _dist_circle(pts, c, R)
        label = "circle"
    elif isinstance(primitive, SegmentPrimitive):
        a = np.asarray(primitive.a, dtype=float)
        b = np.asarray(primitive.b, dtype=float)
        n = len(a)
        dist = lambda pts: _dist_segment(pts, a, b)
        label = "segment"
    elif isinstance(primitive, DiskPrimitive):
        c = np.asarray(primitive.center, dtype=float)
        n = len(c)
        R = float(primitive.radius)
        dist = lambda pts: _dist_disk(pts, c, R)
        label = "disk"
    else:
        raise FieldError(f"unsupported primitive {primitive!r}")

    if box is None:
        box = np.array([[-2.0, 2.0]] * n)
    domain = DomainSpec(box=box)

    pexp = float(p)

    def f(x):
        pts, single = _atleast_2d(x)
        d, _ = dist(pts)
        out = d ** pexp
        return float(out[0]) if single else out

    def grad(x):
        pts, single = _atleast_2d(x)
        d, u = dist(pts)
        mag = np.zeros_like(d)
        nz = d > 0
        mag[nz] = pexp * d[nz] ** (pexp - 1.0)
        out = mag[:, None] * u  # extended by zero on the zero locus
        return out[0] if single else out

    cert = power_law_certificate(1.0, 1.0 / pexp, rho, U=domain.box)
    notes = "C1 only away from Z" if pexp < 2 else ""
    return ScalarField(domain=domain, f=f, grad=grad, certificate=cert,
                       name=f"distance_{label}^p{pexp:g}" + (f" ({notes})" if notes else ""))


def make_morse_field(k: int, n: int, metric: Optional[Callable] = None,
                     box=None, rho: float = 1.0,
                     grid_per_axis: int = 9) -> ScalarField:
    """Positive part of the Morse quadratic with signature ``(k, n-k)``.

    The spectral floor ``C`` of ``G(x) = (g^{-1}J)^T (g^{-1}J)`` is estimated
    on a dense grid over the box (shrunk by 0.99) and sets the certificate
    ``psi(t) = sqrt(2 t / C)``.
    """
    if not 0 <= k <= n:
        raise FieldError("signature must satisfy 0 <= k <= n")
    if box is None:
        box = np.array([[-2.0, 2.0]] * n)
    domain = DomainSpec(box=box)
    J = np.diag([1.0] * k + [-1.0] * (n - k))

    def f(x):
        pts, single = _atleast_2d(x)
        q = 0.5 * (pts[:, :k] ** 2).sum(axis=1) - 0.5 * (pts[:, k:] ** 2).sum(axis=1)
        out = np.maximum(q, 0.0)
        return float(out[0]) if single else out

    if metric is None:
        def grad(x):
            pts, single = _atleast_2d(x)
            q = 0.5 * (pts[:, :k] ** 2).sum(axis=1) - 0.5 * (pts[:, k:] ** 2).sum(axis=1)
            g = pts @ J
            g[q <= 0] = 0.0
            return g[0] if single else g
        C = 1.0
    else:
        def grad(x):
            pts, single = _atleast_2d(x)
            q = 0.5 * (pts[:, :k] ** 2).sum(axis=1) - 0.5 * (pts[:, k:] ** 2).sum(axis=1)
            out = np.zeros_like(pts)
            for i, pt in enumerate(pts):
                if q[i] > 0:
                    out[i] = np.linalg.solve(np.asarray(metric(pt)), J @ pt)
            return out[0] if single else out

        axes = [np.linspace(0.99 * lo, 0.99 * hi, grid_per_axis)
                for lo, hi in domain.box]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        C = math.inf
        for pt in mesh:
            g = np.asarray(metric(pt), dtype=float)
            if np.any(np.linalg.eigvalsh(g) <= 0):
                raise FieldError(f"metric not positive-definite at {pt}")
            A = np.linalg.solve(g, J)
            G = A.T @ A
            C = min(C, float(np.linalg.eigvalsh(G)[0]))
        C *= 0.99

    cert = power_law_certificate(math.sqrt(2.0 / C), 0.5, rho, U=domain.box)
    return ScalarField(domain=domain, f=f, grad=grad, metric=metric,
                       certificate=cert, name=f"morse_{k}_{n - k}")


def make_transnormal_field(b: Callable, box=None, n: int = 2,
                           rho: Optional[float] = None) -> ScalarField:
    """Radial field satisfying ``|grad f|^2 = b(f)`` exactly.

    The radial value profile ``F`` with ``F' = sqrt(b(F))``, ``F(0) = 0`` is
    obtained from the inverse relation ``r(F) = int_0^F b(t)**-0.5 dt`` on a
    graded grid, avoiding the nonuniqueness of the direct initial value
    problem at zero.
    """
    if box is None:
        box = np.array([[-2.0, 2.0]] * n)
    domain = DomainSpec(box=box)
    r_max = float(np.linalg.norm(np.max(np.abs(domain.box), axis=1)))

    def binv_sqrt(t):
        return 1.0 / math.sqrt(b(t))

    # grow F_max until the radial reach covers the box diagonal
    F_lo, F_max = 1e-14, 1.0
    for _ in range(60):
        probe = np.geomspace(F_lo, F_max, 48)
        vals = np.array([b(t) for t in probe])
        if np.any(vals <= 0):
            bad = probe[vals <= 0][0]
            raise FieldError(f"b must be positive on (0, t_max]; b({bad:g}) <= 0")
        r_here = sum(quad(binv_sqrt, probe[i], probe[i + 1], limit=100)[0]
                     for i in range(len(probe) - 1))
        if r_here >= r_max:
            break
        F_max *= 2.0
    else:
        raise FieldError("could not cover the box radially; is int b^-1/2 finite?")

    F_grid = np.geomspace(F_lo, F_max, 400)
    # tail below F_lo from a local power-law fit b ~ c t^q
    q_fit = math.log(b(F_grid[4]) / b(F_grid[0])) / math.log(F_grid[4] / F_grid[0])
    c_fit = b(F_grid[0]) / F_grid[0] ** q_fit
    if q_fit / 2.0 >= 1.0:
        raise FieldError("b vanishes too fast at 0; radial profile undefined")
    r0 = F_lo ** (1.0 - q_fit / 2.0) / (math.sqrt(c_fit) * (1.0 - q_fit / 2.0))
    r_vals = np.empty_like(F_grid)
    r_vals[0] = r0
    for i in range(len(F_grid) - 1):
        r_vals[i + 1] = r_vals[i] + quad(binv_sqrt, F_grid[i], F_grid[i + 1], limit=100)[0]

    # log-log interpolation of the radial value profile: exact for power-law
    # b, and the gradient below is the exact derivative of the evaluator, so
    # the flow integrator sees a mutually consistent (f, grad) pair
    log_interp = PchipInterpolator(np.log(r_vals), np.log(F_grid), extrapolate=True)
    dlog_interp = log_interp.derivative()

    def _F_and_slope(r):
        r = np.asarray(r, dtype=float)
        F = np.zeros_like(r)
        slope = np.zeros_like(r)
        nz = r > 0
        lr = np.log(r[nz])
        F[nz] = np.exp(log_interp(lr))
        slope[nz] = dlog_interp(lr)
        return F, slope

    def f(x):
        pts, single = _atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        out, _ = _F_and_slope(r)
        return float(out[0]) if single else out

    def grad(x):
        pts, single = _atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        F, slope = _F_and_slope(r)
        out = np.zeros_like(pts)
        nz = r > 0
        # dF/dr = F * dlogF/dlogr / r
        out[nz] = (F[nz] * slope[nz] / r[nz] ** 2)[:, None] * pts[nz]
        return out[0] if single else out

    if rho is None:
        rho = float(_F_and_slope(np.array([0.45 * domain.scale]))[0][0])
    psi_grid = np.concatenate([[0.0], np.geomspace(F_lo, rho, 200)])
    r_interp = PchipInterpolator(np.concatenate([[0.0], F_grid]),
                                 np.concatenate([[0.0], r_vals]), extrapolate=True)
    psi = Profile1D(grid=psi_grid, values=np.maximum(r_interp(psi_grid), 0.0),
                    fn=lambda t: np.maximum(r_interp(t), 0.0),
                    dfn=lambda t: 1.0 / np.sqrt(np.vectorize(b)(t)),
                    name="radial reach")
    cert = KLCertificate(rho=rho, U=domain.box, psi=psi, source="user")
    return ScalarField(domain=domain, f=f, grad=grad, certificate=cert,
                       name="transnormal")


def compose_with_psi(field: ScalarField, psi: Profile1D) -> ScalarField:
    """Field ``psi(f)`` with gradient ``psi'(f) * grad f``."""
    if not psi.strictly_increasing:
        raise FieldError("psi must be strictly increasing on its grid")
    if psi.grid[0] <= 0 and abs(psi(0.0)) > 1e-12:
        raise FieldError("psi(0) must vanish")

    def f(x):
        return psi(field.f(x))

    def grad(x):
        fv = field.f(x)
        g = np.asarray(field.grad(x))
        w = np.asarray(psi.derivative(fv))
        return w[..., None] * g if g.ndim > 1 else float(w) * g

    return ScalarField(domain=field.domain, f=f, grad=grad, metric=field.metric,
                       name=f"{psi.name or 'psi'}∘{field.name or 'f'}")


# ---------------------------------------------------------------------------
# expression-defined fields
# ---------------------------------------------------------------------------

_LAMBDIFY_MODULES = [
    {"Max": np.maximum, "Min": np.minimum,
     "Heaviside": lambda z, *a: np.heaviside(z, 0.0)},
    "numpy",
]


def _parse_expression(expr: str, symbols):
    locals_map = {s.name: s for s in symbols}
    locals_map.update({"sqrt": sp.sqrt, "exp": sp.exp, "log": sp.log,
                       "abs": sp.Abs, "Abs": sp.Abs, "max": sp.Max,
                       "min": sp.Min, "pi": sp.pi})
    return sp.sympify(expr.replace("^", "**"), locals=locals_map)


def field_from_expression(expr: str, dimension: int, box=None,
                          metric_exprs=None, name: str = "expression",
                          psi_power=None, rho: float = 1.0) -> ScalarField:
    """Build a field from an infix expression in ``x1..xn``.

    Gradients come from symbolic differentiation, so they are exact up to
    floating point.
    """
    syms = sp.symbols(f"x1:{dimension + 1}")
    fx = _parse_expression(expr, syms)
    grads = [sp.diff(fx, s) for s in syms]
    f_num = sp.lambdify(syms, fx, modules=_LAMBDIFY_MODULES)
    g_num = [sp.lambdify(syms, g, modules=_LAMBDIFY_MODULES) for g in grads]

    if box is None:
        box = np.array([[-2.0, 2.0]] * dimension)
    domain = DomainSpec(box=box)

    metric_num = None
    if metric_exprs is not None:
        mats = [[_parse_expression(metric_exprs[i][j], syms)
                 for j in range(dimension)] for i in range(dimension)]
        m_num = [[sp.lambdify(syms, mats[i][j], modules=_LAMBDIFY_MODULES)
                  for j in range(dimension)] for i in range(dimension)]

        def metric_num(x):
            args = [float(v) for v in np.asarray(x)]
            return np.array([[m_num[i][j](*args) for j in range(dimension)]
                             for i in range(dimension)], dtype=float)

    def f(x):
        pts, single = _atleast_2d(x)
        out = np.broadcast_to(np.asarray(f_num(*(pts[:, i] for i in range(dimension))),
                                         dtype=float), (len(pts),)).copy()
        return float(out[0]) if single else out

    def grad_eucl(x):
        pts, single = _atleast_2d(x)
        cols = [np.broadcast_to(np.asarray(g(*(pts[:, i] for i in range(dimension))),
                                           dtype=float), (len(pts),))
                for g in g_num]
        out = np.stack(cols, axis=1)
        return out[0] if single else out

    if metric_num is None:
        grad = grad_eucl
    else:
        def grad(x):
            pts, single = _atleast_2d(x)
            ge = np.atleast_2d(grad_eucl(pts))
            out = np.array([np.linalg.solve(metric_num(pt), ge[i])
                            for i, pt in enumerate(pts)])
            return out[0] if single else out

    cert = None
    if psi_power is not None:
        coeff, expo = psi_power
        cert = power_law_certificate(coeff, expo, rho, U=domain.box)
    return ScalarField(domain=domain, f=f, grad=grad, metric=metric_num,
                       certificate=cert, name=name)


def load_field_file(path) -> ScalarField:
    """Read a field definition file (TOML) into a ScalarField."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    dim = int(cfg["dimension"])
    box = np.asarray(cfg["box"], dtype=float)
    psi_power = None
    if "psi" in cfg:
        psi_power = (float(cfg["psi"]["coefficient"]), float(cfg["psi"]["exponent"]))
    metric_exprs = cfg.get("metric")
    if metric_exprs is not None:
        metric_exprs = [[metric_exprs[f"g{i + 1}{j + 1}"] if isinstance(metric_exprs, dict)
                         else metric_exprs[i][j] for j in range(dim)] for i in range(dim)]
    return field_from_expression(cfg["f"], dim, box=box, metric_exprs=metric_exprs,
                                 name=cfg.get("name", "custom"),
                                 psi_power=psi_power, rho=float(cfg.get("rho", 1.0)))


# ---------------------------------------------------------------------------
# field zoo
# ---------------------------------------------------------------------------

def _strip_field() -> ScalarField:
    """f = y^2 on the strip x in (-2, 2), y in (0, 2); Z is the bottom edge."""
    box = np.array([[-2.0, 2.0], [0.0, 2.0]])

    def boundary_distance(x):
        pts, single = _atleast_2d(x)
        d = np.minimum(2.0 - np.abs(pts[:, 0]), 2.0 - pts[:, 1])
        return float(d[0]) if single else d

    domain = DomainSpec(box=box, boundary_distance=boundary_distance)

    def f(x):
        pts, single = _atleast_2d(x)
        out = pts[:, 1] ** 2
        return float(out[0]) if single else out

    def grad(x):
        pts, single = _atleast_2d(x)
        out = np.zeros_like(pts)
        out[:, 1] = 2.0 * pts[:, 1]
        return out[0] if single else out

    cert = power_law_certificate(1.0, 0.5, 1.0, U=box)
    return ScalarField(domain=domain, f=f, grad=grad, certificate=cert, name="strip")


def _zoo_factories():
    origin2 = PointPrimitive(center=np.zeros(2))
    return {
        "quadratic": lambda: FieldZooEntry(
            name="quadratic",
            field=make_distance_power_field(2.0, origin2),
            known_exponent=0.5,
            notes="squared distance to the origin; |grad| = 2 sqrt(f)"),
        "distance": lambda: FieldZooEntry(
            name="distance",
            field=make_distance_power_field(1.0, origin2),
            known_exponent=0.0,
            notes="unit-gradient distance to the origin; C1 only away from Z"),
        "quartic": lambda: FieldZooEntry(
            name="quartic",
            field=make_distance_power_field(4.0, origin2),
            known_exponent=0.75,
            notes="fourth power of the distance to the origin"),
        "disk": lambda: FieldZooEntry(
            name="disk",
            field=make_distance_power_field(
                2.0, DiskPrimitive(center=np.zeros(2), radius=1.0),
                box=np.array([[-3.0, 3.0], [-3.0, 3.0]])),
            known_exponent=0.5,
            notes="squared distance to the closed unit disk"),
        "circle": lambda: FieldZooEntry(
            name="circle",
            field=make_distance_power_field(
                2.0, CirclePrimitive(center=np.zeros(2), radius=1.0),
                box=np.array([[-3.0, 3.0], [-3.0, 3.0]])),
            known_exponent=0.5,
            notes="squared distance to the unit circle"),
        "bowl": lambda: FieldZooEntry(
            name="bowl",
            field=make_morse_field(2, 2),
            known_exponent=0.5,
            notes="definite quadratic f = |x|^2/2; |grad| = sqrt(2 f)"),
        "saddle": lambda: FieldZooEntry(
            name="saddle",
            field=make_morse_field(1, 2),
            known_exponent=0.5,
            notes="positive part of the saddle quadratic"),
        "strip": lambda: FieldZooEntry(
            name="strip",
            field=_strip_field(),
            known_exponent=0.5,
            notes="f = y^2 over a horizontal strip; Z is its bottom edge"),
        "transnormal_4t": lambda: FieldZooEntry(
            name="transnormal_4t",
            field=make_transnormal_field(lambda t: 4.0 * t),
            known_exponent=0.5,
            notes="radial field with |grad f|^2 = 4 f (so f = |x|^2)"),
    }


_ZOO_CACHE: dict = {}


def zoo_names():
    return sorted(_zoo_factories())

def get_zoo_entry(name: str) -> FieldZooEntry:
    if name not in _ZOO_CACHE:
        factories = _zoo_factories()
        if name not in factories:
            raise FieldError(f"unknown zoo field {name!r}; known: {', '.join(sorted(factories))}")
        entry = factories[name]()
        if entry.known_certificate is None and entry.field.certificate is not None:
            entry = FieldZooEntry(name=entry.name, field=entry.field,
                                  known_certificate=entry.field.certificate,
                                  known_exponent=entry.known_exponent,
                                  notes=entry.notes)
        _ZOO_CACHE[name] = entry
    return _ZOO_CACHE[name]


def iter_zoo():
    for name in zoo_names():
        yield get_zoo_entry(name)
