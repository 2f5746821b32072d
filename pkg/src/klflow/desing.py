"""Desingularization profiles, nondegeneracy verdicts, exponent fitting.

The central objects are certificates ``(rho, U, psi)`` and the per-level
``alpha``/``beta`` curves whose integrability near zero classifies boundary
points of the zero locus as good, bad or ugly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import linprog

from .fields import ScalarField
from .levelset import CompactBox, LevelSetProfile, build_profile
from .profiles import KLCertificate, Profile1D, power_law_certificate

# dead zone around tail exponent 1: verdicts inside it are inconclusive
EXPONENT_MARGIN = 0.05
GRADIENT_FLOOR = 1e-12
F_STOP = 1e-10


class DesingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# certificate verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationReport:
    n_checked: int
    worst_margin: float
    failing_points: np.ndarray
    passed: bool


def verify_certificate(field: ScalarField, cert: KLCertificate, samples: int = 1000,
                       rng: Optional[np.random.Generator] = None,
                       f_stop: float = F_STOP, tol: float = 1e-6) -> VerificationReport:
    """Check ``psi'(f) |grad f| >= 1`` at random points of U with f in (f_stop, rho)."""
    rng = rng or np.random.default_rng(0)
    box = cert.U if cert.U is not None else field.domain.box
    lo, hi = np.asarray(box)[:, 0], np.asarray(box)[:, 1]
    collected = []
    tries = 0
    while sum(len(c) for c in collected) < samples and tries < 200:
        tries += 1
        pts = lo + (hi - lo) * rng.random((samples, len(lo)))
        fv = np.asarray(field.f(pts))
        keep = (fv > f_stop) & (fv < cert.rho)
        if np.any(keep):
            collected.append(pts[keep])
    if not collected:
        return VerificationReport(0, math.nan, np.empty((0, len(lo))), False)
    pts = np.vstack(collected)[:samples]
    fv = np.asarray(field.f(pts))
    margins = np.asarray(cert.psi.derivative(fv)) * np.asarray(field.grad_norm(pts)) - 1.0
    failing = pts[margins < -tol]
    return VerificationReport(n_checked=len(pts), worst_margin=float(margins.min()),
                              failing_points=failing, passed=len(failing) == 0)


# ---------------------------------------------------------------------------
# integrability of 1D profiles near zero
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegrabilityVerdict:
    verdict: str               # integrable | divergent | inconclusive
    integral: float            # estimate of int_0^rho u (inf when divergent)
    tail_exponent: float       # q in u ~ c t^-q near zero
    tail_coefficient: float = math.nan


def integrability_verdict(t_grid, u_values, rho: float,
                          margin: float = EXPONENT_MARGIN) -> IntegrabilityVerdict:
    """Classify ``int_0^rho u`` by a log-log tail fit on a geometric grid.

    A clear tail exponent away from 1 decides directly. Inside the dead zone
    around 1 the verdict falls back to the refinement behavior of the partial
    trapezoid integrals: increments that fail to shrink toward 0 mean the
    integral diverges; anything else in the zone stays inconclusive.
    """
    t = np.asarray(t_grid, dtype=float)
    u = np.asarray(u_values, dtype=float)
    order = np.argsort(t)
    t, u = t[order], u[order]
    keep = np.isfinite(u) & (u > 0) & (t > 0)
    t, u = t[keep], u[keep]
    if len(t) < 8:
        return IntegrabilityVerdict("inconclusive", math.nan, math.nan)

    n_tail = max(8, len(t) // 3)
    tt, uu = t[:n_tail], u[:n_tail]
    slope, logc = np.polyfit(np.log(tt), np.log(uu), 1)
    q = -float(slope)
    c = float(math.exp(logc))

    body = float(np.trapezoid(u, t))
    if t[-1] < rho:
        body += float(u[-1]) * (rho - t[-1])

    # trapezoid increments toward 0; their geometric decay rate decides the
    # borderline cases (rate >= 1 means non-summable contributions)
    increments = 0.5 * (u[:-1] + u[1:]) * np.diff(t)
    head = increments[: max(4, n_tail - 1)]
    ratios = head[:-1] / np.maximum(head[1:], 1e-300)
    decay = float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300)))))

    if q >= 1.0 + margin:
        return IntegrabilityVerdict("divergent", math.inf, q, c)
    if q <= 1.0 - margin:
        if decay < 1.0:
            tail = c * t[0] ** (1.0 - q) / (1.0 - q)
            return IntegrabilityVerdict("integrable", body + tail, q, c)
        return IntegrabilityVerdict("inconclusive", body, q, c)
    if decay >= 1.0 - 1e-3:
        return IntegrabilityVerdict("divergent", math.inf, q, c)
    return IntegrabilityVerdict("inconclusive", body, q, c)


# ---------------------------------------------------------------------------
# exponent fitting (lower envelope of the gradient cloud)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    theta: float
    C: float
    r_squared: float
    certificate: Optional[KLCertificate]


def _quantile_line(x: np.ndarray, y: np.ndarray, q: float) -> tuple[float, float]:
    """Fit y ~ a + b x at quantile q by linear programming (pinball loss)."""
    m = len(x)
    # variables: a+, a-, b+, b-, u (m), v (m); rows are the residual splits
    c = np.concatenate([[0, 0, 0, 0], np.full(m, q), np.full(m, 1 - q)])
    rows = np.concatenate([np.arange(m)] * 6)
    cols = np.concatenate([np.zeros(m), np.ones(m), np.full(m, 2), np.full(m, 3),
                           4 + np.arange(m), 4 + m + np.arange(m)]).astype(int)
    vals = np.concatenate([np.ones(m), -np.ones(m), x, -x, np.ones(m), -np.ones(m)])
    A_eq = sparse.csc_matrix((vals, (rows, cols)), shape=(m, 4 + 2 * m))
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=[(0, None)] * (4 + 2 * m),
                  method="highs")
    if not res.success:
        raise DesingError(f"quantile regression failed: {res.message}")
    a = res.x[0] - res.x[1]
    b = res.x[2] - res.x[3]
    return float(a), float(b)


def fit_lojasiewicz_exponent(field: ScalarField, K: CompactBox, rho: float,
                             n_points: int = 1500, quantile: float = 0.01,
                             rng: Optional[np.random.Generator] = None,
                             f_stop: float = F_STOP) -> ExponentFit:
    """Supporting-line fit of the (log f, log |grad f|) cloud.

    The slope of the lower envelope is the power in the gradient inequality;
    a power-law certificate is attached whenever the power is below one.
    """
    rng = rng or np.random.default_rng(0)
    lo, hi = K.lo, K.hi
    xs, ys = [], []
    tries = 0
    while sum(map(len, xs)) < n_points and tries < 400:
        tries += 1
        pts = lo + (hi - lo) * rng.random((n_points, K.dimension))
        fv = np.asarray(field.f(pts))
        keep = (fv > f_stop) & (fv < rho)
        if not np.any(keep):
            continue
        gn = np.asarray(field.grad_norm(pts[keep]))
        ok = gn > GRADIENT_FLOOR
        xs.append(np.log(fv[keep][ok]))
        ys.append(np.log(gn[ok]))
    if not xs:
        raise DesingError("no sample points with f in (f_stop, rho) found in K")
    x = np.concatenate(xs)[:4 * n_points]
    y = np.concatenate(ys)[:4 * n_points]
    logC, theta = _quantile_line(x, y, quantile)
    C = float(math.exp(logC))
    resid = y - (logC + theta * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    cert = None
    if theta < 1.0:
        cert = power_law_certificate(1.0 / (C * (1.0 - theta)), 1.0 - theta, rho,
                                     U=K.bounds(), source="power_law_fit")
    return ExponentFit(theta=float(theta), C=C, r_squared=r2, certificate=cert)


# ---------------------------------------------------------------------------
# building psi from a gradient floor profile
# ---------------------------------------------------------------------------

def _as_callable(a) -> Callable:
    return a if callable(a) else (lambda t: float(a(t)))


def build_psi_from_a(a: Union[Profile1D, Callable], rho: float,
                     U: Optional[np.ndarray] = None,
                     grid_points: int = 161) -> KLCertificate:
    """Certificate with ``psi(t) = int_0^t 1/a``, for an integrable 1/a."""
    a_fn = a if callable(a) else a.__call__
    probe = rho * 2.0 ** (-np.arange(40, dtype=float))[::-1]
    inv = np.array([1.0 / float(a_fn(t)) for t in probe])
    if np.any(~np.isfinite(inv)) or np.any(inv <= 0):
        raise DesingError("a must be positive and finite on (0, rho]")
    verdict = integrability_verdict(probe, inv, rho)
    if verdict.verdict == "divergent":
        raise DesingError("int_0^rho 1/a diverges; no certificate exists")

    grid = np.geomspace(rho * 2.0 ** (-40), rho, grid_points)
    # tail below the grid from a local power-law fit of a
    t0, t1 = grid[0], grid[4]
    q = math.log(float(a_fn(t1)) / float(a_fn(t0))) / math.log(t1 / t0)
    cfit = float(a_fn(t0)) / t0 ** q
    if q >= 1.0:
        raise DesingError("a vanishes at least linearly at 0; int 1/a diverges")
    tail = grid[0] ** (1.0 - q) / (cfit * (1.0 - q))
    vals = np.empty_like(grid)
    vals[0] = tail
    for i in range(len(grid) - 1):
        vals[i + 1] = vals[i] + quad(lambda r: 1.0 / float(a_fn(r)),
                                     grid[i], grid[i + 1], limit=200)[0]
    full_grid = np.concatenate([[0.0], grid])
    full_vals = np.concatenate([[0.0], vals])
    interp = PchipInterpolator(full_grid, full_vals, extrapolate=True)
    psi = Profile1D(grid=full_grid, values=full_vals,
                    fn=lambda t: np.maximum(interp(t), 0.0),
                    dfn=lambda t: 1.0 / np.asarray(np.vectorize(a_fn)(t), dtype=float),
                    name="int 1/a")
    return KLCertificate(rho=rho, U=U, psi=psi, source="built_from_a")


# ---------------------------------------------------------------------------
# point classification (good / bad / ugly)
# ---------------------------------------------------------------------------

def trichotomy_verdict(levels, alpha, beta, rho: float):
    """Good/bad/ugly from the integrability of the alpha/beta profiles.

    Integrable alpha means a desingularization exists (good); divergent beta
    means even the most favorable trajectory bundle has infinite cost (ugly);
    divergent alpha with integrable beta is the mixed case (bad).
    """
    av = integrability_verdict(levels, alpha, rho)
    bv = integrability_verdict(levels, beta, rho)
    if av.verdict == "integrable":
        verdict = "good"
    elif bv.verdict == "divergent":
        verdict = "ugly"
    elif av.verdict == "divergent" and bv.verdict == "integrable":
        verdict = "bad"
    else:
        verdict = "inconclusive"
    return verdict, av, bv

@dataclass(frozen=True)
class PointClass:
    point: np.ndarray
    simple_nondegenerate: bool
    witness_margin: float          # min sampled |grad f| off the zero locus
    verdict: str                   # good | bad | ugly | inconclusive
    alpha_integral: float
    beta_integral: float
    alpha_verdict: IntegrabilityVerdict
    beta_verdict: IntegrabilityVerdict
    fitted_exponent: Optional[ExponentFit] = None


def classify_point(field: ScalarField, p, K: CompactBox, rho: float,
                   m: int = 20, budget: int = 400,
                   rng: Optional[np.random.Generator] = None,
                   profile: Optional[LevelSetProfile] = None,
                   fit_exponent: bool = True,
                   f_stop: float = F_STOP) -> PointClass:
    """Good/bad/ugly verdict for a boundary point of the zero locus.

    A precomputed profile may be injected, which keeps the trichotomy logic
    testable independently of the sampler.
    """
    rng = rng or np.random.default_rng(0)
    p = np.asarray(p, dtype=float)
    if float(field.f(p)) > f_stop:
        raise DesingError("classify_point expects a point at the zero locus")

    if profile is None:
        profile = build_profile(field, K, rho, m, budget, rng)

    # simple nondegeneracy scan over K off the zero locus
    pts = K.lo + 2 * K.halfwidth * rng.random((2000, K.dimension))
    fv = np.asarray(field.f(pts))
    off = fv > f_stop
    witness = float(np.min(np.asarray(field.grad_norm(pts[off])))) if np.any(off) else math.nan
    simple = bool(np.isfinite(witness) and witness > GRADIENT_FLOOR)

    fit = None
    if fit_exponent and simple:
        try:
            fit = fit_lojasiewicz_exponent(field, K, rho, rng=rng, f_stop=f_stop)
        except DesingError:
            fit = None

    if profile.unreliable:
        nanv = IntegrabilityVerdict("inconclusive", math.nan, math.nan)
        return PointClass(point=p, simple_nondegenerate=simple, witness_margin=witness,
                          verdict="inconclusive", alpha_integral=math.nan,
                          beta_integral=math.nan, alpha_verdict=nanv, beta_verdict=nanv,
                          fitted_exponent=fit)

    levels, alpha, beta = profile.nonempty()
    verdict, av, bv = trichotomy_verdict(levels, alpha, beta, rho)
    return PointClass(point=p, simple_nondegenerate=simple, witness_margin=witness,
                      verdict=verdict, alpha_integral=av.integral,
                      beta_integral=bv.integral, alpha_verdict=av, beta_verdict=bv,
                      fitted_exponent=fit)


# ---------------------------------------------------------------------------
# no-curve diagnostic for the opposite gradient inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoCurveReport:
    lemma_applicable: bool     # int 1/b diverges at 0
    speed_ok: bool             # curve is 1-Lipschitz on its samples
    gradient_bound_ok: bool    # |grad f| <= b(f) along the curve
    bound_violated: bool       # B(f(curve(t))) >= t - t0 fails somewhere
    f_approaches_zero: bool
    worst_defect: float
    message: str


def no_curve_diagnostic(field: Optional[ScalarField], b: Union[Profile1D, Callable],
                        curve, rho: float, f_tol: float = 1e-6) -> NoCurveReport:
    """Check the obstruction chain for curves reaching the zero locus.

    ``curve`` is a trajectory-like object with ``s``, ``points`` and
    ``f_values``; when ``field`` is None the gradient-bound check is skipped
    (synthetic curves).
    """
    b_fn = b if callable(b) else b.__call__
    s = np.asarray(curve.s, dtype=float)
    pts = np.asarray(curve.points, dtype=float)
    fv = np.asarray(curve.f_values, dtype=float)

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    ds = np.diff(s)
    # absolute slack covers floating-point noise on very short segments
    slack = 1e-9 * max(1.0, float(np.max(np.abs(pts))))
    speed_ok = bool(np.all(seg <= (1.0 + 1e-6) * np.maximum(ds, 0.0) + slack))

    probe = rho * 2.0 ** (-np.arange(40, dtype=float))[::-1]
    invb = np.array([1.0 / float(b_fn(t)) for t in probe])
    lemma_applicable = integrability_verdict(probe, invb, rho).verdict == "divergent"

    gradient_bound_ok = True
    if field is not None:
        inside = fv > 0
        gn = np.asarray(field.grad_norm(pts[inside]))
        bound = np.array([float(b_fn(t)) for t in fv[inside]])
        gradient_bound_ok = bool(np.all(gn <= bound * (1.0 + 1e-8)))

    # B(u) = int_{u0}^u 1/b; a 1-Lipschitz curve with |grad f| <= b(f)
    # satisfies (B o f)' >= -1, hence B(f(t)) + (t - t0) >= 0 throughout
    pos = fv > 0
    t0 = float(s[pos][0])
    u0 = float(fv[pos][0])

    def B(u):
        if u <= 0:
            return -math.inf
        sign = 1.0 if u >= u0 else -1.0
        val = quad(lambda r: 1.0 / float(b_fn(r)), min(u0, u), max(u0, u), limit=200)[0]
        return sign * val

    defects = np.array([B(float(u)) + (float(t) - t0) for t, u in zip(s[pos], fv[pos])])
    worst = float(defects.min()) if len(defects) else math.nan
    bound_violated = bool(worst < -1e-9)
    f_zero = bool(fv[-1] <= f_tol)

    if not lemma_applicable:
        msg = "int 1/b converges: obstruction does not apply"
    elif not (speed_ok and gradient_bound_ok):
        msg = "lemma hypotheses not met"
    elif bound_violated:
        msg = "contradiction: curve reaches the zero locus despite divergent int 1/b"
    else:
        msg = "no contradiction detected"
    return NoCurveReport(lemma_applicable=lemma_applicable, speed_ok=speed_ok,
                         gradient_bound_ok=gradient_bound_ok,
                         bound_violated=bound_violated, f_approaches_zero=f_zero,
                         worst_defect=worst, message=msg)



# ---------------------------------------------------------------------------
# one-dimensional oracle
# ---------------------------------------------------------------------------

def oracle_1d(f1d: Callable, eps: float, n_grid: int = 400) -> Profile1D:
    """Reciprocal-gradient profile of a monotone 1D field via its inverse.

    For strictly increasing ``f1d`` with ``f1d(0)=0``, the profile is the
    derivative of the inverse; its integral over ``(0, t)`` is the inverse
    itself, which certifies integrability.
    """
    xs = np.concatenate([[0.0], np.geomspace(eps * 1e-12, eps, n_grid)])
    ys = np.array([float(f1d(x)) for x in xs])
    if np.any(np.diff(ys) <= 0):
        raise DesingError("f1d must be strictly increasing on [0, eps]")
    inv = PchipInterpolator(ys, xs, extrapolate=True)
    dinv = inv.derivative()
    t_grid = np.geomspace(ys[1], ys[-1], 200)
    return Profile1D(grid=t_grid, values=np.asarray(dinv(t_grid), dtype=float),
                     fn=lambda t: np.asarray(dinv(t), dtype=float),
                     name="inverse derivative")
