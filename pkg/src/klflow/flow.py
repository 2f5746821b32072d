"""Negative-gradient trajectories, retraction onto the zero locus, lengths.

Trajectories are integrated with an adaptive embedded Runge-Kutta pair under
one of three clocks:

* ``time``       x' = -grad f
* ``arclength``  x' = -grad f / |grad f|
* ``level``      x' = -grad f / |grad f|^2   (f decreases at unit rate)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from .fields import ScalarField
from .profiles import KLCertificate


class FlowError(RuntimeError):
    pass


class Clock(str, enum.Enum):
    TIME = "time"
    ARCLENGTH = "arclength"
    LEVEL = "level"


class Termination(str, enum.Enum):
    REACHED_ZERO_LOCUS = "reached_zero_locus"
    LEFT_DOMAIN = "left_domain"
    STEP_LIMIT = "step_limit"
    GRADIENT_VANISHED = "gradient_vanished"


# speed of the clock's vector field is |grad f| ** (1 - exponent)
_CLOCK_EXPONENT = {Clock.TIME: 0, Clock.ARCLENGTH: 1, Clock.LEVEL: 2}


@dataclass(frozen=True)
class IntegratorControls:
    f_stop: float = 1e-10
    gradient_floor: float = 1e-12  # relative to the box scale
    rtol: float = 1e-8
    atol: float = 1e-10
    level_rtol: float = 1e-10  # the level clock carries an exactness invariant
    level_atol: float = 1e-12
    t_max: float = 1e7
    n_samples: int = 2001
    method: str = "DOP853"


@dataclass(frozen=True)
class Trajectory:
    """Discretized maximal integral curve of the negative gradient."""

    clock: Clock
    s: np.ndarray           # parameter values, increasing
    points: np.ndarray      # (m, n)
    f_values: np.ndarray    # (m,)
    arclen: np.ndarray      # cumulative arc length, (m,)
    grad_norms: np.ndarray  # |grad f| at the samples, (m,)
    termination: Termination
    limit_point: Optional[np.ndarray] = None

    @property
    def x0(self) -> np.ndarray:
        return self.points[0]

    @property
    def length(self) -> float:
        return float(self.arclen[-1])

    def max_parameter_gap(self) -> float:
        return float(np.max(np.diff(self.s))) if len(self.s) > 1 else 0.0


@dataclass(frozen=True)
class SafeSetQuery:
    point: np.ndarray
    g_value: float
    boundary_margin: float
    in_V: bool


def _rhs_and_events(field: ScalarField, clock: Clock, controls: IntegratorControls):
    n = field.domain.dimension
    expo = _CLOCK_EXPONENT[clock]
    floor = controls.gradient_floor * field.domain.scale
    lo, hi = field.domain.box[:, 0], field.domain.box[:, 1]

    def rhs(_, y):
        x = y[:n]
        g = np.asarray(field.grad(x), dtype=float)
        gn = float(np.linalg.norm(g))
        # the rhs stays smooth down to the gradient floor; the terminal floor
        # event stops the integration, so only exact zeros need a guard
        if gn <= 1e-300:
            v = np.zeros(n)
            speed = 0.0
        else:
            v = -g / gn ** expo
            speed = gn ** (1 - expo)
        return np.concatenate([v, [speed]])

    def ev_grad(_, y):
        return float(np.linalg.norm(np.asarray(field.grad(y[:n])))) - floor

    ev_grad.terminal = True
    ev_grad.direction = -1

    def ev_box(_, y):
        x = y[:n]
        return float(np.minimum(x - lo, hi - x).min())

    ev_box.terminal = True
    ev_box.direction = -1

    def ev_fstop(_, y):
        return float(field.f(y[:n])) - controls.f_stop

    ev_fstop.terminal = True
    ev_fstop.direction = -1

    return rhs, [ev_fstop, ev_grad, ev_box]


def integrate(field: ScalarField, x0, clock: Clock | str = Clock.TIME,
              controls: Optional[IntegratorControls] = None,
              extra_s: Sequence[float] = ()) -> Trajectory:
    """Integrate the descending flow from ``x0`` until termination.

    ``extra_s`` requests additional parameter values in the sample grid
    (evaluated from the dense solution).
    """
    clock = Clock(clock)
    controls = controls or IntegratorControls()
    x0 = np.asarray(x0, dtype=float)
    n = field.domain.dimension
    f0 = float(field.f(x0))
    if f0 <= 0:
        raise FlowError(f"f(x0) = {f0:g} must be positive")
    floor = controls.gradient_floor * field.domain.scale
    if float(field.grad_norm(x0)) <= floor:
        raise FlowError("gradient vanishes at the start point")

    rhs, events = _rhs_and_events(field, clock, controls)
    if clock is Clock.LEVEL:
        # integrate in log-level time tau = ln(f0 / f): the square-root-type
        # endpoint singularity of the level clock at f -> 0 becomes an
        # exponential tail, so the solver takes O(log(f0/f_stop)) steps
        s_end = f0 - controls.f_stop
        if s_end <= 0:
            raise FlowError("start point is already at the stopping level")
        tau_end = math.log(f0 / controls.f_stop)
        floor_g = controls.gradient_floor * field.domain.scale
        lo, hi = field.domain.box[:, 0], field.domain.box[:, 1]

        def rhs_tau(_, y):
            x = y[:n]
            g = np.asarray(field.grad(x), dtype=float)
            gn2 = float(g @ g)
            fv = float(field.f(x))
            if gn2 <= 1e-300:
                return np.zeros(n + 1)
            return np.concatenate([-g * (fv / gn2), [fv / math.sqrt(gn2)]])

        def ev_grad(_, y):
            return float(np.linalg.norm(np.asarray(field.grad(y[:n])))) - floor_g

        ev_grad.terminal, ev_grad.direction = True, -1

        def ev_box(_, y):
            return float(np.minimum(y[:n] - lo, hi - y[:n]).min())

        ev_box.terminal, ev_box.direction = True, -1

        sol = solve_ivp(rhs_tau, (0.0, tau_end), np.concatenate([x0, [0.0]]),
                        method=controls.method, events=[ev_grad, ev_box],
                        dense_output=True, rtol=controls.level_rtol,
                        atol=controls.level_atol)
        if sol.status == -1:
            # a solver breakdown with a near-zero terminal gradient is the
            # signature of a stall at a positive critical value
            gn_last = float(np.linalg.norm(np.asarray(field.grad(sol.y[:n, -1]))))
            if gn_last <= 1e-5 * field.domain.scale and len(sol.t) > 1:
                tau_final = float(sol.t[-1])
                termination = Termination.GRADIENT_VANISHED
            else:
                raise FlowError(f"integration failed: {sol.message}")
        elif sol.status == 1:
            fired = [i for i, te in enumerate(sol.t_events) if len(te)]
            first = min(fired, key=lambda i: sol.t_events[i][0])
            tau_final = float(sol.t_events[first][0])
            termination = (Termination.GRADIENT_VANISHED if first == 0
                           else Termination.LEFT_DOMAIN)
        else:
            tau_final = tau_end
            termination = Termination.REACHED_ZERO_LOCUS
        t_final = f0 * (1.0 - math.exp(-tau_final))

        m = max(controls.n_samples, 16)
        uniform = np.linspace(0.0, t_final, m // 2)
        graded = t_final * (1.0 - np.geomspace(1e-12, 1.0, m - m // 2))
        s = np.unique(np.concatenate([uniform, graded, [0.0, t_final],
                                      np.asarray(extra_s, dtype=float)]))
        s = s[(s >= 0.0) & (s <= t_final)]
        frac = np.clip(1.0 - s / f0, math.exp(-tau_final), 1.0)
        tau = np.minimum(-np.log(frac), tau_final)
        ys = sol.sol(tau)
        points = ys[:n].T
        arclen = ys[n]
        limit_point = (points[-1].copy()
                       if termination is Termination.REACHED_ZERO_LOCUS else None)
        f_values = np.asarray(field.f(points), dtype=float)
        grad_norms = np.asarray(field.grad_norm(points), dtype=float)
        return Trajectory(clock=clock, s=s, points=points, f_values=f_values,
                          arclen=np.maximum.accumulate(arclen),
                          grad_norms=grad_norms, termination=termination,
                          limit_point=limit_point)

    s_end = controls.t_max
    rtol, atol = controls.rtol, controls.atol

    sol = solve_ivp(rhs, (0.0, s_end), np.concatenate([x0, [0.0]]),
                    method=controls.method, events=events, dense_output=True,
                    rtol=rtol, atol=atol)
    if sol.status == -1:
        gn_last = float(np.linalg.norm(np.asarray(field.grad(sol.y[:n, -1]))))
        if not (gn_last <= 1e-5 * field.domain.scale and len(sol.t) > 1):
            raise FlowError(f"integration failed: {sol.message}")

    t_final = float(sol.t[-1])
    termination = (Termination.GRADIENT_VANISHED if sol.status == -1
                   else Termination.STEP_LIMIT)
    if sol.status == 1:
        fired = [i for i, te in enumerate(sol.t_events) if len(te)]
        t_final = float(min(te[0] for te in sol.t_events if len(te)))
        first = min(fired, key=lambda i: sol.t_events[i][0])
        termination = {0: Termination.REACHED_ZERO_LOCUS,
                       1: Termination.GRADIENT_VANISHED,
                       2: Termination.LEFT_DOMAIN}[first]

    # sample grid: uniform plus geometric grading toward the far end, where
    # the flow slows and f varies on a log scale
    m = max(controls.n_samples, 16)
    uniform = np.linspace(0.0, t_final, m // 2)
    graded = t_final * (1.0 - np.geomspace(1e-12, 1.0, m - m // 2))
    s = np.unique(np.concatenate([uniform, graded, [0.0, t_final],
                                  np.asarray(extra_s, dtype=float)]))
    s = s[(s >= 0.0) & (s <= t_final)]
    ys = sol.sol(s)
    points = ys[:n].T
    arclen = ys[n]
    f_values = np.asarray(field.f(points), dtype=float)
    grad_norms = np.asarray(field.grad_norm(points), dtype=float)

    limit_point = points[-1].copy() if termination is Termination.REACHED_ZERO_LOCUS else None
    return Trajectory(clock=clock, s=s, points=points, f_values=f_values,
                      arclen=np.maximum.accumulate(arclen), grad_norms=grad_norms,
                      termination=termination, limit_point=limit_point)


def reparametrize_clock(traj: Trajectory, target: Clock | str,
                        max_gap: Optional[float] = None) -> Trajectory:
    """Re-index the same geometric curve by another clock.

    The new parameter is the cumulative quadrature of the reciprocal
    conversion factor between the two clock vector fields.
    """
    target = Clock(target)
    if target is traj.clock:
        return traj
    if max_gap is not None and traj.max_parameter_gap() > max_gap:
        raise FlowError("trajectory samples are too sparse to reparametrize")
    diff = _CLOCK_EXPONENT[traj.clock] - _CLOCK_EXPONENT[target]
    h = traj.grad_norms ** diff
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        raise FlowError("conversion factor must be positive and finite")
    theta = cumulative_simpson(1.0 / h, x=traj.s, initial=0.0)
    if np.any(np.diff(theta) <= 0):
        raise FlowError("computed clock conversion is not monotone")
    return replace(traj, clock=target, s=theta)


def trajectory_length(traj: Trajectory) -> float:
    if traj.termination not in (Termination.REACHED_ZERO_LOCUS, Termination.LEFT_DOMAIN):
        raise FlowError(f"length undefined for termination {traj.termination.value}")
    return traj.length


def safe_set_test(field: ScalarField, x0, cert: KLCertificate) -> SafeSetQuery:
    """Membership in the safe set: desingularized value below boundary margin."""
    x0 = np.asarray(x0, dtype=float)
    fv = float(field.f(x0))
    g_value = float(cert.psi(fv))
    margin = float(field.domain.boundary_distance(x0))
    in_V = (fv < cert.rho) and (margin > g_value)
    return SafeSetQuery(point=x0, g_value=g_value, boundary_margin=margin, in_V=in_V)


def _aitken_limit(e1, e2, e3):
    d1, d2 = e2 - e1, e3 - e2
    denom = d2 - d1
    out = e3.copy()
    ok = np.abs(denom) > 1e-300
    out[ok] = e3[ok] - d2[ok] ** 2 / denom[ok]
    # reject wild extrapolations (denominator nearly cancels)
    bad = np.abs(out - e3) > 10 * np.abs(d2) + 1e-15
    out[bad] = e3[bad]
    return out


def retract(field: ScalarField, x0, cert: Optional[KLCertificate] = None,
            controls: Optional[IntegratorControls] = None,
            f_stops: Sequence[float] = (1e-6, 1e-8, 1e-10)) -> np.ndarray:
    """Limit of the descending trajectory, refined by endpoint extrapolation."""
    controls = controls or IntegratorControls()
    x0 = np.asarray(x0, dtype=float)
    f0 = float(field.f(x0))
    if f0 <= min(f_stops):
        return x0.copy()
    if cert is not None:
        q = safe_set_test(field, x0, cert)
        if not q.in_V:
            raise FlowError("start point is outside the safe set")

    stops = sorted([fs for fs in f_stops if fs < f0 / 2.0], reverse=True)
    if not stops:
        stops = [f0 / 4.0]
    controls = replace(controls, f_stop=stops[-1])
    extra = [f0 - fs for fs in stops[:-1]]
    traj = integrate(field, x0, Clock.LEVEL, controls, extra_s=extra)
    if traj.termination is not Termination.REACHED_ZERO_LOCUS:
        if traj.termination is Termination.GRADIENT_VANISHED:
            raise FlowError("gradient vanished before the zero locus: "
                            "not simple nondegenerate along the trajectory")
        raise FlowError(f"trajectory terminated early: {traj.termination.value}")

    endpoints = []
    for fs in stops:
        idx = int(np.argmin(np.abs(traj.s - (f0 - fs))))
        endpoints.append(traj.points[idx])
    if len(endpoints) >= 3:
        return _aitken_limit(*(np.asarray(e) for e in endpoints[-3:]))
    return np.asarray(endpoints[-1]).copy()


def length_function(field: ScalarField, points, cert: KLCertificate,
                    controls: Optional[IntegratorControls] = None) -> list[float]:
    """Forward arc length per start point, by quadrature over the level clock.

    Independent of the integrator's arc-length state: integrates the
    reciprocal gradient norm over the level parameter.
    """
    controls = controls or IntegratorControls()
    out = []
    for x0 in np.atleast_2d(np.asarray(points, dtype=float)):
        q = safe_set_test(field, x0, cert)
        if not q.in_V:
            raise FlowError(f"point {x0} is outside the safe set")
        if float(field.f(x0)) <= controls.f_stop:
            out.append(0.0)
            continue
        traj = integrate(field, x0, Clock.LEVEL, controls)
        nu = cumulative_simpson(1.0 / traj.grad_norms, x=traj.s, initial=0.0)
        out.append(float(nu[-1]))
    return out


def limit_curve(field: ScalarField, x0, cert: Optional[KLCertificate] = None,
                controls: Optional[IntegratorControls] = None) -> Trajectory:
    """Arc-length parametrized trajectory, extended by its limit point."""
    controls = controls or IntegratorControls()
    limit = retract(field, x0, cert=cert, controls=controls)
    traj = integrate(field, np.asarray(x0, dtype=float), Clock.LEVEL, controls)
    arc = reparametrize_clock(traj, Clock.ARCLENGTH)
    tail = float(np.linalg.norm(limit - arc.points[-1]))
    s = np.concatenate([arc.s, [arc.s[-1] + max(tail, 1e-300)]])
    points = np.vstack([arc.points, limit])
    f_values = np.concatenate([arc.f_values, [0.0]])
    arclen = np.concatenate([arc.arclen, [arc.arclen[-1] + tail]])
    grad_norms = np.concatenate([arc.grad_norms, [float(field.grad_norm(limit))]])
    return Trajectory(clock=Clock.ARCLENGTH, s=s, points=points, f_values=f_values,
                      arclen=arclen, grad_norms=grad_norms,
                      termination=Termination.REACHED_ZERO_LOCUS, limit_point=limit)
