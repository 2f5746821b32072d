"""Transversal hypersurface and mapping-cylinder coordinates.

The descending flow near the zero locus is organized by a chart of the
trajectory space: a reference level set proxies the space of trajectories,
an exhaustion function ``h`` (chordal length along the sampled level) slices
it into overlapping buckets, and a C1 partition of unity over the buckets
weights the field into ``fhat = f * Phihat``. The hypersurface
``H = fhat^{-1}(1)`` meets every charted trajectory exactly once and carries
cylinder coordinates ``(q, t) -> `` point at level ``t * f(q)`` on the
trajectory through ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .fields import ScalarField
from .flow import Clock, IntegratorControls, Termination, integrate, retract, safe_set_test
from .levelset import CompactBox, sample_level
from .profiles import KLCertificate


class CylinderError(RuntimeError):
    def __init__(self, message: str, trajectory_id: Optional[int] = None):
        super().__init__(message)
        self.trajectory_id = trajectory_id


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class TrajectorySpaceChart:
    """Reference-level chart of the space of descending trajectories.

    ``reference_points`` are ordered along a nearest-neighbor chain;
    ``h_values`` is the accumulated chordal length from the chain base. In
    scaled units ``v = 2 h / h_scale`` the bucket centered at integer ``m``
    is supported on ``(m - 2/3, m + 2/3)`` with plateau ``[m - 1/3, m + 1/3]``
    and cubic C1 transitions, so every point carries at most two buckets and
    the weights sum to one exactly.
    """

    c_ref: float
    reference_points: np.ndarray   # (M, n), chain order
    h_values: np.ndarray           # (M,), nondecreasing along the chain
    h_scale: float
    n_buckets: int

    @property
    def h_max(self) -> float:
        return float(self.h_values[-1])

    def h_eval(self, q) -> float:
        """Exhaustion value of a point near the reference level.

        The point is projected onto the nearest chord of the chain and the
        arc coordinate is interpolated along that chord.
        """
        q = np.asarray(q, dtype=float)
        P = self.reference_points
        if len(P) == 1:
            return float(self.h_values[0])
        A, B = P[:-1], P[1:]
        AB = B - A
        L2 = np.maximum((AB ** 2).sum(axis=1), 1e-300)
        t = np.clip(((q - A) * AB).sum(axis=1) / L2, 0.0, 1.0)
        proj = A + t[:, None] * AB
        d = np.linalg.norm(proj - q, axis=1)
        i = int(np.argmin(d))
        seg = float(np.linalg.norm(AB[i]))
        return float(self.h_values[i] + t[i] * seg)

    def weights(self, h: float) -> np.ndarray:
        """Partition-of-unity weights over the buckets at exhaustion ``h``."""
        v = 2.0 * float(h) / self.h_scale
        B = self.n_buckets
        w = np.zeros(B)
        if v <= 1.0 / 3.0:
            w[0] = 1.0
            return w
        if v >= (B - 1) - 1.0 / 3.0:
            w[B - 1] = 1.0
            return w
        m = int(math.floor(v))
        r = v - m
        if r <= 1.0 / 3.0:
            w[m] = 1.0
        elif r >= 2.0 / 3.0:
            w[m + 1] = 1.0
        else:
            s = _smoothstep(3.0 * (r - 1.0 / 3.0))
            w[m] = 1.0 - s
            w[m + 1] = s
        return w

    def bucket_members(self, m: int) -> np.ndarray:
        """Indices of reference points with positive weight in bucket ``m``."""
        W = np.array([self.weights(h) for h in self.h_values])
        return np.where(W[:, m] > 0)[0]


def _chain_order(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy nearest-neighbor chain; returns ordered points and h values."""
    M = len(points)
    start = int(np.lexsort(points.T[::-1])[0])
    order = [start]
    used = np.zeros(M, dtype=bool)
    used[start] = True
    h = [0.0]
    cur = start
    for _ in range(M - 1):
        d = np.linalg.norm(points - points[cur], axis=1)
        d[used] = np.inf
        nxt = int(np.argmin(d))
        h.append(h[-1] + float(d[nxt]))
        order.append(nxt)
        used[nxt] = True
        cur = nxt
    return points[order], np.asarray(h)


def build_chart(field: ScalarField, cert: Optional[KLCertificate], c_ref: float,
                budget: int = 256, h_scale: Optional[float] = None,
                rng: Optional[np.random.Generator] = None,
                box_shrink: float = 1e-3) -> TrajectorySpaceChart:
    """Sample the reference level and build the exhaustion/bucket structure.

    Reference points outside the safe set of ``cert`` are discarded, so every
    charted trajectory is guaranteed to limit onto the zero locus.
    """
    rng = rng or np.random.default_rng(0)
    if cert is not None and not (0 < c_ref < cert.rho):
        raise CylinderError("c_ref must lie in (0, rho)")
    box = np.asarray(field.domain.box, dtype=float)
    margin = box_shrink * (box[:, 1] - box[:, 0])
    K = CompactBox.from_bounds(np.stack([box[:, 0] + margin, box[:, 1] - margin], axis=1))
    pts = sample_level(field, c_ref, K, budget, rng)
    if len(pts) == 0:
        raise CylinderError(f"reference level f={c_ref:g} is empty in the domain")
    if cert is not None:
        keep = np.array([safe_set_test(field, p, cert).in_V for p in pts])
        pts = pts[keep]
        if len(pts) == 0:
            raise CylinderError("reference level does not meet the safe set")
    ordered, h = _chain_order(pts)
    if h_scale is None:
        h_scale = 3.1 * max(float(h[-1]), 1e-12)  # single bucket by default
    n_buckets = max(1, int(math.floor(2.0 * h[-1] / h_scale)) + 1)
    return TrajectorySpaceChart(c_ref=float(c_ref), reference_points=ordered,
                                h_values=h, h_scale=float(h_scale),
                                n_buckets=n_buckets)


def uniform_reference_points(field: ScalarField, chart: TrajectorySpaceChart,
                             n: int, f_tol: float = 1e-10) -> np.ndarray:
    """``n`` points spread at uniform exhaustion values along the chain.

    Chord interpolation between chain samples followed by a Newton projection
    back onto the reference level; useful for evenly covering the charted
    trajectory space with verification trajectories. When the chain closes
    on itself (the level set is a loop) the closing segment between the last
    and first chain points is covered as well.
    """
    P, h = chart.reference_points, chart.h_values
    closing = float(np.linalg.norm(P[-1] - P[0]))
    if len(P) >= 3 and closing <= 0.25 * chart.h_max:
        # closed chain: wrap around so the seam gets its share of targets
        P = np.vstack([P, P[:1]])
        h = np.append(h, h[-1] + closing)
        h_targets = np.linspace(0.0, h[-1], n, endpoint=False)
    else:
        h_targets = np.linspace(0.0, chart.h_max, n)
    out = np.empty((n, P.shape[1]))
    for i, ht in enumerate(h_targets):
        j = int(np.searchsorted(h, ht, side="right")) - 1
        j = min(max(j, 0), len(h) - 2)
        seg = h[j + 1] - h[j]
        lam = 0.0 if seg <= 0 else (ht - h[j]) / seg
        guess = P[j] + lam * (P[j + 1] - P[j])
        out[i] = _newton_to_level(field, guess, chart.c_ref, f_tol)
    return out


def choose_c_sequence(field: ScalarField, chart: TrajectorySpaceChart,
                      controls: Optional[IntegratorControls] = None,
                      containment_margin: Optional[float] = None,
                      return_trajectories: bool = False):
    """Per-bucket target levels ``c_1 > c_2 > ...`` validated by flow descent.

    For bucket ``m`` the candidate level is accepted only if every reference
    trajectory touching buckets up to ``m`` descends to it inside the domain
    with a containment margin; otherwise the candidate is halved (at most 60
    times).
    """
    controls = controls or IntegratorControls()
    if containment_margin is None:
        containment_margin = 1e-6 * field.domain.scale
    trajs = []
    for i, q in enumerate(chart.reference_points):
        traj = integrate(field, q, Clock.LEVEL, controls)
        trajs.append(traj)

    W = np.array([chart.weights(h) for h in chart.h_values])
    c_seq = np.empty(chart.n_buckets)
    prev = chart.c_ref
    for m in range(chart.n_buckets):
        members = np.where(W[:, : m + 1].sum(axis=1) > 0)[0]
        candidate = prev / 2.0
        ok = False
        for _ in range(60):
            bad = None
            for i in members:
                traj = trajs[i]
                f0 = float(traj.f_values[0])
                if float(traj.f_values[-1]) > candidate:
                    bad = i
                    break
                # point at level `candidate` (level clock: s = f0 - f)
                s_star = f0 - candidate
                x_star = np.array([np.interp(s_star, traj.s, traj.points[:, d])
                                   for d in range(traj.points.shape[1])])
                if float(field.domain.boundary_distance(x_star)) < containment_margin:
                    bad = i
                    break
            if bad is None:
                ok = True
                break
            candidate /= 2.0
        if not ok:
            raise CylinderError(
                f"no admissible level for bucket {m}: reference trajectory "
                f"{bad} fails down to {candidate:g}", trajectory_id=int(bad))
        c_seq[m] = candidate
        prev = candidate
    if return_trajectories:
        return c_seq, trajs
    return c_seq


def _ascend_to_level(field: ScalarField, x0: np.ndarray, c_target: float,
                     controls: IntegratorControls) -> np.ndarray:
    """Follow the ascending level clock from ``x0`` up to ``f = c_target``."""
    n = field.domain.dimension
    lo, hi = field.domain.box[:, 0], field.domain.box[:, 1]
    f0 = float(field.f(x0))
    span = c_target - f0
    if span <= 0:
        raise CylinderError("ascent target below the current level")

    def rhs(_, x):
        g = np.asarray(field.grad(x), dtype=float)
        gn2 = float(g @ g)
        if gn2 <= 0:
            raise CylinderError("gradient vanished during ascent")
        return g / gn2

    def ev_box(_, x):
        return float(np.minimum(x - lo, hi - x).min())

    ev_box.terminal = True
    ev_box.direction = -1
    sol = solve_ivp(rhs, (0.0, span), np.asarray(x0, dtype=float),
                    method=controls.method, events=[ev_box],
                    rtol=controls.level_rtol, atol=controls.level_atol)
    if sol.status != 0:
        raise CylinderError("trajectory leaves the domain before the reference "
                            "level: point is outside the charted region")
    return sol.y[:, -1]


def _newton_to_level(field: ScalarField, x: np.ndarray, target: float,
                     tol: float, max_iter: int = 20) -> np.ndarray:
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        r = float(field.f(x)) - target
        if abs(r) <= tol:
            return x
        g = np.asarray(field.grad(x), dtype=float)
        gn2 = float(g @ g)
        if gn2 <= 0:
            raise CylinderError("gradient vanished during level projection")
        x -= (r / gn2) * g
    raise CylinderError(f"level projection onto f={target:g} did not converge")


@dataclass(frozen=True)
class CylinderChart:
    field: ScalarField
    chart: TrajectorySpaceChart
    c_sequence: np.ndarray
    H_points: np.ndarray          # (m, n), one per crossed trajectory
    H_tags: np.ndarray            # exhaustion values of the trajectories
    limit_targets: np.ndarray     # retraction values of the H points
    crossing_counts: np.ndarray   # per input trajectory
    skipped: tuple                # trajectory indices starting below H
    controls: IntegratorControls

    def phihat(self, h: float) -> float:
        w = self.chart.weights(h)
        return float(np.sum(w / self.c_sequence))

    def fhat(self, x) -> float:
        """``f * Phihat`` with the weight read off the trajectory tag."""
        x = np.asarray(x, dtype=float)
        fv = float(self.field.f(x))
        if self.chart.n_buckets == 1:
            return fv * self.phihat(0.0)
        if fv >= self.chart.c_ref:
            traj = integrate(self.field, x, Clock.LEVEL,
                             replace(self.controls, f_stop=self.chart.c_ref))
            q = traj.points[-1]
        elif abs(fv - self.chart.c_ref) <= 1e-12 * self.chart.c_ref:
            q = x
        else:
            q = _ascend_to_level(self.field, x, self.chart.c_ref, self.controls)
        return fv * self.phihat(self.chart.h_eval(q))


def evaluate_fhat(chartC: CylinderChart, x) -> float:
    return chartC.fhat(x)


def extract_H(field: ScalarField, chart: TrajectorySpaceChart, c_sequence,
              trajectories: Sequence, controls: Optional[IntegratorControls] = None,
              f_tol: float = 1e-8, compute_limits: bool = True) -> CylinderChart:
    """Locate the unique ``fhat = 1`` crossing on each trajectory.

    ``Phihat`` is constant along a trajectory, so the crossing is at the
    level ``f = 1/Phihat`` and is found by interpolation plus a Newton
    polish. A trajectory whose start already satisfies ``fhat < 1`` lies
    below the hypersurface and is skipped (reported); any other crossing
    count than one is a fatal chart violation.
    """
    controls = controls or IntegratorControls()
    c_sequence = np.asarray(c_sequence, dtype=float)
    H_pts, tags, counts, skipped = [], [], [], []
    for i, traj in enumerate(trajectories):
        q_ref = traj.points[0]
        f_ref = float(traj.f_values[0])
        if chart.n_buckets == 1:
            h = 0.0
        else:
            if abs(f_ref - chart.c_ref) <= 1e-9 * chart.c_ref:
                q_tag = q_ref
            elif f_ref < chart.c_ref:
                q_tag = _ascend_to_level(field, q_ref, chart.c_ref, controls)
            else:
                down = integrate(field, q_ref, Clock.LEVEL,
                                 replace(controls, f_stop=chart.c_ref))
                q_tag = down.points[-1]
            h = chart.h_eval(q_tag)
        phihat = float(np.sum(chart.weights(h) / c_sequence))
        fhat_vals = traj.f_values * phihat
        sign = np.sign(fhat_vals - 1.0)
        nz = sign != 0
        changes = int(np.sum(np.abs(np.diff(sign[nz])) > 1))
        counts.append(changes)
        if fhat_vals[0] < 1.0:
            skipped.append(i)
            if changes != 0:
                raise CylinderError(
                    f"trajectory {i}: starts below the hypersurface yet crosses "
                    f"it {changes} times", trajectory_id=i)
            continue
        if changes != 1:
            raise CylinderError(
                f"trajectory {i}: {changes} crossings of fhat = 1 (expected "
                "exactly one)", trajectory_id=i)
        f_star = 1.0 / phihat
        j = int(np.argmax(traj.f_values < f_star))  # first sample below
        lam = (traj.f_values[j - 1] - f_star) / (traj.f_values[j - 1] - traj.f_values[j])
        x_guess = traj.points[j - 1] + lam * (traj.points[j] - traj.points[j - 1])
        x_H = _newton_to_level(field, x_guess, f_star, f_tol / phihat)
        H_pts.append(x_H)
        tags.append(h)
    if not H_pts:
        raise CylinderError("no trajectory crosses the hypersurface")
    H_points = np.asarray(H_pts)
    limits = (np.asarray([retract(field, x, controls=controls) for x in H_points])
              if compute_limits else np.empty_like(H_points))
    return CylinderChart(field=field, chart=chart, c_sequence=c_sequence,
                         H_points=H_points, H_tags=np.asarray(tags),
                         limit_targets=limits, crossing_counts=np.asarray(counts),
                         skipped=tuple(skipped), controls=controls)


def cylinder_coords(chartC: CylinderChart, q, t: float,
                    f_tol: float = 1e-8) -> np.ndarray:
    """Point at level ``t * f(q)`` on the descending trajectory through ``q``.

    ``t = 1`` returns ``q`` itself, ``t = 0`` the retraction limit; the level
    identity ``f(result) = t * f(q)`` holds to ``f_tol`` by construction.
    """
    q = np.asarray(q, dtype=float)
    if not 0.0 <= t <= 1.0:
        raise CylinderError("t must lie in [0, 1]")
    if t == 1.0:
        return q.copy()
    field = chartC.field
    if t == 0.0:
        return retract(field, q, controls=chartC.controls)
    f_q = float(field.f(q))
    target = t * f_q
    traj = integrate(field, q, Clock.LEVEL,
                     replace(chartC.controls, f_stop=target))
    if traj.termination not in (Termination.REACHED_ZERO_LOCUS,):
        raise CylinderError(f"trajectory terminated early: {traj.termination.value}")
    return _newton_to_level(field, traj.points[-1], target, f_tol)


def cylinder_grid(chartC: CylinderChart, q, t_values,
                  f_tol: float = 1e-8) -> np.ndarray:
    """Points at levels ``t * f(q)`` for many ``t`` from one integration."""
    q = np.asarray(q, dtype=float)
    field = chartC.field
    f_q = float(field.f(q))
    ts = np.asarray(t_values, dtype=float)
    if np.any((ts <= 0) | (ts > 1)):
        raise CylinderError("grid t values must lie in (0, 1]")
    t_min = float(ts.min())
    extra = [f_q * (1.0 - t) for t in ts]
    traj = integrate(field, q, Clock.LEVEL,
                     replace(chartC.controls, f_stop=t_min * f_q), extra_s=extra)
    out = np.empty((len(ts), len(q)))
    for k, t in enumerate(ts):
        if t == 1.0:
            out[k] = q
            continue
        s_star = f_q * (1.0 - t)
        x_guess = np.array([np.interp(s_star, traj.s, traj.points[:, d])
                            for d in range(traj.points.shape[1])])
        out[k] = _newton_to_level(field, x_guess, t * f_q, f_tol)
    return out


@dataclass(frozen=True)
class CylinderReport:
    n_grid_points: int
    min_pairwise_distance: float
    injective: bool
    continuity_modulus: float
    level_identity_error: float
    coverage_gap: float
    charted_extent: float
    coverage_ok: bool
    max_h_preimage: float


def verify_cylinder(chartC: CylinderChart, q_indices: Sequence[int],
                    t_values, boundary_samples=None,
                    f_tol: float = 1e-8) -> CylinderReport:
    """Grid diagnostics: injectivity, continuity, level identity, coverage."""
    field = chartC.field
    qs = chartC.H_points[np.asarray(q_indices, dtype=int)]
    ts = np.asarray(t_values, dtype=float)
    grid = np.stack([cylinder_grid(chartC, q, ts, f_tol=f_tol) for q in qs])

    # level identity over the whole grid
    fq = np.asarray(field.f(qs))
    errs = []
    for a in range(len(qs)):
        fv = np.asarray(field.f(grid[a]))
        errs.append(np.max(np.abs(fv - ts * fq[a])))
    level_err = float(max(errs))

    flat = grid.reshape(-1, grid.shape[-1])
    d2 = np.linalg.norm(flat[None, :, :] - flat[:, None, :], axis=-1)
    np.fill_diagonal(d2, np.inf)
    min_pd = float(d2.min())
    spacing = min(float(np.min(np.diff(np.sort(ts)))) if len(ts) > 1 else 1.0, 1.0)
    injective = min_pd > 1e-9 * spacing

    mod = 0.0
    for a in range(len(qs)):
        if grid.shape[1] > 1:
            mod = max(mod, float(np.max(np.linalg.norm(np.diff(grid[a], axis=0), axis=1))))
    extent = chartC.chart.h_max
    if boundary_samples is not None and len(chartC.limit_targets):
        B = np.atleast_2d(np.asarray(boundary_samples, dtype=float))
        d = np.linalg.norm(B[:, None, :] - chartC.limit_targets[None, :, :], axis=-1)
        gap = float(d.min(axis=1).max())
    else:
        gap = math.nan
    coverage_ok = bool(np.isnan(gap) or gap < extent / 100.0)
    max_h = float(chartC.H_tags.max()) if len(chartC.H_tags) else math.nan
    return CylinderReport(n_grid_points=flat.shape[0], min_pairwise_distance=min_pd,
                          injective=injective, continuity_modulus=mod,
                          level_identity_error=level_err, coverage_gap=gap,
                          charted_extent=extent, coverage_ok=coverage_ok,
                          max_h_preimage=max_h)
