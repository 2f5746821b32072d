"""Command-line front end: reproducible runs over fields, flows and charts.

Subcommands: flow, retract, levelset, classify, desing, envelope, cylinder.
All sampling is seeded, and outputs are written with fixed formatting, so a
repeated run with the same config and seed is byte-identical. Exit codes:
0 success/good, 2 config or field errors, 3 bad, 4 ugly, 5 inconclusive,
6 hypersurface single-crossing violation.
"""

from __future__ import annotations

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import sympy as sp

from . import cylinder as cyl
from . import desing, envelope, flow, io
from .fields import FieldError, ScalarField, get_zoo_entry, load_field_file, zoo_names
from .levelset import CompactBox, build_profile
from .profiles import KLCertificate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BAD = 3
EXIT_UGLY = 4
EXIT_INCONCLUSIVE = 5
EXIT_CROSSING = 6

_VERDICT_EXIT = {"good": EXIT_OK, "bad": EXIT_BAD, "ugly": EXIT_UGLY,
                 "inconclusive": EXIT_INCONCLUSIVE}


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")


def _load_field(spec: str | None):
    """Zoo name or TOML field file -> (field, certificate-or-None)."""
    if spec is None:
        raise ConfigError("a field is required (--field zoo-name or file.toml)")
    if spec in zoo_names():
        entry = get_zoo_entry(spec)
        return entry.field, entry.known_certificate
    if Path(spec).exists():
        field = load_field_file(spec)
        return field, field.certificate
    raise ConfigError(f"unknown field {spec!r}; zoo: {', '.join(zoo_names())}")


def _scalar_fn(expr: str):
    t = sp.symbols("t")
    fn = sp.lambdify(t, sp.sympify(expr.replace("^", "**")), modules="numpy")
    return lambda s: np.asarray(fn(np.asarray(s, dtype=float)), dtype=float)


def _starts(field: ScalarField, cert, cfg: dict, rng, n_default: int = 5,
            f_stop: float = 1e-10) -> np.ndarray:
    if "starts" in cfg:
        pts = np.atleast_2d(np.asarray(cfg["starts"], dtype=float))
        if pts.shape[1] != field.domain.dimension:
            raise ConfigError("start points have the wrong dimension")
        return pts
    n = int(cfg.get("n_starts", n_default))
    out = []
    tries = 0
    while len(out) < n and tries < 500:
        tries += 1
        cand = field.domain.sample(rng, max(n, 8))
        fv = np.asarray(field.f(cand))
        keep = fv > f_stop * 10
        if cert is not None:
            keep &= fv < cert.rho
            keep &= np.array([flow.safe_set_test(field, p, cert).in_V for p in cand])
        out.extend(cand[keep])
    if len(out) < n:
        raise ConfigError("could not sample enough admissible start points")
    return np.asarray(out[:n])


def _map(workers: int, fn, items):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_flow(args, cfg: dict) -> int:
    field, cert = _load_field(args.field)
    rng = np.random.default_rng(args.seed)
    clock = cfg.get("clock", "time")
    starts = _starts(field, cert, cfg, rng)
    out = Path(args.out)
    trajs = _map(args.workers, lambda x0: flow.integrate(field, x0, clock), starts)
    outputs, lengths, bounds = [], [], []
    for i, traj in enumerate(trajs):
        n = field.domain.dimension
        header = (["s"] + [f"x{d + 1}" for d in range(n)]
                  + ["f", "grad_norm", "arclen"])
        rows = np.column_stack([traj.s, traj.points, traj.f_values,
                                traj.grad_norms, traj.arclen])
        outputs.append(io.write_csv(out / f"trajectory_{i:03d}.csv", header, rows))
        lengths.append(traj.length)
        bounds.append(float(cert.psi(float(field.f(starts[i])))) if cert else None)
    io.write_manifest(out / "manifest.json", "flow",
                      "descending gradient-flow trajectories with length bounds",
                      cfg, args.seed, outputs,
                      extra={"clock": str(clock), "lengths": lengths,
                             "length_bounds": bounds,
                             "terminations": [t.termination.value for t in trajs]})
    return EXIT_OK


def cmd_retract(args, cfg: dict) -> int:
    field, cert = _load_field(args.field)
    rng = np.random.default_rng(args.seed)
    starts = _starts(field, cert, cfg, rng)
    limits = _map(args.workers, lambda x0: flow.retract(field, x0, cert=cert), starts)
    n = field.domain.dimension
    header = [f"x{d + 1}" for d in range(n)] + [f"R{d + 1}" for d in range(n)]
    rows = np.column_stack([starts, np.asarray(limits)])
    out = Path(args.out)
    csv = io.write_csv(out / "retract.csv", header, rows)
    io.write_manifest(out / "manifest.json", "retract",
                      "trajectory-limit retraction onto the zero locus",
                      cfg, args.seed, [csv])
    return EXIT_OK


def _profile_rows(profile) -> tuple[list, np.ndarray]:
    header = ["level", "n_samples", "coverage", "min_grad", "max_grad",
              "alpha", "beta"]
    rows = np.column_stack([profile.levels, profile.n_samples, profile.coverage,
                            profile.min_grad, profile.max_grad,
                            profile.alpha, profile.beta])
    return header, rows


def _box_from_cfg(field: ScalarField, cfg: dict) -> CompactBox:
    if "box" in cfg:
        return CompactBox.from_bounds(np.asarray(cfg["box"], dtype=float))
    b = field.domain.box
    shrink = 1e-3 * (b[:, 1] - b[:, 0])
    return CompactBox.from_bounds(np.stack([b[:, 0] + shrink, b[:, 1] - shrink], axis=1))


def cmd_levelset(args, cfg: dict) -> int:
    field, cert = _load_field(args.field)
    rng = np.random.default_rng(args.seed)
    rho = float(cfg.get("rho", cert.rho if cert else 0.5))
    m = int(cfg.get("levels", 12))
    budget = args.budget if args.budget is not None else int(cfg.get("budget", 200))
    K = _box_from_cfg(field, cfg)
    profile = build_profile(field, K, rho, m, budget, rng)
    out = Path(args.out)
    header, rows = _profile_rows(profile)
    csv = io.write_csv(out / "levelset_profile.csv", header, rows)
    io.write_manifest(out / "manifest.json", "levelset",
                      "per-level gradient extrema profiles",
                      cfg, args.seed, [csv],
                      extra={"rho": rho, "unreliable": profile.unreliable})
    return EXIT_OK


def cmd_classify(args, cfg: dict) -> int:
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    if "profile" in cfg:  # injected synthetic profile
        pcfg = cfg["profile"]
        rho = float(pcfg.get("rho", 0.5))
        m = int(pcfg.get("levels", 24))
        levels = rho * 2.0 ** (-np.arange(m, dtype=float))
        alpha = _scalar_fn(pcfg["alpha"])(levels)
        beta = _scalar_fn(pcfg["beta"])(levels)
        verdict, av, bv = desing.trichotomy_verdict(levels, alpha, beta, rho)
        report = {"verdict": verdict,
                  "alpha": {"verdict": av.verdict, "integral": av.integral,
                            "tail_exponent": av.tail_exponent},
                  "beta": {"verdict": bv.verdict, "integral": bv.integral,
                           "tail_exponent": bv.tail_exponent},
                  "source": "injected profile"}
        js = io.write_json(out / "classification.json", report)
        io.write_manifest(out / "manifest.json", "classify",
                          "good/bad/ugly trichotomy on an injected profile",
                          cfg, args.seed, [js], extra={"verdict": verdict})
        return _VERDICT_EXIT[verdict]

    field, cert = _load_field(args.field)
    rho = float(cfg.get("rho", cert.rho if cert else 0.5))
    if "point" in cfg:
        p = np.asarray(cfg["point"], dtype=float)
    else:  # auto-locate a zero-locus point: coarse argmin of f over the box
        axes = [np.linspace(lo, hi, 41) for lo, hi in field.domain.box]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"),
                        axis=-1).reshape(-1, field.domain.dimension)
        p = grid[int(np.argmin(np.asarray(field.f(grid))))]
    hw = float(cfg.get("halfwidth", 0.75))
    K = CompactBox(center=p, halfwidth=np.full(field.domain.dimension, hw))
    m = int(cfg.get("levels", 16))
    budget = args.budget if args.budget is not None else int(cfg.get("budget", 300))
    pc = desing.classify_point(field, p, K, rho, m=m, budget=budget, rng=rng)
    report = {"point": pc.point, "verdict": pc.verdict,
              "simple_nondegenerate": pc.simple_nondegenerate,
              "witness_margin": pc.witness_margin,
              "alpha_integral": pc.alpha_integral,
              "beta_integral": pc.beta_integral,
              "alpha_tail_exponent": pc.alpha_verdict.tail_exponent,
              "beta_tail_exponent": pc.beta_verdict.tail_exponent}
    if pc.fitted_exponent is not None:
        report["exponent_fit"] = {"theta": pc.fitted_exponent.theta,
                                  "C": pc.fitted_exponent.C,
                                  "r_squared": pc.fitted_exponent.r_squared}
    js = io.write_json(out / "classification.json", report)
    io.write_manifest(out / "manifest.json", "classify",
                      "good/bad/ugly trichotomy at a zero-locus point",
                      cfg, args.seed, [js], extra={"verdict": pc.verdict})
    return _VERDICT_EXIT[pc.verdict]


def cmd_desing(args, cfg: dict) -> int:
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    mode = cfg.get("mode", "fit")
    outputs = []
    extra = {}
    if mode == "build-psi":
        rho = float(cfg.get("rho", 0.5))
        a_fn = _scalar_fn(cfg["a"])
        cert = desing.build_psi_from_a(a_fn, rho)
        ts = np.linspace(0.0, rho, 201)
        rows = np.column_stack([ts, np.asarray(cert.psi(ts)),
                                np.concatenate([[np.nan],
                                                np.asarray(cert.psi.derivative(ts[1:]))])])
        outputs.append(io.write_csv(out / "psi.csv", ["t", "psi", "dpsi"], rows))
        extra["source"] = cert.source
        if args.field:
            field, _ = _load_field(args.field)
            rep = desing.verify_certificate(field, cert, rng=rng)
            extra["verification"] = {"n_checked": rep.n_checked,
                                     "worst_margin": rep.worst_margin,
                                     "passed": rep.passed}
    elif mode == "fit":
        field, cert0 = _load_field(args.field)
        rho = float(cfg.get("rho", cert0.rho if cert0 else 0.5))
        K = _box_from_cfg(field, cfg)
        fit = desing.fit_lojasiewicz_exponent(field, K, rho, rng=rng)
        extra["fit"] = {"theta": fit.theta, "C": fit.C, "r_squared": fit.r_squared}
        if fit.certificate is not None:
            rep = desing.verify_certificate(field, fit.certificate, rng=rng)
            extra["verification"] = {"n_checked": rep.n_checked,
                                     "worst_margin": rep.worst_margin,
                                     "passed": rep.passed}
            ts = np.linspace(0.0, rho, 201)
            rows = np.column_stack([ts, np.asarray(fit.certificate.psi(ts))])
            outputs.append(io.write_csv(out / "psi.csv", ["t", "psi"], rows))
    else:
        raise ConfigError(f"unknown desing mode {mode!r} (fit | build-psi)")
    outputs.append(io.write_json(out / "desing.json", extra))
    io.write_manifest(out / "manifest.json", "desing",
                      "desingularization construction and verification",
                      cfg, args.seed, outputs, extra=extra)
    return EXIT_OK


def cmd_envelope(args, cfg: dict) -> int:
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    kind = cfg.get("kind", "lower")
    r0 = float(cfg.get("r0", 1.0))
    budget = args.budget if args.budget is not None else int(cfg.get("budget", 16))
    if "teeth" in cfg:
        teeth = np.asarray(cfg["teeth"], dtype=float)  # rows (t, value)
        base_fn = _scalar_fn(cfg.get("base", "1 + 0*t"))

        def evaluator(t):
            t = np.asarray(t, dtype=float)
            vals = np.broadcast_to(np.asarray(base_fn(t), dtype=float),
                                   t.shape).copy()
            flat, tf = vals.reshape(-1), t.reshape(-1)
            for tt, vv in teeth:
                flat[np.isclose(tf, tt, rtol=0, atol=1e-13)] = vv
            return vals if t.ndim else float(flat[0])

        grid = np.unique(np.concatenate([np.geomspace(r0 * 2.0 ** (-14), r0, 200),
                                         teeth[:, 0]]))
        u = envelope.SemicontinuousProfile(r0=r0, kind=kind, evaluator=evaluator,
                                           grid=grid)
    else:
        u = envelope.comb_profile(r0, kind, n_teeth=int(cfg.get("n_teeth", 6)),
                                  rng=rng)
    res = envelope.build_envelope(u, budget=budget)
    rows = np.column_stack([res.grid, res.u_values, res.w_values])
    csv = io.write_csv(out / "envelope.csv", ["t", "u", "w"], rows)
    trace = {"side_violation": res.side_violation, "l1_gap": res.l1_gap,
             "targets_met": res.targets_met,
             "pieces": [{"a_lo": p.a_lo, "a_hi": p.a_hi, "lambda": p.lam,
                         "m_k": p.m_k, "eps_k": p.eps_k, "defect": p.defect,
                         "target": p.target} for p in res.pieces]}
    js = io.write_json(out / "envelope_trace.json", trace)
    io.write_manifest(out / "manifest.json", "envelope",
                      "continuous one-sided approximation of a "
                      "semicontinuous profile", cfg, args.seed, [csv, js],
                      extra={"side_violation": res.side_violation,
                             "l1_gap": res.l1_gap})
    return EXIT_OK


def cmd_cylinder(args, cfg: dict) -> int:
    field, cert = _load_field(args.field)
    n = field.domain.dimension
    if n not in (2, 3):
        raise ConfigError(f"cylinder charts support n in (2, 3); field has n={n}")
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    rho = cert.rho if cert else 0.5
    c_ref = float(cfg.get("c_ref", rho / 2.0))
    chart_budget = int(cfg.get("chart_budget", 160))
    h_scale = cfg.get("h_scale")
    chart = cyl.build_chart(field, cert, c_ref, budget=chart_budget,
                            h_scale=None if h_scale is None else float(h_scale),
                            rng=rng)
    c_seq, all_trajs = cyl.choose_c_sequence(field, chart, return_trajectories=True)
    n_traj = min(int(cfg.get("n_trajectories", 60)), len(chart.reference_points))
    idx = np.linspace(0, len(chart.reference_points) - 1, n_traj).astype(int)
    chartC = cyl.extract_H(field, chart, c_seq, [all_trajs[i] for i in idx])
    t_vals = np.linspace(0.1, 1.0, int(cfg.get("t_grid", 8)))
    q_idx = np.linspace(0, len(chartC.H_points) - 1,
                        min(int(cfg.get("q_grid", 8)), len(chartC.H_points))).astype(int)
    report = cyl.verify_cylinder(chartC, q_idx, t_vals,
                                 boundary_samples=cfg.get("boundary_samples"))
    outputs = []
    order = np.argsort(chartC.H_tags, kind="stable")
    if n == 2:
        outputs.append(io.write_polyline_csv(out / "H_polyline.csv",
                                             chartC.H_points[order]))
        outputs.append(io.write_polyline_csv(out / "limit_targets.csv",
                                             chartC.limit_targets[order]))
    else:
        segs = [(i, i + 1) for i in range(len(order) - 1)]
        outputs.append(io.write_obj(out / "H.obj", chartC.H_points[order], segments=segs))
        outputs.append(io.write_obj(out / "limit_targets.obj",
                                    chartC.limit_targets[order]))
    grid_pts = np.vstack([cyl.cylinder_grid(chartC, chartC.H_points[i], t_vals)
                          for i in q_idx])
    if n == 2:
        outputs.append(io.write_polyline_csv(out / "cylinder_grid.csv", grid_pts))
    else:
        outputs.append(io.write_obj(out / "cylinder_grid.obj", grid_pts))
    chart_doc = {"c_ref": chart.c_ref, "h_scale": chart.h_scale,
                 "n_buckets": chart.n_buckets, "h_max": chart.h_max,
                 "c_sequence": c_seq,
                 "n_H_points": len(chartC.H_points),
                 "skipped_trajectories": list(chartC.skipped),
                 "crossing_counts": chartC.crossing_counts,
                 "report": {"min_pairwise_distance": report.min_pairwise_distance,
                            "injective": report.injective,
                            "continuity_modulus": report.continuity_modulus,
                            "level_identity_error": report.level_identity_error,
                            "coverage_gap": report.coverage_gap,
                            "charted_extent": report.charted_extent,
                            "max_h_preimage": report.max_h_preimage}}
    outputs.append(io.write_json(out / "chart.json", chart_doc))
    io.write_manifest(out / "manifest.json", "cylinder",
                      "transversal hypersurface and mapping-cylinder "
                      "coordinates", cfg, args.seed, outputs,
                      extra={"n_buckets": chart.n_buckets})
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "flow": cmd_flow,
    "retract": cmd_retract,
    "levelset": cmd_levelset,
    "classify": cmd_classify,
    "desing": cmd_desing,
    "envelope": cmd_envelope,
    "cylinder": cmd_cylinder,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klflow",
        description="Gradient-flow desingularization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--field", help="zoo field name or field TOML file")
        p.add_argument("--config", help="run configuration TOML file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--budget", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except cyl.CylinderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CROSSING
    except (ConfigError, FieldError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
