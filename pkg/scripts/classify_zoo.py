#!/usr/bin/env python3
"""Classify zero-locus points of the two-dimensional zoo fields.

For each 2-d zoo field, pick a point on the zero locus, build the per-level
gradient-extrema profile on a compact box around it, and print the resulting
nondegeneracy verdict (good / bad / ugly / inconclusive) together with the
fitted exponent of the profile.

Usage:
    python3 scripts/classify_zoo.py [--levels M] [--budget B] [--seed S]
"""

import argparse

import numpy as np

from klflow import (CompactBox, IntegratorControls, classify_point, iter_zoo,
                    retract, safe_set_test)

CONTROLS = IntegratorControls(level_rtol=1e-8, level_atol=1e-10, n_samples=401)


def locus_point(field, cert, rng, tries=4000):
    """A zero-locus point: a direct hit if sampling finds one, otherwise the
    retraction of a sampled safe-set point along the gradient flow."""
    cand = field.domain.sample(rng, tries)
    fv = np.asarray(field.f(cand))
    hits = np.nonzero(fv <= 1e-12)[0]
    if len(hits):
        return cand[hits[0]]
    if cert is None:
        return None
    for p in cand[(fv > 1e-6) & (fv < cert.rho)]:
        if safe_set_test(field, p, cert).in_V:
            return retract(field, p, cert, controls=CONTROLS)
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=14, help="profile levels")
    ap.add_argument("--budget", type=int, default=80, help="samples per level")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'field':<14} {'point':<22} {'verdict':<13} {'theta':>7} "
          f"{'int(alpha)':>11} {'int(beta)':>10}")
    for entry in iter_zoo():
        field = entry.field
        if field.domain.dimension != 2:
            continue
        p = locus_point(field, entry.known_certificate, rng)
        if p is None:
            print(f"{entry.name:<14} (no zero-locus point sampled)")
            continue
        box = np.asarray(field.domain.box, dtype=float)
        hw = np.minimum(0.5 * (box[:, 1] - box[:, 0]) / 2.0,
                        np.minimum(p - box[:, 0], box[:, 1] - p))
        K = CompactBox(center=p, halfwidth=np.maximum(hw, 1e-3))
        # cap the level range by what the field actually attains inside K
        probe = K.lo + 2 * K.halfwidth * rng.random((2000, 2))
        rho = entry.known_certificate.rho if entry.known_certificate else 0.5
        rho = min(rho, 0.5, 0.9 * float(np.max(field.f(probe))))
        pc = classify_point(field, p, K, rho=rho,
                            m=args.levels, budget=args.budget, rng=rng)
        theta = (f"{pc.fitted_exponent.theta:7.3f}"
                 if pc.fitted_exponent else "    n/a")
        pt = "(" + ", ".join(f"{v:+.2f}" for v in p) + ")"
        print(f"{entry.name:<14} {pt:<22} {pc.verdict:<13} {theta} "
              f"{pc.alpha_integral:>11.4f} {pc.beta_integral:>10.4f}")


if __name__ == "__main__":
    main()
