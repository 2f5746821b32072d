#!/usr/bin/env python3
"""Integrate descending gradient flows across the built-in field zoo.

For each zoo field, sample start points inside the certificate's safe set,
integrate the level-clock flow, and compare the measured arc length of each
trajectory against the certificate's length bound psi(f(x0)). Prints a
per-field summary table; the worst bound excess should be <= 0 up to solver
tolerance.

Usage:
    python3 scripts/run_zoo_flows.py [--starts N] [--seed S]
"""

import argparse

import numpy as np

from klflow import (Clock, IntegratorControls, Termination, integrate,
                    iter_zoo, safe_set_test, trajectory_length)

CONTROLS = IntegratorControls(level_rtol=1e-8, level_atol=1e-10, n_samples=401)


def sample_safe_starts(field, cert, n, rng, f_floor=1e-6):
    out = []
    tries = 0
    while len(out) < n and tries < 2000:
        tries += 1
        cand = field.domain.sample(rng, max(4 * n, 16))
        fv = np.asarray(field.f(cand))
        keep = (fv > f_floor) & (fv < cert.rho)
        for p in cand[keep]:
            if safe_set_test(field, p, cert).in_V:
                out.append(p)
                if len(out) == n:
                    break
    return np.asarray(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=25, help="starts per field")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'field':<14} {'starts':>6} {'reached':>7} {'max length':>11} "
          f"{'worst excess':>13}")
    worst_overall = -np.inf
    for entry in iter_zoo():
        field, cert = entry.field, entry.known_certificate
        if cert is None:
            continue
        starts = sample_safe_starts(field, cert, args.starts, rng)
        lengths, excesses, reached = [], [], 0
        for x0 in starts:
            traj = integrate(field, x0, Clock.LEVEL, CONTROLS)
            if traj.termination == Termination.REACHED_ZERO_LOCUS:
                reached += 1
            L = trajectory_length(traj)
            bound = float(cert.psi(float(field.f(x0))))
            lengths.append(L)
            excesses.append(L - bound)
        worst = max(excesses)
        worst_overall = max(worst_overall, worst)
        print(f"{entry.name:<14} {len(starts):>6} {reached:>7} "
              f"{max(lengths):>11.4f} {worst:>13.3e}")
    print(f"\nworst bound excess across the zoo: {worst_overall:.3e} "
          f"({'OK' if worst_overall <= 1e-6 else 'VIOLATED'})")


if __name__ == "__main__":
    main()
