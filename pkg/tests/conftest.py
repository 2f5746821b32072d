import numpy as np
import pytest

from klflow import IntegratorControls
from klflow.fields import get_zoo_entry

# looser solver tolerances for volume tests; the defaults carry the level
# clock's exactness invariant and are exercised separately
RELAXED = IntegratorControls(level_rtol=1e-8, level_atol=1e-10, n_samples=401)


@pytest.fixture(scope="session")
def relaxed_controls():
    return RELAXED


@pytest.fixture(scope="session")
def quadratic():
    return get_zoo_entry("quadratic")


@pytest.fixture(scope="session")
def disk():
    return get_zoo_entry("disk")


@pytest.fixture(scope="session")
def strip():
    return get_zoo_entry("strip")


@pytest.fixture(scope="session")
def bowl():
    return get_zoo_entry("bowl")


def sample_safe_starts(field, cert, n, rng, f_floor=1e-6):
    """Rejection-sample n start points inside the safe set of the certificate."""
    from klflow.flow import safe_set_test

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
    if len(out) < n:
        raise RuntimeError(f"could only sample {len(out)}/{n} safe starts")
    return np.asarray(out)
