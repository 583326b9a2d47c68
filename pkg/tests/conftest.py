import math

import numpy as np
import pytest

from betabulk.spectral import n0_closed_form, scaling_params


def random_bulk_instance(rng, n_range=(2, 30), gap_range=(1, 20), betas=(0.5, 1.0, 2.0, 4.0),
                         min_n0=0.0):
    """Random (n, m, beta, params) with a center strictly inside the bulk and n0 > min_n0."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = n + int(rng.integers(gap_range[0], gap_range[1] + 1))
        beta = float(rng.choice(betas))
        if n - 0.5 <= min_n0:
            continue
        lo, hi = math.sqrt(m) - math.sqrt(n), math.sqrt(m) + math.sqrt(n)
        for _ in range(100):
            mu = rng.uniform(lo, hi)
            if n0_closed_form(n, m, mu)[0] > min_n0 + 1e-6:
                return n, m, beta, scaling_params(beta, n, m, mu)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
