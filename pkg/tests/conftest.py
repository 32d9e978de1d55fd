import numpy as np
import pytest

from rsimex.cases import riemann_eos
from rsimex.core_state import conserved_from_primitive_values
from rsimex.eos import MixtureEOS, PhaseParams


def random_primitives(rng, shape, w_scale=0.3):
    """Random admissible primitive fields (alpha1, rho1, rho2, v1, v2, T)."""
    a = rng.uniform(0.05, 0.95, shape)
    r1 = rng.uniform(0.2, 3.0, shape)
    r2 = rng.uniform(0.2, 3.0, shape)
    v = rng.uniform(-1.0, 1.0, (2,) + shape)
    w = rng.uniform(-w_scale, w_scale, (2,) + shape)
    T = rng.uniform(0.3, 3.0, shape)
    return a, r1, r2, v + 0.5 * w, v - 0.5 * w, T


def random_conserved(rng, shape, eos, w_scale=0.3):
    return conserved_from_primitive_values(*random_primitives(rng, shape, w_scale), eos)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def rp_eos():
    return riemann_eos()


@pytest.fixture
def generic_eos():
    return MixtureEOS(PhaseParams(1.4, 1.3), PhaseParams(1.9, 0.8))


def pytest_terminal_summary(terminalreporter):
    """Print the one-line verdicts recorded by the acceptance tests."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(rep, "user_properties", ()) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
