import numpy as np
import pytest

from sparsephase.constraints import ProblemInstance
from sparsephase.simulate import SimulationSpec, simulate_instance

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def _report(label, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_omega2_point(rng, chi):
    return chi * np.exp(1j * rng.uniform(-np.pi, np.pi, chi.shape))


def small_instance(rng, n=8, sparsity=5, diameter=None, s=None):
    """Noise-free simulated instance on an n x n grid."""
    spec = SimulationSpec(n=n, aperture_diameter=diameter or n, sparsity_level=sparsity,
                          seed=int(rng.integers(2**31)))
    sim = simulate_instance(spec)
    return sim, sim.problem(sparsity if s is None else s)


def masked_instance(rng, n, support_size, s):
    chi = np.zeros(n * n)
    chi[rng.choice(n * n, size=support_size, replace=False)] = 1.0
    chi = chi.reshape(n, n)
    return ProblemInstance(b=np.ones((n, n)), chi=chi, diversity=np.zeros((n, n)), s=s)
