import numpy as np
import pytest
from hypothesis import settings

from lr_ergo.algebra import LocalOperator, random_operator
from lr_ergo.dynamics import build_engine
from lr_ergo.lattice import Region, Torus
from lr_ergo.model import build_interaction, hamiltonian

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def chain_engine(kind, L, boundary="periodic", **couplings):
    torus = Torus((L,), boundary)
    phi = build_interaction(kind, torus, couplings)
    return phi, build_engine(hamiltonian(phi), torus)


def random_hamiltonian(rng, L, boundary="open"):
    """Dense random self-adjoint H on an L-site chain (no locality)."""
    torus = Torus((L,), boundary)
    H = random_operator(rng, torus.sites(), hermitian=True)
    return build_engine(H, torus)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
