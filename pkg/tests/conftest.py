import numpy as np
import pytest

from mixfam.components import ComponentBasis, FinitePmf, Gaussian
from mixfam.mixture import Mixture


@pytest.fixture
def delta_basis():
    """Point-mass basis on two atoms: the multinomial (exactly solvable) case."""
    return ComponentBasis((FinitePmf([1.0, 0.0]), FinitePmf([0.0, 1.0])))


@pytest.fixture
def pmf_basis():
    """Three overlapping pmfs on four atoms."""
    return ComponentBasis(
        (
            FinitePmf([0.70, 0.10, 0.10, 0.10]),
            FinitePmf([0.10, 0.60, 0.20, 0.10]),
            FinitePmf([0.05, 0.15, 0.30, 0.50]),
        )
    )


@pytest.fixture
def gmm_basis():
    return ComponentBasis((Gaussian(-1.0, 1.0), Gaussian(1.0, 1.0)))


def random_positive_pmf(rng, size, floor=1e-4):
    p = np.maximum(rng.dirichlet(np.ones(size)), floor)
    return p / p.sum()


def random_open_simplex(rng, size, floor=1e-6):
    w = np.maximum(rng.dirichlet(np.ones(size)), floor)
    return w / w.sum()


def random_pmf_pair(rng, k_range=(2, 6), atoms_extra=4):
    """A random strictly positive pmf basis plus two mixtures over it."""
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    n_atoms = int(rng.integers(k, k + atoms_extra + 1))
    basis = ComponentBasis(
        tuple(FinitePmf(random_positive_pmf(rng, n_atoms)) for _ in range(k))
    )
    m1 = Mixture(basis, random_open_simplex(rng, k))
    m2 = Mixture(basis, random_open_simplex(rng, k))
    return m1, m2
