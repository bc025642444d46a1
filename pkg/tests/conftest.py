import numpy as np
import pytest

from riccilab import flow, lab
from riccilab.manifold import Torus, TorusGrid, preset_u


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(1.0, 1.0, 32, 32)


@pytest.fixture(scope="session")
def torus_flat(grid32):
    return Torus(grid32, np.zeros(grid32.shape))


@pytest.fixture(scope="session")
def torus_bumpy(grid32):
    return Torus(grid32, preset_u(grid32, "sinx:0.1"))


@pytest.fixture(scope="session")
def torus_xy(grid32):
    return Torus(grid32, preset_u(grid32, "sinxcosy:0.05"))


@pytest.fixture(scope="session")
def small_traj(torus_bumpy):
    """Short perturbed-torus flow shared by the unit tests."""
    return flow.evolve(torus_bumpy, 0.01, 1e-3, 0.5)


@pytest.fixture(scope="session")
def small_cfg():
    return lab.ExperimentConfig(N1=32, N2=32, dt=1e-3, t1=0.01,
                                t0_prime=0.5, mu_samples=4)


@pytest.fixture(scope="session")
def small_coupled(small_cfg):
    from riccilab.lab import _coupled_run
    return _coupled_run(small_cfg)
