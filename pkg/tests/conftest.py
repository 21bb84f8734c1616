import pytest

from narrowfr import ResonanceParams
from narrowfr.threebody import reconstruct_nk, solve_amplitude, solve_levels, spectrum_grid


@pytest.fixture(scope="session")
def unitarity():
    return ResonanceParams(inv_a=0.0, r_star=1.0)


@pytest.fixture(scope="session")
def unitarity_grid(unitarity):
    return spectrum_grid(unitarity, 3)


@pytest.fixture(scope="session")
def unitarity_levels(unitarity, unitarity_grid):
    return solve_levels(unitarity, unitarity_grid, 3)


@pytest.fixture(scope="session")
def ground(unitarity, unitarity_grid, unitarity_levels):
    sol = solve_amplitude(unitarity_levels[0], unitarity, unitarity_grid)
    return sol, reconstruct_nk(sol)


@pytest.fixture(scope="session")
def excited(unitarity, unitarity_grid, unitarity_levels):
    sol = solve_amplitude(unitarity_levels[1], unitarity, unitarity_grid)
    return sol, reconstruct_nk(sol)
