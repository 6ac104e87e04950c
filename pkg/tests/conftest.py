import pytest

from tickgame import ModelParams, solve_equilibrium


@pytest.fixture(scope="session")
def paper_params():
    return ModelParams()


@pytest.fixture(scope="session")
def paper_eq(paper_params):
    """Converged equilibrium at the reference parameters, shared by the suite."""
    return solve_equilibrium(paper_params)
