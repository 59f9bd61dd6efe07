from pathlib import Path

import numpy as np
import pytest

from mgafem import (AdaptiveConfig, Goal, ProblemData, Subdomain,
                    make_initial_mesh)

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"
RESULTS_DIR = ROOT / "results"


def square_subdomains():
    return [Subdomain(1, rect=(0.0, 0.0, 0.25, 0.25)),
            Subdomain(2, rect=(0.75, 0.0, 1.0, 0.25)),
            Subdomain(3, rect=(0.75, 0.75, 1.0, 1.0)),
            Subdomain(4, rect=(0.0, 0.75, 0.25, 1.0))]


def square_problem() -> ProblemData:
    return ProblemData(diffusion=1.0, load=0.0, load_flux={1: (-1.0, 0.0)},
                       goals=(Goal(flux={2: (1.0, 0.0)}),
                              Goal(flux={3: (1.0, 0.0)}),
                              Goal(flux={4: (0.0, 1.5)})))


@pytest.fixture(scope="session")
def square_mesh0():
    return make_initial_mesh({"kind": "unit_square", "n0": 8}, square_subdomains())


@pytest.fixture(scope="session")
def square_data():
    return square_problem()


def square_config(**overrides) -> AdaptiveConfig:
    base = dict(theta=0.5, c_mark=2.0, rho_irr=0.25, n_goals=3, degree=1,
                max_ndof=2000)
    base.update(overrides)
    return AdaptiveConfig(**base)


def random_solution(space, rng):
    from mgafem import FeSolution
    coeffs = rng.standard_normal(space.n_dofs)
    coeffs[space.dirichlet] = 0.0
    return FeSolution(space, coeffs)
