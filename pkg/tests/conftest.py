import numpy as np
import pytest

from epdiff import FieldPair, GridSpec, ScalarField, State


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_field(grid: GridSpec, rng) -> ScalarField:
    return ScalarField(grid, rng.standard_normal(grid.shape))


def random_pair(grid: GridSpec, rng) -> FieldPair:
    return FieldPair(random_field(grid, rng), random_field(grid, rng))


def random_state(grid: GridSpec, rng, t: float = 0.0) -> State:
    return State.from_velocity(random_pair(grid, rng), t=t)
