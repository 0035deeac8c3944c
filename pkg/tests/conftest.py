import numpy as np
import pytest

from orthantlab.model import (
    CANONICAL_DELTAS,
    SrbmModel,
    build_example_r,
    example_model,
)


@pytest.fixture(scope="session")
def example():
    return example_model()


@pytest.fixture(scope="session")
def example_r():
    return build_example_r(CANONICAL_DELTAS)


@pytest.fixture(scope="session")
def model_1d():
    return SrbmModel(theta=np.array([-1.0]), sigma=np.eye(1), r_matrix=np.eye(1))
