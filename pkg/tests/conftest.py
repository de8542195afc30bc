import numpy as np
import pytest
from hypothesis import settings

from ruinkit.levy_model import LevyMeasureSpec, LevyModel

settings.register_profile("ruinkit", max_examples=40, deadline=None)
settings.load_profile("ruinkit")


@pytest.fixture
def m1():
    return LevyModel(1.5, 0.0, LevyMeasureSpec.exponential(1.0, 1.0))


@pytest.fixture
def m2():
    return LevyModel(1.5, 1.0, LevyMeasureSpec.exponential(1.0, 1.0))


@pytest.fixture
def model_zoo():
    """One model per claim kind, with and without diffusion."""
    ys = np.linspace(0.0, 12.0, 2401)
    tab = LevyMeasureSpec.tabulated(ys, 0.8 * np.exp(-1.2 * ys))
    return {
        "exp": LevyModel(1.5, 0.5, LevyMeasureSpec.exponential(1.0, 1.0)),
        "gamma": LevyModel(2.0, 0.7, LevyMeasureSpec.gamma(1.0, 2.0, 1.5)),
        "uniform": LevyModel(1.2, 0.0, LevyMeasureSpec.uniform(1.0, 0.0, 2.0)),
        "tabulated": LevyModel(1.0, 0.4, tab),
    }
