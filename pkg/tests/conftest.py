import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from toeplitz_lab.symbol_geometry import SymbolParams

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def complex_on_annulus(r_lo, r_hi):
    return st.builds(lambda r, t: r * np.exp(1j * t),
                     st.floats(r_lo, r_hi), st.floats(0.0, 2 * np.pi))


@st.composite
def normalized_params(draw, ratio_max=0.8):
    """(a, b) with |b| <= ratio_max |a|, moduli bounded away from 0."""
    a = draw(complex_on_annulus(0.5, 2.0))
    ratio = draw(st.floats(0.05, ratio_max))
    b = abs(a) * ratio * np.exp(1j * draw(st.floats(0.0, 2 * np.pi)))
    return SymbolParams(complex(a), complex(b))


@pytest.fixture
def std_params():
    return SymbolParams(1.0, 0.25)


@pytest.fixture
def fig1_raw():
    return SymbolParams(0.5, 1j)
