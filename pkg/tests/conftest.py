import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from starforge.functionals import PolyFunctional, random_functional
from starforge.model import Interaction, fixture_m1, fixture_m2, fixture_m3
from starforge.numerics import Bounds, GaussianRational, TruncatedSeries

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

GR = GaussianRational

small_ints = st.integers(-6, 6)
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)
gaussians = st.builds(GR, rationals, rationals)


def series_strategy(bounds: Bounds):
    keys = [(h, l) for h in range(bounds.hbar_min, bounds.hbar_max + 1)
            for l in range(bounds.lambda_max + 1) if bounds.admits(h, l)]
    return st.dictionaries(st.sampled_from(keys), gaussians, max_size=len(keys)).map(
        lambda d: TruncatedSeries(d, bounds)
    )


def functional_strategy(n: int, bounds: Bounds, max_degree: int = 3):
    return st.integers(0, 2**32 - 1).map(
        lambda seed: random_functional(random.Random(seed), n, bounds, max_degree)
    )


def poly(terms, n, bounds):
    """Build a PolyFunctional from {indices: coeff} with string/int coefficients."""
    return PolyFunctional.from_terms({tuple(k): v for k, v in terms.items()}, n, bounds)


def cubic_at(point, n, bounds, coeff="1/6"):
    return Interaction(poly({(point,) * 3: GR(coeff)}, n, bounds))


@pytest.fixture
def m1():
    return fixture_m1()


@pytest.fixture
def m2():
    return fixture_m2()


@pytest.fixture
def m3():
    return fixture_m3()


@pytest.fixture
def rng():
    return random.Random(20240611)
