from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rationals(lo=-6, hi=6, max_den=4):
    return st.builds(Fraction, st.integers(lo, hi), st.integers(1, max_den))


def distinct_rationals(n_min=1, n_max=4, lo=-6, hi=6):
    return st.lists(st.integers(lo, hi), min_size=n_min, max_size=n_max, unique=True).map(
        lambda xs: [Fraction(x) for x in xs])
