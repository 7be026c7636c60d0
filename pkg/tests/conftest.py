import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def g_table():
    from rangefield import meansolver as ms

    return ms.solve_g()


def random_queries(rng, count, degenerate_fraction=0.25):
    """Random members of the feasible corner set, a share of them degenerate."""
    from rangefield.geometry import QueryRect

    out = []
    for _ in range(count):
        a, b = np.sort(rng.random(2))
        c, d = np.sort(rng.random(2))
        r = rng.random()
        if r < degenerate_fraction / 2:
            b = a
        elif r < degenerate_fraction:
            d = c
        out.append(QueryRect(a, b, c, d))
    return out
