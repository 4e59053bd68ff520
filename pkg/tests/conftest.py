import numpy as np
import pytest

import smoothing_lab as sl

# The two rank-one generator matrices shared by the bundled models:
# outer products of (1,1) and (1,2) against (1,1), divided by 5.
A1 = np.array([[0.2, 0.2], [0.2, 0.2]])
A2 = np.array([[0.2, 0.2], [0.4, 0.4]])


@pytest.fixture(scope="session")
def ex1():
    return sl.example_model("ex1")


@pytest.fixture(scope="session")
def ex2():
    return sl.example_model("ex2")


@pytest.fixture(scope="session")
def ex3():
    return sl.example_model("ex3")


@pytest.fixture(scope="session")
def small_pool_ex1(ex1):
    pool, _ = sl.run_fixed_point(ex1, k=20_000, rounds=40, seed=71)
    return pool
