"""Shared oracles and generators for the test suite."""

import itertools
import random
from fractions import Fraction

import pytest

from snflat.linalg import Matrix, det_exact


def trial_division_is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def cofactor_det(rows):
    if len(rows) == 1:
        return rows[0][0]
    return sum((-1) ** j * rows[0][j] * cofactor_det([r[:j] + r[j + 1:] for r in rows[1:]])
               for j in range(len(rows)))


def random_full_rank(rng: random.Random, n: int, bound: int = 20) -> Matrix:
    while True:
        A = Matrix([[rng.randint(-bound, bound) for _ in range(n)] for _ in range(n)])
        if det_exact(A) != 0:
            return A


def box_points(n: int, radius: int):
    return itertools.product(range(-radius, radius + 1), repeat=n)


def as_fractions(v):
    return [Fraction(x) for x in v]


@pytest.fixture
def rng():
    return random.Random(20240601)
