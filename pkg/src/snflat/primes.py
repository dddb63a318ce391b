"""Primality testing and upward prime search."""

from __future__ import annotations

import hashlib

from .errors import PrimeGapError

# Deterministic Miller-Rabin: these witnesses are exact for n < 3.317e24.
_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_DETERMINISTIC_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_PROBABILISTIC_ROUNDS = 64
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


def _strong_probable_prime(n: int, a: int, d: int, r: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _hashed_witnesses(n: int, count: int):
    # Witnesses derived from n itself keep the test a pure function.
    seed = n.to_bytes((n.bit_length() + 7) // 8, "big")
    for i in range(count):
        h = hashlib.sha256(seed + i.to_bytes(4, "big")).digest()
        yield 2 + int.from_bytes(h, "big") % (n - 3)


def is_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below 3.3e24, 64 hashed rounds above."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    if n < _DETERMINISTIC_LIMIT:
        bases = _DETERMINISTIC_BASES
    else:
        bases = _hashed_witnesses(n, _PROBABILISTIC_ROUNDS)
    return all(_strong_probable_prime(n, a, d, r) for a in bases)


def next_prime_from(x: int, max_gap: int | None = None) -> tuple[int, int]:
    """Smallest prime ``p >= x``, returned as ``(p, p - x)``.

    ``max_gap`` caps the scan; exceeding it raises :class:`PrimeGapError`.
    """
    if x < 2:
        raise ValueError("next_prime_from needs x >= 2")
    delta = 0
    while not is_prime(x + delta):
        delta += 1
        if max_gap is not None and delta > max_gap:
            raise PrimeGapError(f"no prime in [{x}, {x + max_gap}]")
    return x + delta, delta
