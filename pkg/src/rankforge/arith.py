"""Shared exact integer arithmetic helpers."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

from sympy import factorint, isprime


def squarefree_decomposition(n: int) -> tuple[int, int]:
    """Write n = d * s**2 with d squarefree and sign(d) = sign(n).

    Returns (d, s) with s > 0.  Raises on n = 0.
    """
    if n == 0:
        raise ValueError("0 has no squarefree part")
    sign = -1 if n < 0 else 1
    d, s = 1, 1
    for p, e in factorint(abs(n)).items():
        if e % 2:
            d *= p
        s *= p ** (e // 2)
    return sign * d, s


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(e == 1 for e in factorint(abs(n)).values())


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p, in {-1, 0, 1}."""
    a %= p
    if a == 0:
        return 0
    t = pow(a, (p - 1) // 2, p)
    return -1 if t == p - 1 else t


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) for arbitrary integers, in {-1, 0, 1}."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    # peel off factors of 2 using the (a|2) rule
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    # Jacobi symbol by quadratic reciprocity
    a %= n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd: returns (g, u, v) with u*a + v*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def solve_linear_mod(a: int, b: int, m: int) -> tuple[int, int]:
    """Solve a*x = b (mod m); returns (x0, period) so solutions are x0 + k*period.

    Raises ValueError when no solution exists.
    """
    if m <= 0:
        raise ValueError("modulus must be positive")
    g, u, _ = xgcd(a, m)
    if b % g != 0:
        raise ValueError(f"{a}*x = {b} (mod {m}) has no solution")
    period = m // g
    x0 = (b // g) * u % period
    return x0, period


def primes_up_to(n: int) -> list[int]:
    """All primes <= n by sieve."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i, v in enumerate(sieve) if v]


def parse_rational(s) -> Fraction:
    """Exact rational from a decimal string like '-16', '3/4' or '0.25'."""
    if isinstance(s, Fraction):
        return s
    if isinstance(s, int):
        return Fraction(s)
    return Fraction(str(s))


__all__ = [
    "squarefree_decomposition",
    "is_squarefree",
    "legendre",
    "kronecker",
    "xgcd",
    "solve_linear_mod",
    "primes_up_to",
    "parse_rational",
    "factorint",
    "isprime",
]
