"""Constructive production of independent points via the twist polynomial.

From an integral model and its conductor primes, build the cubic f with
f(m) = 1 mod every conductor prime, scan for m with f(m) < 0, and certify
that the resulting points on pairwise disjoint quadratic twists are
nontorsion, hence independent by the conjugation argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .arith import factorint, squarefree_decomposition
from .curve_arith import (CurveQ, QuadPoint, canonical_height, is_nontorsion,
                          mul, quadpoint_on_curve, quadpoint_to_twist,
                          torsion_bound)
from .quad_fields import HeegnerReport, heegner_hypothesis


class ScanBudgetExceeded(RuntimeError):
    pass


class DuplicateSquarefreeParts(ValueError):
    pass


@dataclass(frozen=True)
class TwistPolynomial:
    """The cubic f with f(m) = 1 mod p_j for every conductor prime p_j.

    For y^2 = x^3 + a*x + b:          f(x) = (1+Mx)^3 + a*M^4*(1+Mx) + b*M^6.
    For y^2 = x^3 + a*x^2 + b*x + c:  f(x) = (1+Mx)^3 + a*M^2*(1+Mx)^2
                                             + b*M^4*(1+Mx) + c*M^6.
    Here M is the product of the conductor primes.  coeffs are ascending.
    """

    M: int
    coeffs: tuple[int, int, int, int]
    model: tuple[int, int, int]  # (a2, a4, a6) of the integral model
    primes: tuple[int, ...]

    def __call__(self, m: int) -> int:
        c0, c1, c2, c3 = self.coeffs
        return c0 + m * (c1 + m * (c2 + m * c3))


def build_f_coeffs(a2: int, a4: int, a6: int, primes) -> TwistPolynomial:
    """Twist polynomial from raw integer model coefficients.

    Every non-constant contribution carries a factor M, so f(m) = 1 mod p_j
    holds for all integers m; checked symbolically below.
    """
    primes = tuple(primes)
    if not primes:
        raise ValueError("at least one conductor prime is required")
    if len(set(primes)) != len(primes):
        raise ValueError("conductor primes must be distinct")
    M = 1
    for p in primes:
        M *= p
    # (1+Mx)^3 expanded, ascending
    c0, c1, c2, c3 = 1, 3 * M, 3 * M * M, M ** 3
    if a2 != 0:
        c0 += a2 * M * M
        c1 += 2 * a2 * M ** 3
        c2 += a2 * M ** 4
    c0 += a4 * M ** 4
    c1 += a4 * M ** 5
    c0 += a6 * M ** 6
    coeffs = (c0, c1, c2, c3)
    # symbolic congruence check: all non-constant-1 parts divisible by M
    assert (c0 - 1) % M == 0 and c1 % M == 0 and c2 % M == 0 and c3 % M == 0
    return TwistPolynomial(M, coeffs, (a2, a4, a6), primes)


def build_f(E: CurveQ, primes=None) -> TwistPolynomial:
    """Twist polynomial for an integral curve with a1 = a3 = 0."""
    if E.a1 != 0 or E.a3 != 0:
        raise ValueError("curve must have a1 = a3 = 0; complete the square first")
    for c in (E.a2, E.a4, E.a6):
        if c.denominator != 1:
            raise ValueError("integer coefficients required; clear denominators first")
    if primes is None:
        primes = E.conductor_primes
    return build_f_coeffs(int(E.a2), int(E.a4), int(E.a6), primes)


def make_point(T: TwistPolynomial, m: int) -> QuadPoint:
    """The point ((1+Mm)/M^2, sqrt(f(m))/M^3) as a QuadPoint."""
    value = T(m)
    if value == 0:
        raise ValueError(f"f({m}) = 0")
    d, s = squarefree_decomposition(value)
    M = T.M
    P = QuadPoint(Fraction(1 + M * m, M * M), Fraction(s, M ** 3), d)
    a2, a4, a6 = T.model
    rhs = P.x ** 3 + a2 * P.x ** 2 + a4 * P.x + a6
    if P.y0 * P.y0 * P.d != rhs:
        raise AssertionError("constructed point must satisfy the curve exactly")
    return P


@dataclass(frozen=True)
class TwistCandidate:
    m: int
    value: int
    d: int
    s: int
    point: QuadPoint
    hh: HeegnerReport

    def __post_init__(self):
        if self.value >= 0 or self.d >= 0:
            raise ValueError("candidate needs f(m) < 0 and d < 0")
        if self.d * self.s * self.s != self.value:
            raise ValueError("d * s^2 must equal f(m)")


class SquareClassSpan:
    """F_2-span of square classes of integers (sign bit plus prime parities).

    Tracking the full span rather than mere distinctness is what the
    conjugation argument needs: an automorphism moving one field and fixing
    the others exists exactly when the classes are independent.
    """

    def __init__(self):
        self._bit_of = {"sign": 0}
        self._basis = []  # reduced bitmasks

    def _vector(self, d: int) -> int:
        v = 1 if d < 0 else 0
        for p in factorint(abs(d)):
            bit = self._bit_of.setdefault(p, len(self._bit_of))
            v |= 1 << self._bit_of[p]
        return v

    def try_add(self, d: int) -> bool:
        """Insert d's class; False if it already lies in the span."""
        v = self._vector(d)
        for b in self._basis:
            v = min(v, v ^ b)
        if v == 0:
            return False
        self._basis.append(v)
        self._basis.sort(reverse=True)
        return True

    @staticmethod
    def independent(ds) -> bool:
        span = SquareClassSpan()
        return all(span.try_add(d) for d in ds)


def _curve_of(T: TwistPolynomial, conductor_primes) -> CurveQ:
    a2, a4, a6 = T.model
    return CurveQ(0, a2, 0, a4, a6, tuple(conductor_primes))


def find_candidates(T: TwistPolynomial, E: CurveQ, count: int,
                    max_scan: int = 200_000) -> list[TwistCandidate]:
    """Scan m = 0, -1, -2, ... for certified twist candidates.

    Keeps m with f(m) < 0, squarefree part d outside the F_2-span of the
    parts already kept, gcd(d, disc*M) = 1, the strong Heegner hypothesis
    re-verified by Kronecker symbols, and a nontorsion point.  Deterministic.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if (int(E.a2), int(E.a4), int(E.a6)) != T.model or not (E.a1 == 0 and E.a3 == 0):
        raise ValueError("curve does not match the twist polynomial's model")
    disc_num = abs(E.disc.numerator)
    base = _curve_of(T, ())
    span = SquareClassSpan()
    out: list[TwistCandidate] = []
    for step in range(max_scan):
        if len(out) >= count:
            return out
        m = -step
        value = T(m)
        if value >= 0:
            continue
        d, s = squarefree_decomposition(value)
        if gcd(d, disc_num * T.M) != 1:
            continue
        hh = heegner_hypothesis(E, d)
        if not hh.strong:
            continue
        if d in (c.d for c in out) or not span.try_add(d):
            continue
        P = make_point(T, m)
        Ed, Pd = quadpoint_to_twist(P, base)
        if not is_nontorsion(Ed, Pd):
            continue  # torsion candidate: reject, keep scanning
        out.append(TwistCandidate(m, value, d, s, P, hh))
    if len(out) >= count:
        return out
    raise ScanBudgetExceeded(
        f"only {len(out)} of {count} candidates within {max_scan} steps")


@dataclass(frozen=True)
class NontorsionProof:
    d: int
    bound: int            # torsion bound B on the twist
    multiple_nonzero: bool  # B*P != O, checked exactly


@dataclass(frozen=True)
class IndependenceCertificate:
    curve: CurveQ
    candidates: tuple[TwistCandidate, ...]
    proofs: tuple[NontorsionProof, ...]
    rejected: tuple[TwistCandidate, ...]
    classes_independent: bool
    gram_heights: tuple[float, ...] | None = None
    gram_det: float | None = None

    @property
    def rank(self) -> int:
        return len(self.candidates)

    @property
    def valid(self) -> bool:
        return (self.classes_independent
                and all(p.multiple_nonzero for p in self.proofs))


def certify_independence(E: CurveQ, candidates, with_gram: bool = False,
                         gram_eps: float = 1e-6) -> IndependenceCertificate:
    """Certify that the candidate points are independent over Q-bar.

    Distinct squarefree parts are mandatory (duplicates are an error); each
    point is realized on its twist and certified nontorsion there.  A
    candidate failing the nontorsion check is rejected, not fatal.  Heights
    on the twists are reported as a numeric cross-check only.
    """
    ds = [c.d for c in candidates]
    if len(set(ds)) != len(ds):
        raise DuplicateSquarefreeParts("duplicate squarefree part in candidates")
    base = CurveQ(0, E.a2, 0, E.a4, E.a6)
    kept = []
    proofs = []
    rejected = []
    heights = [] if with_gram else None
    for c in candidates:
        if not quadpoint_on_curve(base, c.point):
            raise ValueError(f"candidate m={c.m} point not on curve")
        Ed, Pd = quadpoint_to_twist(c.point, base)
        B = torsion_bound(Ed)
        ok = not mul(Ed, B, Pd).is_infinity
        if not ok:
            rejected.append(c)
            continue
        kept.append(c)
        proofs.append(NontorsionProof(c.d, B, True))
        if with_gram:
            heights.append(canonical_height(Ed, Pd, gram_eps))
    independent = SquareClassSpan.independent([c.d for c in kept])
    det = None
    if with_gram:
        det = 1.0
        for h in heights:
            det *= h
    return IndependenceCertificate(
        E, tuple(kept), tuple(proofs), tuple(rejected), independent,
        tuple(heights) if heights is not None else None, det)
