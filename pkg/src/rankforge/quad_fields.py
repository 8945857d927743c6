"""Imaginary quadratic orders and their class groups.

Reduced binary quadratic forms model Pic of an order; composition gives the
group law.  Includes splitting tests, Heegner-hypothesis checks and the
structure of kernels in conductor towers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from sympy import isprime

from .arith import factorint, is_squarefree, kronecker, solve_linear_mod, xgcd
from .curve_arith import CurveQ

SPLIT = "split"
INERT = "inert"
RAMIFIED = "ramified"


def is_fundamental_discriminant(D: int) -> bool:
    if D >= 0:
        return False
    if D % 4 == 1:
        return is_squarefree(D)
    if D % 4 == 0:
        q = D // 4
        return is_squarefree(q) and q % 4 in (2, 3)
    return False


@dataclass(frozen=True)
class QuadOrder:
    """Order of conductor f in the imaginary quadratic field of disc D_K."""

    D_K: int
    f: int

    def __post_init__(self):
        if not is_fundamental_discriminant(self.D_K):
            raise ValueError(f"{self.D_K} is not a fundamental discriminant < 0")
        if self.f < 1:
            raise ValueError("conductor must be >= 1")

    @property
    def D(self) -> int:
        return self.f * self.f * self.D_K


@dataclass(frozen=True)
class QForm:
    """Primitive positive definite binary quadratic form a*x^2 + b*xy + c*y^2."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.disc >= 0:
            raise ValueError("form must have negative discriminant")
        if self.a <= 0:
            raise ValueError("form must be positive definite (a > 0)")
        if gcd(gcd(self.a, self.b), self.c) != 1:
            raise ValueError(f"form ({self.a},{self.b},{self.c}) is imprimitive")

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def reduced(self) -> "QForm":
        a, b, c = self.a, self.b, self.c
        while True:
            if -a < b <= a and a <= c:
                break
            if b <= -a or b > a:  # normalize b into (-a, a]
                r = (a - b) // (2 * a)
                b, c = b + 2 * r * a, a * r * r + b * r + c
            if a > c:
                a, b, c = c, -b, a
        if a == c and b < 0:
            b = -b
        return QForm(a, b, c)

    def inverse(self) -> "QForm":
        return QForm(self.a, -self.b, self.c).reduced()

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


def principal_form(D: int) -> QForm:
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError(f"invalid discriminant {D}")
    k = D % 2
    return QForm(1, k, (k * k - D) // 4)


def enumerate_reduced(D: int) -> list[QForm]:
    """All primitive reduced forms of discriminant D, sorted lexicographically."""
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a negative discriminant = 0, 1 mod 4")
    forms = []
    amax = isqrt(-D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if (abs(b) == a or a == c) and b < 0:
                continue
            if gcd(gcd(a, b), c) != 1:
                continue
            forms.append(QForm(a, b, c))
    return sorted(forms, key=QForm.as_tuple)


def compose(F: QForm, G: QForm) -> QForm:
    """Gauss/Dirichlet composition; returns the reduced representative."""
    if F.disc != G.disc:
        raise ValueError("forms must share a discriminant")
    a1, b1, c1 = F.reduced().as_tuple()
    a2, b2, c2 = G.reduced().as_tuple()
    if a1 > a2:
        a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
    g = (b2 + b1) // 2
    h = (b2 - b1) // 2
    w = gcd(gcd(a1, a2), g)
    s = a1 // w
    t = a2 // w
    u = g // w
    k0, period = solve_linear_mod(t * u, h * u + s * c1, s * t)
    n, _ = solve_linear_mod(t * period, h - t * k0, s)
    k = k0 + period * n
    l = (t * k - h) // s
    m = (t * u * k - h * u - s * c1) // (s * t)
    a3 = s * t
    b3 = w * u - (k * t + l * s)
    c3 = k * l - w * m
    return QForm(a3, b3, c3).reduced()


def form_pow(F: QForm, n: int) -> QForm:
    if n < 0:
        return form_pow(F.inverse(), -n)
    result = principal_form(F.disc)
    base = F
    while n > 0:
        if n & 1:
            result = compose(result, base)
        n >>= 1
        if n:
            base = compose(base, base)
    return result


def form_order(F: QForm) -> int:
    n = 1
    G = F.reduced()
    e = principal_form(F.disc)
    while G != e:
        G = compose(G, F)
        n += 1
    return n


@dataclass(frozen=True)
class ClassGroup:
    order: QuadOrder
    reps: tuple[QForm, ...]
    structure: tuple[int, ...]  # invariant factors, each dividing the next


def _abelian_structure(elements, op, identity) -> tuple[int, ...]:
    """Invariant factors of a finite abelian group given by explicit elements.

    Uses element-order counting per prime: the count of solutions of
    x^(p^k) = e determines the p-Sylow cyclic decomposition.
    """
    h = len(elements)
    if h == 1:
        return ()
    def power(x, n):
        r = identity
        b = x
        while n > 0:
            if n & 1:
                r = op(r, b)
            n >>= 1
            if n:
                b = op(b, b)
        return r

    def log_p(x, p):
        e = 0
        while x % p == 0:
            x //= p
            e += 1
        assert x == 1, "count ratio must be a power of p"
        return e

    sylow = {}  # prime -> list of cyclic factor exponents, descending
    for p in factorint(h):
        counts = [1]  # counts[k] = #{x : x^(p^k) = identity}
        while True:
            k = len(counts)
            n_k = sum(1 for x in elements if power(x, p ** k) == identity)
            if n_k == counts[-1]:
                break
            counts.append(n_k)
        # number of cyclic factors of order >= p^k
        at_least = [log_p(counts[k] // counts[k - 1], p)
                    for k in range(1, len(counts))]
        exps = []
        for k, cnt in enumerate(at_least, start=1):
            nxt = at_least[k] if k < len(at_least) else 0
            exps.extend([k] * (cnt - nxt))
        exps.sort(reverse=True)
        sylow[p] = exps

    width = max(len(v) for v in sylow.values())
    invariants = []
    for i in range(width):
        d = 1
        for p, exps in sylow.items():
            if i < len(exps):
                d *= p ** exps[i]
        invariants.append(d)
    # invariants currently largest-first; return ascending divisor chain
    return tuple(reversed(invariants))


def class_group(O: QuadOrder) -> ClassGroup:
    reps = tuple(enumerate_reduced(O.D))
    structure = _abelian_structure(list(reps), compose, principal_form(O.D))
    return ClassGroup(O, reps, structure)


def class_number(D: int) -> int:
    return len(enumerate_reduced(D))


def _unit_index(D_K: int, f: int) -> int:
    """[O_K^* : O_f^*]: 2 for D_K = -4, 3 for D_K = -3 (f > 1), else 1."""
    if f == 1:
        return 1
    if D_K == -4:
        return 2
    if D_K == -3:
        return 3
    return 1


def order_class_number(D_K: int, f: int) -> int:
    """h(O_f) = f * h(D_K) * prod_{p|f} (1 - (D_K|p)/p) / [O_K^* : O_f^*]."""
    if not is_fundamental_discriminant(D_K):
        raise ValueError(f"{D_K} is not a fundamental discriminant < 0")
    if f < 1:
        raise ValueError("conductor must be >= 1")
    h = Fraction(class_number(D_K))
    for p, e in factorint(f).items():
        h *= p ** (e - 1) * (p - kronecker(D_K, p))
    h /= _unit_index(D_K, f)
    assert h.denominator == 1, "class number formula must be integral"
    return int(h)


def splitting(D: int, p: int) -> str:
    """Behaviour of the prime p in the quadratic order of discriminant D."""
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    k = kronecker(D, p)
    if k == 1:
        return SPLIT
    if k == -1:
        return INERT
    return RAMIFIED


def field_discriminant(d: int) -> int:
    """Fundamental discriminant of Q(sqrt(d)) for squarefree d."""
    if d == 0 or not is_squarefree(d):
        raise ValueError(f"{d} must be a squarefree nonzero integer")
    return d if d % 4 == 1 else 4 * d


@dataclass(frozen=True)
class HeegnerReport:
    strong: bool
    weak: bool
    witness: dict


def heegner_hypothesis(E: CurveQ, d: int) -> HeegnerReport:
    """Heegner hypothesis for (E, Q(sqrt(d))), d squarefree < 0.

    strong: every conductor prime splits and gcd(D, N) = 1.
    weak: gcd(D, N) = 1 and the product of local signs over the conductor
    primes is +1 (base field Q, so the required sign is +1).
    """
    if d >= 0:
        raise ValueError("d must be negative")
    D = field_discriminant(d)
    witness = {}
    signs = 1
    coprime = True
    all_split = True
    for p in E.conductor_primes:
        s = splitting(D, p)
        witness[p] = s
        if s == RAMIFIED:
            coprime = False
        else:
            signs *= 1 if s == SPLIT else -1
        if s != SPLIT:
            all_split = False
    strong = all_split and coprime
    weak = coprime and signs == 1
    return HeegnerReport(strong, weak, witness)


@dataclass(frozen=True)
class TowerKernel:
    D_K: int
    p: int
    n: int
    m: int
    order: int
    structure: tuple[int, ...]
    forms: tuple[QForm, ...]

    @property
    def is_p_group(self) -> bool:
        o = self.order
        while o % self.p == 0:
            o //= self.p
        return o == 1


def _form_prime_to(F: QForm, p: int) -> QForm:
    """An equivalent form with leading coefficient coprime to p."""
    a, b, c = F.as_tuple()
    if a % p != 0:
        return F
    if c % p != 0:
        return QForm(c, -b, a)
    # p | a and p | c would force p | b, contradicting primitivity
    raise AssertionError("primitive form has a representative prime to p")


def push_down_form(F: QForm, D_K: int, p: int, n: int, m: int) -> QForm:
    """Image of a disc p^(2n) D_K class under Pic(O_{p^n}) -> Pic(O_{p^m})."""
    F = _form_prime_to(F.reduced(), p)
    a, b, _ = F.as_tuple()
    g = p ** (n - m)
    binv = pow(g, -1, 2 * a)
    B = b * binv % (2 * a)
    D_m = p ** (2 * m) * D_K
    num = B * B - D_m
    assert num % (4 * a) == 0
    return QForm(a, B, num // (4 * a)).reduced()


def tower_kernel(D_K: int, p: int, n: int, m: int = 0) -> TowerKernel:
    """Structure of ker(Pic(O_{p^n}) -> Pic(O_{p^m})), p odd, p not | D_K."""
    if not is_fundamental_discriminant(D_K):
        raise ValueError(f"{D_K} is not a fundamental discriminant < 0")
    if p == 2 or not isprime(p):
        raise ValueError("p must be an odd prime")
    if D_K % p == 0:
        raise ValueError("p must not divide D_K")
    if not (n >= m >= 0):
        raise ValueError("need n >= m >= 0")
    if n == m:
        order = QuadOrder(D_K, p ** n)
        return TowerKernel(D_K, p, n, m, 1, (), (principal_form(order.D),))
    D_n = p ** (2 * n) * D_K
    D_m = p ** (2 * m) * D_K
    target = principal_form(D_m)
    kernel = tuple(F for F in enumerate_reduced(D_n)
                   if push_down_form(F, D_K, p, n, m) == target)
    expected = order_class_number(D_K, p ** n) // order_class_number(D_K, p ** m)
    if len(kernel) != expected:
        raise AssertionError("kernel order does not match the class number ratio")
    structure = _abelian_structure(list(kernel), compose, principal_form(D_n))
    return TowerKernel(D_K, p, n, m, len(kernel), structure, kernel)


def classgroup_json(cg: ClassGroup) -> dict:
    """CLI-facing JSON shape."""
    return {
        "D": cg.order.D,
        "h": len(cg.reps),
        "structure": list(cg.structure),
        "forms": [list(F.as_tuple()) for F in cg.reps],
    }
