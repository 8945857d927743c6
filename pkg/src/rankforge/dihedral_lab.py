"""Generalized dihedral groups and the minus-one representation argument.

Everything here is desk scale: groups and modules are explicit lists of
integer vectors, and claims are verified by exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product


@dataclass(frozen=True)
class FiniteAbelian:
    """Direct sum of cyclic groups Z/n1 x ... x Z/nk, elements as tuples."""

    factors: tuple[int, ...]

    def __post_init__(self):
        if any(n < 1 for n in self.factors):
            raise ValueError("cyclic factors must be positive")
        object.__setattr__(self, "factors", tuple(int(n) for n in self.factors))

    @property
    def size(self) -> int:
        out = 1
        for n in self.factors:
            out *= n
        return out

    @property
    def identity(self) -> tuple[int, ...]:
        return (0,) * len(self.factors)

    def elements(self):
        return product(*(range(n) for n in self.factors))

    def add(self, a, b):
        return tuple((x + y) % n for x, y, n in zip(a, b, self.factors))

    def negate(self, a):
        return tuple((-x) % n for x, n in zip(a, self.factors))

    def element_order(self, a) -> int:
        k = 1
        x = a
        while x != self.identity:
            x = self.add(x, a)
            k += 1
        return k

    @classmethod
    def from_class_group(cls, cg) -> "FiniteAbelian":
        """Wire a quad_fields.ClassGroup structure in directly."""
        return cls(tuple(cg.structure) if cg.structure else (1,))


@dataclass(frozen=True)
class GenDihedral:
    """A semidirect C2 extension where the involution inverts the base.

    Elements (a, eps) with a in the abelian base and eps in {0, 1}:
    (a,0)(b,eps) = (a+b, eps) and (a,1)(b,eps) = (a-b, 1+eps).
    """

    base: FiniteAbelian

    @property
    def size(self) -> int:
        return 2 * self.base.size

    @property
    def identity(self):
        return (self.base.identity, 0)

    @property
    def sigma(self):
        return (self.base.identity, 1)

    def elements(self):
        for eps in (0, 1):
            for a in self.base.elements():
                yield (a, eps)

    def mul(self, g, h):
        a, e = g
        b, f = h
        if e == 0:
            return (self.base.add(a, b), f)
        return (self.base.add(a, self.base.negate(b)), (1 + f) % 2)

    def inverse(self, g):
        a, e = g
        if e == 0:
            return (self.base.negate(a), 0)
        return g  # reflections are involutions

    def element_order(self, g) -> int:
        k = 1
        x = g
        while x != self.identity:
            x = self.mul(x, g)
            k += 1
        return k

    def is_abelian(self) -> bool:
        els = list(self.elements())
        return all(self.mul(g, h) == self.mul(h, g) for g in els for h in els)


EXHAUSTIVE_LIMIT = 10 ** 4


def make_gen_dihedral(A: FiniteAbelian) -> GenDihedral:
    """Build A x| C2 with the inverting involution; verifies the dihedral
    relation sigma tau sigma = tau^-1 exhaustively for |A| <= 10^4."""
    G = GenDihedral(A)
    if A.size <= EXHAUSTIVE_LIMIT:
        s = G.sigma
        for a in A.elements():
            tau = (a, 0)
            lhs = G.mul(G.mul(s, tau), s)
            if lhs != G.inverse(tau):
                raise AssertionError("dihedral relation failed")
    return G


def involution_lift_count(G: GenDihedral) -> int:
    """Number of involutions (or identity) outside the abelian part."""
    return sum(1 for g in G.elements()
               if g[1] == 1 and G.mul(g, g) == G.identity)


# ----------------------------------------------------------------------
# module actions
# ----------------------------------------------------------------------

def _normalize_matrix(mat, factors):
    return tuple(tuple(x % factors[i] for x in row) for i, row in enumerate(mat))


def identity_matrix(M: FiniteAbelian):
    r = len(M.factors)
    return _normalize_matrix(
        [[1 if i == j else 0 for j in range(r)] for i in range(r)], M.factors)


def minus_identity_matrix(M: FiniteAbelian):
    r = len(M.factors)
    return _normalize_matrix(
        [[-1 if i == j else 0 for j in range(r)] for i in range(r)], M.factors)


def mat_apply(M: FiniteAbelian, mat, v):
    return tuple(sum(mat[i][j] * v[j] for j in range(len(v))) % M.factors[i]
                 for i in range(len(M.factors)))


def mat_mul(M: FiniteAbelian, a, b):
    r = len(M.factors)
    return _normalize_matrix(
        [[sum(a[i][k] * b[k][j] for k in range(r)) for j in range(r)]
         for i in range(r)], M.factors)


def mat_pow(M: FiniteAbelian, mat, n: int):
    result = identity_matrix(M)
    base = mat
    while n > 0:
        if n & 1:
            result = mat_mul(M, result, base)
        n >>= 1
        if n:
            base = mat_mul(M, base, base)
    return result


def is_endomorphism(M: FiniteAbelian, mat) -> bool:
    """Entry (i, j) must map Z/m_j into Z/m_i: m_j * mat[i][j] = 0 mod m_i."""
    for i, mi in enumerate(M.factors):
        for j, mj in enumerate(M.factors):
            if (mat[i][j] * mj) % mi != 0:
                return False
    return True


def is_automorphism(M: FiniteAbelian, mat) -> bool:
    if not is_endomorphism(M, mat):
        return False
    seen = set()
    for v in M.elements():
        seen.add(mat_apply(M, mat, v))
    return len(seen) == M.size


@dataclass(frozen=True)
class ModuleAction:
    """A representation of GenDihedral(A) on a finite abelian module.

    gen_images[i] is the image of the i-th standard generator of A;
    sigma_image is the image of the reflection (0, 1).
    """

    group: GenDihedral
    module: FiniteAbelian
    gen_images: tuple
    sigma_image: tuple

    def rho_abelian(self, a):
        """Image of (a, 0) as a matrix."""
        mat = identity_matrix(self.module)
        for exp, g in zip(a, self.gen_images):
            mat = mat_mul(self.module, mat, mat_pow(self.module, g, exp))
        return mat


def make_module_action(G: GenDihedral, M: FiniteAbelian,
                       gen_images, sigma_image) -> ModuleAction:
    """Validate and build an action; raises ValueError on a relation failure."""
    gen_images = tuple(_normalize_matrix(g, M.factors) for g in gen_images)
    sigma_image = _normalize_matrix(sigma_image, M.factors)
    if len(gen_images) != len(G.base.factors):
        raise ValueError("one generator image per cyclic factor required")
    for mat in (*gen_images, sigma_image):
        if not is_automorphism(M, mat):
            raise ValueError("images must be automorphisms of the module")
    ident = identity_matrix(M)
    for n_i, g in zip(G.base.factors, gen_images):
        if mat_pow(M, g, n_i) != ident:
            raise ValueError("generator image order must divide the cyclic order")
    for g in gen_images:
        for h in gen_images:
            if mat_mul(M, g, h) != mat_mul(M, h, g):
                raise ValueError("abelian generator images must commute")
    if mat_mul(M, sigma_image, sigma_image) != ident:
        raise ValueError("sigma image must square to the identity")
    for n_i, g in zip(G.base.factors, gen_images):
        ginv = mat_pow(M, g, n_i - 1) if n_i > 1 else ident
        if mat_mul(M, mat_mul(M, sigma_image, g), sigma_image) != ginv:
            raise ValueError("dihedral relation sigma g sigma = g^-1 failed")
    return ModuleAction(G, M, gen_images, sigma_image)


@dataclass(frozen=True)
class MinusOneReport:
    tau_sq_trivial: bool
    fixed_all: bool


def verify_minus_one_argument(A: FiniteAbelian, act: ModuleAction) -> MinusOneReport:
    """If sigma acts by -1 and |A| is odd, the abelian part must act trivially.

    Checks rho(tau^2) = id for every tau, then (squaring is a bijection on an
    odd-order group, so <tau^2> = <tau>) that every rho(tau) = id, i.e. the
    module is fixed pointwise.  Both flags must come back true.
    """
    if A.size % 2 == 0:
        raise ValueError("the argument requires an abelian part of odd order; "
                         "the underlying proof inverts 2")
    if act.sigma_image != minus_identity_matrix(act.module):
        raise ValueError("sigma must act by -identity on the module")
    ident = identity_matrix(act.module)
    tau_sq_trivial = True
    fixed_all = True
    for a in A.elements():
        mat = act.rho_abelian(a)
        if mat_mul(act.module, mat, mat) != ident:
            tau_sq_trivial = False
        if mat != ident:
            fixed_all = False
    return MinusOneReport(tau_sq_trivial, fixed_all)
