"""
Group families for Hecke pairs
Exact element arithmetic, canonical forms, generating sets and subgroup membership
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

from errors import FamilyMismatchError, InvalidInputError

logger = logging.getLogger(__name__)

# ============ ELEMENTS ============

@dataclass(frozen=True)
class MatrixElt:
    """n x n matrix over Z[1/S] with determinant 1, entries row-major"""
    primes: Tuple[int, ...]
    size: int
    entries: Tuple[Fraction, ...]

    family = 'sl2_s_integers'

    @property
    def params(self) -> tuple:
        return (self.primes, self.size)

    def rows(self) -> List[List[Fraction]]:
        n = self.size
        return [list(self.entries[i * n:(i + 1) * n]) for i in range(n)]

    def __str__(self) -> str:
        return '[' + ','.join('[' + ','.join(str(x) for x in row) + ']' for row in self.rows()) + ']'


@dataclass(frozen=True)
class BSElt:
    """Britton normal form b^r0 a^e1 b^r1 ... a^eL b^tail of BS(m, n).

    letters holds the pairs (r_i, e_{i+1}); r_i lies in [0, m) before a and
    in [0, n) before a^-1, and is nonzero between opposite a-letters.
    """
    m: int
    n: int
    letters: Tuple[Tuple[int, int], ...]
    tail: int

    family = 'baumslag_solitar'

    @property
    def params(self) -> tuple:
        return (self.m, self.n)

    def __str__(self) -> str:
        parts = []
        for r, e in self.letters:
            if r:
                parts.append(f"b^{r}")
            parts.append('a' if e == 1 else 'a^-1')
        if self.tail or not parts:
            parts.append(f"b^{self.tail}")
        return ' '.join(parts)


@dataclass(frozen=True)
class WreathElt:
    """Lamplighter element (f, k): finitely supported f: Z -> Z/order, shift k"""
    order: int
    lamps: Tuple[Tuple[int, int], ...]
    shift: int

    family = 'lamplighter'

    @property
    def params(self) -> tuple:
        return (self.order,)

    def __str__(self) -> str:
        lamps = ','.join(f"{p}:{v}" for p, v in self.lamps)
        return f"({{{lamps}}},{self.shift})"


@dataclass(frozen=True)
class FreeElt:
    """Freely reduced word in a, b stored as syllables (letter, power)"""
    syllables: Tuple[Tuple[str, int], ...]

    family = 'free2'

    @property
    def params(self) -> tuple:
        return ()

    def __str__(self) -> str:
        if not self.syllables:
            return '1'
        return ' '.join(g if k == 1 else f"{g}^{k}" for g, k in self.syllables)


GroupElement = Union[MatrixElt, BSElt, WreathElt, FreeElt]


# ============ MATRIX ARITHMETIC ============

def _mul_matrix(a: MatrixElt, b: MatrixElt) -> MatrixElt:
    n = a.size
    A, B = a.entries, b.entries
    if n == 2:
        entries = (
            A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3],
            A[2] * B[0] + A[3] * B[2], A[2] * B[1] + A[3] * B[3],
        )
    else:
        entries = tuple(
            sum((A[i * n + k] * B[k * n + j] for k in range(n)), Fraction(0))
            for i in range(n) for j in range(n)
        )
    return MatrixElt(a.primes, n, entries)


def _inv_matrix(a: MatrixElt) -> MatrixElt:
    n = a.size
    if n == 2:
        p, q, r, s = a.entries
        return MatrixElt(a.primes, 2, (s, -q, -r, p))
    # Gauss-Jordan on [A | I]
    rows = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a.rows())]
    for col in range(n):
        pivot = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [x / lead for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return MatrixElt(a.primes, n, tuple(x for row in rows for x in row[n:]))


def determinant(a: MatrixElt) -> Fraction:
    """Exact determinant by fraction-preserving elimination"""
    rows = a.rows()
    n = a.size
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        for r in range(col + 1, n):
            factor = rows[r][col] / rows[col][col]
            if factor:
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return det


def _ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b = g = gcd(a, b) >= 0"""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def _lattice_key(a: MatrixElt) -> Tuple[Fraction, ...]:
    """Column Hermite normal form of the lattice a.Z^n.

    Cosets of SL(n, Z) correspond to lattices of covolume 1, so the upper
    triangular basis (positive diagonal, entries right of the diagonal reduced
    modulo it) is a canonical key for the coset a.SL(n, Z).
    """
    n = a.size
    denom = 1
    for x in a.entries:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    cols = [[int(a.entries[i * n + j] * denom) for i in range(n)] for j in range(n)]

    for i in reversed(range(n)):
        for c in range(i):
            if cols[c][i] == 0:
                continue
            u, v = cols[i][i], cols[c][i]
            g, x, y = _ext_gcd(u, v)
            ci, cc = cols[i], cols[c]
            cols[i] = [x * s + y * t for s, t in zip(ci, cc)]
            cols[c] = [(v // g) * s - (u // g) * t for s, t in zip(ci, cc)]
        if cols[i][i] < 0:
            cols[i] = [-s for s in cols[i]]

    for i in reversed(range(n)):
        pivot = cols[i][i]
        for j in range(i + 1, n):
            q = cols[j][i] // pivot
            if q:
                cols[j] = [s - q * t for s, t in zip(cols[j], cols[i])]

    return tuple(Fraction(cols[j][i], denom) for j in range(n) for i in range(j + 1))


# ============ BAUMSLAG-SOLITAR ARITHMETIC ============

def _bs_append_a(m: int, n: int, letters: List[Tuple[int, int]], tail: int, eps: int) -> int:
    """Right-multiply the normal form (letters, tail) by a^eps in place.

    Returns the new tail. Pinches a^-1 b^(mt) a = b^(nt) and a b^(nt) a^-1 = b^(mt)
    are removed; otherwise b^tail is split so the stored exponent is a remainder.
    """
    if letters and letters[-1][1] == -eps:
        last = letters[-1][1]
        div, other = (m, n) if last == -1 else (n, m)
        if tail % div == 0:
            r, _ = letters.pop()
            return r + (tail // div) * other
    modulus, pushed = (m, n) if eps == 1 else (n, m)
    q, r = divmod(tail, modulus)
    letters.append((r, eps))
    return q * pushed


def _mul_bs(a: BSElt, b: BSElt) -> BSElt:
    letters = list(a.letters)
    tail = a.tail
    for r, e in b.letters:
        tail = _bs_append_a(a.m, a.n, letters, tail + r, e)
    return BSElt(a.m, a.n, tuple(letters), tail + b.tail)


def _inv_bs(a: BSElt) -> BSElt:
    letters: List[Tuple[int, int]] = []
    tail = -a.tail
    for r, e in reversed(a.letters):
        tail = _bs_append_a(a.m, a.n, letters, tail, -e) - r
    return BSElt(a.m, a.n, tuple(letters), tail)


def _canonical_bs(a: BSElt) -> BSElt:
    return _mul_bs(BSElt(a.m, a.n, (), 0), a)


# ============ WREATH ARITHMETIC ============

def _mul_wreath(a: WreathElt, b: WreathElt) -> WreathElt:
    # (f, k)(f', k') = (f + k.f', k + k') with (k.f')(x) = f'(x - k)
    lamps: Dict[int, int] = dict(a.lamps)
    for pos, val in b.lamps:
        p = pos + a.shift
        lamps[p] = (lamps.get(p, 0) + val) % a.order
    return WreathElt(a.order, tuple(sorted((p, v) for p, v in lamps.items() if v)), a.shift + b.shift)


def _inv_wreath(a: WreathElt) -> WreathElt:
    lamps = tuple(sorted((p - a.shift, (-v) % a.order) for p, v in a.lamps))
    return WreathElt(a.order, lamps, -a.shift)


def _canonical_wreath(a: WreathElt) -> WreathElt:
    lamps: Dict[int, int] = {}
    for p, v in a.lamps:
        lamps[p] = (lamps.get(p, 0) + v) % a.order
    return WreathElt(a.order, tuple(sorted((p, v) for p, v in lamps.items() if v)), a.shift)


# ============ FREE GROUP ARITHMETIC ============

def _reduce_syllables(syllables: Sequence[Tuple[str, int]]) -> Tuple[Tuple[str, int], ...]:
    word: List[Tuple[str, int]] = []
    for gen, power in syllables:
        if word and word[-1][0] == gen:
            word[-1] = (gen, word[-1][1] + power)
        else:
            word.append((gen, power))
        if word and word[-1][1] == 0:
            word.pop()
    return tuple(word)


def _mul_free(a: FreeElt, b: FreeElt) -> FreeElt:
    return FreeElt(_reduce_syllables(a.syllables + b.syllables))


def _inv_free(a: FreeElt) -> FreeElt:
    return FreeElt(tuple((g, -k) for g, k in reversed(a.syllables)))


_MULTIPLY = {MatrixElt: _mul_matrix, BSElt: _mul_bs, WreathElt: _mul_wreath, FreeElt: _mul_free}
_INVERT = {MatrixElt: _inv_matrix, BSElt: _inv_bs, WreathElt: _inv_wreath, FreeElt: _inv_free}
_CANONICAL = {
    MatrixElt: lambda a: MatrixElt(a.primes, a.size, tuple(Fraction(x) for x in a.entries)),
    BSElt: _canonical_bs,
    WreathElt: _canonical_wreath,
    FreeElt: lambda a: FreeElt(_reduce_syllables(a.syllables)),
}


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    """Product a*b in canonical form; both factors must come from the same family"""
    if type(a) is not type(b) or a.params != b.params:
        raise FamilyMismatchError(f"cannot multiply {a.family}{a.params} by {b.family}{b.params}")
    return _MULTIPLY[type(a)](a, b)


def invert(a: GroupElement) -> GroupElement:
    """Inverse in canonical form"""
    return _INVERT[type(a)](a)


def canonicalize(a: GroupElement) -> GroupElement:
    """Re-derive the canonical form of an element (idempotent)"""
    return _CANONICAL[type(a)](a)


def power(a: GroupElement, k: int, identity: GroupElement) -> GroupElement:
    """a^k by repeated squaring"""
    if k < 0:
        a, k = invert(a), -k
    result = identity
    while k:
        if k & 1:
            result = multiply(result, a)
        a = multiply(a, a)
        k >>= 1
    return result


# ============ GENERATORS ============

@dataclass(frozen=True)
class Generator:
    """A named generator.

    name is the base name used in words ("T", "a", "l"), sign is +1 for the
    generator itself and -1 for its inverse, word spells the element in the
    generating set of the ambient group (indices into gamma_generators).
    """
    name: str
    sign: int
    element: GroupElement
    word: Tuple[int, ...] = ()

    @property
    def label(self) -> str:
        return self.name if self.sign == 1 else f"{self.name}^-1"


# ============ FAMILIES ============

class GroupFamily(ABC):
    """A concrete family of groups with a distinguished subgroup"""

    tag: str = ''

    @abstractmethod
    def identity(self) -> GroupElement:
        ...

    @abstractmethod
    def gamma_generators(self) -> List[Generator]:
        """Symmetric generating set of the ambient group, unit lengths"""

    @abstractmethod
    def lambda_generators(self, window: int) -> List[Generator]:
        """Symmetric generating set of the subgroup, words over gamma_generators()"""

    @abstractmethod
    def in_lambda(self, g: GroupElement) -> bool:
        ...

    @abstractmethod
    def coset_key(self, g: GroupElement) -> Hashable:
        """Canonical key of the left coset g.Lambda"""

    @abstractmethod
    def encode(self, g: GroupElement) -> str:
        ...

    @abstractmethod
    def decode(self, text: str) -> GroupElement:
        ...

    @abstractmethod
    def describe(self) -> str:
        ...

    def lambda_window(self, g: GroupElement) -> int:
        """Smallest window whose subgroup generators reach the whole orbit of g.Lambda"""
        return 0

    def check(self, g: GroupElement) -> None:
        if g.family != self.tag or g.params != self.identity().params:
            raise FamilyMismatchError(f"{g} is not an element of {self.describe()}")


def is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(p ** 0.5) + 1))


class SpecialLinearFamily(GroupFamily):
    """SL(n, Z[1/S]) with the subgroup SL(n, Z)"""

    tag = 'sl2_s_integers'

    def __init__(self, primes: Sequence[int], size: int = 2):
        primes = tuple(sorted(set(int(p) for p in primes)))
        if not primes or not all(is_prime(p) for p in primes):
            raise InvalidInputError(f"prime set must be a nonempty set of primes, got {list(primes)}")
        if size < 2:
            raise InvalidInputError(f"matrix size must be at least 2, got {size}")
        self.primes = primes
        self.size = size

    def element(self, rows: Sequence[Sequence[Union[int, str, Fraction]]]) -> MatrixElt:
        """Build a validated matrix element from rows of numbers or strings like '1/2'"""
        n = self.size
        if len(rows) != n or any(len(row) != n for row in rows):
            raise InvalidInputError(f"expected a {n}x{n} matrix")
        entries = tuple(Fraction(x) for row in rows for x in row)
        elt = MatrixElt(self.primes, n, entries)
        for x in entries:
            d = x.denominator
            for p in self.primes:
                while d % p == 0:
                    d //= p
            if d != 1:
                raise InvalidInputError(f"entry {x} has a denominator outside the primes {list(self.primes)}")
        if determinant(elt) != 1:
            raise InvalidInputError(f"matrix {elt} does not have determinant 1")
        return elt

    def identity(self) -> MatrixElt:
        n = self.size
        return MatrixElt(self.primes, n, tuple(Fraction(int(i == j)) for i in range(n) for j in range(n)))

    def _unit(self, i: int, j: int, value: Fraction) -> MatrixElt:
        n = self.size
        entries = list(self.identity().entries)
        entries[i * n + j] = Fraction(value)
        return MatrixElt(self.primes, n, tuple(entries))

    def _diag(self, p: int) -> MatrixElt:
        n = self.size
        entries = list(self.identity().entries)
        entries[0], entries[n + 1] = Fraction(p), Fraction(1, p)
        return MatrixElt(self.primes, n, tuple(entries))

    def _lambda_elements(self) -> List[Tuple[str, MatrixElt]]:
        if self.size == 2:
            return [('T', self._unit(0, 1, Fraction(1))),
                    ('S', MatrixElt(self.primes, 2, tuple(map(Fraction, (0, -1, 1, 0)))))]
        n = self.size
        return [(f"E{i + 1}{j + 1}", self._unit(i, j, Fraction(1)))
                for i in range(n) for j in range(n) if i != j]

    def gamma_generators(self) -> List[Generator]:
        named = self._lambda_elements() + [(f"D{p}", self._diag(p)) for p in self.primes]
        gens = []
        for name, elt in named:
            gens.append(Generator(name, 1, elt, (len(gens),)))
            gens.append(Generator(name, -1, invert(elt), (len(gens),)))
        return gens

    def lambda_generators(self, window: int) -> List[Generator]:
        count = 2 * len(self._lambda_elements())
        return [replace(g) for g in self.gamma_generators()[:count]]

    def in_lambda(self, g: MatrixElt) -> bool:
        return all(x.denominator == 1 for x in g.entries)

    def coset_key(self, g: MatrixElt) -> Hashable:
        return _lattice_key(g)

    def encode(self, g: MatrixElt) -> str:
        return ','.join(str(x) for x in g.entries)

    def decode(self, text: str) -> MatrixElt:
        entries = tuple(Fraction(x) for x in text.split(','))
        if len(entries) != self.size ** 2:
            raise InvalidInputError(f"cannot decode matrix element {text!r}")
        return MatrixElt(self.primes, self.size, entries)

    def describe(self) -> str:
        ring = 'Z[1/' + ','.join(str(p) for p in self.primes) + ']'
        return f"SL({self.size},{ring}) > SL({self.size},Z)"


class BaumslagSolitarFamily(GroupFamily):
    """BS(m, n) = <a, b | a^-1 b^m a = b^n> with the subgroup <b>"""

    tag = 'baumslag_solitar'

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise InvalidInputError(f"BS(m, n) needs m, n >= 1, got ({m}, {n})")
        self.m, self.n = int(m), int(n)

    def identity(self) -> BSElt:
        return BSElt(self.m, self.n, (), 0)

    def a(self, k: int = 1) -> BSElt:
        return power(BSElt(self.m, self.n, ((0, 1),), 0), k, self.identity())

    def b(self, k: int = 1) -> BSElt:
        return BSElt(self.m, self.n, (), k)

    def gamma_generators(self) -> List[Generator]:
        return [Generator('a', 1, self.a(), (0,)), Generator('a', -1, self.a(-1), (1,)),
                Generator('b', 1, self.b(), (2,)), Generator('b', -1, self.b(-1), (3,))]

    def lambda_generators(self, window: int) -> List[Generator]:
        return self.gamma_generators()[2:]

    def in_lambda(self, g: BSElt) -> bool:
        return not g.letters

    def coset_key(self, g: BSElt) -> Hashable:
        return g.letters

    def encode(self, g: BSElt) -> str:
        letters = ','.join(f"{r}:{e}" for r, e in g.letters)
        return f"{letters}|{g.tail}"

    def decode(self, text: str) -> BSElt:
        letters, _, tail = text.partition('|')
        pairs = tuple(tuple(int(x) for x in item.split(':')) for item in letters.split(',') if item)
        return BSElt(self.m, self.n, pairs, int(tail))

    def describe(self) -> str:
        return f"BS({self.m},{self.n}) > <b>"


class LamplighterFamily(GroupFamily):
    """(Z/order) wr Z with the subgroup of lamp configurations supported on N"""

    tag = 'lamplighter'

    def __init__(self, order: int):
        if order < 2:
            raise InvalidInputError(f"lamp group order must be at least 2, got {order}")
        self.order = int(order)

    def identity(self) -> WreathElt:
        return WreathElt(self.order, (), 0)

    def lamp(self, position: int = 0, value: int = 1) -> WreathElt:
        value %= self.order
        return WreathElt(self.order, ((position, value),) if value else (), 0)

    def shift(self, k: int = 1) -> WreathElt:
        return WreathElt(self.order, (), k)

    def gamma_generators(self) -> List[Generator]:
        gens = [Generator('l', 1, self.lamp(), (0,))]
        if self.order > 2:
            gens.append(Generator('l', -1, self.lamp(value=-1), (1,)))
        t = len(gens)
        gens += [Generator('t', 1, self.shift(1), (t,)), Generator('t', -1, self.shift(-1), (t + 1,))]
        return gens

    def lambda_generators(self, window: int) -> List[Generator]:
        # lamps at positions 0 <= j < window: t^j l t^-j
        gens = self.gamma_generators()
        t, t_inv = len(gens) - 2, len(gens) - 1
        out = []
        for j in range(window):
            conj = (t,) * j
            back = (t_inv,) * j
            out.append(Generator(f"l@{j}", 1, self.lamp(j), conj + (0,) + back))
            if self.order > 2:
                out.append(Generator(f"l@{j}", -1, self.lamp(j, -1), conj + (1,) + back))
        return out

    def lambda_window(self, g: WreathElt) -> int:
        # lamps at positions >= shift fix g.Lambda
        return max(g.shift, 0)

    def in_lambda(self, g: WreathElt) -> bool:
        return g.shift == 0 and all(p >= 0 for p, _ in g.lamps)

    def coset_key(self, g: WreathElt) -> Hashable:
        return (tuple((p, v) for p, v in g.lamps if p < g.shift), g.shift)

    def encode(self, g: WreathElt) -> str:
        lamps = ','.join(f"{p}:{v}" for p, v in g.lamps)
        return f"{lamps}|{g.shift}"

    def decode(self, text: str) -> WreathElt:
        lamps, _, shift = text.partition('|')
        pairs = tuple(tuple(int(x) for x in item.split(':')) for item in lamps.split(',') if item)
        return _canonical_wreath(WreathElt(self.order, pairs, int(shift)))

    def describe(self) -> str:
        return f"Z/{self.order} wr Z > (+)_N Z/{self.order}"


class FreeFamily(GroupFamily):
    """Free group on a, b with the subgroup <a> (not almost normal)"""

    tag = 'free2'

    def identity(self) -> FreeElt:
        return FreeElt(())

    def letter(self, gen: str, k: int = 1) -> FreeElt:
        return FreeElt(((gen, k),) if k else ())

    def gamma_generators(self) -> List[Generator]:
        return [Generator('a', 1, self.letter('a'), (0,)), Generator('a', -1, self.letter('a', -1), (1,)),
                Generator('b', 1, self.letter('b'), (2,)), Generator('b', -1, self.letter('b', -1), (3,))]

    def lambda_generators(self, window: int) -> List[Generator]:
        return self.gamma_generators()[:2]

    def in_lambda(self, g: FreeElt) -> bool:
        return not g.syllables or (len(g.syllables) == 1 and g.syllables[0][0] == 'a')

    def coset_key(self, g: FreeElt) -> Hashable:
        if g.syllables and g.syllables[-1][0] == 'a':
            return g.syllables[:-1]
        return g.syllables

    def encode(self, g: FreeElt) -> str:
        return ','.join(f"{s}:{k}" for s, k in g.syllables)

    def decode(self, text: str) -> FreeElt:
        items = [item.split(':') for item in text.split(',') if item]
        return FreeElt(_reduce_syllables([(s, int(k)) for s, k in items]))

    def describe(self) -> str:
        return "F(a,b) > <a>"


# ============ PAIR PRESENTATION ============

@dataclass(frozen=True)
class PairPresentation:
    """A group family instance with generating sets, membership and budgets"""
    family: GroupFamily
    gamma_generators: Tuple[Generator, ...]
    lambda_generators: Tuple[Generator, ...]
    max_ball: int
    max_orbit: int
    max_radius: int
    use_coset_keys: bool = True

    @property
    def identity(self) -> GroupElement:
        return self.family.identity()

    def in_lambda(self, g: GroupElement) -> bool:
        return self.family.in_lambda(g)

    def coset_key(self, g: GroupElement) -> Optional[Hashable]:
        """Canonical coset key, or None when dedup goes through the membership oracle"""
        return self.family.coset_key(g) if self.use_coset_keys else None

    def lambda_generators_for(self, g: GroupElement) -> Tuple[Generator, ...]:
        """Subgroup generators, widened when the orbit of g.Lambda needs more than the default window"""
        window = self.family.lambda_window(g)
        if window <= self.max_radius:
            return self.lambda_generators
        logger.info(f"Widening the subgroup window to {window} for {g}")
        return tuple(self.family.lambda_generators(window))

    def same_coset(self, g: GroupElement, h: GroupElement) -> bool:
        return self.family.in_lambda(multiply(invert(g), h))

    def generator_names(self) -> List[str]:
        return [g.label for g in self.gamma_generators]

    def validate(self) -> None:
        """Check the presentation invariants, raising InvalidInputError on failure"""
        e = self.identity
        for gens, what in ((self.gamma_generators, 'ambient'), (self.lambda_generators, 'subgroup')):
            elements = [g.element for g in gens]
            if e in elements:
                raise InvalidInputError(f"the identity is listed as a{'n' if what == 'ambient' else ''} {what} generator")
            for g in elements:
                if invert(g) not in elements:
                    raise InvalidInputError(f"{what} generators are not closed under inversion: {g}")
        for g in self.lambda_generators:
            if not self.family.in_lambda(g.element):
                raise InvalidInputError(f"subgroup generator {g.label} fails the membership test")
            if word_element(self, g.word) != g.element:
                raise InvalidInputError(f"subgroup generator {g.label} does not match its word")

    def with_generator_order(self, order: Sequence[int]) -> 'PairPresentation':
        """Same pair with the ambient generators listed in a different order"""
        if sorted(order) != list(range(len(self.gamma_generators))):
            raise InvalidInputError(f"{list(order)} is not a permutation of the generators")
        position = {old: new for new, old in enumerate(order)}
        gamma = tuple(replace(self.gamma_generators[old], word=(new,)) for new, old in enumerate(order))
        lam = tuple(replace(g, word=tuple(position[i] for i in g.word)) for g in self.lambda_generators)
        return replace(self, gamma_generators=gamma, lambda_generators=lam)


def build_presentation(
    family: GroupFamily,
    max_ball: int = 200_000,
    max_orbit: int = 10_000,
    max_radius: int = 6,
    use_coset_keys: bool = True,
) -> PairPresentation:
    """
    Assemble and validate a pair presentation

    Args:
        family: The group family instance
        max_ball: Largest number of cosets a ball table may hold
        max_orbit: Largest subgroup orbit enumerated before giving up
        max_radius: Largest radius tables are built for; also sizes the lamp
            window of the lamplighter subgroup
        use_coset_keys: Use canonical coset keys (False falls back to the
            membership oracle)

    Returns:
        A validated PairPresentation
    """
    pres = PairPresentation(
        family=family,
        gamma_generators=tuple(family.gamma_generators()),
        lambda_generators=tuple(family.lambda_generators(max_radius)),
        max_ball=max_ball,
        max_orbit=max_orbit,
        max_radius=max_radius,
        use_coset_keys=use_coset_keys,
    )
    pres.validate()
    return pres


def in_lambda(pres: PairPresentation, g: GroupElement) -> bool:
    """Subgroup membership oracle"""
    pres.family.check(g)
    return pres.in_lambda(g)


def word_element(pres: PairPresentation, word: Sequence[int]) -> GroupElement:
    """Evaluate a word given as ambient generator indices"""
    g = pres.identity
    for i in word:
        g = multiply(g, pres.gamma_generators[i].element)
    return g


# ============ WORDS ============

_TOKEN_RE = re.compile(r'^([A-Za-z][A-Za-z0-9@]*)(?:\^(-?\d+))?$')


def parse_word(pres: PairPresentation, text: str) -> GroupElement:
    """Parse a word like 'a b^-1 a b' into an element"""
    by_name = {g.name: g for g in pres.gamma_generators if g.sign == 1}
    g = pres.identity
    for token in text.replace('*', ' ').split():
        match = _TOKEN_RE.match(token)
        if not match or match.group(1) not in by_name:
            raise InvalidInputError(f"unknown generator in word: {token!r} (known: {sorted(by_name)})")
        exponent = int(match.group(2)) if match.group(2) is not None else 1
        g = multiply(g, power(by_name[match.group(1)].element, exponent, pres.identity))
    return g


def format_word(pres: PairPresentation, word: Sequence[int]) -> str:
    """Render generator indices as 'a^2 b^-1'; the empty word is '1'"""
    runs: List[List[int]] = []
    for i in word:
        if runs and runs[-1][0] == i:
            runs[-1][1] += 1
        else:
            runs.append([i, 1])
    tokens = []
    for i, count in runs:
        gen = pres.gamma_generators[i]
        exponent = gen.sign * count
        tokens.append(gen.name if exponent == 1 else f"{gen.name}^{exponent}")
    return ' '.join(tokens) if tokens else '1'


# ============ LENGTH ============

def element_length(pres: PairPresentation, g: GroupElement, budget: Optional[int] = None) -> Optional[int]:
    """
    Word length of g by bidirectional breadth-first search

    Args:
        pres: The pair presentation (its ambient generators define the length)
        g: Element to measure
        budget: Maximum number of visited elements (defaults to max_ball)

    Returns:
        The word length, or None if the budget ran out first
    """
    budget = pres.max_ball if budget is None else budget
    e = pres.identity
    if g == e:
        return 0
    gens = [gen.element for gen in pres.gamma_generators]
    sides = [{e: 0}, {g: 0}]
    frontiers = [[e], [g]]
    depth = [0, 0]
    while frontiers[0] and frontiers[1]:
        side = 0 if len(frontiers[0]) <= len(frontiers[1]) else 1
        seen, other = sides[side], sides[1 - side]
        best = None
        next_frontier = []
        for x in frontiers[side]:
            for s in gens:
                y = multiply(x, s)
                if y in seen:
                    continue
                seen[y] = depth[side] + 1
                next_frontier.append(y)
                if y in other:
                    total = depth[side] + 1 + other[y]
                    best = total if best is None else min(best, total)
        if best is not None:
            return best
        if len(sides[0]) + len(sides[1]) > budget:
            logger.info(f"⚠️ Length search for {g} stopped after {budget} elements")
            return None
        frontiers[side] = next_frontier
        depth[side] += 1
    return None
