from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from math import factorial
from typing import TYPE_CHECKING, List, Tuple

from lepage_synthesis.errors import IndexRangeError, OrderCapError

if TYPE_CHECKING:
    from lepage_synthesis.syntax.kernel import ScalarExpr

MultiIndex = Tuple[int, ...]


def canonical(indices) -> MultiIndex:
    return tuple(sorted(indices))


def merge_index(J: MultiIndex, i: int) -> MultiIndex:
    return tuple(sorted(J + (i,)))


@lru_cache(maxsize=None)
def multiplicity(J: MultiIndex) -> int:
    """Number of distinct orderings of the multiset J."""
    count = factorial(len(J))
    for c in Counter(J).values():
        count //= factorial(c)
    return count


@dataclass(eq=True, frozen=True)
class JetSpace:
    n: int
    m: int
    order_cap: int
    metric: bool = False

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.order_cap < 0:
            raise IndexRangeError(f"Invalid jet space n={self.n}, m={self.m}, order_cap={self.order_cap}")
        if self.metric and self.m != self.n * (self.n + 1) // 2:
            raise IndexRangeError(f"Metric space over n={self.n} needs m={self.n * (self.n + 1) // 2}, got {self.m}")

    def multi_indices(self, length: int) -> List[MultiIndex]:
        return list(combinations_with_replacement(range(1, self.n + 1), length))

    def multi_indices_upto(self, length: int) -> List[MultiIndex]:
        return [J for k in range(length + 1) for J in self.multi_indices(k)]

    @cached_property
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((a, b) for a in range(1, self.n + 1) for b in range(a, self.n + 1))

    def pair_of(self, sigma: int) -> Tuple[int, int]:
        return self.pairs[sigma - 1]

    def field_of_pair(self, a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        return self.pairs.index((a, b)) + 1

    def field_symbol(self, sigma: int) -> str:
        if self.metric:
            a, b = self.pair_of(sigma)
            return f"g{a}{b}"
        return f"y{sigma}"

    def contact_symbol(self, sigma: int) -> str:
        return "w" + self.field_symbol(sigma)[1:]

    def check_base(self, i: int):
        if not 1 <= i <= self.n:
            raise IndexRangeError(f"Base index {i} exceeds base dimension {self.n}")

    def check_field(self, sigma: int, J: MultiIndex = ()):
        if not 1 <= sigma <= self.m:
            raise IndexRangeError(f"Field label {sigma} outside 1..{self.m}")
        for i in J:
            self.check_base(i)
        if len(J) > self.order_cap:
            raise OrderCapError(f"Jet order {len(J)} exceeds order cap {self.order_cap}")


@dataclass(eq=True, frozen=True)
class Atom:
    @cached_property
    def key(self) -> tuple:
        return atom_key(self)


@dataclass(eq=True, frozen=True)
class BaseCoord(Atom):
    index: int


@dataclass(eq=True, frozen=True)
class FieldCoord(Atom):
    field: int
    jet: MultiIndex = ()

    @property
    def order(self) -> int:
        return len(self.jet)


@dataclass(eq=True, frozen=True)
class InverseAtom(Atom):
    poly: "ScalarExpr"

    @cached_property
    def target(self):
        # the single atom a when poly == a, so that a * inv(a) cancels in normal form
        return self.poly.single_atom()


@dataclass(eq=True, frozen=True)
class SqrtAtom(Atom):
    poly: "ScalarExpr"


@dataclass(eq=True, frozen=True)
class OpaqueAtom(Atom):
    name: str
    indices: Tuple[int, ...] = ()
    constant: bool = False


def atom_key(atom: Atom) -> tuple:
    match atom:
        case BaseCoord(i):
            return (0, i)
        case FieldCoord(sigma, J):
            return (1, sigma, len(J), J)
        case InverseAtom(P):
            return (2, P.sort_key)
        case SqrtAtom(P):
            return (3, P.sort_key)
        case OpaqueAtom(name, indices, _):
            return (4, name, indices)
        case _:
            raise TypeError(f'Unknown atom type: {type(atom)}')
