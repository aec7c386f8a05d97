import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import sympy
from sympy.combinatorics import Permutation
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, PolyRing

from lepage_synthesis.errors import (
    OpaqueDerivativeError,
    OrderCapError,
    SingularExpressionError,
)
from lepage_synthesis.syntax.jet import (
    Atom,
    BaseCoord,
    FieldCoord,
    InverseAtom,
    JetSpace,
    OpaqueAtom,
    SqrtAtom,
    canonical,
    merge_index,
    multiplicity,
)

Coefficient = QQ.dtype
Monomial = Tuple[Tuple[Atom, int], ...]


def coefficient(value) -> Coefficient:
    match value:
        case bool():
            raise TypeError(f'Unknown coefficient type: {type(value)}')
        case int():
            return QQ(value)
        case Fraction():
            return QQ(value.numerator, value.denominator)
        case sympy.Rational():
            return QQ(int(value.p), int(value.q))
        case _ if isinstance(value, Coefficient):
            return value
        case _:
            raise TypeError(f'Unknown coefficient type: {type(value)}')


def _atom_order(item) -> tuple:
    return item[0].key


def mono_key(mono: Monomial) -> tuple:
    return tuple((atom.key, e) for atom, e in mono)


@lru_cache(maxsize=None)
def polynomial_ring(ngens: int) -> PolyRing:
    """Sparse polynomial ring over QQ with generators t0, ..., t<ngens-1>."""
    return PolyRing(sympy.symbols(f"t0:{ngens}"), QQ)


def ring_generators(*exprs: "ScalarExpr") -> Tuple[Atom, ...]:
    """Atoms of exprs in monomial order; position k is ring generator t<k>."""
    return tuple(sorted(frozenset().union(*(e.atoms for e in exprs)), key=lambda a: a.key))


def to_ring(e: "ScalarExpr", gens: Tuple[Atom, ...]) -> PolyElement:
    R = polynomial_ring(len(gens))
    index = {atom: k for k, atom in enumerate(gens)}
    terms = {}
    for mono, c in e.terms.items():
        exps = [0] * len(gens)
        for atom, p in mono:
            exps[index[atom]] = p
        terms[tuple(exps)] = c
    return R.from_dict(terms)


def from_ring(p: PolyElement, gens: Tuple[Atom, ...]) -> "ScalarExpr":
    acc: Dict[Monomial, Coefficient] = {}
    for exps, c in p.items():
        acc[tuple((gens[k], e) for k, e in enumerate(exps) if e)] = c
    return _normalized(acc)


@dataclass(frozen=True, eq=False)
class ScalarExpr:
    """Sum of rational multiples of atom monomials, kept in normal form.

    Instances are only built through the arithmetic below or `from_terms`, which
    drop zero coefficients, reduce s^2 -> P for square-root atoms, and cancel
    a * inv(a) for inverses of single atoms.
    """

    terms: Dict[Monomial, Coefficient]

    @staticmethod
    def from_terms(terms: Mapping[Monomial, object]) -> "ScalarExpr":
        return _normalized({mono: coefficient(c) for mono, c in terms.items()})

    @staticmethod
    def constant(value) -> "ScalarExpr":
        c = coefficient(value)
        return ScalarExpr({(): c} if c else {})

    @staticmethod
    def from_atom(atom: Atom) -> "ScalarExpr":
        return ScalarExpr({((atom, 1),): QQ(1)})

    @cached_property
    def _hash(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarExpr):
            return NotImplemented
        return self is other or self.terms == other.terms

    def __repr__(self) -> str:
        from lepage_synthesis.syntax.printing import expr_to_text
        return f"ScalarExpr({expr_to_text(self)})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> Coefficient:
        return self.terms.get((), QQ(0))

    def single_atom(self) -> Optional[Atom]:
        if len(self.terms) != 1:
            return None
        (mono, c), = self.terms.items()
        if c == 1 and len(mono) == 1 and mono[0][1] == 1:
            return mono[0][0]
        return None

    @cached_property
    def sort_key(self) -> tuple:
        return tuple(sorted((mono_key(mono), c) for mono, c in self.terms.items()))

    def sorted_terms(self) -> List[Tuple[Monomial, Coefficient]]:
        return sorted(self.terms.items(), key=lambda item: mono_key(item[0]))

    @cached_property
    def atoms(self) -> frozenset:
        return frozenset(atom for mono in self.terms for atom, _ in mono)

    @cached_property
    def all_atoms(self) -> frozenset:
        """Atoms at any depth, including those inside inverse and square-root atoms."""
        found = set(self.atoms)
        for atom in self.atoms:
            if isinstance(atom, (InverseAtom, SqrtAtom)):
                found |= atom.poly.all_atoms
        return frozenset(found)

    @cached_property
    def coordinates(self) -> frozenset:
        return frozenset(a for a in self.all_atoms if isinstance(a, (BaseCoord, FieldCoord)))

    @cached_property
    def jet_order(self) -> int:
        return max((a.order for a in self.coordinates if isinstance(a, FieldCoord)), default=0)

    @cached_property
    def has_opaque(self) -> bool:
        return any(isinstance(a, OpaqueAtom) for a in self.all_atoms)

    def monic(self) -> Tuple[Coefficient, "ScalarExpr"]:
        lead = min(self.terms.items(), key=lambda item: mono_key(item[0]))[1]
        return lead, self.scale(1 / lead)

    def scale(self, c) -> "ScalarExpr":
        c = coefficient(c)
        if not c:
            return ZERO
        return ScalarExpr({mono: v * c for mono, v in self.terms.items()})

    def __add__(self, other) -> "ScalarExpr":
        other = as_expr(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        acc = dict(self.terms)
        for mono, c in other.terms.items():
            v = acc.get(mono, 0) + c
            if v:
                acc[mono] = v
            else:
                acc.pop(mono, None)
        return ScalarExpr(acc)

    __radd__ = __add__

    def __neg__(self) -> "ScalarExpr":
        return ScalarExpr({mono: -c for mono, c in self.terms.items()})

    def __sub__(self, other) -> "ScalarExpr":
        return self + (-as_expr(other))

    def __rsub__(self, other) -> "ScalarExpr":
        return as_expr(other) + (-self)

    def __mul__(self, other) -> "ScalarExpr":
        other = as_expr(other)
        if not self.terms or not other.terms:
            return ZERO
        if other.is_constant:
            return self.scale(other.constant_value())
        if self.is_constant:
            return other.scale(self.constant_value())
        gens = ring_generators(self, other)
        return from_ring(to_ring(self, gens) * to_ring(other, gens), gens)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ScalarExpr":
        if k < 0:
            return inverse(self) ** (-k)
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other) -> "ScalarExpr":
        other = as_expr(other)
        if other.is_constant:
            if other.is_zero:
                raise SingularExpressionError("Division by zero")
            return self.scale(1 / other.constant_value())
        return self * inverse(other)


def as_expr(value) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    return ScalarExpr.constant(value)


ZERO = ScalarExpr({})
ONE = ScalarExpr({(): QQ(1)})


def _needs_reduction(mono: Monomial) -> bool:
    for atom, e in mono:
        if type(atom) is SqrtAtom and e >= 2:
            return True
        if type(atom) is InverseAtom and atom.target is not None:
            if any(a == atom.target for a, _ in mono):
                return True
    return False


def _reduce_monomial(mono: Monomial, c: Coefficient) -> ScalarExpr:
    powers = dict(mono)
    for atom in list(powers):
        if type(atom) is InverseAtom and atom.target in powers:
            k = min(powers[atom], powers[atom.target])
            powers[atom] -= k
            powers[atom.target] -= k
    extra = ONE
    for atom in list(powers):
        if type(atom) is SqrtAtom and powers[atom] >= 2:
            q, r = divmod(powers[atom], 2)
            powers[atom] = r
            extra = extra * atom.poly ** q
    reduced = tuple(sorted(((a, e) for a, e in powers.items() if e), key=_atom_order))
    return ScalarExpr({reduced: c}) * extra


def _normalized(acc: Dict[Monomial, Coefficient]) -> ScalarExpr:
    out: Dict[Monomial, Coefficient] = {}
    pending = []
    for mono, c in acc.items():
        if not c:
            continue
        if _needs_reduction(mono):
            pending.append((mono, c))
        else:
            out[mono] = c
    for mono, c in pending:
        for m2, c2 in _reduce_monomial(mono, c).terms.items():
            out[m2] = out.get(m2, 0) + c2
    if pending:
        out = {mono: c for mono, c in out.items() if c}
    return ScalarExpr(out)


class ExprSum:
    """Accumulates many expressions without rebuilding a normal form after each addition."""

    def __init__(self):
        self.acc: Dict[Monomial, Coefficient] = {}

    def add(self, e: ScalarExpr, c=1):
        for mono, v in e.terms.items():
            self.acc[mono] = self.acc.get(mono, 0) + v * c

    def value(self) -> ScalarExpr:
        return _normalized(self.acc)


def x(i: int) -> ScalarExpr:
    return ScalarExpr.from_atom(BaseCoord(i))


def y(sigma: int, J: Iterable[int] = ()) -> ScalarExpr:
    return ScalarExpr.from_atom(FieldCoord(sigma, canonical(J)))


def opaque(name: str, indices: Tuple[int, ...] = (), constant: bool = False) -> ScalarExpr:
    return ScalarExpr.from_atom(OpaqueAtom(name, tuple(indices), constant))


def _is_nonzero(e: ScalarExpr) -> bool:
    if e.is_zero:
        return False
    if not any(isinstance(a, InverseAtom) for a in e.all_atoms):
        return True
    return not equals_zero(e)


def _invert_atom(atom: Atom) -> ScalarExpr:
    match atom:
        case InverseAtom(P):
            return P
        case SqrtAtom(P):
            return ScalarExpr.from_atom(atom) * inverse(P)
        case _:
            return ScalarExpr.from_atom(InverseAtom(ScalarExpr.from_atom(atom)))


def inverse(e: ScalarExpr) -> ScalarExpr:
    """Multiplicative inverse; e must not vanish identically."""
    if e.is_constant:
        if e.is_zero:
            raise SingularExpressionError("Cannot invert the zero expression")
        return ScalarExpr.constant(1 / e.constant_value())
    if len(e.terms) == 1:
        (mono, c), = e.terms.items()
        result = ScalarExpr.constant(1 / c)
        for atom, p in mono:
            result = result * _invert_atom(atom) ** p
        return result
    if not _is_nonzero(e):
        raise SingularExpressionError("Cannot invert an expression that vanishes identically")
    lead, monic = e.monic()
    return ScalarExpr.from_atom(InverseAtom(monic)).scale(1 / lead)


def sqrt(e: ScalarExpr) -> ScalarExpr:
    if e.is_constant:
        value = sympy.sqrt(sympy.Rational(int(e.constant_value().numerator), int(e.constant_value().denominator)))
        if value.is_Rational:
            return ScalarExpr.constant(value)
    if not _is_nonzero(e):
        raise SingularExpressionError("Cannot take the square root of the zero expression")
    return ScalarExpr.from_atom(SqrtAtom(e))


@dataclass(eq=True, frozen=True)
class PartialRule:
    target: Atom


@dataclass(eq=True, frozen=True)
class FormalRule:
    index: int
    space: JetSpace


def _coordinate_derivative(atom: Atom, rule) -> Optional[ScalarExpr]:
    match rule:
        case PartialRule(target):
            return ONE if atom == target else None
        case FormalRule(i, space):
            match atom:
                case BaseCoord(j):
                    return ONE if i == j else None
                case FieldCoord(sigma, J):
                    if len(J) + 1 > space.order_cap:
                        raise OrderCapError(f"d_{i} of {space.field_symbol(sigma)} jet {J} exceeds order cap {space.order_cap}")
                    return ScalarExpr.from_atom(FieldCoord(sigma, merge_index(J, i)))
                case OpaqueAtom(name, _, constant):
                    if constant:
                        return None
                    raise OpaqueDerivativeError(f"Formal derivative of opaque atom {name} is undefined")
                case _:
                    raise TypeError(f'Unknown atom type: {type(atom)}')
        case _:
            raise TypeError(f'Unknown derivation rule type: {type(rule)}')


def _atom_derivative(atom: Atom, rule) -> Optional[ScalarExpr]:
    match atom:
        case InverseAtom(P):
            dP = derive(P, rule)
            if dP.is_zero:
                return None
            return -(dP * ScalarExpr.from_atom(atom) ** 2)
        case SqrtAtom(P):
            dP = derive(P, rule)
            if dP.is_zero:
                return None
            return (dP * ScalarExpr.from_atom(atom) * inverse(P)).scale(QQ(1, 2))
        case _:
            return _coordinate_derivative(atom, rule)


@lru_cache(maxsize=None)
def derive(e: ScalarExpr, rule) -> ScalarExpr:
    if e.is_constant:
        return ZERO
    if isinstance(rule, PartialRule) and rule.target not in e.coordinates:
        return ZERO
    gens = ring_generators(e)
    poly = to_ring(e, gens)
    acc = ExprSum()
    # chain rule over the atoms, each treated as a ring generator
    for t, atom in zip(poly.ring.gens, gens):
        da = _atom_derivative(atom, rule)
        if da is not None:
            acc.add(from_ring(poly.diff(t), gens) * da)
    return acc.value()


def raw_partial(e: ScalarExpr, atom: Atom) -> ScalarExpr:
    return derive(e, PartialRule(atom))


def partial(e: ScalarExpr, sigma: int, K: Sequence[int] = ()) -> ScalarExpr:
    """Symmetrized partial derivative with respect to y^sigma_K."""
    J = canonical(K)
    raw = raw_partial(e, FieldCoord(sigma, J))
    weight = multiplicity(J)
    return raw if weight == 1 else raw.scale(QQ(1, weight))


def base_partial(e: ScalarExpr, i: int) -> ScalarExpr:
    return raw_partial(e, BaseCoord(i))


def formal_derivative(e: ScalarExpr, i: int, space: JetSpace) -> ScalarExpr:
    space.check_base(i)
    return derive(e, FormalRule(i, space))


def formal_derivatives(e: ScalarExpr, indices: Iterable[int], space: JetSpace) -> ScalarExpr:
    for i in indices:
        e = formal_derivative(e, i, space)
    return e


@lru_cache(maxsize=None)
def _atom_gradient(atom: Atom) -> Tuple[Tuple[Atom, ScalarExpr], ...]:
    match atom:
        case BaseCoord() | FieldCoord():
            return ((atom, ONE),)
        case InverseAtom(P):
            factor = -(ScalarExpr.from_atom(atom) ** 2)
            return tuple((a, factor * g) for a, g in gradient(P).items())
        case SqrtAtom(P):
            factor = (ScalarExpr.from_atom(atom) * inverse(P)).scale(QQ(1, 2))
            return tuple((a, factor * g) for a, g in gradient(P).items())
        case OpaqueAtom(name, _, constant):
            if constant:
                return ()
            raise OpaqueDerivativeError(f"Differential of opaque atom {name} is undefined")
        case _:
            raise TypeError(f'Unknown atom type: {type(atom)}')


@lru_cache(maxsize=None)
def gradient(e: ScalarExpr) -> Dict[Atom, ScalarExpr]:
    """All raw partials of e with respect to the coordinates it depends on, in one pass."""
    if e.is_constant:
        return {}
    gens = ring_generators(e)
    poly = to_ring(e, gens)
    acc: Dict[Atom, ExprSum] = {}
    for t, atom in zip(poly.ring.gens, gens):
        grad = _atom_gradient(atom)
        if not grad:
            continue
        de = from_ring(poly.diff(t), gens)
        for coord, da in grad:
            acc.setdefault(coord, ExprSum()).add(de * da)
    result = {}
    for coord, bucket in acc.items():
        value = bucket.value()
        if not value.is_zero:
            result[coord] = value
    return result


def _outermost_inverse(found: Iterable[InverseAtom]) -> InverseAtom:
    found = list(found)
    for atom in sorted(found, key=lambda a: a.key):
        if not any(atom in other.poly.all_atoms for other in found if other is not atom):
            return atom
    raise SingularExpressionError("Cyclic inverse atoms")


def _clear(e: ScalarExpr, atom: InverseAtom, k: int) -> ScalarExpr:
    groups: Dict[int, Dict[Monomial, Coefficient]] = {}
    for mono, c in e.terms.items():
        j = 0
        rest = []
        for a, p in mono:
            if a == atom:
                j = p
            else:
                rest.append((a, p))
        groups.setdefault(j, {})[tuple(rest)] = c
    powers = [ONE]
    for _ in range(k):
        powers.append(powers[-1] * atom.poly)
    result = ZERO
    for j, terms in groups.items():
        result = result + ScalarExpr(terms) * powers[k - j]
    return result


def clear_denominators(e: ScalarExpr) -> ScalarExpr:
    """Multiply e through by the defining polynomials of its inverse atoms until none remain."""
    while True:
        exponents: Dict[InverseAtom, int] = {}
        for mono in e.terms:
            for a, p in mono:
                if type(a) is InverseAtom and p > exponents.get(a, 0):
                    exponents[a] = p
        if not exponents:
            return e
        atom = _outermost_inverse(exponents)
        logging.debug(f"Clearing inverse atom of degree {exponents[atom]} from {len(e.terms)} terms")
        e = _clear(e, atom, exponents[atom])


def equals_zero(e: ScalarExpr) -> bool:
    if e.is_zero:
        return True
    return clear_denominators(e).is_zero


def substitute(e: ScalarExpr, mapping: Mapping[Atom, ScalarExpr]) -> ScalarExpr:
    """Simultaneous substitution of atoms; inverse and square-root atoms follow their polynomials."""
    images: Dict[Atom, Optional[ScalarExpr]] = {}
    powers: Dict[Tuple[Atom, int], ScalarExpr] = {}

    def image(atom: Atom) -> Optional[ScalarExpr]:
        if atom not in images:
            if atom in mapping:
                images[atom] = as_expr(mapping[atom])
            else:
                match atom:
                    case InverseAtom(P):
                        new = substitute(P, mapping)
                        images[atom] = None if new == P else inverse(new)
                    case SqrtAtom(P):
                        new = substitute(P, mapping)
                        images[atom] = None if new == P else sqrt(new)
                    case _:
                        images[atom] = None
        return images[atom]

    def power(atom: Atom, p: int) -> ScalarExpr:
        if (atom, p) not in powers:
            powers[(atom, p)] = image(atom) ** p
        return powers[(atom, p)]

    acc: Dict[Monomial, Coefficient] = {}
    for mono, c in e.terms.items():
        fixed = []
        changed = ONE
        for atom, p in mono:
            if image(atom) is None:
                fixed.append((atom, p))
            else:
                changed = changed * power(atom, p)
        term = ScalarExpr({tuple(fixed): c}) * changed
        for m2, c2 in term.terms.items():
            acc[m2] = acc.get(m2, 0) + c2
    return _normalized(acc)


@dataclass(eq=True, frozen=True)
class Const:
    value: object


@dataclass(eq=True, frozen=True)
class Var:
    atom: Atom


@dataclass(eq=True, frozen=True)
class Add:
    left: object
    right: object


@dataclass(eq=True, frozen=True)
class Sub:
    left: object
    right: object


@dataclass(eq=True, frozen=True)
class Mul:
    left: object
    right: object


@dataclass(eq=True, frozen=True)
class Div:
    left: object
    right: object


@dataclass(eq=True, frozen=True)
class Neg:
    arg: object


@dataclass(eq=True, frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(eq=True, frozen=True)
class Inv:
    arg: object


@dataclass(eq=True, frozen=True)
class Sqrt:
    arg: object


def _check_atom(atom: Atom, space: Optional[JetSpace]):
    if space is None:
        return
    match atom:
        case BaseCoord(i):
            space.check_base(i)
        case FieldCoord(sigma, J):
            space.check_field(sigma, J)
        case InverseAtom(P) | SqrtAtom(P):
            for a in P.atoms:
                _check_atom(a, space)
        case OpaqueAtom():
            pass
        case _:
            raise TypeError(f'Unknown atom type: {type(atom)}')


def _registered(e: ScalarExpr, declared) -> bool:
    if declared is None or e.is_constant:
        return True
    monic = e.monic()[1]
    return any(monic == d.monic()[1] for d in declared if not d.is_zero)


def normalize(tree, space: Optional[JetSpace] = None, declared=None) -> ScalarExpr:
    """Evaluate a raw expression tree into normal form.

    `declared` lists the expressions registered as nonvanishing; when given, every
    non-constant denominator and square-root argument must appear in it.
    """

    def go(node) -> ScalarExpr:
        match node:
            case ScalarExpr():
                for a in node.atoms:
                    _check_atom(a, space)
                return node
            case Const(value):
                return ScalarExpr.constant(value)
            case Var(atom):
                _check_atom(atom, space)
                return ScalarExpr.from_atom(atom)
            case Add(a, b):
                return go(a) + go(b)
            case Sub(a, b):
                return go(a) - go(b)
            case Mul(a, b):
                return go(a) * go(b)
            case Neg(a):
                return -go(a)
            case Pow(a, k):
                return go(a) ** k
            case Div(a, b):
                den = go(b)
                if not _registered(den, declared):
                    raise SingularExpressionError("Denominator is not registered as nonvanishing")
                return go(a) / den
            case Inv(a):
                den = go(a)
                if not _registered(den, declared):
                    raise SingularExpressionError("inv(...) argument is not registered as nonvanishing")
                return inverse(den)
            case Sqrt(a):
                arg = go(a)
                if not _registered(arg, declared):
                    raise SingularExpressionError("sqrt(...) argument is not registered as nonvanishing")
                return sqrt(arg)
            case _:
                raise TypeError(f'Unknown expression tree type: {type(node)}')

    return go(tree)


def permutation_sign(seq: Sequence) -> int:
    items = list(seq)
    if len(items) < 2:
        return 1
    return Permutation(sorted(range(len(items)), key=items.__getitem__)).signature()


def _sympy_matrix(rows: Sequence[Sequence[ScalarExpr]]) -> Tuple[sympy.Matrix, Callable[[sympy.Expr], ScalarExpr]]:
    """Matrix over the ring generated by the entries' atoms, with the map back to ScalarExpr."""
    gens = ring_generators(*(entry for row in rows for entry in row))
    if not gens:
        matrix = sympy.Matrix([[QQ.to_sympy(entry.constant_value()) for entry in row] for row in rows])
        return matrix, ScalarExpr.constant
    R = polynomial_ring(len(gens))
    matrix = sympy.Matrix([[to_ring(entry, gens).as_expr() for entry in row] for row in rows])
    return matrix, lambda value: from_ring(R.from_expr(value), gens)


def determinant(rows: Sequence[Sequence[ScalarExpr]]) -> ScalarExpr:
    matrix, back = _sympy_matrix(rows)
    return back(matrix.det(method="berkowitz"))


def adjugate(rows: Sequence[Sequence[ScalarExpr]]) -> List[List[ScalarExpr]]:
    if len(rows) == 1:
        return [[ONE]]
    matrix, back = _sympy_matrix(rows)
    adj = matrix.adjugate(method="berkowitz")
    return [[back(adj[i, j]) for j in range(adj.cols)] for i in range(adj.rows)]


def inverse_matrix(rows: Sequence[Sequence[ScalarExpr]]) -> Tuple[List[List[ScalarExpr]], ScalarExpr]:
    """Inverse as adjugate times inv(det); returns (inverse, det)."""
    det = determinant(rows)
    if not _is_nonzero(det):
        raise SingularExpressionError("Matrix is not invertible")
    inv_det = inverse(det)
    adj = adjugate(rows)
    return [[entry * inv_det for entry in row] for row in adj], det


def default_symbol_name(atom: Atom) -> str:
    match atom:
        case BaseCoord(i):
            return f"x{i}"
        case FieldCoord(sigma, J):
            return f"y{sigma}_{''.join(map(str, J))}" if J else f"y{sigma}"
        case OpaqueAtom(name, indices, _):
            return opaque_name(name, indices)
        case _:
            raise TypeError(f'Unknown atom type: {type(atom)}')


def opaque_name(name: str, indices: Tuple[int, ...]) -> str:
    # xi with indices (sigma, j1, ..., jk) prints as xi<sigma>_<j1...jk>
    if not indices:
        return name
    head, rest = indices[0], indices[1:]
    return f"{name}{head}_{''.join(map(str, rest))}" if rest else f"{name}{head}"


def to_sympy(e: ScalarExpr, symbol_name: Callable[[Atom], str] = default_symbol_name) -> sympy.Expr:
    def atom_value(atom: Atom) -> sympy.Expr:
        match atom:
            case InverseAtom(P):
                return 1 / to_sympy(P, symbol_name)
            case SqrtAtom(P):
                return sympy.sqrt(to_sympy(P, symbol_name))
            case _:
                return sympy.Symbol(symbol_name(atom))

    total = sympy.Integer(0)
    for mono, c in e.sorted_terms():
        term = sympy.Rational(int(c.numerator), int(c.denominator))
        for atom, p in mono:
            term = term * atom_value(atom) ** p
        total = total + term
    return total
