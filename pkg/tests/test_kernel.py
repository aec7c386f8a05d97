from itertools import permutations

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from lepage_synthesis.errors import IndexRangeError, OpaqueDerivativeError, OrderCapError, SingularExpressionError
from lepage_synthesis.syntax.jet import FieldCoord, InverseAtom, JetSpace, multiplicity
from lepage_synthesis.syntax.kernel import (
    ONE,
    ZERO,
    Add,
    Const,
    Inv,
    Mul,
    Neg,
    Pow,
    ScalarExpr,
    Sqrt,
    Sub,
    Var,
    adjugate,
    default_symbol_name,
    determinant,
    equals_zero,
    formal_derivative,
    gradient,
    inverse,
    inverse_matrix,
    normalize,
    opaque,
    partial,
    permutation_sign,
    raw_partial,
    sqrt,
    substitute,
    to_sympy,
    x,
    y,
)

from strategies import coordinates, polynomials

SPACE = JetSpace(2, 1, 3)


def test_jet_indices_are_symmetric():
    assert y(1, (2, 1)) == y(1, (1, 2))
    assert multiplicity((1, 2)) == 2
    assert multiplicity((1, 1, 2)) == 3
    assert multiplicity(()) == 1


def test_normal_form_cancels():
    e = y(1, (1,)) * x(2) - x(2) * y(1, (1,))
    assert e.is_zero
    assert (x(1) + 1) * (x(1) - 1) == x(1) ** 2 - 1


def test_symmetrized_partial_splits_over_orderings():
    e = y(1, (1, 2)) ** 2
    assert raw_partial(e, FieldCoord(1, (1, 2))) == y(1, (1, 2)) * 2
    assert partial(e, 1, (2, 1)) == y(1, (1, 2))


def test_formal_derivative_of_jet_coordinates():
    e = x(1) * y(1, (1,))
    assert formal_derivative(e, 1, SPACE) == y(1, (1,)) + x(1) * y(1, (1, 1))
    assert formal_derivative(e, 2, SPACE) == x(1) * y(1, (1, 2))


def test_formal_derivative_respects_order_cap():
    with pytest.raises(OrderCapError):
        formal_derivative(y(1, (1, 1, 1)), 2, SPACE)


def test_formal_derivative_of_opaque_atom():
    with pytest.raises(OpaqueDerivativeError):
        formal_derivative(opaque("xi", (1,)), 1, SPACE)
    assert formal_derivative(opaque("c", constant=True) * x(1), 1, SPACE) == opaque("c", constant=True)


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_formal_derivatives_commute(data):
    e = data.draw(polynomials(SPACE, 1))
    d12 = formal_derivative(formal_derivative(e, 1, SPACE), 2, SPACE)
    d21 = formal_derivative(formal_derivative(e, 2, SPACE), 1, SPACE)
    assert d12 == d21


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_leibniz_rule(data):
    a = data.draw(polynomials(SPACE, 1))
    b = data.draw(polynomials(SPACE, 1))
    lhs = formal_derivative(a * b, 1, SPACE)
    rhs = formal_derivative(a, 1, SPACE) * b + a * formal_derivative(b, 1, SPACE)
    assert lhs == rhs


def test_inverse_cancels_single_atoms():
    assert x(1) * inverse(x(1)) == ONE
    assert inverse(inverse(x(1) + 1)) == x(1) + 1
    with pytest.raises(SingularExpressionError):
        inverse(ZERO)


def test_inverse_of_sum_is_an_atom():
    P = y(1, (1,)) + 1
    inv = inverse(P)
    assert isinstance(next(iter(inv.atoms)), InverseAtom)
    assert equals_zero(P * inv - 1)


def test_derivative_of_inverse():
    P = y(1, (1,)) + 1
    dP = raw_partial(inverse(P), FieldCoord(1, (1,)))
    assert equals_zero(dP + inverse(P) ** 2)


def test_sqrt_squares_back():
    P = x(1) ** 2 + 1
    s = sqrt(P)
    assert s * s == P
    assert sqrt(ScalarExpr.constant(9) / 25) == ScalarExpr.constant(3) / 5
    assert equals_zero(raw_partial(s, x(1).single_atom()) - x(1) * s * inverse(P))


def test_equals_zero_clears_nested_inverses():
    P = y(1, (1,)) + 1
    Q = inverse(P) + x(1)
    e = inverse(Q) * (inverse(P) + x(1)) - 1
    assert equals_zero(e)


def test_gradient_matches_raw_partials():
    e = x(1) * y(1, (1,)) ** 2 + inverse(y(1) + 1)
    grad = gradient(e)
    for atom in e.coordinates:
        assert equals_zero(grad.get(atom, ZERO) - raw_partial(e, atom))


def test_substitute_follows_inverse_atoms():
    e = inverse(x(1) + y(1))
    swapped = substitute(e, {FieldCoord(1, ()): ScalarExpr.constant(1)})
    assert equals_zero(swapped * (x(1) + 1) - 1)


def test_inverse_matrix():
    rows = [[x(1), ONE], [ZERO, x(2)]]
    inv, det = inverse_matrix(rows)
    assert det == x(1) * x(2)
    for i in range(2):
        for j in range(2):
            entry = sum((rows[i][k] * inv[k][j] for k in range(2)), ZERO)
            assert equals_zero(entry - (ONE if i == j else ZERO))
    with pytest.raises(SingularExpressionError):
        inverse_matrix([[x(1), x(1)], [x(1), x(1)]])


@given(st.data())
@settings(max_examples=30, deadline=None)
def test_to_sympy_agrees_with_arithmetic(data):
    a = data.draw(polynomials(SPACE, 1))
    b = data.draw(polynomials(SPACE, 1))
    assert sympy.expand(to_sympy(a * b) - to_sympy(a) * to_sympy(b)) == 0


def test_normalize_raw_trees():
    y1, y11, y12 = FieldCoord(1, ()), FieldCoord(1, (1,)), FieldCoord(1, (2,))
    assert normalize(Sub(Mul(Var(y12), Var(y11)), Mul(Var(y11), Var(y12))), SPACE).is_zero
    assert normalize(Mul(Var(y11), Inv(Var(y11))), SPACE) == ONE
    square = y(1) * y(1)
    assert normalize(Pow(Sqrt(Mul(Var(y1), Var(y1))), 2), SPACE, declared=[square]) == square
    with pytest.raises(SingularExpressionError):
        normalize(Inv(Var(y1)), SPACE, declared=[])
    with pytest.raises(IndexRangeError):
        normalize(Var(FieldCoord(1, (3,))), SPACE)


def test_permutation_sign():
    assert permutation_sign([1, 2, 3]) == 1
    assert permutation_sign([2, 1, 3]) == -1
    assert permutation_sign([3, 1, 2]) == 1
    assert permutation_sign([(1, 2), (0, 1)]) == -1
    assert permutation_sign([]) == 1


@given(st.permutations(range(5)))
def test_permutation_sign_counts_inversions(perm):
    inversions = sum(1 for i in range(5) for j in range(i + 1, 5) if perm[i] > perm[j])
    assert permutation_sign(perm) == (-1) ** inversions


def test_determinant_of_constant_matrix():
    rows = [[ScalarExpr.constant(2), ONE], [ONE, ONE]]
    assert determinant(rows) == ONE
    assert adjugate(rows) == [[ONE, -ONE], [-ONE, ScalarExpr.constant(2)]]
    assert adjugate([[x(1)]]) == [[ONE]]


@given(st.data())
@settings(max_examples=15, deadline=None)
def test_adjugate_times_matrix_is_determinant(data):
    rows = [[data.draw(polynomials(SPACE, 1, degree=2, max_terms=2)) for _ in range(3)] for _ in range(3)]
    det = determinant(rows)
    adj = adjugate(rows)
    oracle = sympy.Matrix([[to_sympy(entry) for entry in row] for row in rows]).det()
    assert sympy.expand(to_sympy(det) - oracle) == 0
    for i in range(3):
        for j in range(3):
            entry = sum((rows[i][k] * adj[k][j] for k in range(3)), ZERO)
            assert entry == (det if i == j else ZERO)


def test_inverse_matrix_with_inverse_atoms():
    P = y(1, (1,)) + 1
    rows = [[P, x(1), ZERO], [ONE, inverse(P), y(1)], [ZERO, ONE, P]]
    inv, det = inverse_matrix(rows)
    for i in range(3):
        for j in range(3):
            entry = sum((rows[i][k] * inv[k][j] for k in range(3)), ZERO)
            assert equals_zero(entry - (ONE if i == j else ZERO))


@given(st.data())
@settings(max_examples=30, deadline=None)
def test_partial_sums_to_raw_partial_over_orderings(data):
    space = JetSpace(2, 1, 4)
    e = data.draw(polynomials(space, 2))
    J = data.draw(st.sampled_from(space.multi_indices_upto(2)))
    raw = raw_partial(e, FieldCoord(1, J))
    assert partial(e, 1, J).scale(multiplicity(J)) == raw
    orderings = set(permutations(J))
    assert len(orderings) == multiplicity(J)
    for K in orderings:
        assert partial(e, 1, K) == partial(e, 1, J)
    assert sum((partial(e, 1, K) for K in orderings), ZERO) == raw


def _trees():
    leaves = st.one_of(
        st.integers(-3, 3).map(Const),
        st.sampled_from([e.single_atom() for e in coordinates(SPACE, 1)]).map(Var),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda pair: Add(*pair)),
            st.tuples(children, children).map(lambda pair: Sub(*pair)),
            st.tuples(children, children).map(lambda pair: Mul(*pair)),
            children.map(Neg),
            st.tuples(children, st.integers(0, 2)).map(lambda pair: Pow(*pair)),
        )

    return st.recursive(leaves, extend, max_leaves=6)


def _evaluate(node) -> sympy.Expr:
    match node:
        case Const(value):
            return sympy.Integer(value)
        case Var(atom):
            return sympy.Symbol(default_symbol_name(atom))
        case Add(a, b):
            return _evaluate(a) + _evaluate(b)
        case Sub(a, b):
            return _evaluate(a) - _evaluate(b)
        case Mul(a, b):
            return _evaluate(a) * _evaluate(b)
        case Neg(a):
            return -_evaluate(a)
        case Pow(a, k):
            return _evaluate(a) ** k
        case _:
            raise TypeError(f'Unknown expression tree type: {type(node)}')


@given(_trees(), _trees())
@settings(max_examples=40, deadline=None)
def test_normalize_is_an_idempotent_ring_map(s, t):
    ns, nt = normalize(s, SPACE), normalize(t, SPACE)
    assert normalize(ns, SPACE) == ns
    assert normalize(Add(s, t), SPACE) == ns + nt
    assert normalize(Mul(s, t), SPACE) == ns * nt
    assert normalize(Neg(s), SPACE) == -ns
    assert sympy.expand(to_sympy(ns) - _evaluate(s)) == 0


@given(st.data())
@settings(max_examples=20, deadline=None)
def test_formal_derivative_preserves_zero(data):
    P = data.draw(polynomials(SPACE, 1).filter(lambda e: not e.is_zero))
    a = data.draw(polynomials(SPACE, 1))
    e = P * inverse(P) * a - a
    assert equals_zero(e)
    for i in (1, 2):
        assert equals_zero(formal_derivative(e, i, SPACE))
