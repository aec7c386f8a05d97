import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lepage_synthesis.errors import OrderCapError, PreconditionError
from lepage_synthesis.syntax.exterior import (
    DX,
    DY,
    contact_form,
    dx,
    exterior_derivative,
    forms_equal,
    horizontalize,
    linear_combination,
    omega_forms,
    wedge,
)
from lepage_synthesis.syntax.jet import JetSpace
from lepage_synthesis.syntax.kernel import ONE, ScalarExpr, formal_derivative, inverse, x, y
from lepage_synthesis.synthesis.lepage import (
    Lagrangian,
    caratheodory_closed,
    caratheodory_closed_factor,
    caratheodory_contraction,
    caratheodory_factors,
    caratheodory_first,
    check_lepage,
    contraction_factor,
    euler_lagrange,
    euler_lagrange_expressions,
    euler_lagrange_from_expressions,
    fundamental_form,
    is_trivial,
    lepage_coefficient,
    principal_component,
)

from strategies import lagrangians, polynomials

PLANE = JetSpace(2, 1, 2)


def test_lagrangian_preconditions():
    with pytest.raises(PreconditionError):
        Lagrangian(PLANE, 1, y(1, (1, 1)))
    with pytest.raises(PreconditionError):
        Lagrangian(PLANE, 0, y(1))


def test_theta_of_linear_lagrangian():
    theta = principal_component(Lagrangian(PLANE, 1, y(1, (1,))))
    expected = linear_combination(PLANE, 2, 1, [
        (y(1, (1,)), wedge(dx(PLANE, 1), dx(PLANE, 2))),
        (ONE, wedge(contact_form(PLANE, 1), dx(PLANE, 2))),
    ])
    assert forms_equal(theta, expected)
    assert theta.coefficient(DY(1, ()), DX(2)) == ONE


def test_poincare_cartan_of_harmonic_lagrangian():
    density = (y(1, (1,)) ** 2 + y(1, (2,)) ** 2) / 2
    lagrangian = Lagrangian(PLANE, 1, density)
    theta = principal_component(lagrangian)
    omega0, omegas = omega_forms(PLANE)
    expected = linear_combination(PLANE, 2, 1, [
        (density, omega0),
        (y(1, (1,)), wedge(contact_form(PLANE, 1), omegas[0])),
        (y(1, (2,)), wedge(contact_form(PLANE, 1), omegas[1])),
    ])
    assert forms_equal(theta, expected)
    assert check_lepage(theta, lagrangian).ok


def test_second_order_lepage_coefficient():
    space = JetSpace(1, 1, 4)
    lagrangian = Lagrangian(space, 2, y(1, (1, 1)) ** 2 / 2)
    assert lepage_coefficient(lagrangian, 1, (1,), 1) == y(1, (1, 1))
    assert lepage_coefficient(lagrangian, 1, (), 1) == -y(1, (1, 1, 1))


def test_principal_component_needs_room():
    with pytest.raises(OrderCapError):
        principal_component(Lagrangian(JetSpace(2, 1, 2), 2, y(1, (1, 1))))


def test_euler_lagrange_of_harmonic_lagrangian():
    density = (y(1, (1,)) ** 2 + y(1, (2,)) ** 2) / 2
    lagrangian = Lagrangian(PLANE, 1, density)
    assert euler_lagrange_expressions(lagrangian) == [-(y(1, (1, 1)) + y(1, (2, 2)))]
    E = euler_lagrange(lagrangian)
    assert E.coefficient(DY(1, ()), DX(1), DX(2)) == -(y(1, (1, 1)) + y(1, (2, 2)))


def test_null_lagrangian_is_trivial():
    space = JetSpace(2, 2, 2)
    jacobian = y(1, (1,)) * y(2, (2,)) - y(1, (2,)) * y(2, (1,))
    assert is_trivial(Lagrangian(space, 1, jacobian))
    assert not is_trivial(Lagrangian(space, 1, y(1)))


@given(st.data())
@settings(max_examples=15, deadline=None)
def test_theta_is_lepage_first_order(data):
    lagrangian = data.draw(lagrangians(data.draw(st.sampled_from([2, 3])), data.draw(st.sampled_from([1, 2])), 1))
    assert check_lepage(principal_component(lagrangian), lagrangian).ok


@given(st.data())
@settings(max_examples=10, deadline=None)
def test_theta_is_lepage_second_order(data):
    lagrangian = data.draw(lagrangians(2, 1, 2))
    report = check_lepage(principal_component(lagrangian), lagrangian)
    assert report.equivalent_ok and report.lepage_ok


@given(st.data())
@settings(max_examples=10, deadline=None)
def test_euler_lagrange_matches_classical_expressions(data):
    r = data.draw(st.sampled_from([1, 2]))
    lagrangian = data.draw(lagrangians(2, 1, r))
    oracle = euler_lagrange_from_expressions(lagrangian.space, euler_lagrange_expressions(lagrangian), 2 * r)
    assert forms_equal(euler_lagrange(lagrangian), oracle)


def test_lagrangian_form_is_not_lepage():
    lagrangian = Lagrangian(PLANE, 1, (y(1, (1,)) ** 2 + y(1, (2,)) ** 2) / 2)
    report = check_lepage(lagrangian.form(), lagrangian)
    assert report.equivalent_ok
    assert not report.lepage_ok


def test_fundamental_form_of_product_lagrangian():
    space = JetSpace(2, 2, 2)
    lagrangian = Lagrangian(space, 1, y(1, (1,)) * y(2, (2,)))
    w1, w2 = contact_form(space, 1), contact_form(space, 2)
    expected = linear_combination(space, 2, 1, [
        (y(1, (1,)) * y(2, (2,)), wedge(dx(space, 1), dx(space, 2))),
        (y(2, (2,)), wedge(w1, dx(space, 2))),
        (-y(1, (1,)), wedge(w2, dx(space, 1))),
        (ScalarExpr.constant(1) / 2, wedge(w1, w2)),
    ])
    Z = fundamental_form(lagrangian)
    assert forms_equal(Z, expected)
    assert check_lepage(Z, lagrangian).ok


def test_fundamental_form_is_closed_exactly_for_trivial_lagrangians():
    space = JetSpace(2, 2, 2)
    jacobian = y(1, (1,)) * y(2, (2,)) - y(1, (2,)) * y(2, (1,))
    assert exterior_derivative(fundamental_form(Lagrangian(space, 1, jacobian))).is_zero()
    assert not exterior_derivative(fundamental_form(Lagrangian(space, 1, y(1)))).is_zero()
    with pytest.raises(PreconditionError):
        fundamental_form(Lagrangian(JetSpace(2, 1, 4), 2, y(1, (1, 1))))


def test_fundamental_form_matches_theta_for_one_field_and_one_dimension():
    space = JetSpace(1, 1, 2)
    lagrangian = Lagrangian(space, 1, y(1, (1,)) ** 3 + x(1) * y(1))
    assert forms_equal(fundamental_form(lagrangian), principal_component(lagrangian))


def test_caratheodory_needs_nonvanishing_declaration():
    with pytest.raises(PreconditionError):
        caratheodory_closed(Lagrangian(PLANE, 1, y(1, (1,)) + 1))


def test_caratheodory_first_order_factors():
    lagrangian = Lagrangian(PLANE, 1, y(1, (1,)) + 1, nonvanishing=True)
    decomposable = caratheodory_factors(lagrangian)
    assert decomposable.prefactor == inverse(y(1, (1,)) + 1)
    first = decomposable.factors[0]
    assert first.coefficient(DX(1)) == ONE
    assert forms_equal(caratheodory_first(lagrangian), decomposable.expand())


@given(st.data())
@settings(max_examples=25, deadline=None)
def test_contraction_matches_first_order_formula(data):
    lagrangian = data.draw(lagrangians(data.draw(st.sampled_from([2, 3])), data.draw(st.sampled_from([1, 2])), 1,
                                       nonvanishing=True))
    assert forms_equal(caratheodory_contraction(lagrangian), caratheodory_first(lagrangian))


@given(st.data())
@settings(max_examples=15, deadline=None)
def test_second_order_caratheodory(data):
    lagrangian = data.draw(lagrangians(2, 1, 2, nonvanishing=True))
    for j in (1, 2):
        assert forms_equal(contraction_factor(lagrangian, j), caratheodory_closed_factor(lagrangian, j))
    closed = caratheodory_closed(lagrangian)
    assert forms_equal(caratheodory_contraction(lagrangian), closed)
    assert forms_equal(horizontalize(closed), lagrangian.form())
    assert check_lepage(closed, lagrangian).lepage_ok


def test_caratheodory_in_one_dimension_is_theta():
    space = JetSpace(1, 1, 4)
    lagrangian = Lagrangian(space, 2, y(1, (1, 1)) ** 2 + 1, nonvanishing=True)
    assert forms_equal(caratheodory_closed(lagrangian), principal_component(lagrangian))


def test_total_divergence_has_no_euler_lagrange_form():
    space = JetSpace(2, 1, 4)
    lagrangian = Lagrangian(space, 2, formal_derivative(y(1) * y(1, (2,)), 1, space))
    assert lagrangian.density == y(1, (1,)) * y(1, (2,)) + y(1) * y(1, (1, 2))
    assert all(e.is_zero for e in euler_lagrange_expressions(lagrangian))
    assert euler_lagrange(lagrangian).is_zero()


@given(st.data())
@settings(max_examples=15, deadline=None)
def test_random_total_divergences_are_null(data):
    space = JetSpace(2, 2, 4)
    f = data.draw(polynomials(space, 1))
    i = data.draw(st.sampled_from([1, 2]))
    lagrangian = Lagrangian(space, 2, formal_derivative(f, i, space))
    assert all(e.is_zero for e in euler_lagrange_expressions(lagrangian))
    assert euler_lagrange(lagrangian).is_zero()
