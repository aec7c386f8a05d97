import pytest

from lepage_synthesis.errors import PreconditionError
from lepage_synthesis.syntax.exterior import forms_equal
from lepage_synthesis.syntax.jet import FieldCoord, SqrtAtom
from lepage_synthesis.syntax.kernel import ONE, ZERO, ExprSum, ScalarExpr, equals_zero, raw_partial, substitute, x
from lepage_synthesis.synthesis.lepage import (
    caratheodory_closed,
    caratheodory_factors,
    check_lepage,
    euler_lagrange_from_expressions,
)
from lepage_synthesis.synthesis.relativity import (
    einstein_density,
    einstein_el,
    evaluate_metric,
    flat_substitution,
    g,
    hilbert_caratheodory,
    hilbert_caratheodory_factors,
    hilbert_lagrangian,
    hilbert_theta,
    metric_objects,
    metric_partial,
    metric_space,
    scalar_curvature,
)


def test_metric_space_range():
    assert metric_space(3).m == 6
    with pytest.raises(PreconditionError):
        metric_space(5)
    with pytest.raises(ValueError):
        metric_objects(2, "euclidean")


def test_metric_components_are_symmetric():
    space = metric_space(2)
    assert g(space, 1, 2) == g(space, 2, 1)
    assert g(space, 2, 1, (1, 2)) == g(space, 1, 2, (2, 1))
    assert metric_partial(g(space, 1, 2) ** 2, space, 1, 2) == g(space, 1, 2)
    assert metric_partial(g(space, 1, 1) ** 2, space, 1, 1) == g(space, 1, 1) * 2


def test_inverse_metric():
    objects = metric_objects(2)
    for a in range(2):
        for b in range(2):
            acc = ExprSum()
            for c in range(2):
                acc.add(objects.metric[a][c] * objects.inverse[c][b])
            assert equals_zero(acc.value() - (ONE if a == b else ZERO))


def test_scalar_curvature_is_affine_in_second_derivatives():
    R = scalar_curvature(2)
    seconds = [FieldCoord(sigma, J) for sigma in (1, 2, 3) for J in ((1, 1), (1, 2), (2, 2))]
    for a in seconds:
        first = raw_partial(R, a)
        for b in seconds:
            assert equals_zero(raw_partial(first, b))


def test_flat_metric_has_no_curvature():
    space = metric_space(2)
    assert equals_zero(substitute(scalar_curvature(2), flat_substitution(space)))
    assert equals_zero(evaluate_metric(scalar_curvature(2), space, {(1, 1, ()): 1, (2, 2, ()): 1}))


def test_polar_chart_is_flat():
    space = metric_space(2)
    values = {(1, 1, ()): 1, (2, 2, ()): x(1) ** 2, (2, 2, (1,)): x(1) * 2, (2, 2, (1, 1)): 2}
    assert equals_zero(evaluate_metric(scalar_curvature(2), space, values))


def test_unit_sphere_curvature():
    # g = d theta^2 + sin(theta)^2 d phi^2 at a point with sin(theta) = 3/5
    space = metric_space(2)
    values = {
        (1, 1, ()): 1,
        (2, 2, ()): ScalarExpr.constant(9) / 25,
        (2, 2, (1,)): ScalarExpr.constant(24) / 25,
        (2, 2, (1, 1)): ScalarExpr.constant(14) / 25,
    }
    assert equals_zero(evaluate_metric(scalar_curvature(2), space, values) - 2)


def test_lorentzian_root():
    objects = metric_objects(2, "lorentzian")
    assert equals_zero(objects.root * objects.root + objects.determinant)


def test_hilbert_theta_has_no_second_derivatives():
    theta = hilbert_theta(2)
    space = theta.space
    seconds = [FieldCoord(sigma, J) for sigma in range(1, space.m + 1) for J in space.multi_indices(2)]
    for coefficient in theta.terms.values():
        for atom in seconds:
            assert equals_zero(raw_partial(coefficient, atom))


def test_hilbert_theta_is_lepage():
    assert check_lepage(hilbert_theta(2), hilbert_lagrangian(2)).ok


def test_einstein_tensor_vanishes_in_two_dimensions():
    assert einstein_el(2).is_zero()
    assert all(equals_zero(e) for e in einstein_density(2))
    with pytest.raises(PreconditionError):
        einstein_el(4)


def test_hilbert_factors_match_generic_construction():
    printed = hilbert_caratheodory_factors(2)
    generic = caratheodory_factors(hilbert_lagrangian(2))
    assert equals_zero(printed.prefactor - generic.prefactor)
    assert len(printed.factors) == 2
    for a, b in zip(printed.factors, generic.factors):
        assert forms_equal(a, b)
    with pytest.raises(PreconditionError):
        hilbert_caratheodory_factors(4)


@pytest.mark.slow
def test_hilbert_caratheodory_matches_closed_form():
    assert forms_equal(hilbert_caratheodory(2), caratheodory_closed(hilbert_lagrangian(2)))


@pytest.mark.slow
def test_einstein_expressions_in_three_dimensions():
    space = metric_space(3)
    oracle = euler_lagrange_from_expressions(space, einstein_density(3), 4)
    assert forms_equal(einstein_el(3), oracle)


@pytest.mark.slow
def test_hilbert_factors_in_three_dimensions():
    printed = hilbert_caratheodory_factors(3)
    generic = caratheodory_factors(hilbert_lagrangian(3))
    assert equals_zero(printed.prefactor - generic.prefactor)
    for a, b in zip(printed.factors, generic.factors):
        assert forms_equal(a, b)


def test_scalar_curvature_is_invariant_under_relabelling():
    space = metric_space(2)
    swap = {1: 2, 2: 1}
    mapping = {}
    for sigma, (a, b) in enumerate(space.pairs, start=1):
        for J in space.multi_indices_upto(2):
            mapping[FieldCoord(sigma, J)] = g(space, swap[a], swap[b], tuple(swap[j] for j in J))
    R = scalar_curvature(2)
    assert equals_zero(substitute(R, mapping) - R)


def test_hilbert_density_is_linear_in_root():
    density = hilbert_lagrangian(2).density
    roots = {atom for atom in density.atoms if isinstance(atom, SqrtAtom)}
    assert len(roots) == 1
    for mono in density.terms:
        assert sum(power for atom, power in mono if atom in roots) == 1


def test_second_derivative_momenta_are_first_order():
    space = metric_space(2)
    density = hilbert_lagrangian(2).density
    seconds = [FieldCoord(sigma, J) for sigma in range(1, space.m + 1) for J in space.multi_indices(2)]
    for a, b in space.pairs:
        for J in space.multi_indices(2):
            momentum = metric_partial(density, space, a, b, J)
            for atom in seconds:
                assert equals_zero(raw_partial(momentum, atom))
    assert not metric_partial(density, space, 1, 1, (2, 2)).is_zero


def test_flat_metric_annihilates_euler_lagrange_form():
    space = metric_space(2)
    for coefficient in einstein_el(2).terms.values():
        assert equals_zero(substitute(coefficient, flat_substitution(space)))


@pytest.mark.slow
def test_flat_metric_annihilates_einstein_density_in_three_dimensions():
    space = metric_space(3)
    for expression in einstein_density(3):
        assert equals_zero(substitute(expression, flat_substitution(space)))
