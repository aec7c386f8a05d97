import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Dict, List, Optional, Tuple

from lepage_synthesis.errors import OrderCapError, PreconditionError
from lepage_synthesis.syntax.exterior import (
    Form,
    contact_component,
    contact_form,
    contract,
    dx,
    dy,
    exterior_derivative,
    formal_derivative_field,
    horizontalize,
    linear_combination,
    omega_forms,
    vertical_test_field,
    wedge,
    wedge_all,
)
from lepage_synthesis.syntax.jet import FieldCoord, JetSpace, MultiIndex, merge_index, multiplicity
from lepage_synthesis.syntax.kernel import (
    ONE,
    ExprSum,
    ScalarExpr,
    equals_zero,
    formal_derivatives,
    inverse,
    partial,
    permutation_sign,
    raw_partial,
)


@dataclass(eq=True, frozen=True)
class Lagrangian:
    """lambda = density * dx^1 ^ ... ^ dx^n on the r-th jet prolongation."""
    space: JetSpace
    order: int
    density: ScalarExpr
    nonvanishing: bool = False

    def __post_init__(self):
        if self.order < 1:
            raise PreconditionError(f"Lagrangian order must be at least 1, got {self.order}")
        if self.density.jet_order > self.order:
            raise PreconditionError(f"Density has jet order {self.density.jet_order} above declared order {self.order}")
        if self.density.has_opaque:
            raise PreconditionError("Lagrangian density must not contain opaque atoms")

    def form(self) -> Form:
        omega0, _ = omega_forms(self.space)
        return omega0.scale(self.density).promote(self.order)


@dataclass(frozen=True)
class LepageReport:
    equivalent_ok: bool
    lepage_ok: bool
    residual: Form

    @property
    def ok(self) -> bool:
        return self.equivalent_ok and self.lepage_ok


@dataclass(frozen=True)
class DecomposableForm:
    """prefactor * factors[0] ^ ... ^ factors[n-1], kept unexpanded."""
    prefactor: ScalarExpr
    factors: Tuple[Form, ...]

    def expand(self) -> Form:
        return wedge_all(self.factors).scale(self.prefactor)


def require_order_cap(space: JetSpace, order: int, what: str):
    if space.order_cap < order:
        raise OrderCapError(f"{what} needs order cap {order}, space has {space.order_cap}")


def _require_nonvanishing(lagrangian: Lagrangian):
    if not lagrangian.nonvanishing:
        raise PreconditionError("Caratheodory forms need a Lagrangian declared nonvanishing")


@lru_cache(maxsize=None)
def _contact(space: JetSpace, sigma: int, J: MultiIndex) -> Form:
    return contact_form(space, sigma, J)


@lru_cache(maxsize=None)
def lepage_coefficient(lagrangian: Lagrangian, sigma: int, J: MultiIndex, i: int) -> ScalarExpr:
    """Sum over l of (-1)^l d_{p_1}...d_{p_l} of the symmetrized partial by y^sigma_{J p_1...p_l i}.

    The p indices run over all ordered tuples; the sum is taken over sorted tuples
    weighted by their multiplicity.
    """
    space, r = lagrangian.space, lagrangian.order
    acc = ExprSum()
    for length in range(r - len(J)):
        sign = -1 if length % 2 else 1
        for P in space.multi_indices(length):
            target = merge_index(J + P, i)
            base = partial(lagrangian.density, sigma, target)
            if base.is_zero:
                continue
            acc.add(formal_derivatives(base, P, space), sign * multiplicity(P))
    return acc.value()


@lru_cache(maxsize=None)
def principal_component(lagrangian: Lagrangian) -> Form:
    space, r = lagrangian.space, lagrangian.order
    require_order_cap(space, 2 * r - 1, "Principal component")
    omega0, omegas = omega_forms(space)
    items = [(lagrangian.density, omega0)]
    for sigma in range(1, space.m + 1):
        for J in space.multi_indices_upto(r - 1):
            for i in range(1, space.n + 1):
                coef = lepage_coefficient(lagrangian, sigma, J, i)
                if coef.is_zero:
                    continue
                items.append((coef.scale(multiplicity(J)), wedge(_contact(space, sigma, J), omegas[i - 1])))
    logging.debug(f"Principal component of order {r} assembled from {len(items)} terms")
    return linear_combination(space, space.n, 2 * r - 1, items)


def fundamental_form(lagrangian: Lagrangian) -> Form:
    space = lagrangian.space
    if lagrangian.order != 1:
        raise PreconditionError(f"Fundamental form is built for first-order Lagrangians, got order {lagrangian.order}")
    n = space.n
    omega0, _ = omega_forms(space)
    items = [(lagrangian.density, omega0)]
    variables = [(sigma, j) for sigma in range(1, space.m + 1) for j in range(1, n + 1)]
    derivatives: Dict[tuple, ScalarExpr] = {(): lagrangian.density}
    for k in range(1, n + 1):
        weight = Fraction(1, factorial(k) ** 2)
        for chosen in product(variables, repeat=k):
            js = [j for _, j in chosen]
            if len(set(js)) < k:
                continue
            prefix = chosen[:-1]
            if prefix not in derivatives:
                continue
            sigma, j = chosen[-1]
            value = raw_partial(derivatives[prefix], FieldCoord(sigma, (j,)))
            if value.is_zero:
                continue
            derivatives[chosen] = value
            rest = [i for i in range(1, n + 1) if i not in js]
            # dx factors not in js, ascending
            sign = permutation_sign(js + rest)
            factors = [_contact(space, s, ()) for s, _ in chosen] + [dx(space, i) for i in rest]
            items.append((value.scale(weight * sign), wedge_all(factors)))
    return linear_combination(space, n, 1, items)


def caratheodory_closed_factor(lagrangian: Lagrangian, j: int) -> Form:
    space, r = lagrangian.space, lagrangian.order
    items = [(lagrangian.density, dx(space, j))]
    for sigma in range(1, space.m + 1):
        for I in space.multi_indices_upto(r - 1):
            coef = lepage_coefficient(lagrangian, sigma, I, j)
            if not coef.is_zero:
                items.append((coef.scale(multiplicity(I)), _contact(space, sigma, I)))
    return linear_combination(space, 1, r, items)


def _prefactor(lagrangian: Lagrangian) -> ScalarExpr:
    n = lagrangian.space.n
    return ONE if n == 1 else inverse(lagrangian.density) ** (n - 1)


def caratheodory_factors(lagrangian: Lagrangian, order: Optional[int] = None) -> DecomposableForm:
    r = lagrangian.order if order is None else order
    _require_nonvanishing(lagrangian)
    if r != lagrangian.order:
        lagrangian = Lagrangian(lagrangian.space, r, lagrangian.density, lagrangian.nonvanishing)
    require_order_cap(lagrangian.space, 2 * r - 1, "Caratheodory form")
    factors = tuple(caratheodory_closed_factor(lagrangian, j) for j in range(1, lagrangian.space.n + 1))
    return DecomposableForm(_prefactor(lagrangian), factors)


def caratheodory_first(lagrangian: Lagrangian) -> Form:
    if lagrangian.order != 1:
        raise PreconditionError(f"First-order Caratheodory form needs r = 1, got {lagrangian.order}")
    _require_nonvanishing(lagrangian)
    space = lagrangian.space
    factors = []
    for j in range(1, space.n + 1):
        items = [(lagrangian.density, dx(space, j))]
        items += [(partial(lagrangian.density, sigma, (j,)), _contact(space, sigma, ()))
                  for sigma in range(1, space.m + 1)]
        factors.append(linear_combination(space, 1, 1, items))
    return DecomposableForm(_prefactor(lagrangian), tuple(factors)).expand()


def caratheodory_closed(lagrangian: Lagrangian, order: Optional[int] = None) -> Form:
    return caratheodory_factors(lagrangian, order).expand()


def contraction_factor(lagrangian: Lagrangian, j: int) -> Form:
    """(-1)^(n-j) i_{d_n}...i_{d_{j+1}} i_{d_{j-1}}...i_{d_1} Theta, innermost d_1 first."""
    space, r = lagrangian.space, lagrangian.order
    space.check_base(j)
    rho = principal_component(lagrangian)
    for i in range(1, space.n + 1):
        if i == j:
            continue
        logging.debug(f"Contracting with d_{i} for factor {j}")
        rho = contract(formal_derivative_field(space, i, 2 * r), rho)
    return rho if (space.n - j) % 2 == 0 else -rho


def caratheodory_contraction(lagrangian: Lagrangian, order: Optional[int] = None) -> Form:
    r = lagrangian.order if order is None else order
    _require_nonvanishing(lagrangian)
    if r != lagrangian.order:
        lagrangian = Lagrangian(lagrangian.space, r, lagrangian.density, lagrangian.nonvanishing)
    require_order_cap(lagrangian.space, 2 * r - 1, "Caratheodory form")
    factors = tuple(contraction_factor(lagrangian, j) for j in range(1, lagrangian.space.n + 1))
    return DecomposableForm(_prefactor(lagrangian), factors).expand()


def euler_lagrange_expressions(lagrangian: Lagrangian) -> List[ScalarExpr]:
    """E_sigma = sum over sorted J of (-1)^|J| d_J of the raw partial by y^sigma_J."""
    space, r = lagrangian.space, lagrangian.order
    require_order_cap(space, 2 * r, "Euler-Lagrange expressions")
    expressions = []
    for sigma in range(1, space.m + 1):
        acc = ExprSum()
        for J in space.multi_indices_upto(r):
            base = raw_partial(lagrangian.density, FieldCoord(sigma, J))
            if not base.is_zero:
                acc.add(formal_derivatives(base, J, space), -1 if len(J) % 2 else 1)
        expressions.append(acc.value())
    return expressions


def euler_lagrange_from_expressions(space: JetSpace, expressions: List[ScalarExpr], order: int) -> Form:
    omega0, _ = omega_forms(space)
    items = [(e, wedge(dy(space, sigma), omega0)) for sigma, e in enumerate(expressions, start=1)]
    return linear_combination(space, space.n + 1, order, items)


def euler_lagrange(lagrangian: Lagrangian) -> Form:
    require_order_cap(lagrangian.space, 2 * lagrangian.order, "Euler-Lagrange form")
    return contact_component(exterior_derivative(principal_component(lagrangian)), 1)


def check_lepage(rho: Form, lagrangian: Lagrangian) -> LepageReport:
    space = rho.space
    if rho.degree != space.n:
        raise PreconditionError(f"Lepage check needs an {space.n}-form, got degree {rho.degree}")
    equivalent_ok = (horizontalize(rho) - lagrangian.form()).is_zero()
    xi = vertical_test_field(space, rho.order)
    residual = horizontalize(contract(xi, exterior_derivative(rho)))
    lepage_ok = residual.is_zero()
    logging.debug(f"Lepage check: equivalent={equivalent_ok}, lepage={lepage_ok}")
    return LepageReport(equivalent_ok, lepage_ok, residual)


def is_trivial(lagrangian: Lagrangian) -> bool:
    return all(equals_zero(e) for e in euler_lagrange_expressions(lagrangian))
