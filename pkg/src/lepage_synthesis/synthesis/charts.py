import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from lepage_synthesis.errors import IndexRangeError, PreconditionError, SingularExpressionError
from lepage_synthesis.syntax.exterior import Form, forms_equal, linear_combination, omega_forms, pullback
from lepage_synthesis.syntax.jet import Atom, BaseCoord, FieldCoord, JetSpace, MultiIndex
from lepage_synthesis.syntax.kernel import (
    ONE,
    ZERO,
    ExprSum,
    ScalarExpr,
    as_expr,
    base_partial,
    equals_zero,
    formal_derivative,
    inverse_matrix,
    partial,
    substitute,
    x,
    y,
)
from lepage_synthesis.synthesis.lepage import (
    Lagrangian,
    caratheodory_closed,
    principal_component,
    require_order_cap,
)

Matrix = List[List[ScalarExpr]]


@dataclass(eq=True, frozen=True)
class ChartTransform:
    """x-bar^k = base_map[k-1](x), y-bar^sigma = fiber_map[sigma-1](x, y)."""
    space: JetSpace
    base_map: Tuple[ScalarExpr, ...]
    fiber_map: Tuple[ScalarExpr, ...]

    def __post_init__(self):
        if len(self.base_map) != self.space.n or len(self.fiber_map) != self.space.m:
            raise IndexRangeError(f"Transform needs {self.space.n} base and {self.space.m} fiber maps")
        for e in self.base_map:
            if any(not isinstance(a, BaseCoord) for a in e.coordinates) or e.has_opaque:
                raise PreconditionError("Base map may only depend on base coordinates")
        for e in self.fiber_map:
            if e.jet_order > 0 or e.has_opaque:
                raise PreconditionError("Fiber map may only depend on x and y")
        product = _matmul(self.jacobian, self.inverse_jacobian)
        for a, row in enumerate(product):
            for b, entry in enumerate(row):
                if not equals_zero(entry - (ONE if a == b else ZERO)):
                    raise SingularExpressionError("Jacobian times its inverse is not the identity")
        _ = self.fiber_inverse

    @cached_property
    def jacobian(self) -> Matrix:
        """jacobian[k][s] = d x-bar^k / d x^s."""
        return [[base_partial(e, s) for s in range(1, self.space.n + 1)] for e in self.base_map]

    @cached_property
    def _inverse_and_det(self) -> Tuple[Matrix, ScalarExpr]:
        return inverse_matrix(self.jacobian)

    @property
    def inverse_jacobian(self) -> Matrix:
        """inverse_jacobian[s][k] = d x^s / d x-bar^k."""
        return self._inverse_and_det[0]

    @property
    def determinant(self) -> ScalarExpr:
        return self._inverse_and_det[1]

    @cached_property
    def fiber_jacobian(self) -> Matrix:
        """fiber_jacobian[sigma][tau] = d y-bar^sigma / d y^tau."""
        return [[partial(e, tau) for tau in range(1, self.space.m + 1)] for e in self.fiber_map]

    @cached_property
    def fiber_inverse(self) -> Matrix:
        """fiber_inverse[tau][sigma] = d y^tau / d y-bar^sigma."""
        return inverse_matrix(self.fiber_jacobian)[0]


def _matmul(a: Sequence[Sequence[ScalarExpr]], b: Sequence[Sequence[ScalarExpr]]) -> Matrix:
    return [[_dot([a[i][k] for k in range(len(b))], [b[k][j] for k in range(len(b))])
             for j in range(len(b[0]))] for i in range(len(a))]


def _dot(u: Sequence[ScalarExpr], v: Sequence[ScalarExpr]) -> ScalarExpr:
    acc = ExprSum()
    for p, q in zip(u, v):
        if not p.is_zero and not q.is_zero:
            acc.add(p * q)
    return acc.value()


@dataclass(frozen=True)
class ProlongedTransform:
    transform: ChartTransform
    order: int
    jet_maps: Dict[FieldCoord, ScalarExpr]

    @cached_property
    def atom_map(self) -> Dict[Atom, ScalarExpr]:
        """Barred coordinate -> its expression in unbarred jet coordinates."""
        mapping: Dict[Atom, ScalarExpr] = {BaseCoord(k): e for k, e in enumerate(self.transform.base_map, start=1)}
        mapping.update(self.jet_maps)
        return mapping

    def recurse(self, sigma: int, J: MultiIndex, k: int) -> ScalarExpr:
        """y-bar^sigma_{J k} re-derived from y-bar^sigma_J by one formal derivative."""
        transform = self.transform
        space = transform.space
        acc = ExprSum()
        parent = self.jet_maps[FieldCoord(sigma, J)]
        for s in range(1, space.n + 1):
            factor = transform.inverse_jacobian[s - 1][k - 1]
            if not factor.is_zero:
                acc.add(factor * formal_derivative(parent, s, space))
        return acc.value()


@lru_cache(maxsize=None)
def prolong(transform: ChartTransform, order: int) -> ProlongedTransform:
    space = transform.space
    require_order_cap(space, order, "Prolongation")
    logging.debug(f"Prolonging chart transform to order {order}")
    partial_maps = ProlongedTransform(transform, order, {})
    jet_maps = partial_maps.jet_maps
    for sigma, e in enumerate(transform.fiber_map, start=1):
        jet_maps[FieldCoord(sigma, ())] = e
    for length in range(1, order + 1):
        for K in space.multi_indices(length):
            for sigma in range(1, space.m + 1):
                jet_maps[FieldCoord(sigma, K)] = partial_maps.recurse(sigma, K[:-1], K[-1])
    return partial_maps


def compose(second: ChartTransform, first: ChartTransform) -> ChartTransform:
    """The transform `second` after `first`."""
    mapping: Dict[Atom, ScalarExpr] = {BaseCoord(k): e for k, e in enumerate(first.base_map, start=1)}
    mapping.update({FieldCoord(sigma, ()): e for sigma, e in enumerate(first.fiber_map, start=1)})
    return ChartTransform(
        first.space,
        tuple(substitute(e, mapping) for e in second.base_map),
        tuple(substitute(e, mapping) for e in second.fiber_map),
    )


def identity_transform(space: JetSpace) -> ChartTransform:
    return ChartTransform(
        space,
        tuple(x(i) for i in range(1, space.n + 1)),
        tuple(y(sigma) for sigma in range(1, space.m + 1)),
    )


def linear_transform(space: JetSpace, matrix, fiber_matrix=None) -> ChartTransform:
    """x-bar = matrix . x, y-bar = fiber_matrix . y (identity on fibers when omitted)."""
    base = tuple(_dot([as_expr(c) for c in row], [x(s) for s in range(1, space.n + 1)]) for row in matrix)
    if fiber_matrix is None:
        fiber = tuple(y(sigma) for sigma in range(1, space.m + 1))
    else:
        fiber = tuple(_dot([as_expr(c) for c in row], [y(t) for t in range(1, space.m + 1)]) for row in fiber_matrix)
    return ChartTransform(space, base, fiber)


def nonlinear_test_transform(space: JetSpace) -> ChartTransform:
    """x-bar^2 = x^2 + (x^1)^2 / 2, every other coordinate unchanged."""
    if space.n < 2:
        raise PreconditionError("The nonlinear test transform needs at least two base coordinates")
    base = [x(i) for i in range(1, space.n + 1)]
    base[1] = x(2) + x(1) ** 2 / 2
    return ChartTransform(space, tuple(base), tuple(y(sigma) for sigma in range(1, space.m + 1)))


def source_lagrangian(target: Lagrangian, transform: ChartTransform) -> Lagrangian:
    """The same Lagrangian in unbarred coordinates: L = (L-bar after the transform) * det(d x-bar / d x)."""
    prolonged = prolong(transform, target.order)
    density = substitute(target.density, prolonged.atom_map) * transform.determinant
    return Lagrangian(target.space, target.order, density, target.nonvanishing)


def omega_bar_identity(transform: ChartTransform, j: int) -> bool:
    """Pullback of omega-bar_j equals (d x^s / d x-bar^j) det(d x-bar / d x) omega_s."""
    space = transform.space
    space.check_base(j)
    _, omegas = omega_forms(space)
    pulled = pullback(prolong(transform, 0), omegas[j - 1])
    expected = linear_combination(space, space.n - 1, 0, [
        (transform.inverse_jacobian[s - 1][j - 1] * transform.determinant, omegas[s - 1])
        for s in range(1, space.n + 1)
    ])
    return forms_equal(pulled, expected)


def pulled_back_theta(target: Lagrangian, transform: ChartTransform) -> Tuple[Form, Form]:
    r = target.order
    prolonged = prolong(transform, 2 * r - 1)
    return pullback(prolonged, principal_component(target)), principal_component(source_lagrangian(target, transform))


def check_theta_invariance(target: Lagrangian, transform: ChartTransform) -> bool:
    """Theta-bar of the barred Lagrangian pulls back to Theta of the same Lagrangian in the unbarred chart."""
    pulled, theta = pulled_back_theta(target, transform)
    return forms_equal(pulled, theta)


def _second_base_derivatives(transform: ChartTransform) -> Dict[Tuple[int, int, int], ScalarExpr]:
    n = transform.space.n
    table = {}
    for p, e in enumerate(transform.base_map, start=1):
        for l1 in range(1, n + 1):
            first = base_partial(e, l1)
            for l2 in range(1, n + 1):
                second = base_partial(first, l2)
                if not second.is_zero:
                    table[(p, l1, l2)] = second
    return table


def obstruction_3rd(target: Lagrangian, transform: ChartTransform) -> Tuple[List[ScalarExpr], bool]:
    """Residuals indexed by (sigma, s), in order sigma-major; p, k, l1, l2, tau are summed."""
    if target.order != 3:
        raise PreconditionError(f"The third-order obstruction needs r = 3, got {target.order}")
    space = transform.space
    n, m = space.n, space.m
    density = source_lagrangian(target, transform).density
    hessians = _second_base_derivatives(transform)
    jinv = transform.inverse_jacobian
    finv = transform.fiber_inverse
    residuals = []
    for sigma in range(1, m + 1):
        for s in range(1, n + 1):
            acc = ExprSum()
            for k in range(1, n + 1):
                inner = ExprSum()
                for (p, l1, l2), h in hessians.items():
                    for tau in range(1, m + 1):
                        weight = finv[tau - 1][sigma - 1]
                        if weight.is_zero:
                            continue
                        first = partial(density, tau, (l1, l2, k)) * jinv[s - 1][p - 1]
                        second = partial(density, tau, (l1, l2, s)) * jinv[k - 1][p - 1]
                        inner.add((first - second) * h * weight)
                acc.add(formal_derivative(inner.value(), k, space))
            residuals.append(acc.value())
    holds = all(equals_zero(e) for e in residuals)
    logging.debug(f"Third-order obstruction holds: {holds}")
    return residuals, holds


def check_caratheodory_invariance(target: Lagrangian, transform: ChartTransform, r: Optional[int] = None) -> bool:
    """Pulled-back barred Caratheodory form against the unbarred one; `r` defaults to the Lagrangian's order."""
    if r is None:
        r = target.order
    elif r != target.order:
        raise PreconditionError(f"Invariance check for order {r} given a Lagrangian of order {target.order}")
    if r == 3 and not obstruction_3rd(target, transform)[1]:
        raise PreconditionError("The third-order obstruction does not vanish for this transform")
    if r > 3:
        raise PreconditionError(f"Caratheodory invariance is only checked up to order 3, got {r}")
    prolonged = prolong(transform, 2 * r - 1)
    pulled = pullback(prolonged, caratheodory_closed(target))
    return forms_equal(pulled, caratheodory_closed(source_lagrangian(target, transform)))
