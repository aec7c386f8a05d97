import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List

from lepage_synthesis.errors import PreconditionError
from lepage_synthesis.syntax.exterior import Form, contact_form, dx, linear_combination
from lepage_synthesis.syntax.jet import Atom, FieldCoord, JetSpace, MultiIndex
from lepage_synthesis.syntax.kernel import (
    ExprSum,
    ScalarExpr,
    formal_derivative,
    inverse,
    inverse_matrix,
    partial,
    sqrt,
    substitute,
    y,
)
from lepage_synthesis.synthesis.lepage import (
    DecomposableForm,
    Lagrangian,
    euler_lagrange,
    principal_component,
)

SIGNATURES = ("riemannian", "lorentzian")

Matrix = List[List[ScalarExpr]]

_HALF = Fraction(1, 2)


def metric_space(n: int, order_cap: int = 4) -> JetSpace:
    if not 2 <= n <= 4:
        raise PreconditionError(f"Metric examples are built for n in 2..4, got {n}")
    return JetSpace(n, n * (n + 1) // 2, order_cap, metric=True)


def g(space: JetSpace, a: int, b: int, J: MultiIndex = ()) -> ScalarExpr:
    """g_{ab,J} as a jet coordinate; a and b may come in any order."""
    return y(space.field_of_pair(a, b), J)


def metric_partial(e: ScalarExpr, space: JetSpace, a: int, b: int, J: MultiIndex = ()) -> ScalarExpr:
    """Partial by g_{ab,J} treating g_ab and g_ba as one symmetric variable split in half."""
    value = partial(e, space.field_of_pair(a, b), J)
    return value if a == b else value.scale(_HALF)


def _sum(terms) -> ScalarExpr:
    acc = ExprSum()
    for term in terms:
        if not term.is_zero:
            acc.add(term)
    return acc.value()


@dataclass(frozen=True, eq=False)
class MetricObjects:
    space: JetSpace
    signature: str
    metric: Matrix
    inverse: Matrix
    determinant: ScalarExpr
    root: ScalarExpr
    christoffel: List[Matrix]
    ricci: Matrix
    scalar_curvature: ScalarExpr

    @property
    def density(self) -> ScalarExpr:
        return self.scalar_curvature * self.root

    def einstein_upper(self) -> Matrix:
        """G^{ab} = g^{ac} g^{bd} R_cd - R g^{ab} / 2."""
        n = self.space.n
        ginv, ric, R = self.inverse, self.ricci, self.scalar_curvature
        return [[_sum(ginv[a][c] * ginv[b][d] * ric[c][d] for c in range(n) for d in range(n))
                 - (R * ginv[a][b]).scale(_HALF)
                 for b in range(n)] for a in range(n)]


@lru_cache(maxsize=None)
def metric_objects(n: int, signature: str = "riemannian") -> MetricObjects:
    if signature not in SIGNATURES:
        raise ValueError(f"Invalid signature = {signature}")
    space = metric_space(n)
    idx = range(n)
    metric = [[g(space, a + 1, b + 1) for b in idx] for a in idx]
    ginv, det = inverse_matrix(metric)
    root = sqrt(det if signature == "riemannian" else -det)
    logging.debug(f"Building Christoffel symbols for n={n}")
    # first derivatives of the metric as jet coordinates: dg[a][b][c] = g_{ab,c}
    dg = [[[g(space, a + 1, b + 1, (c + 1,)) for c in idx] for b in idx] for a in idx]
    lowered = [[[_half_sum(dg[d][c][b], dg[d][b][c], -dg[b][c][d]) for c in idx] for b in idx] for d in idx]
    christoffel = [[[_sum(ginv[a][d] * lowered[d][b][c] for d in idx) for c in idx] for b in idx] for a in idx]
    logging.debug(f"Building Ricci tensor for n={n}")
    ricci = [[_sum(
        [formal_derivative(christoffel[a][b][d], a + 1, space) for a in idx]
        + [-formal_derivative(christoffel[a][b][a], d + 1, space) for a in idx]
        + [christoffel[a][a][e] * christoffel[e][b][d] for a in idx for e in idx]
        + [-(christoffel[a][d][e] * christoffel[e][b][a]) for a in idx for e in idx]
    ) for d in idx] for b in idx]
    curvature = _sum(ginv[b][d] * ricci[b][d] for b in idx for d in idx)
    return MetricObjects(space, signature, metric, ginv, det, root, christoffel, ricci, curvature)


def _half_sum(*terms: ScalarExpr) -> ScalarExpr:
    return _sum(terms).scale(_HALF)


def scalar_curvature(n: int, signature: str = "riemannian") -> ScalarExpr:
    return metric_objects(n, signature).scalar_curvature


def hilbert_lagrangian(n: int, signature: str = "riemannian") -> Lagrangian:
    objects = metric_objects(n, signature)
    return Lagrangian(objects.space, 2, objects.density, nonvanishing=True)


def hilbert_theta(n: int, signature: str = "riemannian") -> Form:
    return principal_component(hilbert_lagrangian(n, signature))


def _pair_sum(values: Dict[tuple, ScalarExpr], i: int, j: int, *rest) -> ScalarExpr:
    if i == j:
        return values[(i, j) + rest]
    return values[(i, j) + rest] + values[(j, i) + rest]


def hilbert_caratheodory_factors(n: int, signature: str = "riemannian") -> DecomposableForm:
    """Wedge factors from the closed chart formula for the Hilbert Lagrangian.

    The printed coefficients sum over ordered pairs (i, j); on the sorted pair
    label they add up as E(i, j) + E(j, i) for i != j.
    """
    if n not in (2, 3):
        raise PreconditionError(f"The Hilbert Caratheodory formula is checked for n in 2..3, got {n}")
    objects = metric_objects(n, signature)
    space = objects.space
    ginv, root = objects.inverse, objects.root
    idx = range(n)
    density = objects.density
    factors = []
    for k in idx:
        first: Dict[tuple, ScalarExpr] = {}
        second: Dict[tuple, ScalarExpr] = {}
        for i in idx:
            for j in idx:
                first[(i, j)] = _sum(
                    (ginv[q][p] * ginv[s][i] * ginv[j][k]
                     - (ginv[s][q] * ginv[p][i] * ginv[j][k]).scale(2)
                     + ginv[p][i] * ginv[q][j] * ginv[s][k]) * g(space, p + 1, q + 1, (s + 1,))
                    for p in idx for q in idx for s in idx
                ).scale(_HALF) * root
                for l in idx:
                    second[(i, j, l)] = (ginv[i][l] * ginv[k][j] - ginv[k][l] * ginv[j][i]) * root
        items = [(density, dx(space, k + 1))]
        for sigma, (a, b) in enumerate(space.pairs, start=1):
            items.append((_pair_sum(first, a - 1, b - 1), contact_form(space, sigma)))
            for l in idx:
                items.append((_pair_sum(second, a - 1, b - 1, l), contact_form(space, sigma, (l + 1,))))
        factors.append(linear_combination(space, 1, 2, items))
    return DecomposableForm(inverse(density) ** (n - 1), tuple(factors))


def hilbert_caratheodory(n: int, signature: str = "riemannian") -> Form:
    return hilbert_caratheodory_factors(n, signature).expand()


def einstein_density(n: int, signature: str = "riemannian") -> List[ScalarExpr]:
    """Euler-Lagrange expressions of the Hilbert Lagrangian from curvature: -root * G^{ab}, doubled off the diagonal."""
    objects = metric_objects(n, signature)
    upper = objects.einstein_upper()
    expressions = []
    for a, b in objects.space.pairs:
        value = -(objects.root * upper[a - 1][b - 1])
        expressions.append(value if a == b else value.scale(2))
    return expressions


def einstein_el(n: int, signature: str = "riemannian") -> Form:
    if n not in (2, 3):
        raise PreconditionError(f"The Einstein check is built for n in 2..3, got {n}")
    return euler_lagrange(hilbert_lagrangian(n, signature))


def flat_substitution(space: JetSpace) -> Dict[Atom, ScalarExpr]:
    """g = identity with all derivatives zero, for every jet coordinate up to the order cap."""
    mapping: Dict[Atom, ScalarExpr] = {}
    for sigma, (a, b) in enumerate(space.pairs, start=1):
        for J in space.multi_indices_upto(space.order_cap):
            mapping[FieldCoord(sigma, J)] = ScalarExpr.constant(1 if a == b and not J else 0)
    return mapping


def evaluate_metric(e: ScalarExpr, space: JetSpace, values: Dict[tuple, object]) -> ScalarExpr:
    """Substitute g_{ab,J} = values[(a, b, J)], defaulting to zero, for all jet coordinates."""
    mapping: Dict[Atom, ScalarExpr] = {}
    for sigma, (a, b) in enumerate(space.pairs, start=1):
        for J in space.multi_indices_upto(space.order_cap):
            value = values.get((a, b, J), 0)
            mapping[FieldCoord(sigma, J)] = value if isinstance(value, ScalarExpr) else ScalarExpr.constant(value)
    return substitute(e, mapping)
