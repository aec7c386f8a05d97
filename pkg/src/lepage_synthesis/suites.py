"""Named acceptance suites: deterministic case generation plus one boolean check per case."""

import logging
import random
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from lepage_synthesis.lepage_methods import run_with_timeout
from lepage_synthesis.syntax.exterior import (
    Form,
    contact_component,
    contact_form,
    contract,
    dx,
    dy,
    exterior_derivative,
    formal_derivative_field,
    forms_equal,
    horizontalize,
    linear_combination,
    pullback,
    wedge,
)
from lepage_synthesis.syntax.jet import FieldCoord, JetSpace
from lepage_synthesis.syntax.kernel import ExprSum, ScalarExpr, equals_zero, raw_partial, x, y
from lepage_synthesis.syntax.printing import expr_to_text, symbol_namer
from lepage_synthesis.synthesis.charts import (
    check_caratheodory_invariance,
    check_theta_invariance,
    linear_transform,
    nonlinear_test_transform,
    obstruction_3rd,
    prolong,
)
from lepage_synthesis.synthesis.lepage import (
    Lagrangian,
    caratheodory_closed,
    caratheodory_contraction,
    caratheodory_factors,
    caratheodory_first,
    check_lepage,
    euler_lagrange,
    euler_lagrange_expressions,
    euler_lagrange_from_expressions,
    fundamental_form,
    principal_component,
)
from lepage_synthesis.synthesis.relativity import (
    einstein_el,
    hilbert_caratheodory_factors,
    hilbert_lagrangian,
    hilbert_theta,
)

SUITES = ("contraction", "closed-factors", "lepage", "fundamental", "invariance", "obstruction", "hilbert", "calculus")

Check = Callable[[], bool]


@dataclass(frozen=True)
class CaseResult:
    suite: str
    case_index: int
    n: int
    m: int
    r: int
    lagrangian: str
    status: str
    seconds: float

    def as_row(self) -> dict:
        return {
            'suite': self.suite,
            'case_index': self.case_index,
            'n': self.n,
            'm': self.m,
            'r': self.r,
            'lagrangian': self.lagrangian,
            'status': self.status,
            'seconds': round(self.seconds, 3),
        }


def space_for(n: int, m: int, r: int) -> JetSpace:
    return JetSpace(n, m, max(2 * r, 1))


def coordinates_upto(space: JetSpace, r: int) -> List[ScalarExpr]:
    atoms = [x(i) for i in range(1, space.n + 1)]
    for sigma in range(1, space.m + 1):
        atoms += [y(sigma, J) for J in space.multi_indices_upto(r)]
    return atoms


def random_polynomial(rng: random.Random, atoms: List[ScalarExpr], degree: int = 3, max_terms: int = 4) -> ScalarExpr:
    acc = ExprSum()
    for _ in range(rng.randint(1, max_terms)):
        term = ScalarExpr.constant(rng.choice([-3, -2, -1, 1, 2, 3]))
        for _ in range(rng.randint(1, degree)):
            term = term * rng.choice(atoms)
        acc.add(term)
    return acc.value()


def random_lagrangian(rng: random.Random, n: int, m: int, r: int, nonvanishing: bool = False,
                      space: Optional[JetSpace] = None) -> Lagrangian:
    """Polynomial Lagrangian of degree at most 3 that uses at least one r-th order coordinate."""
    space = space or space_for(n, m, r)
    top = [y(sigma, J) for sigma in range(1, m + 1) for J in space.multi_indices(r)]
    density = random_polynomial(rng, coordinates_upto(space, r)) + rng.choice(top) * rng.choice([1, 2, -1])
    if nonvanishing:
        density = density + 1
    return Lagrangian(space, r, density, nonvanishing)


def _contraction(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    n, m = rng.choice([2, 3]), rng.choice([1, 2])
    lagrangian = random_lagrangian(rng, n, m, 1, nonvanishing=True)
    return lagrangian, lambda: forms_equal(caratheodory_contraction(lagrangian), caratheodory_first(lagrangian))


def _closed_factors(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    lagrangian = random_lagrangian(rng, 2, 1, 2, nonvanishing=True)

    def check() -> bool:
        closed = caratheodory_closed(lagrangian)
        if not forms_equal(caratheodory_contraction(lagrangian), closed):
            return False
        return check_lepage(closed, lagrangian).ok

    return lagrangian, check


def _lepage(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    r = 1 + index % 2
    n, m = (rng.choice([2, 3]), rng.choice([1, 2])) if r == 1 else (2, 1)
    lagrangian = random_lagrangian(rng, n, m, r)

    def check() -> bool:
        if not check_lepage(principal_component(lagrangian), lagrangian).ok:
            return False
        oracle = euler_lagrange_from_expressions(lagrangian.space, euler_lagrange_expressions(lagrangian), 2 * r)
        return forms_equal(euler_lagrange(lagrangian), oracle)

    return lagrangian, check


def _fundamental_expected(space: JetSpace) -> Form:
    """Z for y1_1 * y2_2 on n = m = 2, written out by hand."""
    w1, w2 = contact_form(space, 1), contact_form(space, 2)
    omega0 = wedge(dx(space, 1), dx(space, 2))
    return linear_combination(space, 2, 1, [
        (y(1, (1,)) * y(2, (2,)), omega0),
        (y(2, (2,)), wedge(w1, dx(space, 2))),
        (-y(1, (1,)), wedge(w2, dx(space, 1))),
        (ScalarExpr.constant(1) / 2, wedge(w1, w2)),
    ])


def _fundamental(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    space = space_for(2, 2, 1)
    u1, u2 = y(1, (1,)), y(2, (2,))
    match index % 3:
        case 0:
            lagrangian = Lagrangian(space, 1, u1 * u2)
            return lagrangian, lambda: forms_equal(fundamental_form(lagrangian), _fundamental_expected(space))
        case 1:
            # Jacobian determinant: a total divergence
            lagrangian = Lagrangian(space, 1, u1 * u2 - y(1, (2,)) * y(2, (1,)))
            return lagrangian, lambda: exterior_derivative(fundamental_form(lagrangian)).is_zero()
        case _:
            lagrangian = Lagrangian(space, 1, y(1))
            return lagrangian, lambda: not exterior_derivative(fundamental_form(lagrangian)).is_zero()


def _invariance(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    lagrangian = random_lagrangian(rng, 2, 1, 2, nonvanishing=True)
    transform = nonlinear_test_transform(lagrangian.space)

    def check() -> bool:
        return check_theta_invariance(lagrangian, transform) and check_caratheodory_invariance(lagrangian, transform)

    return lagrangian, check


def _obstruction(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    space = space_for(2, 1, 3)
    match index % 4:
        case 0:
            # third-order declared, free of third derivatives
            density = random_polynomial(rng, coordinates_upto(space, 2)) + y(1, (1, 2)) + 1
            lagrangian = Lagrangian(space, 3, density, nonvanishing=True)
            transform = nonlinear_test_transform(space)
            return lagrangian, lambda: obstruction_3rd(lagrangian, transform)[1]
        case 1:
            lagrangian = random_lagrangian(rng, 2, 1, 3, space=space)
            transform = linear_transform(space, [[1, 2], [rng.choice([1, -1, 3]), 1]])
            return lagrangian, lambda: obstruction_3rd(lagrangian, transform)[1]
        case 2:
            lagrangian = Lagrangian(space, 3, y(1) * y(1, (1, 1, 1)))
            transform = nonlinear_test_transform(space)
            return lagrangian, lambda: not obstruction_3rd(lagrangian, transform)[1]
        case _:
            lagrangian = Lagrangian(space, 3, y(1, (1, 1)) + y(1, (2,)) ** 2 + 1, nonvanishing=True)
            transform = nonlinear_test_transform(space)
            return lagrangian, lambda: check_caratheodory_invariance(lagrangian, transform, 3)


def _second_order_free(rho: Form) -> bool:
    space = rho.space
    seconds = [FieldCoord(sigma, J) for sigma in range(1, space.m + 1) for J in space.multi_indices(2)]
    return all(raw_partial(c, atom).is_zero for c in rho.terms.values() for atom in seconds)


def _hilbert(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    lagrangian = hilbert_lagrangian(2)
    match index % 4:
        case 0:
            return lagrangian, lambda: _second_order_free(hilbert_theta(2))
        case 1:
            return lagrangian, lambda: einstein_el(2).is_zero()
        case 2:
            def check() -> bool:
                printed = hilbert_caratheodory_factors(2)
                generic = caratheodory_factors(lagrangian)
                return equals_zero(printed.prefactor - generic.prefactor) and all(
                    forms_equal(a, b) for a, b in zip(printed.factors, generic.factors))
            return lagrangian, check
        case _:
            return lagrangian, lambda: check_lepage(hilbert_theta(2), lagrangian).ok


def random_form(rng: random.Random, space: JetSpace, degree: int, order: int) -> Form:
    covectors = [dx(space, i) for i in range(1, space.n + 1)]
    covectors += [dy(space, sigma, J) for sigma in range(1, space.m + 1) for J in space.multi_indices_upto(order)]
    atoms = coordinates_upto(space, order)
    items = []
    for _ in range(rng.randint(1, 3)):
        monomial = Form.function(space, 1, 0)
        for f in rng.sample(covectors, degree):
            monomial = wedge(monomial, f)
        items.append((random_polynomial(rng, atoms, degree=2, max_terms=2), monomial))
    return linear_combination(space, degree, order, items)


def _calculus(rng: random.Random, index: int) -> Tuple[Lagrangian, Check]:
    space = JetSpace(2, 1, 3)
    lagrangian = Lagrangian(space, 1, y(1, (1,)))
    match index % 5:
        case 0:
            rho = random_form(rng, space, rng.choice([0, 1]), 1)
            return lagrangian, lambda: exterior_derivative(exterior_derivative(rho)).is_zero()
        case 1:
            a, b = random_form(rng, space, 1, 1), random_form(rng, space, 1, 1)
            return lagrangian, lambda: forms_equal(horizontalize(wedge(a, b)), wedge(horizontalize(a), horizontalize(b)))
        case 2:
            i = rng.choice([1, 2])
            J = rng.choice(space.multi_indices_upto(1))
            return lagrangian, lambda: contract(formal_derivative_field(space, i, len(J) + 1),
                                                contact_form(space, 1, J)).is_zero()
        case 3:
            rho = random_form(rng, space, 2, 1)

            def check() -> bool:
                total = contact_component(rho, 0)
                for k in range(1, rho.degree + 1):
                    total = total + contact_component(rho, k)
                return forms_equal(total, rho)
            return lagrangian, check
        case _:
            rho = random_form(rng, space, 1, 1)
            prolonged = prolong(nonlinear_test_transform(space), 1)
            return lagrangian, lambda: forms_equal(pullback(prolonged, exterior_derivative(rho)),
                                                   exterior_derivative(pullback(prolonged, rho)))


def get_suite(name: str) -> Callable[[random.Random, int], Tuple[Lagrangian, Check]]:
    match name:
        case "contraction":
            return _contraction
        case "closed-factors":
            return _closed_factors
        case "lepage":
            return _lepage
        case "fundamental":
            return _fundamental
        case "invariance":
            return _invariance
        case "obstruction":
            return _obstruction
        case "hilbert":
            return _hilbert
        case "calculus":
            return _calculus
        case _:
            raise ValueError(f"Invalid suite = {name}")


def default_cases(name: str) -> int:
    match name:
        case "contraction":
            return 25
        case "closed-factors" | "lepage" | "invariance":
            return 15
        case "fundamental":
            return 3
        case "obstruction" | "hilbert":
            return 4
        case "calculus":
            # five properties, 50 instances each
            return 250
        case _:
            raise ValueError(f"Invalid suite = {name}")


def build_case(name: str, index: int, seed: int = 0) -> Tuple[Lagrangian, Check]:
    rng = random.Random(f"{name}:{seed}:{index}")
    return get_suite(name)(rng, index)


def run_case(name: str, index: int, seed: int = 0) -> bool:
    _, check = build_case(name, index, seed)
    return bool(check())


def describe_case(name: str, index: int, seed: int = 0) -> dict:
    lagrangian, _ = build_case(name, index, seed)
    space = lagrangian.space
    return {
        'suite': name,
        'case_index': index,
        'n': space.n,
        'm': space.m,
        'r': lagrangian.order,
        'lagrangian': expr_to_text(lagrangian.density, symbol_namer(space)),
    }


def run_suite(name: str, cases: Optional[int] = None, seed: int = 0,
              timeout: Optional[float] = None) -> List[CaseResult]:
    results = []
    for index in range(default_cases(name) if cases is None else cases):
        info = describe_case(name, index, seed)
        logging.info(f"Running {name} case {index}: {info['lagrangian']}")
        begin_time = time.time()
        if timeout is None:
            try:
                status = "pass" if run_case(name, index, seed) else "fail"
            except Exception as e:
                logging.error(f"Error in {name} case {index}: {e}")
                status = "error"
        else:
            outcome = run_with_timeout(run_case, (name, index, seed), timeout)
            elapsed = time.time() - begin_time
            if outcome is None:
                status = "timeout" if elapsed >= timeout else "error"
            else:
                status = "pass" if outcome else "fail"
        results.append(CaseResult(status=status, seconds=time.time() - begin_time, **info))
    return results
