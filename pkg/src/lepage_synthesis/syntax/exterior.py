from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Optional, Tuple

from lepage_synthesis.errors import OrderCapError, PreconditionError
from lepage_synthesis.syntax.jet import (
    Atom,
    BaseCoord,
    FieldCoord,
    JetSpace,
    MultiIndex,
    canonical,
    merge_index,
)
from lepage_synthesis.syntax.kernel import (
    ONE,
    ZERO,
    ExprSum,
    ScalarExpr,
    as_expr,
    equals_zero,
    gradient,
    opaque,
    permutation_sign,
    substitute,
    y,
)

if TYPE_CHECKING:
    from lepage_synthesis.synthesis.charts import ProlongedTransform


@dataclass(eq=True, frozen=True)
class Covector:
    @cached_property
    def key(self) -> tuple:
        return covector_key(self)


@dataclass(eq=True, frozen=True)
class DX(Covector):
    index: int


@dataclass(eq=True, frozen=True)
class DY(Covector):
    field: int
    jet: MultiIndex = ()


@dataclass(eq=True, frozen=True)
class Omega(Covector):
    """Contact 1-form, used only by the contact-basis view."""
    field: int
    jet: MultiIndex = ()


def covector_key(cov: Covector) -> tuple:
    match cov:
        case DX(i):
            return (0, i)
        case DY(sigma, J):
            return (1, sigma, J)
        case Omega(sigma, J):
            return (2, sigma, J)
        case _:
            raise TypeError(f'Unknown covector type: {type(cov)}')


WedgeMonomial = Tuple[Covector, ...]


def wedge_monomials(a: WedgeMonomial, b: WedgeMonomial) -> Tuple[Optional[WedgeMonomial], int]:
    if not a:
        return b, 1
    if not b:
        return a, 1
    seq = a + b
    if len(set(seq)) < len(seq):
        return None, 0
    sign = permutation_sign([c.key for c in seq])
    return tuple(sorted(seq, key=lambda c: c.key)), sign


def _covector_of(atom: Atom) -> Covector:
    match atom:
        case BaseCoord(i):
            return DX(i)
        case FieldCoord(sigma, J):
            return DY(sigma, J)
        case _:
            raise TypeError(f'Unknown coordinate type: {type(atom)}')


def _coordinate_of(cov: Covector) -> Atom:
    match cov:
        case DX(i):
            return BaseCoord(i)
        case DY(sigma, J):
            return FieldCoord(sigma, J)
        case _:
            raise TypeError(f'Covector has no coordinate: {type(cov)}')


@dataclass(frozen=True, eq=False)
class Form:
    space: JetSpace
    degree: int
    order: int
    terms: Dict[WedgeMonomial, ScalarExpr] = field(default_factory=dict)

    @staticmethod
    def zero(space: JetSpace, degree: int, order: int = 0) -> "Form":
        return Form(space, degree, order, {})

    @staticmethod
    def function(space: JetSpace, f, order: Optional[int] = None) -> "Form":
        f = as_expr(f)
        return Form(space, 0, f.jet_order if order is None else order, {(): f} if not f.is_zero else {})

    def __repr__(self) -> str:
        from lepage_synthesis.syntax.printing import form_to_text
        return f"Form(degree={self.degree}, order={self.order}, {form_to_text(self)})"

    def promote(self, order: int) -> "Form":
        return Form(self.space, self.degree, max(order, self.order), self.terms)

    def coefficient(self, *covectors: Covector) -> ScalarExpr:
        """Coefficient of the wedge of `covectors`, taken in the given order."""
        mono, sign = (), 1
        for cov in covectors:
            mono, s = wedge_monomials(mono, (cov,))
            if mono is None:
                return ZERO
            sign *= s
        value = self.terms.get(mono, ZERO)
        return value if sign > 0 else -value

    def _check_compatible(self, other: "Form"):
        if self.degree != other.degree:
            raise ValueError(f"Cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check_compatible(other)
        acc = dict(self.terms)
        for mono, c in other.terms.items():
            v = acc.get(mono, ZERO) + c
            if v.is_zero:
                acc.pop(mono, None)
            else:
                acc[mono] = v
        return Form(self.space, self.degree, max(self.order, other.order), acc)

    def __neg__(self) -> "Form":
        return Form(self.space, self.degree, self.order, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, f) -> "Form":
        f = as_expr(f)
        if f.is_zero:
            return Form.zero(self.space, self.degree, self.order)
        terms = {}
        for mono, c in self.terms.items():
            v = c * f
            if not v.is_zero:
                terms[mono] = v
        return Form(self.space, self.degree, max(self.order, f.jet_order), terms)

    def is_zero(self) -> bool:
        return all(equals_zero(c) for c in self.terms.values())

    def validate(self):
        """Check that coefficients and dY factors respect the declared jet order."""
        for mono, c in self.terms.items():
            if len(mono) != self.degree:
                raise ValueError(f"Monomial {mono} does not have degree {self.degree}")
            if c.jet_order > self.order:
                raise OrderCapError(f"Coefficient of order {c.jet_order} on a form of order {self.order}")
            for cov in mono:
                if isinstance(cov, (DY, Omega)) and len(cov.jet) > self.order:
                    raise OrderCapError(f"Factor {cov} exceeds form order {self.order}")
        return self


def _build(space: JetSpace, degree: int, order: int, terms: Dict[WedgeMonomial, ScalarExpr]) -> Form:
    return Form(space, degree, order, {m: c for m, c in terms.items() if not c.is_zero})


def _from_sums(space: JetSpace, degree: int, order: int, sums: Dict[WedgeMonomial, ExprSum]) -> Form:
    return _build(space, degree, order, {m: s.value() for m, s in sums.items()})


def linear_combination(space: JetSpace, degree: int, order: int,
                       items: Iterable[Tuple[ScalarExpr, Form]]) -> Form:
    sums: Dict[WedgeMonomial, ExprSum] = {}
    for coef, rho in items:
        if coef.is_zero:
            continue
        if rho.degree != degree:
            raise ValueError(f"Cannot add forms of degree {degree} and {rho.degree}")
        order = max(order, rho.order, coef.jet_order)
        for mono, c in rho.terms.items():
            sums.setdefault(mono, ExprSum()).add(coef * c)
    return _from_sums(space, degree, order, sums)


def dx(space: JetSpace, i: int) -> Form:
    space.check_base(i)
    return Form(space, 1, 0, {(DX(i),): ONE})


def dy(space: JetSpace, sigma: int, J: Iterable[int] = ()) -> Form:
    J = canonical(J)
    space.check_field(sigma, J)
    return Form(space, 1, len(J), {(DY(sigma, J),): ONE})


def contact_form(space: JetSpace, sigma: int, J: Iterable[int] = ()) -> Form:
    """omega^sigma_J = dy^sigma_J - y^sigma_{Js} dx^s, living on order |J| + 1."""
    J = canonical(J)
    space.check_field(sigma, J)
    if len(J) + 1 > space.order_cap:
        raise OrderCapError(f"Contact form of jet order {len(J)} needs order cap {len(J) + 1}")
    terms = {(DY(sigma, J),): ONE}
    for s in range(1, space.n + 1):
        terms[(DX(s),)] = -y(sigma, merge_index(J, s))
    return Form(space, 1, len(J) + 1, terms)


def wedge(a: Form, b: Form) -> Form:
    if a.degree + b.degree > a.space.n + 1:
        raise PreconditionError(f"Wedge of degrees {a.degree} and {b.degree} overflows n + 1 = {a.space.n + 1}")
    sums: Dict[WedgeMonomial, ExprSum] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            mono, sign = wedge_monomials(m1, m2)
            if mono is None:
                continue
            sums.setdefault(mono, ExprSum()).add(c1 * c2, sign)
    return _from_sums(a.space, a.degree + b.degree, max(a.order, b.order), sums)


def wedge_all(forms: Iterable[Form]) -> Form:
    forms = list(forms)
    result = forms[0]
    for f in forms[1:]:
        result = wedge(result, f)
    return result


def differential(f: ScalarExpr) -> Dict[Covector, ScalarExpr]:
    return {_covector_of(coord): pf for coord, pf in gradient(f).items()}


def exterior_derivative(rho: Form) -> Form:
    sums: Dict[WedgeMonomial, ExprSum] = {}
    for mono, c in rho.terms.items():
        for cov, pc in differential(c).items():
            new, sign = wedge_monomials((cov,), mono)
            if new is None:
                continue
            sums.setdefault(new, ExprSum()).add(pc, sign)
    return _from_sums(rho.space, rho.degree + 1, rho.order, sums)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Components keyed by the coordinate covector they pair with: DX(i) for d/dx^i, DY(sigma, J) for d/dy^sigma_J."""
    space: JetSpace
    order: int
    components: Dict[Covector, ScalarExpr]


def coordinate_field(space: JetSpace, cov: Covector) -> VectorField:
    order = len(cov.jet) if isinstance(cov, DY) else 0
    return VectorField(space, order, {cov: ONE})


def formal_derivative_field(space: JetSpace, i: int, order: int) -> VectorField:
    """d_i truncated to the coordinates of order `order`: pairs dy^sigma_J, |J| < order, with y^sigma_{Ji}."""
    space.check_base(i)
    comps: Dict[Covector, ScalarExpr] = {DX(i): ONE}
    for sigma in range(1, space.m + 1):
        for J in space.multi_indices_upto(order - 1):
            comps[DY(sigma, J)] = y(sigma, merge_index(J, i))
    return VectorField(space, order, comps)


def vertical_test_field(space: JetSpace, order: int) -> VectorField:
    comps = {
        DY(sigma, J): opaque("xi", (sigma,) + J)
        for sigma in range(1, space.m + 1)
        for J in space.multi_indices_upto(order)
    }
    return VectorField(space, order, comps)


def contract(X: VectorField, rho: Form) -> Form:
    if rho.degree == 0:
        raise PreconditionError("Cannot contract a 0-form")
    sums: Dict[WedgeMonomial, ExprSum] = {}
    order = rho.order
    for mono, c in rho.terms.items():
        for k, cov in enumerate(mono):
            comp = X.components.get(cov)
            if comp is None or comp.is_zero:
                continue
            order = max(order, comp.jet_order)
            rest = mono[:k] + mono[k + 1:]
            sums.setdefault(rest, ExprSum()).add(c * comp, -1 if k % 2 else 1)
    return _from_sums(rho.space, rho.degree - 1, order, sums)


OneForm = Dict[Covector, ScalarExpr]


def _expand(rho: Form, image: Callable[[Covector], OneForm], order: int,
            coefficient_map: Optional[Callable[[ScalarExpr], ScalarExpr]] = None,
            keep: Optional[Callable[[WedgeMonomial], bool]] = None) -> Form:
    """Replace every factor of every monomial by a 1-form and multiply out."""
    images: Dict[Covector, OneForm] = {}
    sums: Dict[WedgeMonomial, ExprSum] = {}
    for mono, c in rho.terms.items():
        product: Dict[WedgeMonomial, ScalarExpr] = {(): ONE}
        for cov in mono:
            if cov not in images:
                images[cov] = image(cov)
            step: Dict[WedgeMonomial, ExprSum] = {}
            for pm, pc in product.items():
                for c1, e1 in images[cov].items():
                    new, sign = wedge_monomials(pm, (c1,))
                    if new is None:
                        continue
                    step.setdefault(new, ExprSum()).add(pc * e1, sign)
            product = {m: s.value() for m, s in step.items()}
            product = {m: v for m, v in product.items() if not v.is_zero}
        coef = coefficient_map(c) if coefficient_map else c
        for pm, pc in product.items():
            if keep is not None and not keep(pm):
                continue
            sums.setdefault(pm, ExprSum()).add(coef * pc)
    return _from_sums(rho.space, rho.degree, order, sums)


def _require_order(space: JetSpace, order: int, what: str):
    if order > space.order_cap:
        raise OrderCapError(f"{what} needs jet order {order} above order cap {space.order_cap}")


def horizontalize(rho: Form) -> Form:
    space = rho.space
    order = rho.order + 1
    _require_order(space, order, "Horizontalization")

    def image(cov: Covector) -> OneForm:
        match cov:
            case DX(_):
                return {cov: ONE}
            case DY(sigma, J):
                return {DX(s): y(sigma, merge_index(J, s)) for s in range(1, space.n + 1)}
            case Omega():
                return {}
            case _:
                raise TypeError(f'Unknown covector type: {type(cov)}')

    return _expand(rho, image, order)


def to_contact_basis(rho: Form) -> Form:
    """Rewrite dy^sigma_J as omega^sigma_J + y^sigma_{Js} dx^s; the result may be promoted one order."""
    space = rho.space
    top = max((len(cov.jet) + 1 for mono in rho.terms for cov in mono if isinstance(cov, DY)), default=0)
    order = max(rho.order, top)
    _require_order(space, order, "Contact basis conversion")

    def image(cov: Covector) -> OneForm:
        match cov:
            case DX(_) | Omega():
                return {cov: ONE}
            case DY(sigma, J):
                img: OneForm = {Omega(sigma, J): ONE}
                for s in range(1, space.n + 1):
                    img[DX(s)] = y(sigma, merge_index(J, s))
                return img
            case _:
                raise TypeError(f'Unknown covector type: {type(cov)}')

    return _expand(rho, image, order)


def from_contact_basis(rho: Form) -> Form:
    space = rho.space

    def image(cov: Covector) -> OneForm:
        match cov:
            case DX(_) | DY():
                return {cov: ONE}
            case Omega(sigma, J):
                img: OneForm = {DY(sigma, J): ONE}
                for s in range(1, space.n + 1):
                    img[DX(s)] = -y(sigma, merge_index(J, s))
                return img
            case _:
                raise TypeError(f'Unknown covector type: {type(cov)}')

    return _expand(rho, image, rho.order)


def contact_degree(mono: WedgeMonomial) -> int:
    return sum(1 for cov in mono if isinstance(cov, Omega))


def contact_component(rho: Form, k: int) -> Form:
    """p_k: the part of rho with exactly k contact factors, on the promoted order."""
    if not 0 <= k <= rho.degree:
        raise PreconditionError(f"Contact degree {k} outside 0..{rho.degree}")
    order = rho.order + 1
    _require_order(rho.space, order, "Contact decomposition")
    view = to_contact_basis(rho)
    kept = Form(rho.space, rho.degree, order,
                {m: c for m, c in view.terms.items() if contact_degree(m) == k})
    return from_contact_basis(kept)


def pullback(transform: "ProlongedTransform", rho: Form) -> Form:
    if rho.order > transform.order:
        raise PreconditionError(f"Transform prolonged to order {transform.order}, form lives on order {rho.order}")
    mapping = transform.atom_map

    def image(cov: Covector) -> OneForm:
        return differential(mapping[_coordinate_of(cov)])

    return _expand(rho, image, rho.order, coefficient_map=lambda c: substitute(c, mapping))


def omega_forms(space: JetSpace) -> Tuple[Form, List[Form]]:
    omega0 = wedge_all([dx(space, i) for i in range(1, space.n + 1)])
    omegas = [contract(coordinate_field(space, DX(j)), omega0) for j in range(1, space.n + 1)]
    return omega0, omegas


def lie_derivative(X: VectorField, rho: Form) -> Form:
    first = contract(X, exterior_derivative(rho))
    if rho.degree == 0:
        return first
    return first + exterior_derivative(contract(X, rho))


def forms_equal(a: Form, b: Form) -> bool:
    return a.degree == b.degree and (a - b).is_zero()
