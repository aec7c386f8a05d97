from typing import Callable, List, Optional, Tuple

import sympy

from lepage_synthesis.syntax.exterior import DX, DY, Covector, Form, Omega, WedgeMonomial, to_contact_basis
from lepage_synthesis.syntax.jet import Atom, BaseCoord, FieldCoord, InverseAtom, JetSpace, OpaqueAtom, SqrtAtom
from lepage_synthesis.syntax.kernel import Coefficient, ScalarExpr, default_symbol_name, to_sympy

FORMATS = ("text", "latex", "sexpr")
BASES = ("contact", "coordinate")


def _jet_suffix(J) -> str:
    return "_" + "".join(map(str, J)) if J else ""


def symbol_namer(space: Optional[JetSpace]) -> Callable[[Atom], str]:
    if space is None or not space.metric:
        return default_symbol_name

    def name(atom: Atom) -> str:
        if isinstance(atom, FieldCoord):
            return space.field_symbol(atom.field) + _jet_suffix(atom.jet)
        return default_symbol_name(atom)

    return name


def _rational_text(c: Coefficient) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _atom_text(atom: Atom, name: Callable[[Atom], str]) -> str:
    match atom:
        case InverseAtom(P):
            return f"inv({expr_to_text(P, name)})"
        case SqrtAtom(P):
            return f"sqrt({expr_to_text(P, name)})"
        case BaseCoord() | FieldCoord() | OpaqueAtom():
            return name(atom)
        case _:
            raise TypeError(f'Unknown atom type: {type(atom)}')


def _term_text(mono, c: Coefficient, name: Callable[[Atom], str]) -> str:
    factors = [_atom_text(a, name) + (f"^{p}" if p > 1 else "") for a, p in mono]
    if not factors:
        return _rational_text(c)
    body = "*".join(factors)
    if c == 1:
        return body
    if c == -1:
        return "-" + body
    return f"{_rational_text(c)}*{body}"


def _join_signed(parts: List[str]) -> str:
    out = parts[0]
    for part in parts[1:]:
        out += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
    return out


def expr_to_text(e: ScalarExpr, name: Callable[[Atom], str] = default_symbol_name) -> str:
    if e.is_zero:
        return "0"
    return _join_signed([_term_text(mono, c, name) for mono, c in e.sorted_terms()])


def _atom_latex(atom: Atom, space: Optional[JetSpace]) -> Optional[str]:
    match atom:
        case BaseCoord(i):
            return f"x^{{{i}}}"
        case FieldCoord(sigma, J):
            sub = "".join(map(str, J))
            if space is not None and space.metric:
                a, b = space.pair_of(sigma)
                return f"g_{{{a}{b}{',' + sub if sub else ''}}}"
            return f"y^{{{sigma}}}" + (f"_{{{sub}}}" if sub else "")
        case OpaqueAtom(name, indices, _):
            if not indices:
                return None
            head = f"\\{name}" if name == "xi" else name
            sub = "".join(map(str, indices[1:]))
            return f"{head}^{{{indices[0]}}}" + (f"_{{{sub}}}" if sub else "")
        case _:
            return None


def _latex_names(e: ScalarExpr, space: Optional[JetSpace]) -> dict:
    name = symbol_namer(space)
    names = {}
    for atom in e.all_atoms:
        shown = _atom_latex(atom, space)
        if shown is not None:
            names[sympy.Symbol(name(atom))] = shown
    return names


def expr_to_latex(e: ScalarExpr, space: Optional[JetSpace] = None) -> str:
    return sympy.latex(to_sympy(e, symbol_namer(space)), symbol_names=_latex_names(e, space))


def _atom_sexpr(atom: Atom, name: Callable[[Atom], str]) -> str:
    match atom:
        case InverseAtom(P):
            return f"(inv {expr_to_sexpr(P, name)})"
        case SqrtAtom(P):
            return f"(sqrt {expr_to_sexpr(P, name)})"
        case _:
            return name(atom)


def _term_sexpr(mono, c: Coefficient, name: Callable[[Atom], str]) -> str:
    factors = [_atom_sexpr(a, name) if p == 1 else f"(^ {_atom_sexpr(a, name)} {p})" for a, p in mono]
    if c != 1 or not factors:
        factors.insert(0, _rational_text(c))
    return factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})"


def expr_to_sexpr(e: ScalarExpr, name: Callable[[Atom], str] = default_symbol_name) -> str:
    if e.is_zero:
        return "0"
    terms = [_term_sexpr(mono, c, name) for mono, c in e.sorted_terms()]
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def covector_text(cov: Covector, space: JetSpace) -> str:
    match cov:
        case DX(i):
            return f"dx{i}"
        case DY(sigma, J):
            return "d" + space.field_symbol(sigma) + _jet_suffix(J)
        case Omega(sigma, J):
            return space.contact_symbol(sigma) + _jet_suffix(J)
        case _:
            raise TypeError(f'Unknown covector type: {type(cov)}')


def covector_latex(cov: Covector, space: JetSpace) -> str:
    match cov:
        case DX(i):
            return f"dx^{{{i}}}"
        case DY(sigma, J) | Omega(sigma, J):
            head = "d" + space.field_symbol(sigma)[0] if isinstance(cov, DY) else "\\omega"
            label = space.field_symbol(sigma)[1:]
            sub = "".join(map(str, J))
            if space.metric:
                return f"{head}_{{{label}{',' + sub if sub else ''}}}"
            return f"{head}^{{{label}}}" + (f"_{{{sub}}}" if sub else "")
        case _:
            raise TypeError(f'Unknown covector type: {type(cov)}')


def display_monomial(mono: WedgeMonomial) -> Tuple[WedgeMonomial, int]:
    """Move vertical factors in front of the dx factors, returning the sign of the reordering."""
    horizontal = tuple(c for c in mono if isinstance(c, DX))
    vertical = tuple(c for c in mono if not isinstance(c, DX))
    sign = -1 if (len(horizontal) * len(vertical)) % 2 else 1
    return vertical + horizontal, sign


def _display_terms(rho: Form, basis: str) -> List[Tuple[WedgeMonomial, ScalarExpr]]:
    match basis:
        case "coordinate":
            view = rho
        case "contact":
            view = to_contact_basis(rho)
        case _:
            raise ValueError(f"Invalid basis = {basis}")
    rows = []
    for mono, c in view.terms.items():
        shown, sign = display_monomial(mono)
        rows.append((shown, c if sign > 0 else -c))
    rows.sort(key=lambda row: (len(row[0]) - sum(isinstance(cv, DX) for cv in row[0]), [cv.key for cv in row[0]]))
    return rows


def form_to_text(rho: Form, basis: str = "coordinate") -> str:
    name = symbol_namer(rho.space)
    parts = []
    for mono, c in _display_terms(rho, basis):
        wedge = "^".join(covector_text(cv, rho.space) for cv in mono)
        if not mono:
            parts.append(expr_to_text(c, name))
            continue
        if len(c.terms) > 1:
            parts.append(f"({expr_to_text(c, name)})*{wedge}")
            continue
        coef = expr_to_text(c, name)
        if coef == "1":
            parts.append(wedge)
        elif coef == "-1":
            parts.append("-" + wedge)
        else:
            parts.append(f"{coef}*{wedge}")
    return _join_signed(parts) if parts else "0"


def form_to_latex(rho: Form, basis: str = "contact") -> str:
    parts = []
    for mono, c in _display_terms(rho, basis):
        wedge = " \\wedge ".join(covector_latex(cv, rho.space) for cv in mono)
        coef = expr_to_latex(c, rho.space)
        if not mono:
            parts.append(coef)
        elif coef == "1":
            parts.append(wedge)
        elif coef == "-1":
            parts.append("-" + wedge)
        elif len(c.terms) > 1:
            parts.append(f"\\left({coef}\\right) {wedge}")
        else:
            parts.append(f"{coef} {wedge}")
    return _join_signed(parts) if parts else "0"


def form_to_sexpr(rho: Form) -> str:
    """Storage-basis s-expression: (form degree order (coefficient covector ...) ...)."""
    name = symbol_namer(rho.space)
    items = [f"(form {rho.degree} {rho.order}"]
    for mono, c in sorted(rho.terms.items(), key=lambda item: [cv.key for cv in item[0]]):
        covs = " ".join(covector_text(cv, rho.space) for cv in mono)
        items.append(f"({expr_to_sexpr(c, name)}{' ' + covs if covs else ''})")
    return " ".join(items) + ")"


def emit_expression(e: ScalarExpr, fmt: str = "text", space: Optional[JetSpace] = None) -> str:
    match fmt:
        case "text":
            return expr_to_text(e, symbol_namer(space))
        case "latex":
            return expr_to_latex(e, space)
        case "sexpr":
            return expr_to_sexpr(e, symbol_namer(space))
        case _:
            raise ValueError(f"Invalid format = {fmt}")


def emit_form(rho: Form, fmt: str = "text", basis: str = "contact") -> str:
    match fmt:
        case "text":
            return form_to_text(rho, basis)
        case "latex":
            return form_to_latex(rho, basis)
        case "sexpr":
            return form_to_sexpr(rho)
        case _:
            raise ValueError(f"Invalid format = {fmt}")
