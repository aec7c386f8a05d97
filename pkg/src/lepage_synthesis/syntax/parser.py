"""Problem files, infix expressions and s-expressions.

Problem grammar, one statement per line, `#` starts a comment:

    base <n>
    fiber <m>
    order <r>
    mode generic|metric
    lagrangian <expr>
    nonvanishing <expr> | nonvanishing lagrangian
    transform base <expr>      (n lines, x-bar^1 .. x-bar^n)
    transform fiber <expr>     (m lines, y-bar^1 .. y-bar^m)

Expressions use `+ - * / ^`, `inv(...)`, `sqrt(...)`, rationals `p/q`, atoms
`x<i>`, `y<sigma>[_<digits>]` (`g<a><b>[_<digits>]` in metric mode) and
`xi<sigma>[_<digits>]`. In forms, `dx<i>`, `dy<sigma>[_J]` and `w<sigma>[_J]`
are 1-forms and `^` between forms is the wedge product.
"""
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from lepage_synthesis.errors import LepageError, ParseError, PreconditionError
from lepage_synthesis.syntax.exterior import DX, DY, Form, contact_form, dx, dy, wedge, wedge_monomials
from lepage_synthesis.syntax.jet import BaseCoord, FieldCoord, JetSpace, OpaqueAtom, canonical
from lepage_synthesis.syntax.kernel import (
    Add,
    Const,
    Div,
    Inv,
    Mul,
    Neg,
    Pow,
    ScalarExpr,
    Sqrt,
    Sub,
    Var,
    inverse,
    normalize,
    sqrt,
)

TOKEN_REGEX = re.compile('|'.join(f'(?P<{name}>{pattern})' for name, pattern in [
    ('SPACE', r'[ \t\r]+'),
    ('COMMENT', r'\#[^\n]*'),
    ('COVECTOR', r'dx\d+|d[yg]\d+(?:_\d+)?|w\d+(?:_\d+)?'),
    ('OPAQUE', r'xi\d+(?:_\d+)?'),
    ('ATOM', r'x\d+|[yg]\d+(?:_\d+)?'),
    ('FUNCTION', r'inv|sqrt'),
    ('NUMBER', r'\d+'),
    ('PLUS', r'\+'),
    ('MINUS', r'-'),
    ('TIMES', r'\*'),
    ('DIVIDE', r'/'),
    ('CARET', r'\^'),
    ('LPAREN', r'\('),
    ('RPAREN', r'\)'),
]))


@dataclass(eq=True, frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str, line: int = 1, column: int = 1) -> List[Token]:
    tokens = []
    index = 0
    while index < len(source):
        match = TOKEN_REGEX.match(source, index)
        if match is None:
            raise ParseError(f"unexpected '{source[index]}'", line, column + index)
        if match.lastgroup not in ('SPACE', 'COMMENT'):
            tokens.append(Token(match.lastgroup, match.group(), line, column + index))
        index = match.end()
    tokens.append(Token('END', '', line, column + index))
    return tokens


@dataclass(eq=True, frozen=True)
class Cov:
    name: str


@dataclass(eq=True, frozen=True)
class Wedge:
    left: object
    right: object


def _digits(text: str) -> Tuple[int, ...]:
    return tuple(int(ch) for ch in text)


def decode_atom(name: str, space: Optional[JetSpace]):
    """Atom for an atom token; jet indices are sorted."""
    if m := re.fullmatch(r'x(\d+)', name):
        return BaseCoord(int(m.group(1)))
    if m := re.fullmatch(r'xi(\d+)(?:_(\d+))?', name):
        return OpaqueAtom("xi", (int(m.group(1)),) + canonical(_digits(m.group(2) or "")))
    if m := re.fullmatch(r'([yg])(\d+)(?:_(\d+))?', name):
        return FieldCoord(_field_label(m.group(1), m.group(2), space), canonical(_digits(m.group(3) or "")))
    raise ValueError(f"Invalid atom = {name}")


def _field_label(letter: str, digits: str, space: Optional[JetSpace]) -> int:
    metric = space is not None and space.metric
    match letter:
        case "y" if not metric:
            return int(digits)
        case "g" if metric and len(digits) == 2:
            a, b = _digits(digits)
            space.check_base(a)
            space.check_base(b)
            return space.field_of_pair(a, b)
        case _:
            mode = "metric" if metric else "generic"
            raise ValueError(f"Field symbol {letter}{digits} is not valid in {mode} mode")


def decode_covector(name: str, space: JetSpace) -> Form:
    if m := re.fullmatch(r'dx(\d+)', name):
        return dx(space, int(m.group(1)))
    if m := re.fullmatch(r'd([yg])(\d+)(?:_(\d+))?', name):
        return dy(space, _field_label(m.group(1), m.group(2), space), _digits(m.group(3) or ""))
    if m := re.fullmatch(r'w(\d+)(?:_(\d+))?', name):
        letter = "g" if space.metric else "y"
        return contact_form(space, _field_label(letter, m.group(1), space), _digits(m.group(2) or ""))
    raise ValueError(f"Invalid covector = {name}")


class Parser:
    """Recursive descent over the token list.

    <expr>   -> <term> { (+ | -) <term> }
    <term>   -> <unary> { (* | /) <unary> }
    <unary>  -> - <unary> | <power>
    <power>  -> <primary> { ^ (<number> | <primary>) }
    <primary>-> <number> | <atom> | <covector> | <function> ( <expr> ) | ( <expr> )
    """

    def __init__(self, tokens: List[Token], allow_forms: bool = False):
        self.tokens = tokens
        self.position = 0
        self.allow_forms = allow_forms

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def advance(self) -> Token:
        token = self.current
        self.position += 1
        return token

    def expect(self, kind: str) -> Token:
        if self.current.kind != kind:
            self.error(f"expected {kind.lower()}, found '{self.current.text or 'end of input'}'")
        return self.advance()

    def error(self, message: str, token: Optional[Token] = None):
        token = token or self.current
        raise ParseError(message, token.line, token.column)

    def parse(self):
        tree = self.expr()
        if self.current.kind != 'END':
            self.error(f"unexpected '{self.current.text}'")
        return tree

    def expr(self):
        tree = self.term()
        while self.current.kind in ('PLUS', 'MINUS'):
            op = self.advance()
            right = self.term()
            tree = Add(tree, right) if op.kind == 'PLUS' else Sub(tree, right)
        return tree

    def term(self):
        tree = self.unary()
        while self.current.kind in ('TIMES', 'DIVIDE'):
            op = self.advance()
            right = self.unary()
            tree = Mul(tree, right) if op.kind == 'TIMES' else Div(tree, right)
        return tree

    def unary(self):
        if self.current.kind == 'MINUS':
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        tree = self.primary()
        while self.current.kind == 'CARET':
            self.advance()
            if self.current.kind == 'NUMBER':
                tree = Pow(tree, int(self.advance().text))
            else:
                token = self.current
                right = self.primary()
                if not _contains_form(right):
                    self.error("exponent must be a non-negative integer", token)
                tree = Wedge(tree, right)
        return tree

    def primary(self):
        token = self.current
        match token.kind:
            case 'NUMBER':
                self.advance()
                return Const(int(token.text))
            case 'ATOM' | 'OPAQUE':
                self.advance()
                return token
            case 'COVECTOR':
                if not self.allow_forms:
                    self.error(f"differential form '{token.text}' in a scalar expression")
                self.advance()
                return Cov(token.text)
            case 'FUNCTION':
                self.advance()
                self.expect('LPAREN')
                arg = self.expr()
                self.expect('RPAREN')
                return Inv(arg) if token.text == 'inv' else Sqrt(arg)
            case 'LPAREN':
                self.advance()
                tree = self.expr()
                self.expect('RPAREN')
                return tree
            case _:
                self.error(f"unexpected '{token.text or 'end of input'}'")


def _contains_form(node) -> bool:
    match node:
        case Cov() | Wedge():
            return True
        case Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b):
            return _contains_form(a) or _contains_form(b)
        case Neg(a) | Pow(a, _) | Inv(a) | Sqrt(a):
            return _contains_form(a)
        case _:
            return False


def _first_token(node) -> Optional[Token]:
    match node:
        case Token():
            return node
        case Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Wedge(a, b):
            return _first_token(a) or _first_token(b)
        case Neg(a) | Pow(a, _) | Inv(a) | Sqrt(a):
            return _first_token(a)
        case _:
            return None


def _resolve_atoms(node, space: Optional[JetSpace]):
    """Replace atom tokens by kernel Var nodes."""
    match node:
        case Token(_, text, line, column):
            try:
                return Var(decode_atom(text, space))
            except ValueError as e:
                raise ParseError(str(e), line, column) from e
        case Add(a, b):
            return Add(_resolve_atoms(a, space), _resolve_atoms(b, space))
        case Sub(a, b):
            return Sub(_resolve_atoms(a, space), _resolve_atoms(b, space))
        case Mul(a, b):
            return Mul(_resolve_atoms(a, space), _resolve_atoms(b, space))
        case Div(a, b):
            return Div(_resolve_atoms(a, space), _resolve_atoms(b, space))
        case Wedge(a, b):
            return Wedge(_resolve_atoms(a, space), _resolve_atoms(b, space))
        case Neg(a):
            return Neg(_resolve_atoms(a, space))
        case Pow(a, k):
            return Pow(_resolve_atoms(a, space), k)
        case Inv(a):
            return Inv(_resolve_atoms(a, space))
        case Sqrt(a):
            return Sqrt(_resolve_atoms(a, space))
        case Const() | Cov():
            return node
        case _:
            raise TypeError(f'Unknown parse tree type: {type(node)}')


def _evaluate_form(node, space: JetSpace, declared) -> Form:
    if not _contains_form(node):
        return Form.function(space, normalize(node, space, declared))
    match node:
        case Cov(name):
            return decode_covector(name, space)
        case Wedge(a, b):
            return wedge(_evaluate_form(a, space, declared), _evaluate_form(b, space, declared))
        case Add(a, b):
            return _evaluate_form(a, space, declared) + _evaluate_form(b, space, declared)
        case Sub(a, b):
            return _evaluate_form(a, space, declared) - _evaluate_form(b, space, declared)
        case Neg(a):
            return -_evaluate_form(a, space, declared)
        case Mul(a, b) if not _contains_form(a):
            return _evaluate_form(b, space, declared).scale(normalize(a, space, declared))
        case Mul(a, b) if not _contains_form(b):
            return _evaluate_form(a, space, declared).scale(normalize(b, space, declared))
        case Mul(a, b):
            return wedge(_evaluate_form(a, space, declared), _evaluate_form(b, space, declared))
        case Div(a, b) if not _contains_form(b):
            return _evaluate_form(a, space, declared).scale(inverse(normalize(b, space, declared)))
        case _:
            raise ValueError("Forms can only be added, scaled and wedged")


def _fail_at(e: Exception, token: Optional[Token], line: int, column: int):
    if isinstance(e, ParseError):
        raise e
    if token is not None:
        line, column = token.line, token.column
    raise ParseError(str(e), line, column) from e


def parse_expression(source: str, space: Optional[JetSpace] = None, declared=None,
                     line: int = 1, column: int = 1) -> ScalarExpr:
    tree = Parser(tokenize(source, line, column)).parse()
    resolved = _resolve_atoms(tree, space)
    try:
        return normalize(resolved, space, declared)
    except (LepageError, ValueError) as e:
        _fail_at(e, _first_token(tree), line, column)


def parse_form(source: str, space: JetSpace, declared=None, line: int = 1, column: int = 1) -> Form:
    tree = Parser(tokenize(source, line, column), allow_forms=True).parse()
    resolved = _resolve_atoms(tree, space)
    try:
        return _evaluate_form(resolved, space, declared)
    except (LepageError, ValueError) as e:
        _fail_at(e, _first_token(tree), line, column)


SEXPR_REGEX = re.compile(r'\s*(?:(\()|(\))|([^\s()]+))')


def _read_sexpr(source: str):
    stack: List[list] = [[]]
    index = 0
    while index < len(source):
        match = SEXPR_REGEX.match(source, index)
        if match is None or match.end() == index:
            if source[index:].strip():
                raise ParseError(f"unexpected '{source[index]}'", 1, index + 1)
            break
        opening, closing, symbol = match.groups()
        if opening:
            stack.append([])
        elif closing:
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", 1, match.start(2) + 1)
            done = stack.pop()
            stack[-1].append(done)
        elif symbol:
            stack[-1].append(symbol)
        index = match.end()
    if len(stack) != 1 or len(stack[0]) != 1:
        raise ParseError("expected exactly one s-expression", 1, len(source) + 1)
    return stack[0][0]


def _sexpr_scalar(node, space: Optional[JetSpace]) -> ScalarExpr:
    match node:
        case str() if re.fullmatch(r'-?\d+(?:/\d+)?', node):
            num, _, den = node.partition("/")
            return ScalarExpr.constant(int(num)) / int(den or 1)
        case str():
            return ScalarExpr.from_atom(decode_atom(node, space))
        case ["+", *args]:
            total = ScalarExpr.constant(0)
            for arg in args:
                total = total + _sexpr_scalar(arg, space)
            return total
        case ["*", *args]:
            product = ScalarExpr.constant(1)
            for arg in args:
                product = product * _sexpr_scalar(arg, space)
            return product
        case ["^", base, exponent]:
            return _sexpr_scalar(base, space) ** int(exponent)
        case ["inv", arg]:
            return inverse(_sexpr_scalar(arg, space))
        case ["sqrt", arg]:
            return sqrt(_sexpr_scalar(arg, space))
        case _:
            raise ValueError(f"Invalid s-expression = {node}")


def _sexpr_form(node, space: JetSpace) -> Form:
    match node:
        case ["form", degree, order, *items]:
            terms = {}
            for item in items:
                coef, *names = item
                mono, sign = (), 1
                for name in names:
                    (cov,), = decode_covector(name, space).terms.keys()
                    if not isinstance(cov, (DX, DY)):
                        raise ValueError(f"Invalid storage covector = {name}")
                    mono, s = wedge_monomials(mono, (cov,))
                    if mono is None:
                        raise ValueError(f"Repeated covector in {names}")
                    sign *= s
                value = _sexpr_scalar(coef, space)
                terms[mono] = value if sign > 0 else -value
            return Form(space, int(degree), int(order), terms).validate()
        case _:
            raise ValueError(f"Invalid form s-expression = {node}")


def parse_sexpr(source: str, space: Optional[JetSpace] = None):
    """Read the output of the s-expression printer back into a ScalarExpr or a Form."""
    node = _read_sexpr(source)
    try:
        if isinstance(node, list) and node and node[0] == "form":
            if space is None:
                raise PreconditionError("Reading a form needs a jet space")
            return _sexpr_form(node, space)
        return _sexpr_scalar(node, space)
    except (LepageError, ValueError, TypeError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), 1, 1) from e


@dataclass(frozen=True)
class ProblemFile:
    space: JetSpace
    order: int
    lagrangian: Optional[ScalarExpr] = None
    lagrangian_text: str = ""
    nonvanishing: Tuple[ScalarExpr, ...] = ()
    lagrangian_nonvanishing: bool = False
    base_map: Tuple[ScalarExpr, ...] = ()
    fiber_map: Tuple[ScalarExpr, ...] = ()
    mode: str = "generic"

    @property
    def has_transform(self) -> bool:
        return bool(self.base_map)


KEYWORDS = ("base", "fiber", "order", "lagrangian", "nonvanishing", "transform", "mode")


def _statements(source: str) -> List[Tuple[int, str, str, int]]:
    statements = []
    for number, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        stripped = text.lstrip()
        if not stripped:
            continue
        keyword, _, rest = stripped.partition(" ")
        if keyword not in KEYWORDS:
            raise ParseError(f"unknown statement '{keyword}'", number, len(text) - len(stripped) + 1)
        offset = len(text) - len(rest.lstrip()) + 1
        statements.append((number, keyword, rest.strip(), offset))
    return statements


def _integer(value: str, line: int, column: int, name: str) -> int:
    if not re.fullmatch(r'\d+', value):
        raise ParseError(f"{name} expects a non-negative integer, found '{value}'", line, column)
    return int(value)


def parse_problem(source: str, order_cap: Optional[int] = None) -> ProblemFile:
    statements = _statements(source)
    header = {}
    for line, keyword, rest, column in statements:
        if keyword in ("base", "fiber", "order"):
            header[keyword] = _integer(rest, line, column, keyword)
        elif keyword == "mode":
            if rest not in ("generic", "metric"):
                raise ParseError(f"mode must be generic or metric, found '{rest}'", line, column)
            header["mode"] = rest
    mode = header.get("mode", "generic")
    for required in ("base", "order") if mode == "metric" else ("base", "fiber", "order"):
        if required not in header:
            raise ParseError(f"missing '{required}' statement", 1, 1)
    n, r = header["base"], header["order"]
    m = n * (n + 1) // 2 if mode == "metric" else header["fiber"]
    if mode == "metric" and header.get("fiber", m) != m:
        raise ParseError(f"metric mode over base {n} has fiber {m}, found {header['fiber']}", 1, 1)
    if r < 1:
        raise ParseError("order must be at least 1", 1, 1)
    cap = order_cap if order_cap is not None else (4 if mode == "metric" else max(2 * r, 1))
    try:
        space = JetSpace(n, m, cap, mode == "metric")
    except LepageError as e:
        raise ParseError(str(e), 1, 1) from e

    declared: List[ScalarExpr] = []
    lagrangian_flag = False
    for line, keyword, rest, column in statements:
        if keyword == "nonvanishing":
            if rest == "lagrangian":
                lagrangian_flag = True
            else:
                declared.append(parse_expression(rest, space, declared, line, column))

    lagrangian, lagrangian_text = None, ""
    base_map: List[ScalarExpr] = []
    fiber_map: List[ScalarExpr] = []
    for line, keyword, rest, column in statements:
        match keyword:
            case "lagrangian":
                if lagrangian is not None:
                    raise ParseError("duplicate lagrangian", line, column)
                lagrangian_text = rest
                lagrangian = parse_expression(rest, space, declared, line, column)
                if lagrangian.jet_order > r:
                    raise ParseError(f"lagrangian has jet order {lagrangian.jet_order} above declared order {r}", line, column)
                if lagrangian.has_opaque:
                    raise ParseError("lagrangian must not contain opaque atoms", line, column)
            case "transform":
                kind, _, expr_text = rest.partition(" ")
                inner = column + len(kind) + 1
                value = parse_expression(expr_text, space, declared, line, inner)
                match kind:
                    case "base":
                        if any(not isinstance(a, BaseCoord) for a in value.coordinates) or value.has_opaque:
                            raise ParseError("base map may only depend on base coordinates", line, inner)
                        base_map.append(value)
                    case "fiber":
                        if value.jet_order > 0 or value.has_opaque:
                            raise ParseError("fiber map may only depend on x and y", line, inner)
                        fiber_map.append(value)
                    case _:
                        raise ParseError(f"transform expects base or fiber, found '{kind}'", line, column)
    if lagrangian_flag:
        if lagrangian is None:
            raise ParseError("'nonvanishing lagrangian' without a lagrangian", 1, 1)
        declared.append(lagrangian)
    if (base_map or fiber_map) and (len(base_map) != n or len(fiber_map) != m):
        raise ParseError(f"transform needs {n} base and {m} fiber lines, found {len(base_map)} and {len(fiber_map)}", 1, 1)
    return ProblemFile(
        space=space,
        order=r,
        lagrangian=lagrangian,
        lagrangian_text=lagrangian_text,
        nonvanishing=tuple(declared),
        lagrangian_nonvanishing=lagrangian_flag,
        base_map=tuple(base_map),
        fiber_map=tuple(fiber_map),
        mode=mode,
    )
