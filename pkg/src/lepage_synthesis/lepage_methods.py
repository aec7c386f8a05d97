import logging
import multiprocessing
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Tuple

from lepage_synthesis.errors import LepageError, ParseError, PreconditionError
from lepage_synthesis.syntax.parser import ProblemFile, parse_problem
from lepage_synthesis.syntax.printing import emit_expression, emit_form
from lepage_synthesis.synthesis.charts import (
    ChartTransform,
    check_caratheodory_invariance,
    check_theta_invariance,
    nonlinear_test_transform,
    obstruction_3rd,
)
from lepage_synthesis.synthesis.lepage import (
    Lagrangian,
    caratheodory_closed,
    caratheodory_contraction,
    check_lepage,
    euler_lagrange,
    fundamental_form,
    principal_component,
)
from lepage_synthesis.synthesis.relativity import einstein_el, hilbert_caratheodory, hilbert_theta

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3

COMMANDS = (
    "theta",
    "fundamental",
    "caratheodory",
    "caratheodory-closed",
    "euler-lagrange",
    "check-lepage",
    "check-invariance",
    "obstruction",
    "hilbert-theta",
    "hilbert-caratheodory",
    "einstein",
)

CHECKED_FORMS = ("theta", "caratheodory", "caratheodory-closed", "fundamental", "lagrangian")


@dataclass(frozen=True)
class CommandOptions:
    fmt: str = "text"
    basis: str = "contact"
    form: str = "theta"
    signature: str = "riemannian"


@dataclass(frozen=True)
class OutputDocument:
    command: str
    payload: str
    exit_code: int
    fmt: str = "text"
    basis: str = "contact"

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


def worker(func, args, return_dict):
    try:
        result = func(*args)
        return_dict['result'] = result
    except Exception as e:
        return_dict['error'] = str(e)


def run_with_timeout(func, args, timeout):
    manager = multiprocessing.Manager()
    return_dict = manager.dict()

    process = multiprocessing.Process(target=worker, args=(func, args, return_dict))
    process.start()
    process.join(timeout)

    if process.is_alive():
        process.terminate()
        process.join()
        logging.warning(f"Function execution of {getattr(func, '__name__', func)} timed out after {timeout} seconds.")
        return None

    if 'error' in return_dict:
        logging.error(f"Error in {getattr(func, '__name__', func)}: {return_dict['error']}")
        return None

    return return_dict.get('result', None)


def problem_lagrangian(problem: ProblemFile) -> Lagrangian:
    if problem.lagrangian is None:
        raise PreconditionError("Problem has no lagrangian statement")
    return Lagrangian(problem.space, problem.order, problem.lagrangian, problem.lagrangian_nonvanishing)


def problem_transform(problem: ProblemFile) -> ChartTransform:
    if problem.has_transform:
        return ChartTransform(problem.space, problem.base_map, problem.fiber_map)
    return nonlinear_test_transform(problem.space)


def _verdict(holds: bool) -> Tuple[str, int]:
    return ("holds", EXIT_OK) if holds else ("fails", EXIT_FAILED)


def checked_form(lagrangian: Lagrangian, form: str):
    match form:
        case "theta":
            return principal_component(lagrangian)
        case "caratheodory":
            return caratheodory_contraction(lagrangian)
        case "caratheodory-closed":
            return caratheodory_closed(lagrangian)
        case "fundamental":
            return fundamental_form(lagrangian)
        case "lagrangian":
            return lagrangian.form()
        case _:
            raise ValueError(f"Invalid form = {form}")


def _emit(rho, options: CommandOptions) -> Tuple[str, int]:
    return emit_form(rho, options.fmt, options.basis), EXIT_OK


def check_lepage_command(problem: ProblemFile, options: CommandOptions) -> Tuple[str, int]:
    lagrangian = problem_lagrangian(problem)
    report = check_lepage(checked_form(lagrangian, options.form), lagrangian)
    verdict, code = _verdict(report.ok)
    lines = [verdict, f"equivalent: {report.equivalent_ok}", f"lepage: {report.lepage_ok}"]
    if not report.lepage_ok:
        lines.append(f"residual: {emit_form(report.residual, options.fmt, options.basis)}")
    return "\n".join(lines), code


def check_invariance_command(problem: ProblemFile, options: CommandOptions) -> Tuple[str, int]:
    lagrangian = problem_lagrangian(problem)
    transform = problem_transform(problem)
    theta_ok = check_theta_invariance(lagrangian, transform)
    lines = [f"theta: {theta_ok}"]
    holds = theta_ok
    if lagrangian.nonvanishing:
        caratheodory_ok = check_caratheodory_invariance(lagrangian, transform)
        lines.append(f"caratheodory: {caratheodory_ok}")
        holds = holds and caratheodory_ok
    verdict, code = _verdict(holds)
    return "\n".join([verdict] + lines), code


def obstruction_command(problem: ProblemFile, options: CommandOptions) -> Tuple[str, int]:
    lagrangian = problem_lagrangian(problem)
    residuals, holds = obstruction_3rd(lagrangian, problem_transform(problem))
    verdict, code = _verdict(holds)
    lines = [verdict]
    labels = [(sigma, s) for sigma in range(1, problem.space.m + 1) for s in range(1, problem.space.n + 1)]
    for (sigma, s), e in zip(labels, residuals):
        lines.append(f"residual[{sigma},{s}] = {emit_expression(e, options.fmt, problem.space)}")
    return "\n".join(lines), code


def get_command(cmd: str) -> Callable[[ProblemFile, CommandOptions], Tuple[str, int]]:
    match cmd:
        case "theta":
            return lambda problem, options: _emit(principal_component(problem_lagrangian(problem)), options)
        case "fundamental":
            return lambda problem, options: _emit(fundamental_form(problem_lagrangian(problem)), options)
        case "caratheodory":
            return lambda problem, options: _emit(caratheodory_contraction(problem_lagrangian(problem)), options)
        case "caratheodory-closed":
            return lambda problem, options: _emit(caratheodory_closed(problem_lagrangian(problem)), options)
        case "euler-lagrange":
            return lambda problem, options: _emit(euler_lagrange(problem_lagrangian(problem)), options)
        case "check-lepage":
            return check_lepage_command
        case "check-invariance":
            return check_invariance_command
        case "obstruction":
            return obstruction_command
        case "hilbert-theta":
            return lambda problem, options: _emit(hilbert_theta(problem.space.n, options.signature), options)
        case "hilbert-caratheodory":
            return lambda problem, options: _emit(hilbert_caratheodory(problem.space.n, options.signature), options)
        case "einstein":
            return lambda problem, options: _emit(einstein_el(problem.space.n, options.signature), options)
        case _:
            raise ValueError(f"Invalid command = {cmd}")


def run_command(cmd: str, problem: ProblemFile, options: Optional[CommandOptions] = None) -> OutputDocument:
    options = options or CommandOptions()
    command = get_command(cmd)
    try:
        payload, code = command(problem, options)
    except ParseError as e:
        logging.error(f"Parse error in {cmd}: {e}")
        payload, code = f"error: {e}", EXIT_PARSE
    except LepageError as e:
        logging.error(f"Precondition failed in {cmd}: {e}")
        payload, code = f"error: {e}", EXIT_PRECONDITION
    return OutputDocument(cmd, payload, code, options.fmt, options.basis)


def run_source(cmd: str, source: str, options: Optional[CommandOptions] = None,
               order_cap: Optional[int] = None) -> OutputDocument:
    """Parse a problem file and run one command on it."""
    options = options or CommandOptions()
    try:
        problem = parse_problem(source, order_cap)
    except ParseError as e:
        logging.error(f"Parse error: {e}")
        return OutputDocument(cmd, f"error: {e}", EXIT_PARSE, options.fmt, options.basis)
    return run_command(cmd, problem, options)


def run_source_with_timeout(cmd: str, source: str, options: CommandOptions, order_cap: Optional[int],
                            timeout: Optional[float]) -> Optional[OutputDocument]:
    if timeout is None:
        return run_source(cmd, source, options, order_cap)
    return run_with_timeout(partial(run_source, cmd), (source, options, order_cap), timeout)
