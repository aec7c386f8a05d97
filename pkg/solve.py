import argparse
import logging
import sys

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

from lepage_synthesis.lepage_methods import (
    CHECKED_FORMS,
    COMMANDS,
    EXIT_FAILED,
    CommandOptions,
    run_source_with_timeout,
)
from lepage_synthesis.suites import SUITES, run_suite
from lepage_synthesis.syntax.printing import BASES, FORMATS
from lepage_synthesis.synthesis.relativity import SIGNATURES


def read_problem(path: str) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, 'r') as problem_file:
        return problem_file.read()


def solve_suite(name: str, cases, seed: int, timeout) -> int:
    results = run_suite(name, cases, seed, timeout)
    for result in results:
        print(f"{result.suite} {result.case_index}: {result.status} ({result.seconds:.2f}s) {result.lagrangian}")
    passed = sum(result.status == "pass" for result in results)
    print(f"{name}: {passed}/{len(results)} passed")
    return 0 if passed == len(results) else EXIT_FAILED


def main() -> int:
    parser = argparse.ArgumentParser(description='Compute Lepage equivalents of a Lagrangian given in a problem file.')
    parser.add_argument('problem', nargs='?', default=None, help="Problem file path; omitted or '-' reads standard input")
    parser.add_argument('--command', type=str, default="theta", choices=COMMANDS, help='Library operation to run on the problem')
    parser.add_argument('--format', type=str, default="text", choices=FORMATS, help='Output format')
    parser.add_argument('--basis', type=str, default="contact", choices=BASES, help='Print forms in the contact or the coordinate basis')
    parser.add_argument('--order-cap', type=int, default=None, help='Highest jet order the problem may reach (default max(2r, 1), or 4 in metric mode)')
    parser.add_argument('--form', type=str, default="theta", choices=CHECKED_FORMS, help='Which Lepage equivalent check-lepage checks')
    parser.add_argument('--signature', type=str, default="riemannian", choices=SIGNATURES, help='Metric signature for the hilbert and einstein commands')
    parser.add_argument('--suite', type=str, default=None, choices=SUITES, help='Run a named acceptance suite instead of a problem')
    parser.add_argument('--cases', type=int, default=None, help='Number of cases for --suite (default depends on the suite)')
    parser.add_argument('--seed', type=int, default=0, help='Seed for randomized suite cases')
    parser.add_argument('--timeout', type=float, default=None, help='Wall-clock timeout in seconds')
    parser.add_argument('--verbose', action='store_true', help='Log construction steps')

    args = parser.parse_args()
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.suite is not None:
        return solve_suite(args.suite, args.cases, args.seed, args.timeout)

    options = CommandOptions(fmt=args.format, basis=args.basis, form=args.form, signature=args.signature)
    document = run_source_with_timeout(args.command, read_problem(args.problem), options, args.order_cap, args.timeout)
    if document is None:
        print(f"{args.command} did not finish")
        return EXIT_FAILED
    print(document.payload)
    return document.exit_code


if __name__ == '__main__':
    sys.exit(main())
