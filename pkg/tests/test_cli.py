import csv
import sys

import pytest

import compute
import solve
from lepage_synthesis.lepage_methods import (
    EXIT_FAILED,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_PRECONDITION,
    CommandOptions,
    get_command,
    run_source,
    run_source_with_timeout,
    run_with_timeout,
)
from lepage_synthesis.suites import build_case, default_cases, describe_case, run_suite

LINEAR = """\
base 2
fiber 1
order 1
lagrangian y1_1
"""

HARMONIC = """\
base 2
fiber 1
order 1
lagrangian (1/2)*(y1_1^2 + y1_2^2)
"""


def _square(v):
    return v * v


def _fail(v):
    raise RuntimeError(f"no value for {v}")


def test_theta_command():
    document = run_source("theta", LINEAR)
    assert document.ok
    assert document.payload == "y1_1*dx1^dx2 + w1^dx2"
    coordinate = run_source("theta", LINEAR, CommandOptions(basis="coordinate"))
    assert coordinate.payload == "dy1^dx2"


def test_check_lepage_command():
    document = run_source("check-lepage", HARMONIC)
    assert document.exit_code == EXIT_OK
    assert document.payload.splitlines() == ["holds", "equivalent: True", "lepage: True"]
    failing = run_source("check-lepage", HARMONIC, CommandOptions(form="lagrangian"))
    assert failing.exit_code == EXIT_FAILED
    assert failing.payload.splitlines()[0] == "fails"
    assert failing.payload.splitlines()[3].startswith("residual: ")


def test_check_invariance_command():
    document = run_source("check-invariance", HARMONIC)
    assert document.exit_code == EXIT_OK
    assert document.payload.splitlines() == ["holds", "theta: True"]


def test_precondition_and_parse_exit_codes():
    assert run_source("caratheodory-closed", HARMONIC).exit_code == EXIT_PRECONDITION
    assert run_source("theta", "base 2\nfiber 1\norder 1\n").exit_code == EXIT_PRECONDITION
    document = run_source("theta", "base 2\nfiber 1\norder 1\nlagrangian y1_3\n")
    assert document.exit_code == EXIT_PARSE
    assert document.payload.startswith("error: ")


def test_obstruction_command():
    holds = run_source("obstruction", "base 2\nfiber 1\norder 3\nlagrangian y1*y1_12\n")
    assert holds.exit_code == EXIT_OK
    assert holds.payload.splitlines()[0] == "holds"
    fails = run_source("obstruction", "base 2\nfiber 1\norder 3\nlagrangian y1*y1_111\n")
    assert fails.exit_code == EXIT_FAILED
    assert "residual[1,2] = y1_1" in fails.payload.splitlines()
    assert run_source("obstruction", HARMONIC).exit_code == EXIT_PRECONDITION


def test_unknown_command():
    with pytest.raises(ValueError):
        get_command("lagrange")


def test_run_with_timeout():
    assert run_with_timeout(_square, (3,), 30) == 9
    assert run_with_timeout(_fail, (3,), 30) is None
    document = run_source_with_timeout("theta", LINEAR, CommandOptions(), None, None)
    assert document.payload == "y1_1*dx1^dx2 + w1^dx2"


def test_solve_main(tmp_path, monkeypatch, capsys):
    problem = tmp_path / "linear.lep"
    problem.write_text(LINEAR)
    monkeypatch.setattr(sys, "argv", ["solve.py", str(problem), "--basis", "coordinate"])
    assert solve.main() == EXIT_OK
    assert capsys.readouterr().out.strip() == "dy1^dx2"


def test_solve_main_reports_precondition(tmp_path, monkeypatch, capsys):
    problem = tmp_path / "harmonic.lep"
    problem.write_text(HARMONIC)
    monkeypatch.setattr(sys, "argv", ["solve.py", str(problem), "--command", "caratheodory"])
    assert solve.main() == EXIT_PRECONDITION
    assert capsys.readouterr().out.startswith("error: ")


def test_suites_are_deterministic():
    assert describe_case("lepage", 3, seed=7) == describe_case("lepage", 3, seed=7)
    lagrangian, check = build_case("fundamental", 0)
    assert lagrangian.space.m == 2
    assert check()


def test_run_suite():
    results = run_suite("fundamental")
    assert [result.status for result in results] == ["pass", "pass", "pass"]
    assert results[0].as_row()['lagrangian'] == "y1_1*y2_2"


def test_csv_rows(tmp_path):
    output = tmp_path / "suites.csv"
    rows = [describe_case("fundamental", index) for index in range(2)]
    for row in rows:
        row.update({'status': '', 'seconds': ''})
    compute.initialize_csv(str(output), rows)
    compute.update_csv_line(str(output), "fundamental", 1, {'status': 'pass', 'seconds': 0.5})
    with open(output, newline='') as csvfile:
        written = list(csv.DictReader(csvfile))
    assert [row['status'] for row in written] == ['', 'pass']
    assert written[1]['seconds'] == '0.5'
    assert written[0]['lagrangian'] == "y1_1*y2_2"


def test_calculus_suite_covers_each_property_fifty_times():
    assert default_cases("calculus") >= 5 * 50
    results = run_suite("calculus", cases=5)
    assert [result.status for result in results] == ["pass"] * 5
